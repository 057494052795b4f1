/**
 * DOM wiring. All logic lives in the pure modules (state, geometry,
 * flower, scenarios, validation); this file moves values between the
 * document and those modules.
 */

import { ApiClient, ApiError, resolveBaseUrl } from './api.js';
import { anglesSumToCircle } from './geometry.js';
import { renderFlower } from './flower.js';
import { scenarioByKind, scenarioCards } from './scenarios.js';
import {
  applyExplain,
  applyFailure,
  applyWhatIf,
  beginRequest,
  debounce,
  initialState,
  isCurrent,
  pushHistory,
  riskLabel,
  score2Label,
  selectScenario,
  setFieldErrors,
  toggleNumbers,
  type SessionState,
} from './state.js';
import type { FactorId, PatientForm } from './types.js';
import { isValid, validatePatient } from './validation.js';

const FIELD_IDS = ['age', 'sbp', 'total_chol', 'hdl_chol'] as const;

let state: SessionState = initialState();
const api = new ApiClient(resolveBaseUrl(window.location, (window as any).PETALRISK_API));

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function readForm(): PatientForm {
  return {
    sex: (document.querySelector('input[name="sex"]:checked') as HTMLInputElement).value as
      | 'male'
      | 'female',
    age: Number(byId<HTMLInputElement>('age').value),
    smoking: byId<HTMLInputElement>('smoking').checked,
    sbp: Number(byId<HTMLInputElement>('sbp').value),
    total_chol: Number(byId<HTMLInputElement>('total_chol').value),
    hdl_chol: Number(byId<HTMLInputElement>('hdl_chol').value),
  };
}

function render(): void {
  const flowerHost = byId<HTMLDivElement>('flower');
  const riskEl = byId<HTMLDivElement>('risk-banner');
  const errorEl = byId<HTMLDivElement>('error-banner');
  const scenariosEl = byId<HTMLDivElement>('scenarios');
  const historyEl = byId<HTMLUListElement>('history');

  for (const field of [...FIELD_IDS, 'non_hdl']) {
    const slot = document.getElementById(`${field}-error`);
    if (slot) slot.textContent = state.fieldErrors[field] ?? '';
  }
  errorEl.textContent =
    state.lastError && !state.lastError.field ? state.lastError.message : '';

  if (state.explain && state.patient) {
    if (!anglesSumToCircle(state.explain.flower)) {
      errorEl.textContent = 'geometry payload is inconsistent';
      return;
    }
    const overlayEntry =
      state.whatif && state.selectedScenario
        ? scenarioByKind(state.whatif, state.selectedScenario)
        : null;
    flowerHost.innerHTML = renderFlower(state.explain.flower, {
      colorClass: state.explain.color_class,
      overlay: overlayEntry ? overlayEntry.flower_after : null,
      contributions: state.showNumbers ? state.explain.contributions : null,
      patient: state.patient,
    });
    // displayed strings come verbatim from the service
    riskEl.textContent = `10-year CVD risk: ${riskLabel(state)} (SCORE2 ${score2Label(state)})`;
    riskEl.className = `risk ${state.explain.color_class}`;
  }

  if (state.whatif) {
    const cards = scenarioCards(state.whatif);
    if (cards.length === 0) {
      scenariosEl.innerHTML = '<p class="muted">No modifiable treatment goals met.</p>';
    } else {
      scenariosEl.innerHTML = cards
        .map(
          (card) => `
            <button class="scenario${state.selectedScenario === card.kind ? ' selected' : ''}"
                    data-kind="${card.kind}">
              <span class="desc">${card.description}</span>
              <span class="delta">${card.beforeDisplay} → ${card.afterDisplay}</span>
            </button>`,
        )
        .join('');
    }
  } else {
    scenariosEl.innerHTML = '';
  }

  historyEl.innerHTML = state.history
    .map((entry) => `<li>${entry.factor}: ${entry.value} → ${entry.riskDisplay}</li>`)
    .join('');
}

async function requestExplain(form: PatientForm, historyNote?: { factor: FactorId | 'form'; value: string }): Promise<void> {
  const errors = validatePatient(form);
  if (!isValid(errors)) {
    state = setFieldErrors(state, errors as Record<string, string>);
    render();
    return; // no request leaves the last valid flower intact
  }
  const begun = beginRequest(state);
  state = begun.state;
  const seq = begun.seq;
  try {
    const response = await api.explain(form);
    if (!isCurrent(state, seq)) return; // superseded while in flight
    state = applyExplain(state, seq, form, response);
    if (historyNote) {
      state = pushHistory(state, { ...historyNote, riskDisplay: response.display.risk_surrogate });
    }
    render();
    await requestWhatIf(form, seq);
  } catch (error) {
    state = applyFailure(state, seq, toFailure(error));
    render();
  }
}

async function requestWhatIf(form: PatientForm, seq: number): Promise<void> {
  try {
    const response = await api.whatif(form);
    state = applyWhatIf(state, seq, response);
    render();
  } catch (error) {
    state = applyFailure(state, seq, toFailure(error));
    render();
  }
}

function toFailure(error: unknown) {
  if (error instanceof ApiError) {
    return { status: error.status, code: error.code, field: error.field, message: error.message };
  }
  return { status: 0, code: 'network', message: 'service unreachable' };
}

const debouncedSlider = debounce((factor: FactorId | 'form', value: string) => {
  void requestExplain(readForm(), { factor, value });
}, 150);

function wire(): void {
  byId<HTMLFormElement>('patient-form').addEventListener('submit', (event) => {
    event.preventDefault();
    void requestExplain(readForm());
  });

  // sliders mirror the numeric inputs and re-request with debounce
  for (const field of ['age', 'sbp'] as const) {
    const slider = byId<HTMLInputElement>(`${field}-slider`);
    const input = byId<HTMLInputElement>(field);
    slider.addEventListener('input', () => {
      input.value = slider.value;
      debouncedSlider.call(field, slider.value);
    });
    input.addEventListener('change', () => {
      slider.value = input.value;
      debouncedSlider.call(field, input.value);
    });
  }

  byId<HTMLInputElement>('smoking').addEventListener('change', () => {
    if (state.explain) debouncedSlider.call('smoking', byId<HTMLInputElement>('smoking').checked ? 'yes' : 'no');
  });
  for (const sexInput of document.querySelectorAll('input[name="sex"]')) {
    sexInput.addEventListener('change', () => {
      // the other sex uses a different model and lobe total; re-request
      if (state.explain) void requestExplain(readForm());
    });
  }

  byId<HTMLInputElement>('show-numbers').addEventListener('change', () => {
    state = toggleNumbers(state); // client-local option, no re-request
    render();
  });

  byId<HTMLDivElement>('scenarios').addEventListener('click', (event) => {
    const button = (event.target as HTMLElement).closest('button.scenario');
    if (!button) return;
    const kind = button.getAttribute('data-kind');
    state = selectScenario(state, state.selectedScenario === kind ? null : kind);
    render();
  });
}

wire();
void api.health().then((ok) => {
  if (!ok) {
    byId<HTMLDivElement>('error-banner').textContent =
      'risk service unreachable; start it with: petalrisk serve';
  }
});
