"""Area-proportional petal geometry for flower charts.

A petal of angle ``beta`` and length ``a`` is bounded by the polar curve

    r(theta) = kappa * a + (1 - kappa) * a * sin(pi * theta / beta)

for theta in [0, beta]; ``kappa`` blends a pure sine-lobe petal (kappa -> 0)
into a circular sector (kappa -> 1). Its area is ``beta * a**2 * K(kappa)``
with the closed-form constant :func:`area_constant`, so petal area is exactly
proportional to ``angle * length**2``.

A flower encodes a dot product ``b . z``: each term gets a petal whose angle
is proportional to ``b_i`` (via largest-remainder integer lobe counts, so
angles are countable multiples of a common lobe angle) and whose length is
``sqrt(z_i)``, which makes every petal's area proportional to ``b_i * z_i``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PetalSpec:
    kappa: float
    beta: float
    length_a: float

    def __post_init__(self):
        if not 0.0 < self.kappa < 1.0:
            raise ValueError(f"kappa={self.kappa:g} outside (0, 1)")
        if not 0.0 < self.beta <= TWO_PI:
            raise ValueError(f"beta={self.beta:g} outside (0, 2*pi]")
        if self.length_a < 0.0:
            raise ValueError(f"length must be non-negative, got {self.length_a:g}")


def petal_boundary_radius(spec: PetalSpec, theta: float) -> float:
    """Boundary radius at local angle theta in [0, beta]; seams land on kappa*a exactly."""
    if not 0.0 <= theta <= spec.beta:
        raise ValueError(f"theta={theta:g} outside [0, {spec.beta:g}]")
    if theta == 0.0 or theta == spec.beta:
        return spec.kappa * spec.length_a
    return spec.kappa * spec.length_a + (1.0 - spec.kappa) * spec.length_a * math.sin(
        math.pi * theta / spec.beta
    )


def area_constant(kappa: float) -> float:
    """Closed-form K with area = beta * a**2 * K.

    K(0) = 1/4 (sine lobe) and K(1) = 1/2 (circular sector); accepts the
    closed interval so those limits are usable directly.
    """
    if not 0.0 <= kappa <= 1.0:
        raise ValueError(f"kappa={kappa:g} outside [0, 1]")
    return (-8.0 * kappa**2 + 8.0 * kappa + math.pi * (3.0 * kappa**2 - 2.0 * kappa + 1.0)) / (
        4.0 * math.pi
    )


def petal_area(spec: PetalSpec) -> float:
    return spec.beta * spec.length_a**2 * area_constant(spec.kappa)


# ---------------------------------------------------------------------------
# Integer lobe apportionment (largest remainder)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LobeAllocation:
    total: int
    etas: tuple[int, ...]

    def __post_init__(self):
        if self.total <= 0:
            raise ValueError("total lobe count must be positive")
        if any(e < 0 for e in self.etas):
            raise ValueError("lobe counts must be non-negative")
        if sum(self.etas) != self.total:
            raise ValueError(f"lobe counts {self.etas} do not sum to {self.total}")


def hamilton_apportion(b: Sequence[float], total: int) -> LobeAllocation:
    """Largest-remainder split of ``total`` lobes proportional to ``b``.

    Quotas are q_i = total * b_i / sum(b); every weight gets floor(q_i)
    lobes and the leftover lobes go to the largest fractional remainders,
    ties resolved toward the lower index. The result stays within one lobe
    of every exact quota and minimizes the total absolute angle deviation
    among integer allocations of the same size.
    """
    if total <= 0:
        raise ValueError("total lobe count must be positive")
    if any(v < 0 for v in b):
        raise ValueError("weights must be non-negative")
    norm = sum(b)
    if norm <= 0.0:
        raise ValueError("weights must not be all zero")
    quotas = [total * v / norm for v in b]
    etas = [math.floor(q) for q in quotas]
    leftover = total - sum(etas)
    by_remainder = sorted(range(len(b)), key=lambda i: (-(quotas[i] - etas[i]), i))
    for i in by_remainder[:leftover]:
        etas[i] += 1
    return LobeAllocation(total=total, etas=tuple(etas))


def hamilton_apportion_nonzero(b: Sequence[float], total: int) -> LobeAllocation:
    """Apportion with the total raised until every positive weight gets a lobe."""
    if any(v <= 0 for v in b):
        raise ValueError("auto-raise mode needs strictly positive weights")
    n = total
    while True:
        allocation = hamilton_apportion(b, n)
        if all(e >= 1 for e in allocation.etas):
            return allocation
        n += 1


def quantized_coefficients(b: Sequence[float], allocation: LobeAllocation) -> tuple[float, ...]:
    """Coefficients the flower actually encodes: ||b||_1 * eta_i / total."""
    if len(b) != len(allocation.etas):
        raise ValueError("weights and allocation sizes differ")
    norm = sum(b)
    return tuple(norm * eta / allocation.total for eta in allocation.etas)


# ---------------------------------------------------------------------------
# Multilobe petals and flower layout
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MultilobePetalSpec:
    total: int
    kappa: float
    eta: int
    length_a: float

    def __post_init__(self):
        if self.total <= 0:
            raise ValueError("total lobe count must be positive")
        if not 0 <= self.eta <= self.total:
            raise ValueError(f"eta={self.eta} outside [0, {self.total}]")
        if not 0.0 < self.kappa < 1.0:
            raise ValueError(f"kappa={self.kappa:g} outside (0, 1)")
        if self.length_a < 0.0:
            raise ValueError("length must be non-negative")

    @property
    def lobe_angle(self) -> float:
        return TWO_PI / self.total

    @property
    def gamma(self) -> float:
        return self.eta * self.lobe_angle


def multilobe_area(spec: MultilobePetalSpec) -> float:
    """Area of eta stitched lobes: a**2 * gamma * K, same as one petal of angle gamma."""
    return spec.length_a**2 * spec.gamma * area_constant(spec.kappa)


@dataclass(frozen=True)
class PetalPlacement:
    factor_id: str
    eta: int
    gamma: float
    start_angle: float
    length: float


@dataclass(frozen=True)
class FlowerLayout:
    """Renderer-independent flower geometry.

    Angles are radians measured clockwise from 12 o'clock; a placement at
    angle phi and radius r sits at (r*sin(phi), r*cos(phi)) in y-up
    coordinates. Petals tile [start_offset, start_offset + 2*pi).
    """
    total_lobes: int
    kappa: float
    start_offset: float
    petals: tuple[PetalPlacement, ...]

    def __post_init__(self):
        if abs(sum(p.gamma for p in self.petals) - TWO_PI) > 1e-12:
            raise ValueError("petal angles must sum to a full circle")
        for prev, cur in zip(self.petals, self.petals[1:]):
            if cur.start_angle < prev.start_angle - 1e-12:
                raise ValueError("petal start angles must be non-decreasing")

    def petal(self, factor_id: str) -> PetalPlacement:
        for p in self.petals:
            if p.factor_id == factor_id:
                return p
        raise KeyError(factor_id)

    def to_dict(self, samples_per_lobe: int | None = None) -> dict:
        payload = {
            "total_lobes": self.total_lobes,
            "kappa": self.kappa,
            "start_offset": self.start_offset,
            "petals": [
                {
                    "factor_id": p.factor_id,
                    "eta": p.eta,
                    "gamma": p.gamma,
                    "start_angle": p.start_angle,
                    "length": p.length,
                }
                for p in self.petals
            ],
        }
        if samples_per_lobe is not None:
            for entry, petal in zip(payload["petals"], self.petals):
                entry["outline"] = [
                    [x, y] for x, y in sample_outline(petal, self.kappa, samples_per_lobe)
                ]
        return payload


def build_flower(
    b: Sequence[float],
    z: Sequence[float],
    total: int,
    kappa: float,
    ordering: Sequence[str],
    start_offset: float = 0.0,
) -> FlowerLayout:
    """Lay out one flower for the dot product b . z.

    Lobe counts come from :func:`hamilton_apportion`, petal lengths are
    sqrt(z_i), and petals are placed consecutively from ``start_offset`` in
    the given factor order.
    """
    if len(b) != len(z) or len(b) != len(ordering):
        raise ValueError("b, z and ordering must have equal lengths")
    if any(v < 0 for v in b):
        raise ValueError("weights must be non-negative")
    for name, value in zip(ordering, z):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"z[{name}]={value:g} outside [0, 1]")
    allocation = hamilton_apportion(b, total)
    lobe_angle = TWO_PI / total
    petals = []
    angle = start_offset
    for name, eta, value in zip(ordering, allocation.etas, z):
        gamma = eta * lobe_angle
        petals.append(
            PetalPlacement(
                factor_id=name,
                eta=eta,
                gamma=gamma,
                start_angle=angle,
                length=math.sqrt(value),
            )
        )
        angle += gamma
    return FlowerLayout(
        total_lobes=total, kappa=kappa, start_offset=start_offset, petals=tuple(petals)
    )


def _lobe_radius(kappa: float, length: float, t: float) -> float:
    # t in [0, 1] across one lobe; endpoints pinned so adjacent lobes share seams
    if t <= 0.0 or t >= 1.0:
        return kappa * length
    return kappa * length + (1.0 - kappa) * length * math.sin(math.pi * t)


def _place(radius: float, angle: float) -> tuple[float, float]:
    # clockwise-from-12-o'clock polar to y-up Cartesian
    return (radius * math.sin(angle), radius * math.cos(angle))


def sample_outline(
    petal: PetalPlacement, kappa: float, samples_per_lobe: int = 128
) -> list[tuple[float, float]]:
    """Closed polyline tracing a petal: origin, lobed boundary, origin.

    Boundary points are shared exactly at lobe seams. A petal with eta
    lobes yields eta * (samples_per_lobe - 1) + 3 points; a zero-lobe or
    zero-length petal degenerates to its anchor at the origin.
    """
    if samples_per_lobe < 8:
        raise ValueError("need at least 8 samples per lobe")
    points = [(0.0, 0.0)]
    if petal.eta > 0 and petal.length > 0.0:
        lobe_angle = petal.gamma / petal.eta
        for lobe in range(petal.eta):
            first = 0 if lobe == 0 else 1  # seam point already emitted
            for k in range(first, samples_per_lobe):
                t = k / (samples_per_lobe - 1)
                radius = _lobe_radius(kappa, petal.length, t)
                angle = petal.start_angle + (lobe + t) * lobe_angle
                points.append(_place(radius, angle))
    points.append((0.0, 0.0))
    return points


def polygon_area(points: Iterable[tuple[float, float]]) -> float:
    """Absolute shoelace area of a closed polyline."""
    pts = list(points)
    acc = 0.0
    for (x0, y0), (x1, y1) in zip(pts, pts[1:] + pts[:1]):
        acc += x0 * y1 - x1 * y0
    return abs(acc) / 2.0


def exhaustive_best_deviation(b: Sequence[float], total: int) -> float:
    """Minimum L1 angle deviation over all integer allocations of ``total`` lobes.

    Brute-force reference for small instances; exponential in len(b).
    """
    norm = sum(b)
    targets = [TWO_PI * v / norm for v in b]
    best = math.inf
    n = len(b)
    for splits in itertools.combinations(range(total + n - 1), n - 1):
        etas = []
        prev = -1
        for s in splits:
            etas.append(s - prev - 1)
            prev = s
        etas.append(total + n - 2 - prev)
        dev = sum(abs(TWO_PI * e / total - t) for e, t in zip(etas, targets))
        best = min(best, dev)
    return best


def allocation_deviation(b: Sequence[float], allocation: LobeAllocation) -> float:
    """L1 deviation between realized petal angles and exact proportional angles."""
    norm = sum(b)
    return sum(
        abs(TWO_PI * eta / allocation.total - TWO_PI * v / norm)
        for eta, v in zip(allocation.etas, b)
    )
