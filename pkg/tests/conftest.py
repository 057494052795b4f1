import pytest

from petalrisk.score2 import PatientRecord, Sex, load_default_bundle
from petalrisk.surrogate import SurrogateModel, load_default_surrogates

#: Published reference coefficients (age, sbp, smoking, nonhdl order).
MALE_ALPHAS = (0.087, 0.058, 0.037, 0.022)
FEMALE_ALPHAS = (0.060, 0.037, 0.025, 0.004)


@pytest.fixture(scope="session")
def bundle():
    return load_default_bundle()


@pytest.fixture(scope="session")
def surrogates():
    return load_default_surrogates()


@pytest.fixture(scope="session")
def male_model():
    return SurrogateModel(sex=Sex.MALE, alphas=MALE_ALPHAS, provenance="transcribed")


@pytest.fixture(scope="session")
def female_model():
    return SurrogateModel(sex=Sex.FEMALE, alphas=FEMALE_ALPHAS, provenance="transcribed")


@pytest.fixture
def smoker():
    return PatientRecord(
        age=61.0, sex=Sex.MALE, smoking=True, sbp=150.0, total_chol=6.0, hdl_chol=1.5
    )


@pytest.fixture
def nonsmoker():
    return PatientRecord(
        age=55.0, sex=Sex.FEMALE, smoking=False, sbp=128.0, total_chol=5.2, hdl_chol=1.2
    )
