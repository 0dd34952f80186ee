from pathlib import Path

import pytest

from tbeamon.series import parse_series

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture(name: str):
    path = FIXTURES / name
    if not path.exists():
        pytest.skip(f"{name} not present; build it with scripts/prepare_spei_fixture.py")
    return parse_series(path.read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def spei12():
    """Monthly SPEI-12 series for the Bologna grid cell."""
    return load_fixture("spei12_bologna.csv")


@pytest.fixture(scope="session")
def spei24():
    """Monthly SPEI-24 series for the Bologna grid cell."""
    return load_fixture("spei24_bologna.csv")
