import pytest

from polarblend import t300_5208


@pytest.fixture(scope="session")
def mat():
    return t300_5208()
