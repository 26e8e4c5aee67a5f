import pytest

from eisenlab.characters import enumerate_characters, quadratic_character


@pytest.fixture(scope="session")
def trivial_char():
    return enumerate_characters(1)[0]


@pytest.fixture(scope="session")
def quad5():
    return quadratic_character(5)


@pytest.fixture(scope="session")
def quad13():
    return quadratic_character(13)


@pytest.fixture(scope="session")
def complex7():
    return [c for c in enumerate_characters(7) if c.primitive and not c.is_real][0]
