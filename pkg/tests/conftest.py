import pytest

from wdim import cantor


@pytest.fixture(scope="session")
def epoch_tree():
    s, depth = cantor.preset_schedule("epoch")
    return cantor.build_tree(s, depth)


@pytest.fixture(scope="session")
def probe_tree():
    s, depth = cantor.preset_schedule("case2-probe")
    return cantor.build_tree(s, depth)
