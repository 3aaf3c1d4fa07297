import random
from importlib import resources

import pytest

from wftc import CONSTRAINED, UNCONSTRAINED, build_srg, parse_model
from wftc.model import Place, Transition, WftcNet
from wftc.srg import Srg, StateC


def fixture_path(name: str):
    return resources.files("wftc") / "fixtures" / name


def fixture_text(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def motivating_net():
    return parse_model(fixture_text("motivating.wftc"))


@pytest.fixture(scope="session")
def motivating_srg(motivating_net):
    return build_srg(motivating_net, CONSTRAINED)


@pytest.fixture(scope="session")
def wfd_net():
    return parse_model(fixture_text("motivating-wfd.wftc"))


@pytest.fixture(scope="session")
def wfd_srg(wfd_net):
    return build_srg(wfd_net, UNCONSTRAINED)


TINY_CHAIN = """
[PLACES] p0 p1
[TRANSITIONS] t0
[ARCS] p0->t0 t0->p1
[INITIAL] p0
[FINAL] p1
"""


@pytest.fixture
def tiny_net():
    return parse_model(TINY_CHAIN)


def make_random_srg(rng: random.Random, max_states: int = 20) -> Srg:
    """A synthetic graph over a one-hot net: state i marks place q{i}, so
    place atoms select single states."""
    n = rng.randint(2, max_states)
    places = [Place(f"q{i}", i) for i in range(n)]
    net = WftcNet(places=places, transitions=[Transition("t", 0)], start="q0", end=f"q{n - 1}")
    srg = Srg(net=net, mode=CONSTRAINED)
    for i in range(n):
        marking = tuple(1 if j == i else 0 for j in range(n))
        srg.states.append(StateC(marking, (), (), ()))
        srg.pseudo.append(False)
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < 2.5 / n:
                srg.edges.append((i, "t", j))
    return srg.finish()
