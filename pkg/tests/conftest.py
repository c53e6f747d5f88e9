import random

import numpy as np
import pytest
from hypothesis import strategies as st

from qualmdp.models import convex_choice, example_chain, random_mdp


@pytest.fixture
def m1():
    return example_chain()


@pytest.fixture
def m2():
    return convex_choice()


def names(m, states):
    return set(m.names_of(states))


@st.composite
def small_mdps(draw, max_states=5, propositions=("q", "r")):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = random.Random(seed)
    n = draw(st.integers(1, max_states))
    return random_mdp(rng, n, n_actions=rng.randint(1, 3), propositions=propositions)


@st.composite
def mdp_and_sets(draw, k=2, max_states=5):
    m = draw(small_mdps(max_states=max_states))
    sets = [np.array(draw(st.lists(st.booleans(), min_size=m.n, max_size=m.n)), dtype=bool) for _ in range(k)]
    return (m, *sets)


ACCEPTANCE_LINES: list[str] = []


def report(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
