
import numpy as np
import pytest
from hypothesis import strategies as st

from ghzanon.behavior import Behavior, deterministic_behavior


def random_table(rng: np.random.Generator, n: int, scale: int = 5) -> np.ndarray:
    """Positive integer rows with a common sum, ready to wrap as a Behavior."""
    raw = rng.integers(0, scale, size=(2**n, 2**n))
    raw[:, 0] += 1
    total = int(np.lcm.reduce(raw.sum(axis=1)))
    return raw * (total // raw.sum(axis=1))[:, None], total


@st.composite
def local_behaviors(draw, n_values=(1, 2, 3)):
    """Convex mixtures of deterministic product strategies (hence non-signaling)."""
    n = draw(st.sampled_from(n_values))
    k = draw(st.integers(1, 4))
    responses = [draw(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=n, max_size=n))
                 for _ in range(k)]
    weights = [draw(st.integers(1, 5)) for _ in range(k)]
    total = sum(weights)
    numer = sum(w * deterministic_behavior(r).numerators for w, r in zip(weights, responses))
    return Behavior(n, numer, total)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
