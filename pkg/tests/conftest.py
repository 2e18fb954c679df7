import numpy as np
import pytest
from hypothesis import settings, strategies as st

from dbar.expr import GaussQ, Const, Var, add, conj, mul, normalize

settings.register_profile("default", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("default")


def poly(terms, variables):
    """Build sum c * prod v^a conj(v)^b from [(c, exps)], exps over (v..., conj v...)."""
    letters = [Var(v) for v in variables] + [conj(Var(v)) for v in variables]
    out = []
    for c, exps in terms:
        out.append(mul(Const(GaussQ.of(c)), *[lt ** a for lt, a in zip(letters, exps)]))
    return normalize(add(*out)) if out else normalize(Const(GaussQ(0)))


def _cap(e, max_deg):
    e = list(e)
    while sum(e) > max_deg:
        e[e.index(max(e))] -= 1
    return e


def poly_strategy(variables, max_deg=3, max_terms=4):
    n = 2 * len(variables)
    coef = st.tuples(st.integers(-4, 4), st.integers(-4, 4)).map(lambda t: complex(t[0] / 2, t[1] / 2))
    exps = st.lists(st.integers(0, max_deg), min_size=n, max_size=n).map(
        lambda e: _cap(e, max_deg))
    return st.lists(st.tuples(coef, exps), min_size=1, max_size=max_terms).map(
        lambda ts: poly(ts, variables))


def random_disc_points(count, radius=0.9, seed=0, n=1):
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(size=(count, n)))
    pts = r * np.exp(2j * np.pi * rng.uniform(size=(count, n)))
    return pts[:, 0] if n == 1 else pts


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
