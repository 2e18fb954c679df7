import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dbar.errors import ConfigurationError, DomainError, EvaluationError
from dbar.grids import (
    HARTOGS, UNIT_DISC, DiscDomain, ProductDomain, annulus_rule, boundary_nodes,
    build_polar_grid, build_product_grid, clipped_annulus_rule, fsum_complex, integrate,
    integrate_product, log_breaks,
)


def test_disc_requires_positive_radius():
    with pytest.raises(DomainError):
        DiscDomain(0j, 0.0)
    with pytest.raises(DomainError):
        DiscDomain(0j, -1.0)


def test_product_dimension_limits():
    with pytest.raises(DomainError):
        ProductDomain((UNIT_DISC,))
    with pytest.raises(DomainError):
        ProductDomain((UNIT_DISC,) * 4)
    assert ProductDomain.unit(3).n == 3


def test_hartogs_membership_is_strict():
    assert HARTOGS.contains(0.1, 0.5)
    assert not HARTOGS.contains(0.5, 0.5)
    assert not HARTOGS.contains(0.1, 1.0)
    assert not HARTOGS.contains(0.0, 0.0)


@pytest.mark.parametrize("n_r,n_theta", [(3, 16), (8, 6), (8, 15)])
def test_grid_counts_validated(n_r, n_theta):
    with pytest.raises(ConfigurationError):
        build_polar_grid(UNIT_DISC, n_r, n_theta)


def test_weights_sum_to_area_and_nodes_interior():
    for disc in (UNIT_DISC, DiscDomain(0.3 - 0.2j, 2.5)):
        g = build_polar_grid(disc)
        assert abs(math.fsum(g.weights) - disc.area()) / disc.area() <= 1e-12
        assert np.all(np.abs(g.points - disc.center) < disc.radius)
        assert np.all(np.abs(g.points - disc.center) > 0)


def test_integrate_examples():
    g = build_polar_grid()
    assert abs(integrate(g, lambda z: np.ones_like(z)) - math.pi) <= 1e-12 * math.pi
    assert abs(integrate(g, lambda z: np.abs(z) ** 2) - math.pi / 2) <= 1e-13
    assert abs(integrate(g, lambda z: z)) <= 1e-14
    assert abs(integrate(g, lambda z: np.abs(z) ** 5) - 2 * math.pi / 7) <= 1e-13
    assert abs(integrate(g, lambda z: 1 / np.abs(z)) - 2 * math.pi) <= 1e-3


def test_integrate_rejects_non_finite_and_names_node():
    g = build_polar_grid(UNIT_DISC, 8, 16)
    vals = np.ones(g.points.shape, complex)
    vals[5] = np.nan
    with pytest.raises(EvaluationError, match="node 5"):
        integrate(g, vals)


def test_integrate_order_independent():
    g = build_polar_grid(UNIT_DISC, 16, 32)
    f = np.cos(7 * g.points.real) + 1j * g.points.imag ** 3
    perm = np.random.default_rng(0).permutation(f.size)
    a = fsum_complex(f * g.weights)
    b = fsum_complex((f * g.weights)[perm])
    assert a == b


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_integrate_linear(a, b):
    g = build_polar_grid(UNIT_DISC, 16, 32)
    f = g.points ** 2 * np.conj(g.points)
    h = np.abs(g.points) ** 3
    lhs = integrate(g, a * f + b * h)
    rhs = a * integrate(g, f) + b * integrate(g, h)
    scale = (abs(a) * np.max(np.abs(f)) + abs(b) * np.max(np.abs(h))) * math.pi
    assert abs(lhs - rhs) <= 1e-13 * max(scale, 1e-300)


def test_refinement_converges_monotonically():
    exact = 2 * math.pi / 2.5  # int |w|^(1/2) = 2 pi int r^(3/2) dr
    errs = []
    for n_r in (4, 8, 16, 32):
        g = build_polar_grid(UNIT_DISC, n_r, 16)
        errs.append(abs(integrate(g, lambda z: np.abs(z) ** 0.5) - exact))
    diffs = [abs(a - b) for a, b in zip(errs[:-1], errs[1:])]
    assert diffs[0] > diffs[1] > diffs[2]


def test_boundary_nodes():
    zb, dz = boundary_nodes(UNIT_DISC, 64)
    assert np.allclose(np.abs(zb), 1, atol=1e-14)
    assert abs(fsum_complex(dz / zb) - 2j * math.pi) <= 1e-13
    for m in range(0, 17):
        assert abs(fsum_complex(zb ** m * dz)) <= 1e-13
    assert abs(fsum_complex(np.conj(zb) * dz) - 2j * math.pi) <= 1e-13
    with pytest.raises(ConfigurationError):
        boundary_nodes(UNIT_DISC, 4)


def test_boundary_cauchy_formula():
    zb, dz = boundary_nodes(UNIT_DISC, 256)
    for z in (0.0, 0.5 + 0.3j, 0.9j, -0.9):
        for m in range(0, 65):
            val = fsum_complex(zb ** m * dz / (zb - z)) / (2j * math.pi)
            assert abs(val - z ** m) <= 1e-10


def test_product_grid_integral():
    g = build_product_grid(ProductDomain.unit(2), 8, 16)
    val = integrate_product(g, lambda a, b: np.abs(a) ** 2 * np.abs(b) ** 2)
    assert abs(val - (math.pi / 2) ** 2) <= 1e-12


def test_annulus_rules():
    pts, w = annulus_rule(0j, [0.1, 0.5, 1.0], 16, 32)
    assert abs(math.fsum(w) - math.pi * (1 - 0.01)) <= 1e-12
    # clipped annulus: intersection of {|z-1| < 0.5} with {0.5 < |z| < 1}
    pts, w = clipped_annulus_rule(1.0, [1e-3, 0.5], 0.5, 1.0, 32, 64)
    assert np.all((np.abs(pts) > 0.5) & (np.abs(pts) < 1) & (np.abs(pts - 1) < 0.5))
    # area by a fine reference grid on the disc |z - 1| < 0.5
    ref = build_polar_grid(DiscDomain(1.0, 0.5), 256, 512)
    mask = (np.abs(ref.points) > 0.5) & (np.abs(ref.points) < 1)
    assert abs(math.fsum(w) - math.fsum(ref.weights[mask])) < 2e-3
    assert log_breaks(1e-4, 1e-1) == pytest.approx([1e-4, 1e-3, 1e-2, 1e-1])
