"""Domains and quadrature rules: discs, polydiscs, the Hartogs triangle."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, DomainError, EvaluationError

DEFAULT_NR = 64
DEFAULT_NTHETA = 256


@dataclass(frozen=True)
class DiscDomain:
    center: complex = 0j
    radius: float = 1.0

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise DomainError(f"disc radius must be positive, got {self.radius!r}")
        object.__setattr__(self, "center", complex(self.center))

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) < self.radius

    def area(self):
        return math.pi * self.radius ** 2


UNIT_DISC = DiscDomain()


@dataclass(frozen=True)
class ProductDomain:
    factors: tuple

    def __post_init__(self):
        if not 2 <= len(self.factors) <= 3:
            raise DomainError("product domains have 2 or 3 disc factors")
        object.__setattr__(self, "factors", tuple(self.factors))

    @classmethod
    def unit(cls, n=2):
        return cls(tuple(DiscDomain() for _ in range(n)))

    @property
    def n(self):
        return len(self.factors)

    def contains(self, *zs):
        out = True
        for d, z in zip(self.factors, zs):
            out = out & d.contains(z)
        return out


@dataclass(frozen=True)
class HartogsDomain:
    """The Hartogs triangle |z1| < |z2| < 1."""

    def contains(self, z1, z2):
        a1, a2 = np.abs(z1), np.abs(z2)
        return (a1 < a2) & (a2 < 1)


HARTOGS = HartogsDomain()


@lru_cache(maxsize=64)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def gl_interval(a: float, b: float, n: int):
    x, w = gauss_legendre(n)
    h = 0.5 * (b - a)
    return a + h * (x + 1.0), h * w


@dataclass(frozen=True)
class PolarGrid:
    """Gauss-Legendre in r times the trapezoid rule in theta.

    With ``grading`` q > 1 the radial nodes are r = R t^q, clustering toward
    the centre for integrands singular there.
    """

    disc: DiscDomain
    n_r: int
    n_theta: int
    grading: int = 1
    r: np.ndarray = field(repr=False, default=None)
    r_weights: np.ndarray = field(repr=False, default=None)
    theta: np.ndarray = field(repr=False, default=None)
    points: np.ndarray = field(repr=False, default=None)
    weights: np.ndarray = field(repr=False, default=None)

    @property
    def size(self):
        return self.n_r * self.n_theta

    def metadata(self):
        return {"n_r": self.n_r, "n_theta": self.n_theta, "grading": self.grading}


def build_polar_grid(disc: DiscDomain = UNIT_DISC, n_r: int = DEFAULT_NR,
                     n_theta: int = DEFAULT_NTHETA, grading: int = 1) -> PolarGrid:
    """Polar product rule on a disc; weights already include r dr dtheta."""
    if n_r < 4 or n_theta < 8 or n_theta % 2:
        raise ConfigurationError("grid too coarse: need n_r >= 4 and an even n_theta >= 8")
    if grading < 1:
        raise ConfigurationError("grading must be a positive integer")
    t, wt = gl_interval(0.0, 1.0, n_r)
    R = disc.radius
    r = R * t ** grading
    wr = R * grading * t ** (grading - 1) * wt * r
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    pts = disc.center + (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    w = (wr[:, None] * np.full(n_theta, 2 * np.pi / n_theta)[None, :]).ravel()
    return PolarGrid(disc, n_r, n_theta, grading, r, wr, theta, pts, w)


def boundary_nodes(disc: DiscDomain = UNIT_DISC, n_theta: int = DEFAULT_NTHETA):
    """Trapezoid nodes on the boundary circle with weights for dzeta."""
    if n_theta < 8:
        raise ConfigurationError("need at least 8 boundary nodes")
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    e = np.exp(1j * theta)
    zeta = disc.center + disc.radius * e
    dzeta = 1j * disc.radius * e * (2 * np.pi / n_theta)
    return zeta, dzeta


def _check_finite(vals, points):
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.flatnonzero(bad.ravel())[0])
        where = points[i] if not isinstance(points, tuple) else tuple(p.ravel()[i] for p in points)
        raise EvaluationError(f"integrand is not finite at quadrature node {i} ({where})")


def fsum_complex(values) -> complex:
    v = np.asarray(values, dtype=complex).ravel()
    return complex(math.fsum(v.real), math.fsum(v.imag))


def integrate(grid, f) -> complex:
    """Integrate ``f`` (callable on the node array, or node values) over a grid.

    The weighted sum is compensated (``math.fsum``) so the result does not
    depend on the order in which node values were produced.
    """
    pts = grid.points
    vals = f(pts) if callable(f) else np.asarray(f)
    vals = np.asarray(vals, dtype=complex)
    _check_finite(vals, pts)
    return fsum_complex(vals * grid.weights)


@dataclass(frozen=True)
class ProductGrid:
    factors: tuple

    @property
    def n(self):
        return len(self.factors)

    @property
    def size(self):
        return int(np.prod([g.size for g in self.factors]))

    @property
    def points(self):
        mesh = np.meshgrid(*[g.points for g in self.factors], indexing="ij")
        return tuple(m.ravel() for m in mesh)

    @property
    def weights(self):
        w = self.factors[0].weights
        for g in self.factors[1:]:
            w = np.multiply.outer(w, g.weights)
        return w.ravel()

    def metadata(self):
        return {"factors": [g.metadata() for g in self.factors]}


def build_product_grid(domain: ProductDomain, n_r: int = 24, n_theta: int = 48,
                       grading: int = 1) -> ProductGrid:
    return ProductGrid(tuple(build_polar_grid(d, n_r, n_theta, grading) for d in domain.factors))


def integrate_product(grid: ProductGrid, f) -> complex:
    pts = grid.points
    vals = np.asarray(f(*pts) if callable(f) else f, dtype=complex)
    _check_finite(vals, pts)
    return fsum_complex(vals * grid.weights)


# ---------------------------------------------------------------------------
# rules for regions around a boundary point


def log_breaks(lo: float, hi: float, per_decade: int = 1):
    """Geometric breakpoints from lo to hi, at least one per decade."""
    if not 0 < lo < hi:
        raise DomainError("need 0 < lo < hi")
    k = max(1, int(math.ceil(per_decade * math.log10(hi / lo) - 1e-9)))
    return list(np.geomspace(lo, hi, k + 1))


def annulus_rule(center: complex, breaks, n_r: int = 16, n_theta: int = 64):
    """Quadrature for sum of annuli breaks[i] < |z-c| < breaks[i+1].

    Radial Gauss-Legendre in log r on each segment, trapezoid in angle.
    Returns (points, weights) with area weights.
    """
    pts, wts = [], []
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    e = np.exp(1j * theta)
    for a, b in zip(breaks[:-1], breaks[1:]):
        s, ws = gl_interval(math.log(a), math.log(b), n_r)
        r = np.exp(s)
        wr = ws * r * r
        pts.append((center + r[:, None] * e[None, :]).ravel())
        wts.append((wr[:, None] * np.full(n_theta, 2 * np.pi / n_theta)).ravel())
    return np.concatenate(pts), np.concatenate(wts)


def clipped_annulus_rule(center: complex, breaks, r_in: float, r_out: float,
                         n_r: int = 16, n_phi: int = 32, log_radial: bool = True):
    """Quadrature over {breaks[0] < |z-c| < breaks[-1]} intersected with
    {r_in < |z| < r_out}, for a point c != 0.

    For fixed rho = |z-c| the admissible angles form two arcs symmetric
    about arg c; each arc gets its own Gauss-Legendre rule.  Radial segments
    are mapped through log rho when ``log_radial`` is set.
    """
    c = complex(center)
    if c == 0:
        raise DomainError("clipped_annulus_rule needs a nonzero centre")
    ac, phase = abs(c), np.angle(c)
    pts, wts = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if log_radial:
            s, ws = gl_interval(math.log(a), math.log(b), n_r)
            rho = np.exp(s)
            wr = ws * rho * rho
        else:
            rho, wr = gl_interval(a, b, n_r)
            wr = wr * rho
        for rh, w in zip(rho, wr):
            lo_c = (r_in ** 2 - ac ** 2 - rh ** 2) / (2 * rh * ac)
            hi_c = (r_out ** 2 - ac ** 2 - rh ** 2) / (2 * rh * ac)
            lo_c, hi_c = max(lo_c, -1.0), min(hi_c, 1.0)
            if lo_c >= hi_c:
                continue
            psi0, psi1 = math.acos(hi_c), math.acos(lo_c)
            x, wx = gl_interval(psi0, psi1, n_phi)
            for sign in (1.0, -1.0):
                ang = phase + sign * x
                pts.append(c + rh * np.exp(1j * ang))
                wts.append(w * wx)
    if not pts:
        return np.zeros(0, complex), np.zeros(0)
    return np.concatenate(pts), np.concatenate(wts)
