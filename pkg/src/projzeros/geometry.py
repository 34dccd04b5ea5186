"""Fubini-Study geometry of complex projective space CP^m, m in {1, 2, 3}.

Conventions
-----------
Points are unit vectors Z in C^(m+1) up to phase.  The Kaehler form is
omega = (i/2) ddbar log|Z|^2, so Vol(CP^m) = pi^m / m! and CP^1 is the
round 2-sphere of radius 1/2 (area pi).  Geodesic distance is

    d(Z, W) = arccos |<Z, W>|   in [0, pi/2].

Affine chart i sends Z to w = (Z_j / Z_i, j != i); in any chart the
volume form is Lebesgue(w) / (1 + |w|^2)^(m+1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .errors import ChartSingular, UnsupportedDimension, UnsupportedGridKind

SUPPORTED_M = (1, 2, 3)


def _check_m(m: int) -> None:
    if m not in SUPPORTED_M:
        raise UnsupportedDimension(f"m={m} not supported; use m in {SUPPORTED_M}")


def fs_volume(m: int) -> float:
    """Total Fubini-Study volume pi^m / m!."""
    _check_m(m)
    return np.pi ** m / float(math.factorial(m))


@dataclass(frozen=True)
class ProjectivePoint:
    """A point of CP^m as a unit homogeneous vector (phase irrelevant)."""

    homog: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.homog, dtype=np.complex128)
        if vec.ndim != 1 or vec.shape[0] not in (2, 3, 4):
            raise UnsupportedDimension("homogeneous vector must have 2..4 entries")
        norm = np.linalg.norm(vec)
        if not np.isfinite(norm) or norm < 1e-300:
            raise ValueError("homogeneous vector must be nonzero and finite")
        object.__setattr__(self, "homog", vec / norm)

    @property
    def m(self) -> int:
        return self.homog.shape[0] - 1

    def equals(self, other: "ProjectivePoint", tol: float = 1e-12) -> bool:
        # overlap deficit ~ d^2/2, so this stays roundoff-stable where
        # arccos of the overlap would amplify eps to sqrt(eps)
        return 1.0 - abs(np.vdot(self.homog, other.homog)) <= tol


@dataclass(frozen=True)
class ChartCoords:
    """Affine coordinates w = (Z_j / Z_i, j != i) in chart i."""

    chart: int
    w: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=np.complex128))

    @property
    def m(self) -> int:
        return self.w.shape[0]


def fs_distance(p: ProjectivePoint, q: ProjectivePoint) -> float:
    """Geodesic distance arccos|<p, q>| in [0, pi/2]."""
    inner = np.vdot(p.homog, q.homog)
    return float(np.arccos(min(1.0, abs(inner))))


def fs_distance_many(Z: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Pairwise-broadcast distance between unit homogeneous vectors."""
    inner = np.abs(np.sum(np.conj(Z) * W, axis=-1))
    return np.arccos(np.minimum(inner, 1.0))


def random_point(rng: np.random.Generator, m: int) -> ProjectivePoint:
    """Fubini-Study uniform point (normalized complex Gaussian vector)."""
    _check_m(m)
    block = rng.standard_normal((m + 1, 2))
    return ProjectivePoint(block[:, 0] + 1j * block[:, 1])


def to_chart(p: ProjectivePoint, chart: int = 0) -> ChartCoords:
    """Affine coordinates of p in the given chart.

    Raises ChartSingular when |Z_chart| < 1e-8, where the chart map blows up.
    """
    vec = p.homog
    if not 0 <= chart <= p.m:
        raise ValueError(f"chart index {chart} out of range for m={p.m}")
    pivot = vec[chart]
    if abs(pivot) < 1e-8:
        raise ChartSingular(f"|Z_{chart}| = {abs(pivot):.2e} too small for chart {chart}")
    w = np.delete(vec, chart) / pivot
    return ChartCoords(chart=chart, w=w)


def from_chart(c: ChartCoords) -> ProjectivePoint:
    """Inverse of to_chart."""
    vec = np.insert(c.w, c.chart, 1.0 + 0j)
    return ProjectivePoint(vec)


def max_modulus_chart(Z: np.ndarray) -> np.ndarray:
    """Index of the largest-modulus coordinate along the last axis."""
    return np.argmax(np.abs(Z), axis=-1)


class NormalFrame:
    """Unitary frame centered at a point, giving affine normal coordinates.

    point(v) maps an offset v in C^m to the projective point with
    homogeneous vector U (1, v) / sqrt(1 + |v|^2), where U is unitary with
    U e_0 proportional to the center.  The distance from the center is
    arctan|v| = |v| + O(|v|^3); an exact geodesic sphere of radius
    r < pi/2 is the image of |v| = tan(r).
    """

    def __init__(self, center: ProjectivePoint):
        self.center = center
        self.unitary = _householder_frame(center.homog)

    def point_many(self, v: np.ndarray) -> np.ndarray:
        """Map offsets (..., m) to unit homogeneous vectors (..., m+1)."""
        v = np.asarray(v, dtype=np.complex128)
        U = self.unitary
        homog = U[:, 0] + v @ U[:, 1:].T
        return homog / np.linalg.norm(homog, axis=-1, keepdims=True)

    def point(self, v) -> ProjectivePoint:
        v = np.atleast_1d(np.asarray(v, dtype=np.complex128))
        return ProjectivePoint(self.point_many(v))


def _householder_frame(a: np.ndarray) -> np.ndarray:
    """Unitary matrix whose first column spans the line of unit vector a."""
    n = a.shape[0]
    beta = a[0] / abs(a[0]) if abs(a[0]) > 1e-15 else 1.0 + 0j
    v = a - beta * np.eye(n, dtype=np.complex128)[:, 0]
    vnorm2 = np.vdot(v, v).real
    if vnorm2 < 1e-30:
        U = np.eye(n, dtype=np.complex128)
        U[0, 0] = beta
        return U
    H = np.eye(n, dtype=np.complex128) - 2.0 * np.outer(v, np.conj(v)) / vnorm2
    # H e_0 = conj(beta) a, a unit vector on the same projective line as a.
    return H


def normal_frame(center: ProjectivePoint) -> NormalFrame:
    return NormalFrame(center)


@dataclass(frozen=True)
class CapRegion:
    """Metric ball U = {d(z, center) < radius}, radius in (0, pi/2)."""

    center: ProjectivePoint
    radius: float

    def __post_init__(self):
        if not 0.0 < self.radius < np.pi / 2:
            raise ValueError("cap radius must lie in (0, pi/2)")

    @property
    def m(self) -> int:
        return self.center.m

    def contains(self, p: ProjectivePoint) -> bool:
        return fs_distance(self.center, p) < self.radius

    def contains_many(self, Z: np.ndarray) -> np.ndarray:
        return fs_distance_many(self.center.homog, Z) < self.radius


def cap_area(cap: CapRegion) -> float:
    """Volume pi^m sin^(2m)(r) / m! of a metric ball of radius r."""
    m = cap.m
    return np.pi ** m * np.sin(cap.radius) ** (2 * m) / float(math.factorial(m))


def cap_boundary_length(cap: CapRegion) -> float:
    """(2m-1)-volume of the boundary sphere.

    For m = 1 this is the circumference pi * sin(2r): caps are round
    circles on the radius-1/2 sphere.
    """
    m = cap.m
    r = cap.radius
    return 2.0 * np.pi ** m / float(math.factorial(m - 1)) * np.sin(r) ** (2 * m - 1) * np.cos(r)


@dataclass
class QuadratureGrid:
    """Nodes and weights integrating functions against the FS volume form.

    kind "product_gauss": deterministic tensor rule (m = 1: Gauss-Legendre
    in cos(theta) times uniform azimuth, exact for band-limited integrands
    up to the stated resolution).  kind "jittered_qmc": seeded stratified
    sampling, unbiased for bounded integrands, used where integrands have
    integrable singularities (log |s|).
    """

    m: int
    kind: str
    resolution: int
    seed: int
    nodes_homog: np.ndarray
    weights: np.ndarray
    _points: list = field(default=None, repr=False)

    @property
    def n_nodes(self) -> int:
        return self.weights.shape[0]

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def points(self) -> list:
        if self._points is None:
            self._points = [ProjectivePoint(z) for z in self.nodes_homog]
        return self._points


def build_grid(m: int, resolution: int, kind: str = "product_gauss",
               seed: int = 0) -> QuadratureGrid:
    """Build a quadrature grid on CP^m.

    resolution >= 4.  Node counts: m = 1 uses resolution polar values and
    2*resolution azimuths; m >= 2 uses (m+1) max-modulus chart cells of
    resolution^(2m) nodes each.  Weights are positive and sum to
    Vol(CP^m) = pi^m/m! (exactly, after ratio normalization for m >= 2).
    """
    _check_m(m)
    if resolution < 4:
        raise ValueError("resolution must be >= 4")
    if kind not in ("product_gauss", "jittered_qmc"):
        raise UnsupportedGridKind(f"unknown grid kind '{kind}'")
    if m == 1:
        nodes, weights = _grid_m1(resolution, kind, seed)
    else:
        nodes, weights = _grid_polydisc(m, resolution, kind, seed)
    return QuadratureGrid(m=m, kind=kind, resolution=resolution, seed=seed,
                          nodes_homog=nodes, weights=weights)


def _sphere_to_homog(u: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """CP^1 lift of the sphere point with n_3 = u and azimuth phi."""
    z0 = np.sqrt((1.0 + u) / 2.0)
    z1 = np.sqrt((1.0 - u) / 2.0) * np.exp(-1j * phi)
    return np.stack([z0.astype(np.complex128), z1], axis=-1)


def sphere_embedding(Z: np.ndarray) -> np.ndarray:
    """Unit-sphere coordinates n = (2 Re Z0 conj(Z1), 2 Im Z0 conj(Z1), |Z0|^2 - |Z1|^2).

    Isometry of CP^1 onto the radius-1/2 sphere, rescaled to the unit
    sphere; used by the test-form families.
    """
    z0, z1 = Z[..., 0], Z[..., 1]
    cross = z0 * np.conj(z1)
    return np.stack([2 * cross.real, 2 * cross.imag,
                     (z0 * np.conj(z0)).real - (z1 * np.conj(z1)).real], axis=-1)


def _grid_m1(resolution: int, kind: str, seed: int):
    n_az = 2 * resolution
    if kind == "product_gauss":
        u, wu = roots_legendre(resolution)
        phi = 2.0 * np.pi * np.arange(n_az) / n_az
        U, PHI = np.meshgrid(u, phi, indexing="ij")
        WU = np.broadcast_to(wu[:, None], U.shape)
        weights = (WU * (2.0 * np.pi / n_az) / 4.0).ravel()
        nodes = _sphere_to_homog(U.ravel(), PHI.ravel())
        return nodes, weights
    rng = np.random.Generator(np.random.Philox(key=seed))
    iu, jphi = np.meshgrid(np.arange(resolution), np.arange(n_az), indexing="ij")
    ju = rng.random(iu.shape)
    jp = rng.random(iu.shape)
    u = -1.0 + (iu + ju) * (2.0 / resolution)
    phi = (jphi + jp) * (2.0 * np.pi / n_az)
    # Each (u, phi) cell carries FS measure du dphi / 4, the same for all.
    weights = np.full(u.size, np.pi / (2.0 * resolution ** 2))
    return _sphere_to_homog(u.ravel(), phi.ravel()), weights


def _grid_polydisc(m: int, resolution: int, kind: str, seed: int):
    """Charts partitioned by max-modulus coordinate: chart i owns the unit
    polydisc in its affine coordinates.  Parametrize each disc factor by
    (x, theta) with |w| = sqrt(x), so Lebesgue measure is pi^m dx dtheta
    on the unit box, and weight by the FS density (1+|w|^2)^-(m+1)."""
    dim = 2 * m
    n_cells = resolution ** dim
    if kind == "product_gauss":
        t, wt = roots_legendre(resolution)
        x1 = (t + 1.0) / 2.0
        w1 = wt / 2.0
        axes_x = [x1] * dim
        grids = np.meshgrid(*axes_x, indexing="ij")
        X = np.stack([g.ravel() for g in grids], axis=-1)
        wgrids = np.meshgrid(*([w1] * dim), indexing="ij")
        box_w = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    else:
        rng = np.random.Generator(np.random.Philox(key=seed))
        corners = np.stack(np.meshgrid(*([np.arange(resolution)] * dim),
                                       indexing="ij"), axis=-1).reshape(-1, dim)
        X = (corners + rng.random((n_cells, dim))) / resolution
        box_w = np.full(n_cells, 1.0 / n_cells)

    radii = np.sqrt(X[:, 0::2])
    angles = 2.0 * np.pi * X[:, 1::2]
    w_aff = radii * np.exp(1j * angles)
    dens = (1.0 + np.sum(X[:, 0::2], axis=1)) ** (-(m + 1))
    chart_w = np.pi ** m * box_w * dens

    nodes = []
    weights = []
    for chart in range(m + 1):
        homog = np.insert(w_aff, chart, 1.0 + 0j, axis=1)
        homog = homog / np.linalg.norm(homog, axis=1, keepdims=True)
        nodes.append(homog)
        weights.append(chart_w)
    nodes = np.concatenate(nodes, axis=0)
    weights = np.concatenate(weights)
    weights *= fs_volume(m) / weights.sum()
    return nodes, weights
