"""Closed test forms phi with analytic Laplacian data.

A test form packages the scalar phi, the source density psi defined by
i ddbar phi = psi Omega (for m >= 2, phi means f omega^(m-1) and psi
carries the (m-1)! wedge normalization), the exact first moment
integral of omega wedge phi, and the L2 norm of psi.  Two families:

* "harmonic" (m = 1): real spherical harmonics of degree l <= 3 composed
  with the sphere embedding of CP^1, plus a constant offset.  These are
  Laplace eigenfunctions, so psi = -2 l (l+1) (phi - offset) exactly.
* "hermitian" (any m): f(Z) = sum_i a_i |Z_i|^2 on unit vectors.  The
  traceless part is a Laplace eigenfunction with eigenvalue -4(m+1),
  giving psi = -2 (m+1) (m-1)! (f - mean).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import UnsupportedDimension
from .geometry import SUPPORTED_M, fs_volume, sphere_embedding

# Real orthonormal spherical harmonics on the unit 2-sphere, l <= 3,
# indexed by (l, mu), as polynomials in the Cartesian coordinates.
_C = {
    "c1": math.sqrt(3.0 / (4.0 * math.pi)),
    "c2a": math.sqrt(15.0 / (4.0 * math.pi)),
    "c2b": math.sqrt(5.0 / (16.0 * math.pi)),
    "c2c": math.sqrt(15.0 / (16.0 * math.pi)),
    "c3a": math.sqrt(35.0 / (32.0 * math.pi)),
    "c3b": math.sqrt(105.0 / (4.0 * math.pi)),
    "c3c": math.sqrt(21.0 / (32.0 * math.pi)),
    "c3d": math.sqrt(7.0 / (16.0 * math.pi)),
    "c3e": math.sqrt(105.0 / (16.0 * math.pi)),
}

_HARMONICS: dict = {
    (1, -1): lambda x, y, z: _C["c1"] * y,
    (1, 0): lambda x, y, z: _C["c1"] * z,
    (1, 1): lambda x, y, z: _C["c1"] * x,
    (2, -2): lambda x, y, z: _C["c2a"] * x * y,
    (2, -1): lambda x, y, z: _C["c2a"] * y * z,
    (2, 0): lambda x, y, z: _C["c2b"] * (3.0 * z * z - 1.0),
    (2, 1): lambda x, y, z: _C["c2a"] * x * z,
    (2, 2): lambda x, y, z: _C["c2c"] * (x * x - y * y),
    (3, -3): lambda x, y, z: _C["c3a"] * y * (3.0 * x * x - y * y),
    (3, -2): lambda x, y, z: _C["c3b"] * x * y * z,
    (3, -1): lambda x, y, z: _C["c3c"] * y * (5.0 * z * z - 1.0),
    (3, 0): lambda x, y, z: _C["c3d"] * z * (5.0 * z * z - 3.0),
    (3, 1): lambda x, y, z: _C["c3c"] * x * (5.0 * z * z - 1.0),
    (3, 2): lambda x, y, z: _C["c3e"] * z * (x * x - y * y),
    (3, 3): lambda x, y, z: _C["c3a"] * x * (x * x - 3.0 * y * y),
}


@dataclass(frozen=True)
class TestForm:
    """A smooth statistic kernel with its analytic integrals."""

    m: int
    family: str
    label: str
    params: dict
    phi_fn: Callable = field(repr=False)
    psi_fn: Callable = field(repr=False)
    omega_phi_integral: float
    psi_l2_sq: float
    sup_phi: float

    def phi_many(self, Z: np.ndarray) -> np.ndarray:
        """phi at unit homogeneous vectors (..., m+1)."""
        return self.phi_fn(np.asarray(Z))

    def psi_many(self, Z: np.ndarray) -> np.ndarray:
        """psi at unit homogeneous vectors, i ddbar phi = psi Omega."""
        return self.psi_fn(np.asarray(Z))

    def expected_mean(self, N: int) -> float:
        """Exact mean of the linear statistic: (N/pi) int omega wedge phi."""
        return N / math.pi * self.omega_phi_integral

    @property
    def delta_l2_sq(self) -> float:
        """||Laplacian phi||^2 for m = 1, where psi = Laplacian(phi)/2."""
        if self.m != 1:
            raise UnsupportedDimension("delta_l2_sq is the m=1 normalization")
        return 4.0 * self.psi_l2_sq


def harmonic_form(l: int, mu: int, amplitude: float = 1.0,
                  offset: float = 0.0) -> TestForm:
    """m = 1 family: phi = offset + amplitude * Y_(l,mu)(n(Z)).

    Y are orthonormal on the unit sphere; on CP^1 (radius-1/2 sphere)
    int Y^2 Omega = 1/4 and Delta phi = -4 l (l+1) (phi - offset).
    """
    if (l, mu) not in _HARMONICS:
        raise ValueError("supported harmonics have 1 <= l <= 3, |mu| <= l")
    poly = _HARMONICS[(l, mu)]
    lam = 2.0 * l * (l + 1.0)

    def phi(Z):
        n = sphere_embedding(Z)
        return offset + amplitude * poly(n[..., 0], n[..., 1], n[..., 2])

    def psi(Z):
        n = sphere_embedding(Z)
        return -lam * amplitude * poly(n[..., 0], n[..., 1], n[..., 2])

    # Sup of |Y| over the sphere, computed once on a fine graticule.
    t = np.linspace(-1.0, 1.0, 4001)
    p = np.linspace(0.0, 2.0 * np.pi, 1024, endpoint=False)
    T, P = np.meshgrid(t, p, indexing="ij")
    st = np.sqrt(1.0 - T * T)
    ymax = float(np.max(np.abs(poly(st * np.cos(P), st * np.sin(P), T))))

    label = f"harmonic_l{l}_mu{mu}_A{amplitude:g}_c{offset:g}"
    return TestForm(
        m=1, family="harmonic", label=label,
        params={"l": l, "mu": mu, "amplitude": amplitude, "offset": offset},
        phi_fn=phi, psi_fn=psi,
        omega_phi_integral=offset * math.pi,
        psi_l2_sq=(lam * amplitude) ** 2 / 4.0,
        sup_phi=abs(offset) + abs(amplitude) * ymax,
    )


def hermitian_form(diag, m: int | None = None) -> TestForm:
    """f(Z) = sum_i a_i |Z_i|^2 on unit vectors, for any m <= 3.

    psi = -2 (m+1) (m-1)! (f - abar) with abar = mean(a); the moduli
    vector is uniform on the simplex under FS measure, which gives the
    closed moment formulas below.
    """
    a = np.asarray(diag, dtype=np.float64)
    if m is None:
        m = a.shape[0] - 1
    if m not in SUPPORTED_M or a.shape != (m + 1,):
        raise UnsupportedDimension("diag must have length m+1, m in {1,2,3}")
    abar = float(a.mean())
    coef = -2.0 * (m + 1) * math.factorial(m - 1)
    vol = fs_volume(m)

    def f_of(Z):
        return np.abs(np.asarray(Z)) ** 2 @ a

    def phi(Z):
        return f_of(Z)

    def psi(Z):
        return coef * (f_of(Z) - abar)

    # E[(f - abar)^2] under the uniform simplex law of (|Z_i|^2).
    ssum, ssq = float(a.sum()), float((a * a).sum())
    simplex_var = ((m + 1) * ssq - ssum * ssum) / ((m + 1) ** 2 * (m + 2))
    psi_l2 = coef * coef * simplex_var * vol

    label = "hermitian_" + "_".join(f"{x:g}" for x in a)
    return TestForm(
        m=m, family="hermitian", label=label,
        params={"diag": tuple(float(x) for x in a)},
        phi_fn=phi, psi_fn=psi,
        omega_phi_integral=math.pi ** m * ssum / (m + 1),
        psi_l2_sq=psi_l2,
        sup_phi=float(np.max(np.abs(a))),
    )


def list_families() -> list[dict]:
    """Catalog for the CLI: family name, dimensions, parameters."""
    return [
        {
            "family": "harmonic",
            "m": [1],
            "params": "l in 1..3, mu in -l..l, amplitude, offset",
            "notes": "Laplace eigenfunctions; offset sets a nonzero mean",
        },
        {
            "family": "hermitian",
            "m": [1, 2, 3],
            "params": "diag = (a_0, ..., a_m)",
            "notes": "f = sum a_i |Z_i|^2; eigenfunction after centering",
        },
    ]


def form_from_params(family: str, m: int, params: dict) -> TestForm:
    if family == "harmonic":
        if m != 1:
            raise UnsupportedDimension("harmonic family requires m = 1")
        return harmonic_form(int(params["l"]), int(params["mu"]),
                             float(params.get("amplitude", 1.0)),
                             float(params.get("offset", 0.0)))
    if family == "hermitian":
        return hermitian_form(params["diag"], m=m)
    raise ValueError(f"unknown test-form family '{family}'")
