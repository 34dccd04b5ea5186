"""Hermitian Gaussian ensembles of degree-N polynomials on CP^m.

A section is s = sum_alpha c_alpha w_alpha Z_0^(N-|alpha|) Z^alpha with
i.i.d. standard complex Gaussian coefficients c_alpha and monomial
weights w_alpha making the monomials orthonormal for the Fubini-Study
inner product.  The two-point function is then the exact kernel treated
in the kernel module.

Evaluation is done on unit homogeneous vectors.  Each weighted monomial
is bounded by a slowly growing function of N on the unit sphere, so this
path neither overflows nor underflows at any supported degree; it also
makes values manifestly chart-independent.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ChartSingular, DegreeTooLarge, UnsupportedDimension
from .geometry import SUPPORTED_M, ProjectivePoint, to_chart
from .rng import complex_standard_normal, substream

# Degree caps keep coefficient magnitudes, node counts, and root-finder
# conditioning inside the validated envelope.
N_MAX = {1: 1000, 2: 60, 3: 25}


def check_degree(N: int, m: int) -> None:
    if m not in SUPPORTED_M:
        raise UnsupportedDimension(f"m={m} not supported")
    if N < 1 or N > N_MAX[m]:
        raise DegreeTooLarge(f"N={N} outside [1, {N_MAX[m]}] for m={m}")


def multi_indices(N: int, m: int) -> np.ndarray:
    """Exponents alpha with |alpha| <= N, ascending lexicographic, (d_N, m)."""
    if m == 1:
        return np.arange(N + 1, dtype=np.int64)[:, None]
    idx = [a for a in itertools.product(range(N + 1), repeat=m) if sum(a) <= N]
    return np.array(idx, dtype=np.int64)


def basis_dimension(N: int, m: int) -> int:
    return math.comb(N + m, m)


@dataclass(frozen=True)
class BasisWeights:
    """Monomial weights w_alpha, kept in log space.

    w_alpha^2 = (N+m)! / (pi^m alpha! (N-|alpha|)!), so that
    sum_alpha w_alpha^2 |Z^(N-|alpha|,alpha)|^2 = binom(N+m,m) m!/pi^m on
    unit vectors (the constant kernel diagonal).
    """

    degree: int
    m: int
    indices: np.ndarray
    log_weights: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    @property
    def dim(self) -> int:
        return self.log_weights.shape[0]


def basis_weights(N: int, m: int) -> BasisWeights:
    check_degree(N, m)
    idx = multi_indices(N, m)
    total = idx.sum(axis=1)
    logw = 0.5 * (gammaln(N + m + 1) - m * np.log(np.pi)
                  - gammaln(idx + 1.0).sum(axis=1) - gammaln(N - total + 1.0))
    return BasisWeights(degree=N, m=m, indices=idx, log_weights=logw)


@dataclass(frozen=True)
class Section:
    """Random section: degree, dimension, complex coefficient vector.

    seed is (master_seed, trial_index) when the section came from a
    reproducible substream, else None.
    """

    degree: int
    m: int
    coeffs: np.ndarray
    seed: tuple | None = None

    def __post_init__(self):
        check_degree(self.degree, self.m)
        c = np.ascontiguousarray(self.coeffs, dtype=np.complex128)
        if c.shape != (basis_dimension(self.degree, self.m),):
            raise ValueError("coefficient vector has wrong length")
        object.__setattr__(self, "coeffs", c)


def sample_coeff_block(N: int, m: int, master_seed: int, trial_start: int,
                       n_trials: int) -> np.ndarray:
    """Coefficient rows for trials [trial_start, trial_start + n_trials).

    Row i is drawn entirely from substream (master_seed, trial_start + i),
    so any batching produces bit-identical coefficients.
    """
    check_degree(N, m)
    d = basis_dimension(N, m)
    out = np.empty((n_trials, d), dtype=np.complex128)
    for i in range(n_trials):
        rng = substream(master_seed, trial_start + i)
        out[i] = complex_standard_normal(rng, d)
    return out


def sample_section(N: int, m: int, master_seed: int, trial_index: int = 0) -> Section:
    coeffs = sample_coeff_block(N, m, master_seed, trial_index, 1)[0]
    return Section(degree=N, m=m, coeffs=coeffs, seed=(master_seed, trial_index))


def basis_matrix(bw: BasisWeights, Z: np.ndarray) -> np.ndarray:
    """Weighted monomials at unit homogeneous vectors: (n_points, d_N).

    Z has shape (n, m+1); column alpha holds
    w_alpha Z_0^(N-|alpha|) Z_1^alpha_1 ... Z_m^alpha_m.
    """
    N, m = bw.degree, bw.m
    Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
    n = Z.shape[0]
    pows = np.empty((m + 1, n, N + 1), dtype=np.complex128)
    pows[:, :, 0] = 1.0
    for k in range(1, N + 1):
        pows[:, :, k] = pows[:, :, k - 1] * Z.T
    total = bw.indices.sum(axis=1)
    M = pows[0][:, N - total]
    for j in range(m):
        M = M * pows[j + 1][:, bw.indices[:, j]]
    return M * bw.weights[None, :]


def values_many(coeffs: np.ndarray, Z: np.ndarray, bw: BasisWeights,
                chunk: int = 4096) -> np.ndarray:
    """Metric values of sections at points: (n_trials, n_points) complex.

    The returned numbers have modulus ||s(z)||_(h^N): the monomial basis
    is unitary up to the common normalization, giving typical magnitude
    sqrt(kernel diagonal), safely inside double range.
    """
    coeffs = np.atleast_2d(coeffs)
    Z = np.atleast_2d(Z)
    out = np.empty((coeffs.shape[0], Z.shape[0]), dtype=np.complex128)
    for start in range(0, Z.shape[0], chunk):
        M = basis_matrix(bw, Z[start:start + chunk])
        out[:, start:start + chunk] = coeffs @ M.T
    return out


def log_norm_many(coeffs: np.ndarray, Z: np.ndarray, bw: BasisWeights,
                  chunk: int = 4096) -> np.ndarray:
    """log ||s(z)||_(h^N) for a batch of sections at many points."""
    coeffs = np.atleast_2d(coeffs)
    Z = np.atleast_2d(Z)
    out = np.empty((coeffs.shape[0], Z.shape[0]), dtype=np.float64)
    for start in range(0, Z.shape[0], chunk):
        M = basis_matrix(bw, Z[start:start + chunk])
        vals = coeffs @ M.T
        np.log(np.abs(vals), out=out[:, start:start + chunk])
    return out


@dataclass(frozen=True)
class PolarValue:
    """A section value in polar form: phase on the unit circle, log modulus."""

    phase: complex
    log_mag: float

    @property
    def value(self) -> complex:
        return self.phase * math.exp(self.log_mag)


def _bw_cache(section: Section) -> BasisWeights:
    key = (section.degree, section.m)
    bw = _BW_CACHE.get(key)
    if bw is None:
        bw = basis_weights(section.degree, section.m)
        if len(_BW_CACHE) > 8:
            _BW_CACHE.clear()
        _BW_CACHE[key] = bw
    return bw


_BW_CACHE: dict = {}


def eval_poly(section: Section, point, chart: int | None = None) -> PolarValue:
    """Evaluate the metric-normalized value of s at one point, polar form.

    Linear in the section: value(s + t) = value(s) + value(t).  With
    chart=None the numerically best (max-modulus) path is used; passing a
    chart index forces evaluation through that affine chart, which is the
    hook for chart-invariance checks.
    """
    Z = np.asarray(getattr(point, "homog", point), dtype=np.complex128)
    Z = Z / np.linalg.norm(Z)
    bw = _bw_cache(section)
    if chart is None:
        val = values_many(section.coeffs[None, :], Z[None, :], bw)[0, 0]
        mag = abs(val)
        if mag == 0.0:
            return PolarValue(phase=1.0 + 0j, log_mag=-np.inf)
        return PolarValue(phase=val / mag, log_mag=float(np.log(mag)))
    # Forced chart: evaluate through the affine representative (1 in the
    # pivot slot), a genuinely different floating-point path per chart.
    c = to_chart(ProjectivePoint(Z), chart)
    vec = np.insert(c.w, chart, 1.0 + 0j)
    scale = np.linalg.norm(vec)
    if not np.isfinite(scale) or scale > 1e12:
        raise ChartSingular("affine representative too large in forced chart")
    val = values_many(section.coeffs[None, :], (vec / scale)[None, :], bw)[0, 0]
    mag = abs(val)
    if mag == 0.0:
        return PolarValue(phase=1.0 + 0j, log_mag=-np.inf)
    return PolarValue(phase=val / mag, log_mag=float(np.log(mag)))


def eval_log_norm(section: Section, point, chart: int | None = None) -> float:
    """log ||s(z)||_(h^N); chart-independent up to roundoff."""
    return eval_poly(section, point, chart=chart).log_mag


def section_to_record(section: Section) -> dict:
    return {
        "degree": section.degree,
        "m": section.m,
        "seed": list(section.seed) if section.seed is not None else None,
        "coeffs": [[float(c.real), float(c.imag)] for c in section.coeffs],
    }


def section_from_record(record: dict) -> Section:
    coeffs = np.array([complex(re, im) for re, im in record["coeffs"]])
    seed = tuple(record["seed"]) if record.get("seed") is not None else None
    return Section(degree=int(record["degree"]), m=int(record["m"]),
                   coeffs=coeffs, seed=seed)


def section_to_json(section: Section) -> str:
    return json.dumps(section_to_record(section))


def section_from_json(text: str) -> Section:
    return section_from_record(json.loads(text))
