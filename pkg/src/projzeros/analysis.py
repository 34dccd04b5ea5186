"""Estimators, exact variance quadrature, and limiting variance forms.

The centerpiece formulas:

* the two-point function of the log field is gtilde of the normalized
  kernel, so the variance of a smooth linear statistic is the double
  integral  Var = int int gtilde(cos^N d(z, w)) psi(z) psi(w) Omega^2;
* its large-N limit per unit N^(2k-m-2) is a Hermitian form on the
  coefficients of the test form, assembled from integrals of
  F(|v|^2/2) {var_infty(v)}^(j-1) against constant-coefficient forms.

Quadratures are designed to be exact where the integrand is band
limited (rotation-invariant inner operator, geodesic circles, moment
rules on moduli-times-phase coordinates) and spectrally accurate in the
remaining radial directions.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre, zeta
from scipy.stats import kstest, kurtosis, skew

from .bipotential import f_derivs, gtilde, var_infty_parts
from .errors import (IntegrationUnstable, TooFewSamples,
                     UnsupportedDimension)
from .forms import (FormElement, _permutation_sign, dv_top_tuple, gen_dv,
                    gen_dvbar, gen_dz, gen_dzbar, kahler_form)
from .geometry import (SUPPORTED_M, CapRegion, NormalFrame, ProjectivePoint,
                       build_grid, cap_boundary_length, fs_volume)
from .statistics import (TrialBlock, count_evaluator, pl_trials, roots_trials,
                         statistic_evaluator)
from .testforms import TestForm, form_from_params


# ---------------------------------------------------------------------------
# sample estimates

@dataclass(frozen=True)
class Estimate:
    """Monte Carlo summary with jackknife error on the variance."""

    n: int
    mean: float
    stderr_mean: float
    variance: float
    stderr_variance: float


def mc_estimate(values: np.ndarray) -> Estimate:
    """Mean and variance of a sample with standard errors for both.

    The error on the variance is the delete-one jackknife, which stays
    honest for the heavy-ish tails of counting statistics.
    """
    x = np.asarray(values, dtype=np.float64).ravel()
    n = x.size
    if n < 8:
        raise TooFewSamples(f"need at least 8 samples, got {n}")
    mean = x.mean()
    var = x.var(ddof=1)
    s1 = x.sum()
    s2 = (x * x).sum()
    mu_i = (s1 - x) / (n - 1)
    v_i = (s2 - x * x - (n - 1) * mu_i * mu_i) / (n - 2)
    se_var = math.sqrt(max((n - 1) / n * ((v_i - v_i.mean()) ** 2).sum(), 0.0))
    return Estimate(n=n, mean=float(mean),
                    stderr_mean=float(math.sqrt(var / n)),
                    variance=float(var), stderr_variance=se_var)


def normality_test(values: np.ndarray) -> dict:
    """KS distance to the fitted normal plus shape moments."""
    x = np.asarray(values, dtype=np.float64).ravel()
    if x.size < 100:
        raise TooFewSamples(f"need at least 100 samples, got {x.size}")
    z = (x - x.mean()) / x.std(ddof=1)
    ks = kstest(z, "norm")
    return {
        "n": int(x.size),
        "ks_stat": float(ks.statistic),
        "ks_pvalue": float(ks.pvalue),
        "skewness": float(skew(x)),
        "excess_kurtosis": float(kurtosis(x)),
    }


# ---------------------------------------------------------------------------
# elementary quadrature builders

def _panel_gauss(edges, n: int):
    """Gauss-Legendre nodes/weights on consecutive panels."""
    x, w = roots_legendre(n)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * x + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def sphere_surface(m: int) -> float:
    """Surface measure of the unit sphere S^(2m-1) in C^m."""
    return 2.0 * math.pi ** m / math.factorial(m - 1)


def sphere_rule(m: int, deg: int):
    """Nodes/weights on S^(2m-1) in C^m, exact for v^a vbar^b, |a|,|b| <= deg.

    Coordinates are moduli on the simplex (stick-breaking Gauss nodes)
    times independent uniform phases; weights sum to the surface area.
    An n-point uniform phase rule kills e^(i k theta) for 0 < |k| < n,
    and per-coordinate phase exponents are bounded by deg, so deg + 1
    phase points per coordinate are exact.
    """
    n_th = deg + 1
    th = 2.0 * math.pi * np.arange(n_th) / n_th
    if m == 1:
        v = np.exp(1j * th)[:, None]
        w = np.full(n_th, 2.0 * math.pi / n_th)
        return v, w
    gx, gw = roots_legendre(deg + 2)
    gx = 0.5 * (gx + 1.0)
    gw = 0.5 * gw
    if m == 2:
        t, wt = gx, gw
        moduli = np.stack([t, 1.0 - t], axis=1)
    elif m == 3:
        x1, x2 = np.meshgrid(gx, gx, indexing="ij")
        w1, w2 = np.meshgrid(gw, gw, indexing="ij")
        x1, x2 = x1.ravel(), x2.ravel()
        moduli = np.stack([x1, (1 - x1) * x2, (1 - x1) * (1 - x2)], axis=1)
        wt = (w1 * w2).ravel() * (1 - x1)
    else:
        raise UnsupportedDimension(f"sphere rule needs m in {SUPPORTED_M}")
    phase_grids = np.meshgrid(*([th] * m), indexing="ij")
    phases = np.stack([p.ravel() for p in phase_grids], axis=1)
    amp = np.sqrt(moduli)
    v = amp[:, None, :] * np.exp(1j * phases)[None, :, :]
    v = v.reshape(-1, m)
    simplex_vol = 1.0 / math.factorial(m - 1)
    w = np.repeat(wt / simplex_vol, phases.shape[0]) / n_th ** m
    w = w * sphere_surface(m)
    return v, w


def cpm_moment_rule(m: int, deg: int):
    """Grid on CP^m exact for bidegree <= (deg, deg) monomials in Z.

    Fubini-Study measure pushes forward to uniform moduli on the simplex
    times uniform phases; weights sum to Vol(CP^m).
    """
    v, w = sphere_rule(m + 1, deg)
    return v, w * fs_volume(m) / sphere_surface(m + 1)


# ---------------------------------------------------------------------------
# the universal smooth-statistics constant

def universal_integral(m: int, gfun=None, n_nodes: int = 80) -> float:
    """int_{C^m} gtilde(e^(-|v|^2/2)) dLeb by radial quadrature.

    gfun(r) may replace the default radial profile, e.g. to integrate one
    series term at a time; closed form pi^(m-2) zeta(m+2) / 4.
    """
    if m not in SUPPORTED_M:
        raise UnsupportedDimension(f"m must be in {SUPPORTED_M}")
    if gfun is None:
        def gfun(r):
            return gtilde(np.exp(-0.5 * r * r))
    r, w = _panel_gauss([0.0, 0.25, 1.0, 3.0, 12.0], n_nodes)
    profile = gfun(r) * r ** (2 * m - 1)
    return float(sphere_surface(m) * np.dot(w, profile))


def leading_constants(m: int) -> dict:
    """Closed-form constants of the large-N regime."""
    if m not in SUPPORTED_M:
        raise UnsupportedDimension(f"m must be in {SUPPORTED_M}")
    out = {
        "universal": math.pi ** (m - 2) * float(zeta(m + 2)) / 4.0,
        "counting": math.pi ** (m - 2.5) * float(zeta(m + 0.5)) / 8.0,
    }
    if m == 1:
        out["smooth_m1"] = float(zeta(3)) / (16.0 * math.pi)
    return out


# ---------------------------------------------------------------------------
# exact variance of a smooth statistic at finite N

@dataclass(frozen=True)
class VarianceQuad:
    """Result of the double-integral variance quadrature."""

    N: int
    m: int
    value: float
    far_bound: float
    r_cut: float
    n_evals: int


def _radial_cut(N: int, m: int) -> float:
    if N < 3:
        return 0.5 * math.pi
    return min(math.sqrt((m + 4.0) * math.log(N) / N), 0.5 * math.pi)


def variance_quadrature(N: int, form: TestForm, n_outer: int = 24,
                        n_radial: int = 32, n_theta: int = 48,
                        outer_chunk: int = 64) -> VarianceQuad:
    """Var (Z_s, phi) = int int gtilde(cos^N d) psi psi Omega^2, exactly.

    The inner operator is rotation invariant, so the inner integral of a
    band-limited psi is band limited: the outer grid (product Gauss for
    m = 1, a moment rule for m = 2) then integrates psi times the inner
    integral exactly, and only the short radial direction is generic
    quadrature.  Kernel values beyond the cut radius contribute at most
    far_bound in absolute value.
    """
    m = form.m
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    rc = _radial_cut(N, m)
    r, wr = _panel_gauss([0.0, rc / 4.0, rc], n_radial)
    ker = gtilde(np.cos(r) ** N)

    if m == 1:
        grid = build_grid(1, n_outer, "product_gauss")
        Z = grid.nodes_homog
        Wout = grid.weights
        radial = ker * 0.5 * np.sin(2.0 * r) * wr
        th = 2.0 * math.pi * np.arange(n_theta) / n_theta
        ph = np.exp(1j * th)
        total = 0.0
        n_evals = 0
        psi_out = form.psi_many(Z)
        for s in range(0, Z.shape[0], outer_chunk):
            Zc = Z[s:s + outer_chunk]
            Zp = np.stack([-np.conj(Zc[:, 1]), np.conj(Zc[:, 0])], axis=1)
            w_pts = (np.cos(r)[None, :, None, None] * Zc[:, None, None, :]
                     + np.sin(r)[None, :, None, None] * ph[None, None, :, None]
                     * Zp[:, None, None, :])
            psi_in = form.psi_many(w_pts.reshape(-1, 2)).reshape(
                Zc.shape[0], r.size, n_theta)
            inner = np.einsum("bqt,q->b", psi_in, radial) * (2 * math.pi / n_theta)
            total += np.dot(Wout[s:s + outer_chunk] * psi_out[s:s + outer_chunk],
                            inner)
            n_evals += psi_in.size
    elif m == 2:
        nodes, Wout = cpm_moment_rule(2, 3)
        psi_out = form.psi_many(nodes)
        xi, wxi = sphere_rule(2, 2)
        radial = ker * np.sin(r) ** 3 * np.cos(r) * wr
        total = 0.0
        n_evals = 0
        for b in range(nodes.shape[0]):
            U = NormalFrame(ProjectivePoint(nodes[b])).unitary
            dirs = xi @ U[:, 1:].T
            w_pts = (np.cos(r)[:, None, None] * U[:, 0][None, None, :]
                     + np.sin(r)[:, None, None] * dirs[None, :, :])
            psi_in = form.psi_many(w_pts.reshape(-1, 3)).reshape(r.size, -1)
            inner = np.dot(radial, psi_in @ wxi)
            total += Wout[b] * psi_out[b] * inner
            n_evals += psi_in.size
    else:
        raise UnsupportedDimension("variance quadrature supports m = 1, 2")

    t_far = math.cos(rc) ** N if rc < 0.5 * math.pi else 0.0
    abs_psi = float(np.dot(np.abs(Wout), np.abs(psi_out)))
    far_bound = float(gtilde(np.array([t_far]))[0] * abs_psi ** 2)
    return VarianceQuad(N=N, m=m, value=float(total), far_bound=far_bound,
                        r_cut=rc, n_evals=n_evals)


def funk_hecke_variance(N: int, harmonic_l: int, psi_l2_sq: float,
                        n_nodes: int = 400) -> float:
    """One-dimensional oracle for the m = 1 variance of a pure harmonic.

    The kernel acts diagonally on spherical harmonics; the eigenvalue is
    a Legendre transform of the radial profile, giving

        Var = pi ||psi||^2 int_0^(pi/2) gtilde(cos^N r)
                                P_l(cos 2r) sin(2r) dr.
    """
    from scipy.special import eval_legendre

    rc = _radial_cut(N, 1)
    r, w = _panel_gauss([0.0, rc / 4.0, rc, 0.5 * math.pi], n_nodes)
    prof = gtilde(np.cos(r) ** N) * eval_legendre(harmonic_l, np.cos(2 * r)) \
        * np.sin(2 * r)
    return float(math.pi * psi_l2_sq * np.dot(w, prof))


# ---------------------------------------------------------------------------
# kernel-side finite differences for the universal density

def var_top_m1(v_abs: float) -> float:
    """Top coefficient of var_infty at |v| = v_abs for m = 1,

        C(v) = -(1/16) F'''' |v|^4 - (1/2) F''' |v|^2 - (1/2) F''

    evaluated at lam = |v|^2/2; the coefficient of dz dzbar dv dvbar.
    """
    lam = 0.5 * v_abs * v_abs
    return (-f_derivs(lam, 4) / 16.0 * v_abs ** 4
            - f_derivs(lam, 3) / 2.0 * v_abs ** 2
            - f_derivs(lam, 2) / 2.0)


def q_mixed_fd(N: int, v_abs: float, h0: float = 0.25) -> float:
    """-(1/N^2) d_a d_abar d_b d_bbar gtilde(P_N) by finite differences.

    Exact m = 1 chart formula for the bipotential of the degree-N kernel
    between z = a and w = v/sqrt(N) + b; mixed fourth derivative via
    nested five-point Laplacians with one Richardson step.  Converges to
    var_top_m1(v_abs) as N grows.
    """
    w0 = v_abs / math.sqrt(N)

    def Q(a, b):
        w = w0 + b
        aw = a * np.conj(w)
        lam = 0.5 * N * (np.log1p(np.abs(a) ** 2) + np.log1p(np.abs(w) ** 2)
                         - np.log1p(2.0 * aw.real + np.abs(aw) ** 2))
        lam = np.maximum(lam, 1e-18)
        return f_derivs(lam, 0)

    def lap4(h):
        offs = np.array([0.0, h, -h, 1j * h, -1j * h])
        coef = np.array([-4.0, 1.0, 1.0, 1.0, 1.0])
        vals = Q(offs[:, None], offs[None, :])
        return float(np.einsum("i,j,ij->", coef, coef, vals)) / h ** 4

    h = h0 / math.sqrt(N)
    d_h, d_h2 = lap4(h), lap4(0.5 * h)
    richardson = (4.0 * d_h2 - d_h) / 3.0
    return -richardson / (16.0 * N * N)


# ---------------------------------------------------------------------------
# limiting variance forms

@dataclass(frozen=True)
class HermitianFormMatrix:
    """Limit variance form on coefficient vectors of (p, p)-forms.

    Basis element (A, B) stands for (i/2)^p dz^A wedge dzbar^B with A, B
    ascending index tuples, pairs ordered lexicographically.  The value
    on a test form with coefficients x is x^H M x, normalized so the
    (m, 1) matrix is the scalar universal constant.
    """

    m: int
    k: int
    basis: tuple
    matrix: np.ndarray
    eigenvalues: np.ndarray
    hermiticity_error: float
    refinement_delta: float

    def labels(self) -> list:
        return ["".join(str(i) for i in A) + "|" + "".join(str(i) for i in B)
                for A, B in self.basis]


def _basis_pairs(m: int, p: int) -> list:
    combos = list(itertools.combinations(range(m), p))
    return [(A, B) for A in combos for B in combos]


def _ref_full(m: int) -> tuple:
    out = []
    for j in range(m):
        out.append(gen_dz(m, j))
        out.append(gen_dzbar(m, j))
    return tuple(out) + dv_top_tuple(m)


def _pair_coefficient(P: FormElement, plug: tuple, full_sorted: tuple,
                      ref_sign: int) -> complex:
    """Coefficient of P wedge (plug generators) on the reference volume."""
    comp = tuple(sorted(set(full_sorted) - set(plug)))
    c = P.terms.get(comp, 0.0)
    if c == 0:
        return 0.0 + 0j
    return complex(c) * _permutation_sign(comp + plug, full_sorted) * ref_sign


def _plug_gens(m: int, J, K, A, B) -> tuple:
    # second slot is conjugated: its dz indices are B, its dzbar indices A
    return (tuple(gen_dv(m, i) for i in J) + tuple(gen_dvbar(m, i) for i in K)
            + tuple(gen_dz(m, i) for i in B) + tuple(gen_dzbar(m, i) for i in A))


def _radial_rule(m: int, n_panel: int):
    edges = [0.0]
    e = 1e-4
    while e < 8.0:
        edges.append(e)
        e *= 2.0
    edges.append(8.0)
    return _panel_gauss(edges, n_panel)


_KEYS = {
    1: [()],
    2: [(4,), (3,), (2,)],
    3: [(4, 4), (4, 3), (4, 2), (3, 3), (3, 2), (2, 2)],
}


def _radial_integrals(m: int, j: int, r: np.ndarray, wr: np.ndarray) -> dict:
    lam = 0.5 * r * r
    F = f_derivs(lam, 0)
    meas = wr * r ** (2 * m - 1)
    fd = {2: f_derivs(lam, 2), 3: f_derivs(lam, 3), 4: f_derivs(lam, 4)}
    power = {2: 1.0, 3: r * r, 4: r ** 4}
    out = {}
    for key in _KEYS[j]:
        prof = F.copy()
        mult = 1.0
        for q in key:
            prof = prof * fd[q] * power[q]
        if len(key) == 2 and key[0] != key[1]:
            mult = 2.0
        out[key] = mult * float(np.dot(meas, prof))
    return out


def _angular_forms(j: int, s4, s3, s2) -> dict:
    if j == 1:
        return {(): FormElement.scalar(s4.m, 1.0)}
    if j == 2:
        return {(4,): s4, (3,): s3, (2,): s2}
    return {(4, 4): s4.wedge(s4), (4, 3): s4.wedge(s3), (4, 2): s4.wedge(s2),
            (3, 3): s3.wedge(s3), (3, 2): s3.wedge(s2), (2, 2): s2.wedge(s2)}


def _angular_matrices(m: int, j: int, vhat, wv) -> dict:
    """Sphere integrals of the angular coefficient, one matrix per key.

    Radial profiles never enter here, so refinement of the radial rule
    reuses these; the angular rule itself is exact by construction.
    """
    pj = m - j + 1
    pairs = _basis_pairs(m, pj)
    if j == 1:
        # angular integrand is constant; one node carries the whole sphere
        vhat = np.zeros((1, m), dtype=np.complex128)
        vhat[0, 0] = 1.0
        wv = np.array([sphere_surface(m)])
    full_ref = _ref_full(m)
    full_sorted = tuple(sorted(full_ref))
    ref_sign = _permutation_sign(full_ref, full_sorted)
    plugs = [_plug_gens(m, J, K, A, B)
             for (J, K) in pairs for (A, B) in pairs]
    n = len(pairs)
    out = {key: np.zeros((n, n), dtype=np.complex128) for key in _KEYS[j]}
    for s in range(vhat.shape[0]):
        s4, s3, s2 = var_infty_parts(vhat[s])
        ang = _angular_forms(j, s4, s3, s2)
        for key, form in ang.items():
            M = out[key]
            idx = 0
            for row in range(n):
                for col in range(n):
                    c = _pair_coefficient(form, plugs[idx], full_sorted,
                                          ref_sign)
                    idx += 1
                    if c != 0:
                        M[row, col] += wv[s] * c
    return out


def _bj_matrix(m: int, j: int, k: int, r, wr, vhat, wv,
               ang: dict | None = None) -> np.ndarray:
    pj = m - j + 1
    rad = _radial_integrals(m, j, r, wr)
    if ang is None:
        ang = _angular_matrices(m, j, vhat, wv)
    n = next(iter(ang.values())).shape[0]
    M = np.zeros((n, n), dtype=np.complex128)
    for key in _KEYS[j]:
        M += rad[key] * ang[key]
    sign = (-1.0) ** pj * (-4.0) ** m / 4.0 ** pj
    return M * sign * math.pi ** (2 * (j - k))


def _omega_lift(m: int, k: int, j: int) -> np.ndarray:
    """Coefficient map of wedging with the Kahler form k - j times."""
    p, pj = m - k + 1, m - j + 1
    src = _basis_pairs(m, p)
    dst = _basis_pairs(m, pj)
    kz = kahler_form(m, "z").wedge_pow(k - j)
    T = np.zeros((len(dst), len(src)), dtype=np.complex128)
    for col, (A, B) in enumerate(src):
        gens = tuple(gen_dz(m, i) for i in A) + tuple(gen_dzbar(m, i) for i in B)
        e = FormElement.monomial(m, gens, (0.5j) ** p)
        lifted = kz.wedge(e)
        for row, (J, K) in enumerate(dst):
            ref = tuple(gen_dz(m, i) for i in J) \
                + tuple(gen_dzbar(m, i) for i in K)
            T[row, col] = lifted.coefficient_of(ref) / (0.5j) ** pj
    return T


def bmk_form(m: int, k: int, n_panel: int = 12, deg_margin: int = 0,
             refine: bool = True) -> HermitianFormMatrix:
    """Limit variance form for codimension-k smooth statistics on CP^m.

    Assembled as sum over j <= k of binom(k, j) times the j-th kernel
    moment matrix pulled back through wedging with omega^(k-j).  Angular
    integrals use moment rules exact at the polynomial degree that
    occurs (deg_margin can push the degree up; exactness also has its
    own unit checks); the radial panel rule is the one approximation,
    and refine recomputes it on finer panels and insists the matrix
    moves only at roundoff level.
    """
    if m not in SUPPORTED_M or not 1 <= k <= m:
        raise UnsupportedDimension(f"need m in {SUPPORTED_M} and 1 <= k <= m")

    def assemble(panels: int) -> np.ndarray:
        p = m - k + 1
        n = len(_basis_pairs(m, p))
        total = np.zeros((n, n), dtype=np.complex128)
        r, wr = _radial_rule(m, panels)
        for j in range(1, k + 1):
            Bj = _bj_matrix(m, j, k, r, wr, None, None, ang=angular[j])
            T = _omega_lift(m, k, j)
            total += math.comb(k, j) * T.conj().T @ Bj @ T
        return total

    angular = {}
    for j in range(1, k + 1):
        vhat, wv = sphere_rule(m, 2 * (j - 1) + deg_margin)
        angular[j] = _angular_matrices(m, j, vhat, wv)
    M = assemble(n_panel)
    delta = 0.0
    if refine:
        M2 = assemble(n_panel + 6)
        delta = float(np.abs(M - M2).max())
        scale = max(float(np.abs(M).max()), 1e-30)
        if delta > 1e-6 * scale:
            raise IntegrationUnstable(
                f"limit form for (m, k) = ({m}, {k}) moved by {delta:.3e} "
                "under refinement")
    herm = float(np.abs(M - M.conj().T).max())
    sym = 0.5 * (M + M.conj().T)
    eigs = np.linalg.eigvalsh(sym)
    return HermitianFormMatrix(m=m, k=k,
                               basis=tuple(_basis_pairs(m, m - k + 1)),
                               matrix=M, eigenvalues=eigs,
                               hermiticity_error=herm,
                               refinement_delta=delta)


# ---------------------------------------------------------------------------
# experiment drivers

EXPERIMENTS = ("mean", "variance_mc", "variance_quad", "counting",
               "normality", "route_agreement", "kernel_checks", "constants",
               "bmk")


@dataclass
class ExperimentConfig:
    """Validated run description; canonical JSON of this drives hashing."""

    experiment: str
    m: int = 1
    degrees: tuple = (100,)
    trials: int = 200
    seed: int = 2026
    family: str = "harmonic"
    params: dict = field(default_factory=dict)
    route: str = "auto"
    grid_kind: str = "jittered_qmc"
    grid_resolution: int = 256
    cap_radius: float = math.pi / 4
    k_codim: int = 1
    b_values: tuple = (2.0, 3.0)
    per_trial: bool = False
    allow_suspect: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment '{self.experiment}'; "
                             f"choose from {EXPERIMENTS}")
        if self.m not in SUPPORTED_M:
            raise ValueError(f"m must be in {SUPPORTED_M}")
        self.degrees = tuple(int(N) for N in np.atleast_1d(self.degrees))
        if any(N < 1 for N in self.degrees):
            raise ValueError("degrees must be positive")
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.route not in ("auto", "roots", "pl"):
            raise ValueError("route must be auto, roots, or pl")
        if self.route == "roots" and self.m != 1:
            raise ValueError("the roots route requires m = 1")
        self.b_values = tuple(float(b) for b in np.atleast_1d(self.b_values))
        if not 0.0 < self.cap_radius < 0.5 * math.pi:
            raise ValueError("cap_radius must lie in (0, pi/2)")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        allowed = set(cls.__dataclass_fields__)
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment, "m": self.m,
            "degrees": list(self.degrees), "trials": self.trials,
            "seed": self.seed, "family": self.family,
            "params": dict(self.params), "route": self.route,
            "grid_kind": self.grid_kind,
            "grid_resolution": self.grid_resolution,
            "cap_radius": self.cap_radius, "k_codim": self.k_codim,
            "b_values": list(self.b_values), "per_trial": self.per_trial,
            "allow_suspect": self.allow_suspect, "threads": self.threads,
        }


def _resolve_route(cfg: ExperimentConfig) -> str:
    if cfg.route != "auto":
        return cfg.route
    return "roots" if cfg.m == 1 else "pl"


def _default_form(cfg: ExperimentConfig) -> TestForm:
    if cfg.params:
        return form_from_params(cfg.family, cfg.m, cfg.params)
    if cfg.family == "harmonic":
        return form_from_params("harmonic", cfg.m, {"l": 2, "mu": 0})
    coefs = [1.0 + 0.5 * i for i in range(cfg.m + 1)]
    return form_from_params("hermitian", cfg.m, {"diag": coefs})


def _statistic_block(cfg: ExperimentConfig, N: int, form: TestForm,
                     route: str) -> TrialBlock:
    if route == "roots":
        return roots_trials(N, cfg.seed, cfg.trials, statistic_evaluator(form))
    grid = build_grid(cfg.m, cfg.grid_resolution, cfg.grid_kind,
                      seed=cfg.seed)
    return pl_trials(N, cfg.m, form, grid, cfg.seed, cfg.trials)


def _trial_rows(cfg, N, block: TrialBlock, extra: dict) -> list:
    rows = []
    for i in range(block.values.size):
        row = {
            "kind": "trial", "experiment": cfg.experiment, "N": N,
            "trial_index": int(block.trial_index[i]),
            "master_seed": cfg.seed,
            "value": float(np.real(block.values[i])),
            "route": block.route,
            "residual_log10": float(block.residual_log10[i]),
            "flag": block.flags[i],
        }
        row.update(extra)
        rows.append(row)
    return rows


def run_experiment(cfg: ExperimentConfig) -> tuple:
    """Dispatch a config to its driver; returns (records, extras)."""
    driver = _DRIVERS[cfg.experiment]
    return driver(cfg)


def _drive_moments(cfg: ExperimentConfig) -> tuple:
    form = _default_form(cfg)
    route = _resolve_route(cfg)
    records, trials_rows, discarded = [], [], 0
    for N in cfg.degrees:
        block = _statistic_block(cfg, N, form, route)
        est = mc_estimate(np.real(block.values))
        discarded += len(block.discarded)
        expected = form.expected_mean(N)
        rec = {
            "kind": "summary", "experiment": cfg.experiment, "m": cfg.m,
            "N": N, "family": form.family, "label": form.label,
            "route": route, "trials": cfg.trials, "used": est.n,
            "discarded": len(block.discarded),
            "mean": est.mean, "stderr_mean": est.stderr_mean,
            "expected_mean": expected,
            "z_mean": (est.mean - expected) / est.stderr_mean,
            "variance": est.variance,
            "stderr_variance": est.stderr_variance,
            "nvar": N * est.variance,
        }
        if cfg.m == 1:
            limit = leading_constants(1)["smooth_m1"] * form.delta_l2_sq
            rec["limit_nvar"] = limit
            rec["nvar_over_limit"] = N * est.variance / limit
        records.append(rec)
        if cfg.per_trial:
            trials_rows.extend(_trial_rows(cfg, N, block, {}))
    return records + trials_rows, {"discarded_trials": discarded}


def _drive_variance_quad(cfg: ExperimentConfig) -> tuple:
    form = _default_form(cfg)
    records = []
    for N in cfg.degrees:
        q = variance_quadrature(N, form)
        rec = {
            "kind": "summary", "experiment": "variance_quad", "m": cfg.m,
            "N": N, "family": form.family, "label": form.label,
            "value": q.value, "far_bound": q.far_bound, "r_cut": q.r_cut,
            "nvar": N * q.value,
        }
        if cfg.m == 1:
            limit = leading_constants(1)["smooth_m1"] * form.delta_l2_sq
            rec["limit_nvar"] = limit
            rec["nvar_over_limit"] = N * q.value / limit
            rec["remainder"] = abs(N * q.value / limit - 1.0)
        records.append(rec)
    return records, {"discarded_trials": 0}


def _count_blocks(degrees, cap: CapRegion, trials: int, master_seed: int):
    # antipodal complement counted in the same pass: counts summing to
    # N on every trial is a strong zero-finder consistency check
    h = cap.center.homog
    anti = ProjectivePoint(np.stack([-np.conj(h[1]), np.conj(h[0])]))
    anticap = CapRegion(anti, 0.5 * math.pi - cap.radius)
    nu = leading_constants(1)["counting"]
    ev_main = count_evaluator(cap)
    ev_anti = count_evaluator(anticap)

    def both(roots_affine):
        return ev_main(roots_affine) + 1j * ev_anti(roots_affine)

    for N in np.atleast_1d(degrees):
        N = int(N)
        block = roots_trials(N, master_seed, trials, both)
        counts = np.real(block.values)
        anticounts = np.imag(block.values)
        est = mc_estimate(counts)
        pred = math.sqrt(N) * nu * cap_boundary_length(cap)
        yield {
            "kind": "summary", "experiment": "counting", "m": 1, "N": N,
            "cap_radius": cap.radius, "trials": trials,
            "used": est.n, "discarded": len(block.discarded),
            "mean_count": est.mean,
            "expected_count": N * math.sin(cap.radius) ** 2,
            "variance": est.variance,
            "stderr_variance": est.stderr_variance,
            "predicted_variance": pred,
            "ratio": est.variance / pred,
            "complement_ok": bool(np.all(counts + anticounts == N)),
        }, block


def counting_variance_experiment(degrees, cap: CapRegion, trials: int,
                                 master_seed: int = 2026) -> list:
    """Cap-count variance vs the sqrt(N) boundary-length prediction.

    One row per degree: sample variance of the number of zeros in the
    cap with its jackknife error, the prediction sqrt(N) nu |boundary|,
    and their ratio.
    """
    return [row for row, _ in _count_blocks(degrees, cap, trials,
                                            master_seed)]


def _drive_counting(cfg: ExperimentConfig) -> tuple:
    if cfg.m != 1:
        raise UnsupportedDimension("counting experiment runs at m = 1")
    center = ProjectivePoint(np.array([1.0 + 0j, 0.0 + 0j]))
    cap = CapRegion(center, cfg.cap_radius)
    records, trials_rows, discarded = [], [], 0
    for row, block in _count_blocks(cfg.degrees, cap, cfg.trials, cfg.seed):
        discarded += len(block.discarded)
        records.append(row)
        if cfg.per_trial:
            trials_rows.extend(_trial_rows(cfg, row["N"], block,
                                           {"cap_radius": cfg.cap_radius}))
    return records + trials_rows, {"discarded_trials": discarded}


def _drive_normality(cfg: ExperimentConfig) -> tuple:
    form = _default_form(cfg)
    route = _resolve_route(cfg)
    records, discarded = [], 0
    for N in cfg.degrees:
        block = _statistic_block(cfg, N, form, route)
        stats = normality_test(np.real(block.values))
        discarded += len(block.discarded)
        stats.update({
            "kind": "summary", "experiment": "normality", "m": cfg.m, "N": N,
            "family": form.family, "label": form.label, "route": route,
            "discarded": len(block.discarded),
        })
        records.append(stats)
    return records, {"discarded_trials": discarded}


def _drive_route_agreement(cfg: ExperimentConfig) -> tuple:
    if cfg.m != 1:
        raise UnsupportedDimension("route agreement compares m = 1 routes")
    form = _default_form(cfg)
    tol = 1e-3 * form.sup_phi
    records = []
    trials_rows = []
    total_flagged = 0
    for N in cfg.degrees:
        rblock = roots_trials(N, cfg.seed, cfg.trials,
                              statistic_evaluator(form))
        grid = build_grid(1, cfg.grid_resolution, cfg.grid_kind, seed=cfg.seed)
        refine = build_grid(1, (3 * cfg.grid_resolution) // 2, cfg.grid_kind,
                            seed=cfg.seed + 1)
        pblock = pl_trials(N, 1, form, grid, cfg.seed, cfg.trials,
                           refine_grid=refine, flag_tol=tol)
        keep = np.isin(pblock.trial_index, rblock.trial_index)
        diffs = np.abs(np.real(rblock.values)
                       - np.real(pblock.values[keep]))
        flags_kept = [f for f, k in zip(pblock.flags, keep) if k]
        flagged = sum(1 for f in pblock.flags if f == "suspect")
        total_flagged += flagged
        records.append({
            "kind": "summary", "experiment": "route_agreement", "m": 1,
            "N": N, "family": form.family, "label": form.label,
            "trials": cfg.trials, "used": int(diffs.size),
            "grid_kind": cfg.grid_kind,
            "grid_resolution": cfg.grid_resolution,
            "max_abs_diff": float(diffs.max()),
            "rms_diff": float(np.sqrt(np.mean(diffs ** 2))),
            "tol": tol, "n_flagged": flagged,
            "n_beyond_tol": int(np.sum(diffs > tol)),
        })
        if cfg.per_trial:
            for i in range(diffs.size):
                trials_rows.append({
                    "kind": "trial", "experiment": "route_agreement", "N": N,
                    "trial_index": int(rblock.trial_index[i]),
                    "master_seed": cfg.seed,
                    "value": float(np.real(rblock.values[i])),
                    "value_pl": float(np.real(pblock.values[keep][i])),
                    "abs_diff": float(diffs[i]),
                    "flag": flags_kept[i],
                })
    return records + trials_rows, {"discarded_trials": 0,
                                   "flagged_trials": total_flagged}


def _drive_kernel_checks(cfg: ExperimentConfig) -> tuple:
    from .kernel import far_decay_report, kernel_context

    records = []
    for N in cfg.degrees:
        ctx = kernel_context(N, cfg.m)
        for b in cfg.b_values:
            rep = far_decay_report(ctx, b, seed=cfg.seed)
            rep.update({"kind": "summary", "experiment": "kernel_checks",
                        "m": cfg.m})
            records.append(rep)
    return records, {"discarded_trials": 0}


def _drive_constants(cfg: ExperimentConfig) -> tuple:
    """Every closed-form constant per dimension, with the universal one
    cross-checked against its quadrature."""
    records = []
    for m in SUPPORTED_M:
        numeric = universal_integral(m)
        for name, closed in leading_constants(m).items():
            rec = {"kind": "summary", "experiment": "constants", "m": m,
                   "constant": name, "closed_form": closed}
            if name == "universal":
                rec["numeric"] = numeric
                rec["rel_err"] = abs(numeric - closed) / closed
            records.append(rec)
    return records, {"discarded_trials": 0}


def _drive_bmk(cfg: ExperimentConfig) -> tuple:
    form = bmk_form(cfg.m, cfg.k_codim)
    labels = form.labels()
    records = []
    n = len(labels)
    for i in range(n):
        for jj in range(n):
            records.append({
                "kind": "entry", "experiment": "bmk", "m": cfg.m,
                "k": cfg.k_codim, "row": labels[i], "col": labels[jj],
                "re": float(form.matrix[i, jj].real),
                "im": float(form.matrix[i, jj].imag),
            })
    for i, ev in enumerate(form.eigenvalues):
        records.append({
            "kind": "eigenvalue", "experiment": "bmk", "m": cfg.m,
            "k": cfg.k_codim, "index": i, "value": float(ev),
        })
    records.append({
        "kind": "summary", "experiment": "bmk", "m": cfg.m, "k": cfg.k_codim,
        "hermiticity_error": form.hermiticity_error,
        "refinement_delta": form.refinement_delta,
        "eig_min": float(form.eigenvalues.min()),
        "eig_max": float(form.eigenvalues.max()),
    })
    return records, {"discarded_trials": 0}


_DRIVERS = {
    "mean": _drive_moments,
    "variance_mc": _drive_moments,
    "variance_quad": _drive_variance_quad,
    "counting": _drive_counting,
    "normality": _drive_normality,
    "route_agreement": _drive_route_agreement,
    "kernel_checks": _drive_kernel_checks,
    "constants": _drive_constants,
    "bmk": _drive_bmk,
}
