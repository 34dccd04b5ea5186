"""Simultaneous root finding for degree-N sections on CP^1.

Aberth-Ehrlich iteration, batched over trials.  Polynomials are always
evaluated in the better-conditioned chart: direct Horner for |z| <= 1,
reversed (coefficients flipped, variable u = 1/z) for |z| > 1, so no
intermediate overflows regardless of root location.  Convergence is by
relative backward error |p(z)| / sum_j |a_j||z|^j at the working
precision; a cheap complex64 phase does the bulk of the contraction and
a double-precision phase finishes to ~8 d eps.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, UnsupportedDimension
from .geometry import ProjectivePoint
from .ensemble import Section, basis_weights

_MAX_SWEEPS_FAST = 60
_MAX_SWEEPS_FINE = 40
# True multiple roots are only located to ~sqrt(eps), so the merge radius
# sits above that but far below typical root gaps of random sections.
_MERGE_SIN = 1e-7


def _upper_hull(x: np.ndarray, y: np.ndarray):
    """Upper convex hull of (x, y) with x strictly increasing."""
    hull: list = []
    for xi, yi in zip(x, y):
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (yi - y1) >= (y2 - y1) * (xi - x1):
                hull.pop()
            else:
                break
        hull.append((xi, yi))
    return hull


def _bini_init(a_row: np.ndarray) -> np.ndarray:
    """Initial guesses on annuli estimated from the coefficient Newton polygon."""
    d = a_row.shape[0] - 1
    with np.errstate(divide="ignore"):
        logmag = np.log(np.abs(a_row))
    finite = np.isfinite(logmag)
    xs = np.nonzero(finite)[0]
    hull = _upper_hull(xs.astype(float), logmag[xs])
    z0 = np.empty(d, dtype=np.complex128)
    pos = 0
    for seg, ((k1, y1), (k2, y2)) in enumerate(zip(hull[:-1], hull[1:])):
        n_seg = int(round(k2 - k1))
        # Annulus radius from consecutive Newton-polygon slopes.
        r = math.exp((y1 - y2) / (k2 - k1))
        r = min(max(r, 1e-12), 1e12)
        t = np.arange(n_seg)
        angles = 2.0 * np.pi * t / n_seg + 1.17 + 0.83 * seg
        z0[pos:pos + n_seg] = r * np.exp(1j * angles)
        pos += n_seg
    return z0


def _ratio_eta(a: np.ndarray, absa: np.ndarray, rows: np.ndarray,
               z: np.ndarray, want: np.ndarray):
    """Newton ratio p/p' and backward error eta at selected elements.

    a, absa: (R, d+1) coefficients and moduli; rows: row index per element
    of the flattened (R, d) root array; z: flat roots; want: boolean mask
    of elements to evaluate.  Returns (ratio, eta) on the masked elements.
    """
    d = a.shape[1] - 1
    zz = z[want]
    rr = rows[want]
    ratio = np.zeros_like(zz)
    eta = np.zeros(zz.shape, dtype=np.float64)
    tiny = np.finfo(absa.dtype).tiny

    lo = np.abs(zz) <= 1.0
    if np.any(lo):
        rl, zl = rr[lo], zz[lo]
        azl = np.abs(zl)
        b = a[rl, d]
        db = np.zeros_like(zl)
        s = absa[rl, d].astype(np.float64)
        for j in range(d - 1, -1, -1):
            db = db * zl + b
            b = b * zl + a[rl, j]
            s = s * azl + absa[rl, j]
        db = np.where(db == 0, np.finfo(db.dtype).tiny * (1 + 0j), db)
        with np.errstate(over="ignore", invalid="ignore"):
            ratio[lo] = b / db
        eta[lo] = np.abs(b) / np.maximum(s, tiny)

    hi = ~lo
    if np.any(hi):
        rh, zh = rr[hi], zz[hi]
        u = 1.0 / zh
        au = np.abs(u)
        q = a[rh, 0]
        dq = np.zeros_like(u)
        s = absa[rh, 0].astype(np.float64)
        for j in range(1, d + 1):
            dq = dq * u + q
            q = q * u + a[rh, j]
            s = s * au + absa[rh, j]
        denom = d * q - u * dq
        denom = np.where(denom == 0, np.finfo(denom.dtype).tiny * (1 + 0j), denom)
        with np.errstate(over="ignore", invalid="ignore"):
            ratio[hi] = zh * q / denom
        eta[hi] = np.abs(q) / np.maximum(s, tiny)
    return ratio, eta


def _aberth_phase(a: np.ndarray, z: np.ndarray, tol: float, max_sweeps: int):
    """Run Aberth sweeps at the dtype of z until all elements hit tol.

    Converged elements are frozen but still repel; fully converged rows
    drop out of the pairwise work.  Returns roots, per-element backward
    errors, the convergence mask, and the sweep count.
    """
    R, d = z.shape
    out_z = z.copy()
    out_eta = np.full((R, d), np.inf)
    out_conv = np.zeros((R, d), dtype=bool)

    eps_w = float(np.finfo(z.dtype).eps)
    # Near a root cluster the backward error bottoms out around d^2 eps
    # rather than d eps, so a stationary iterate below this cap is accepted
    # even though it misses the nominal tolerance.
    eta_cap = 8.0 * d * math.sqrt(eps_w)

    active = np.arange(R)
    a_act = a
    absa_act = np.abs(a)
    z_act = z.copy()
    conv_act = np.zeros((R, d), dtype=bool)
    eta_act = np.full((R, d), np.inf)
    diag = np.arange(d)
    sweeps = 0
    for sweep in range(max_sweeps):
        if active.size == 0:
            break
        sweeps = sweep + 1
        rows = np.broadcast_to(np.arange(active.size)[:, None],
                               (active.size, d)).reshape(-1)
        want = ~conv_act.reshape(-1)
        ratio_m, eta_m = _ratio_eta(a_act, absa_act, rows, z_act.reshape(-1), want)
        eta_flat = eta_act.reshape(-1)
        eta_flat[want] = eta_m
        conv_flat = conv_act.reshape(-1)
        conv_flat[want] |= eta_m <= tol
        done = conv_act.all(axis=1)
        if np.any(done):
            rows_done = active[done]
            out_z[rows_done] = z_act[done]
            out_eta[rows_done] = eta_act[done]
            out_conv[rows_done] = True
            keep = ~done
            active = active[keep]
            a_act = a_act[keep]
            absa_act = absa_act[keep]
            z_act = z_act[keep]
            conv_act = conv_act[keep]
            eta_act = eta_act[keep]
            if active.size == 0:
                break
            continue

        ratio = np.zeros(active.size * d, dtype=z.dtype)
        ratio[want] = ratio_m.astype(z.dtype)
        ratio = ratio.reshape(active.size, d)

        diff = z_act[:, :, None] - z_act[:, None, :]
        diff[:, diag, diag] = 1.0
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            rec = 1.0 / diff
            rec[:, diag, diag] = 0.0
            S = rec.sum(axis=2)
            corr = ratio / (1.0 - ratio * S)
            corr = np.where(np.isfinite(corr), corr, ratio)
        corr[conv_act] = 0.0
        stalled = (~conv_act & (np.abs(corr) <= 4.0 * eps_w * (np.abs(z_act) + 0.5))
                   & (eta_act <= eta_cap))
        conv_act |= stalled
        corr[stalled] = 0.0
        z_act = z_act - corr
        bad = ~np.isfinite(z_act)
        if np.any(bad):
            # Diverged iterates restart on a modest circle, one golden-angle
            # step apart so no two restarts collide (coincident iterates
            # would repel each other forever).
            n_bad = int(bad.sum())
            ang = 0.7 + sweep + 2.399963229728653 * np.arange(n_bad)
            z_act[bad] = ((1.5 + 0.2 * sweep) * np.exp(1j * ang)).astype(z.dtype)

    if active.size:
        out_z[active] = z_act
        out_eta[active] = eta_act
        out_conv[active] = conv_act
    return out_z, out_eta, out_conv, sweeps


def aberth_roots_batch(a: np.ndarray):
    """All roots of each degree-d row of coefficients (ascending powers).

    a: (B, d+1) complex with a[:, d] != 0 and a[:, 0] != 0 (callers strip
    exact zero edges first).  Returns (roots (B, d), eta (B, d),
    converged (B,), sweeps).
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    B, dp1 = a.shape
    d = dp1 - 1
    if d < 1:
        return (np.zeros((B, 0), dtype=np.complex128),
                np.zeros((B, 0)), np.ones(B, dtype=bool), 0)
    scale = np.max(np.abs(a), axis=1, keepdims=True)
    an = a / scale

    z0 = np.empty((B, d), dtype=np.complex128)
    for i in range(B):
        z0[i] = _bini_init(an[i])

    eps32 = float(np.finfo(np.float32).eps)
    eps64 = float(np.finfo(np.float64).eps)
    tol_fast = 8.0 * d * eps32
    tol_fine = 8.0 * d * eps64

    z32, _, _, sweeps_a = _aberth_phase(an.astype(np.complex64),
                                        z0.astype(np.complex64),
                                        tol_fast, _MAX_SWEEPS_FAST)
    z = z32.astype(np.complex128)

    # Double-precision finish in row chunks to bound pairwise memory.
    chunk = max(1, int(6.0e6 / max(d * d, 1)))
    eta = np.empty((B, d))
    conv = np.empty((B, d), dtype=bool)
    sweeps_b = 0
    for start in range(0, B, chunk):
        sl = slice(start, start + chunk)
        zc, ec, cc, sw = _aberth_phase(an[sl], z[sl], tol_fine, _MAX_SWEEPS_FINE)
        z[sl], eta[sl], conv[sl] = zc, ec, cc
        sweeps_b = max(sweeps_b, sw)
    return z, eta, conv.all(axis=1), sweeps_a + sweeps_b


def affine_to_homog(z: np.ndarray) -> np.ndarray:
    """Stable unit homogeneous lift of affine roots (any magnitude)."""
    z = np.asarray(z, dtype=np.complex128)
    big = np.abs(z) > 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        zi = np.where(big, 1.0 / z, z)
    out = np.empty(z.shape + (2,), dtype=np.complex128)
    norm_small = np.sqrt(1.0 + np.abs(zi) ** 2)
    out[..., 0] = np.where(big, zi, 1.0) / norm_small
    out[..., 1] = np.where(big, 1.0, zi) / norm_small
    return out


@dataclass(frozen=True)
class ZeroSet:
    """Zero divisor of a degree-N section of CP^1, with multiplicities.

    points_homog rows are unit homogeneous representatives (the point
    [0 : 1] encodes the zero at infinity of the affine chart); the total
    multiplicity always equals the degree.  residual_log10 is the log10
    of the worst relative backward error among the affine roots.
    """

    degree: int
    points_homog: np.ndarray
    multiplicities: np.ndarray
    n_at_infinity: int
    residual_log10: float
    sweeps: int

    @property
    def total_multiplicity(self) -> int:
        return int(self.multiplicities.sum())

    def points(self) -> list:
        return [ProjectivePoint(z) for z in self.points_homog]


def _merge_clusters(z: np.ndarray):
    """Group affine roots whose chordal separation is below the merge tol.

    sin d(z, w) = |z - w| / sqrt((1+|z|^2)(1+|w|^2)) exactly on CP^1, so
    the test is performed in that stable form.
    """
    n = z.shape[0]
    norms = np.sqrt(1.0 + np.abs(z) ** 2)
    sep = np.abs(z[:, None] - z[None, :]) / (norms[:, None] * norms[None, :])
    close = sep < _MERGE_SIN
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in zip(*np.nonzero(close)):
        if i < j:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[rj] = ri
    reps: dict = {}
    mult: dict = {}
    for i in range(n):
        r = find(i)
        reps.setdefault(r, z[i])
        mult[r] = mult.get(r, 0) + 1
    keys = sorted(reps)
    return np.array([reps[k] for k in keys]), np.array([mult[k] for k in keys])


def find_roots(section: Section) -> ZeroSet:
    """Zero set of a section on CP^1 (m = 1 only).

    Raises ConvergenceFailure if the iteration does not reach backward
    stability; callers doing Monte Carlo discard and redraw on that.
    """
    if section.m != 1:
        raise UnsupportedDimension("root finding is implemented for m = 1")
    N = section.degree
    bw = basis_weights(N, 1)
    a = section.coeffs * bw.weights
    nz = np.nonzero(a)[0]
    if nz.size == 0:
        raise ValueError("zero section has no well-defined zero set")
    deg_hi = int(nz[-1])
    k0 = int(nz[0])
    n_inf = N - deg_hi

    core = a[k0:deg_hi + 1]
    if core.shape[0] - 1 >= 1:
        roots, eta, conv, sweeps = aberth_roots_batch(core[None, :])
        if not bool(conv[0]):
            raise ConvergenceFailure(
                f"Aberth failed at degree {N} (worst eta {eta.max():.2e})")
        affine = roots[0]
        worst = float(eta.max())
    else:
        affine = np.zeros(0, dtype=np.complex128)
        worst = 0.0
        sweeps = 0
    affine = np.concatenate([affine, np.zeros(k0, dtype=np.complex128)])

    if affine.size:
        centers, mults = _merge_clusters(affine)
        pts = affine_to_homog(centers)
    else:
        pts = np.zeros((0, 2), dtype=np.complex128)
        mults = np.zeros(0, dtype=np.int64)
    if n_inf > 0:
        pts = np.concatenate([pts, np.array([[0.0, 1.0]], dtype=np.complex128)])
        mults = np.concatenate([mults, np.array([n_inf])])
    residual = math.log10(max(worst, 1e-320))
    return ZeroSet(degree=N, points_homog=pts, multiplicities=mults,
                   n_at_infinity=n_inf, residual_log10=residual, sweeps=sweeps)
