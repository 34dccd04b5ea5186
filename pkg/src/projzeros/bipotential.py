"""Bipotential special functions and the universal variance form.

The variance of smooth zero statistics is driven by a single function of
the normalized kernel,

    Q_N(z, w) = gtilde(P_N(z, w)),      gtilde(t) = Li2(t^2) / (4 pi^2),

together with the derivatives of its scaling profile
F(lambda) = gtilde(e^(-lambda)).  The dilogarithm is authored here
(series plus Euler reflection, abs error < 1e-14 on [0, 1]); the scipy
implementation is used only as an oracle in the tests.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError, SingularArgument
from .forms import FormElement, pairing_forms
from .kernel import KernelContext, kernel_of_distance, normalized_kernel

_PI2 = np.pi ** 2
_SERIES_TERMS = 72


def _li2_series(y: np.ndarray) -> np.ndarray:
    """sum_k y^k / k^2 for |y| <= 1/2 + margin."""
    out = np.zeros_like(y)
    power = np.ones_like(y)
    for k in range(1, _SERIES_TERMS + 1):
        power = power * y
        out += power / (k * k)
    return out


def li2(x) -> np.ndarray:
    """Dilogarithm Li2(x) on [0, 1].

    Series below 1/2; Euler reflection
    Li2(x) + Li2(1-x) = pi^2/6 - log(x) log(1-x) above.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0) or np.any(x > 1):
        raise DomainError("li2 requires x in [0, 1]")
    out = np.empty_like(x)
    lo = x <= 0.5
    out[lo] = _li2_series(x[lo])
    hi = ~lo
    if np.any(hi):
        xh = x[hi]
        one_minus = 1.0 - xh
        log_term = np.zeros_like(xh)
        pos = one_minus > 0
        log_term[pos] = np.log(xh[pos]) * np.log(one_minus[pos])
        out[hi] = _PI2 / 6.0 - log_term - _li2_series(one_minus)
    return out


def gtilde(t) -> np.ndarray:
    """gtilde(t) = Li2(t^2) / (4 pi^2) on [0, 1]; gtilde(1) = 1/24."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0) or np.any(t > 1):
        raise DomainError("gtilde requires t in [0, 1]")
    return li2(t * t) / (4.0 * _PI2)


def f_derivs(lam, order: int):
    """Derivatives of F(lambda) = gtilde(e^(-lambda)), orders 0..4.

    F(0) = 1/24 is finite but every derivative is singular at lambda = 0;
    orders >= 1 therefore require lambda > 0.

        F'   = log(1 - e^(-2 lambda)) / (2 pi^2)
        F''  = 1 / (pi^2 (e^(2 lambda) - 1))
        F''' = -1 / (2 pi^2 sinh(lambda)^2)
        F'''' = cosh(lambda) / (pi^2 sinh(lambda)^3)
    """
    lam_arr = np.asarray(lam, dtype=np.float64)
    scalar = lam_arr.ndim == 0
    lam_arr = np.atleast_1d(lam_arr)
    if order not in (0, 1, 2, 3, 4):
        raise ValueError("order must be in 0..4")
    if order == 0:
        if np.any(lam_arr < 0):
            raise SingularArgument("F requires lambda >= 0")
        out = li2(np.exp(-2.0 * lam_arr)) / (4.0 * _PI2)
    else:
        if np.any(lam_arr <= 0):
            raise SingularArgument(f"F^({order}) requires lambda > 0")
        if order == 1:
            out = np.log(-np.expm1(-2.0 * lam_arr)) / (2.0 * _PI2)
        elif order == 2:
            out = 1.0 / (_PI2 * np.expm1(2.0 * lam_arr))
        elif order == 3:
            out = -0.5 / (_PI2 * np.sinh(lam_arr) ** 2)
        else:
            out = np.cosh(lam_arr) / (_PI2 * np.sinh(lam_arr) ** 3)
    return float(out[0]) if scalar else out


def q_n(ctx: KernelContext, p, q) -> float:
    """Q_N(p, q) = gtilde(P_N(p, q)); lies in [0, 1/24]."""
    return float(gtilde(normalized_kernel(ctx, p, q)))


def q_n_of_distance(ctx: KernelContext, d) -> np.ndarray:
    """Q_N at geodesic distance d (vectorized)."""
    return gtilde(kernel_of_distance(ctx, d))


def var_infty(v) -> FormElement:
    """Universal variance 4-form at offset v in C^m \\ {0}.

    With lambda = |v|^2 / 2 and the contractions of pairing_forms:

      -(1/16) F''''  (vbar.dz)(v.dzbar)(vbar.dv)(v.dvbar)
      -(1/8)  F'''  [ (dz.dzbar)(vbar.dv)(v.dvbar) + (v.dzbar)(vbar.dv)(dz.dvbar)
                      + (vbar.dz)(dzbar.dv)(v.dvbar) + (vbar.dz)(v.dzbar)(dv.dvbar) ]
      -(1/4)  F''   [ (dzbar.dv)(dz.dvbar) + (dz.dzbar)(dv.dvbar) ]

    Each term is bidegree (1,1) in both the z and v generators.
    """
    v = np.asarray(v, dtype=np.complex128).ravel()
    lam = 0.5 * float(np.vdot(v, v).real)
    if lam < 1e-16:
        raise SingularArgument("var_infty is singular at v = 0")
    s4, s3, s2 = var_infty_parts(v)
    return (f_derivs(lam, 4) * s4 + f_derivs(lam, 3) * s3
            + f_derivs(lam, 2) * s2)


def var_infty_parts(v) -> tuple:
    """Shape forms (S4, S3, S2) with the derivative factors split off:

        var_infty(v) = F''''(lam) S4 + F'''(lam) S3 + F''(lam) S2.

    S4 is (2, 2)-homogeneous in (v, vbar), S3 is (1, 1), S2 constant, so
    along a ray v = r vhat the radial and angular dependence separate.
    """
    v = np.asarray(v, dtype=np.complex128).ravel()
    p = pairing_forms(v)
    s4 = (-1.0 / 16.0) * p.vbar_dz.wedge(p.v_dzbar).wedge(p.vbar_dv).wedge(
        p.v_dvbar)
    s3 = (-1.0 / 8.0) * (p.dz_dzbar.wedge(p.vbar_dv).wedge(p.v_dvbar)
                         + p.v_dzbar.wedge(p.vbar_dv).wedge(p.dz_dvbar)
                         + p.vbar_dz.wedge(p.dzbar_dv).wedge(p.v_dvbar)
                         + p.vbar_dz.wedge(p.v_dzbar).wedge(p.dv_dvbar))
    s2 = (-1.0 / 4.0) * (p.dzbar_dv.wedge(p.dz_dvbar)
                         + p.dz_dzbar.wedge(p.dv_dvbar))
    return s4, s3, s2
