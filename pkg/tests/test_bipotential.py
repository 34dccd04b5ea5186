import math

import numpy as np
import pytest
from scipy.special import spence

from projzeros.bipotential import (
    f_derivs,
    gtilde,
    li2,
    q_n,
    q_n_of_distance,
    var_infty,
    var_infty_parts,
)
from projzeros.errors import DomainError, SingularArgument
from projzeros.forms import extract_coefficient
from projzeros.kernel import kernel_context
from projzeros.analysis import var_top_m1


def test_li2_against_scipy_spence():
    # scipy's spence(x) is Li2(1 - x)
    x = np.linspace(0.0, 1.0, 733)
    ours = li2(x)
    ref = spence(1.0 - x)
    assert np.max(np.abs(ours - ref)) < 1e-14


def test_li2_endpoints():
    assert li2(np.array([0.0]))[0] == 0.0
    assert abs(li2(np.array([1.0]))[0] - np.pi ** 2 / 6.0) < 1e-15


def test_li2_domain():
    with pytest.raises(DomainError):
        li2(np.array([-0.1]))
    with pytest.raises(DomainError):
        li2(np.array([1.1]))


def test_gtilde_endpoints_and_monotone():
    t = np.linspace(0.0, 1.0, 200)
    g = gtilde(t)
    assert g[0] == 0.0
    assert abs(g[-1] - 1.0 / 24.0) < 1e-15
    assert np.all(np.diff(g) > 0)


def test_f_at_zero_is_one_24th():
    assert abs(f_derivs(0.0, 0) - 1.0 / 24.0) < 1e-15


def test_f_derivative_chain():
    # each closed-form order matches a central difference of the previous
    lams = [0.3, 0.8, 1.7]
    h = 1e-5
    for lam in lams:
        for order in (1, 2, 3, 4):
            fd = (f_derivs(lam + h, order - 1)
                  - f_derivs(lam - h, order - 1)) / (2 * h)
            assert abs(fd - f_derivs(lam, order)) < 1e-6 * max(
                1.0, abs(f_derivs(lam, order)))


def test_f_derivs_require_positive_lambda():
    with pytest.raises(SingularArgument):
        f_derivs(0.0, 2)
    with pytest.raises(SingularArgument):
        f_derivs(-0.5, 0)


def test_f_second_derivative_positive_fourth_positive():
    lam = np.linspace(0.05, 3.0, 40)
    assert np.all(f_derivs(lam, 2) > 0)
    assert np.all(f_derivs(lam, 3) < 0)
    assert np.all(f_derivs(lam, 4) > 0)


def test_q_n_matches_distance_version():
    ctx = kernel_context(40, 1)
    d = 0.37
    val = q_n_of_distance(ctx, np.array([d]))[0]
    assert 0.0 <= val <= 1.0 / 24.0
    # coincident points saturate at gtilde(1)
    assert abs(q_n_of_distance(ctx, np.array([0.0]))[0] - 1.0 / 24.0) < 1e-15


def test_var_infty_reconstructs_from_parts():
    rng = np.random.default_rng(11)
    for m in (1, 2, 3):
        v = rng.normal(size=m) + 1j * rng.normal(size=m)
        lam = 0.5 * float(np.vdot(v, v).real)
        s4, s3, s2 = var_infty_parts(v)
        rebuilt = (f_derivs(lam, 4) * s4 + f_derivs(lam, 3) * s3
                   + f_derivs(lam, 2) * s2)
        diff = rebuilt - var_infty(v)
        assert diff.max_abs() < 1e-14


def test_var_infty_parts_homogeneity():
    # S4 is (2,2)-homogeneous in (v, vbar), S3 is (1,1), S2 constant
    rng = np.random.default_rng(4)
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    r = 1.7
    s4, s3, s2 = var_infty_parts(v)
    t4, t3, t2 = var_infty_parts(r * v)
    assert (t4 - r ** 4 * s4).max_abs() < 1e-12
    assert (t3 - r ** 2 * s3).max_abs() < 1e-12
    assert (t2 - s2).max_abs() < 1e-14


def test_var_infty_singular_at_origin():
    with pytest.raises(SingularArgument):
        var_infty(np.zeros(2, dtype=complex))


def test_var_infty_top_coefficient_m1_closed_form():
    # engine extraction against the scalar formula, arbitrary phase
    for v in (0.6, 1.0, 1.9):
        for phase in (1.0, np.exp(0.7j)):
            c = extract_coefficient(var_infty(np.array([v * phase])), (0,), (0,))
            assert abs(c.imag) < 1e-15
            assert abs(c.real - var_top_m1(v)) < 1e-13 * max(1.0, abs(var_top_m1(v)))


def _flat_mixed_fd(v_abs: float, h: float) -> float:
    """(1/16) Delta_a Delta_b F(|a - v - b|^2 / 2) at a = b = 0."""
    offs = np.array([0.0, h, -h, 1j * h, -1j * h])
    coef = np.array([-4.0, 1.0, 1.0, 1.0, 1.0])
    a = offs[:, None]
    b = offs[None, :]
    gap = a - v_abs - b
    lam = 0.5 * np.abs(gap) ** 2
    vals = f_derivs(lam, 0)
    return float(np.einsum("i,j,ij->", coef, coef, vals)) / h ** 4 / 16.0


def test_flat_model_mixed_derivative_is_minus_var_top():
    # the N-free bipotential F(|a - v - b|^2/2) has mixed fourth
    # derivative equal to -C(|v|) exactly; finite differences confirm the
    # coefficient bookkeeping of var_infty without any kernel input
    for v in (0.8, 1.3, 2.0):
        d1 = _flat_mixed_fd(v, 1e-2)
        d2 = _flat_mixed_fd(v, 5e-3)
        richardson = (4.0 * d2 - d1) / 3.0
        target = -var_top_m1(v)
        assert abs(richardson - target) < 1e-7 * max(1.0, abs(target))
