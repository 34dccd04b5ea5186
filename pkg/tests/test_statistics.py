import math

import numpy as np
import pytest

from projzeros.ensemble import sample_section
from projzeros.errors import UnsupportedDimension
from projzeros.geometry import (
    CapRegion,
    ProjectivePoint,
    build_grid,
    fs_distance,
)
from projzeros.roots import find_roots
from projzeros.statistics import (
    count_evaluator,
    count_in_cap,
    linear_stat_pl,
    linear_stat_roots,
    pl_trials,
    roots_trials,
    statistic_evaluator,
)
from projzeros.testforms import form_from_params, harmonic_form, hermitian_form


def test_routes_agree_on_single_sections():
    form = harmonic_form(2, 1, 1.0, 0.3)
    grid = build_grid(1, 128, "jittered_qmc", seed=1)
    for trial in range(4):
        s = sample_section(30, 1, 61, trial)
        a = linear_stat_roots(s, form)
        b = linear_stat_pl(s, form, grid)
        assert abs(a - b) < 2e-3 * form.sup_phi * 30 / 30 + 2e-3


def test_pl_rejects_mismatched_dimensions():
    s = sample_section(10, 1, 0, 0)
    form2 = hermitian_form([1.0, 0.0, 0.0])
    grid1 = build_grid(1, 16)
    with pytest.raises(UnsupportedDimension):
        linear_stat_pl(s, form2, grid1)


def test_constant_form_counts_all_zeros():
    # phi = c: the statistic is c * N for every section
    form = harmonic_form(1, 0, 0.0, 2.5)
    s = sample_section(25, 1, 9, 4)
    assert abs(linear_stat_roots(s, form) - 2.5 * 25) < 1e-9


def test_count_in_cap_matches_evaluator():
    s = sample_section(50, 1, 21, 0)
    zeros = find_roots(s)
    cap = CapRegion(ProjectivePoint(np.array([0.8, 0.6j])), 0.6)
    direct = count_in_cap(zeros, cap)
    ev = count_evaluator(cap)
    affine = []
    for p, mu in zip(zeros.points_homog, zeros.multiplicities):
        w = 1e18 if abs(p[0]) < 1e-17 else p[1] / p[0]
        affine += [w] * int(mu)
    packed = float(np.real(ev(np.array(affine)[None, :])[0]))
    assert packed == direct


def test_count_complement_is_exact():
    # caps of radius r about c and pi/2 - r about the antipode partition
    # CP^1 up to the boundary circle, so counts add to N surely
    cap = CapRegion(ProjectivePoint(np.array([1.0 + 0j, 0.0])), np.pi / 3)
    anti = CapRegion(ProjectivePoint(np.array([0.0 + 0j, 1.0])),
                     np.pi / 2 - np.pi / 3)
    ev_a, ev_b = count_evaluator(cap), count_evaluator(anti)
    blk = roots_trials(40, 5, 50, lambda r: ev_a(r) + 1j * ev_b(r))
    tot = np.real(blk.values) + np.imag(blk.values)
    assert np.all(np.abs(tot - 40) < 1e-12)


def test_roots_trials_batch_invariance():
    form = harmonic_form(2, 0, 1.0, 0.0)
    ev = statistic_evaluator(form)
    a = roots_trials(35, 77, 30, ev, batch=7)
    b = roots_trials(35, 77, 30, ev, batch=30)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.trial_index, b.trial_index)


def test_roots_trials_trial_start_slices_same_stream():
    form = harmonic_form(1, -1, 0.7, 0.1)
    ev = statistic_evaluator(form)
    full = roots_trials(20, 13, 12, ev)
    tail = roots_trials(20, 13, 5, ev, trial_start=7)
    assert np.array_equal(full.values[7:], tail.values)


def test_pl_trials_reproducible_and_finite():
    form = hermitian_form([1.0, 0.4, -0.2])
    grid = build_grid(2, 8, "jittered_qmc", seed=2)
    a = pl_trials(15, 2, form, grid, 31, 20)
    b = pl_trials(15, 2, form, grid, 31, 20, trial_batch=6)
    c = pl_trials(15, 2, form, grid, 31, 20)
    # identical calls are bit-identical; different trial batching changes
    # BLAS call shapes, so only roundoff-level agreement is guaranteed
    assert np.array_equal(a.values, c.values)
    assert np.allclose(a.values, b.values, rtol=1e-12, atol=1e-12)
    assert np.all(np.isfinite(a.values))
    assert a.route == "pl"


def test_pl_trials_refinement_flags():
    form = harmonic_form(2, 1, 1.0, 0.0)
    coarse = build_grid(1, 12, "jittered_qmc", seed=3)
    fine = build_grid(1, 96, "jittered_qmc", seed=4)
    with pytest.raises(ValueError):
        pl_trials(25, 1, form, coarse, 7, 4, refine_grid=fine)
    blk = pl_trials(25, 1, form, coarse, 7, 12, refine_grid=fine,
                    flag_tol=1e-6)
    # a resolution-12 grid cannot match resolution 96 to 1e-6
    assert any(f == "suspect" for f in blk.flags)
    blk2 = pl_trials(25, 1, form, fine, 7, 12, refine_grid=fine, flag_tol=1e-12)
    assert all(f == "" for f in blk2.flags)


def test_mean_consistency_small_run():
    form = harmonic_form(1, 0, 1.0, 0.5)
    ev = statistic_evaluator(form)
    blk = roots_trials(30, 2026, 400, ev)
    vals = np.real(blk.values)
    mean = vals.mean()
    se = vals.std(ddof=1) / math.sqrt(vals.size)
    assert abs(mean - form.expected_mean(30)) < 5 * se


def test_multiplicity_weighting_in_roots_stat():
    # a section with a double zero counts it twice
    from projzeros.ensemble import Section, basis_weights
    a = np.poly([0.3, 0.3, -1.5])[::-1]
    bw = basis_weights(3, 1)
    s = Section(degree=3, m=1, coeffs=np.asarray(a, dtype=complex) / bw.weights)
    form = harmonic_form(1, 0, 1.0, 0.0)
    val = linear_stat_roots(s, form)
    pts = [np.array([1.0, 0.3]) / math.sqrt(1.09),
           np.array([1.0, 0.3]) / math.sqrt(1.09),
           np.array([1.0, -1.5]) / math.sqrt(3.25)]
    expect = sum(float(form.phi_many(np.asarray(p, dtype=complex)[None, :])[0])
                 for p in pts)
    # the double root itself is only located to ~sqrt(eps)
    assert abs(val - expect) < 1e-6
