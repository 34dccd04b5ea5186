import math

import numpy as np
import pytest

from projzeros.forms import (
    FormElement,
    _permutation_sign,
    dv_top_tuple,
    euclidean_volume_form,
    extract_coefficient,
    gen_dv,
    gen_dvbar,
    gen_dz,
    gen_dzbar,
    kahler_form,
    pairing_forms,
)


def test_generator_indices_disjoint():
    m = 3
    all_gens = ([gen_dz(m, j) for j in range(m)]
                + [gen_dzbar(m, j) for j in range(m)]
                + [gen_dv(m, j) for j in range(m)]
                + [gen_dvbar(m, j) for j in range(m)])
    assert sorted(all_gens) == list(range(4 * m))


def test_permutation_sign_basics():
    assert _permutation_sign((0, 1, 2), (0, 1, 2)) == 1
    assert _permutation_sign((1, 0, 2), (0, 1, 2)) == -1
    assert _permutation_sign((2, 0, 1), (0, 1, 2)) == 1
    assert _permutation_sign((3, 1, 2, 0), (0, 1, 2, 3)) == -1


def test_monomial_normalizes_order_with_sign():
    a = FormElement.monomial(2, (3, 1), 2.0)
    b = FormElement.monomial(2, (1, 3), -2.0)
    assert a.terms == b.terms
    assert a.terms[(1, 3)] == -2.0


def test_monomial_repeated_generator_is_zero():
    assert FormElement.monomial(2, (1, 1)).terms == {}


def test_wedge_anticommutes_on_one_forms():
    m = 2
    a = FormElement.monomial(m, (gen_dz(m, 0),))
    b = FormElement.monomial(m, (gen_dz(m, 1),))
    ab = a.wedge(b)
    ba = b.wedge(a)
    assert ab.terms == ((-1.0) * ba).terms


def test_wedge_associative_on_random_sums():
    rng = np.random.default_rng(3)
    m = 2
    def rand_form():
        out = FormElement.zero(m)
        for _ in range(3):
            k = rng.integers(1, 3)
            gens = tuple(rng.choice(4 * m, size=k, replace=False))
            out = out + FormElement.monomial(m, gens, complex(*rng.normal(size=2)))
        return out
    for _ in range(5):
        a, b, c = rand_form(), rand_form(), rand_form()
        lhs = a.wedge(b).wedge(c)
        rhs = a.wedge(b.wedge(c))
        diff = lhs - rhs
        assert diff.max_abs() < 1e-12


def test_scalar_acts_as_identity_for_wedge():
    m = 1
    s = FormElement.scalar(m, 2.5)
    a = FormElement.monomial(m, (0, 1), 1.0 + 1j)
    assert s.wedge(a).terms == (2.5 * a).terms
    assert a.wedge(s).terms == (2.5 * a).terms


def test_wedge_pow_zero_is_one():
    w = kahler_form(2, "z")
    assert w.wedge_pow(0).terms == {(): 1.0 + 0j}


def test_kahler_top_power():
    # omega^m = m! (i/2)^m dz_0 dzbar_0 ... dz_(m-1) dzbar_(m-1)
    for m in (1, 2, 3):
        w = kahler_form(m, "z")
        top = w.wedge_pow(m)
        ref = []
        for j in range(m):
            ref += [gen_dz(m, j), gen_dzbar(m, j)]
        c = top.coefficient_of(tuple(ref))
        expect = math.factorial(m) * (0.5j) ** m
        assert abs(c - expect) < 1e-14
        # nothing above the top power
        assert w.wedge_pow(m + 1).terms == {}


def test_euclidean_volume_form_single_term():
    m = 2
    vol = euclidean_volume_form(m)
    assert len(vol.terms) == 1
    c = vol.coefficient_of(dv_top_tuple(m))
    assert abs(c - (0.5j) ** m) < 1e-15


def test_coefficient_of_tracks_reference_ordering():
    m = 1
    a = FormElement.monomial(m, (0, 1), 3.0)
    assert a.coefficient_of((0, 1)) == 3.0
    assert a.coefficient_of((1, 0)) == -3.0
    with pytest.raises(ValueError):
        a.coefficient_of((0, 0))


def test_pairing_forms_linear_terms():
    v = np.array([1.0 + 2.0j, -0.5j])
    p = pairing_forms(v)
    m = 2
    assert p.vbar_dz.coefficient_of((gen_dz(m, 0),)) == np.conj(v[0])
    assert p.v_dzbar.coefficient_of((gen_dzbar(m, 1),)) == v[1]
    # two-form contractions carry unit coefficients on matched indices
    assert p.dz_dzbar.coefficient_of((gen_dz(m, 1), gen_dzbar(m, 1))) == 1.0
    assert p.dzbar_dv.coefficient_of((gen_dzbar(m, 0), gen_dv(m, 0))) == 1.0


def test_extract_coefficient_matches_manual_ordering():
    m = 2
    gens = (gen_dz(m, 0), gen_dzbar(m, 1)) + dv_top_tuple(m)
    a = FormElement.monomial(m, gens, 4.0 - 1.0j)
    assert extract_coefficient(a, (0,), (1,)) == 4.0 - 1.0j
    assert extract_coefficient(a, (0,), (0,)) == 0.0


def test_negative_wedge_power_raises():
    with pytest.raises(ValueError):
        kahler_form(1).wedge_pow(-1)
