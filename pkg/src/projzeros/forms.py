"""Small exterior-algebra engine over C for the variance form calculus.

Generators for dimension m (so 4m anticommuting symbols, m <= 3) are
indexed in the fixed global order

    dz_0 .. dz_(m-1), dzbar_0 .. dzbar_(m-1), dv_0 .. dv_(m-1),
    dvbar_0 .. dvbar_(m-1)

and a form is a dict from strictly increasing generator tuples to complex
coefficients.  Degree-0 terms (empty tuple) act as scalars.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def gen_dz(m: int, j: int) -> int:
    return j


def gen_dzbar(m: int, j: int) -> int:
    return m + j


def gen_dv(m: int, j: int) -> int:
    return 2 * m + j


def gen_dvbar(m: int, j: int) -> int:
    return 3 * m + j


def _merge_signed(t1: tuple, t2: tuple):
    """Merge two increasing tuples; None on repeated generator.

    The sign is the parity of moving t2's entries into place, i.e. the
    number of pairs (a in t1, b in t2) with a > b.
    """
    inv = 0
    i = j = 0
    merged = []
    n1, n2 = len(t1), len(t2)
    while i < n1 and j < n2:
        a, b = t1[i], t2[j]
        if a == b:
            return None, 0
        if a < b:
            merged.append(a)
            i += 1
        else:
            merged.append(b)
            inv += n1 - i
            j += 1
    merged.extend(t1[i:])
    merged.extend(t2[j:])
    return tuple(merged), (-1) ** (inv & 1)


@dataclass
class FormElement:
    """Complex exterior form on the 4m generators."""

    m: int
    terms: dict = field(default_factory=dict)

    @classmethod
    def zero(cls, m: int) -> "FormElement":
        return cls(m=m, terms={})

    @classmethod
    def scalar(cls, m: int, value: complex) -> "FormElement":
        return cls(m=m, terms={(): complex(value)}) if value != 0 else cls.zero(m)

    @classmethod
    def monomial(cls, m: int, gens, coeff: complex = 1.0) -> "FormElement":
        gens = tuple(gens)
        if len(set(gens)) != len(gens):
            return cls.zero(m)
        order = tuple(sorted(gens))
        sign = _permutation_sign(gens, order)
        return cls(m=m, terms={order: complex(coeff) * sign})

    def copy(self) -> "FormElement":
        return FormElement(m=self.m, terms=dict(self.terms))

    def __add__(self, other: "FormElement") -> "FormElement":
        out = dict(self.terms)
        for t, c in other.terms.items():
            out[t] = out.get(t, 0.0) + c
        return FormElement(m=self.m, terms={t: c for t, c in out.items() if c != 0})

    def __sub__(self, other: "FormElement") -> "FormElement":
        return self + (-1.0) * other

    def __rmul__(self, scalar: complex) -> "FormElement":
        if scalar == 0:
            return FormElement.zero(self.m)
        return FormElement(m=self.m,
                           terms={t: scalar * c for t, c in self.terms.items()})

    def __mul__(self, scalar: complex) -> "FormElement":
        return self.__rmul__(scalar)

    def wedge(self, other: "FormElement") -> "FormElement":
        out: dict = {}
        for t1, c1 in self.terms.items():
            for t2, c2 in other.terms.items():
                merged, sign = _merge_signed(t1, t2)
                if merged is None:
                    continue
                out[merged] = out.get(merged, 0.0) + sign * c1 * c2
        return FormElement(m=self.m, terms={t: c for t, c in out.items() if c != 0})

    def wedge_pow(self, k: int) -> "FormElement":
        if k < 0:
            raise ValueError("negative wedge power")
        result = FormElement.scalar(self.m, 1.0)
        for _ in range(k):
            result = result.wedge(self)
        return result

    def coefficient_of(self, ref_order) -> complex:
        """Coefficient relative to an explicit generator ordering."""
        ref = tuple(ref_order)
        key = tuple(sorted(ref))
        if len(set(key)) != len(key):
            raise ValueError("reference ordering repeats a generator")
        c = self.terms.get(key, 0.0)
        if c == 0:
            return 0.0 + 0j
        return complex(c) * _permutation_sign(ref, key)

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)


def _permutation_sign(seq: tuple, sorted_seq: tuple) -> int:
    order = {g: i for i, g in enumerate(sorted_seq)}
    perm = [order[g] for g in seq]
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def dv_top_tuple(m: int) -> tuple:
    """Reference volume ordering dv_0, dvbar_0, dv_1, dvbar_1, ..."""
    out = []
    for j in range(m):
        out.append(gen_dv(m, j))
        out.append(gen_dvbar(m, j))
    return tuple(out)


def euclidean_volume_form(m: int) -> FormElement:
    """Omega_E = prod_j (i/2) dv_j wedge dvbar_j, i.e. Lebesgue measure."""
    out = FormElement.scalar(m, 1.0)
    for j in range(m):
        factor = FormElement.monomial(m, (gen_dv(m, j), gen_dvbar(m, j)), 0.5j)
        out = out.wedge(factor)
    return out


def kahler_form(m: int, which: str = "z") -> FormElement:
    """(i/2) sum_j dg_j wedge dgbar_j in the z or v generators."""
    lo = gen_dz if which == "z" else gen_dv
    hi = gen_dzbar if which == "z" else gen_dvbar
    out = FormElement.zero(m)
    for j in range(m):
        out = out + FormElement.monomial(m, (lo(m, j), hi(m, j)), 0.5j)
    return out


@dataclass(frozen=True)
class PairingForms:
    """The eight contractions entering the universal variance form."""

    vbar_dz: FormElement
    v_dzbar: FormElement
    vbar_dv: FormElement
    v_dvbar: FormElement
    dz_dzbar: FormElement
    dv_dvbar: FormElement
    dzbar_dv: FormElement
    dz_dvbar: FormElement


def pairing_forms(v) -> PairingForms:
    """Build the standard contractions for an offset vector v in C^m."""
    v = np.asarray(v, dtype=np.complex128).ravel()
    m = v.shape[0]

    def one_form(gen_fn, coeffs):
        out = FormElement.zero(m)
        for j in range(m):
            if coeffs[j] != 0:
                out = out + FormElement.monomial(m, (gen_fn(m, j),), coeffs[j])
        return out

    def two_form(fn_a, fn_b):
        out = FormElement.zero(m)
        for j in range(m):
            out = out + FormElement.monomial(m, (fn_a(m, j), fn_b(m, j)), 1.0)
        return out

    vb = np.conj(v)
    return PairingForms(
        vbar_dz=one_form(gen_dz, vb),
        v_dzbar=one_form(gen_dzbar, v),
        vbar_dv=one_form(gen_dv, vb),
        v_dvbar=one_form(gen_dvbar, v),
        dz_dzbar=two_form(gen_dz, gen_dzbar),
        dv_dvbar=two_form(gen_dv, gen_dvbar),
        dzbar_dv=two_form(gen_dzbar, gen_dv),
        dz_dvbar=two_form(gen_dz, gen_dvbar),
    )


def extract_coefficient(a: FormElement, J, K) -> complex:
    """Coefficient of dz^J wedge dzbar^K wedge (dv volume ordering).

    J and K are increasing index tuples in range(m); the dv block is the
    interleaved reference ordering of dv_top_tuple.
    """
    m = a.m
    ref = tuple(gen_dz(m, j) for j in J) + tuple(gen_dzbar(m, k) for k in K) \
        + dv_top_tuple(m)
    return a.coefficient_of(ref)
