"""Semi-algebraic PSD characterizations as polynomial constraints.

For a unit-trace Hermitian matrix parameterized in an orthonormal basis, the
recursion p k_p = sum_f (-1)^(f-1) Tr(rho^f) k_{p-f} with k_0 = k_1 = 1 gives
polynomials whose joint nonnegativity is equivalent to positive
semidefiniteness. Without the unit-trace normalization the same statement
holds for the characteristic-polynomial coefficients e_p (sums of principal
minors), which is what the denominator-cleared detector/process constraints
use.
"""

from __future__ import annotations

import numpy as np

from ..quantum import HermitianBasis
from .poly import Polynomial


def symbolic_matrix(basis: HermitianBasis, num_vars: int, offset: int = 0) -> list[list[Polynomial]]:
    """d x d matrix of polynomials sum_i x_{offset+i} B_i."""
    d = basis.dim
    rows = []
    for r in range(d):
        row = []
        for c in range(d):
            terms = {}
            for i, b in enumerate(basis.elements):
                coeff = b[r, c]
                if abs(coeff) > 1e-15:
                    e = [0] * num_vars
                    e[offset + i] = 1
                    terms[tuple(e)] = coeff
            row.append(Polynomial(num_vars, terms))
        rows.append(row)
    return rows


def _mat_mul(a, b):
    d = len(a)
    n = a[0][0].num_vars
    out = [[Polynomial.zero(n) for _ in range(d)] for _ in range(d)]
    for i in range(d):
        for j in range(d):
            acc = Polynomial.zero(n)
            for k in range(d):
                acc = acc + a[i][k] * b[k][j]
            out[i][j] = acc
    return out


def _mat_trace(a) -> Polynomial:
    n = a[0][0].num_vars
    acc = Polynomial.zero(n)
    for i in range(len(a)):
        acc = acc + a[i][i]
    return acc


def trace_powers(mat: list[list[Polynomial]], max_power: int) -> list[Polynomial]:
    """[Tr(M), Tr(M^2), ..., Tr(M^max_power)] as real polynomials."""
    traces = []
    power = mat
    traces.append(_mat_trace(power))
    for _ in range(2, max_power + 1):
        power = _mat_mul(power, mat)
        traces.append(_mat_trace(power))
    cleaned = []
    for t in traces:
        if t.max_imag() > 1e-9:
            raise ValueError("trace polynomial has a large imaginary part")
        cleaned.append(t.real_part())
    return cleaned


def kimura_constraints(
    num_vars: int, offset: int, d: int, basis: HermitianBasis
) -> list[Polynomial]:
    """Polynomials k_2, ..., k_d in the coordinates x_{offset..offset+d^2-1}.

    Their joint nonnegativity on the unit-trace slice characterizes positive
    semidefiniteness. Symbolic construction supported for d = 2 and 3.
    """
    if d not in (2, 3):
        raise ValueError(f"symbolic unit-trace constraints support d in (2, 3), got {d}")
    if basis.dim != d:
        raise ValueError("basis dimension mismatch")
    mat = symbolic_matrix(basis, num_vars, offset)
    p = trace_powers(mat, d)
    ks = [Polynomial.constant(num_vars, 1.0), Polynomial.constant(num_vars, 1.0)]
    for order in range(2, d + 1):
        acc = Polynomial.zero(num_vars)
        for f in range(1, order + 1):
            acc = acc + ((-1) ** (f - 1)) * (p[f - 1] * ks[order - f])
        ks.append((1.0 / order) * acc)
    return ks[2:]


def charpoly_constraints(mat: list[list[Polynomial]], d: int) -> list[Polynomial]:
    """e_1, ..., e_d for a symbolic Hermitian matrix via Newton's identities.

    All e_p >= 0 iff the matrix is PSD; this is the denominator-cleared form
    of the unit-trace constraints applied to an unnormalized matrix.
    """
    num_vars = mat[0][0].num_vars
    p = trace_powers(mat, d)
    es = [Polynomial.constant(num_vars, 1.0)]
    for order in range(1, d + 1):
        acc = Polynomial.zero(num_vars)
        for f in range(1, order + 1):
            acc = acc + ((-1) ** (f - 1)) * (p[f - 1] * es[order - f])
        es.append((1.0 / order) * acc)
    return es[1:]


def evaluate_matrix(mat: list[list[Polynomial]], x) -> np.ndarray:
    d = len(mat)
    out = np.empty((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            out[i, j] = mat[i][j].evaluate(x)
    return out
