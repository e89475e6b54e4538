"""Sparse multivariate polynomials over a fixed variable count.

Terms map exponent tuples to coefficients. Coefficients may be complex during
intermediate symbolic work (matrix traces of Hermitian pencils); constraint
and objective polynomials are real and can be coerced with :meth:`real_part`.
"""

from __future__ import annotations

import numpy as np

COEFF_EPS = 1e-14


class Polynomial:
    __slots__ = ("num_vars", "terms")

    def __init__(self, num_vars: int, terms: dict | None = None):
        self.num_vars = num_vars
        self.terms = {}
        if terms:
            for expo, c in terms.items():
                if abs(c) > COEFF_EPS:
                    self.terms[tuple(expo)] = c

    # -- constructors

    @classmethod
    def zero(cls, num_vars: int) -> "Polynomial":
        return cls(num_vars)

    @classmethod
    def constant(cls, num_vars: int, c) -> "Polynomial":
        return cls(num_vars, {(0,) * num_vars: c})

    @classmethod
    def variable(cls, num_vars: int, i: int) -> "Polynomial":
        e = [0] * num_vars
        e[i] = 1
        return cls(num_vars, {tuple(e): 1.0})

    @classmethod
    def affine(cls, num_vars: int, coeffs, const=0.0) -> "Polynomial":
        terms = {(0,) * num_vars: const}
        for i, c in enumerate(coeffs):
            if abs(c) > COEFF_EPS:
                e = [0] * num_vars
                e[i] = 1
                terms[tuple(e)] = c
        return cls(num_vars, terms)

    # -- arithmetic

    def _check(self, other: "Polynomial"):
        if self.num_vars != other.num_vars:
            raise ValueError(
                f"variable-count mismatch: {self.num_vars} vs {other.num_vars}"
            )

    def __add__(self, other):
        if np.isscalar(other):
            other = Polynomial.constant(self.num_vars, other)
        self._check(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return Polynomial(self.num_vars, terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.num_vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        if np.isscalar(other):
            other = Polynomial.constant(self.num_vars, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            if abs(other) < COEFF_EPS:
                return Polynomial.zero(self.num_vars)
            return Polynomial(
                self.num_vars, {e: c * other for e, c in self.terms.items()}
            )
        self._check(other)
        terms: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0.0) + c1 * c2
        return Polynomial(self.num_vars, terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers not supported")
        out = Polynomial.constant(self.num_vars, 1.0)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    # -- queries

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def is_zero(self, tol: float = COEFF_EPS) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    def coefficient_norm(self) -> float:
        return float(np.sqrt(sum(abs(c) ** 2 for c in self.terms.values())))

    def max_imag(self) -> float:
        return max((abs(np.imag(c)) for c in self.terms.values()), default=0.0)

    def real_part(self) -> "Polynomial":
        return Polynomial(
            self.num_vars, {e: float(np.real(c)) for e, c in self.terms.items()}
        )

    def evaluate(self, x) -> float | complex:
        x = np.asarray(x)
        total = 0.0
        for e, c in self.terms.items():
            term = c
            for xi, ei in zip(x, e):
                if ei:
                    term = term * xi**ei
            total = total + term
        return total

    def gradient(self) -> list["Polynomial"]:
        grads = []
        for i in range(self.num_vars):
            terms: dict = {}
            for e, c in self.terms.items():
                if e[i] == 0:
                    continue
                de = list(e)
                de[i] -= 1
                terms[tuple(de)] = terms.get(tuple(de), 0.0) + c * e[i]
            grads.append(Polynomial(self.num_vars, terms))
        return grads

    def substitute_affine(self, transform: np.ndarray, offset: np.ndarray) -> "Polynomial":
        """Change of variables x = offset + transform @ z.

        The result lives in the z-space (transform has shape
        (num_vars, new_num_vars)).
        """
        transform = np.asarray(transform)
        offset = np.asarray(offset)
        new_n = transform.shape[1]
        var_polys = [
            Polynomial.affine(new_n, transform[i], offset[i])
            for i in range(self.num_vars)
        ]
        # memoized powers per variable
        pow_cache: dict[tuple[int, int], Polynomial] = {}

        def var_pow(i, k):
            if k == 0:
                return Polynomial.constant(new_n, 1.0)
            key = (i, k)
            if key not in pow_cache:
                pow_cache[key] = var_polys[i] ** k
            return pow_cache[key]

        out = Polynomial.zero(new_n)
        for e, c in self.terms.items():
            term = Polynomial.constant(new_n, c)
            for i, ei in enumerate(e):
                if ei:
                    term = term * var_pow(i, ei)
            out = out + term
        return out

    def compiled(self) -> "CompiledPolynomial":
        return CompiledPolynomial(self)

    # -- misc

    def to_term_list(self) -> list:
        return [[list(e), _coeff_json(c)] for e, c in sorted(self.terms.items())]

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        parts = []
        for e, c in sorted(self.terms.items(), key=lambda t: (sum(t[0]), t[0])):
            mono = "*".join(f"x{i}^{k}" if k > 1 else f"x{i}" for i, k in enumerate(e) if k)
            parts.append(f"{c:+.4g}" + (f"*{mono}" if mono else ""))
        return "Polynomial(" + " ".join(parts) + ")"


class CompiledPolynomial:
    """Vectorized evaluator: exponent matrix plus coefficient vector."""

    __slots__ = ("expos", "coeffs", "num_vars")

    def __init__(self, poly: Polynomial):
        self.num_vars = poly.num_vars
        if poly.terms:
            self.expos = np.array(list(poly.terms.keys()), dtype=np.int64)
            self.coeffs = np.array([np.real(c) for c in poly.terms.values()])
        else:
            self.expos = np.zeros((0, poly.num_vars), dtype=np.int64)
            self.coeffs = np.zeros(0)

    def __call__(self, x: np.ndarray) -> float:
        if self.coeffs.size == 0:
            return 0.0
        powers = np.power(np.asarray(x)[None, :], self.expos)
        return float(self.coeffs @ np.prod(powers, axis=1))


def _coeff_json(c):
    if abs(np.imag(c)) > COEFF_EPS:
        return [float(np.real(c)), float(np.imag(c))]
    return float(np.real(c))


def quadratic_form_objective(design: np.ndarray, data: np.ndarray, monomials: list[Polynomial]) -> Polynomial:
    """||data - design @ m(x)||^2 expanded over the given monomial vector.

    Expands via the Gram matrix of the design, which is much cheaper than
    squaring residuals one by one.
    """
    a = np.asarray(design)
    y = np.asarray(data)
    gram = a.conj().T @ a
    lin = a.conj().T @ y
    const = float(np.real(y.conj() @ y))
    n = monomials[0].num_vars
    out = Polynomial.constant(n, const)
    k = len(monomials)
    for i in range(k):
        gi = gram[i]
        li = lin[i]
        if abs(li) > COEFF_EPS:
            out = out - (2 * np.real(li)) * monomials[i]
        # diagonal plus symmetrized off-diagonal
        if abs(gi[i]) > COEFF_EPS:
            out = out + float(np.real(gi[i])) * (monomials[i] * monomials[i])
        for j in range(i + 1, k):
            c = 2 * np.real(gi[j])
            if abs(c) > COEFF_EPS:
                out = out + c * (monomials[i] * monomials[j])
    return out.real_part()
