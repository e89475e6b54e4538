"""Domain types for states, detectors and processes, orthonormal Hermitian
bases, built-in measurement families, channels and random-object generation.

Index conventions fixed here and used project-wide:

- natural basis E_i = |j><k| with i = (j-1)d + k (1-based in formulas,
  0-based in code);
- generalized Gell-Mann order: identity, symmetric (j<k) pairs, antisymmetric
  pairs, then diagonal elements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionError, TomographyError

PSD_TOL = 1e-10
TRACE_TOL = 1e-10
TP_TOL = 1e-8


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# bases and parameterization


@dataclass
class HermitianBasis:
    """Orthonormal Hermitian operator basis: Tr(B_i B_j) = delta_ij, first
    element I/sqrt(d), all others traceless."""

    dim: int
    elements: list[np.ndarray]

    def __post_init__(self):
        if len(self.elements) != self.dim**2:
            raise DimensionError("basis must have dim^2 elements")

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, i):
        return self.elements[i]


def gell_mann_basis(d: int) -> HermitianBasis:
    """Normalized generalized Gell-Mann basis in dimension d."""
    if d < 2:
        raise DimensionError("gell_mann_basis needs d >= 2")
    elems = [np.eye(d, dtype=complex) / np.sqrt(d)]
    sym, antisym = [], []
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1 / np.sqrt(2)
            sym.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1j / np.sqrt(2)
            m[k, j] = 1j / np.sqrt(2)
            antisym.append(m)
    diag = []
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        m[:l, :l] = np.eye(l)
        m[l, l] = -l
        diag.append(m / np.sqrt(l * (l + 1)))
    elems.extend(sym + antisym + diag)
    return HermitianBasis(dim=d, elements=elems)


def parameterize(obj: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    """Real coefficient vector of a Hermitian operator in the given basis."""
    obj = np.asarray(obj)
    if obj.shape != (basis.dim, basis.dim):
        raise DimensionError(f"object shape {obj.shape} does not match basis dim {basis.dim}")
    return np.array([np.trace(b.conj().T @ obj).real for b in basis.elements])


def deparameterize(theta: np.ndarray, basis: HermitianBasis) -> np.ndarray:
    """Inverse of :func:`parameterize`: sum_i theta_i B_i."""
    theta = np.asarray(theta, dtype=float)
    if theta.size != len(basis):
        raise DimensionError(f"expected {len(basis)} coefficients, got {theta.size}")
    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    for t, b in zip(theta, basis.elements):
        out += t * b
    return out


def product_basis_coefficients(
    obj: np.ndarray, basis1: HermitianBasis, basis2: HermitianBasis
) -> np.ndarray:
    """Coefficients of a Hermitian operator on H_{d1 d2} in the product basis
    {B_i kron C_j}, flattened with the first-factor index slow."""
    d1, d2 = basis1.dim, basis2.dim
    obj = np.asarray(obj)
    if obj.shape != (d1 * d2, d1 * d2):
        raise DimensionError("operator does not live on the product space")
    m = obj.reshape(d1, d2, d1, d2)
    out = np.empty(d1**2 * d2**2)
    for i, bi in enumerate(basis1.elements):
        partial = np.einsum("ac,abcd->bd", bi.conj(), m)
        for j, cj in enumerate(basis2.elements):
            out[i * d2**2 + j] = np.trace(cj.conj().T @ partial).real
    return out


# ---------------------------------------------------------------------------
# physical object types


@dataclass
class QuantumState:
    """Density operator: Hermitian, unit trace, PSD (within tolerances)."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.dim, self.dim):
            raise DimensionError(f"state matrix shape {m.shape} != ({self.dim}, {self.dim})")
        if not linalg.is_hermitian(m):
            raise TomographyError("state matrix is not Hermitian within tolerance")
        if abs(np.trace(m).real - 1) > TRACE_TOL or abs(np.trace(m).imag) > TRACE_TOL:
            raise TomographyError(f"state trace {np.trace(m)} != 1")
        if np.linalg.eigvalsh(linalg.hermitian_part(m)).min() < -PSD_TOL:
            raise TomographyError("state matrix has negative eigenvalues")
        self.matrix = m


@dataclass
class Povm:
    """Ordered POVM: PSD elements summing to the identity."""

    dim: int
    elements: list[np.ndarray]

    def __post_init__(self):
        elems = [np.asarray(e, dtype=complex) for e in self.elements]
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for e in elems:
            if e.shape != (self.dim, self.dim):
                raise DimensionError("POVM element has wrong shape")
            if not linalg.is_hermitian(e):
                raise TomographyError("POVM element is not Hermitian")
            if np.linalg.eigvalsh(linalg.hermitian_part(e)).min() < -PSD_TOL:
                raise TomographyError("POVM element is not PSD")
            total += e
        if np.abs(total - np.eye(self.dim)).max() > PSD_TOL:
            raise TomographyError("POVM elements do not sum to the identity")
        self.elements = elems

    def __len__(self):
        return len(self.elements)

    def __getitem__(self, i):
        return self.elements[i]


@dataclass
class ProcessMatrix:
    """Process matrix in the natural basis: d^2 x d^2, Hermitian PSD, with
    Tr_1(X) = I_d (trace preserving) or Tr_1(X) <= I_d."""

    dim: int
    matrix: np.ndarray
    trace_preserving: bool = True

    def __post_init__(self):
        d = self.dim
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (d**2, d**2):
            raise DimensionError(f"process matrix shape {m.shape} != ({d**2}, {d**2})")
        if not linalg.is_hermitian(m):
            raise TomographyError("process matrix is not Hermitian")
        if np.linalg.eigvalsh(linalg.hermitian_part(m)).min() < -PSD_TOL:
            raise TomographyError("process matrix is not PSD")
        pt = linalg.partial_trace(m, d, d, "first")
        gap = pt - np.eye(d)
        if self.trace_preserving:
            if np.abs(gap).max() > TP_TOL:
                raise TomographyError("Tr_1(X) != I for a trace-preserving process")
        else:
            if np.linalg.eigvalsh(linalg.hermitian_part(gap)).max() > TP_TOL:
                raise TomographyError("Tr_1(X) exceeds I")
        self.matrix = m


def natural_basis(d: int) -> list[np.ndarray]:
    """E_i = |j><k| with i = (j-1)d + k."""
    out = []
    for j in range(d):
        for k in range(d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = 1.0
            out.append(m)
    return out


def kraus_to_process(kraus: list[np.ndarray]) -> np.ndarray:
    """Process matrix X = C^T C^* from Kraus operators, natural-basis row
    convention C = [vec(A_1^T), ..., vec(A_r^T)]^T."""
    c = np.array([linalg.vec(a.T) for a in kraus])
    return c.T @ c.conj()


def apply_process(x: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """E(rho) = sum_jk X_jk E_j rho E_k^dagger."""
    x = np.asarray(x)
    d = int(round(np.sqrt(x.shape[0])))
    basis = natural_basis(d)
    out = np.zeros((d, d), dtype=complex)
    for j in range(d**2):
        for k in range(d**2):
            if x[j, k] != 0:
                out += x[j, k] * basis[j] @ rho @ basis[k].conj().T
    return out


def process_superoperator(x: np.ndarray) -> np.ndarray:
    """Matrix M with vec(E(rho)) = M vec(rho)."""
    x = np.asarray(x)
    d = int(round(np.sqrt(x.shape[0])))
    basis = natural_basis(d)
    m = np.zeros((d**2, d**2), dtype=complex)
    for j in range(d**2):
        for k in range(d**2):
            if x[j, k] != 0:
                m += x[j, k] * np.kron(basis[k].conj(), basis[j])
    return m


def bit_phase_flip(p: float) -> ProcessMatrix:
    """Qubit channel with Kraus set {sqrt(p) I, sqrt(1-p) sigma_y}."""
    if not 0 <= p <= 1:
        raise ValueError(f"flip probability {p} outside [0, 1]")
    sy = np.array([[0, -1j], [1j, 0]])
    kraus = [np.sqrt(p) * np.eye(2, dtype=complex), np.sqrt(1 - p) * sy]
    return ProcessMatrix(dim=2, matrix=kraus_to_process(kraus), trace_preserving=True)


# ---------------------------------------------------------------------------
# measurement families


def _ket(*amps) -> np.ndarray:
    v = np.array(amps, dtype=complex)
    return v / np.linalg.norm(v)


def _proj(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


def mub_states_and_measurements() -> tuple[list[QuantumState], list[Povm]]:
    """The five 4-outcome mutually unbiased bases in dimension 4 and the 20
    rank-1 states built from their vectors."""
    zero, one = _ket(1, 0), _ket(0, 1)
    plus, minus = _ket(1, 1), _ket(1, -1)
    r, l = _ket(1, -1j), _ket(1, 1j)

    def t(a, b):
        return np.kron(a, b)

    bases = [
        [t(zero, zero), t(zero, one), t(one, zero), t(one, one)],
        [t(r, plus), t(r, minus), t(l, plus), t(l, minus)],
        [t(plus, r), t(minus, r), t(plus, l), t(minus, l)],
        [
            (t(r, zero) + 1j * t(l, one)) / np.sqrt(2),
            (t(r, zero) - 1j * t(l, one)) / np.sqrt(2),
            (t(r, one) + 1j * t(l, zero)) / np.sqrt(2),
            (t(r, one) - 1j * t(l, zero)) / np.sqrt(2),
        ],
        [
            (t(r, r) + 1j * t(l, l)) / np.sqrt(2),
            (t(r, r) - 1j * t(l, l)) / np.sqrt(2),
            (t(r, l) + 1j * t(l, r)) / np.sqrt(2),
            (t(r, l) - 1j * t(l, r)) / np.sqrt(2),
        ],
    ]
    settings = [Povm(dim=4, elements=[_proj(v) for v in basis]) for basis in bases]
    states = [QuantumState(dim=4, matrix=_proj(v)) for basis in bases for v in basis]
    return states, settings


def sic_qubit_vectors() -> list[np.ndarray]:
    w = np.exp(2j * np.pi / 3)
    return [
        _ket(1, 0),
        _ket(1, np.sqrt(2)),
        _ket(1, np.sqrt(2) * w),
        _ket(1, np.sqrt(2) * w.conjugate()),
    ]


def sic_qubit() -> Povm:
    """Qubit SIC-POVM: four elements (1/2)|psi_l><psi_l| on a regular tetrahedron."""
    return Povm(dim=2, elements=[_proj(v) / 2 for v in sic_qubit_vectors()])


def collective_two_copy_povm() -> Povm:
    """Five-element two-copy collective POVM: (3/4)|psi_l><psi_l|^(x2) for the
    SIC vectors plus the singlet projector."""
    elems = [0.75 * _proj(np.kron(v, v)) for v in sic_qubit_vectors()]
    singlet = _ket(0, 1, -1, 0)
    elems.append(_proj(singlet))
    return Povm(dim=4, elements=elems)


def collective_three_copy_povm() -> Povm:
    """Seven-element three-copy collective POVM from the octahedron vectors."""
    vs = [
        _ket(1, 0),
        _ket(0, 1),
        _ket(1, 1),
        _ket(1, -1),
        _ket(1, 1j),
        _ket(1, -1j),
    ]
    elems = [(2 / 3) * _proj(np.kron(np.kron(v, v), v)) for v in vs]
    rest = np.eye(8, dtype=complex) - sum(elems)
    elems.append(rest)
    return Povm(dim=8, elements=elems)


# ---------------------------------------------------------------------------
# random objects


def haar_random_unitary(d: int, seed=None) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix with the
    R-diagonal phase fix."""
    rng = _rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r)
    return q * (ph / np.abs(ph))


def random_state(d: int, spectrum, seed=None) -> QuantumState:
    """U diag(spectrum) U^dagger with Haar-random U and a fixed spectrum."""
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.size != d or spectrum.min() < 0 or abs(spectrum.sum() - 1) > 1e-12:
        raise ValueError("spectrum must be a length-d probability vector")
    u = haar_random_unitary(d, seed)
    return QuantumState(dim=d, matrix=u @ np.diag(spectrum) @ u.conj().T)


def purity(state: QuantumState) -> float:
    """Tr(rho^2), between 1/d and 1."""
    m = state.matrix
    return float(np.trace(m @ m).real)


# ---------------------------------------------------------------------------
# JSON serialization (complex entries as [re, im], row-major nesting)


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def _matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def state_to_json(s: QuantumState) -> dict:
    return {"dim": s.dim, "matrix": _matrix_to_json(s.matrix)}


def state_from_json(obj: dict) -> QuantumState:
    return QuantumState(dim=int(obj["dim"]), matrix=_matrix_from_json(obj["matrix"]))


def povm_to_json(p: Povm) -> dict:
    return {"dim": p.dim, "elements": [_matrix_to_json(e) for e in p.elements]}


def povm_from_json(obj: dict) -> Povm:
    return Povm(dim=int(obj["dim"]), elements=[_matrix_from_json(e) for e in obj["elements"]])


def process_to_json(x: ProcessMatrix) -> dict:
    return {
        "dim": x.dim,
        "matrix": _matrix_to_json(x.matrix),
        "trace_preserving": bool(x.trace_preserving),
    }


def process_from_json(obj: dict) -> ProcessMatrix:
    return ProcessMatrix(
        dim=int(obj["dim"]),
        matrix=_matrix_from_json(obj["matrix"]),
        trace_preserving=bool(obj["trace_preserving"]),
    )
