"""Moment relaxation of a semi-algebraic program.

Builds the order-t moment SDP: a moment matrix over the monomial basis of
degree <= t, localizing matrices for inequality constraints, and shifted
linear moment constraints for equalities. Affine (degree-1) equalities are
eliminated by an orthonormal change of variables before lifting; remaining
equalities generate structural null vectors of the moment matrix, which are
removed by facial reduction so the interior-point solver sees a strictly
feasible cone.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..errors import SdpSizeError
from .poly import Polynomial
from .programs import SemialgebraicProgram
from .sdp import MAX_TOTAL_BLOCK_SIZE, SdpBlock, SdpProblem, SdpSolution, sdp_solve


def monomials_up_to(num_vars: int, degree: int) -> list[tuple]:
    """Graded-lexicographic list of exponent tuples with total degree <= degree."""
    monos = []
    for d in range(degree + 1):
        level = []
        for combo in itertools.combinations_with_replacement(range(num_vars), d):
            e = [0] * num_vars
            for i in combo:
                e[i] += 1
            level.append(tuple(e))
        monos.extend(sorted(level, reverse=True))
    return monos


def basis_size(num_vars: int, degree: int) -> int:
    return math.comb(num_vars + degree, degree)


def _mono_add(a: tuple, b: tuple) -> tuple:
    return tuple(x + y for x, y in zip(a, b))


@dataclass
class BlockMeta:
    kind: str  # 'moment' or 'localizing'
    basis: list[tuple]
    reduction: np.ndarray | None  # W with reduced block = W^T M W
    constraint: Polynomial | None = None
    constraint_index: int | None = None


@dataclass
class MomentRelaxation:
    program: SemialgebraicProgram
    order: int
    sub_offset: np.ndarray
    sub_transform: np.ndarray
    objective_z: Polynomial
    equalities_z: list[Polynomial]
    inequalities_z: list[Polynomial]
    obj_constant: float
    monos: list[tuple]  # degree >= 1 monomials indexing the moment variables
    mono_index: dict
    blocks_meta: list[BlockMeta]
    eq_meta: list[tuple[int, tuple]]
    sdp: SdpProblem

    @property
    def num_z(self) -> int:
        return self.sub_transform.shape[1]

    def to_x(self, z: np.ndarray) -> np.ndarray:
        return self.sub_offset + self.sub_transform @ z

    def moment_matrix(self, y: np.ndarray, reduced: bool = True) -> np.ndarray:
        meta = self.blocks_meta[0]
        nb = len(meta.basis)
        m = np.zeros((nb, nb))
        for r, b in enumerate(meta.basis):
            for c, bc in enumerate(meta.basis):
                mono = _mono_add(b, bc)
                if sum(mono) == 0:
                    m[r, c] = 1.0
                else:
                    m[r, c] = y[self.mono_index[mono]]
        if reduced and meta.reduction is not None:
            w = meta.reduction
            return w.T @ m @ w
        return m


def _affine_elimination(program: SemialgebraicProgram):
    """Split equalities into affine and higher-degree; return the affine
    change of variables x = offset + transform z and the substituted
    polynomials."""
    n = program.num_vars
    affine, rest = [], []
    for h in program.equalities:
        (affine if h.degree() <= 1 else rest).append(h)
    if not affine:
        offset = np.zeros(n)
        transform = np.eye(n)
        return offset, transform, program.objective, rest, list(program.inequalities)

    e = np.zeros((len(affine), n))
    f = np.zeros(len(affine))
    zero = (0,) * n
    for r, h in enumerate(affine):
        for expo, coeff in h.terms.items():
            if expo == zero:
                f[r] = -np.real(coeff)
            else:
                e[r, expo.index(1)] = np.real(coeff)
    offset, *_ = np.linalg.lstsq(e, f, rcond=None)
    if np.linalg.norm(e @ offset - f) > 1e-9 * (1 + np.linalg.norm(f)):
        raise ValueError("affine equality constraints are inconsistent")
    u, s, vt = np.linalg.svd(e)
    rank = int(np.sum(s > 1e-12 * max(1, s[0] if s.size else 1)))
    transform = vt[rank:].T  # orthonormal null-space basis
    objective = program.objective.substitute_affine(transform, offset)
    equalities = [h.substitute_affine(transform, offset) for h in rest]
    inequalities = [g.substitute_affine(transform, offset) for g in program.inequalities]
    equalities = [h for h in equalities if not h.is_zero(1e-12)]
    return offset, transform, objective, equalities, inequalities


def _null_vectors(basis: list[tuple], h: Polynomial, num_vars: int, max_shift: int):
    """Coefficient vectors of x^gamma h over the given basis, for deg(x^gamma h)
    bounded by the basis degree."""
    vecs = []
    pos = {b: i for i, b in enumerate(basis)}
    dh = h.degree()
    for gamma in monomials_up_to(num_vars, max_shift - dh):
        v = np.zeros(len(basis))
        ok = True
        for expo, coeff in h.terms.items():
            mono = _mono_add(expo, gamma)
            if mono not in pos:
                ok = False
                break
            v[pos[mono]] = np.real(coeff)
        if ok and np.linalg.norm(v) > 0:
            vecs.append(v)
    return vecs


def _build_block(
    basis: list[tuple],
    g: Polynomial | None,
    mono_index: dict,
    num_vars_z: int,
    reduction: np.ndarray | None,
) -> SdpBlock:
    """COO assembly of the (possibly reduced) moment/localizing block."""
    nb = len(basis)
    zero = (0,) * num_vars_z
    terms = g.terms if g is not None else {zero: 1.0}
    if reduction is None:
        const = np.zeros((nb, nb))
        rows, cols, vidx, vals = [], [], [], []
        for r in range(nb):
            for c in range(nb):
                base = _mono_add(basis[r], basis[c])
                for expo, coeff in terms.items():
                    mono = _mono_add(base, expo)
                    cr = float(np.real(coeff))
                    if sum(mono) == 0:
                        const[r, c] += cr
                    else:
                        rows.append(r)
                        cols.append(c)
                        vidx.append(mono_index[mono])
                        vals.append(cr)
        return SdpBlock(
            n=nb,
            const=const,
            rows=np.asarray(rows, dtype=np.intp),
            cols=np.asarray(cols, dtype=np.intp),
            vidx=np.asarray(vidx, dtype=np.intp),
            vals=np.asarray(vals, dtype=float),
        )
    # dense assembly per variable, then conjugation by the reduction
    w = reduction
    nred = w.shape[1]
    const = np.zeros((nb, nb))
    per_var: dict[int, np.ndarray] = {}
    for r in range(nb):
        for c in range(nb):
            base = _mono_add(basis[r], basis[c])
            for expo, coeff in terms.items():
                mono = _mono_add(base, expo)
                cr = float(np.real(coeff))
                if sum(mono) == 0:
                    const[r, c] += cr
                else:
                    k = mono_index[mono]
                    if k not in per_var:
                        per_var[k] = np.zeros((nb, nb))
                    per_var[k][r, c] += cr
    const_red = w.T @ const @ w
    rows, cols, vidx, vals = [], [], [], []
    for k, a in per_var.items():
        ared = w.T @ a @ w
        r, c = np.nonzero(np.abs(ared) > 1e-14)
        rows.extend(r)
        cols.extend(c)
        vidx.extend([k] * len(r))
        vals.extend(ared[r, c])
    return SdpBlock(
        n=nred,
        const=const_red,
        rows=np.asarray(rows, dtype=np.intp),
        cols=np.asarray(cols, dtype=np.intp),
        vidx=np.asarray(vidx, dtype=np.intp),
        vals=np.asarray(vals, dtype=float),
    )


def lasserre_relaxation(program: SemialgebraicProgram, order: int) -> MomentRelaxation:
    """Order-t moment relaxation of the program as one SDP."""
    offset, transform, objective, equalities, inequalities = _affine_elimination(program)
    nz = transform.shape[1]
    min_order = max(
        [math.ceil(objective.degree() / 2)]
        + [math.ceil(g.degree() / 2) for g in inequalities]
        + [math.ceil(h.degree() / 2) for h in equalities]
    )
    if order < min_order:
        raise ValueError(f"relaxation order {order} below the minimum {min_order}")

    nb_moment = basis_size(nz, order)
    total_size = nb_moment + sum(
        basis_size(nz, order - math.ceil(g.degree() / 2)) for g in inequalities
    )
    if total_size > MAX_TOTAL_BLOCK_SIZE:
        raise SdpSizeError(
            f"requested relaxation needs total block size ~{total_size} "
            f"(moment matrix {nb_moment}) exceeding the cap {MAX_TOTAL_BLOCK_SIZE}"
        )

    all_monos = monomials_up_to(nz, 2 * order)
    monos = [m for m in all_monos if sum(m) > 0]
    mono_index = {m: i for i, m in enumerate(monos)}
    num_y = len(monos)

    # objective vector
    c = np.zeros(num_y)
    obj_constant = 0.0
    zero = (0,) * nz
    for expo, coeff in objective.terms.items():
        if expo == zero:
            obj_constant = float(np.real(coeff))
        else:
            c[mono_index[expo]] = float(np.real(coeff))

    # blocks
    blocks: list[SdpBlock] = []
    metas: list[BlockMeta] = []
    moment_basis = monomials_up_to(nz, order)
    w_moment = _reduction_matrix(moment_basis, equalities, nz, order)
    blocks.append(_build_block(moment_basis, None, mono_index, nz, w_moment))
    metas.append(BlockMeta(kind="moment", basis=moment_basis, reduction=w_moment))
    for gi, g in enumerate(inequalities):
        tg = order - math.ceil(g.degree() / 2)
        basis_g = monomials_up_to(nz, tg)
        w_g = _reduction_matrix(basis_g, equalities, nz, tg)
        blocks.append(_build_block(basis_g, g.real_part(), mono_index, nz, w_g))
        metas.append(
            BlockMeta(
                kind="localizing",
                basis=basis_g,
                reduction=w_g,
                constraint=g,
                constraint_index=gi,
            )
        )

    # shifted equality constraints on the moments
    eq_rows, eq_rhs, eq_meta = [], [], []
    for hi, h in enumerate(equalities):
        dh = h.degree()
        for delta in monomials_up_to(nz, 2 * order - dh):
            row = np.zeros(num_y)
            rhs = 0.0
            for expo, coeff in h.terms.items():
                mono = _mono_add(expo, delta)
                cr = float(np.real(coeff))
                if sum(mono) == 0:
                    rhs -= cr
                else:
                    row[mono_index[mono]] += cr
            eq_rows.append(row)
            eq_rhs.append(rhs)
            eq_meta.append((hi, delta))

    sdp = SdpProblem(
        num_vars=num_y,
        c=c,
        blocks=blocks,
        eq_matrix=np.asarray(eq_rows) if eq_rows else None,
        eq_rhs=np.asarray(eq_rhs) if eq_rows else None,
    )
    return MomentRelaxation(
        program=program,
        order=order,
        sub_offset=offset,
        sub_transform=transform,
        objective_z=objective,
        equalities_z=equalities,
        inequalities_z=inequalities,
        obj_constant=obj_constant,
        monos=monos,
        mono_index=mono_index,
        blocks_meta=metas,
        eq_meta=eq_meta,
        sdp=sdp,
    )


def _reduction_matrix(basis, equalities, nz, max_degree):
    vecs = []
    for h in equalities:
        vecs.extend(_null_vectors(basis, h.real_part(), nz, max_degree))
    if not vecs:
        return None
    v = np.array(vecs).T  # (nb, nv)
    u, s, _ = np.linalg.svd(v, full_matrices=True)
    rank = int(np.sum(s > 1e-10 * s[0]))
    if rank == 0:
        return None
    return u[:, rank:]


# ---------------------------------------------------------------------------
# post-solve interpretation


def relaxation_bound(relaxation: MomentRelaxation, solution: SdpSolution) -> float:
    """Sound lower bound: the dual objective plus the objective's constant."""
    return relaxation.obj_constant + solution.dual_objective


def extract_candidate(
    relaxation: MomentRelaxation,
    solution: SdpSolution,
    dominance: float = 1e4,
) -> np.ndarray | None:
    """Degree-1 moments as a candidate minimizer when the (reduced) moment
    matrix is numerically rank one; None otherwise."""
    m = relaxation.moment_matrix(solution.y, reduced=True)
    vals = np.linalg.eigvalsh(m)[::-1]
    if len(vals) > 1 and vals[0] < dominance * max(vals[1], 1e-300):
        return None
    nz = relaxation.num_z
    z = np.zeros(nz)
    for i in range(nz):
        e = [0] * nz
        e[i] = 1
        z[i] = solution.y[relaxation.mono_index[tuple(e)]]
    return relaxation.to_x(z)


def certificate_polynomials(relaxation: MomentRelaxation, solution: SdpSolution):
    """Reconstruct (sigma_0, [sigma_g], [lambda_h], gamma) from the dual."""
    nz = relaxation.num_z
    sigmas = []
    for meta, z in zip(relaxation.blocks_meta, solution.block_dual):
        if meta.reduction is not None:
            gram = meta.reduction @ z @ meta.reduction.T
        else:
            gram = z
        basis = meta.basis
        terms: dict = {}
        for r in range(len(basis)):
            for c in range(len(basis)):
                if abs(gram[r, c]) < 1e-16:
                    continue
                mono = _mono_add(basis[r], basis[c])
                terms[mono] = terms.get(mono, 0.0) + gram[r, c]
        sigmas.append(Polynomial(nz, terms))
    lambdas = [Polynomial.zero(nz) for _ in relaxation.equalities_z]
    if solution.eq_dual is not None:
        for (hi, delta), mu in zip(relaxation.eq_meta, solution.eq_dual):
            lambdas[hi] = lambdas[hi] + Polynomial(nz, {delta: mu})
    gamma = relaxation_bound(relaxation, solution)
    return sigmas[0], sigmas[1:], lambdas, gamma


def certificate_residual(relaxation: MomentRelaxation, solution: SdpSolution) -> float:
    """Coefficient norm of objective - gamma - sigma_0 - sum sigma_g g -
    sum lambda_h h over the reduced variables."""
    sigma0, sigma_g, lambdas, gamma = certificate_polynomials(relaxation, solution)
    recon = sigma0 + Polynomial.constant(relaxation.num_z, gamma)
    for s, g in zip(sigma_g, relaxation.inequalities_z):
        recon = recon + s * g.real_part()
    for lam, h in zip(lambdas, relaxation.equalities_z):
        recon = recon + lam * h.real_part()
    diff = relaxation.objective_z - recon
    return diff.coefficient_norm()


def solve_relaxation(relaxation: MomentRelaxation, tol: float = 1e-7, max_iter: int = 200):
    return sdp_solve(relaxation.sdp, tol=tol, max_iter=max_iter)
