"""Semi-algebraic program assembly for the tomography tasks.

Variables are real coordinates of the unknowns: Bloch-type basis coefficients
for states and detector elements, operator-basis coefficients for process
matrices, split real/imaginary parts for pure-state and unitary unknowns.
State programs substitute the fixed unit-trace coordinate at build time;
detector completeness and process partial-trace conditions stay as explicit
equalities (the relaxation eliminates affine equalities internally).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import linalg, quantum
from ..forward import LinearModel
from ..quantum import HermitianBasis
from .kimura import charpoly_constraints, kimura_constraints, symbolic_matrix
from .poly import Polynomial, quadratic_form_objective

TASKS = ("qst_d", "qst_i", "qdt_d", "qdt_i", "qpt_d", "qpt_i", "pure_state", "unitary")


@dataclass
class SemialgebraicProgram:
    num_vars: int
    objective: Polynomial
    equalities: list[Polynomial]
    inequalities: list[Polynomial]
    var_names: list[str]
    structure: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "num_vars": self.num_vars,
            "objective": self.objective.to_term_list(),
            "equalities": [h.to_term_list() for h in self.equalities],
            "inequalities": [g.to_term_list() for g in self.inequalities],
            "var_names": self.var_names,
            "task": self.structure.get("task"),
        }


def _state_polys(num_vars: int, start: int, d: int) -> list[Polynomial]:
    """Coordinate polynomials of a state: fixed first coordinate 1/sqrt(d),
    then d^2 - 1 free variables starting at ``start``."""
    polys = [Polynomial.constant(num_vars, 1 / np.sqrt(d))]
    for i in range(d * d - 1):
        polys.append(Polynomial.variable(num_vars, start + i))
    return polys


def _state_psd_constraints(num_vars: int, start: int, d: int, basis: HermitianBasis):
    """Unit-trace PSD constraints in the free coordinates."""
    if d == 2:
        # Bloch ball: sum of squared free coordinates <= 1/2
        ball = Polynomial.constant(num_vars, 0.5)
        for i in range(3):
            v = Polynomial.variable(num_vars, start + i)
            ball = ball - v * v
        return [ball]
    # substitute the fixed trace coordinate into the d^2-variable constraints
    ks = kimura_constraints(d * d, 0, d, basis)
    transform = np.zeros((d * d, num_vars))
    offset = np.zeros(d * d)
    offset[0] = 1 / np.sqrt(d)
    for i in range(d * d - 1):
        transform[1 + i, start + i] = 1.0
    return [k.substitute_affine(transform, offset) for k in ks]


def _element_ball(num_vars: int, start: int) -> Polynomial:
    """Qubit detector-element ball: sum of all four squared coordinates <= 1."""
    ball = Polynomial.constant(num_vars, 1.0)
    for i in range(4):
        v = Polynomial.variable(num_vars, start + i)
        ball = ball - v * v
    return ball


def _element_psd_constraints(num_vars: int, start: int, d: int, basis: HermitianBasis):
    """Denominator-cleared PSD constraints for one detector element: the
    characteristic-polynomial coefficients of the unnormalized element."""
    mat = symbolic_matrix(basis, num_vars, start)
    return charpoly_constraints(mat, d)


def _asarray_blocks(y_blocks) -> np.ndarray:
    y = np.asarray(y_blocks, dtype=float)
    if y.ndim != 3:
        raise ValueError("detector data must have shape (M, L, K)")
    return y


def build_sos_program(task: str, model: LinearModel, data, identical_factors: bool | None = None,
                      tp: tuple[bool, bool] = (True, True)) -> SemialgebraicProgram:
    """Assemble the polynomial optimization program for a task.

    data: stacked probability vector for qst/pure_state, an (M, L, K)
    frequency array for qdt, the stacked output-state vector for qpt/unitary.
    """
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    if task in ("pure_state", "unitary") and identical_factors is None:
        identical_factors = False

    if task in ("qst_d", "qst_i"):
        return _build_qst(task, model, np.asarray(data, dtype=float))
    if task in ("qdt_d", "qdt_i"):
        return _build_qdt(task, model, _asarray_blocks(data))
    if task in ("qpt_d", "qpt_i"):
        return _build_qpt(task, model, np.asarray(data), tp)
    if task == "pure_state":
        return _build_pure_state(model, np.asarray(data, dtype=float), identical_factors)
    return _build_unitary(model, np.asarray(data), identical_factors)


# ---------------------------------------------------------------------------


def _build_qst(task: str, model: LinearModel, y: np.ndarray) -> SemialgebraicProgram:
    basis1, basis2 = model.meta["basis1"], model.meta["basis2"]
    d1, d2 = basis1.dim, basis2.dim
    if task == "qst_i" and d1 != d2:
        raise ValueError("identical-state task needs equal factor dimensions")
    if task == "qst_i":
        num_vars = d1 * d1 - 1
        t1 = _state_polys(num_vars, 0, d1)
        t2 = t1
        names = [f"theta[{i + 2}]" for i in range(num_vars)]
        groups = [{"kind": "state_free", "start": 0, "d": d1}]
        cons = _state_psd_constraints(num_vars, 0, d1, basis1)
    else:
        num_vars = (d1 * d1 - 1) + (d2 * d2 - 1)
        t1 = _state_polys(num_vars, 0, d1)
        t2 = _state_polys(num_vars, d1 * d1 - 1, d2)
        names = [f"theta1[{i + 2}]" for i in range(d1 * d1 - 1)] + [
            f"theta2[{i + 2}]" for i in range(d2 * d2 - 1)
        ]
        groups = [
            {"kind": "state_free", "start": 0, "d": d1},
            {"kind": "state_free", "start": d1 * d1 - 1, "d": d2},
        ]
        cons = _state_psd_constraints(num_vars, 0, d1, basis1) + _state_psd_constraints(
            num_vars, d1 * d1 - 1, d2, basis2
        )
    monomials = [a * b for a in t1 for b in t2]
    objective = quadratic_form_objective(model.design, y, monomials)
    return SemialgebraicProgram(
        num_vars=num_vars,
        objective=objective,
        equalities=[],
        inequalities=cons,
        var_names=names,
        structure={"task": task, "dims": (d1, d2), "groups": groups, "model": model},
    )


def _build_qdt(task: str, model: LinearModel, y_blocks: np.ndarray) -> SemialgebraicProgram:
    basis1, basis2 = model.meta["basis1"], model.meta["basis2"]
    d1, d2 = basis1.dim, basis2.dim
    _, n_l, n_k = y_blocks.shape
    if task == "qdt_i":
        if d1 != d2 or n_l != n_k:
            raise ValueError("identical-detector task needs matching families")
        num_vars = n_l * d1 * d1
        starts_p = [l * d1 * d1 for l in range(n_l)]
        starts_q = starts_p
        names = [f"phi{l + 1}[{i + 1}]" for l in range(n_l) for i in range(d1 * d1)]
        groups = [{"kind": "povm", "start": 0, "L": n_l, "d": d1}]
    else:
        num_vars = n_l * d1 * d1 + n_k * d2 * d2
        starts_p = [l * d1 * d1 for l in range(n_l)]
        base_q = n_l * d1 * d1
        starts_q = [base_q + k * d2 * d2 for k in range(n_k)]
        names = [f"phi{l + 1}[{i + 1}]" for l in range(n_l) for i in range(d1 * d1)] + [
            f"psi{k + 1}[{i + 1}]" for k in range(n_k) for i in range(d2 * d2)
        ]
        groups = [
            {"kind": "povm", "start": 0, "L": n_l, "d": d1},
            {"kind": "povm", "start": base_q, "L": n_k, "d": d2},
        ]

    p_polys = [
        [Polynomial.variable(num_vars, s + i) for i in range(d1 * d1)] for s in starts_p
    ]
    q_polys = [
        [Polynomial.variable(num_vars, s + i) for i in range(d2 * d2)] for s in starts_q
    ]

    objective = Polynomial.zero(num_vars)
    for l in range(n_l):
        for k in range(n_k):
            monomials = [a * b for a in p_polys[l] for b in q_polys[k]]
            objective = objective + quadratic_form_objective(
                model.design, y_blocks[:, l, k], monomials
            )

    families = [(d1, basis1, starts_p)]
    if task == "qdt_d":
        families.append((d2, basis2, starts_q))

    equalities = []
    for d, _, starts in families:
        for i in range(d * d):
            acc = Polynomial.zero(num_vars)
            for s in starts:
                acc = acc + Polynomial.variable(num_vars, s + i)
            target = np.sqrt(d) if i == 0 else 0.0
            equalities.append(acc - target)

    inequalities = []
    for d, basis, starts in families:
        if d == 2:
            inequalities.extend(_element_ball(num_vars, s) for s in starts)
        else:
            for s in starts:
                inequalities.extend(_element_psd_constraints(num_vars, s, d, basis))

    return SemialgebraicProgram(
        num_vars=num_vars,
        objective=objective,
        equalities=equalities,
        inequalities=inequalities,
        var_names=names,
        structure={
            "task": task,
            "dims": (d1, d2),
            "groups": groups,
            "model": model,
            "shape": (n_l, n_k),
        },
    )


def _process_vec_columns(basis: HermitianBasis) -> np.ndarray:
    """Columns vec(B_i) mapping operator-basis coordinates to vec(X)."""
    return np.column_stack([linalg.vec(b) for b in basis.elements])


def _build_qpt(task: str, model: LinearModel, y: np.ndarray, tp: tuple[bool, bool]) -> SemialgebraicProgram:
    d1, d2 = model.dims
    tp1, tp2 = tp
    op_basis1 = quantum.gell_mann_basis(d1 * d1)
    op_basis2 = quantum.gell_mann_basis(d2 * d2)
    n1, n2 = d1**4, d2**4
    if task == "qpt_i":
        if d1 != d2 or tp1 != tp2:
            raise ValueError("identical-process task needs matching factors")
        num_vars = n1
        starts = [0, 0]
        names = [f"x[{i + 1}]" for i in range(n1)]
        groups = [{"kind": "process", "start": 0, "d": d1, "tp": tp1}]
    else:
        num_vars = n1 + n2
        starts = [0, n1]
        names = [f"x1[{i + 1}]" for i in range(n1)] + [f"x2[{i + 1}]" for i in range(n2)]
        groups = [
            {"kind": "process", "start": 0, "d": d1, "tp": tp1},
            {"kind": "process", "start": n1, "d": d2, "tp": tp2},
        ]

    v1 = _process_vec_columns(op_basis1)
    v2 = _process_vec_columns(op_basis2)
    design = model.design @ np.kron(v1, v2)
    x1_polys = [Polynomial.variable(num_vars, starts[0] + i) for i in range(n1)]
    x2_polys = [Polynomial.variable(num_vars, starts[1] + i) for i in range(n2)]
    monomials = [a * b for a in x1_polys for b in x2_polys]
    objective = quadratic_form_objective(design, y, monomials)

    equalities: list[Polynomial] = []
    inequalities: list[Polynomial] = []
    sys_bases = (quantum.gell_mann_basis(d1), quantum.gell_mann_basis(d2))
    factor_list = [(0, d1, op_basis1, tp1)] if task == "qpt_i" else [
        (0, d1, op_basis1, tp1),
        (n1, d2, op_basis2, tp2),
    ]
    for start, d, op_basis, tp_flag in factor_list:
        mat = symbolic_matrix(op_basis, num_vars, start)
        # partial trace over the first factor as a symbolic d x d matrix
        pt = [
            [
                sum(
                    (mat[a * d + r][a * d + c] for a in range(d)),
                    Polynomial.zero(num_vars),
                )
                for c in range(d)
            ]
            for r in range(d)
        ]
        gap = [
            [
                (1.0 if r == c else 0.0) - pt[r][c]
                for c in range(d)
            ]
            for r in range(d)
        ]
        if tp_flag:
            # Tr_1(X) = I: real/imag parts of the upper triangle
            for r in range(d):
                diag = gap[r][r]
                if not diag.is_zero(1e-15):
                    equalities.append(diag.real_part())
                for c in range(r + 1, d):
                    re = 0.5 * (gap[r][c] + gap[c][r])
                    im = (-0.5j) * (gap[r][c] - gap[c][r])
                    for part in (re, im):
                        if not part.is_zero(1e-15):
                            equalities.append(part.real_part())
        else:
            inequalities.extend(charpoly_constraints(gap, d))
        # PSD of X via the characteristic polynomial of the full matrix
        cps = charpoly_constraints(mat, d * d)
        if tp_flag:
            cps = cps[1:]  # e_1 = Tr X is affine-fixed by the TP constraints
        inequalities.extend(cps)

    return SemialgebraicProgram(
        num_vars=num_vars,
        objective=objective,
        equalities=equalities,
        inequalities=inequalities,
        var_names=names,
        structure={
            "task": task,
            "dims": (d1, d2),
            "groups": groups,
            "model": model,
            "tp": tp,
            "op_bases": (op_basis1, op_basis2),
        },
    )


def _complex_vector_polys(num_vars: int, start: int, d: int) -> list[Polynomial]:
    """d complex amplitudes as polynomials: re parts first, then im parts."""
    out = []
    for i in range(d):
        re = Polynomial.variable(num_vars, start + i)
        im = Polynomial.variable(num_vars, start + d + i)
        out.append(re + 1j * im)
    return out


def _conj(p: Polynomial) -> Polynomial:
    return Polynomial(p.num_vars, {e: np.conj(c) for e, c in p.terms.items()})


def _build_pure_state(model: LinearModel, y: np.ndarray, identical: bool) -> SemialgebraicProgram:
    basis1, basis2 = model.meta["basis1"], model.meta["basis2"]
    d1, d2 = basis1.dim, basis2.dim
    if identical and d1 != d2:
        raise ValueError("identical pure-state task needs equal dimensions")
    if identical:
        num_vars = 2 * d1
        psi1 = _complex_vector_polys(num_vars, 0, d1)
        psi2 = psi1
        groups = [{"kind": "complex_vector", "start": 0, "d": d1}]
        names = [f"re_psi[{i + 1}]" for i in range(d1)] + [
            f"im_psi[{i + 1}]" for i in range(d1)
        ]
    else:
        num_vars = 2 * d1 + 2 * d2
        psi1 = _complex_vector_polys(num_vars, 0, d1)
        psi2 = _complex_vector_polys(num_vars, 2 * d1, d2)
        groups = [
            {"kind": "complex_vector", "start": 0, "d": d1},
            {"kind": "complex_vector", "start": 2 * d1, "d": d2},
        ]
        names = (
            [f"re_psi1[{i + 1}]" for i in range(d1)]
            + [f"im_psi1[{i + 1}]" for i in range(d1)]
            + [f"re_psi2[{i + 1}]" for i in range(d2)]
            + [f"im_psi2[{i + 1}]" for i in range(d2)]
        )

    # upsilon rows act on psi1* x psi1 x psi2* x psi2
    settings = model.meta["settings"]
    mix = linalg.kron_mixing_matrix(d1, d2)
    ops = [el for povm in settings for el in povm.elements]
    upsilon = np.vstack([(mix.T @ linalg.vec(el).conj()) for el in ops])

    vec_prod = [
        _conj(a) * b * _conj(c) * e for a in psi1 for b in psi1 for c in psi2 for e in psi2
    ]
    # order must match kron(psi1*, psi1, psi2*, psi2): first index slowest
    objective = Polynomial.zero(num_vars)
    for row, target in zip(upsilon, y):
        res = Polynomial.constant(num_vars, -float(target))
        for coeff, mono in zip(row, vec_prod):
            if abs(coeff) > 1e-15:
                res = res + coeff * mono
        if res.max_imag() > 1e-9:
            raise ValueError("pure-state residual polynomial is not real")
        res = res.real_part()
        objective = objective + res * res
    equalities = []
    for polys in ([psi1] if identical else [psi1, psi2]):
        norm = Polynomial.constant(num_vars, -1.0)
        for p in polys:
            norm = norm + (_conj(p) * p).real_part()
        equalities.append(norm)
    return SemialgebraicProgram(
        num_vars=num_vars,
        objective=objective,
        equalities=equalities,
        inequalities=[],
        var_names=names,
        structure={
            "task": "pure_state",
            "dims": (d1, d2),
            "identical": identical,
            "groups": groups,
            "model": model,
        },
    )


def _build_unitary(model: LinearModel, y: np.ndarray, identical: bool) -> SemialgebraicProgram:
    d1, d2 = model.dims
    if identical and d1 != d2:
        raise ValueError("identical unitary task needs equal dimensions")
    if identical:
        num_vars = 2 * d1 * d1
        g1_start, g2_start = 0, 0
        groups = [{"kind": "unitary", "start": 0, "d": d1}]
    else:
        num_vars = 2 * d1 * d1 + 2 * d2 * d2
        g1_start, g2_start = 0, 2 * d1 * d1
        groups = [
            {"kind": "unitary", "start": 0, "d": d1},
            {"kind": "unitary", "start": g2_start, "d": d2},
        ]
    names = [f"g[{i}]" for i in range(num_vars)]

    def entry(start, d, r, c):
        # column-major vec layout, re block then im block
        idx = c * d + r
        re = Polynomial.variable(num_vars, start + idx)
        im = Polynomial.variable(num_vars, start + d * d + idx)
        return re + 1j * im

    def vec_g(start, d):
        return [entry(start, d, i % d, i // d) for i in range(d * d)]

    vg1 = vec_g(g1_start, d1)
    vg2 = vg1 if identical else vec_g(g2_start, d2)
    prod = [
        _conj(a) * b * _conj(c) * e for a in vg1 for b in vg1 for c in vg2 for e in vg2
    ]
    objective = Polynomial.zero(num_vars)
    for row, target in zip(model.design, y):
        res = Polynomial.constant(num_vars, -complex(target))
        for coeff, mono in zip(row, prod):
            if abs(coeff) > 1e-15:
                res = res + coeff * mono
        re = res.real_part()
        im = Polynomial(num_vars, {e: float(np.imag(c)) for e, c in res.terms.items()})
        objective = objective + re * re + im * im

    equalities = []
    for start, d in ([(g1_start, d1)] if identical else [(g1_start, d1), (g2_start, d2)]):
        for r in range(d):
            for c in range(r, d):
                acc = Polynomial.constant(num_vars, -1.0 if r == c else 0.0)
                for k in range(d):
                    acc = acc + entry(start, d, r, k) * _conj(entry(start, d, c, k))
                re = acc.real_part()
                if not re.is_zero(1e-15):
                    equalities.append(re)
                if r != c:
                    im = Polynomial(
                        num_vars, {e: float(np.imag(cf)) for e, cf in acc.terms.items()}
                    )
                    if not im.is_zero(1e-15):
                        equalities.append(im)

    return SemialgebraicProgram(
        num_vars=num_vars,
        objective=objective,
        equalities=equalities,
        inequalities=[],
        var_names=names,
        structure={
            "task": "unitary",
            "dims": (d1, d2),
            "identical": identical,
            "groups": groups,
            "model": model,
        },
    )
