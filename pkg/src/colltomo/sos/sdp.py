"""Small dense semidefinite programming solver.

Solves problems in the linear-matrix-pencil form

    minimize    c . y
    subject to  M_j(y) = C_j + sum_i y_i A_{j,i}  PSD   for each block j
                A_eq y = b_eq

with an infeasible-start primal-dual interior-point method using
Nesterov-Todd scaling, a Mehrotra-style adaptive centering parameter, dense
Cholesky solves and step fraction 0.98. Intended for the small blocks
produced by the moment relaxations in this package (total size a few
hundred at most).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from ..errors import SdpSizeError

MAX_TOTAL_BLOCK_SIZE = 320


@dataclass
class SdpBlock:
    """One PSD block M(y) = const + sum_i y_i A_i with the A_i stored as a
    joint COO list (rows, cols, vidx, vals) covering the full symmetric
    pattern (both triangles)."""

    n: int
    const: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    vidx: np.ndarray
    vals: np.ndarray

    def evaluate(self, y: np.ndarray) -> np.ndarray:
        m = self.const.copy()
        np.add.at(m, (self.rows, self.cols), self.vals * y[self.vidx])
        return m

    def adjoint(self, z: np.ndarray, num_vars: int) -> np.ndarray:
        """[<A_i, Z>]_i via gathering Z at the COO pattern."""
        g = z[self.rows, self.cols] * self.vals
        return np.bincount(self.vidx, weights=g, minlength=num_vars)

    @classmethod
    def from_dense(cls, const: np.ndarray, mats: list[np.ndarray]) -> "SdpBlock":
        n = const.shape[0]
        rows, cols, vidx, vals = [], [], [], []
        for i, a in enumerate(mats):
            r, c = np.nonzero(a)
            rows.extend(r)
            cols.extend(c)
            vidx.extend([i] * len(r))
            vals.extend(a[r, c])
        return cls(
            n=n,
            const=np.asarray(const, dtype=float),
            rows=np.asarray(rows, dtype=np.intp),
            cols=np.asarray(cols, dtype=np.intp),
            vidx=np.asarray(vidx, dtype=np.intp),
            vals=np.asarray(vals, dtype=float),
        )


@dataclass
class SdpProblem:
    num_vars: int
    c: np.ndarray
    blocks: list[SdpBlock]
    eq_matrix: np.ndarray | None = None
    eq_rhs: np.ndarray | None = None

    def total_block_size(self) -> int:
        return sum(b.n for b in self.blocks)

    def validate_size(self):
        total = self.total_block_size()
        if total > MAX_TOTAL_BLOCK_SIZE:
            raise SdpSizeError(
                f"total block size {total} exceeds the dense-solver cap "
                f"{MAX_TOTAL_BLOCK_SIZE}; block sizes: {[b.n for b in self.blocks]}"
            )


@dataclass
class SdpSolution:
    status: str
    y: np.ndarray
    objective: float
    dual_objective: float
    block_primal: list[np.ndarray]
    block_dual: list[np.ndarray]
    eq_dual: np.ndarray | None
    iterations: int
    gap: float
    diagnostics: dict = field(default_factory=dict)


def _nt_scaling(s: np.ndarray, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nesterov-Todd scaling point: W Z W = S. Returns (W, W^{-1})."""
    ws, vs = np.linalg.eigh(s)
    ws = np.clip(ws, 1e-300, None)
    s_half = (vs * np.sqrt(ws)) @ vs.T
    s_half_inv = (vs * (1 / np.sqrt(ws))) @ vs.T
    t = s_half @ z @ s_half
    wt, vt = np.linalg.eigh((t + t.T) / 2)
    wt = np.clip(wt, 1e-300, None)
    t_inv_half = (vt * wt**-0.25) @ vt.T  # t^{-1/4}
    w = s_half @ t_inv_half @ t_inv_half @ s_half
    t_half = (vt * wt**0.25) @ vt.T
    w_inv = s_half_inv @ t_half @ t_half @ s_half_inv
    return (w + w.T) / 2, (w_inv + w_inv.T) / 2


def _max_step(s: np.ndarray, ds: np.ndarray) -> float:
    """Largest alpha with s + alpha ds > 0."""
    l = np.linalg.cholesky((s + s.T) / 2)
    inner = scipy.linalg.solve_triangular(l, ds, lower=True)
    inner = scipy.linalg.solve_triangular(l, inner.T, lower=True).T
    lam = np.linalg.eigvalsh((inner + inner.T) / 2).min()
    if lam >= -1e-14:
        return np.inf
    return -1.0 / lam


def _schur_contribution(block: SdpBlock, w_inv: np.ndarray, num_vars: int, h: np.ndarray):
    """Add <A_i, W^{-1} A_k W^{-1}> for this block into h."""
    order = np.argsort(block.vidx, kind="stable")
    rows, cols = block.rows[order], block.cols[order]
    vidx, vals = block.vidx[order], block.vals[order]
    boundaries = np.flatnonzero(np.diff(vidx)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [len(vidx)]])
    gather_r, gather_c, gather_v = block.rows, block.cols, block.vals
    for s0, e0 in zip(starts, ends):
        i = vidx[s0]
        r, c, v = rows[s0:e0], cols[s0:e0], vals[s0:e0]
        u = (w_inv[:, r] * v) @ w_inv[c, :]
        col = np.bincount(
            block.vidx, weights=u[gather_r, gather_c] * gather_v, minlength=num_vars
        )
        h[:, i] += col


def sdp_solve(
    problem: SdpProblem,
    tol: float = 1e-7,
    max_iter: int = 200,
    verbose: bool = False,
) -> SdpSolution:
    """Primal-dual NT interior-point solve to relative duality gap ``tol``."""
    problem.validate_size()
    m = problem.num_vars
    c = np.asarray(problem.c, dtype=float)
    blocks = problem.blocks
    a_eq = problem.eq_matrix
    b_eq = problem.eq_rhs
    has_eq = a_eq is not None and a_eq.shape[0] > 0
    if has_eq:
        a_eq = np.asarray(a_eq, dtype=float)
        b_eq = np.asarray(b_eq, dtype=float)

    obj_scale = 1.0 + float(np.linalg.norm(c))
    y = np.zeros(m)
    slacks = [np.eye(b.n) * (1.0 + np.linalg.norm(b.const)) for b in blocks]
    duals = [np.eye(b.n) * max(1.0, obj_scale / max(1, b.n)) for b in blocks]
    mu_eq = np.zeros(a_eq.shape[0]) if has_eq else None

    total_n = sum(b.n for b in blocks)
    status = "max_iter"
    it = 0
    gap = np.inf
    for it in range(1, max_iter + 1):
        # residuals
        ms = [b.evaluate(y) for b in blocks]
        r_p = [mv - s for mv, s in zip(ms, slacks)]
        r_d = c.copy()
        for b, z in zip(blocks, duals):
            r_d -= b.adjoint(z, m)
        if has_eq:
            r_d -= a_eq.T @ mu_eq
            r_e = b_eq - a_eq @ y
        gap = sum(np.sum(s * z) for s, z in zip(slacks, duals))
        pobj = float(c @ y)
        dobj = -sum(np.sum(z * b.const) for z, b in zip(duals, blocks))
        if has_eq:
            dobj += float(b_eq @ mu_eq)
        rel_gap = gap / (1 + abs(pobj) + abs(dobj))
        p_res = np.sqrt(sum(np.linalg.norm(r) ** 2 for r in r_p))
        if has_eq:
            p_res = np.hypot(p_res, np.linalg.norm(r_e))
        d_res = np.linalg.norm(r_d)
        if verbose:
            print(
                f"iter {it:3d} gap {rel_gap:9.2e} pres {p_res:9.2e} "
                f"dres {d_res:9.2e} pobj {pobj:+.6e}"
            )
        if rel_gap < tol and p_res < np.sqrt(tol) * 1e-2 and d_res < np.sqrt(tol) * 1e-2:
            status = "optimal"
            break

        mu = gap / total_n
        scalings = [_nt_scaling(s, z) for s, z in zip(slacks, duals)]

        # Schur complement H and the constant part that does not depend on
        # the centering target
        h = np.zeros((m, m))
        for b, (_, w_inv) in zip(blocks, scalings):
            _schur_contribution(b, w_inv, m, h)
        h = (h + h.T) / 2
        h[np.diag_indices_from(h)] += 1e-12 * (1 + np.trace(h) / m)
        try:
            h_fac = scipy.linalg.cho_factor(h)
        except np.linalg.LinAlgError:
            h[np.diag_indices_from(h)] += 1e-8
            h_fac = scipy.linalg.cho_factor(h)

        def solve_kkt(rhs_y, rhs_e):
            if not has_eq:
                return scipy.linalg.cho_solve(h_fac, rhs_y), None
            hi_rhs = scipy.linalg.cho_solve(h_fac, rhs_y)
            hi_at = scipy.linalg.cho_solve(h_fac, a_eq.T)
            schur = a_eq @ hi_at
            schur[np.diag_indices_from(schur)] += 1e-12
            dmu = np.linalg.solve(schur, rhs_e - a_eq @ hi_rhs)
            dy = hi_rhs + hi_at @ dmu
            return dy, dmu

        def directions(sigma_mu):
            g = np.zeros(m)
            targets = []
            for b, (w, w_inv), s, z, rp in zip(blocks, scalings, slacks, duals, r_p):
                if sigma_mu > 0:
                    zw, zv = np.linalg.eigh(z)
                    z_inv = (zv * (1 / np.clip(zw, 1e-300, None))) @ zv.T
                    r_center = sigma_mu * z_inv - s
                else:
                    r_center = -s
                targets.append(r_center)
                t = w_inv @ (r_center - rp) @ w_inv
                g += b.adjoint((t + t.T) / 2, m)
            rhs_y = g - r_d
            dy, dmu = solve_kkt(rhs_y, r_e if has_eq else None)
            d_slacks, d_duals = [], []
            for b, (w, w_inv), rp, r_center in zip(blocks, scalings, r_p, targets):
                ds = b.evaluate(dy) - b.const + rp  # sum_i dy_i A_i + r_p
                dz = w_inv @ (r_center - ds) @ w_inv
                d_slacks.append((ds + ds.T) / 2)
                d_duals.append((dz + dz.T) / 2)
            return dy, dmu, d_slacks, d_duals

        # predictor
        dy_a, dmu_a, ds_a, dz_a = directions(0.0)
        alpha_p = min((_max_step(s, ds) for s, ds in zip(slacks, ds_a)), default=np.inf)
        alpha_d = min((_max_step(z, dz) for z, dz in zip(duals, dz_a)), default=np.inf)
        alpha_p = min(1.0, 0.98 * alpha_p)
        alpha_d = min(1.0, 0.98 * alpha_d)
        gap_aff = sum(
            np.sum((s + alpha_p * ds) * (z + alpha_d * dz))
            for s, ds, z, dz in zip(slacks, ds_a, duals, dz_a)
        )
        sigma = min(1.0, max(0.0, gap_aff / gap)) ** 3

        # corrector (centering step with the Mehrotra sigma)
        dy, dmu, d_slacks, d_duals = directions(sigma * mu)
        alpha_p = min((_max_step(s, ds) for s, ds in zip(slacks, d_slacks)), default=np.inf)
        alpha_d = min((_max_step(z, dz) for z, dz in zip(duals, d_duals)), default=np.inf)
        alpha_p = min(1.0, 0.98 * alpha_p)
        alpha_d = min(1.0, 0.98 * alpha_d)

        y = y + alpha_p * dy
        slacks = [s + alpha_p * ds for s, ds in zip(slacks, d_slacks)]
        duals = [z + alpha_d * dz for z, dz in zip(duals, d_duals)]
        if has_eq:
            mu_eq = mu_eq + alpha_d * dmu

        if alpha_p < 1e-10 and alpha_d < 1e-10:
            status = "infeasible-detected" if p_res > 1e-6 else "max_iter"
            break

    pobj = float(c @ y)
    dobj = -sum(np.sum(z * b.const) for z, b in zip(duals, blocks))
    if has_eq:
        dobj += float(b_eq @ mu_eq)
    comp = sum(np.linalg.norm(s @ z) for s, z in zip(slacks, duals))
    return SdpSolution(
        status=status,
        y=y,
        objective=pobj,
        dual_objective=float(dobj),
        block_primal=slacks,
        block_dual=duals,
        eq_dual=mu_eq,
        iterations=it,
        gap=float(gap),
        diagnostics={"complementarity": float(comp)},
    )
