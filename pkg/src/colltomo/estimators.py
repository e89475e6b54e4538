"""Closed-form tomography pipelines.

Each estimator follows the same four steps: linear inversion of the design,
reconstruction of the joint operator, decoupling of the tensor factors by a
rank-1 SVD of the rearranged matrix, then symmetrization/normalization and a
projection onto the physical set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg, quantum
from .errors import (
    DegenerateInputError,
    GaugeAmbiguityError,
    ProjectionFailureError,
    RankDeficientError,
    TomographyError,
)
from .forward import LinearModel, numerical_rank
from .quantum import HermitianBasis, Povm, ProcessMatrix, QuantumState


@dataclass
class EstimatorConfig:
    """Inversion choice and tolerances for the closed-form pipelines.

    inversion: 'plain_ls', 'mp_inverse', 'regularized' or 'trace_constrained'
    (the default for QST; enforces the unit-trace coordinate structurally).
    regularization_scale is the c in D = c I.
    """

    inversion: str = "trace_constrained"
    regularization_scale: float = 0.0
    regularization_matrix: np.ndarray | None = None
    recovery_tol: float = 1e-8
    projection_tol: float = 1e-9
    fixed_point_tol: float = 1e-10
    max_projection_iter: int = 500


@dataclass
class TomographyResult:
    estimates: list
    intermediate: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# linear inversion


def _regularization(cfg: EstimatorConfig, n: int) -> np.ndarray:
    if cfg.regularization_matrix is not None:
        d = np.asarray(cfg.regularization_matrix)
        if np.linalg.eigvalsh((d + d.conj().T) / 2).min() < -1e-12:
            raise ValueError("regularization matrix must be PSD")
        return d
    return cfg.regularization_scale * np.eye(n)


def linear_inversion(model: LinearModel, y_hat: np.ndarray, cfg: EstimatorConfig) -> np.ndarray:
    """Solve the design for the stacked parameter vector.

    plain_ls and trace_constrained require full column rank (of the design or
    of the design minus its first column); mp_inverse returns the minimum-norm
    solution; regularized solves with D = c I added to the normal equations.
    """
    a = np.asarray(model.design)
    y = np.asarray(y_hat)
    if a.shape[0] != y.shape[0]:
        raise ValueError("observation length does not match the design")
    herm = a.conj().T

    if cfg.inversion == "plain_ls":
        if numerical_rank(a) < a.shape[1]:
            raise RankDeficientError(
                "design is rank-deficient; use mp_inverse or regularized inversion"
            )
        return np.linalg.solve(herm @ a, herm @ y)

    if cfg.inversion == "mp_inverse":
        return np.linalg.pinv(a, rcond=1e-10) @ y

    if cfg.inversion == "regularized":
        d = _regularization(cfg, a.shape[1])
        return np.linalg.solve(herm @ a + d, herm @ y)

    if cfg.inversion == "trace_constrained":
        d1, d2 = model.dims
        fixed = 1 / np.sqrt(d1 * d2)
        a_first, a_rest = a[:, 0], a[:, 1:]
        if numerical_rank(a_rest) < a_rest.shape[1]:
            raise RankDeficientError(
                "design minus the trace column is rank-deficient; "
                "use mp_inverse or regularized inversion"
            )
        rhs = y - fixed * a_first
        hb = a_rest.conj().T
        x_b = np.linalg.solve(hb @ a_rest, hb @ rhs)
        return np.concatenate([[fixed], x_b])

    raise ValueError(f"unknown inversion {cfg.inversion!r}")


# ---------------------------------------------------------------------------
# Kronecker decoupling


def _normalize_pair(
    left_raw: np.ndarray, right_raw: np.ndarray, normalization
) -> tuple[np.ndarray, np.ndarray]:
    """Fix the scale gauge alpha in (alpha L, R / alpha).

    normalization: 'unit_trace_left', ('trace_sum', t) for Tr(left) = t, or
    ('scale', alpha) to apply an explicit gauge factor.
    """
    if normalization == "unit_trace_left":
        normalization = ("trace_sum", 1.0)
    mode, value = normalization if isinstance(normalization, tuple) else (normalization, None)
    if mode == "trace_sum":
        t = np.trace(left_raw)
        if abs(t) < 1e-10:
            raise DegenerateInputError("left factor has (near-)zero trace; gauge undefined")
        c = value / t
    elif mode == "scale":
        c = value
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return c * left_raw, right_raw / c


def nearest_kron_factor(
    m: np.ndarray, d1: int, d2: int, normalization="unit_trace_left"
) -> tuple[np.ndarray, np.ndarray, float]:
    """Frobenius-nearest Kronecker factorization via the rearranged rank-1 SVD.

    Returns (left, right, residual) with left kron right the nearest Kronecker
    product and the gauge fixed by ``normalization``.
    """
    r = linalg.kron_rearrange(np.asarray(m), d1, d2)
    f = linalg.best_rank_one(r)
    left_raw = linalg.unvec(f.left, d1)
    right_raw = linalg.unvec(f.sigma * f.right.conj(), d2)
    left, right = _normalize_pair(left_raw, right_raw, normalization)
    return left, right, f.residual


def marginal_factor(m: np.ndarray, d1: int | None = None, d2: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Factorization by partial traces: (Tr_2 m, Tr_1 m).

    Optimal for the relative-entropy objective on a unit-trace input. Factor
    dimensions default to the square split.
    """
    m = np.asarray(m)
    if d1 is None:
        d1 = int(round(np.sqrt(m.shape[0])))
    if d2 is None:
        d2 = m.shape[0] // d1
    return (
        linalg.partial_trace(m, d1, d2, "second"),
        linalg.partial_trace(m, d1, d2, "first"),
    )


# ---------------------------------------------------------------------------
# physicality projections


def simplex_projection(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1
    ks = np.arange(1, v.size + 1)
    valid = u - css / ks > 0
    k = ks[valid][-1]
    tau = css[k - 1] / k
    return np.maximum(v - tau, 0.0)


def project_state(m: np.ndarray) -> QuantumState:
    """Eigenbasis-preserving projection onto density matrices: eigenvalues are
    replaced by their Euclidean projection onto the probability simplex."""
    vals, vecs = linalg.hermitian_eig(m)
    lam = simplex_projection(vals)
    out = (vecs * lam) @ vecs.conj().T
    return QuantumState(dim=m.shape[0], matrix=linalg.hermitian_part(out))


def _psd_part(m: np.ndarray) -> np.ndarray:
    vals, vecs = linalg.hermitian_eig(m)
    return (vecs * np.maximum(vals, 0.0)) @ vecs.conj().T


def _povm_violations(elements: list[np.ndarray]) -> tuple[float, float]:
    d = elements[0].shape[0]
    psd = max(0.0, max(-np.linalg.eigvalsh(linalg.hermitian_part(e)).min() for e in elements))
    comp = float(np.linalg.norm(sum(elements) - np.eye(d)))
    return psd, comp


def project_povm(
    elements: list[np.ndarray], tol: float = 1e-9, max_iter: int = 500
) -> Povm:
    """Dykstra alternating projections between the product of PSD cones and the
    affine completeness set sum_l P_l = I.

    Iterates past the contract tolerance down to the domain-type tolerance so
    the returned object passes Povm validation.
    """
    elems = [linalg.hermitian_part(np.asarray(e, dtype=complex)) for e in elements]
    d = elems[0].shape[0]
    n = len(elems)
    inner_tol = min(tol, 1e-11)
    psd_v, comp_v = _povm_violations(elems)
    if psd_v < inner_tol and comp_v < inner_tol:
        return Povm(dim=d, elements=elems)

    increments = [np.zeros((d, d), dtype=complex) for _ in range(n)]
    for _ in range(max_iter):
        # cone step with Dykstra increment
        shifted = [e + inc for e, inc in zip(elems, increments)]
        coned = [_psd_part(s) for s in shifted]
        increments = [s - c for s, c in zip(shifted, coned)]
        # affine completeness step (no increment needed for affine sets)
        gap = (np.eye(d) - sum(coned)) / n
        elems = [linalg.hermitian_part(c + gap) for c in coned]
        psd_v, comp_v = _povm_violations(elems)
        if psd_v < inner_tol and comp_v < inner_tol:
            return Povm(dim=d, elements=elems)
    raise ProjectionFailureError(
        f"POVM projection did not reach {tol} in {max_iter} iterations",
        last_iterate=elems,
    )


def _tp_lift(d: int, delta: np.ndarray) -> np.ndarray:
    # minimum-Frobenius correction with Tr_1(lift) = delta
    return np.kron(np.eye(d), delta) / d


def _process_violations(m: np.ndarray, d: int, tp: bool) -> tuple[float, float]:
    psd = max(0.0, -np.linalg.eigvalsh(linalg.hermitian_part(m)).min())
    gap = linalg.partial_trace(m, d, d, "first") - np.eye(d)
    if tp:
        pt = float(np.linalg.norm(gap))
    else:
        pt = max(0.0, np.linalg.eigvalsh(linalg.hermitian_part(gap)).max())
    return psd, pt


def project_process(m: np.ndarray, tp: bool = True, tol: float = 1e-9, max_iter: int = 500) -> ProcessMatrix:
    """Dykstra projections between the PSD cone and the partial-trace set
    (Tr_1 X = I for TP, Tr_1 X <= I otherwise)."""
    x = linalg.hermitian_part(np.asarray(m, dtype=complex))
    d = int(round(np.sqrt(x.shape[0])))
    inner_tol = min(tol, 1e-11)
    psd_v, pt_v = _process_violations(x, d, tp)
    if psd_v < inner_tol and pt_v < inner_tol:
        return ProcessMatrix(dim=d, matrix=x, trace_preserving=tp)

    increment = np.zeros_like(x)
    for _ in range(max_iter):
        shifted = x + increment
        coned = _psd_part(shifted)
        increment = shifted - coned
        delta = linalg.partial_trace(coned, d, d, "first") - np.eye(d)
        if tp:
            x = coned - _tp_lift(d, delta)
        else:
            # push only the positive part of the excess back
            vals, vecs = linalg.hermitian_eig(delta)
            excess = (vecs * np.maximum(vals, 0.0)) @ vecs.conj().T
            x = coned - _tp_lift(d, excess)
        x = linalg.hermitian_part(x)
        psd_v, pt_v = _process_violations(x, d, tp)
        if psd_v < inner_tol and pt_v < inner_tol:
            return ProcessMatrix(dim=d, matrix=x, trace_preserving=tp)
    raise ProjectionFailureError(
        f"process projection did not reach {tol} in {max_iter} iterations",
        last_iterate=x,
    )


# ---------------------------------------------------------------------------
# QST


def _symmetrize_state_pair(r1: np.ndarray, r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    bar1 = (r1 + r1.conj().T) / 2
    t2 = np.trace(r2)
    t2c = np.trace(r2.conj().T)
    if abs(t2) < 1e-10 or abs(t2c) < 1e-10:
        raise DegenerateInputError("second factor has (near-)zero trace")
    bar2 = (r2 / t2 + r2.conj().T / t2c) / 2
    return bar1, bar2


def reconstruct_joint_state(x: np.ndarray, basis1: HermitianBasis, basis2: HermitianBasis) -> np.ndarray:
    d1, d2 = basis1.dim, basis2.dim
    out = np.zeros((d1 * d2, d1 * d2), dtype=complex)
    for i in range(d1**2):
        for j in range(d2**2):
            c = x[i * d2**2 + j]
            if c != 0:
                out += c * np.kron(basis1[i], basis2[j])
    return out


def estimate_qst(
    model: LinearModel,
    y_hat: np.ndarray,
    cfg: EstimatorConfig | None = None,
    mode: str = "distinct",
    factorization: str = "svd",
) -> TomographyResult:
    """Closed-form collective state tomography.

    distinct mode returns [rho1_hat, rho2_hat]; identical mode additionally
    averages the two projected factors into a single estimate.
    ``factorization`` may be 'svd' (nearest Kronecker product) or 'marginal'.
    """
    cfg = cfg or EstimatorConfig()
    basis1, basis2 = model.meta["basis1"], model.meta["basis2"]
    x = linear_inversion(model, y_hat, cfg)
    rho_tilde = reconstruct_joint_state(x, basis1, basis2)
    if factorization == "marginal":
        r1, r2 = marginal_factor(rho_tilde, basis1.dim, basis2.dim)
        residual = float(np.linalg.norm(rho_tilde - np.kron(r1, r2)))
    else:
        r1, r2, residual = nearest_kron_factor(
            rho_tilde, basis1.dim, basis2.dim, "unit_trace_left"
        )
    bar1, bar2 = _symmetrize_state_pair(r1, r2)
    rho1 = project_state(bar1)
    rho2 = project_state(bar2)
    estimates = [rho1, rho2]
    if mode == "identical":
        avg = (rho1.matrix + rho2.matrix) / 2
        estimates = [QuantumState(dim=rho1.dim, matrix=avg)]
    elif mode != "distinct":
        raise ValueError(f"unknown mode {mode!r}")
    return TomographyResult(
        estimates=estimates,
        intermediate={"x": x, "rho_tilde": rho_tilde, "factors": (r1, r2)},
        diagnostics={"fit_residual": residual},
    )


# ---------------------------------------------------------------------------
# QDT


def estimate_qdt(
    model: LinearModel,
    y_blocks: np.ndarray,
    cfg: EstimatorConfig | None = None,
    mode: str = "distinct",
) -> TomographyResult:
    """Closed-form collective detector tomography.

    ``y_blocks`` has shape (M, L, K): empirical frequencies of the joint
    outcome (l, k) for each probe. distinct mode returns [Povm_P, Povm_Q];
    identical mode averages the two recovered families before projection.
    """
    cfg = cfg or EstimatorConfig()
    if cfg.inversion == "trace_constrained":
        # per-element blocks have no fixed trace coordinate; fall back to LS
        cfg = EstimatorConfig(
            inversion="plain_ls",
            regularization_scale=cfg.regularization_scale,
            regularization_matrix=cfg.regularization_matrix,
        )
    basis1, basis2 = model.meta["basis1"], model.meta["basis2"]
    d1, d2 = basis1.dim, basis2.dim
    y_blocks = np.asarray(y_blocks)
    m_probes, n_l, n_k = y_blocks.shape

    stacked = np.empty((n_l * d1**2, n_k * d2**2), dtype=complex)
    for l in range(n_l):
        for k in range(n_k):
            phi_lk = linear_inversion(model, y_blocks[:, l, k], cfg)
            r_lk = reconstruct_joint_state(phi_lk, basis1, basis2)
            stacked[l * d1**2 : (l + 1) * d1**2, k * d2**2 : (k + 1) * d2**2] = (
                linalg.kron_rearrange(r_lk, d1, d2)
            )

    f = linalg.best_rank_one(stacked)
    left_raw = [linalg.unvec(f.left[l * d1**2 : (l + 1) * d1**2], d1) for l in range(n_l)]
    right_vec = f.sigma * f.right.conj()
    right_raw = [linalg.unvec(right_vec[k * d2**2 : (k + 1) * d2**2], d2) for k in range(n_k)]

    trace_sum = sum(np.trace(p) for p in left_raw)
    if abs(trace_sum) < 1e-10:
        raise DegenerateInputError("recovered first family has (near-)zero total trace")
    c = d1 / trace_sum
    p_tilde = [c * p for p in left_raw]
    q_tilde = [q / c for q in right_raw]

    p_bar = [(p + p.conj().T) / 2 for p in p_tilde]
    q_bar = [(q + q.conj().T) / 2 for q in q_tilde]

    if mode == "identical":
        if n_l != n_k:
            raise ValueError("identical mode needs equally sized families")
        qsum = sum(np.trace(q).real for q in q_bar)
        if abs(qsum) < 1e-10:
            raise DegenerateInputError("second family has (near-)zero total trace")
        q_scaled = [q * (d2 / qsum) for q in q_bar]
        averaged = [(p + q) / 2 for p, q in zip(p_bar, q_scaled)]
        povm = project_povm(averaged, tol=cfg.projection_tol, max_iter=cfg.max_projection_iter)
        estimates = [povm]
    elif mode == "distinct":
        estimates = [
            project_povm(p_bar, tol=cfg.projection_tol, max_iter=cfg.max_projection_iter),
            project_povm(q_bar, tol=cfg.projection_tol, max_iter=cfg.max_projection_iter),
        ]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return TomographyResult(
        estimates=estimates,
        intermediate={"stacked": stacked, "p_tilde": p_tilde, "q_tilde": q_tilde},
        diagnostics={"fit_residual": f.residual, "degenerate_svd": f.degenerate},
    )


# ---------------------------------------------------------------------------
# QPT


def reconstruct_output_states(
    freqs_per_probe: list[list[np.ndarray]],
    settings: list[Povm],
    basis: HermitianBasis,
) -> list[np.ndarray]:
    """Per-probe trace-constrained state tomography (step 1 of the collective
    QPT pipeline). Returns plain matrices; physicality is enforced later on
    the process estimate, not here."""
    d = basis.dim
    design = np.array(
        [quantum.parameterize(el, basis) for povm in settings for el in povm.elements]
    )
    a_first, a_rest = design[:, 0], design[:, 1:]
    fixed = 1 / np.sqrt(d)
    outs = []
    for freqs in freqs_per_probe:
        y = np.concatenate(freqs)
        x_b, *_ = np.linalg.lstsq(a_rest, y - fixed * a_first, rcond=None)
        outs.append(quantum.deparameterize(np.concatenate([[fixed], x_b]), basis))
    return outs


def estimate_qpt(
    model: LinearModel,
    y_hat: np.ndarray,
    cfg: EstimatorConfig | None = None,
    mode: str = "distinct",
    tp: tuple[bool, bool] = (True, True),
    alpha1: float | None = None,
) -> TomographyResult:
    """Closed-form collective process tomography.

    ``y_hat`` stacks vec(rho_out) over probes (the step-1 reconstruction) or
    whatever the model's design row space expects. tp flags the two factors;
    when both are non-TP the gauge needs the calibration value ``alpha1``
    (an estimate of Tr(X1)/d1).
    """
    cfg = cfg or EstimatorConfig(inversion="plain_ls")
    if cfg.inversion == "trace_constrained":
        cfg = EstimatorConfig(
            inversion="plain_ls",
            regularization_scale=cfg.regularization_scale,
            regularization_matrix=cfg.regularization_matrix,
        )
    d1, d2 = model.dims
    x = linear_inversion(model, y_hat, cfg)
    # x ~ vec(X1) kron vec(X2); permute into the Kronecker-product layout
    mix2 = linalg.kron_mixing_matrix(d1**2, d2**2)
    x_kron = linalg.unvec(mix2 @ x, d1**2 * d2**2)
    tp1, tp2 = tp

    if mode == "identical":
        x1_raw, x2_raw, residual = nearest_kron_factor(x_kron, d1**2, d2**2, ("scale", 1.0))
        n1, n2 = np.linalg.norm(x1_raw), np.linalg.norm(x2_raw)
        if n1 < 1e-12 or n2 < 1e-12:
            raise DegenerateInputError("degenerate factor in identical-mode solve")
        c = np.sqrt(n2 / n1)
        x1t, x2t = c * x1_raw, x2_raw / c
        x0 = (x1t + x2t.conj().T) / 2
        t0 = np.trace(x0)
        t0c = np.trace(x0.conj().T)
        if abs(t0) < 1e-10 or abs(t0c) < 1e-10:
            raise DegenerateInputError("identical-mode estimate has (near-)zero trace")
        if tp1:
            scale = d1 / 2
        else:
            # Tr(x_kron) ~ Tr(X0)^2 fixes the overall scale of the estimate
            scale = 0.5 * np.sqrt(abs(np.trace(x_kron + x_kron.conj().T)) / 2)
        x0_bar = scale * (x0 / t0 + x0.conj().T / t0c)
        xhat = project_process(x0_bar, tp=tp1, tol=cfg.projection_tol,
                               max_iter=cfg.max_projection_iter)
        estimates = [xhat]
        factors = (x1t, x2t)
    elif mode == "distinct":
        if tp1:
            target = float(d1)
        elif tp2:
            target = None  # anchor the gauge on the right factor
        else:
            if alpha1 is None:
                raise GaugeAmbiguityError(
                    "both processes are non-TP: the scale gauge needs the calibration "
                    "estimate alpha1 = Tr(X1)/d1"
                )
            target = d1 * float(alpha1)

        if target is not None:
            x1t, x2t, residual = nearest_kron_factor(
                x_kron, d1**2, d2**2, ("trace_sum", target)
            )
        else:
            x1_raw, x2_raw, residual = nearest_kron_factor(
                x_kron, d1**2, d2**2, ("scale", 1.0)
            )
            t2 = np.trace(x2_raw)
            if abs(t2) < 1e-10:
                raise DegenerateInputError("right factor has (near-)zero trace")
            c = t2 / d2
            x1t, x2t = x1_raw * c, x2_raw / c

        x1_bar = (x1t + x1t.conj().T) / 2
        if tp2:
            t2 = np.trace(x2t)
            t2c = np.trace(x2t.conj().T)
            if abs(t2) < 1e-10 or abs(t2c) < 1e-10:
                raise DegenerateInputError("second factor has (near-)zero trace")
            x2_bar = (d2 / 2) * (x2t / t2 + x2t.conj().T / t2c)
        else:
            x2_bar = (x2t + x2t.conj().T) / 2
        estimates = [
            project_process(x1_bar, tp=tp1, tol=cfg.projection_tol,
                            max_iter=cfg.max_projection_iter),
            project_process(x2_bar, tp=tp2, tol=cfg.projection_tol,
                            max_iter=cfg.max_projection_iter),
        ]
        factors = (x1t, x2t)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return TomographyResult(
        estimates=estimates,
        intermediate={"x": x, "x_kron": x_kron, "factors": factors},
        diagnostics={"fit_residual": residual},
    )


# ---------------------------------------------------------------------------
# n-copy recursion and special structure


def n_copy_decouple(m: np.ndarray, dims: list[int]) -> list[np.ndarray]:
    """Recursive nearest-Kronecker factorization into len(dims) factors.

    Every factor except the last is normalized to unit trace; the last keeps
    the remaining scale, so the Kronecker product of the returns is the
    rank-1 chain approximation of the input.
    """
    if len(dims) < 2:
        raise ValueError("need at least two factors")
    d1 = dims[0]
    rest = int(np.prod(dims[1:]))
    left, right, _ = nearest_kron_factor(np.asarray(m), d1, rest, "unit_trace_left")
    if len(dims) == 2:
        return [left, right]
    return [left] + n_copy_decouple(right, dims[1:])


def truncate_pure(state: QuantumState) -> tuple[QuantumState, bool]:
    """Project onto the leading eigenvector (nearest pure state). Returns the
    state and a degeneracy flag for a (near-)degenerate leading eigenvalue."""
    vals, vecs = linalg.hermitian_eig(state.matrix)
    degenerate = len(vals) > 1 and (vals[0] - vals[1]) < 1e-12
    v = vecs[:, 0]
    return QuantumState(dim=state.dim, matrix=np.outer(v, v.conj())), degenerate


def extract_unitary(x: np.ndarray) -> np.ndarray:
    """Recover the unitary G from a (near) rank-1 process matrix
    X ~ vec(G) vec(G)^dagger, phase fixed by the rank-1 convention."""
    vals, vecs = linalg.hermitian_eig(np.asarray(x))
    if vals[0] <= 0:
        raise DegenerateInputError("process matrix has no positive leading eigenvalue")
    v = vecs[:, 0]
    i = int(np.argmax(np.abs(v)))
    if np.abs(v[i]) > 0:
        v = v * (np.abs(v[i]) / v[i])
    d = int(round(np.sqrt(v.size)))
    g = linalg.unvec(np.sqrt(vals[0]) * v, d)
    return linalg.polar_unitary(g)


def estimate_qubit_with_purity(freqs: np.ndarray) -> QuantumState:
    """Purity-aware qubit estimator for the five-outcome two-copy collective
    measurement.

    The first four outcomes give sqrt-rescaled linear data for the SIC
    projectors; the Bloch vector of that least-squares fit is rescaled so the
    purity matches 1 - 2 p5_hat (clamped at the maximally-mixed radius).
    """
    freqs = np.asarray(freqs, dtype=float)
    if freqs.shape != (5,):
        raise ValueError("expected the five outcome frequencies of the two-copy POVM")
    basis = quantum.gell_mann_basis(2)
    design = np.array(
        [quantum.parameterize(np.outer(v, v.conj()), basis) for v in quantum.sic_qubit_vectors()]
    )
    q = np.sqrt(np.clip(freqs[:4], 0.0, None) * 4 / 3)
    fixed = 1 / np.sqrt(2)
    a_first, a_rest = design[:, 0], design[:, 1:]
    bloch, *_ = np.linalg.lstsq(a_rest, q - fixed * a_first, rcond=None)

    target = 0.5 - 2 * freqs[4]
    if target < 1e-12:
        target = 0.0
    norm2 = float(bloch @ bloch)
    if target == 0.0:
        scaled = np.zeros(3)
    else:
        if norm2 <= 1e-12:
            raise DegenerateInputError(
                "Bloch direction undefined: least-squares estimate is maximally mixed"
            )
        scaled = bloch * np.sqrt(target / norm2)
    theta = np.concatenate([[fixed], scaled])
    return QuantumState(dim=2, matrix=quantum.deparameterize(theta, basis))
