"""Linear models linking unknown parameter tensors to measurement statistics:
design-matrix construction, Born probabilities, finite-shot sampling and
rank diagnostics for weak informational completeness."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg, quantum
from .errors import DimensionError, SchemaError, TomographyError
from .quantum import HermitianBasis, Povm, QuantumState

RANK_RTOL = 1e-8


@dataclass
class LinearModel:
    """Design matrix plus bookkeeping for one tomography task.

    kind is 'qst', 'qdt' or 'qpt'. For qst the rows are measurement operators
    grouped into settings (``setting_slices``); for qdt the rows are probe
    states (one setting per probe, L*K outcomes each); for qpt the design is
    the collective matrix mapping vec(X1) kron vec(X2) to stacked output-state
    vectors (or directly to probabilities in 'direct' mode).
    """

    kind: str
    design: np.ndarray
    dims: tuple[int, int]
    setting_slices: list[slice] = field(default_factory=list)
    observation: np.ndarray | None = None
    shots_per_row: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


@dataclass
class CountsRecord:
    setting_id: str
    outcome_counts: np.ndarray
    shots: int

    def __post_init__(self):
        self.outcome_counts = np.asarray(self.outcome_counts, dtype=np.int64)
        if self.outcome_counts.min(initial=0) < 0:
            raise SchemaError(f"negative counts in record {self.setting_id!r}")
        if int(self.outcome_counts.sum()) != int(self.shots):
            raise SchemaError(
                f"record {self.setting_id!r}: counts sum {int(self.outcome_counts.sum())}"
                f" != shots {int(self.shots)}"
            )

    @property
    def frequencies(self) -> np.ndarray:
        return self.outcome_counts / self.shots


# ---------------------------------------------------------------------------
# design matrices


def build_phi(
    settings: list[Povm] | Povm,
    basis1: HermitianBasis,
    basis2: HermitianBasis,
) -> LinearModel:
    """Stack product-basis coefficient rows of all POVM elements.

    Row l holds the coefficients of P_l, so the Born vector is
    p = Phi (theta1 kron theta2).
    """
    if isinstance(settings, Povm):
        settings = [settings]
    d1, d2 = basis1.dim, basis2.dim
    rows, slices, start = [], [], 0
    for povm in settings:
        if povm.dim != d1 * d2:
            raise DimensionError("POVM dimension does not match the product basis")
        for el in povm.elements:
            rows.append(quantum.product_basis_coefficients(el, basis1, basis2))
        slices.append(slice(start, start + len(povm)))
        start += len(povm)
    return LinearModel(
        kind="qst",
        design=np.array(rows),
        dims=(d1, d2),
        setting_slices=slices,
        meta={"settings": settings, "basis1": basis1, "basis2": basis2},
    )


def build_theta(
    probes: list[QuantumState],
    basis1: HermitianBasis,
    basis2: HermitianBasis,
) -> LinearModel:
    """Stack product-basis coefficient rows of the probe states.

    Y_lk = Theta (phi_l kron varphi_k) reproduces the Born probabilities for
    the joint element P_l kron Q_k.
    """
    d1, d2 = basis1.dim, basis2.dim
    rows = []
    for s in probes:
        if s.dim != d1 * d2:
            raise DimensionError("probe dimension does not match the product basis")
        rows.append(quantum.product_basis_coefficients(s.matrix, basis1, basis2))
    return LinearModel(
        kind="qdt",
        design=np.array(rows),
        dims=(d1, d2),
        meta={"probes": probes, "basis1": basis1, "basis2": basis2},
    )


def process_block(probe: np.ndarray) -> np.ndarray:
    """Block M with vec(E(rho)) = M vec(X) for one probe.

    Column for entry X_jk (column-major position (k-1)d^2 + j) is
    (E_k^* kron E_j) vec(rho).
    """
    probe = np.asarray(probe)
    d = probe.shape[0]
    basis = quantum.natural_basis(d)
    m = np.empty((d**2, d**4), dtype=complex)
    v = linalg.vec(probe)
    for k in range(d**2):
        ek = basis[k].conj()
        for j in range(d**2):
            m[:, k * d**2 + j] = np.kron(ek, basis[j]) @ v
    return m


def build_process_model(probes: list[QuantumState]) -> np.ndarray:
    """Stacked per-probe blocks B with B vec(X) = [vec(E(rho_m))]_m."""
    return np.vstack([process_block(s.matrix) for s in probes])


def build_collective_process_model(
    probes: list[QuantumState], d1: int, d2: int, povm_settings: list[Povm] | None = None
) -> LinearModel:
    """Collective design for the joint process on H_{d1 d2}.

    design = B (K kron K) K' satisfies design (vec(X1) kron vec(X2)) = Y with
    Y the stacked output-state vectors. When ``povm_settings`` is given a
    direct-probability design is stored in meta as well.
    """
    d = d1 * d2
    for s in probes:
        if s.dim != d:
            raise DimensionError("probe dimension does not match d1*d2")
    b = build_process_model(probes)
    mix = linalg.kron_mixing_matrix(d1, d2)
    mix2 = linalg.kron_mixing_matrix(d1**2, d2**2)
    perm = np.kron(mix, mix) @ mix2
    design = b @ perm
    meta = {"probes": probes, "B": b, "perm": perm}
    if povm_settings is not None:
        # rows: vec(P_l)^dagger applied to each probe block
        pv = np.vstack(
            [linalg.vec(el).conj() for povm in povm_settings for el in povm.elements]
        )
        direct = np.vstack([pv @ process_block(s.matrix) @ perm for s in probes])
        meta["settings"] = povm_settings
        meta["direct_design"] = direct
    return LinearModel(kind="qpt", design=design, dims=(d1, d2), meta=meta)


# ---------------------------------------------------------------------------
# Born statistics and sampling


def born_probabilities(model: LinearModel, *unknowns) -> list[np.ndarray]:
    """Exact outcome probabilities per setting for the given physical unknowns.

    qst: unknowns = (rho1, rho2) or (rho0,) ; qdt: (povm1, povm2) or (povm0,);
    qpt: (X1, X2) or (X0,) as ProcessMatrix. Results are validated to be in
    [0, 1] and to sum to one per setting.
    """
    if model.kind == "qst":
        states = [u.matrix if isinstance(u, QuantumState) else np.asarray(u) for u in unknowns]
        if len(states) == 1:
            states = states * 2
        rho = np.kron(states[0], states[1])
        probs = [
            np.array([np.trace(el @ rho).real for el in povm.elements])
            for povm in model.meta["settings"]
        ]
    elif model.kind == "qdt":
        povms = list(unknowns)
        if len(povms) == 1:
            povms = povms * 2
        p1 = [np.asarray(e) for e in getattr(povms[0], "elements", povms[0])]
        p2 = [np.asarray(e) for e in getattr(povms[1], "elements", povms[1])]
        probs = []
        for s in model.meta["probes"]:
            probs.append(
                np.array(
                    [
                        np.trace(s.matrix @ np.kron(a, b)).real
                        for a in p1
                        for b in p2
                    ]
                )
            )
    elif model.kind == "qpt":
        xs = [u.matrix if isinstance(u, quantum.ProcessMatrix) else np.asarray(u) for u in unknowns]
        if len(xs) == 1:
            xs = xs * 2
        settings = model.meta.get("settings")
        if settings is None:
            raise TomographyError("qpt model was built without measurement settings")
        d1, d2 = model.dims
        mix = linalg.kron_mixing_matrix(d1, d2)
        x = mix @ np.kron(xs[0], xs[1]) @ mix.T
        probs = []
        for s in model.meta["probes"]:
            out = quantum.apply_process(x, s.matrix)
            for povm in settings:
                probs.append(np.array([np.trace(el @ out).real for el in povm.elements]))
    else:
        raise TomographyError(f"unknown model kind {model.kind!r}")

    for p in probs:
        if p.min() < -1e-12 or p.max() > 1 + 1e-12:
            raise TomographyError("probabilities out of range; unphysical inputs?")
        total = p.sum()
        if abs(total - 1) > 1e-10 and abs(total) > 1e-10:
            # non-TP processes may have sub-normalized outcome sets
            if model.kind != "qpt" or total > 1 + 1e-10:
                raise TomographyError(f"setting probabilities sum to {total}")
    return probs


def split_shots(total_shots: int, n_settings: int) -> list[int]:
    """Equal split with the remainder assigned to the earliest settings."""
    base, rem = divmod(int(total_shots), n_settings)
    return [base + (1 if i < rem else 0) for i in range(n_settings)]


def sample_counts(
    probs: list[np.ndarray], total_shots: int, seed=None, setting_ids: list[str] | None = None
) -> list[CountsRecord]:
    """One multinomial draw per setting from an equal shot split."""
    if total_shots <= 0:
        raise ValueError("total_shots must be positive")
    rng = quantum._rng(seed)
    shots = split_shots(total_shots, len(probs))
    records = []
    for i, (p, n) in enumerate(zip(probs, shots)):
        p = np.clip(np.asarray(p, dtype=float), 0.0, None)
        leftover = 1.0 - p.sum()
        pn = np.append(p, max(leftover, 0.0)) if leftover > 1e-12 else p
        pn = pn / pn.sum()
        draw = rng.multinomial(n, pn)[: len(p)] if len(pn) > len(p) else rng.multinomial(n, pn)
        sid = setting_ids[i] if setting_ids else f"setting-{i}"
        records.append(CountsRecord(setting_id=sid, outcome_counts=draw, shots=n))
    return records


def frequencies(records: list[CountsRecord]) -> list[np.ndarray]:
    return [r.frequencies for r in records]


# ---------------------------------------------------------------------------
# rank diagnostics


def numerical_rank(a: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(np.asarray(a), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def completeness_check(model: LinearModel, required_rank: int) -> tuple[bool, int]:
    """Weak informational completeness: design rank equals the task's full rank."""
    r = numerical_rank(model.design)
    return r == required_rank, r


# ---------------------------------------------------------------------------
# counts file schema


def counts_to_json(measurement: str, records: list[CountsRecord]) -> dict:
    return {
        "measurement": measurement,
        "records": [
            {
                "setting_id": r.setting_id,
                "outcome_counts": [int(c) for c in r.outcome_counts],
                "shots": int(r.shots),
            }
            for r in records
        ],
    }


def counts_from_json(obj: dict) -> tuple[str, list[CountsRecord]]:
    if not isinstance(obj, dict) or "records" not in obj or "measurement" not in obj:
        raise SchemaError("counts file must carry 'measurement' and 'records'")
    records = []
    for rec in obj["records"]:
        try:
            records.append(
                CountsRecord(
                    setting_id=str(rec["setting_id"]),
                    outcome_counts=np.asarray(rec["outcome_counts"], dtype=np.int64),
                    shots=int(rec["shots"]),
                )
            )
        except KeyError as exc:
            raise SchemaError(f"counts record missing field {exc}") from exc
    return str(obj["measurement"]), records
