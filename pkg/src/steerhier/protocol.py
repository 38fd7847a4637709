"""The labeling pipeline: pre-filter, SDP iteration ladder, dataset production.

A random state is first screened by the PPT criterion (separable) and the
closed-form unsteerability criterion, then climbs the ladder: at each level
``n`` it is tested against up to ``budgets[n]`` freshly sampled n-setting
measurement batteries; the first validated steering witness assigns the
``MS n`` label.  States surviving all fine levels get a coarse stage with
many settings and few rounds; survivors of that are dropped.

Dataset generation is deterministic: state ``i`` uses a splitmix64-derived
seed from ``(master_seed, i)``, so output bytes do not depend on the number
of workers.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field

import numpy as np

from . import qcore, steer_sdp
from .criteria import bhqb_unsteerable
from .qcore import SingularMarginalError, ValidationError
from .steer_sdp import SolverConfig

__all__ = [
    "LABELS",
    "ProtocolConfig",
    "LabeledRecord",
    "prefilter",
    "sdp_ladder",
    "label_state",
    "generate_dataset",
    "read_dataset",
    "theta_row",
    "state_from_theta_row",
    "state_seed",
    "splitmix64",
]

LABELS = ("SEP", "UNS", "MS2", "MS3", "MS4", "STE", "DROPPED")

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 finalization step."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def state_seed(master_seed: int, index: int) -> int:
    """Per-state 64-bit seed; random access into the splitmix stream."""
    return splitmix64((master_seed + index * _GOLDEN) & _MASK64)


@dataclass(frozen=True)
class ProtocolConfig:
    """Budgets and solver settings for the labeling ladder."""

    budgets: dict[int, int]
    coarse_n: int
    coarse_budget: int
    master_seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    preset: str = "custom"

    def __post_init__(self):
        for n, b in self.budgets.items():
            if b <= 0:
                raise ValueError(f"budget for level {n} must be positive, got {b}")
        if self.coarse_budget <= 0 or self.coarse_n < 1:
            raise ValueError("coarse stage parameters must be positive")

    @classmethod
    def paper(cls, master_seed: int = 0, with_level5: bool = False) -> "ProtocolConfig":
        """Full-scale budgets: 900 / 27,000 / 810,000 rounds, coarse 12x100.

        The optional fifth level (24 million rounds) is available but not
        part of the preset default.
        """
        budgets = {2: 900, 3: 27_000, 4: 810_000}
        if with_level5:
            budgets[5] = 24_000_000
        return cls(budgets=budgets, coarse_n=12, coarse_budget=100,
                   master_seed=master_seed, preset="paper")

    @classmethod
    def desk(cls, master_seed: int = 0) -> "ProtocolConfig":
        """Reduced budgets (200 / 2,000 / 20,000, coarse 8x50) for desk-scale runs.

        Labels near hierarchy borders are budget-sensitive at this scale.
        """
        return cls(budgets={2: 200, 3: 2_000, 4: 20_000}, coarse_n=8,
                   coarse_budget=50, master_seed=master_seed, preset="desk")


@dataclass(frozen=True)
class LabeledRecord:
    seed: int
    theta: np.ndarray
    label: str
    level_trace: dict[int, int] | None = None

    def __post_init__(self):
        if self.label not in LABELS or self.label == "DROPPED":
            raise ValidationError(f"invalid record label {self.label!r}")
        t = np.asarray(self.theta, dtype=float)
        if t.shape != (15,):
            raise ValidationError("record theta must have 15 entries")
        object.__setattr__(self, "theta", t)


def theta_row(rho: np.ndarray) -> np.ndarray:
    """General-15 row of a state (Theta row-major, Theta00 skipped)."""
    return qcore.pauli_decompose(rho).theta.ravel()[1:]


def state_from_theta_row(row) -> np.ndarray:
    theta = np.empty(16)
    theta[0] = 1.0
    theta[1:] = np.asarray(row, dtype=float)
    return qcore.pauli_compose(qcore.PauliRep(theta.reshape(4, 4)))


def prefilter(rho: np.ndarray) -> str:
    """'SEP' for PPT states, 'UNS' when the closed-form criterion fires, else 'IND'."""
    if qcore.ppt_is_separable(rho):
        return "SEP"
    try:
        if bhqb_unsteerable(rho).verdict == "Unsteerable":
            return "UNS"
    except SingularMarginalError:
        pass
    return "IND"


_CHUNK_SCHEDULE = (64, 512, 2048)


def _scan_level(theta, n: int, budget: int, rng, cfg: SolverConfig):
    """Run up to ``budget`` independent n-setting rounds; stop at the first hit.

    Returns (rounds_consumed, axes_of_hit, witness_bloch) with axes None
    when every round failed.  Axes for the whole level are drawn upfront so
    RNG consumption is independent of where the scan stops.
    """
    axes = steer_sdp.sample_axes(rng, budget * n).reshape(budget, n, 3)
    start = 0
    ci = 0
    while start < budget:
        size = min(_CHUNK_SCHEDULE[min(ci, len(_CHUNK_SCHEDULE) - 1)], budget - start)
        ci += 1
        chunk = axes[start:start + size]
        rhs = steer_sdp.bloch_rhs_from_theta(theta, chunk)
        status, _, certs = steer_sdp._solve_batch(rhs, n, cfg)
        hits = np.flatnonzero(status == 1)
        if hits.size:
            j = int(hits[0])
            return start + j + 1, chunk[j], certs[j][0]
        start += size
    return budget, None, None


def sdp_ladder(rho: np.ndarray, cfg: ProtocolConfig, rng: np.random.Generator):
    """Fine-grained levels then the coarse stage.

    Returns (label, level_trace, evidence); evidence is (n, axes, witness)
    for steerable labels, else None.  A steerable label is only ever
    assigned after the witness re-validates against the full assemblage.
    """
    theta = qcore.pauli_decompose(rho).theta
    trace: dict[int, int] = {}
    stages = [(n, cfg.budgets[n], f"MS{n}") for n in sorted(cfg.budgets)]
    stages.append((cfg.coarse_n, cfg.coarse_budget, "STE"))
    for n, budget, label in stages:
        used, axes, wit_bloch = _scan_level(theta, n, budget, rng, cfg.solver)
        trace[n] = used
        if axes is not None:
            ms = [steer_sdp.Measurement(u) for u in axes]
            asm = steer_sdp.build_assemblage(rho, ms)
            witness = steer_sdp._witness_to_matrices(wit_bloch)
            if steer_sdp.validate_witness(asm, witness, cfg.solver):
                return label, trace, (n, axes, witness)
            # certificate failed the strict re-validation: treat the whole
            # level as failed rather than risk an unsound label
    return "DROPPED", trace, None


def label_state(rho: np.ndarray, cfg: ProtocolConfig, rng: np.random.Generator):
    """Pre-filter then ladder.  Returns (label, level_trace, evidence)."""
    verdict = prefilter(rho)
    if verdict in ("SEP", "UNS"):
        return verdict, {}, None
    return sdp_ladder(rho, cfg, rng)


# --------------------------------------------------------------------------
# dataset production
# --------------------------------------------------------------------------

_DATASET_HEADER = "#steerhier-dataset v1 preset="


def _label_one(args):
    index, master_seed, cfg = args
    seed = state_seed(master_seed, index)
    rng = np.random.Generator(np.random.PCG64(seed))
    rho = qcore.random_state(rng)
    label, trace, evidence = label_state(rho, cfg, rng)
    row = theta_row(rho)
    return index, seed, label, row, trace, evidence


def _format_record(seed: int, label: str, row: np.ndarray) -> str:
    vals = ",".join(f"{v:.17g}" for v in row)
    return f"{seed:016x},{label},{vals}"


def generate_dataset(count: int, cfg: ProtocolConfig, path, threads: int = 1,
                     emit_certs=None, progress=None) -> dict:
    """Label ``count`` random states and write the non-dropped records.

    Output is byte-identical for a fixed (count, cfg) regardless of
    ``threads``.  Returns a stats dict with the label histogram.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    jobs = [(i, cfg.master_seed, cfg) for i in range(count)]
    if threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_label_one, jobs, chunksize=8))
    else:
        results = []
        for job in jobs:
            results.append(_label_one(job))
            if progress is not None:
                progress(len(results), count)
    results.sort(key=lambda r: r[0])

    hist = {label: 0 for label in LABELS}
    cert_lines = []
    with open(path, "w") as fh:
        fh.write(f"{_DATASET_HEADER}{cfg.preset}\n")
        for index, seed, label, row, trace, evidence in results:
            hist[label] += 1
            if label == "DROPPED":
                continue
            fh.write(_format_record(seed, label, row) + "\n")
            if emit_certs is not None and evidence is not None:
                n, axes, witness = evidence
                ax = ",".join(f"{v:.17g}" for v in axes.ravel())
                wv = ",".join(
                    f"{v:.17g}" for v in np.concatenate(
                        [witness.ravel().real, witness.ravel().imag])
                )
                cert_lines.append(f"{seed:016x},{n},{ax},{wv}")
    if emit_certs is not None:
        with open(emit_certs, "w") as fh:
            fh.write("#steerhier-certs v1\n")
            for line in cert_lines:
                fh.write(line + "\n")
    return {"count": count, "histogram": hist,
            "dropped": hist["DROPPED"], "written": count - hist["DROPPED"]}


def read_dataset(path):
    """Read a dataset file; returns (preset, list of LabeledRecord)."""
    records = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(_DATASET_HEADER):
            raise ValidationError(f"not a steerhier dataset: {header!r}")
        preset = header[len(_DATASET_HEADER):]
        for line in fh:
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(",")
            if len(parts) != 17:
                raise ValidationError("dataset record has the wrong arity")
            seed = int(parts[0], 16)
            label = parts[1]
            row = np.array([float(p) for p in parts[2:]])
            records.append(LabeledRecord(seed=seed, theta=row, label=label))
    return preset, records
