"""Generalized-Werner state families, hierarchy maps, borders, and MAD.

Two one-parameter deformations of the Werner state are mapped over the
(xi, q) rectangle: Type-1 mixes the partially entangled pure state with
white noise, Type-2 with a product of Alice's pure-state marginal and
maximally mixed noise on Bob.  Each grid cell is labeled either by the
SDP protocol (ground truth) or by a trained classifier, borders between
hierarchy levels are extracted per column, and two borders are compared
by their mean absolute displacement (MAD).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import mlp as _mlp
from . import protocol as _protocol
from .features import encode
from .qcore import ValidationError, partial_trace, slocc_canonicalize

__all__ = [
    "FamilyPoint",
    "HierarchyGrid",
    "Border",
    "STEER_ORDER",
    "make_state",
    "werner_state",
    "compute_map",
    "extract_border",
    "mad",
    "hidden_steer_demo",
    "write_map",
    "read_map",
    "write_svg",
]

#: label order by steerability strength; DROPPED sits below every
#: demonstrated-steerable level (unknown is never counted as steerable)
STEER_ORDER = {"SEP": 0, "UNS": 1, "DROPPED": 2, "STE": 3,
               "MS4": 4, "MS3": 5, "MS2": 6}


@dataclass(frozen=True)
class FamilyPoint:
    """A point of one of the two deformation families."""

    family: int
    q: float
    xi: float

    def __post_init__(self):
        if self.family not in (1, 2):
            raise ValidationError("family must be 1 or 2")
        if not 0.0 <= self.q <= 1.0:
            raise ValidationError(f"q must lie in [0, 1], got {self.q}")
        if not 0.0 <= self.xi <= np.pi / 2 + 1e-12:
            raise ValidationError(f"xi must lie in [0, pi/2], got {self.xi}")


def _psi(xi: float) -> np.ndarray:
    v = np.zeros(4, dtype=complex)
    v[0] = np.cos(xi)
    v[3] = np.sin(xi)
    return v


def make_state(p: FamilyPoint) -> np.ndarray:
    """Type-1: q |psi><psi| + (1-q) I/4; Type-2 replaces the noise term by
    rho^A (x) I/2 with rho^A the pure state's Alice marginal."""
    psi = _psi(p.xi)
    pure = np.outer(psi, psi.conj())
    if p.family == 1:
        noise = np.eye(4, dtype=complex) / 4.0
    else:
        rho_a = partial_trace(pure, "B")
        noise = np.kron(rho_a, np.eye(2, dtype=complex) / 2.0)
    return p.q * pure + (1.0 - p.q) * noise


def werner_state(q: float) -> np.ndarray:
    """rho_W(q): the Type-1 state at xi = pi/4."""
    return make_state(FamilyPoint(1, q, np.pi / 4))


@dataclass(frozen=True)
class HierarchyGrid:
    """Labels over the inclusive rectangle [0, pi/2] x [0, 1].

    ``labels[i, j]`` is the label at (xi_values[i], q_values[j]).
    ``source`` is 'protocol' or 'model:<scheme>'.
    """

    family: int
    xi_values: np.ndarray
    q_values: np.ndarray
    labels: np.ndarray
    source: str

    def __post_init__(self):
        lab = np.asarray(self.labels)
        if lab.shape != (len(self.xi_values), len(self.q_values)):
            raise ValidationError("label grid shape does not match axes")
        bad = set(lab.ravel()) - set(STEER_ORDER)
        if bad:
            raise ValidationError(f"unknown grid labels {sorted(bad)}")
        object.__setattr__(self, "labels", lab)


@dataclass(frozen=True)
class Border:
    """Per-column smallest q reaching ``level``; NaN marks absent columns."""

    level: str
    q_of_xi: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q_of_xi, dtype=float)
        ok = np.isnan(q) | ((q >= 0.0) & (q <= 1.0))
        if not np.all(ok):
            raise ValidationError("border values must lie in [0, 1] or be NaN")
        object.__setattr__(self, "q_of_xi", q)


def compute_map(family: int, n_xi: int, n_q: int, source: str = "protocol",
                cfg: _protocol.ProtocolConfig | None = None, model=None,
                master_seed: int = 0, progress=None) -> HierarchyGrid:
    """Label every cell of an n_xi x n_q grid.

    Protocol cells draw their measurement axes from a per-cell derived
    seed, so the map is reproducible cell by cell.  Model cells predict
    from the trained classifier (labels then lie in the five-class set).
    A labeler error degrades the cell to DROPPED rather than aborting.
    """
    if n_xi < 2 or n_q < 2:
        raise ValidationError("grid must be at least 2x2")
    if source == "model":
        if model is None:
            raise ValidationError("model source requires a model")
        src = f"model:{model.scheme}"
    elif source == "protocol":
        cfg = cfg or _protocol.ProtocolConfig.desk(master_seed=master_seed)
        src = "protocol"
    else:
        raise ValidationError("source must be 'protocol' or 'model'")
    xi_values = np.linspace(0.0, np.pi / 2, n_xi)
    q_values = np.linspace(0.0, 1.0, n_q)
    labels = np.empty((n_xi, n_q), dtype=object)
    for i, xi in enumerate(xi_values):
        for j, q in enumerate(q_values):
            rho = make_state(FamilyPoint(family, float(q), float(xi)))
            try:
                if source == "protocol":
                    seed = _protocol.state_seed(master_seed, i * n_q + j)
                    rng = np.random.Generator(np.random.PCG64(seed))
                    labels[i, j], _, _ = _protocol.label_state(rho, cfg, rng)
                else:
                    feat = encode(rho, model.scheme).values
                    labels[i, j] = _mlp.CLASS_LABELS[
                        int(np.argmax(_mlp.forward(model, feat)))
                    ]
            except (ValidationError, ValueError):
                labels[i, j] = "DROPPED"
        if progress is not None:
            progress(i + 1, n_xi)
    return HierarchyGrid(family, xi_values, q_values, labels.astype(str), src)


def extract_border(grid: HierarchyGrid, level: str) -> Border:
    """Smallest q per xi-column whose label is at least as steerable as level."""
    if level not in STEER_ORDER:
        raise ValidationError(f"unknown level {level!r}")
    rank = STEER_ORDER[level]
    out = np.full(len(grid.xi_values), np.nan)
    for i in range(len(grid.xi_values)):
        ranks = np.array([STEER_ORDER[lab] for lab in grid.labels[i]])
        hit = np.flatnonzero(ranks >= rank)
        if hit.size:
            out[i] = grid.q_values[hit[0]]
    return Border(level, out)


def mad(a: Border, b: Border) -> tuple[float, int]:
    """Mean absolute displacement over columns defined on both sides.

    Returns (mad, excluded_columns).  Raises when no column is defined in
    both borders.
    """
    qa, qb = a.q_of_xi, b.q_of_xi
    if qa.shape != qb.shape:
        raise ValidationError("borders have different lengths")
    both = ~np.isnan(qa) & ~np.isnan(qb)
    if not np.any(both):
        raise ValidationError("MAD undefined: no column defined in both borders")
    value = float(np.mean(np.abs(qa[both] - qb[both])))
    return value, int(np.sum(~both))


def hidden_steer_demo(q: float, xi: float,
                      cfg: _protocol.ProtocolConfig | None = None,
                      master_seed: int = 0) -> dict:
    """Steering activation by a one-way filter on Alice.

    The Type-2 state at (q, xi) maps to the Werner state rho_W(q) under
    the Alice-side canonicalization, and shares Bob's ellipsoid feature
    with it, yet the two can sit at different hierarchy levels.  Returns
    a report dict with the canonicalization error, the feature gap, and
    the protocol labels of both states.
    """
    if not 0.0 < xi < np.pi / 2:
        raise ValidationError("xi must lie strictly inside (0, pi/2)")
    cfg = cfg or _protocol.ProtocolConfig.desk(master_seed=master_seed)
    rho2 = make_state(FamilyPoint(2, q, xi))
    ref = werner_state(q)
    canon_err = float(np.max(np.abs(slocc_canonicalize(rho2, "A") - ref)))
    feat_err = float(np.max(np.abs(
        encode(rho2, "EllB9").values - encode(ref, "EllB9").values
    )))
    rng = np.random.Generator(np.random.PCG64(_protocol.state_seed(master_seed, 0)))
    label2, _, _ = _protocol.label_state(rho2, cfg, rng)
    rng = np.random.Generator(np.random.PCG64(_protocol.state_seed(master_seed, 1)))
    label_w, _, _ = _protocol.label_state(ref, cfg, rng)
    return {
        "q": q,
        "xi": xi,
        "canonicalization_error": canon_err,
        "ellb9_feature_error": feat_err,
        "label_type2": label2,
        "label_werner": label_w,
        "activated": STEER_ORDER[label_w] > STEER_ORDER[label2],
    }


# --------------------------------------------------------------------------
# map file and figure emission
# --------------------------------------------------------------------------

_MAP_HEADER = "#steerhier-map v1 family="


def write_map(grid: HierarchyGrid, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{_MAP_HEADER}{grid.family} source={grid.source}\n")
        for i, xi in enumerate(grid.xi_values):
            for j, q in enumerate(grid.q_values):
                fh.write(f"{xi:.17g},{q:.17g},{grid.labels[i, j]}\n")


def read_map(path) -> HierarchyGrid:
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(_MAP_HEADER):
            raise ValidationError(f"not a steerhier map file: {header!r}")
        rest = header[len(_MAP_HEADER):]
        fam_str, src = rest.split(" source=")
        rows = []
        for line in fh:
            if not line.strip():
                continue
            xi, q, lab = line.rstrip("\n").split(",")
            rows.append((float(xi), float(q), lab))
    xi_values = np.array(sorted({r[0] for r in rows}))
    q_values = np.array(sorted({r[1] for r in rows}))
    labels = np.empty((len(xi_values), len(q_values)), dtype=object)
    xi_index = {v: i for i, v in enumerate(xi_values)}
    q_index = {v: j for j, v in enumerate(q_values)}
    for xi, q, lab in rows:
        labels[xi_index[xi], q_index[q]] = lab
    if any(v is None for v in labels.ravel()):
        raise ValidationError("map file does not cover a full grid")
    return HierarchyGrid(int(fam_str), xi_values, q_values, labels.astype(str), src)


_SVG_COLORS = {
    "SEP": "#f4a259", "UNS": "#8ecae6", "DROPPED": "#cccccc",
    "STE": "#9b5de5", "MS4": "#2a9d8f", "MS3": "#43aa8b", "MS2": "#1b7837",
}


def write_svg(grid: HierarchyGrid, path, borders=(), cell: int = 12) -> None:
    """Self-contained SVG: one rect per cell, optional border polylines."""
    nx, nq = len(grid.xi_values), len(grid.q_values)
    w, h = nx * cell, nq * cell
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">'
    ]
    for i in range(nx):
        for j in range(nq):
            color = _SVG_COLORS[grid.labels[i, j]]
            # q grows upward: row j sits at height h - (j+1)*cell
            parts.append(
                f'<rect x="{i * cell}" y="{h - (j + 1) * cell}" '
                f'width="{cell}" height="{cell}" fill="{color}"/>'
            )
    for border in borders:
        pts = []
        for i, q in enumerate(border.q_of_xi):
            if np.isnan(q):
                continue
            x = (i + 0.5) * cell
            y = h - q * h
            pts.append(f"{x:.1f},{y:.1f}")
        if pts:
            parts.append(
                f'<polyline points="{" ".join(pts)}" fill="none" '
                f'stroke="black" stroke-width="1.5"/>'
            )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
