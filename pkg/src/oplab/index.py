"""Fredholm index estimators on truncation windows.

The central quantity is the integer attached to a projection P and a
unitary-like base operator B: the index of the compression P B P + P⊥.
On a finite window that operator always has equal-dimensional kernel and
cokernel, so the infinite-volume index survives only through *where* the
near-kernel vectors live.  Vectors pinned to the structural cut carry
the signal; vectors pinned to the window edge are truncation artifacts
and are discarded.  Three estimators implement that idea at different
levels of generality, and they cross-check each other.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BoundaryContaminationError,
    MethodDisagreementError,
    PreconditionError,
    RepresentationError,
)
from .geometry import Explicit, Site
from .operators import (
    CircleFunction,
    Operator,
    Projection,
    _laurent_apply,
    shift_operator,
    spectral_norm,
)
from .windows import TruncationWindow

STRUCTURAL_TOL = 1e-12


# ---------------------------------------------------------------------------
# configuration and results


@dataclass(frozen=True)
class IndexConfig:
    """Knobs for the estimators; every value is echoed into diagnostics.

    ``cut_sites`` names the structural cut locus when the caller knows it
    (mid-path projections no longer carry a region).  When empty it is
    derived from the projection's region where possible.
    """

    sv_threshold: float = 1e-6
    trace_power: int = 4
    compact_floor: float = 1e-3
    buffer: float = 0.25
    cut_radius: float | None = None
    gap_factor: float = 1e3
    cut_sites: tuple = ()

    def __post_init__(self) -> None:
        if not 0.0 < self.sv_threshold < 1.0:
            raise PreconditionError("sv_threshold must lie in (0, 1)")
        if self.trace_power < 1:
            raise PreconditionError("trace_power must be a positive integer")
        if not 0.0 <= self.buffer < 1.0:
            raise PreconditionError("buffer must lie in [0, 1)")
        if self.gap_factor <= 1.0:
            raise PreconditionError("gap_factor must exceed 1")

    def resolved_cut_radius(self, window: TruncationWindow) -> float:
        if self.cut_radius is not None:
            return float(self.cut_radius)
        return float(window.radius) / 4.0

    def echo(self) -> dict:
        return {
            "sv_threshold": self.sv_threshold,
            "trace_power": self.trace_power,
            "compact_floor": self.compact_floor,
            "buffer": self.buffer,
            "cut_radius": self.cut_radius,
            "gap_factor": self.gap_factor,
        }


DEFAULT_INDEX_CONFIG = IndexConfig()

_METHODS = ("kernel_count", "trace_formula", "partial_permutation")


@dataclass(frozen=True)
class IndexResult:
    value: int
    method: str
    diagnostics: dict

    def __post_init__(self) -> None:
        if self.method not in _METHODS:
            raise PreconditionError(f"unknown index method {self.method!r}")

    def to_json_dict(self) -> dict:
        return {
            "format": "indexresult v1",
            "value": self.value,
            "method": self.method,
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


# ---------------------------------------------------------------------------
# site geometry helpers


def _site_vector(site: Site) -> tuple:
    if isinstance(site, int):
        return (site, 0)
    return site


def _site_distance(a: Site, b: Site) -> float:
    av, bv = _site_vector(a), _site_vector(b)
    return math.hypot(av[0] - bv[0], av[1] - bv[1])


def interior_mask(window: TruncationWindow, buffer: float) -> np.ndarray:
    """Sites at distance >= buffer * radius from the window boundary."""
    limit = (1.0 - buffer) * float(window.radius)
    return np.array(
        [math.hypot(*_site_vector(s)) <= limit for s in window.sites], dtype=bool
    )


def _cut_neighborhood_mask(
    window: TruncationWindow, cut_sites: tuple, cut_radius: float
) -> np.ndarray:
    mask = np.zeros(window.dimension, dtype=bool)
    if not cut_sites:
        return mask
    for i, site in enumerate(window.sites):
        for cut in cut_sites:
            if _site_distance(site, cut) <= cut_radius:
                mask[i] = True
                break
    return mask


def _neighbors(site: Site):
    if isinstance(site, int):
        return (site - 1, site + 1)
    x1, x2 = site
    return ((x1 - 1, x2), (x1 + 1, x2), (x1, x2 - 1), (x1, x2 + 1))


def cut_interface(p: Projection) -> tuple:
    """Sites on either side of the projection's 0/1 boundary.

    Only in-window neighbor flips count, so a region edge that coincides
    with the window edge contributes nothing: that boundary is an
    artifact of truncation, not a cut.
    """
    mask = p.diagonal_mask()
    if mask is None:
        raise PreconditionError(
            "cut interface needs an exact 0/1 diagonal projection"
        )
    window = p.window
    if not isinstance(window, TruncationWindow):
        raise PreconditionError("cut interface needs a plain truncation window")
    interface = []
    for i, site in enumerate(window.sites):
        for nb in _neighbors(site):
            if nb in window and mask[window.index_of(nb)] != mask[i]:
                interface.append(site)
                break
    return window.order(interface)


# ---------------------------------------------------------------------------
# the three estimators


def _defect_diagnostics(entries: np.ndarray, window, config: IndexConfig) -> dict:
    eye = np.eye(window.dimension)
    d_right = eye - entries.conj().T @ entries
    d_left = eye - entries @ entries.conj().T
    inside = interior_mask(window, config.buffer)
    mass = np.abs(np.diag(d_right)) + np.abs(np.diag(d_left))
    total = float(mass.sum())
    fraction = float(mass[inside].sum()) / total if total > STRUCTURAL_TOL else 0.0
    return {
        "defect_mass_total": total,
        "defect_mass_interior_fraction": fraction,
        "interior_sites": int(inside.sum()),
    }


def _pp_admits(entries: np.ndarray) -> bool:
    structural = np.abs(entries) > STRUCTURAL_TOL
    return bool(
        np.all(structural.sum(axis=0) <= 1) and np.all(structural.sum(axis=1) <= 1)
    )


def _pp_index(entries: np.ndarray, window, cut_sites, config: IndexConfig) -> IndexResult:
    if not _pp_admits(entries):
        raise PreconditionError(
            "operator has rows or columns with more than one structural entry"
        )
    structural = np.abs(entries) > STRUCTURAL_TOL
    radius = config.resolved_cut_radius(window)
    sites = window.sites

    def split(dead_axis_mask):
        at_cut, at_edge = [], []
        for i in np.nonzero(dead_axis_mask)[0]:
            site = sites[int(i)]
            near = any(_site_distance(site, c) <= radius for c in cut_sites)
            (at_cut if near else at_edge).append(site)
        return at_cut, at_edge

    kernel_cut, kernel_edge = split(~structural.any(axis=0))
    coker_cut, coker_edge = split(~structural.any(axis=1))
    value = len(kernel_cut) - len(coker_cut)
    diagnostics = {
        "kernel_sites_cut": tuple(kernel_cut),
        "kernel_sites_edge": tuple(kernel_edge),
        "cokernel_sites_cut": tuple(coker_cut),
        "cokernel_sites_edge": tuple(coker_edge),
        "cut_sites": tuple(cut_sites),
        "config": config.echo(),
    }
    return IndexResult(value, "partial_permutation", diagnostics)


def _count_localized(vectors: np.ndarray, cut_mask: np.ndarray) -> tuple:
    """Count vectors with >= 90% mass near the cut; the rest are edge noise.

    The per-vector rule is basis dependent inside a degenerate near-kernel
    cluster, so the basis-invariant total cut mass is computed alongside
    and the two must agree, else the split is genuinely ambiguous.
    """
    fractions = []
    for v in vectors:
        weights = np.abs(v) ** 2
        total = float(weights.sum())
        fractions.append(float(weights[cut_mask].sum()) / total if total else 0.0)
    count = sum(1 for f in fractions if f >= 0.9)
    invariant = float(sum(fractions))
    if abs(invariant - count) > 0.1:
        raise BoundaryContaminationError(
            "near-kernel mass is split between the cut and the window edge "
            f"(localized count {count}, invariant mass {invariant:.3f}); "
            "enlarge the window"
        )
    return count, tuple(fractions)


def _kernel_index(
    entries: np.ndarray, window, cut_sites, config: IndexConfig
) -> IndexResult:
    u, s, vh = np.linalg.svd(entries)
    thr = config.sv_threshold
    in_gap = s[(s >= thr) & (s < thr * config.gap_factor)]
    if in_gap.size:
        raise BoundaryContaminationError(
            f"{in_gap.size} singular value(s) inside the threshold gap "
            f"[{thr:.1e}, {thr * config.gap_factor:.1e}), smallest "
            f"{float(in_gap.min()):.3e}; enlarge the window"
        )
    near = np.nonzero(s < thr)[0]
    radius = config.resolved_cut_radius(window)
    cut_mask = _cut_neighborhood_mask(window, tuple(cut_sites), radius)
    # rows of vh conjugated are the right singular vectors (kernel of T);
    # columns of u are the left ones (kernel of the adjoint)
    kernel_count, kernel_fracs = _count_localized(vh[near].conj(), cut_mask)
    coker_count, coker_fracs = _count_localized(u[:, near].T, cut_mask)
    value = kernel_count - coker_count
    diagnostics = {
        "near_singular_values": tuple(float(x) for x in s[near]),
        "kernel_cut_fractions": kernel_fracs,
        "cokernel_cut_fractions": coker_fracs,
        "kernel_at_cut": kernel_count,
        "cokernel_at_cut": coker_count,
        "cut_sites": tuple(cut_sites),
        "config": config.echo(),
    }
    return IndexResult(value, "kernel_count", diagnostics)


def _trace_index(entries: np.ndarray, window, config: IndexConfig) -> IndexResult:
    eye = np.eye(window.dimension)
    d_right = eye - entries.conj().T @ entries
    d_left = eye - entries @ entries.conj().T
    m = config.trace_power
    inside = interior_mask(window, config.buffer)
    tr_right = float(np.diag(np.linalg.matrix_power(d_right, m))[inside].real.sum())
    tr_left = float(np.diag(np.linalg.matrix_power(d_left, m))[inside].real.sum())
    raw = tr_right - tr_left
    value = int(round(raw))
    residual = abs(raw - value)
    if residual > 0.1:
        raise BoundaryContaminationError(
            f"interior defect trace {raw:.4f} is not decisively integral; "
            "enlarge the window"
        )
    diagnostics = {
        "trace_right": tr_right,
        "trace_left": tr_left,
        "trace_raw": raw,
        "trace_residual": residual,
        "interior_sites": int(inside.sum()),
        "config": config.echo(),
    }
    return IndexResult(value, "trace_formula", diagnostics)


def fredholm_index(
    t: Operator, method: str = "auto", config: IndexConfig | None = None
) -> IndexResult:
    """Index of an essentially-unitary-like operator on its window.

    ``kernel_count`` and ``partial_permutation`` need a cut locus
    (``config.cut_sites``) to separate signal from edge artifacts;
    ``trace_formula`` needs only the interior mask.  ``auto`` picks the
    combinatorial route when the matrix is a weighted partial
    permutation, falls back to kernel counting, and cross-checks with
    the trace formula; a mismatch raises rather than guessing.
    """
    config = config or DEFAULT_INDEX_CONFIG
    window = t.window
    if not isinstance(window, TruncationWindow):
        raise PreconditionError("index estimation needs a plain truncation window")
    entries = t.entries
    base_diag = _defect_diagnostics(entries, window, config)
    cut_sites = tuple(config.cut_sites)

    if method == "partial_permutation":
        result = _pp_index(entries, window, cut_sites, config)
    elif method == "kernel_count":
        result = _kernel_index(entries, window, cut_sites, config)
    elif method == "trace_formula":
        result = _trace_index(entries, window, config)
    elif method == "auto":
        if _pp_admits(entries):
            result = _pp_index(entries, window, cut_sites, config)
        else:
            result = _kernel_index(entries, window, cut_sites, config)
        check = _trace_index(entries, window, config)
        if check.value != result.value:
            raise MethodDisagreementError(
                f"{result.method} gives {result.value} but trace_formula "
                f"gives {check.value}"
            )
        result.diagnostics["cross_check"] = {
            "method": "trace_formula",
            "value": check.value,
            "trace_raw": check.diagnostics["trace_raw"],
        }
    else:
        raise PreconditionError(f"unknown index method {method!r}")

    result.diagnostics.update(base_diag)
    return result


# ---------------------------------------------------------------------------
# projection index


def projection_index(
    p: Projection,
    base: Operator,
    method: str = "auto",
    config: IndexConfig | None = None,
) -> IndexResult:
    """Index of P * base * P + P⊥ with the cut locus derived from P."""
    config = config or DEFAULT_INDEX_CONFIG
    if p.window != base.window:
        raise PreconditionError("projection and base live on different windows")
    # the open-boundary shift is unitary-like in the only sense available
    # at finite scale: its isometry defect is confined to the window edge
    dim = p.window.dimension
    eye = np.eye(dim)
    be = base.entries
    inside = interior_mask(p.window, config.buffer)
    ix = np.ix_(inside, inside)
    defect = max(
        spectral_norm((eye - be.conj().T @ be)[ix]),
        spectral_norm((eye - be @ be.conj().T)[ix]),
    )
    if defect > 1e-6:
        raise PreconditionError(
            f"base operator is not unitary-like away from the edge: "
            f"interior defect {defect:.3e}"
        )
    if not config.cut_sites:
        mask = p.diagonal_mask()
        if mask is not None:
            config = dataclasses.replace(config, cut_sites=cut_interface(p))
    pe = p.entries
    compressed = pe @ be @ pe + (eye - pe)
    t = Operator(p.window, compressed)
    result = fredholm_index(t, method, config)
    result.diagnostics["base_interior_defect"] = defect
    result.diagnostics["base_unitarity_defect"] = base.unitarity_defect()
    result.diagnostics["commutator_norm"] = spectral_norm(pe @ be - be @ pe)
    return result


def index_k_projection(k: int, window: TruncationWindow) -> tuple:
    """Shift-representation pair (base, P) whose projection index is k."""
    if window.representation != "Z":
        raise RepresentationError("the shift representation lives on a line window")
    if abs(k) > float(window.radius) / 4.0:
        raise PreconditionError(
            f"|k| = {abs(k)} needs a window radius of at least {4 * abs(k)} "
            "for clean counting"
        )
    base = shift_operator(window, -k, "open")
    half_line = Explicit(frozenset(x for x in window.sites if x >= 1))
    return base, Projection.from_region(half_line, window)


# ---------------------------------------------------------------------------
# non-triviality probes


@dataclass(frozen=True)
class ProbeRecord:
    fn: int
    site: Site
    in_region: bool
    p_side: float
    perp_side: float


@dataclass(frozen=True)
class NontrivialityReport:
    """Column norms of both compressions of f(base) at interior probes.

    A side whose far-probe minimum falls below the compact floor behaves
    like a compact operator there, so the projection is flagged as a
    triviality suspect for that function.
    """

    records: tuple
    minima: tuple
    trivial_suspect: tuple
    degenerate: tuple
    sup_norms: tuple
    compact_floor: float

    def __post_init__(self) -> None:
        for rec in self.records:
            bound = self.sup_norms[rec.fn] + 1e-9
            if not (0.0 <= rec.p_side <= bound and 0.0 <= rec.perp_side <= bound):
                raise PreconditionError(
                    f"probe norm outside [0, sup norm] for fn {rec.fn} at {rec.site}"
                )

    def minimum(self, fn: int, side: str) -> float | None:
        for rec_fn, rec_side, value in self.minima:
            if rec_fn == fn and rec_side == side:
                return value
        return None

    def is_trivial_suspect(self, fn: int, side: str | None = None) -> bool:
        if side is None:
            return any(rec_fn == fn for rec_fn, _ in self.trivial_suspect)
        return (fn, side) in self.trivial_suspect

    def to_json_dict(self) -> dict:
        return {
            "format": "nontrivialityreport v1",
            "records": [
                {
                    "fn": r.fn,
                    "site": _jsonable(_site_vector(r.site)),
                    "in_region": r.in_region,
                    "p_side": r.p_side,
                    "perp_side": r.perp_side,
                }
                for r in self.records
            ],
            "minima": [
                {"fn": fn, "side": side, "value": value}
                for fn, side, value in self.minima
            ],
            "trivial_suspect": [list(pair) for pair in self.trivial_suspect],
            "degenerate": list(self.degenerate),
            "sup_norms": list(self.sup_norms),
            "compact_floor": self.compact_floor,
        }


def nontriviality_probe(
    p: Projection,
    base: Operator,
    fns,
    probes,
    config: IndexConfig | None = None,
) -> NontrivialityReport:
    """Measure ||P f(base) P delta_x|| and the complementary norm.

    f(base) is the truncated Laurent evaluation, so the base may be an
    open-boundary partial isometry; probes must sit deep enough inside
    the window that truncation does not starve the columns.
    """
    config = config or DEFAULT_INDEX_CONFIG
    fns = tuple(fns)
    probes = tuple(probes)
    if not fns or not probes:
        raise PreconditionError("need at least one circle function and one probe")
    window = p.window
    if not isinstance(window, TruncationWindow):
        raise PreconditionError("probes need a plain truncation window")
    limit = (1.0 - config.buffer) * float(window.radius)
    too_far = [s for s in probes if math.hypot(*_site_vector(s)) > limit]
    if too_far:
        raise PreconditionError(
            f"probes {too_far!r} are within the boundary buffer "
            f"(distance > {limit:.2f})"
        )
    pe = p.entries
    qe = np.eye(window.dimension) - pe
    mask = p.diagonal_mask()

    records = []
    minima = []
    suspects = []
    degenerate = []
    sup_norms = tuple(f.sup_norm() for f in fns)
    for fi, f in enumerate(fns):
        if f.is_zero:
            degenerate.append(fi)
        fmat = _laurent_apply(f, base.entries)
        p_values, q_values = [], []
        for site in probes:
            idx = window.index_of(site)
            if mask is not None:
                in_region = bool(mask[idx])
            else:
                in_region = float(np.linalg.norm(pe[:, idx])) > 0.5
            p_side = float(np.linalg.norm(pe @ (fmat @ pe[:, idx])))
            perp_side = float(np.linalg.norm(qe @ (fmat @ qe[:, idx])))
            records.append(ProbeRecord(fi, site, in_region, p_side, perp_side))
            (p_values if in_region else q_values).append(
                p_side if in_region else perp_side
            )
        p_min = min(p_values) if p_values else None
        q_min = min(q_values) if q_values else None
        minima.append((fi, "P", p_min))
        minima.append((fi, "Pperp", q_min))
        if p_min is not None and p_min < config.compact_floor:
            suspects.append((fi, "P"))
        if q_min is not None and q_min < config.compact_floor:
            suspects.append((fi, "Pperp"))
    return NontrivialityReport(
        records=tuple(records),
        minima=tuple(minima),
        trivial_suspect=tuple(suspects),
        degenerate=tuple(degenerate),
        sup_norms=sup_norms,
        compact_floor=config.compact_floor,
    )


def translation_invariance_check(f: CircleFunction, window: TruncationWindow) -> float:
    """Spread of column norms of f applied to the periodic shift.

    The periodic shift is an exact cyclic permutation, so f of it is a
    circulant and every column norm agrees; the returned spread is a
    floating-point honesty check, not a mathematical quantity.
    """
    base = shift_operator(window, 1, "periodic")
    fmat = _laurent_apply(f, base.entries)
    norms = np.linalg.norm(fmat, axis=0)
    if norms.size == 0:
        return 0.0
    return float(norms.max() - norms.min())
