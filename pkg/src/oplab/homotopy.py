"""Norm-continuous operator paths and their certification.

A path is a tuple of equally weighted segments, each carrying a cached
factorization so sampling costs one or two dense products rather than a
fresh decomposition.  Constructors cover the deformation moves used by
the full unitary-to-identity pipeline: straight lines, polar
interpolation, peeling an upper-triangular block factor, logarithmic
rotation of a unitary, conjugation of a projection along a unitary
path, and the stacked-isometry move that absorbs a block unitary into
the identity.

Certification never assumes a segment is what it claims to be: the
certificate reports measured unitarity defects, singular values,
locality defects against configured cone pairs, and (for projection
paths) idempotency defects and an integer index trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg

from .errors import (
    OplabError,
    PreconditionError,
    SingularOperatorError,
    StageError,
    UnitarityError,
    WindowMismatchError,
)
from .geometry import Arc, Direction, Explicit, ORIGIN, arcs_disjoint
from .index import IndexConfig, fredholm_index
from .operators import Operator, Projection, spectral_norm
from .surgery import (
    GreedyIsometry,
    corrective_unitary,
    greedy_isometry,
    localized_centers,
)
from .windows import AmplifiedWindow, TruncationWindow, Window

TOL_JOINT = 1e-9
TOL_BLOCK_FORM = 1e-8
TOL_PRODUCT = 1e-10
TOL_ISOMETRY = 1e-10
BRANCH_TIE = 1e-12

SEGMENT_KINDS = (
    "straight_line",
    "polar",
    "block_peel",
    "log",
    "conjugation",
    "block_unitary",
)


def _fro(entries: np.ndarray) -> float:
    return float(np.linalg.norm(entries))


def _residual_norm(entries: np.ndarray, tol: float) -> float:
    """Spectral norm of a residual, skipping the SVD when the Frobenius
    norm (an upper bound on it) already lands at or under tol."""
    fro = _fro(entries)
    if fro <= tol:
        return fro
    return spectral_norm(entries)


# ---------------------------------------------------------------------------
# segments


@dataclass(frozen=True)
class PathSegment:
    """One homotopy leg with a cached factorization.

    ``flip`` runs the leg backwards; every kind is closed under time
    reversal so paths can be reversed without recomputing anything.
    """

    kind: str
    window: Window
    payload: tuple
    flip: bool = False
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind not in SEGMENT_KINDS:
            raise PreconditionError(f"unknown segment kind {self.kind!r}")

    def at(self, t: float) -> np.ndarray:
        if self.flip:
            t = 1.0 - t
        if self.kind == "straight_line":
            a0, a1 = self.payload
            return (1.0 - t) * a0 + t * a1
        if self.kind == "polar":
            u, s, vh = self.payload
            return (u * (s ** (1.0 - t))[None, :]) @ vh
        if self.kind == "block_peel":
            f1, f1n = self.payload
            return f1 + t * f1n
        if self.kind == "log":
            q, phases, right = self.payload
            core = (q * np.exp(1j * (1.0 - t) * phases)[None, :]) @ q.conj().T
            return core if right is None else core @ right
        if self.kind == "conjugation":
            q0, upath = self.payload
            ut = upath.at(t)
            return ut.conj().T @ q0 @ ut
        # block_unitary
        if self.payload[0] == "bu-fused":
            _, a_live, phases, inner_flip, base_const = self.payload
            s = 1.0 - t if not inner_flip else t
            wave = np.exp(1j * s * phases) - 1.0
            return (a_live * wave[None, :]) @ a_live.conj().T + base_const
        _, v_full, inner, complement = self.payload
        return v_full @ inner.at(t) @ v_full.conj().T + complement

    def reversed(self) -> "PathSegment":
        return PathSegment(self.kind, self.window, self.payload, not self.flip, self.label)


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class HomotopyPath:
    """Equal-weight concatenation of segments with declared endpoints.

    Construction verifies that adjacent segments agree at their joint
    and that the sampled endpoints match the declared ones, both within
    1e-9 in the Frobenius norm (which dominates the operator norm).
    """

    segments: tuple
    declared_start: np.ndarray
    declared_end: np.ndarray

    def __post_init__(self) -> None:
        if not self.segments:
            raise PreconditionError("a path needs at least one segment")
        window = self.segments[0].window
        for seg in self.segments:
            if seg.window != window:
                raise WindowMismatchError("segments live on different windows")
        for i in range(len(self.segments) - 1):
            gap = _fro(self.segments[i].at(1.0) - self.segments[i + 1].at(0.0))
            if gap > TOL_JOINT:
                raise PreconditionError(
                    f"segments {i} and {i + 1} disagree at their joint: {gap:.3e}"
                )
        start_err = _fro(self.segments[0].at(0.0) - self.declared_start)
        end_err = _fro(self.segments[-1].at(1.0) - self.declared_end)
        if start_err > TOL_JOINT or end_err > TOL_JOINT:
            raise PreconditionError(
                f"declared endpoints off by ({start_err:.3e}, {end_err:.3e})"
            )

    @property
    def window(self) -> Window:
        return self.segments[0].window

    @property
    def segment_kinds(self) -> tuple:
        return tuple(seg.kind for seg in self.segments)

    def segment_of(self, t: float) -> int:
        n = len(self.segments)
        return min(int(t * n), n - 1)

    def at(self, t: float) -> np.ndarray:
        if not 0.0 <= t <= 1.0:
            raise PreconditionError(f"path parameter {t} outside [0, 1]")
        n = len(self.segments)
        i = self.segment_of(t)
        return self.segments[i].at(t * n - i)

    def sample(self, t: float) -> Operator:
        return Operator(self.window, self.at(t))

    def reverse(self) -> "HomotopyPath":
        return HomotopyPath(
            tuple(seg.reversed() for seg in reversed(self.segments)),
            self.declared_end,
            self.declared_start,
        )

    def concat(self, other: "HomotopyPath") -> "HomotopyPath":
        return HomotopyPath(
            self.segments + other.segments, self.declared_start, other.declared_end
        )


# ---------------------------------------------------------------------------
# elementary constructors


def straight_line(a0: Operator, a1: Operator, label: str = "") -> HomotopyPath:
    """Linear interpolation t -> (1-t) a0 + t a1."""
    if a0.window != a1.window:
        raise WindowMismatchError("straight line endpoints on different windows")
    seg = PathSegment(
        "straight_line", a0.window, (a0.entries, a1.entries), label=label
    )
    return HomotopyPath((seg,), a0.entries, a1.entries)


def polar_path(g: Operator, tol: float = 1e-8) -> HomotopyPath:
    """t -> U |G|^(1-t) from G to its unitary polar factor U."""
    u, s, vh = np.linalg.svd(g.entries)
    smin = float(s[-1]) if s.size else 0.0
    if smin <= tol:
        raise SingularOperatorError(
            f"smallest singular value {smin:.3e} <= {tol:.1e}; "
            "the polar path would leave the invertibles"
        )
    seg = PathSegment("polar", g.window, (u, s, vh))
    return HomotopyPath((seg,), g.entries, u @ vh)


def _schur_phases(entries: np.ndarray) -> tuple:
    """Unitary eigenbasis and eigenphases in (-pi, pi], ties pushed to +pi."""
    t, q = scipy.linalg.schur(entries, output="complex")
    phases = np.angle(np.diag(t))
    ties = phases <= (-np.pi + BRANCH_TIE)
    phases = np.where(ties, phases + 2.0 * np.pi, phases)
    return q, phases, int(ties.sum())


def log_path(u: Operator) -> HomotopyPath:
    """Eigenphase contraction t -> W e^{i (1-t) Theta} W* from U to 1.

    The branch cut sits at -pi; eigenphases within 1e-12 of the cut are
    moved to +pi and the count is recorded in the segment label.
    """
    defect = u.unitarity_defect()
    if defect > TOL_BLOCK_FORM:
        raise UnitarityError(
            f"log path needs a unitary: defect {defect:.3e} > {TOL_BLOCK_FORM:.1e}"
        )
    q, phases, ties = _schur_phases(u.entries)
    label = f"branch-ties:{ties}" if ties else ""
    seg = PathSegment("log", u.window, (q, phases, None), label=label)
    eye = np.eye(u.window.dimension, dtype=np.complex128)
    return HomotopyPath((seg,), u.entries, eye)


def block_peel(m: Operator, p: Projection) -> tuple:
    """Factor M = (P + P⊥ M P⊥)(1 + P M P⊥) and the straightening path.

    Requires M to act as the identity out of P and to leave P⊥ alone
    up to the stated tolerance; the returned path runs from the first
    factor to the peelable part of M (their product), and the second
    factor's nilpotent part N = P M P⊥ satisfies N^2 = 0 exactly, so
    1 - t N inverts the moving factor on the nose.
    """
    if m.window != p.window:
        raise WindowMismatchError("operator and projection on different windows")
    pe = p.entries
    qe = np.eye(m.window.dimension, dtype=np.complex128) - pe
    me = m.entries
    r_fix = _residual_norm(pe @ me @ pe - pe, TOL_BLOCK_FORM)
    r_low = _residual_norm(qe @ me @ pe, TOL_BLOCK_FORM)
    if max(r_fix, r_low) > TOL_BLOCK_FORM:
        raise PreconditionError(
            "operator is not in block form over the projection: "
            f"|PMP - P| = {r_fix:.3e}, |P~MP| = {r_low:.3e}"
        )
    nil = pe @ me @ qe
    f1 = pe + qe @ me @ qe
    f2 = np.eye(m.window.dimension, dtype=np.complex128) + nil
    product = f1 @ f2
    peelable = pe + pe @ me @ qe + qe @ me @ qe
    residual = _fro(product - peelable)
    if residual > TOL_PRODUCT:
        raise StageError(
            "block-peel", f"factor product misses the block part by {residual:.3e}"
        )
    factors = (Operator(m.window, f1), Operator(m.window, f2))
    seg = PathSegment("block_peel", m.window, (f1, f1 @ nil))
    path = HomotopyPath((seg,), f1, product)
    return factors, path


def conjugation_path(q: Projection | Operator, upath: HomotopyPath) -> HomotopyPath:
    """t -> U_t* Q U_t along a unitary path starting at the identity."""
    q_entries = q.entries
    window = q.window
    if window != upath.window:
        raise WindowMismatchError("projection and unitary path on different windows")
    eye = np.eye(window.dimension, dtype=np.complex128)
    start_gap = _residual_norm(upath.at(0.0) - eye, TOL_BLOCK_FORM)
    if start_gap > TOL_BLOCK_FORM:
        raise PreconditionError(
            f"conjugation needs a unitary path from the identity; "
            f"start is {start_gap:.3e} away"
        )
    u1 = upath.at(1.0)
    seg = PathSegment("conjugation", window, (q_entries, upath))
    return HomotopyPath((seg,), q_entries, u1.conj().T @ q_entries @ u1)


# ---------------------------------------------------------------------------
# the stacked-isometry move


def _full_intertwiner(p: Projection, v_iso: GreedyIsometry) -> np.ndarray:
    """Rectangular map from the stacked window onto the base window.

    Stack-zero columns outside the matched region carry the complement
    projection; matched columns carry the greedy partial permutation.
    """
    amp = v_iso.window
    base = amp.base
    d = base.dimension
    v_full = np.zeros((d, amp.dimension), dtype=np.complex128)
    v_full[:, :d] = p.perp().entries
    for match in v_iso.matches:
        row = base.index_of(match.target)
        col = amp.index_of(match.stack, match.source)
        v_full[row, col] = 1.0
    return v_full


def block_unitary_homotopy(
    u: Operator,
    p: Projection,
    v_iso: GreedyIsometry,
    inner: HomotopyPath,
) -> HomotopyPath:
    """Path 1 -> U for a unitary acting as the identity on the range of P.

    The greedy isometry must cover the range of P exactly (every site of
    the matched region used as a target); the inner path supplies the
    contraction of U ⊕ 1 on the stacked window, and conjugating it by
    the intertwiner lands back on the base window with both endpoints
    pinned: Z_t = V W_t V* + (1 - V V*).
    """
    base = p.window
    if u.window != base:
        raise WindowMismatchError("operator and projection on different windows")
    amp = v_iso.window
    if not isinstance(amp, AmplifiedWindow) or amp.base != base:
        raise WindowMismatchError("isometry does not stack the projection's window")
    if inner.window != amp:
        raise WindowMismatchError("inner path must live on the stacked window")

    pe = p.entries
    qe = np.eye(base.dimension, dtype=np.complex128) - pe
    ue = u.entries
    r_fix = _residual_norm(pe @ ue @ pe - pe, TOL_BLOCK_FORM)
    r_up = _residual_norm(pe @ ue @ qe, TOL_BLOCK_FORM)
    r_low = _residual_norm(qe @ ue @ pe, TOL_BLOCK_FORM)
    worst = max(r_fix, r_up, r_low)
    if worst > TOL_BLOCK_FORM:
        raise PreconditionError(
            "operator does not act as the identity on the projection range: "
            f"|PUP - P| = {r_fix:.3e}, |PUP~| = {r_up:.3e}, |P~UP| = {r_low:.3e}"
        )

    v_full = _full_intertwiner(p, v_iso)
    vvh = v_full @ v_full.conj().T
    eye = np.eye(base.dimension, dtype=np.complex128)
    cover = _residual_norm(vvh - eye, TOL_ISOMETRY)
    if cover > TOL_ISOMETRY:
        raise PreconditionError(
            f"isometry range misses the window: |VV* - 1| = {cover:.3e}; "
            "every site of the matched region must be used as a target"
        )
    vhv = v_full.conj().T @ v_full
    partial = _residual_norm(vhv @ vhv - vhv, TOL_ISOMETRY)
    if partial > TOL_ISOMETRY:
        raise PreconditionError(
            f"intertwiner is not a partial isometry: defect {partial:.3e}"
        )

    eye_amp = np.eye(amp.dimension, dtype=np.complex128)
    target = eye_amp.copy()
    target[: base.dimension, : base.dimension] = ue
    start_gap = _residual_norm(inner.at(0.0) - eye_amp, TOL_BLOCK_FORM)
    end_gap = _residual_norm(inner.at(1.0) - target, TOL_BLOCK_FORM)
    if max(start_gap, end_gap) > TOL_BLOCK_FORM:
        raise PreconditionError(
            "inner path must run from the stacked identity to U ⊕ 1: "
            f"endpoint gaps ({start_gap:.3e}, {end_gap:.3e})"
        )

    complement = eye - vvh
    inner_seg = inner.segments[0] if len(inner.segments) == 1 else None
    if (
        inner_seg is not None
        and inner_seg.kind == "log"
        and inner_seg.payload[2] is None
    ):
        q, phases, _ = inner_seg.payload
        a_full = v_full @ q
        # columns with phase exactly zero never move; folding them into
        # a constant term halves the per-sample product size
        live = np.flatnonzero(phases != 0.0)
        base_const = a_full @ a_full.conj().T + complement
        payload = (
            "bu-fused",
            np.ascontiguousarray(a_full[:, live]),
            phases[live],
            inner_seg.flip,
            base_const,
        )
    else:
        payload = ("bu-general", v_full, inner, complement)
    seg = PathSegment("block_unitary", base, payload)
    return HomotopyPath((seg,), eye, ue)


# ---------------------------------------------------------------------------
# certification


@dataclass(frozen=True)
class CertifyConfig:
    """What to measure along a path.

    ``arc_pairs`` lists disjoint cone pairs for the locality defect; the
    block norm is taken outside a ball of ``allowance_radius`` (default
    half the window radius) so a fixed finite-rank part is exempt.
    ``index_base`` enables the integer index trace on projection paths.
    """

    samples: int = 50
    arc_pairs: tuple = ()
    allowance_radius: object = None
    index_base: Operator | None = None
    index_config: IndexConfig | None = None
    projection_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.samples < 2:
            raise PreconditionError("certification needs at least two samples")
        for pair in self.arc_pairs:
            if len(pair) != 2:
                raise PreconditionError("arc_pairs entries must be (row, col) arcs")
            if not arcs_disjoint(pair[0], pair[1]):
                raise PreconditionError("locality arcs must be disjoint")


@dataclass(frozen=True)
class CertificateReport:
    """Measured path quality; aggregates plus the per-sample series."""

    samples: int
    max_unitarity_defect: float
    min_singular_value: float
    max_locality_defect: float
    max_idempotency_defect: float
    index_trace: tuple
    endpoint_errors: tuple
    segment_stats: tuple
    series: tuple
    is_projection_path: bool

    def __post_init__(self) -> None:
        reals = (
            self.max_unitarity_defect,
            self.min_singular_value,
            self.max_locality_defect,
            self.max_idempotency_defect,
            *self.endpoint_errors,
        )
        if any(x < 0.0 for x in reals):
            raise PreconditionError("certificate reals must be non-negative")
        if len(self.endpoint_errors) != 2:
            raise PreconditionError("endpoint_errors is a pair")

    def to_json_dict(self) -> dict:
        return {
            "format": "certificate v1",
            "samples": self.samples,
            "max_unitarity_defect": self.max_unitarity_defect,
            "min_singular_value": self.min_singular_value,
            "max_locality_defect": self.max_locality_defect,
            "max_idempotency_defect": self.max_idempotency_defect,
            "index_trace": list(self.index_trace),
            "endpoint_errors": list(self.endpoint_errors),
            "segment_stats": [dict(s) for s in self.segment_stats],
            "is_projection_path": self.is_projection_path,
            "series_columns": list(self.series_columns()),
            "series": [list(row) for row in self.series],
        }

    @staticmethod
    def series_columns() -> tuple:
        return (
            "t",
            "unitarity_defect",
            "min_singular_value",
            "locality_defect",
            "idempotency_defect",
            "index",
        )

    def csv_rows(self):
        yield ",".join(self.series_columns())
        for t, unit, sv, loc, idem, idx in self.series:
            tail = "" if idx is None else str(int(idx))
            yield f"{t!r},{unit!r},{sv!r},{loc!r},{idem!r},{tail}"


def _locality_indices(window, arc: Arc, allowance) -> np.ndarray:
    rho2 = Fraction(allowance) * Fraction(allowance)
    picks = [
        i
        for i, x in enumerate(window.sites)
        if x != ORIGIN
        and Fraction(x[0] * x[0] + x[1] * x[1]) >= rho2
        and arc.contains(window.direction_at(x))
    ]
    return np.array(picks, dtype=np.intp)


def certify_path(path: HomotopyPath, config: CertifyConfig | None = None) -> CertificateReport:
    """Sample the path and measure everything the certificate promises.

    One Hermitian eigendecomposition per sample yields both the
    unitarity defect and the smallest singular value; the locality
    defect is the largest masked block norm over the configured cone
    pairs, taken outside the allowance ball.
    """
    config = config or CertifyConfig()
    window = path.window
    if config.arc_pairs:
        if not isinstance(window, TruncationWindow) or window.representation != "Z2":
            raise PreconditionError("locality arcs need a planar window")
        allowance = (
            config.allowance_radius
            if config.allowance_radius is not None
            else Fraction(window.radius) / 2
        )
        pair_indices = [
            (_locality_indices(window, row, allowance), _locality_indices(window, col, allowance))
            for row, col in config.arc_pairs
        ]
    else:
        pair_indices = []

    first = path.at(0.0)
    herm = _residual_norm(first - first.conj().T, config.projection_tol)
    idem = _residual_norm(first @ first - first, config.projection_tol)
    is_projection = herm <= config.projection_tol and idem <= config.projection_tol

    index_config = config.index_config or IndexConfig()
    index_method = "kernel_count" if index_config.cut_sites else "trace_formula"

    ts = np.linspace(0.0, 1.0, config.samples)
    series = []
    index_trace = []
    n_segs = len(path.segments)
    seg_unit = [0.0] * n_segs
    seg_sv = [math.inf] * n_segs
    seg_loc = [0.0] * n_segs
    seg_counts = [0] * n_segs
    max_unit = 0.0
    min_sv = math.inf
    max_loc = 0.0
    max_idem = 0.0
    for t in ts:
        entries = path.at(float(t))
        gram = entries.conj().T @ entries
        gram = 0.5 * (gram + gram.conj().T)
        eigs = np.linalg.eigvalsh(gram)
        unit = float(np.max(np.abs(eigs - 1.0)))
        sv = math.sqrt(max(float(eigs[0]), 0.0))
        loc = 0.0
        for rows, cols in pair_indices:
            if rows.size and cols.size:
                loc = max(loc, spectral_norm(entries[np.ix_(rows, cols)]))
        idem_defect = 0.0
        sample_index = None
        if is_projection:
            idem_defect = spectral_norm(entries @ entries - entries)
            if config.index_base is not None:
                pe = entries
                eye = np.eye(window.dimension, dtype=np.complex128)
                compressed = pe @ config.index_base.entries @ pe + (eye - pe)
                result = fredholm_index(
                    Operator(window, compressed), index_method, index_config
                )
                sample_index = result.value
                index_trace.append(result.value)
        seg = path.segment_of(float(t))
        seg_counts[seg] += 1
        seg_unit[seg] = max(seg_unit[seg], unit)
        seg_sv[seg] = min(seg_sv[seg], sv)
        seg_loc[seg] = max(seg_loc[seg], loc)
        max_unit = max(max_unit, unit)
        min_sv = min(min_sv, sv)
        max_loc = max(max_loc, loc)
        max_idem = max(max_idem, idem_defect)
        series.append((float(t), unit, sv, loc, idem_defect, sample_index))

    endpoint_errors = (
        spectral_norm(path.at(0.0) - path.declared_start),
        spectral_norm(path.at(1.0) - path.declared_end),
    )
    stats = tuple(
        {
            "kind": seg.kind,
            "label": seg.label,
            "reversed": seg.flip,
            "samples": seg_counts[i],
            "max_unitarity_defect": seg_unit[i],
            "min_singular_value": (None if seg_counts[i] == 0 else seg_sv[i]),
            "max_locality_defect": seg_loc[i],
        }
        for i, seg in enumerate(path.segments)
    )
    return CertificateReport(
        samples=config.samples,
        max_unitarity_defect=max_unit,
        min_singular_value=float(min_sv),
        max_locality_defect=max_loc,
        max_idempotency_defect=max_idem,
        index_trace=tuple(index_trace),
        endpoint_errors=endpoint_errors,
        segment_stats=stats,
        series=tuple(series),
        is_projection_path=is_projection,
    )


# ---------------------------------------------------------------------------
# the full pipeline


@dataclass(frozen=True)
class PipelineConfig:
    """Choices for the unitary-to-identity pipeline."""

    thetas: tuple = (Direction(1, 0), Direction(0, 1))
    copies: int = 1
    certify: CertifyConfig | None = None

    def __post_init__(self) -> None:
        if not self.thetas:
            raise PreconditionError("the pipeline needs at least one direction")
        if self.copies < 1:
            raise PreconditionError("the stacked move needs at least one extra copy")


def _block_log_phases(entries: np.ndarray, dim: int, blocks) -> tuple:
    """Identity-anchored eigenphase data for a block-diagonal unitary.

    Only the listed index blocks are decomposed; everywhere else the
    eigenbasis and phases stay exactly at the identity, so the
    resulting log segment is exactly constant off the blocks.  ``dim``
    may exceed the entry matrix size: blocks index into ``entries``
    while the basis is built at the full dimension.
    """
    q = np.eye(dim, dtype=np.complex128)
    phases = np.zeros(dim)
    ties = 0
    for idx in blocks:
        idx = np.array(sorted(idx), dtype=np.intp)
        sub = entries[np.ix_(idx, idx)]
        qsub, ph, tie = _schur_phases(sub)
        q[np.ix_(idx, idx)] = qsub
        phases[idx] = ph
        ties += tie
    label = f"branch-ties:{ties}" if ties else ""
    return q, phases, label


def theorem1_pipeline(
    u: Operator, eps: float, config: PipelineConfig | None = None
) -> tuple:
    """Deform a localizable unitary to the identity and certify the path.

    Stages: straight line onto the surgically deformed operator, a
    per-block rotation that straightens the confined columns, a short
    normalization line, the reversed block peel, the polar climb back
    to the unitaries, and the reversed stacked-isometry move.  Any
    stage failure is re-raised with its stage name attached.
    """
    config = config or PipelineConfig()
    window = u.window
    if not isinstance(window, TruncationWindow) or window.representation != "Z2":
        raise PreconditionError("the pipeline runs on a planar window")
    defect = u.unitarity_defect()
    if defect > TOL_BLOCK_FORM:
        raise UnitarityError(f"pipeline input unitarity defect {defect:.3e}")
    if not 0.0 < eps < 1.0:
        raise PreconditionError("eps must lie in (0, 1) to keep the line invertible")
    dim = window.dimension
    eye = np.eye(dim, dtype=np.complex128)

    def stage(name, fn):
        try:
            return fn()
        except StageError:
            raise  # already carries the more precise inner stage name
        except OplabError as exc:
            raise StageError(name, str(exc)) from exc

    g, plan = stage("localized-centers", lambda: localized_centers(u, config.thetas, eps))
    delta = _residual_norm(u.entries - g.entries, 1.0 - 1e-12)
    if delta >= 1.0:
        raise StageError(
            "localized-centers", f"deformation size {delta:.3e} reaches 1"
        )
    seg_line = straight_line(u, g, label="onto-deformed")

    v = stage("corrective-unitary", lambda: corrective_unitary(g, plan))
    center_idx = [window.index_of(c) for c in plan.centers]
    block_indices = [
        [window.index_of(site) for site in block] for block in plan.ranges
    ]
    q_v, phases_v, label_v = _block_log_phases(v.entries, dim, block_indices)
    vg = v.entries @ g.entries
    seg_correct = HomotopyPath(
        (
            PathSegment(
                "log", window, (q_v, phases_v, g.entries), flip=True, label=label_v
            ),
        ),
        g.entries,
        vg,
    )

    # normalize the confined columns so the peel precondition is exact:
    # scale each center column to unit size, then snap it to its basis
    # vector (the corrective rotation already left it within 1e-10)
    norms = np.array([np.linalg.norm(g.entries[:, i]) for i in center_idx])
    scale = eye.copy()
    for i, nrm in zip(center_idx, norms):
        scale[i, i] = 1.0 / nrm
    peelable = vg @ scale
    for i in center_idx:
        peelable[:, i] = 0.0
        peelable[i, i] = 1.0
    m_op = Operator(window, peelable)
    seg_norm = straight_line(Operator(window, vg), m_op, label="normalize-centers")

    p_centers = Projection.from_region(Explicit(frozenset(plan.centers)), window)
    factors, peel = stage("block-peel", lambda: block_peel(m_op, p_centers))
    seg_peel = peel.reverse()

    f1 = factors[0]
    seg_polar = stage("polar", lambda: polar_path(f1))
    w_pol = Operator(window, seg_polar.declared_end)

    v_iso = stage(
        "greedy-isometry",
        lambda: greedy_isometry(
            Explicit(frozenset(plan.centers)),
            config.copies,
            window,
            require_ray_dense=False,
        ),
    )
    amp = v_iso.window
    perp_idx = [i for i in range(dim) if i not in set(center_idx)]
    q_in, phases_in, label_in = _block_log_phases(
        w_pol.entries, amp.dimension, [perp_idx]
    )
    target = np.eye(amp.dimension, dtype=np.complex128)
    target[:dim, :dim] = w_pol.entries
    inner = HomotopyPath(
        (PathSegment("log", amp, (q_in, phases_in, None), flip=True, label=label_in),),
        np.eye(amp.dimension, dtype=np.complex128),
        target,
    )
    bu = stage(
        "block-unitary",
        lambda: block_unitary_homotopy(w_pol, p_centers, v_iso, inner),
    )
    seg_absorb = bu.reverse()

    path = HomotopyPath(
        seg_line.segments
        + seg_correct.segments
        + seg_norm.segments
        + seg_peel.segments
        + seg_polar.segments
        + seg_absorb.segments,
        u.entries,
        eye,
    )
    report = certify_path(path, config.certify or CertifyConfig())
    return path, report
