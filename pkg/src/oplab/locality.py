"""Finite-scale locality diagnostics.

Infinite-volume statements about compact cross-cone blocks turn into
measurable quantities here: block norms between cones, decay profiles
against ball cutoffs, shortest finite supports meeting a norm budget,
and the two workhorse constructions that later surgery steps consume,
cone splitting and annulus confinement.

Every bound any routine promises is recomputed from the raw matrix
before being returned; nothing is trusted from the construction.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import PreconditionError, RepresentationError, WindowExhaustedError
from .geometry import (
    ORIGIN,
    Arc,
    Direction,
    Region,
    Site,
    arcs_disjoint,
    realize_region,
    site_sort_key,
    widen_arc,
)
from .operators import Operator, spectral_norm
from .windows import TruncationWindow


# ---------------------------------------------------------------------------
# result types


@dataclass(frozen=True)
class DecayProfile:
    """Masked norms of one block at a strictly increasing list of ball cutoffs."""

    radii: tuple
    values: tuple

    def __post_init__(self) -> None:
        radii = tuple(Fraction(r) for r in self.radii)
        values = tuple(float(v) for v in self.values)
        if len(radii) != len(values):
            raise ValueError("radii and values must have equal length")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly increasing")
        if any(v < 0 for v in values):
            raise ValueError("values must be non-negative")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)

    def csv_rows(self):
        yield ("radius", "value")
        for r, v in zip(self.radii, self.values):
            yield (str(r), repr(v))


@dataclass(frozen=True)
class ConeSplit:
    """Partition of the open complement cone into a finite captured part
    and a remainder whose block against the reference cone is small."""

    good: frozenset
    bad: frozenset
    achieved_bound: float

    def __post_init__(self) -> None:
        if self.good & self.bad:
            raise ValueError("good and bad overlap")
        if self.achieved_bound < 0:
            raise ValueError("achieved_bound must be non-negative")

    def csv_rows(self):
        yield ("site", "kind")
        sites = [(s, "good") for s in self.good] + [(s, "bad") for s in self.bad]
        for site, kind in sorted(sites, key=lambda p: site_sort_key(p[0])):
            yield (f"({site[0]},{site[1]})", kind)


@dataclass(frozen=True)
class CentersPlan:
    """Placement plan for localized centers: one site per requested direction,
    nested ball radii separating them, per-center norm budgets, and (once a
    deformation has produced them) the finite interaction ranges."""

    centers: tuple
    radii: tuple
    budgets: tuple
    ranges: tuple | None = None
    source: str = ""

    def __post_init__(self) -> None:
        centers = tuple(tuple(c) for c in self.centers)
        radii = tuple(Fraction(r) for r in self.radii)
        budgets = tuple(float(b) for b in self.budgets)
        if not (len(centers) == len(radii) == len(budgets)):
            raise ValueError("centers, radii and budgets must have equal length")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly increasing")
        if any(b <= 0 for b in budgets):
            raise ValueError("budgets must be positive")
        ranges = self.ranges
        if ranges is not None:
            ranges = tuple(frozenset(tuple(s) for s in y) for y in ranges)
            if len(ranges) != len(centers):
                raise ValueError("ranges must align with centers")
            for k, (center, y) in enumerate(zip(centers, ranges)):
                if center not in y:
                    raise ValueError(f"center {k} lies outside its range")
            for a in range(len(ranges)):
                for b in range(a + 1, len(ranges)):
                    if ranges[a] & ranges[b]:
                        raise ValueError(f"ranges {a} and {b} overlap")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "budgets", budgets)
        object.__setattr__(self, "ranges", ranges)

    def __len__(self) -> int:
        return len(self.centers)

    def inner_radius(self, k: int) -> Fraction:
        """Lower ball radius of the k-th shell (zero for the first)."""
        return Fraction(0) if k == 0 else self.radii[k - 1]

    def with_ranges(self, ranges, source: str = "") -> "CentersPlan":
        return CentersPlan(
            self.centers, self.radii, self.budgets, ranges, source or self.source
        )

    def to_json_dict(self) -> dict:
        out = {
            "format": "centersplan v1",
            "source": self.source,
            "centers": [list(c) for c in self.centers],
            "radii": [str(r) for r in self.radii],
            "budgets": list(self.budgets),
        }
        if self.ranges is not None:
            out["ranges"] = [
                [list(s) for s in sorted(y, key=site_sort_key)] for y in self.ranges
            ]
        return out


# ---------------------------------------------------------------------------
# masking helpers


@functools.lru_cache(maxsize=None)
def _norm2_array(window: TruncationWindow) -> np.ndarray:
    if window.representation == "Z":
        return np.array([x * x for x in window.sites], dtype=np.int64)
    return np.array([x[0] * x[0] + x[1] * x[1] for x in window.sites], dtype=np.int64)


def _require_plane(window, what: str) -> TruncationWindow:
    if not isinstance(window, TruncationWindow) or window.representation != "Z2":
        raise RepresentationError(f"{what} needs a planar window")
    return window


def _cone_indices(window: TruncationWindow, arc: Arc) -> np.ndarray:
    hits = [
        i
        for i, site in enumerate(window.sites)
        if site != ORIGIN and arc.contains(window.direction_at(site))
    ]
    return np.asarray(hits, dtype=np.intp)


def _open_complement_indices(window: TruncationWindow, arc: Arc) -> list:
    """Window indices of sites whose direction lies strictly outside the arc."""
    return [
        i
        for i, site in enumerate(window.sites)
        if site != ORIGIN and not arc.contains(window.direction_at(site))
    ]


def masked_block_norm(a: Operator, row_sites, col_sites) -> float:
    """Norm of the matrix cut down to the given row and column sites."""
    w = a.window
    rows = np.asarray([w.index_of(s) for s in row_sites], dtype=np.intp)
    cols = np.asarray([w.index_of(s) for s in col_sites], dtype=np.intp)
    if rows.size == 0 or cols.size == 0:
        return 0.0
    return spectral_norm(a.entries[np.ix_(rows, cols)])


def block_norm(a: Operator, i: Arc, j: Arc) -> float:
    """Cross-cone block norm: rows from cone(j), columns from cone(i)."""
    w = _require_plane(a.window, "block_norm")
    rows = _cone_indices(w, j)
    cols = _cone_indices(w, i)
    if rows.size == 0 or cols.size == 0:
        return 0.0
    return spectral_norm(a.entries[np.ix_(rows, cols)])


def _shortest_prefix(entries, ordered_rows, cols, budget: float) -> int:
    """Smallest prefix length m with ‖rows[m:] block‖ <= budget.

    The tail norm is nonincreasing in m (dropping rows cannot grow a
    norm), so a binary search finds the greedy growth point.
    """
    rows = np.asarray(ordered_rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)

    def tail(m: int) -> float:
        if m >= rows.size or cols.size == 0:
            return 0.0
        return spectral_norm(entries[np.ix_(rows[m:], cols)])

    if tail(0) <= budget:
        return 0
    lo, hi = 0, rows.size
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail(mid) <= budget:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# diagnostics


def compactness_profile(a: Operator, i: Arc, j: Arc, cutoffs: Sequence) -> DecayProfile:
    """Masked norm of the cone block outside balls of increasing radius.

    A block that behaves like a compact operator at this scale decays
    toward the window noise floor; the profile records the raw numbers.
    """
    w = _require_plane(a.window, "compactness_profile")
    if not arcs_disjoint(i, j):
        raise PreconditionError("profile arcs must be disjoint")
    radii = [Fraction(r) for r in cutoffs]
    rows = _cone_indices(w, j)
    cols = _cone_indices(w, i)
    norms2 = _norm2_array(w)
    values = []
    for r in radii:
        # outside the open ball: |x|^2 >= r^2, exact in integers
        keep = [idx for idx in rows if Fraction(int(norms2[idx])) >= r * r]
        if not keep or cols.size == 0:
            values.append(0.0)
            continue
        values.append(spectral_norm(a.entries[np.ix_(np.asarray(keep), cols)]))
    return DecayProfile(tuple(radii), tuple(values))


def finite_support_approx(k: Operator, e: Region, eps: float) -> frozenset:
    """Shortest canonical-order support F inside the region with
    ‖Λ_F K − Λ_E K‖ <= eps, pruned of rows that are identically zero."""
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    w = k.window
    ordered = realize_region(e, w)
    rows = [w.index_of(s) for s in ordered]
    cols = np.arange(w.dimension, dtype=np.intp)
    m = _shortest_prefix(k.entries, rows, cols, eps)
    kept = []
    for site in ordered[:m]:
        if np.any(k.entries[w.index_of(site), :]):
            kept.append(site)
    return frozenset(kept)


def cone_split(a: Operator, j: Arc, eps: float) -> ConeSplit:
    """Split the open complement of cone(j) into a finite captured set and
    a remainder with ‖Λ_bad A Λ_cone(j)‖ <= eps.

    Walks shrinking widened neighborhoods of the arc; sites leaving the
    neighborhood at stage k form a shell whose block is trimmed to the
    stage budget eps/2^k by shortest-prefix capture.
    """
    w = _require_plane(a.window, "cone_split")
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    j_cols = _cone_indices(w, j)
    remaining = _open_complement_indices(w, j)
    good: list = []
    if j.is_full:
        remaining = []
    k = 1
    while remaining:
        if k > 200:
            raise RuntimeError("cone_split failed to exhaust the window")
        hood = widen_arc(j, k)
        shell = [
            idx
            for idx in remaining
            if not hood.contains(w.direction_at(w.sites[idx]))
        ]
        if shell:
            budget = eps / 2.0**k
            m = _shortest_prefix(a.entries, shell, j_cols, budget)
            for idx in shell[:m]:
                if j_cols.size and np.any(a.entries[idx, j_cols]):
                    good.append(idx)
            remaining = [idx for idx in remaining if idx not in set(shell)]
        k += 1
    bad_idx = sorted(
        set(_open_complement_indices(w, j)) - set(good)
    ) if not j.is_full else []
    good_sites = frozenset(w.sites[i] for i in good)
    bad_sites = frozenset(w.sites[i] for i in bad_idx)
    if bad_idx and j_cols.size:
        achieved = spectral_norm(a.entries[np.ix_(np.asarray(bad_idx), j_cols)])
    else:
        achieved = 0.0
    return ConeSplit(good_sites, bad_sites, achieved)


def _ray_sites(window: TruncationWindow, theta: Direction):
    """Sites m * theta inside the window, nearest first."""
    m = 1
    while True:
        site = (m * theta.p, m * theta.q)
        if site not in window:
            return
        yield site
        m += 1


def annulus_confine(
    a: Operator, thetas: Sequence[Direction], epsilons: Sequence[float]
) -> CentersPlan:
    """Place one center per direction in nested annuli so that the masked
    column of A at each center, outside its own shell, stays under budget.

    Centers are chosen greedily by norm along each exact ray; shell radii
    are the smallest integers putting the outer column tail under half
    the budget (the first center keeps the full budget, its inner shell
    being empty).
    """
    w = _require_plane(a.window, "annulus_confine")
    thetas = list(thetas)
    epsilons = [float(e) for e in epsilons]
    if not thetas:
        raise PreconditionError("at least one direction is required")
    if len(thetas) != len(epsilons):
        raise PreconditionError("one budget per direction is required")
    if any(e <= 0 for e in epsilons):
        raise PreconditionError("budgets must be positive")

    norms2 = _norm2_array(w)
    entries = a.entries
    centers: list = []
    radii: list = []
    r_prev = 0  # integer shell radius, squared compares stay exact

    for i, (theta, eps_i) in enumerate(zip(thetas, epsilons), start=1):
        inner_budget = None if i == 1 else eps_i / 2.0
        outer_budget = eps_i if i == 1 else eps_i / 2.0
        inner_rows = np.flatnonzero(norms2 < r_prev * r_prev)
        chosen = None
        for site in _ray_sites(w, theta):
            n2 = site[0] * site[0] + site[1] * site[1]
            if n2 < r_prev * r_prev:
                continue
            if inner_budget is not None and inner_rows.size:
                col = entries[inner_rows, w.index_of(site)]
                if float(np.linalg.norm(col)) > inner_budget:
                    continue
            chosen = site
            break
        if chosen is None:
            raise WindowExhaustedError(
                f"no admissible center for index {i} along ({theta.p},{theta.q}) "
                f"beyond radius {r_prev}"
            )
        n2 = chosen[0] * chosen[0] + chosen[1] * chosen[1]
        col_idx = w.index_of(chosen)
        rho = max(r_prev, 0)
        while rho * rho <= n2:
            rho += 1
        while True:
            outer_rows = np.flatnonzero(norms2 >= rho * rho)
            if outer_rows.size == 0:
                break
            tail = float(np.linalg.norm(entries[outer_rows, col_idx]))
            if tail <= outer_budget:
                break
            rho += 1
        centers.append(chosen)
        radii.append(Fraction(rho))
        r_prev = rho

    return CentersPlan(
        tuple(centers),
        tuple(radii),
        tuple(epsilons),
        ranges=tuple(frozenset([c]) for c in centers),
        source="annulus-confine",
    )
