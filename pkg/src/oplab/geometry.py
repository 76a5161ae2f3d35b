"""Exact lattice geometry: sites, rational directions, arcs, and regions.

All predicates in this module are decided in integer (or ``Fraction``)
arithmetic.  No float ever participates in a membership or ordering
decision; floats appear only in operator entries elsewhere.

Conventions
-----------
* A planar site is a ``tuple[int, int]``; a line site is an ``int``.
* A ``Direction`` is a primitive integer vector ``(p, q)``, gcd 1.  It
  stands for the rational point ``(p + iq)/|p + iq|`` of the unit circle.
* An ``Arc`` is the closed set of directions swept counter-clockwise from
  ``start`` to ``end``.  ``start == end`` denotes the full circle (the
  degenerate one-point arc is not representable; nothing here needs it).
* Cones never contain the origin.  Balls are open: ``Ball(r)`` holds the
  sites with ``|x| < r``.  ``Annulus(a, b)`` holds ``a <= |x| < b``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt
from typing import Iterator, Union

from .errors import RegionParseError, RepresentationError

SiteZ2 = tuple[int, int]
SiteZ = int
Site = Union[SiteZ2, SiteZ]

ORIGIN: SiteZ2 = (0, 0)


# ---------------------------------------------------------------------------
# directions


@dataclass(frozen=True)
class Direction:
    """Primitive integer vector on the rational circle."""

    p: int
    q: int

    def __post_init__(self) -> None:
        if not (isinstance(self.p, int) and isinstance(self.q, int)):
            raise TypeError("direction components must be ints")
        if self.p == 0 and self.q == 0:
            raise ValueError("zero vector has no direction")
        if gcd(abs(self.p), abs(self.q)) != 1:
            raise ValueError(f"({self.p},{self.q}) is not primitive; use Direction.from_vector")

    @classmethod
    def from_vector(cls, x1: int, x2: int) -> "Direction":
        """Reduce an arbitrary nonzero integer vector to its direction."""
        if x1 == 0 and x2 == 0:
            raise ValueError("the origin has no direction")
        g = gcd(abs(x1), abs(x2))
        return cls(x1 // g, x2 // g)

    def cross(self, other: "Direction") -> int:
        return self.p * other.q - self.q * other.p

    def dot(self, other: "Direction") -> int:
        return self.p * other.p + self.q * other.q

    def antipode(self) -> "Direction":
        return Direction(-self.p, -self.q)

    def rotate_ccw_pow2(self, k: int) -> "Direction":
        """Rotate counter-clockwise by exactly arctan(2^-k).

        Complex multiplication by ``2^k + i`` keeps the slope rational and
        the angle increment exact; the result is reduced to primitive form.
        """
        m = 1 << k
        return Direction.from_vector(self.p * m - self.q, self.q * m + self.p)

    def rotate_cw_pow2(self, k: int) -> "Direction":
        """Rotate clockwise by exactly arctan(2^-k)."""
        m = 1 << k
        return Direction.from_vector(self.p * m + self.q, self.q * m - self.p)

    def angle_key(self):
        """Total-order key: counter-clockwise angle from (1,0), exact."""
        p, q = self.p, self.q
        if q > 0 or (q == 0 and p > 0):
            if p > 0:
                return (0, 0, Fraction(q, p))
            if p == 0:
                return (0, 1, Fraction(0))
            return (0, 2, Fraction(q, p))
        if p < 0:
            return (1, 0, Fraction(q, p))
        if p == 0:
            return (1, 1, Fraction(0))
        return (1, 2, Fraction(q, p))

    def as_text(self) -> str:
        return f"({self.p},{self.q})"

    def __repr__(self) -> str:  # keeps diagnostics compact
        return f"Direction{self.as_text()}"


def direction_of(x: SiteZ2) -> Direction:
    """Direction class of a nonzero planar site."""
    return Direction.from_vector(x[0], x[1])


def site_sort_key(x: Site):
    """Canonical enumeration key: radius, then angle, then lexicographic.

    Line sites order by (|x|, x); planar sites by (|x|^2, angle from (1,0)
    counter-clockwise, coordinates).  The origin sorts first.
    """
    if isinstance(x, int):
        return (abs(x), x)
    r2 = x[0] * x[0] + x[1] * x[1]
    if r2 == 0:
        return (0, (0, 0, Fraction(0)), x)
    return (r2, direction_of(x).angle_key(), x)


def enumerate_directions() -> Iterator[Direction]:
    """All rational directions, dense and deterministic.

    The four axes come first; then the open quadrants are emitted
    round-robin, each walked in breadth-first mediant (Farey) order of the
    slope tree rooted at 1/1.  Every direction appears exactly once.
    """
    yield Direction(1, 0)
    yield Direction(0, 1)
    yield Direction(-1, 0)
    yield Direction(0, -1)
    # queue entries are slope intervals (a/b, c/d); the mediant is emitted
    queue = [((0, 1), (1, 0))]
    while True:
        next_queue = []
        for (a, b), (c, d) in queue:
            num, den = a + c, b + d  # slope num/den, both positive
            yield Direction(den, num)
            yield Direction(-num, den)
            yield Direction(-den, -num)
            yield Direction(num, -den)
            next_queue.append(((a, b), (num, den)))
            next_queue.append(((num, den), (c, d)))
        queue = next_queue


# ---------------------------------------------------------------------------
# arcs


@dataclass(frozen=True)
class Arc:
    """Closed counter-clockwise arc of the rational circle."""

    start: Direction
    end: Direction

    @classmethod
    def full_circle(cls) -> "Arc":
        return cls(Direction(1, 0), Direction(1, 0))

    @classmethod
    def from_vectors(cls, start: tuple[int, int], end: tuple[int, int]) -> "Arc":
        return cls(Direction.from_vector(*start), Direction.from_vector(*end))

    @property
    def is_full(self) -> bool:
        return self.start == self.end

    def contains(self, d: Direction) -> bool:
        """Closed membership, decided by integer cross products.

        For arc [a, b]: when the span is under a half turn, d must lie
        weakly left of a and weakly right of b; over a half turn either
        side condition suffices; at exactly a half turn (b = -a) the arc
        is the closed left half-plane of a.
        """
        a, b = self.start, self.end
        if a == b:
            return True
        c = a.cross(b)
        ad = a.cross(d)
        db = d.cross(b)
        if c > 0:
            return ad >= 0 and db >= 0
        if c < 0:
            return ad >= 0 or db >= 0
        return ad >= 0  # b is the antipode of a

    def as_text(self) -> str:
        return f"{self.start.as_text()}..{self.end.as_text()}"

    def __repr__(self) -> str:
        return f"Arc[{self.as_text()}]"


def arc_contains(arc: Arc, d: Direction) -> bool:
    return arc.contains(d)


def arcs_disjoint(first: Arc, second: Arc) -> bool:
    """True iff the two closed arcs share no direction.

    Two closed arcs intersect exactly when one contains an endpoint of the
    other, so four membership tests decide disjointness.
    """
    return not (
        first.contains(second.start)
        or first.contains(second.end)
        or second.contains(first.start)
        or second.contains(first.end)
    )


def widen_arc(arc: Arc, k: int) -> Arc:
    """Enclose ``arc`` in a strictly larger arc, shrinking as k grows.

    Both endpoints rotate outward by exactly arctan(2^-k) (an exact
    rational rotation), so the widened arcs are nested, contain ``arc`` in
    their interior, and intersect down to ``arc`` as k increases.  If the
    complement of ``arc`` is too short to absorb the widening, the full
    circle is returned.
    """
    if k < 1:
        raise ValueError("widening step k must be >= 1")
    if arc.is_full:
        return arc
    a, b = arc.start, arc.end
    new_start = a.rotate_cw_pow2(k)
    new_end = b.rotate_ccw_pow2(k)
    comp = b.cross(a)
    if comp > 0:
        # complement arc [b, a] spans under a half turn; the rotations stay
        # inside it (in order b, new_end, new_start, a) or we have wrapped
        ordered = (
            b.cross(new_end) > 0
            and new_end.cross(new_start) > 0
            and new_start.cross(a) > 0
        )
        if not ordered:
            return Arc.full_circle()
    elif comp == 0:
        if b == a:  # unreachable: is_full handled above
            return arc
        # complement spans exactly a half turn; rotations by < pi/4 each
        # cannot wrap
    return Arc(new_start, new_end)


# ---------------------------------------------------------------------------
# regions


class Region:
    """Base class for region syntax trees.  Subclasses are frozen values."""

    def complement(self) -> "Region":
        return Complement(self)

    def __or__(self, other: "Region") -> "Region":
        return RegionUnion(self, other)

    def __and__(self, other: "Region") -> "Region":
        return RegionIntersection(self, other)

    def __invert__(self) -> "Region":
        return Complement(self)


@dataclass(frozen=True)
class Cone(Region):
    """Nonzero sites whose direction lies in the arc.  Planar only."""

    arc: Arc


@dataclass(frozen=True)
class Ball(Region):
    """Open ball |x| < radius.  Radius is an exact rational."""

    radius: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "radius", Fraction(self.radius))


@dataclass(frozen=True)
class Annulus(Region):
    """Half-open shell inner <= |x| < outer."""

    inner: Fraction
    outer: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "inner", Fraction(self.inner))
        object.__setattr__(self, "outer", Fraction(self.outer))
        if self.inner < 0 or self.outer < self.inner:
            raise ValueError("annulus needs 0 <= inner <= outer")


@dataclass(frozen=True)
class Explicit(Region):
    """A finite explicit site set."""

    sites: frozenset

    def __post_init__(self) -> None:
        object.__setattr__(self, "sites", frozenset(self.sites))


@dataclass(frozen=True)
class Complement(Region):
    region: Region


@dataclass(frozen=True)
class RegionUnion(Region):
    left: Region
    right: Region


@dataclass(frozen=True)
class RegionIntersection(Region):
    left: Region
    right: Region


EMPTY_REGION = Explicit(frozenset())
FULL_REGION = Complement(EMPTY_REGION)


def _norm_sq(x: Site):
    if isinstance(x, int):
        return x * x
    return x[0] * x[0] + x[1] * x[1]


def region_sites(region: Region, window) -> frozenset:
    """Realize a region inside a window as a frozenset of sites."""
    all_sites = window.site_set
    if isinstance(region, Cone):
        if window.representation != "Z2":
            raise RepresentationError("cones are defined on the planar lattice only")
        arc = region.arc
        return frozenset(
            x for x in all_sites if x != ORIGIN and arc.contains(window.direction_at(x))
        )
    if isinstance(region, Ball):
        r2 = region.radius * region.radius
        return frozenset(x for x in all_sites if _norm_sq(x) < r2)
    if isinstance(region, Annulus):
        lo = region.inner * region.inner
        hi = region.outer * region.outer
        return frozenset(x for x in all_sites if lo <= _norm_sq(x) < hi)
    if isinstance(region, Explicit):
        return region.sites & all_sites
    if isinstance(region, Complement):
        return all_sites - region_sites(region.region, window)
    if isinstance(region, RegionUnion):
        return region_sites(region.left, window) | region_sites(region.right, window)
    if isinstance(region, RegionIntersection):
        return region_sites(region.left, window) & region_sites(region.right, window)
    raise TypeError(f"not a region: {region!r}")


def realize_region(region: Region, window) -> tuple:
    """Region sites in the window's canonical enumeration order."""
    return window.order(region_sites(region, window))


# ---------------------------------------------------------------------------
# textual form

_PRECEDENCE = {"union": 1, "intersection": 2, "complement": 3, "atom": 4}


def _rational_text(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _site_text(site: Site) -> str:
    if isinstance(site, int):
        return str(site)
    return f"({site[0]},{site[1]})"


def region_to_text(region: Region) -> str:
    """Canonical textual form; ``parse_region`` inverts it exactly."""

    def prec(r: Region) -> int:
        if isinstance(r, RegionUnion):
            return _PRECEDENCE["union"]
        if isinstance(r, RegionIntersection):
            return _PRECEDENCE["intersection"]
        if isinstance(r, Complement):
            return _PRECEDENCE["complement"]
        return _PRECEDENCE["atom"]

    def emit(r: Region) -> str:
        if isinstance(r, Cone):
            return f"cone[{r.arc.as_text()}]"
        if isinstance(r, Ball):
            return f"ball[{_rational_text(r.radius)}]"
        if isinstance(r, Annulus):
            return f"ann[{_rational_text(r.inner)},{_rational_text(r.outer)}]"
        if isinstance(r, Explicit):
            parts = sorted(r.sites, key=lambda s: (0, s) if isinstance(s, int) else (1, s))
            return "set[" + ",".join(_site_text(s) for s in parts) + "]"
        if isinstance(r, Complement):
            inner = emit(r.region)
            if prec(r.region) < _PRECEDENCE["complement"]:
                inner = f"({inner})"
            return f"!{inner}"
        if isinstance(r, (RegionUnion, RegionIntersection)):
            op = "|" if isinstance(r, RegionUnion) else "&"
            own = prec(r)
            left = emit(r.left)
            if prec(r.left) < own:
                left = f"({left})"
            right = emit(r.right)
            if prec(r.right) <= own:
                right = f"({right})"
            return f"{left}{op}{right}"
        raise TypeError(f"not a region: {r!r}")

    return emit(region)


_INT = r"-?\d+"
_TOKEN_RE = re.compile(r"\s*(cone\[|ball\[|ann\[|set\[|[()!|&\],]|\.\.|" + _INT + r"(?:/\d+)?)")


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[str] = []
        while self.pos < len(text):
            m = _TOKEN_RE.match(text, self.pos)
            if not m:
                raise RegionParseError(f"bad region text at offset {self.pos}: {text[self.pos:]!r}")
            self.tokens.append(m.group(1))
            self.pos = m.end()
        self.i = 0

    def peek(self) -> str | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self, expect: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise RegionParseError("unexpected end of region text")
        if expect is not None and tok != expect:
            raise RegionParseError(f"expected {expect!r}, found {tok!r}")
        self.i += 1
        return tok

    def parse(self) -> Region:
        r = self.union()
        if self.peek() is not None:
            raise RegionParseError(f"trailing tokens after region: {self.tokens[self.i:]}")
        return r

    def union(self) -> Region:
        r = self.intersection()
        while self.peek() == "|":
            self.take()
            r = RegionUnion(r, self.intersection())
        return r

    def intersection(self) -> Region:
        r = self.factor()
        while self.peek() == "&":
            self.take()
            r = RegionIntersection(r, self.factor())
        return r

    def factor(self) -> Region:
        tok = self.peek()
        if tok == "!":
            self.take()
            return Complement(self.factor())
        if tok == "(":
            self.take()
            r = self.union()
            self.take(")")
            return r
        return self.primitive()

    def rational(self) -> Fraction:
        tok = self.take()
        if not re.fullmatch(_INT + r"(?:/\d+)?", tok):
            raise RegionParseError(f"expected a rational, found {tok!r}")
        return Fraction(tok)

    def integer(self) -> int:
        tok = self.take()
        if not re.fullmatch(_INT, tok):
            raise RegionParseError(f"expected an integer, found {tok!r}")
        return int(tok)

    def pair(self) -> tuple[int, int]:
        self.take("(")
        a = self.integer()
        self.take(",")
        b = self.integer()
        self.take(")")
        return (a, b)

    def primitive(self) -> Region:
        tok = self.take()
        if tok == "cone[":
            start = self.pair()
            self.take("..")
            end = self.pair()
            self.take("]")
            return Cone(Arc(Direction(*start), Direction(*end)))
        if tok == "ball[":
            radius = self.rational()
            self.take("]")
            return Ball(radius)
        if tok == "ann[":
            inner = self.rational()
            self.take(",")
            outer = self.rational()
            self.take("]")
            return Annulus(inner, outer)
        if tok == "set[":
            sites: list[Site] = []
            if self.peek() != "]":
                while True:
                    if self.peek() == "(":
                        sites.append(self.pair())
                    else:
                        sites.append(self.integer())
                    if self.peek() == ",":
                        self.take()
                        continue
                    break
            self.take("]")
            return Explicit(frozenset(sites))
        raise RegionParseError(f"expected a region primitive, found {tok!r}")


def parse_region(text: str) -> Region:
    """Parse the textual region form: cone[..], ball[..], ann[..], set[..], !, |, &."""
    return _Parser(text).parse()


def parse_arc(text: str) -> Arc:
    """Parse ``(p,q)..(r,s)`` as an arc."""
    m = re.fullmatch(
        r"\s*\((" + _INT + r"),(" + _INT + r")\)\.\.\((" + _INT + r"),(" + _INT + r")\)\s*",
        text,
    )
    if not m:
        raise RegionParseError(f"bad arc text: {text!r}")
    a, b, c, d = (int(g) for g in m.groups())
    return Arc(Direction(a, b), Direction(c, d))
