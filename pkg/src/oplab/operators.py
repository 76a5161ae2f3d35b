"""Dense operators on truncation windows, and the model operators.

The laboratory works with plain dense complex128 matrices wrapped in an
``Operator`` that remembers its window.  The two model operators are the
diagonal angular-phase unitary on the planar window and the bilateral
shift on the line window (exact unitary with periodic boundary, partial
isometry with open boundary).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from .errors import (
    PreconditionError,
    RepresentationError,
    SingularOperatorError,
    UnitarityError,
    WindowMismatchError,
)
from .geometry import ORIGIN, Region, realize_region, region_sites
from .windows import AmplifiedWindow, TruncationWindow, Window

TOL_IDEMPOTENT = 1e-10
TOL_INVERTIBLE = 1e-8


def _freeze(entries: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(entries, dtype=np.complex128)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Operator:
    """A square matrix bound to its window.  Entries are immutable."""

    window: Window
    entries: np.ndarray
    tags: Mapping[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        entries = _freeze(self.entries)
        d = self.window.dimension
        if entries.shape != (d, d):
            raise ValueError(f"entries shape {entries.shape} != window dimension {d}")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "tags", MappingProxyType(dict(self.tags)))

    # -- constructors -------------------------------------------------------

    @classmethod
    def identity(cls, window: Window, **tags: str) -> "Operator":
        return cls(window, np.eye(window.dimension, dtype=np.complex128), tags)

    @classmethod
    def zero(cls, window: Window, **tags: str) -> "Operator":
        return cls(window, np.zeros((window.dimension,) * 2, dtype=np.complex128), tags)

    @classmethod
    def diagonal(cls, window: Window, diag: np.ndarray, **tags: str) -> "Operator":
        return cls(window, np.diag(np.asarray(diag, dtype=np.complex128)), tags)

    def with_tags(self, **tags: str) -> "Operator":
        merged = dict(self.tags)
        merged.update(tags)
        return Operator(self.window, self.entries, merged)

    # -- algebra ------------------------------------------------------------

    def _check_window(self, other: "Operator") -> None:
        if self.window != other.window:
            raise WindowMismatchError(
                f"operands live on different windows: {self.window} vs {other.window}"
            )

    def adjoint(self) -> "Operator":
        return Operator(self.window, self.entries.conj().T)

    def __matmul__(self, other: "Operator") -> "Operator":
        self._check_window(other)
        return Operator(self.window, self.entries @ other.entries)

    def __add__(self, other: "Operator") -> "Operator":
        self._check_window(other)
        return Operator(self.window, self.entries + other.entries)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check_window(other)
        return Operator(self.window, self.entries - other.entries)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.window, self.entries * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return Operator(self.window, -self.entries)

    # -- metrics ------------------------------------------------------------

    def norm(self) -> float:
        """Operator norm (largest singular value)."""
        return spectral_norm(self.entries)

    def unitarity_defect(self) -> float:
        """|| A*A - 1 ||, computed from the eigenvalues of A*A."""
        gram = self.entries.conj().T @ self.entries
        eigs = np.linalg.eigvalsh((gram + gram.conj().T) / 2.0)
        return float(np.max(np.abs(eigs - 1.0))) if eigs.size else 0.0

    def is_diagonal(self) -> bool:
        off = self.entries - np.diag(np.diag(self.entries))
        return not np.any(off)


def spectral_norm(entries: np.ndarray) -> float:
    """Largest singular value of a dense block; empty blocks have norm 0."""
    if entries.size == 0:
        return 0.0
    if not np.any(entries):
        return 0.0
    return float(np.linalg.norm(entries, 2))


# ---------------------------------------------------------------------------
# projections


@dataclass(frozen=True)
class Projection:
    """An orthogonal projection, optionally backed by a diagonal region."""

    operator: Operator
    region: Region | None = None

    @classmethod
    def from_region(cls, region: Region, window: Window) -> "Projection":
        """Exact 0/1 diagonal projection onto the region's window sites."""
        if isinstance(window, AmplifiedWindow):
            raise RepresentationError("region projections live on plain windows")
        diag = np.zeros(window.dimension, dtype=np.complex128)
        for site in region_sites(region, window):
            diag[window.index_of(site)] = 1.0
        return cls(Operator.diagonal(window, diag), region)

    @classmethod
    def from_operator(
        cls,
        operator: Operator,
        region: Region | None = None,
        tol: float = TOL_IDEMPOTENT,
    ) -> "Projection":
        """Validate self-adjointness and idempotency before wrapping."""
        a = operator.entries
        herm = spectral_norm(a - a.conj().T)
        if herm > tol:
            raise PreconditionError(f"not self-adjoint: defect {herm:.3e} > {tol:.1e}")
        idem = spectral_norm(a @ a - a)
        if idem > tol:
            raise PreconditionError(f"not idempotent: defect {idem:.3e} > {tol:.1e}")
        return cls(operator, region)

    @property
    def window(self) -> Window:
        return self.operator.window

    @property
    def entries(self) -> np.ndarray:
        return self.operator.entries

    def perp(self) -> "Projection":
        region = None if self.region is None else self.region.complement()
        return Projection(Operator.identity(self.window) - self.operator, region)

    def diagonal_mask(self) -> np.ndarray | None:
        """Boolean site mask when the projection is an exact 0/1 diagonal."""
        a = self.operator.entries
        diag = np.diag(a).real
        if np.any(a - np.diag(np.diag(a))):
            return None
        if not np.all((diag == 0.0) | (diag == 1.0)):
            return None
        if np.any(np.diag(a).imag):
            return None
        return diag == 1.0

    def sites(self) -> tuple:
        if self.region is None:
            raise ValueError("projection has no region descriptor")
        return realize_region(self.region, self.window)

    def trace(self) -> float:
        return float(np.trace(self.entries).real)


def projection_from_region(region: Region, window: Window) -> Projection:
    return Projection.from_region(region, window)


# ---------------------------------------------------------------------------
# circle functions


@dataclass(frozen=True)
class CircleFunction:
    """Finite Laurent polynomial on the unit circle: sum_n c_n z^n."""

    coefficients: tuple
    name: str = ""

    def __post_init__(self) -> None:
        cleaned = tuple(
            sorted((int(n), complex(c)) for n, c in dict(self.coefficients).items() if c != 0)
        )
        object.__setattr__(self, "coefficients", cleaned)

    @classmethod
    def from_coefficients(cls, coeffs: Mapping[int, complex], name: str = "") -> "CircleFunction":
        return cls(tuple(coeffs.items()), name)

    @classmethod
    def monomial(cls, n: int, c: complex = 1.0) -> "CircleFunction":
        label = {1: "z", -1: "conj(z)", 0: "1"}.get(n, f"z^{n}")
        return cls(((n, c),), label if c == 1.0 else f"{c}*{label}")

    @property
    def degree(self) -> int:
        return max((abs(n) for n, _ in self.coefficients), default=0)

    @property
    def is_zero(self) -> bool:
        return not self.coefficients

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128)
        out = np.zeros_like(z)
        for n, c in self.coefficients:
            out = out + c * z**n
        return out

    def __mul__(self, other: "CircleFunction") -> "CircleFunction":
        prod: dict[int, complex] = {}
        for n, a in self.coefficients:
            for m, b in other.coefficients:
                prod[n + m] = prod.get(n + m, 0.0) + a * b
        return CircleFunction.from_coefficients(prod, f"({self.name})*({other.name})")

    def conj(self) -> "CircleFunction":
        return CircleFunction.from_coefficients(
            {-n: np.conj(c) for n, c in self.coefficients}, f"conj({self.name})"
        )

    def sup_norm(self, samples: int = 4096) -> float:
        """Sup norm over the circle, estimated on a uniform grid."""
        if self.is_zero:
            return 0.0
        z = np.exp(2j * np.pi * np.arange(samples) / samples)
        return float(np.max(np.abs(self(z))))


def _laurent_apply(f: CircleFunction, u: np.ndarray) -> np.ndarray:
    """Evaluate the Laurent sum in matrix powers of u and its adjoint."""
    d = u.shape[0]
    out = np.zeros((d, d), dtype=np.complex128)
    pos = {n: c for n, c in f.coefficients if n >= 0}
    neg = {-n: c for n, c in f.coefficients if n < 0}
    if pos:
        power = np.eye(d, dtype=np.complex128)
        top = max(pos)
        for n in range(0, top + 1):
            if n > 0:
                power = power @ u
            if n in pos:
                out += pos[n] * power
    if neg:
        adj = u.conj().T
        power = np.eye(d, dtype=np.complex128)
        top = max(neg)
        for n in range(1, top + 1):
            power = power @ adj
            if n in neg:
                out += neg[n] * power
    return out


def apply_circle_function(
    f: CircleFunction, u: Operator, tol: float = TOL_INVERTIBLE
) -> Operator:
    """f(U) for unitary U; exactly entrywise for diagonal U.

    Diagonal unitaries take the fast entrywise route (the Laurent sum at
    each diagonal phase); general operators must be unitary within ``tol``
    and go through matrix powers.
    """
    if f.is_zero:
        return Operator.zero(u.window)
    if u.is_diagonal():
        diag = np.diag(u.entries)
        mods = np.abs(diag)
        if np.max(np.abs(mods - 1.0)) > tol:
            raise UnitarityError(
                f"diagonal is not unimodular within {tol:.1e}; cannot apply a circle function"
            )
        return Operator.diagonal(u.window, f(diag))
    defect = u.unitarity_defect()
    if defect > tol:
        raise UnitarityError(f"operand unitarity defect {defect:.3e} > {tol:.1e}")
    return Operator(u.window, _laurent_apply(f, u.entries))


# ---------------------------------------------------------------------------
# model operators


def laughlin_operator(window: TruncationWindow) -> Operator:
    """Diagonal angular-phase unitary: site x maps to (x1 + i x2)/|x|.

    The origin carries phase 1 so the operator stays exactly unitary.
    Commutes exactly with every region-backed diagonal projection.
    """
    if window.representation != "Z2":
        raise RepresentationError("the angular-phase unitary lives on the planar window")
    diag = np.empty(window.dimension, dtype=np.complex128)
    for i, site in enumerate(window.sites):
        if site == ORIGIN:
            diag[i] = 1.0
        else:
            z = complex(site[0], site[1])
            diag[i] = z / abs(z)
    return Operator.diagonal(window, diag, name="angular-phase")


def shift_operator(window: TruncationWindow, k: int = 1, boundary: str = "open") -> Operator:
    """Bilateral shift by k on the line window.

    ``open`` drops amplitudes shifted past the edge (a partial isometry);
    ``periodic`` wraps them (an exact unitary).  Periodic boundaries are
    for translation-invariance checks only: the wraparound cancels any
    index content, so index computations must use open boundaries.
    """
    if window.representation != "Z":
        raise RepresentationError("shifts live on the line window")
    if boundary not in ("open", "periodic"):
        raise ValueError(f"unknown boundary {boundary!r}")
    d = window.dimension
    n = (d - 1) // 2
    entries = np.zeros((d, d), dtype=np.complex128)
    for x in range(-n, n + 1):
        y = x + k
        if boundary == "periodic":
            y = (y + n) % d - n
        if -n <= y <= n:
            entries[window.index_of(y), window.index_of(x)] = 1.0
    return Operator(window, entries, {"name": f"shift[{k},{boundary}]"})


# ---------------------------------------------------------------------------
# polar decomposition


def polar_part(g: Operator, tol: float = TOL_INVERTIBLE) -> Operator:
    """Unitary polar factor of an invertible operator, via SVD.

    Raises if the smallest singular value is at or below ``tol``; the
    message reports it so callers can widen their margins.
    """
    u, s, vh = np.linalg.svd(g.entries)
    smin = float(s[-1]) if s.size else 0.0
    if smin <= tol:
        raise SingularOperatorError(
            f"smallest singular value {smin:.3e} <= {tol:.1e}; polar factor is unreliable"
        )
    return Operator(g.window, u @ vh)


def operator_norm(a: Operator) -> float:
    return a.norm()
