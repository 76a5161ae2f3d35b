"""
Matrix surgery: deleting blocks and confining columns
=====================================================

Two constructions are shown.  First the deletion series, which removes
a list of masked blocks from an operator while moving it by no more
than a prescribed eps.  Then the localized-centers deformation, which
picks one site per chosen direction and confines that site's column to
a finite neighborhood, finishing with a unitary that straightens each
confined column onto its own center.
"""

import numpy as np

from oplab import (
    Arc,
    Direction,
    Explicit,
    Operator,
    Projection,
    ProjectionPair,
    TruncationWindow,
    corrective_unitary,
    deletion_series,
    localized_centers,
    mixing_indices,
    spectral_norm,
)
from oplab.runner import seeded_local_unitary

# --- deletion series on a line window -----------------------------------

window = TruncationWindow.line(40)
dim = window.dimension
rng = np.random.default_rng(1)
entries = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
entries /= np.sqrt(dim)

eps = 0.5
blocks = []
for k in range(1, 4):
    rows = frozenset(range(-40 + 8 * (k - 1), -40 + 8 * k))
    cols = frozenset(range(40 - 8 * k + 1, 40 - 8 * (k - 1) + 1))
    sel = np.ix_([window.index_of(x) for x in rows], [window.index_of(x) for x in cols])
    # each pair must fit its budget eps / 2^(2k-1) before deletion starts
    budget = eps / 2.0 ** (2 * k - 1)
    entries[sel] *= 0.8 * budget / np.linalg.norm(entries[sel], 2)
    blocks.append((rows, cols))

a = Operator(window, entries)
pairs = [
    ProjectionPair.for_operator(
        Projection.from_region(Explicit(rows), window),
        Projection.from_region(Explicit(cols), window),
        a,
    )
    for rows, cols in blocks
]
b = deletion_series(a, pairs, eps)
print("deletion series on", len(pairs), "pairs")
print("  moved by       :", spectral_norm(a.entries - b.entries))
print("  worst residual :", max(
    spectral_norm(p.entries @ b.entries @ q.entries)
    for p, q in ((pair.p, pair.q) for pair in pairs)
))

# --- localized centers on a plane window --------------------------------

plane = TruncationWindow.plane(12)
u = seeded_local_unitary(plane, seed=3)
thetas = (Direction(1, 0), Direction(0, 1), Direction(-1, 0))
g, plan = localized_centers(u, thetas, 0.5)

print()
print("localized centers along three directions")
for k, (center, y) in enumerate(zip(plan.centers, plan.ranges)):
    print(f"  center {center} confined to {sorted(y)} "
          f"inside shell radius {plan.radii[k]}")

# the arcs must be disjoint, so the north cone starts strictly above
# the east cone's upper boundary direction
east = Arc(Direction(1, -1), Direction(1, 1))
north = Arc(Direction(1, 2), Direction(-1, 2))
print("  ranges meeting both of two disjoint cones:",
      mixing_indices(plan, east, north) or "none")

# the corrective unitary is the identity off the ranges and sends each
# confined column to a multiple of its own center basis vector
v = corrective_unitary(g, plan)
vg = v.entries @ g.entries
for center in plan.centers:
    i = plane.index_of(center)
    col = vg[:, i]
    print(f"  |VB delta at {center}| = {np.linalg.norm(col):.6f}, "
          f"off-center mass {np.linalg.norm(np.delete(col, i)):.2e}")
