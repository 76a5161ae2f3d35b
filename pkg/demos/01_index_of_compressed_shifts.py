"""
Counting the index of compressed shifts
=======================================

The half-line compression of the bilateral shift is the model example
of an operator whose kernel mismatch survives truncation.  This script
builds it on a finite window, counts the index two independent ways,
and then sweeps a factory of projections whose indices hit every
integer in a small range.
"""

import numpy as np

from oplab import (
    Explicit,
    IndexConfig,
    Operator,
    Projection,
    TruncationWindow,
    cut_interface,
    fredholm_index,
    index_k_projection,
    projection_index,
    shift_operator,
)

window = TruncationWindow.line(16)
shift = shift_operator(window, 1, "open")

# project onto the positive half-line and compress the shift there;
# the complement is padded with the identity so the operator stays square
half = Projection.from_region(
    Explicit(frozenset(x for x in window.sites if x >= 1)), window
)
eye = np.eye(window.dimension)
compressed = Operator(
    window, half.entries @ shift.entries @ half.entries + (eye - half.entries)
)

# kernel counting needs to know where the interesting cut sits,
# otherwise window-edge artifacts would be counted too
config = IndexConfig(cut_sites=cut_interface(half))
print("kernel_count :", fredholm_index(compressed, "kernel_count", config).value)
print("trace_formula:", fredholm_index(compressed, "trace_formula", config).value)

# the factory pairs a power of the shift with the half-line projection;
# each k comes back as the exact integer index, and the complement
# projection flips the sign
print()
print("  k   index   index of complement")
for k in range(-3, 4):
    base, proj = index_k_projection(k, TruncationWindow.line(32))
    direct = projection_index(proj, base).value
    flipped = projection_index(proj.perp(), base).value
    print(f"{k:+3d}   {direct:+3d}     {flipped:+3d}")
