"""
Building and certifying operator paths
======================================

Paths between operators are built from a small set of moves: straight
lines, logarithmic unitary arcs, polar corrections, and block peels.
Every path can be certified by sampling: unitarity defect, smallest
singular value, locality defect against cone pairs, and (for paths of
projections) idempotency and an integer index trace.
"""

from pathlib import Path

import numpy as np

from oplab import (
    CertifyConfig,
    IndexConfig,
    Operator,
    TruncationWindow,
    certify_path,
    conjugation_path,
    cut_interface,
    emit_plots,
    index_k_projection,
    laughlin_operator,
    log_path,
    polar_path,
    straight_line,
)

plane = TruncationWindow.plane(6)

# a straight line from the directional-phase unitary to the identity;
# the chord passes through a singular matrix (the -1 phase crosses 0),
# which the certificate exposes as a vanishing singular value
line = straight_line(laughlin_operator(plane), Operator.identity(plane))
report = certify_path(line, CertifyConfig(samples=25))
print("straight line, 25 samples")
print("  max unitarity defect:", report.max_unitarity_defect)
print("  min singular value  :", report.min_singular_value)

# the same endpoints joined through the unitary group: log arc has no
# unitarity defect at all, at the price of complex phase bookkeeping
arc = log_path(laughlin_operator(plane)).reverse()
report = certify_path(arc, CertifyConfig(samples=25))
print("log arc, 25 samples")
print("  max unitarity defect:", report.max_unitarity_defect)

# polar correction pulls an invertible path back onto the unitaries
squeezed = Operator(plane, 0.5 * laughlin_operator(plane).entries)
pol = polar_path(squeezed)
print("polar correction of a squeezed unitary")
print("  endpoint gap:", float(np.linalg.norm(
    pol.at(1.0) - laughlin_operator(plane).entries, 2)))

# a projection path: conjugate a half-line projection along a unitary
# arc and watch the integer index stay put at every sample
line_window = TruncationWindow.line(16)
base, proj = index_k_projection(-1, line_window)
mover = np.eye(line_window.dimension, dtype=np.complex128)
i, j = line_window.index_of(5), line_window.index_of(6)
c, s = np.cos(0.8), np.sin(0.8)
mover[i, i] = mover[j, j] = c
mover[i, j], mover[j, i] = -s, s
path = conjugation_path(proj, log_path(Operator(line_window, mover)).reverse())
report = certify_path(
    path,
    CertifyConfig(
        samples=20,
        index_base=base,
        index_config=IndexConfig(cut_sites=cut_interface(proj)),
    ),
)
print("conjugated projection, 20 samples")
print("  index trace:", report.index_trace)
print("  max idempotency defect:", report.max_idempotency_defect)

# certificates serialize to CSV and deterministic SVG plots
out = Path("demo_certificates")
out.mkdir(exist_ok=True)
files = emit_plots(report, out)
print("wrote", ", ".join(sorted(f.name for f in files)))
