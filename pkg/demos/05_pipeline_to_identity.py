"""
Deforming a local unitary to the identity
=========================================

The full pipeline: confine a column per direction, straighten the
confined columns with a corrective unitary, peel the result into a
block factorization, climb back to the unitary group through the polar
map, and finish with the stacked-isometry move.  The output is a
single certified path from the input unitary to the identity.

Radius 8 keeps this quick; radius 20 is the desk-scale setting used by
the acceptance tests and takes a minute or two per seed.
"""

import time

from oplab import CertifyConfig, PipelineConfig, TruncationWindow, theorem1_pipeline
from oplab.runner import DEFAULT_ARC_PAIR, seeded_local_unitary

window = TruncationWindow.plane(8)
u = seeded_local_unitary(window, seed=7)

config = PipelineConfig(
    certify=CertifyConfig(samples=60, arc_pairs=(DEFAULT_ARC_PAIR,), allowance_radius=4)
)
t0 = time.perf_counter()
path, report = theorem1_pipeline(u, 0.25, config)
elapsed = time.perf_counter() - t0

print(f"pipeline on radius 8 in {elapsed:.1f}s, {len(path.segments)} segments")
print("endpoint errors      :", report.endpoint_errors)
print("max unitarity defect :", report.max_unitarity_defect)
print("max locality defect  :", report.max_locality_defect)
print()
print("segment        label                 min sv     max unit defect")
for stats in report.segment_stats:
    print(f"{stats['kind']:<13}  {stats['label'] or '-':<20}  "
          f"{stats['min_singular_value']:.6f}   {stats['max_unitarity_defect']:.2e}")
