"""
Reproducible experiment runs
============================

A run is a single JSON config with a mandatory seed.  The runner
executes one named experiment, writes every artifact into the output
directory, and finishes with a manifest listing each file's hash.
Running the same config twice gives byte-identical artifacts.

The same runs are available from the shell:

    opl run --config config.json
    opl index --k -2 --radius 32
    opl probe --mode half-line --radius 32
    opl certify --config theorem2.json
    opl convert --in run/start.opmat --out start.json
"""

import json
import tempfile
from pathlib import Path

from oplab.runner import load_config, run

tmp = Path(tempfile.mkdtemp(prefix="oplab-demo-"))
config_path = tmp / "config.json"
config_path.write_text(json.dumps({
    "experiment": "index-sweep",
    "representation": "Z",
    "radius": 16,
    "seed": 11,
    "k_min": -2,
    "k_max": 2,
    "out_dir": str(tmp / "first"),
}))

config = load_config(config_path)
first = run(config)
second = run(config, out_override=str(tmp / "second"))

print("experiment:", config.experiment, "seed:", config.seed)
for item in first.files:
    print(f"  {item['path']:<26} {item['sha256'][:16]}")

same = first.file_hashes() == second.file_hashes()
print("rerun hashes identical:", same)

# stage timings are recorded in the manifest as well
manifest = json.loads((tmp / "first" / "manifest.json").read_text())
for stage in manifest["stages"]:
    print(f"  stage {stage['name']}: {stage['seconds']:.4f}s")
