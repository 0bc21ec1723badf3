"""Regenerate crates/bbob/tests/data/bbob_probe_values.csv from the COCO reference suite.

Requires `pip install coco-experiment ioh`. The optimum location comes from ioh
(which mirrors the COCO instance generator) and every value is evaluated with cocoex.
"""
import csv
import sys

import cocoex
import ioh
import numpy as np

OUT = sys.argv[1] if len(sys.argv) > 1 else "crates/bbob/tests/data/bbob_probe_values.csv"
DIMS = [2, 5, 10]
MAX_D = max(DIMS)

suite = cocoex.Suite("bbob", "", "")
rng = np.random.default_rng(20220412)

with open(OUT, "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["function_id", "instance_id", "dimension", "probe_index"]
               + [f"x{i}" for i in range(MAX_D)] + ["f"])
    for dim in DIMS:
        for fid in range(1, 25):
            for iid in range(1, 6):
                p = suite.get_problem_by_function_dimension_instance(fid, dim, iid)
                q = ioh.get_problem(fid, instance=iid, dimension=dim)
                probes = [np.array(q.optimum.x), np.zeros(dim)]
                n_rand = 8 if dim == 5 else 3
                probes += [rng.uniform(-5, 5, dim) for _ in range(n_rand)]
                # one point slightly outside the domain exercises the penalty terms
                probes.append(np.full(dim, 5.5) * np.sign(rng.uniform(-1, 1, dim)))
                for k, x in enumerate(probes):
                    f = p(x)
                    xs = [repr(float(v)) for v in x] + [""] * (MAX_D - dim)
                    w.writerow([fid, iid, dim, k] + xs + [repr(float(f))])
                p.free()
print("wrote", OUT)
