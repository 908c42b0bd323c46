"""A reduced parameter sweep with CSV and SVG output.

Pass an output directory as the first argument (default: ./bench-out).  The
full sweep behind the acceptance suite is the same call with the default
``ExperimentSpec()``.
"""

import sys

from groupmove.bench import ExperimentSpec, check_trends, emit_report, run_experiment

out_dir = sys.argv[1] if len(sys.argv) > 1 else "bench-out"
spec = ExperimentSpec(gdrs=(0.0, 0.1, 0.5, 1.0), group_sizes=(1, 4, 16), batch_periods=(50, 100), repetitions=2)
rows = run_experiment(spec)

print(f"{'gdr':>4} {'n':>3} {'D':>4} {'batch':>7} {'online':>7} {'online+p':>8} {'ratio':>6} {'hit':>5}")
for r in rows:
    print(f"{r.gdr:4g} {r.n:3d} {r.D:4d} {r.batch_bytes:7.0f} {r.online_bytes:7.0f} "
          f"{r.online_pred_bytes:8.0f} {r.ratio:6.2f} {r.hit_rate:5.2f}")

# group-size economies are judged on identically moving groups (gdr=0):
# with any dispersion a single stray member forces a whole column verbatim
for check in check_trends(rows, identical_gdr=0.0):
    print(("PASS " if check.ok else "FAIL ") + check.name)
for path in emit_report(rows, out_dir):
    print("wrote", path)
