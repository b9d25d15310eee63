"""A short training run on the two-mode 1-D benchmark.

Run with ``python demos/gan_benchmark.py [steps] [out_dir]``; the default of
300 steps takes well under a minute. ``boltgan train`` does the same with a
config file.
"""
import sys
from pathlib import Path

from boltgan import gan, svg
from boltgan.problems import GaussianMixture

steps = int(sys.argv[1]) if len(sys.argv) > 1 else 300
out = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("demo-out")

target = GaussianMixture([0.5, 0.5], [-2.0, 2.0], [0.25, 0.25])
config = gan.GanConfig(steps=steps, log_interval=max(steps // 10, 1), seed=0)
result = gan.train(target, config)
hist = result.history

print(f"{'step':>5} {'L_BOLT':>8} {'penalty':>8} {'grad p50':>8} {'W1':>7} {'TV':>6}")
for r in hist.records:
    print(f"{r['step']:>5} {r['l_bolt']:8.4f} {r['penalty']:8.4f} {r['gn_p50']:8.3f} {r['w1']:7.3f} {r['tv_hist']:6.3f}")

diag = gan.diagnostics(hist)
print(f"\npenalty/critic ratio {diag['ratio']:.3g} ({diag['ratio_flag']}), diverged: {diag['diverged']}")

out.mkdir(parents=True, exist_ok=True)
hist.to_csv(out / "history.csv")
svg.write_line_chart(out / "w1.svg", hist.column("step"), {"W1": hist.column("w1")}, title="W1 to held-out data")
print(f"wrote {out / 'history.csv'} and {out / 'w1.svg'}")
