"""Certified outer bounds on everything a stealthy attacker can reach.

For each detector tuning, the stealth budget plus the truncated process
noise define the admissible inputs of the closed-loop joint dynamics; a
quadratic invariant-set argument, solved as a small SDP per decay
constant, yields the minimum-trace ellipsoid that provably contains every
reachable state.  Empirical attack clouds land inside their bounds, and
the robust tuning's larger threshold shows up as a strictly larger
certified set.

Writes reachable_sets.png and the raw points/boundaries as CSV next to it.
"""

import time
from pathlib import Path

import numpy as np

import drsentinel as ds

SEED = 3
OUT = Path(__file__).resolve().parent / "output"
OUT.mkdir(exist_ok=True)

sys = ds.LtiSystem(
    A=[[0.84, 0.23], [-0.47, 0.12]],
    B=[[0.07, -0.32], [0.23, 0.58]],
    C=[[1.0, 0.0], [2.0, 1.0]],
    K=[[1.404, -1.402], [1.842, 1.008]],
    L=[[0.0276, 0.0448], [-0.01998, -0.0290]],
    Sigma_w=[[0.045, -0.011], [-0.011, 0.02]],
    Sigma_v=[[2.0, 0.0], [0.0, 2.0]],
)
rm = ds.residual_model(sys)
joint = ds.joint_system(sys, rm)
rate = 0.05
w_bar = ds.noise_truncation(sys.n, rate)
grid = np.round(np.arange(0.44, 0.99, 0.02), 10)

results = {}
for label, alpha in (("chi2", ds.tune_chi_squared(sys.p, rate)),
                     ("robust", ds.tune_dr(sys.p, rate))):
    t0 = time.time()
    bound = ds.min_trace_ellipsoid(joint, sys.Sigma_w, alpha, w_bar, grid=grid)
    cloud = ds.reachable_cloud(joint, sys.Sigma_w, alpha, w_bar,
                               trajectories=3_000, horizon=200, seed=SEED)
    margin = float(bound.Q_x.margin(cloud).max())
    results[label] = (alpha, bound, cloud, margin)
    print(f"{label}: alpha={alpha:.2f}  best a={bound.a}  trace={bound.trace_Qx:.3f}  "
          f"cloud max margin={margin:.6f}  ({time.time() - t0:.1f}s)")
    np.savetxt(OUT / f"cloud_{label}.csv", cloud[::50], delimiter=",",
               header="x1,x2", comments="")
    np.savetxt(OUT / f"ellipse_{label}.csv", bound.Q_x.boundary_points(256),
               delimiter=",", header="x1,x2", comments="")

ratio = results["robust"][1].trace_Qx / results["chi2"][1].trace_Qx
print(f"\nrobust/chi2 certified-size ratio (trace): {ratio:.2f}")

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

fig, ax = plt.subplots(figsize=(7, 7))
colors = {"chi2": ("tab:red", "lightcoral"), "robust": ("tab:blue", "lightsteelblue")}
for label, (alpha, bound, cloud, _) in results.items():
    edge, fill = colors[label]
    ax.scatter(cloud[::20, 0], cloud[::20, 1], s=2, alpha=0.25, color=fill,
               label=f"{label} attack cloud")
    poly = bound.Q_x.boundary_points(256)
    ax.plot(np.append(poly[:, 0], poly[0, 0]), np.append(poly[:, 1], poly[0, 1]),
            color=edge, lw=2, label=f"{label} certified bound (trace {bound.trace_Qx:.1f})")
ax.set_xlabel("$x_1$")
ax.set_ylabel("$x_2$")
ax.set_title("states reachable by zero-alarm attacks, with certified outer bounds")
ax.legend(loc="upper right", fontsize=9)
ax.set_aspect("equal")
fig.tight_layout()
fig.savefig(OUT / "reachable_sets.png", dpi=130)
print(f"wrote {OUT / 'reachable_sets.png'} and four CSV files")
