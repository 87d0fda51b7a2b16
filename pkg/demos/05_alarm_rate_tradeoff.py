"""The cost of robustness: bound size versus target false-alarm rate.

Tuning the robust detector for fewer false alarms raises its threshold
(alpha = p / rate) and the matching noise truncation (w_bar = n / rate),
which hands a stealthy attacker more admissible input and inflates the
certified reachable set.  The sweep quantifies that trade-off, and a
second sweep with doubled process-noise covariance shows the bound also
tracking the physical noise level.
"""

import numpy as np

import drsentinel as ds

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
rates = [0.02, 0.05, 0.1, 0.2, 0.4]
grid = np.round(np.arange(0.44, 0.99, 0.04), 10)

sweep = ds.trace_tradeoff_sweep(sys, rm, rates, grid=grid)

doubled = ds.LtiSystem(A=sys.A, B=sys.B, C=sys.C, K=sys.K, L=sys.L,
                       Sigma_w=2.0 * np.asarray(sys.Sigma_w), Sigma_v=sys.Sigma_v)
sweep2 = ds.trace_tradeoff_sweep(doubled, ds.residual_model(doubled), rates, grid=grid)

print("certified reachable-set size under robust tuning")
print(f"{'target rate':>12} {'alpha':>7} {'w_bar':>7} {'trace(Q_x)':>11} {'trace, 2x noise':>16}")
for pt, pt2 in zip(sweep, sweep2):
    print(f"{pt.target_rate:12.2f} {pt.alpha:7.1f} {pt.w_bar:7.1f} "
          f"{pt.trace_qx:11.3f} {pt2.trace_qx:16.3f}")

print()
print("halving the tolerated false-alarm rate roughly doubles the certified")
print("attack impact: robustness against unknown noise distributions is paid")
print("for in reachable-set volume, so the target rate is a genuine design")
print("knob rather than something to minimize outright.")
