import numpy as np
import pytest

import drsentinel as ds

# Two-state benchmark plant used throughout: stable dynamics, two sensors,
# stabilizing state feedback, and an observer gain close to the optimal one.
BENCH = {
    "A": [[0.84, 0.23], [-0.47, 0.12]],
    "B": [[0.07, -0.32], [0.23, 0.58]],
    "C": [[1.0, 0.0], [2.0, 1.0]],
    "K": [[1.404, -1.402], [1.842, 1.008]],
    "L": [[0.0276, 0.0448], [-0.01998, -0.0290]],
    "Sigma_w": [[0.045, -0.011], [-0.011, 0.02]],
    "Sigma_v": [[2.0, 0.0], [0.0, 2.0]],
}


@pytest.fixture(scope="session")
def bench():
    return ds.LtiSystem(**{k: np.array(v) for k, v in BENCH.items()})


@pytest.fixture(scope="session")
def bench_rm(bench):
    return ds.residual_model(bench)


@pytest.fixture(scope="session")
def bench_joint(bench, bench_rm):
    return ds.joint_system(bench, bench_rm)
