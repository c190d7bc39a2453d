"""Diffusion in a finite-horizon periodic Lorentz gas.

Samples initial conditions from the billiard-invariant measure, follows each
trajectory for M collisions and tracks the integer cell index. The
covariance of the displacement grows linearly, and its slope estimates the
diffusion matrix. In the tube the walk is one-dimensional and recurrent,
so the fraction of trajectories that have returned to the start cell
keeps creeping towards one.
"""

import numpy as np

from tailatlas.lorentz_gas import preset, run_ensemble

square = run_ensemble(preset("finite-horizon-square"), N=2000, M=500, seed=1)
fit = square.covariance_trace_fit()
print("square: drift per collision", np.round(square.drift_mean, 4), "+/-", np.round(square.drift_se, 4))
print(f"square: trace Cov(X_n) ~ {fit['slope']:.3f} n  (R^2 {fit['r2']:.4f})")
print("square: covariance at n=M\n", np.round(np.asarray(square.covariance[-1]), 2))

tube = run_ensemble(preset("finite-horizon-tube"), N=1000, M=2000, seed=2, checkpoints=[10, 100, 1000, 2000])
for n, f in zip(tube.checkpoints, tube.return_fraction):
    print(f"tube: returned to start cell by collision {n:>4}: {f:.3f}")
