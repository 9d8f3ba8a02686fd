"""Least-squares floor for the crosstalk scenario.

Fits the 15 couplings and 4 decay rates directly to noisy data with the exact
Pauli-basis model, starting from the truth. The result is the best any
estimator can expect from that dataset, so it bounds what the network fit can
reach at the same noise level.

    python3 tools/crosstalk_floor.py --draws 12 --sigma 0.02 --n-data 50
"""

import argparse

import numpy as np
from scipy.optimize import least_squares

import pinnverse as pv


def fit_direct(data, truth, times):
    free = np.arange(1, 16)

    def params(x):
        p = pv.ParameterSet(2, 4)
        J = np.zeros(16)
        J[free] = x[:15]
        p.J = J
        p.gamma = np.abs(x[15:])
        return p

    def residual(x):
        return (pv.evolve_pauli(params(x), times).values - data.values).ravel()

    x0 = np.concatenate([np.asarray(truth.J)[free], np.asarray(truth.gamma)])
    return params(least_squares(residual, x0, x_scale="jac").x)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=12)
    ap.add_argument("--sigma", type=float, default=0.02)
    ap.add_argument("--n-data", type=int, default=50)
    ap.add_argument("--dense", type=int, default=200)
    args = ap.parse_args()

    times = pv.uniform_grid(1.0, args.n_data)
    dense = pv.uniform_grid(1.0, args.dense)
    print("draw  max_gamma_err  mean_gamma_err  reconstruction")
    for seed in range(1, args.draws + 1):
        truth = pv.sample_parameters(2, seed)
        data = pv.add_noise(pv.evolve_pauli(truth, times), args.sigma, seed + 1000)
        best = fit_direct(data, truth, times)
        g0 = np.asarray(truth.gamma)
        err = np.abs(np.asarray(best.gamma) - g0) / g0
        clean = pv.evolve_pauli(truth, dense).values
        rec = pv.evolve_pauli(best, dense).values
        recon = np.abs(rec - clean).sum() / np.abs(clean).sum()
        print(f"{seed:4d}  {err.max():13.4f}  {err.mean():14.4f}  {recon:14.4f}")


if __name__ == "__main__":
    main()
