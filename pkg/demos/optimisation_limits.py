"""Tempering a Langevin chain towards optimisation.

Replacing f by f/tau and letting tau -> 0 turns LMC into gradient descent and
the Ozaki chain into Newton's method.  This script runs both at several
temperatures on a quadratic and on a logistic-ridge potential.
"""

import numpy as np

from langevin_kit import DiagonalGaussian, RidgeLogistic
from langevin_kit.samplers import tau_scaled_run


def main():
    rng = np.random.default_rng(3)
    quad = DiagonalGaussian([1.0, 3.0, 10.0], mu=[1.0, -2.0, 0.5])
    theta0 = np.array([4.0, 4.0, 4.0])
    print("quadratic, distance to the minimiser after K steps")
    for tau in (1.0, 1e-2, 1e-4, 0.0):
        gd = tau_scaled_run(quad, tau, "lmc", theta0, K=50, seed=1).theta
        nt = tau_scaled_run(quad, tau, "lmco", theta0, h=1.0, K=1, seed=1).theta
        print(
            f"  tau={tau:<7g} LMC (K=50): {np.linalg.norm(gd - quad.mean):.3e}   "
            f"Ozaki (K=1): {np.linalg.norm(nt - quad.mean):.3e}"
        )

    X = rng.normal(size=(200, 3))
    y = (X @ np.array([1.0, -1.0, 0.5]) + 0.3 * rng.normal(size=200) > 0).astype(float)
    ridge = RidgeLogistic(X, y, lam=1.0)
    start = np.zeros(3)
    reference = tau_scaled_run(ridge, 0.0, "lmco", start, K=20).theta
    print("\nlogistic ridge, Newton iterates (tau = 0)")
    for K in range(1, 6):
        theta = tau_scaled_run(ridge, 0.0, "lmco", start, K=K).theta
        print(f"  K={K}: |theta_K - theta*| = {np.linalg.norm(theta - reference):.3e}")


if __name__ == "__main__":
    main()
