"""Iteration budgets of the three constant/decaying-step guarantees.

For m=10, M=20 and a start at distance W2_0 = p + p/m, prints the number of
iterations each guarantee needs to certify W2 <= eps, and the per-eps
averages of the budget ratios.

    python3 demos/iteration_budgets.py            # coarse grid, a few seconds
    python3 demos/iteration_budgets.py --full     # p = 25..1000, ~20 s
"""

import argparse

from langevin_kit import figure1_summary, figure1_table


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--full", action="store_true", help="use p = 25, 50, ..., 1000")
    args = parser.parse_args()
    p_grid = range(25, 1001, 25) if args.full else (25, 100, 400, 1000)
    rows = figure1_table(10.0, 20.0, (0.001, 0.005, 0.02), p_grid)

    print(f"{'eps':>7} {'p':>5} {'K_thm2':>10} {'K_thm1':>10} {'K_dm':>10}")
    for r in rows:
        print(f"{r.epsilon:7.3f} {r.p:5d} {r.K_thm2:10d} {r.K_thm1:10d} {r.K_dm:10d}")
    print()
    for eps, s in figure1_summary(rows).items():
        print(
            f"eps={eps}: K_dm/K_thm2 = {s['mean_ratio_dm_thm2']:.2f}, "
            f"K_dm/K_thm1 = {s['mean_ratio_dm_thm1']:.2f}, ordered = {s['ordered']}"
        )


if __name__ == "__main__":
    main()
