"""Threshold efficiency as a function of the largest code size allowed."""

import argparse

from paritymem.analytic import CodeParams, ThresholdUnreachable, passive_crossover, threshold_search


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, nargs="+", default=[4, 8, 16, 24, 32, 40])
    ap.add_argument("--q-max", type=int, default=None)
    ap.add_argument("--target", type=float, default=0.99)
    args = ap.parse_args()

    print("n_max,eta_threshold,best_n,best_q")
    for n_max in args.n_max:
        try:
            r = threshold_search(n_max, args.q_max, args.target)
            print(f"{n_max},{r.eta_threshold:.6f},{r.best_n},{r.best_q}")
        except ThresholdUnreachable:
            print(f"{n_max},,,")
    cross = passive_crossover(CodeParams(5, 2))
    print(f"# crossover (n=5, q=2, baseline {cross.baseline}): {cross.eta_cross:.5f}")


if __name__ == "__main__":
    main()
