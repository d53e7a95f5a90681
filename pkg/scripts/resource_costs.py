"""Expected Bell-pair costs of the built-in strategies, analytic and simulated."""

import argparse

from paritymem.resources import builtin_strategies, evaluate_strategy, simulate_factory


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()

    print(f"{'strategy':<12}{'analytic':>10}{'reference':>11}{'gap':>8}{'simulated':>12}{'+/-':>8}")
    for name, s in builtin_strategies().items():
        rep = evaluate_strategy(s)
        sim = simulate_factory(s, args.runs, args.seed, workers=args.workers)
        gap = f"{rep.relative_gap:+.1%}" if rep.relative_gap is not None else ""
        print(f"{name:<12}{rep.expected_bell_pairs:>10.2f}{rep.reference_cost or 0:>11.1f}{gap:>8}"
              f"{sim.expected_bell_pairs:>12.2f}{sim.std_error:>8.2f}")


if __name__ == "__main__":
    main()
