"""Compare bounded deducibility under original, saturated and printed rule
sets, with and without the rewrite theory."""
import argparse
import time

from keysub.experiments import THEORIES, ClosureConfig, closure_agreement

PAIRS = (
    ("original", "saturated"),
    ("saturated", "saturated/empty"),
    ("saturated", "printed"),
    ("saturated/empty", "printed/empty"),
)


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-terms", type=int, default=4)
    p.add_argument("--max-size", type=int, default=6)
    args = p.parse_args()
    config = ClosureConfig(args.samples, args.max_terms, args.max_size, args.max_size, args.seed)
    bad = 0
    for name in THEORIES:
        started = time.perf_counter()
        reports = closure_agreement(name, PAIRS, config)
        took = time.perf_counter() - started
        print(f"{name} ({took:.2f}s)")
        for r in reports:
            left, right = r.comparison
            print(f"  {left:>16} vs {right:<16} {r.samples} sets, {r.goals} goals, "
                  f"{len(r.discrepancies)} discrepancies")
            for knowledge, goal, a, b in r.discrepancies[:3]:
                print(f"    E = {{{', '.join(map(str, knowledge))}}}  goal {goal}: {a} vs {b}")
            bad += len(r.discrepancies)
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
