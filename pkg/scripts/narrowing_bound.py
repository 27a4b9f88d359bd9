"""Longest basic narrowing derivation versus term size on random terms."""
import argparse
import time

from keysub.experiments import THEORIES, NarrowingBoundConfig, narrowing_bound


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--terms", type=int, default=1000)
    p.add_argument("--max-size", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    config = NarrowingBoundConfig(args.terms, args.max_size, args.seed)
    bad = 0
    for name in THEORIES:
        started = time.perf_counter()
        report = narrowing_bound(name, config)
        took = time.perf_counter() - started
        print(f"{name}: {report.terms} terms, longest derivation {report.longest}, "
              f"violations {len(report.violations)} ({took:.2f}s)")
        for t, n in report.violations[:5]:
            print(f"  {t}: length {n}")
        bad += len(report.violations)
    return 1 if bad else 0


if __name__ == "__main__":
    raise SystemExit(main())
