"""Search the KAP-HY protocol model for the unknown-key-share attack and
print the attacking interleaving with its witnesses."""
import argparse
import time
from pathlib import Path

from keysub.cli import attack, load_theory
from keysub.protocol import compile as compile_protocol
from keysub.solver import SolverConfig, solve
from keysub.syntax import parse

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--protocol", default=str(SCENARIOS / "kap_hy.proto"))
    p.add_argument("--all", action="store_true", help="solve every interleaving, not just up to the first attack")
    args = p.parse_args()
    spec = parse(Path(args.protocol).read_text())
    theory = load_theory(spec.theory)
    started = time.perf_counter()
    if args.all:
        for run in compile_protocol(spec):
            result = solve(run.system, theory)
            print(f"{' '.join(run.interleaving):<32} {result.verdict:<6} {result.nodes:>6} nodes")
    report = attack(spec, theory, SolverConfig())
    print(report.text)
    print(f"# {time.perf_counter() - started:.2f}s")
    return 0 if report.verdict == "SAT" else 1


if __name__ == "__main__":
    raise SystemExit(main())
