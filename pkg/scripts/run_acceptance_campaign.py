"""Run the shipped acceptance campaign through the campaign runner and summarize it.

DUALITY_LAB_WORKERS sets the process pool size. The full stochastic part
takes several minutes; pass --quick to cut replicas and trials.
"""
import argparse
import time
from collections import Counter

from duality_lab.campaign import default_config_path, run_campaign


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="acceptance_report.json")
    ap.add_argument("--quick", action="store_true", help="1000 replicas, 3 trials")
    args = ap.parse_args()
    overrides = {"out": args.out}
    if args.quick:
        overrides.update(replicas=1000, trials=3)
    start = time.perf_counter()
    report = run_campaign(default_config_path(), overrides)
    per_kind = Counter((r["kind"], r["passed"]) for r in report.records)
    for (kind, ok), n in sorted(per_kind.items()):
        print(f"{kind:<20} {'passed' if ok else 'failed'} {n}")
    print(f"{report.summary} in {time.perf_counter() - start:.1f}s, report at {args.out}")
    raise SystemExit(report.exit_status)


if __name__ == "__main__":
    main()
