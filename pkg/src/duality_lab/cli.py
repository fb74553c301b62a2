"""Command-line front end.

    duality-lab verify   [--config PATH] [--pair TAG --params k=v ... --nmax N] [--out PATH]
    duality-lab simulate (--pair TAG | --process NAME) --x0 ... [--n0 ...] --t T [...]
    duality-lab catalog
    duality-lab report PATH

Flags override values from the config file for every task that has the field.
The exit status is 0 exactly when the report has no failed record.
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .campaign import (
    CampaignError,
    Report,
    build_campaign,
    execute,
    load_campaign,
    parse_param_flags,
)
from .duality import list_catalog
from .semigroup import write_samples_csv


def _config_list(text: str) -> list[str]:
    items = [v.strip() for v in text.split(",") if v.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list such as 1,0")
    return items


def _numbers(items: list[str]) -> list:
    out = []
    for v in items:
        if "/" in v or v.lstrip("-").isdigit():
            out.append(v if "/" in v else int(v))
        else:
            out.append(float(v))
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="campaign JSON file")
    p.add_argument("--pair", metavar="TAG", help="duality pair, e.g. irw-irw")
    p.add_argument("--params", metavar="K=V", action="append", default=[], help="exact parameter, repeatable")
    p.add_argument("--graph", metavar="PATH", help="edge-list file, or path:N / complete:N")
    p.add_argument("--out", metavar="PATH", help="write the JSON report here")
    p.add_argument("--csv", metavar="PATH", help="write sampled paths here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="duality-lab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run exact verification tasks")
    _common(v)
    v.add_argument("--nmax", type=int, metavar="INT", help="largest index checked")

    s = sub.add_parser("simulate", help="semigroup duality check or path simulation")
    _common(s)
    s.add_argument("--process", metavar="NAME", help="simulate paths of this process instead of a pair check")
    s.add_argument("--x0", type=_config_list, metavar="LIST", help="initial configuration, e.g. 1,0")
    s.add_argument("--n0", type=_config_list, metavar="LIST", help="dual configuration, e.g. 1,0")
    s.add_argument("--t", type=float, metavar="REAL")
    s.add_argument("--dt", type=float, metavar="REAL", help="diffusion step (default 1e-3 t)")
    s.add_argument("--replicas", type=int, metavar="INT")
    s.add_argument("--trials", type=int, metavar="INT")
    s.add_argument("--seed", type=int, metavar="INT")

    sub.add_parser("catalog", help="list the duality pairs")

    r = sub.add_parser("report", help="summarize a saved report")
    r.add_argument("path", metavar="PATH")
    return parser


def _overrides(args) -> dict:
    out = {"params": parse_param_flags(args.params)} if args.params else {}
    for key in ("pair", "graph", "out", "csv", "nmax", "t", "dt", "replicas", "seed", "trials"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    for key in ("x0", "n0"):
        value = getattr(args, key, None)
        if value is not None:
            out[key] = _numbers(value)
    return out


def _single_task(args) -> dict:
    """A one-task campaign assembled from flags alone."""
    if args.command == "verify":
        task = {"kind": "verify-generator-duality", "pair": args.pair}
    elif args.process:
        task = {"kind": "simulate", "process": args.process}
    else:
        task = {"kind": "semigroup-check", "pair": args.pair}
    return {"tasks": [task]}


def _run(args) -> int:
    overrides = _overrides(args)
    if args.config is None and (getattr(args, "pair", None) or getattr(args, "process", None)):
        if args.command == "simulate" and args.process:
            overrides.pop("pair", None)
            for key in ("n0", "trials"):
                overrides.pop(key, None)
        campaign = build_campaign(_single_task(args), _restrict(args, overrides), source="command line")
    else:
        campaign = load_campaign(args.config, overrides)
    report, rows = execute(campaign)
    if campaign.report_path:
        report.write(campaign.report_path)
    if campaign.csv_path:
        write_samples_csv(campaign.csv_path, rows)
    for rec in report.records:
        if not rec.get("passed"):
            print("FAIL", _describe(rec))
    s = report.summary
    print(f"passed={s['passed']} failed={s['failed']}")
    return report.exit_status


def _restrict(args, overrides: dict) -> dict:
    # a flag-built task only accepts the fields of its own kind
    from .campaign import FIELDS

    kind = _single_task(args)["tasks"][0]["kind"]
    keep = set(FIELDS[kind]) | {"out", "csv", "params"}
    return {k: v for k, v in overrides.items() if k in keep}


def _describe(rec: dict) -> str:
    keys = ("kind", "pair", "family", "process", "check", "indices", "parameters", "trial", "difference")
    return " ".join(f"{k}={rec[k]}" for k in keys if k in rec)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "catalog":
        print(list_catalog())
        return 0
    if args.command == "report":
        try:
            report = Report.read(args.path)
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: cannot read report {args.path}: {exc}", file=sys.stderr)
            return 2
        for rec in report.records:
            if not rec.get("passed"):
                print("FAIL", _describe(rec))
        s = report.summary
        print(f"tool_version={report.tool_version} timestamp={report.timestamp}")
        print(f"passed={s['passed']} failed={s['failed']}")
        return report.exit_status
    try:
        return _run(args)
    except CampaignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
