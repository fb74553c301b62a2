"""Verification campaigns: config loading, task expansion, execution and reports.

Precedence for every task field is: command-line flag, then the task's own
value, then the campaign ``defaults`` block, then the built-in default.
"""
from __future__ import annotations

import datetime as _dt
import itertools
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from . import __version__
from .duality import gauge_rescale, make_pair, verify_generator_duality
from .exactmath import as_rational, rational_str
from .orthopoly import (
    closed_norm,
    generate,
    hypergeometric_residual,
    make_family,
    orthogonality_check,
    raising_residual,
)
from .processes import BEP, BMP, IRW, KMP, SEP, SIP, DualKMP, Graph, detailed_balance_residual
from .semigroup import default_dt, diffusion_simulate, gillespie_simulate, mc_duality_check

KINDS = (
    "verify-orthogonality",
    "verify-generator-duality",
    "verify-detailed-balance",
    "semigroup-check",
    "simulate",
)

FAMILY_PARAMS = {
    "charlier": ("lambda",),
    "krawtchouk": ("two_j", "p"),
    "meixner": ("two_k", "p"),
    "hermite": (),
    "laguerre": ("two_k",),
}

# process name -> (factory, structural parameter, extra parameters)
PROCESSES = {
    "sep": (SEP, "two_j"),
    "sip": (SIP, "two_k"),
    "irw": (IRW, None),
    "bmp": (BMP, None),
    "bep": (BEP, "two_k"),
    "kmp": (KMP, "two_k"),
    "dualkmp": (DualKMP, "two_k"),
}

# fields each task kind understands, with built-in defaults (None = required)
FIELDS: dict[str, dict[str, Any]] = {
    "verify-orthogonality": {"family": None, "params": {}, "nmax": 10, "structural": True},
    "verify-generator-duality": {"pair": None, "params": {}, "nmax": 8, "gauge": None},
    "verify-detailed-balance": {"process": None, "params": {}, "graph": "path:2", "total": None},
    "semigroup-check": {
        "pair": None,
        "params": {},
        "graph": "path:2",
        "x0": None,
        "n0": None,
        "t": None,
        "replicas": 10_000,
        "seed": 0,
        "trials": 1,
        "dt": None,
        "forward_method": "auto",
        "dual_method": "auto",
        "tol": 1e-8,
    },
    "simulate": {
        "process": None,
        "params": {},
        "graph": "path:2",
        "x0": None,
        "t": None,
        "replicas": 1,
        "seed": 0,
        "dt": None,
    },
}

CONSERVATION_TOL = 1e-12


class CampaignError(ValueError):
    """A campaign config that does not validate; the message names the field."""


def _schema() -> dict:
    return json.loads(resources.files("duality_lab").joinpath("data/campaign.schema.json").read_text())


def default_config_path() -> Path:
    return Path(str(resources.files("duality_lab").joinpath("data/acceptance.json")))


def _jsonable(v):
    if isinstance(v, Fraction):
        return rational_str(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def parse_param_flags(items) -> dict[str, Fraction]:
    """['p=1/3', 'two_j=2'] -> {'p': Fraction(1, 3), 'two_j': 2}."""
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise CampaignError(f"--params {item!r}: expected key=value")
        try:
            out[key.strip()] = as_rational(value.strip())
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise CampaignError(f"--params {key.strip()}: {exc}") from None
    return out


def parse_graph(spec: str) -> Graph:
    """'path:N', 'complete:N', or a path to an edge-list file."""
    kind, sep, size = spec.partition(":")
    if sep and kind in ("path", "complete") and size.strip().isdigit():
        n = int(size)
        return Graph.path(n) if kind == "path" else Graph.complete(n)
    return Graph.read(spec)


# ---------------------------------------------------------------------------
# config loading


@dataclass
class Job:
    """One fully specified unit of work after grid expansion."""

    task: int
    kind: str
    fields: dict


@dataclass
class Campaign:
    jobs: list[Job]
    report_path: str | None = None
    csv_path: str | None = None
    source: str | None = None


def load_campaign(config_path=None, overrides: dict | None = None) -> Campaign:
    """Read, validate and expand a campaign. ``None`` loads the shipped acceptance grid."""
    path = Path(config_path) if config_path is not None else default_config_path()
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise CampaignError(f"config: file {str(path)!r} does not exist") from None
    except json.JSONDecodeError as exc:
        raise CampaignError(f"config: not valid JSON ({exc})") from None
    return build_campaign(raw, overrides, source=str(path))


def build_campaign(raw: dict, overrides: dict | None = None, source: str | None = None) -> Campaign:
    try:
        jsonschema.validate(raw, _schema())
    except jsonschema.ValidationError as exc:
        raise CampaignError(_schema_message(exc)) from None
    overrides = dict(overrides or {})
    output = raw.get("output", {})
    defaults = raw.get("defaults", {})
    jobs: list[Job] = []
    for i, task in enumerate(raw["tasks"]):
        kind = task["kind"]
        allowed = FIELDS[kind]
        for key in task:
            if key != "kind" and key not in allowed:
                raise CampaignError(f"tasks[{i}].{key}: not a field of {kind} tasks")
        merged = {}
        for key, builtin in allowed.items():
            value = builtin
            if key in defaults:
                value = defaults[key]
            if key in task:
                value = task[key]
            if key == "params":
                value = {**(defaults.get("params", {}) if "params" not in task else {}), **value}
                value = {**value, **overrides.get("params", {})}
            elif key in overrides and overrides[key] is not None:
                value = overrides[key]
            if value is None and builtin is None and key not in ("gauge", "dt", "total"):
                raise CampaignError(f"tasks[{i}].{key}: required for {kind} tasks")
            merged[key] = value
        if kind == "verify-detailed-balance" and merged["total"] is None:
            raise CampaignError(f"tasks[{i}].total: required for {kind} tasks")
        for fields in _expand(i, merged):
            try:
                _validate(kind, fields)
            except (ValueError, TypeError, KeyError, ZeroDivisionError) as exc:
                raise CampaignError(f"tasks[{i}].{_field_of(exc, fields)}: {_reason(exc)}") from None
            if kind == "semigroup-check":
                for trial in range(fields["trials"]):
                    jobs.append(Job(i, kind, {**fields, "trial": trial}))
            else:
                jobs.append(Job(i, kind, fields))
    return Campaign(
        jobs,
        report_path=overrides.get("out") or output.get("report"),
        csv_path=overrides.get("csv") or output.get("csv"),
        source=source,
    )


def _schema_message(exc: jsonschema.ValidationError) -> str:
    where = ""
    for part in exc.absolute_path:
        where += f"[{part}]" if isinstance(part, int) else (f".{part}" if where else part)
    where = where or "config"
    parent = list(exc.absolute_path)[-2:-1]
    if parent == ["params"] or where.endswith(".gauge") or "params" in where.split(".")[-2:-1]:
        return f"{where}: must be an exact rational, an integer or a 'num/den' string (got {exc.instance!r})"
    return f"{where}: {exc.message}"


def _field_of(exc, fields: dict) -> str:
    if hasattr(exc, "field"):
        return exc.field
    msg = _reason(exc)
    if msg.startswith("unknown pair"):
        return "pair"
    first = msg.split(" ", 1)[0]
    if first in fields.get("params", {}):
        return f"params.{first}"
    return "params"


def _reason(exc) -> str:
    return str(exc.args[0]) if exc.args else exc.__class__.__name__


def _expand(i: int, merged: dict):
    """Cartesian product over list-valued params, gauge and total."""
    params = {}
    for k, v in merged["params"].items():
        vals = v if isinstance(v, list) else [v]
        try:
            params[k] = [as_rational(x) for x in vals]
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise CampaignError(f"tasks[{i}].params.{k}: {exc}") from None
    axes = [params[k] for k in params]
    extra = {}
    for key in ("gauge", "total"):
        if merged.get(key) is not None:
            v = merged[key]
            extra[key] = v if isinstance(v, list) else [v]
    for combo in itertools.product(*axes, *extra.values()):
        fields = dict(merged)
        fields["params"] = dict(zip(params, combo[: len(params)]))
        for key, value in zip(extra, combo[len(params) :]):
            fields[key] = as_rational(value) if key == "gauge" else int(value)
        yield fields


class _FieldError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(message)
        self.field = field_name


def _process(name: str, params: dict):
    key = name.lower().replace("-", "").replace("_", "")
    if key not in PROCESSES:
        raise _FieldError("process", f"unknown process {name!r}; expected one of {', '.join(PROCESSES)}")
    factory, pname = PROCESSES[key]
    if pname is None:
        return factory()
    if pname not in params:
        raise _FieldError("params", f"process {name} needs parameter {pname}")
    return factory(params[pname])


def _check_keys(params: dict, expected, what: str) -> None:
    missing = [k for k in expected if k not in params]
    extra = sorted(set(params) - set(expected))
    if missing:
        raise _FieldError("params", f"{what} needs parameter(s): {', '.join(missing)}")
    if extra:
        raise _FieldError("params", f"{what} does not take parameter(s): {', '.join(extra)}")


def _validate(kind: str, f: dict) -> None:
    params = f["params"]
    if kind == "verify-orthogonality":
        name = f["family"].lower()
        if name not in FAMILY_PARAMS:
            raise _FieldError("family", f"unknown family {f['family']!r}")
        _check_keys(params, FAMILY_PARAMS[name], f"family {name}")
        make_family(name, **params)
        return
    if kind in ("verify-generator-duality", "semigroup-check"):
        make_pair(f["pair"], **params)
        if f.get("gauge") is not None and f["gauge"] == 0:
            raise _FieldError("gauge", "gauge must be nonzero")
    if kind == "verify-detailed-balance":
        proc = _process(f["process"], params)
        if proc.kind not in ("SEP", "SIP", "IRW"):
            raise _FieldError("process", "detailed balance covers SEP, SIP and IRW")
        expected = {"SEP": ("two_j", "p"), "SIP": ("two_k", "p"), "IRW": ("lambda",)}[proc.kind]
        _check_keys(params, expected, f"process {proc.kind}")
        param = params["lambda"] if proc.kind == "IRW" else params["p"]
        if proc.kind != "IRW" and not 0 < param < 1:
            raise _FieldError("params", "p must lie in (0,1)")
        if proc.kind == "IRW" and param <= 0:
            raise _FieldError("params", "lambda must be positive")
    if kind == "simulate":
        proc = _process(f["process"], params)
        pname = PROCESSES[proc.kind.lower()][1]
        _check_keys(params, (pname,) if pname else (), f"process {proc.kind}")
    if kind in ("verify-detailed-balance", "semigroup-check", "simulate"):
        try:
            g = parse_graph(f["graph"])
        except (OSError, ValueError) as exc:
            raise _FieldError("graph", str(exc)) from None
        for key in ("x0", "n0"):
            if f.get(key) is not None and len(f[key]) != g.n_vertices:
                raise _FieldError(key, f"needs {g.n_vertices} entries, one per vertex")


# ---------------------------------------------------------------------------
# execution (module-level so jobs can be shipped to worker processes)


def _family_record(extra: dict, passed: bool, **rest) -> dict:
    return {**extra, **rest, "passed": passed}


def _poly_terms(p) -> dict:
    return {str(k): rational_str(c) for k, c in enumerate(p.coeffs) if c != 0}


def run_job(job: Job) -> tuple[list[dict], list[tuple]]:
    """Execute one job; returns (records, csv rows)."""
    f = job.fields
    head = {"task": job.task, "kind": job.kind}
    if job.kind == "verify-orthogonality":
        return _run_orthogonality(head, f), []
    if job.kind == "verify-generator-duality":
        return _run_generator_duality(head, f), []
    if job.kind == "verify-detailed-balance":
        proc = _process(f["process"], f["params"])
        param = f["params"]["lambda"] if proc.kind == "IRW" else f["params"]["p"]
        worst = detailed_balance_residual(proc, parse_graph(f["graph"]), f["total"], param)
        rec = {
            **head,
            "process": proc.label(),
            "parameters": _jsonable(f["params"]),
            "graph": f["graph"],
            "total": f["total"],
            "residual": rational_str(worst),
            "passed": worst == 0,
        }
        return [rec], []
    if job.kind == "semigroup-check":
        return [_run_semigroup(head, f)], []
    return _run_simulate(head, f)


def _run_orthogonality(head: dict, f: dict) -> list[dict]:
    fam = make_family(f["family"], **f["params"])
    cap = fam.max_degree()
    nmax = f["nmax"] if cap is None else min(f["nmax"], cap)
    seq = generate(fam, nmax + 1 if cap is None or nmax < cap else nmax)
    meas = fam.measure()
    base = {**head, "family": fam.name, "parameters": _jsonable(fam.params())}
    out = []
    for n in range(nmax + 1):
        for m in range(nmax + 1):
            value = orthogonality_check(seq, meas, n, m)
            expected = closed_norm(fam, n) if n == m else Fraction(0)
            out.append(
                _family_record(
                    base,
                    value == expected,
                    check="orthogonality",
                    indices=[n, m],
                    value=rational_str(value),
                    expected=rational_str(expected),
                )
            )
    if f["structural"]:
        for n in range(nmax + 1):
            res = hypergeometric_residual(seq, n)
            rec = _family_record(base, res.is_zero(), check="hypergeometric", indices=[n])
            if not res.is_zero():
                rec["residual"] = _poly_terms(res)
            out.append(rec)
        for n in range(seq.nmax):
            res = raising_residual(seq, n)
            rec = _family_record(base, res.is_zero(), check="raising", indices=[n])
            if not res.is_zero():
                rec["residual"] = _poly_terms(res)
            out.append(rec)
    return out


def _run_generator_duality(head: dict, f: dict) -> list[dict]:
    pair = make_pair(f["pair"], **f["params"])
    if f.get("gauge") is not None:
        pair = pair.with_family(gauge_rescale(pair.family, f["gauge"]))
    cap = pair.max_index()
    nmax = f["nmax"] if cap is None else min(f["nmax"], cap)
    out = []
    for n1 in range(nmax + 1):
        for n2 in range(nmax + 1):
            rec = {**head, **verify_generator_duality(pair, n1, n2).to_record()}
            if f.get("gauge") is not None:
                rec["gauge"] = rational_str(f["gauge"])
            out.append(rec)
    return out


def _config_values(values):
    return tuple(as_rational(v) if isinstance(v, (int, str)) else float(v) for v in values)


def _run_semigroup(head: dict, f: dict) -> dict:
    pair = make_pair(f["pair"], **f["params"])
    cmp = mc_duality_check(
        pair,
        parse_graph(f["graph"]),
        _config_values(f["x0"]),
        tuple(f["n0"]),
        float(f["t"]),
        replicas=f["replicas"],
        seed=f["seed"],
        dt=f["dt"],
        forward_method=f["forward_method"],
        dual_method=f["dual_method"],
        tol=f["tol"],
        stream=f["trial"],
    )
    rec = cmp.to_record()
    rec["parameters"] = _jsonable(pair.params())
    rec["x0"] = _jsonable(list(cmp.x0))
    return {**head, "trial": f["trial"], "graph": f["graph"], **rec}


def _run_simulate(head: dict, f: dict) -> tuple[list[dict], list[tuple]]:
    proc = _process(f["process"], f["params"])
    g = parse_graph(f["graph"])
    x0 = _config_values(f["x0"])
    t = float(f["t"])
    rows, worst = [], 0.0
    finals = []
    for r in range(f["replicas"]):
        if proc.kind in ("BMP", "BEP"):
            dt = f["dt"] if f["dt"] is not None else default_dt(proc, g, t)
            path = diffusion_simulate(proc, g, [float(v) for v in x0], t, dt, f["seed"], replica=r)
        else:
            path = gillespie_simulate(proc, g, x0, t, f["seed"], replica=r)
        cons = path.conserved()
        scale = max(abs(cons[0]), 1e-300)
        worst = max(worst, float(abs(cons - cons[0]).max() / scale))
        finals.append([float(v) for v in path.states[-1]])
        rows.extend(path.rows(r))
    n = len(finals)
    mean = [sum(col) / n for col in zip(*finals)]
    rec = {
        **head,
        "process": proc.label(),
        "parameters": _jsonable(f["params"]),
        "graph": f["graph"],
        "t": t,
        "replicas": n,
        "seed": f["seed"],
        "mean_final": mean,
        "max_conservation_error": worst,
        "passed": worst <= CONSERVATION_TOL,
    }
    return [rec], rows


# ---------------------------------------------------------------------------
# reports


@dataclass
class Report:
    tool_version: str
    timestamp: str
    records: list[dict] = field(default_factory=list)
    config: str | None = None

    @property
    def summary(self) -> dict[str, int]:
        passed = sum(1 for r in self.records if r.get("passed"))
        return {"passed": passed, "failed": len(self.records) - passed}

    @property
    def exit_status(self) -> int:
        return 0 if self.summary["failed"] == 0 else 1

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
            "config": self.config,
            "summary": self.summary,
            "records": self.records,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def read(cls, path) -> Report:
        data = json.loads(Path(path).read_text())
        return cls(data["tool_version"], data["timestamp"], data["records"], data.get("config"))


def worker_count() -> int:
    env = os.environ.get("DUALITY_LAB_WORKERS")
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            raise CampaignError(f"DUALITY_LAB_WORKERS: expected a positive integer, got {env!r}") from None
        if n < 1:
            raise CampaignError("DUALITY_LAB_WORKERS: must be at least 1")
        return n
    return max(1, min(os.cpu_count() or 1, 8))


def execute(campaign: Campaign, workers: int | None = None) -> tuple[Report, list[tuple]]:
    workers = workers or worker_count()
    if workers == 1 or len(campaign.jobs) <= 1:
        results = [run_job(j) for j in campaign.jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_job, campaign.jobs))
    records, rows = [], []
    for recs, rs in results:
        records.extend(recs)
        rows.extend(rs)
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return Report(__version__, stamp, records, campaign.source), rows


def run_campaign(config_path=None, overrides: dict | None = None) -> Report:
    """Load, run and write a campaign; returns the report."""
    from .semigroup import write_samples_csv

    campaign = load_campaign(config_path, overrides)
    report, rows = execute(campaign)
    if campaign.report_path:
        report.write(campaign.report_path)
    if campaign.csv_path:
        write_samples_csv(campaign.csv_path, rows)
    return report
