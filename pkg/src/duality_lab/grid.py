"""Parameter grids and seeded random cases used by the acceptance suite.

Both ``tests/test_acceptance.py`` and the shipped ``data/acceptance.json``
are generated from these definitions.
"""
from __future__ import annotations

import random
from fractions import Fraction

LAMBDAS = (Fraction(1, 2), Fraction(1), Fraction(3))
TWO_J = (1, 2, 5)
P_VALUES = (Fraction(1, 5), Fraction(1, 2), Fraction(4, 5))
TWO_K = (Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(3))

NMAX_STRUCTURAL = 10
NMAX_DUALITY = 8
GAUGES_PER_PAIR = 3
TUPLES_PER_PAIR = 20
STOCHASTIC_TRIALS = 40
STOCHASTIC_REPLICAS = 100_000
SECTOR_STATE_LIMIT = 10_000

DISCRETE_GRAPHS = ("path:2", "path:3", "complete:3")
BALANCE_TOTALS = (0, 1, 2, 3, 6, 10, 25)


def family_grid() -> list[tuple[str, dict]]:
    out = [("charlier", {"lambda": lam}) for lam in LAMBDAS]
    out += [("krawtchouk", {"two_j": Fraction(j), "p": p}) for j in TWO_J for p in P_VALUES]
    out += [("meixner", {"two_k": k, "p": p}) for k in TWO_K for p in P_VALUES]
    out += [("hermite", {})]
    out += [("laguerre", {"two_k": k}) for k in TWO_K]
    return out


def pair_grid() -> list[tuple[str, dict]]:
    out = [("sep-sep", {"two_j": Fraction(j), "p": p}) for j in TWO_J for p in P_VALUES]
    out += [("sip-sip", {"two_k": k, "p": p}) for k in TWO_K for p in P_VALUES]
    out += [("irw-irw", {"lambda": lam}) for lam in LAMBDAS]
    out += [("bmp-sip", {})]
    out += [("bep-sip", {"two_k": k}) for k in TWO_K]
    out += [("kmp-dualkmp", {"two_k": k}) for k in TWO_K]
    return out


def balance_grid() -> list[tuple[str, dict, str, int]]:
    """(process, params, graph, total) for the reversibility check."""
    cases = []
    procs = [("SEP", {"two_j": Fraction(j), "p": p}) for j in TWO_J for p in P_VALUES]
    procs += [("SIP", {"two_k": k, "p": p}) for k in TWO_K for p in P_VALUES]
    procs += [("IRW", {"lambda": lam}) for lam in LAMBDAS]
    for name, params in procs:
        for graph in DISCRETE_GRAPHS:
            sites = int(graph.split(":")[1])
            for total in BALANCE_TOTALS:
                if name == "SEP" and total > params["two_j"] * sites:
                    continue
                cases.append((name, params, graph, total))
    return cases


def random_gauges(tag: str, count: int = GAUGES_PER_PAIR, seed: int = 2024) -> list[Fraction]:
    """Nonzero rationals with small numerators and denominators, one seeded stream per pair."""
    rng = random.Random(f"{seed}:{tag}")
    out = []
    while len(out) < count:
        b = Fraction(rng.choice([-1, 1]) * rng.randint(1, 9), rng.randint(1, 9))
        if b not in out and b != 1:
            out.append(b)
    return out


def _composition(rng: random.Random, sites: int, total: int, cap: int | None = None) -> list[int]:
    while True:
        cuts = sorted(rng.randint(0, total) for _ in range(sites - 1))
        parts = [b - a for a, b in zip([0, *cuts], [*cuts, total])]
        if cap is None or max(parts) <= cap:
            return parts


def semigroup_tuples(count: int = TUPLES_PER_PAIR, seed: int = 7) -> list[dict]:
    """Random deterministic-side cases: pair, params, graph, x0, n0 and t in [0, 2]."""
    cases = []
    for tag in ("sep-sep", "sip-sip", "irw-irw", "kmp-dualkmp"):
        rng = random.Random(f"{seed}:{tag}")
        params_pool = [p for t, p in pair_grid() if t == tag]
        for _ in range(count):
            params = rng.choice(params_pool)
            if tag == "kmp-dualkmp":
                graph, sites = "path:2", 2
                x0 = [Fraction(rng.randint(0, 12), 4) for _ in range(sites)]
                n0 = _composition(rng, sites, rng.randint(0, 4))
            else:
                graph = rng.choice(DISCRETE_GRAPHS)
                sites = int(graph.split(":")[1])
                cap = int(params["two_j"]) if tag == "sep-sep" else None
                hi = cap * sites if cap is not None else 4
                x0 = _composition(rng, sites, rng.randint(0, min(hi, 4)), cap)
                n0 = _composition(rng, sites, rng.randint(0, min(hi, 4)), cap)
            t = Fraction(rng.randint(0, 200), 100)
            cases.append({"pair": tag, "params": params, "graph": graph, "x0": x0, "n0": n0, "t": t})
    return cases


def stochastic_cases() -> list[dict]:
    """Continuous-forward pairs on two sites for the Monte Carlo comparison."""
    return [
        {"pair": "bmp-sip", "params": {}, "x0": [1.0, 0.5], "n0": [1, 1], "t": 0.5},
        {"pair": "bep-sip", "params": {"two_k": Fraction(1)}, "x0": [1.0, 2.0], "n0": [1, 1], "t": 0.5},
        {"pair": "kmp-dualkmp", "params": {"two_k": Fraction(1)}, "x0": [1.0, 2.0], "n0": [2, 1], "t": 0.5},
    ]


def _q(v):
    return f"{Fraction(v).numerator}/{Fraction(v).denominator}"


def _params_lists(params_list: list[dict]) -> dict:
    keys = list(params_list[0]) if params_list else []
    return {k: sorted({_q(p[k]) for p in params_list}, key=Fraction) for k in keys}


def acceptance_config() -> dict:
    """The campaign reproducing every acceptance criterion expressible as tasks."""
    tasks: list[dict] = []
    by_family: dict[str, list[dict]] = {}
    for name, params in family_grid():
        by_family.setdefault(name, []).append(params)
    for name, plist in by_family.items():
        tasks.append(
            {"kind": "verify-orthogonality", "family": name, "params": _params_lists(plist), "nmax": NMAX_STRUCTURAL}
        )
    by_pair: dict[str, list[dict]] = {}
    for tag, params in pair_grid():
        by_pair.setdefault(tag, []).append(params)
    for tag, plist in by_pair.items():
        tasks.append(
            {"kind": "verify-generator-duality", "pair": tag, "params": _params_lists(plist), "nmax": NMAX_DUALITY}
        )
    for tag, plist in by_pair.items():
        tasks.append(
            {
                "kind": "verify-generator-duality",
                "pair": tag,
                "params": _params_lists(plist),
                "nmax": NMAX_DUALITY,
                "gauge": [_q(b) for b in random_gauges(tag)],
            }
        )
    seen = set()
    for name, params, graph, _total in balance_grid():
        key = (name, graph, params.get("two_j"))
        if key in seen:
            continue
        seen.add(key)
        same = [c for c in balance_grid() if (c[0], c[2], c[1].get("two_j")) == key]
        tasks.append(
            {
                "kind": "verify-detailed-balance",
                "process": name,
                "graph": graph,
                "params": _params_lists([c[1] for c in same]),
                "total": sorted({c[3] for c in same}),
            }
        )
    for case in semigroup_tuples():
        tasks.append(
            {
                "kind": "semigroup-check",
                "pair": case["pair"],
                "params": {k: _q(v) for k, v in case["params"].items()},
                "graph": case["graph"],
                "x0": [_q(v) for v in case["x0"]],
                "n0": case["n0"],
                "t": float(case["t"]),
                "forward_method": "polynomial" if case["pair"] == "kmp-dualkmp" else "uniformization",
                "dual_method": "uniformization",
            }
        )
    for case in stochastic_cases():
        tasks.append(
            {
                "kind": "semigroup-check",
                "pair": case["pair"],
                "params": {k: _q(v) for k, v in case["params"].items()},
                "graph": "path:2",
                "x0": case["x0"],
                "n0": case["n0"],
                "t": case["t"],
                "replicas": STOCHASTIC_REPLICAS,
                "trials": STOCHASTIC_TRIALS,
                "seed": 0,
            }
        )
        process = {"bmp-sip": "BMP", "bep-sip": "BEP", "kmp-dualkmp": "KMP"}[case["pair"]]
        tasks.append(
            {
                "kind": "simulate",
                "process": process,
                "params": {k: _q(v) for k, v in case["params"].items()},
                "graph": "path:2",
                "x0": case["x0"],
                "t": case["t"],
                "replicas": 20,
                "seed": 0,
            }
        )
    irw = {"kind": "semigroup-check", "pair": "irw-irw", "params": {"lambda": "1/1"}, "graph": "path:2",
           "x0": [1, 0], "n0": [1, 0], "t": 1.0}
    tasks.append({**irw, "forward_method": "uniformization", "dual_method": "uniformization"})
    tasks.append({**irw, "forward_method": "montecarlo", "dual_method": "montecarlo",
                  "replicas": STOCHASTIC_REPLICAS, "seed": 0})
    return {"tasks": tasks, "output": {"report": "acceptance_report.json"}}
