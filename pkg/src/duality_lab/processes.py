"""Process generators: exact single-edge operators on bivariate polynomial
observables, and exact rate matrices on conserved-total sectors."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from pathlib import Path

import numpy as np
from scipy import sparse

from .exactmath import (
    Poly2,
    as_rational,
    beta_binomial_weights,
    beta_mixed_moment,
    pochhammer,
)

DEFAULT_STATE_CAP = 200_000

DISCRETE_KINDS = ("SEP", "SIP", "IRW", "DualKMP")
CONTINUOUS_KINDS = ("BMP", "BEP", "KMP")


class StateSpaceTooLarge(RuntimeError):
    pass


@dataclass(frozen=True)
class Graph:
    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValueError("a graph needs at least one vertex")
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n_vertices and 0 <= v < self.n_vertices):
                raise ValueError(f"edge ({u}, {v}) references a missing vertex")
            e = (min(u, v), max(u, v))
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
        object.__setattr__(self, "edges", tuple(sorted(seen)))
        if not self._connected():
            raise ValueError("graph is not connected")

    def _connected(self) -> bool:
        adj = {v: [] for v in range(self.n_vertices)}
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        stack, seen = [0], {0}
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n_vertices

    @classmethod
    def path(cls, n: int) -> Graph:
        return cls(n, tuple((i, i + 1) for i in range(n - 1)))

    @classmethod
    def complete(cls, n: int) -> Graph:
        return cls(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))

    @classmethod
    def parse(cls, text: str) -> Graph:
        """Parse ``N <count>`` followed by one ``u v`` edge per line."""
        lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln]
        if not lines:
            raise ValueError("empty graph description")
        head = lines[0].split()
        if len(head) != 2 or head[0] != "N":
            raise ValueError("first line must read 'N <vertex_count>'")
        edges = []
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 2:
                raise ValueError(f"bad edge line {ln!r}")
            edges.append((int(parts[0]), int(parts[1])))
        return cls(int(head[1]), tuple(edges))

    @classmethod
    def read(cls, path) -> Graph:
        return cls.parse(Path(path).read_text())

    def dumps(self) -> str:
        return "\n".join([f"N {self.n_vertices}"] + [f"{u} {v}" for u, v in self.edges]) + "\n"


@dataclass(frozen=True)
class ProcessSpec:
    """One of the seven processes; ``param`` is 2j for SEP and 2k where relevant."""

    kind: str
    param: Fraction | None = None

    def __post_init__(self):
        if self.kind not in DISCRETE_KINDS + CONTINUOUS_KINDS:
            raise ValueError(f"unknown process {self.kind!r}")
        if self.kind in ("IRW", "BMP"):
            if self.param is not None:
                raise ValueError(f"{self.kind} takes no parameter")
            return
        if self.param is None:
            raise ValueError(f"{self.kind} needs a parameter")
        v = as_rational(self.param)
        if v <= 0:
            raise ValueError(f"{self.kind} parameter must be positive")
        if self.kind == "SEP" and v.denominator != 1:
            raise ValueError("two_j must be a positive integer")
        object.__setattr__(self, "param", v)

    @property
    def discrete(self) -> bool:
        return self.kind in DISCRETE_KINDS

    def label(self) -> str:
        if self.param is None:
            return self.kind
        name = "2j" if self.kind == "SEP" else "2k"
        return f"{self.kind}({name}={self.param})"


def SEP(two_j) -> ProcessSpec:
    return ProcessSpec("SEP", two_j)


def SIP(two_k) -> ProcessSpec:
    return ProcessSpec("SIP", two_k)


def IRW() -> ProcessSpec:
    return ProcessSpec("IRW")


def BMP() -> ProcessSpec:
    return ProcessSpec("BMP")


def BEP(two_k) -> ProcessSpec:
    return ProcessSpec("BEP", two_k)


def KMP(two_k) -> ProcessSpec:
    return ProcessSpec("KMP", two_k)


def DualKMP(two_k) -> ProcessSpec:
    return ProcessSpec("DualKMP", two_k)


def hop_rate(proc: ProcessSpec, departure: int, arrival: int):
    """Rate of one particle hopping between sites holding the given occupations."""
    if proc.kind == "SEP":
        return departure * (proc.param - arrival)
    if proc.kind == "SIP":
        return departure * (proc.param + arrival)
    if proc.kind == "IRW":
        return Fraction(departure)
    raise ValueError(f"{proc.kind} is not a single-hop process")


# ---------------------------------------------------------------------------
# exact single-edge operators on polynomial observables

_X1 = Poly2.x1()
_X2 = Poly2.x2()


def _hop_prefactors(proc: ProcessSpec) -> tuple[Poly2, Poly2]:
    """Polynomial rates for x1 -> x2 and x2 -> x1 hops."""
    if proc.kind == "SEP":
        c = proc.param
        return _X1 * (c - _X2), (c - _X1) * _X2
    if proc.kind == "SIP":
        c = proc.param
        return _X1 * (c + _X2), (c + _X1) * _X2
    if proc.kind == "IRW":
        return _X1, _X2
    raise ValueError(proc.kind)


def edge_generator_exact(proc: ProcessSpec, F: Poly2) -> Poly2:
    """Image of F(x1, x2) under the generator restricted to the single edge (1, 2)."""
    kind = proc.kind
    if kind in ("SEP", "SIP", "IRW"):
        right, left = _hop_prefactors(proc)
        return right * (F.shift(-1, 1) - F) + left * (F.shift(1, -1) - F)
    if kind == "BMP":
        # (x1 d2 - x2 d1)^2, applied as two first-order sweeps
        once = _X1 * F.partial(1) - _X2 * F.partial(0)
        return _X1 * once.partial(1) - _X2 * once.partial(0)
    if kind == "BEP":
        diff = F.partial(0) - F.partial(1)
        diff2 = diff.partial(0) - diff.partial(1)
        return _X1 * _X2 * diff2 - (_X1 - _X2) * diff * proc.param
    if kind == "KMP":
        return _kmp_edge(proc.param, F) - F
    raise ValueError("DualKMP acts on dual indices; use dual_side_combination")


def _kmp_edge(two_k: Fraction, F: Poly2) -> Poly2:
    """E over p ~ Beta(2k,2k) of F(p s, (1-p) s) with s = x1 + x2."""
    by_degree: dict[int, Fraction] = {}
    for (a, b), c in F.terms().items():
        by_degree[a + b] = by_degree.get(a + b, Fraction(0)) + c * beta_mixed_moment(two_k, a, b)
    terms = {}
    for d, c in by_degree.items():
        if c == 0:
            continue
        for i in range(d + 1):
            terms[(i, d - i)] = terms.get((i, d - i), Fraction(0)) + c * comb(d, i)
    return Poly2.from_dict(terms)


def dual_side_combination(proc: ProcessSpec, n1: int, n2: int, D) -> Poly2:
    """sum over dual moves of rate * [D_{n1'} (x) D_{n2'} - D_{n1} (x) D_{n2}].

    ``D`` is any callable n -> Poly1 (typically a DualityFamily).
    """
    if n1 < 0 or n2 < 0:
        raise ValueError("dual indices must be non-negative")
    base = Poly2.outer(D(n1), D(n2))
    if proc.kind == "DualKMP":
        total = n1 + n2
        out = Poly2()
        for r, w in enumerate(beta_binomial_weights(proc.param, total)):
            out = out + Poly2.outer(D(r), D(total - r)) * w
        return out - base
    out = Poly2()
    rate_12 = hop_rate(proc, n1, n2)
    if rate_12 != 0:
        out = out + (Poly2.outer(D(n1 - 1), D(n2 + 1)) - base) * rate_12
    rate_21 = hop_rate(proc, n2, n1)
    if rate_21 != 0:
        out = out + (Poly2.outer(D(n1 + 1), D(n2 - 1)) - base) * rate_21
    return out


# ---------------------------------------------------------------------------
# rate matrices on conserved-total sectors


def enumerate_sector(n_sites: int, total: int, cap_per_site: int | None = None) -> list[tuple[int, ...]]:
    """All occupation vectors with the given total, in lexicographic order."""
    out: list[tuple[int, ...]] = []

    def rec(prefix: list[int], remaining: int, sites_left: int):
        if sites_left == 1:
            if cap_per_site is None or remaining <= cap_per_site:
                out.append(tuple(prefix + [remaining]))
            return
        hi = remaining if cap_per_site is None else min(remaining, cap_per_site)
        for v in range(hi + 1):
            rec(prefix + [v], remaining - v, sites_left - 1)

    rec([], total, n_sites)
    return out


def sector_size(n_sites: int, total: int, cap_per_site: int | None = None) -> int:
    if cap_per_site is None:
        return comb(total + n_sites - 1, n_sites - 1)
    # inclusion-exclusion over sites exceeding the cap
    size = 0
    for i in range(n_sites + 1):
        rest = total - i * (cap_per_site + 1)
        if rest < 0:
            break
        size += (-1) ** i * comb(n_sites, i) * comb(rest + n_sites - 1, n_sites - 1)
    return size


@dataclass
class RateMatrix:
    """Exact generator on one sector. ``rates`` holds off-diagonal entries only."""

    process: ProcessSpec
    graph: Graph
    states: list[tuple[int, ...]]
    rates: dict[tuple[int, int], Fraction]
    index: dict[tuple[int, ...], int] = field(init=False)

    def __post_init__(self):
        self.index = {s: i for i, s in enumerate(self.states)}

    @property
    def size(self) -> int:
        return len(self.states)

    def exit_rates(self) -> list[Fraction]:
        out = [Fraction(0)] * self.size
        for (a, _), r in self.rates.items():
            out[a] += r
        return out

    def row_sums(self) -> list[Fraction]:
        """Row sums including the diagonal; identically zero for a generator."""
        sums = [-e for e in self.exit_rates()]
        for (a, _), r in self.rates.items():
            sums[a] += r
        return sums

    def dense(self) -> list[list[Fraction]]:
        out = [[Fraction(0)] * self.size for _ in range(self.size)]
        for (a, b), r in self.rates.items():
            out[a][b] += r
        for i, e in enumerate(self.exit_rates()):
            out[i][i] -= e
        return out

    def to_sparse(self) -> sparse.csr_matrix:
        """Floating-point copy including the diagonal."""
        n = self.size
        rows, cols, vals = [], [], []
        for (a, b), r in self.rates.items():
            rows.append(a)
            cols.append(b)
            vals.append(float(r))
        for i, e in enumerate(self.exit_rates()):
            rows.append(i)
            cols.append(i)
            vals.append(-float(e))
        return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def build_rate_matrix(
    proc: ProcessSpec, g: Graph, total: int, state_cap: int = DEFAULT_STATE_CAP
) -> RateMatrix:
    if not proc.discrete:
        raise ValueError(f"{proc.kind} has a continuous state space")
    if total < 0:
        raise ValueError("total must be non-negative")
    per_site = int(proc.param) if proc.kind == "SEP" else None
    if per_site is not None and total > per_site * g.n_vertices:
        raise ValueError(f"total {total} exceeds SEP capacity {per_site * g.n_vertices}")
    size = sector_size(g.n_vertices, total, per_site)
    if size > state_cap:
        raise StateSpaceTooLarge(f"sector has {size} states, cap is {state_cap}")
    states = enumerate_sector(g.n_vertices, total, per_site)
    index = {s: i for i, s in enumerate(states)}
    rates: dict[tuple[int, int], Fraction] = {}

    def add(a: int, target: list[int], r):
        if r == 0:
            return
        key = (a, index[tuple(target)])
        rates[key] = rates.get(key, Fraction(0)) + r

    for a, s in enumerate(states):
        for i, l in g.edges:
            if proc.kind == "DualKMP":
                c = s[i] + s[l]
                for r, w in enumerate(beta_binomial_weights(proc.param, c)):
                    if r == s[i]:
                        continue
                    t = list(s)
                    t[i], t[l] = r, c - r
                    add(a, t, w)
                continue
            if s[i] > 0:
                t = list(s)
                t[i] -= 1
                t[l] += 1
                add(a, t, Fraction(hop_rate(proc, s[i], s[l])))
            if s[l] > 0:
                t = list(s)
                t[l] -= 1
                t[i] += 1
                add(a, t, Fraction(hop_rate(proc, s[l], s[i])))
    return RateMatrix(proc, g, states, rates)


def marginal_weight(proc: ProcessSpec, x: int, param) -> Fraction:
    """Stationary marginal at occupation x, up to an x-independent factor.

    ``param`` is p for SEP/SIP and lambda for IRW. Dropped factors (e^-lambda,
    (1-p)^(2k)) are common to every state of a sector.
    """
    param = as_rational(param)
    if proc.kind == "SEP":
        tj = int(proc.param)
        if not 0 <= x <= tj:
            return Fraction(0)
        return comb(tj, x) * param**x * (1 - param) ** (tj - x)
    if proc.kind == "SIP":
        return pochhammer(proc.param, x) / factorial(x) * param**x
    if proc.kind == "IRW":
        return param**x / factorial(x)
    raise ValueError(f"no product reversible measure implemented for {proc.kind}")


def detailed_balance_residual(proc: ProcessSpec, g: Graph, total: int, param) -> Fraction:
    """max |rho(x) q(x,y) - rho(y) q(y,x)| over the sector, with product weights."""
    if proc.kind not in ("SEP", "SIP", "IRW"):
        raise ValueError("detailed balance check covers SEP, SIP and IRW")
    param = as_rational(param)
    if proc.kind in ("SEP", "SIP") and not 0 < param < 1:
        raise ValueError("p must lie in (0,1)")
    if proc.kind == "IRW" and param <= 0:
        raise ValueError("lambda must be positive")
    Q = build_rate_matrix(proc, g, total)
    weights = []
    for s in Q.states:
        w = Fraction(1)
        for x in s:
            w *= marginal_weight(proc, x, param)
        weights.append(w)
    worst = Fraction(0)
    for (a, b), r in Q.rates.items():
        back = Q.rates.get((b, a), Fraction(0))
        worst = max(worst, abs(weights[a] * r - weights[b] * back))
    return worst


def jump_kernel(Q: RateMatrix) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Per-state exit rate, target indices and cumulative jump probabilities."""
    exits = np.zeros(Q.size)
    targets: list[list[int]] = [[] for _ in range(Q.size)]
    weights: list[list[float]] = [[] for _ in range(Q.size)]
    for (a, b), r in sorted(Q.rates.items()):
        targets[a].append(b)
        weights[a].append(float(r))
    cum = []
    for a in range(Q.size):
        w = np.asarray(weights[a], dtype=float)
        exits[a] = w.sum()
        cum.append(np.cumsum(w) / exits[a] if len(w) else w)
    return exits, [np.asarray(t, dtype=np.int64) for t in targets], cum
