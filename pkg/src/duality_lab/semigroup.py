"""Semigroup-level checks of E_x[D(X_t, n)] = E_n[D(x, N_t)].

Finite sectors are handled by uniformization; every process can also be
simulated. Random streams come from ``numpy.random.SeedSequence`` keyed by
(master seed, stream id[, edge id]) so results are reproducible bit for bit.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy import linalg, stats

from .exactmath import Poly2, as_rational, beta_binomial_weights, rational_str
from .processes import (
    Graph,
    ProcessSpec,
    RateMatrix,
    StateSpaceTooLarge,
    build_rate_matrix,
    edge_generator_exact,
    hop_rate,
    jump_kernel,
)

UNIFORMIZATION = "uniformization"
MONTE_CARLO = "montecarlo"
POLYNOMIAL = "polynomial"

DEFAULT_TOL = 1e-10
MC_SECTOR_CAP = 20_000
MIN_REPLICAS = 1_000


@dataclass
class SemigroupEstimate:
    value: float
    standard_error: float
    method: str
    truncation_bound: float = 0.0
    replicas: int | None = None
    seed: int | None = None
    conservation_error: float | None = None

    @property
    def deterministic(self) -> bool:
        return self.method != MONTE_CARLO

    def to_record(self) -> dict:
        rec = {"value": self.value, "standard_error": self.standard_error, "method": self.method}
        if self.method == UNIFORMIZATION:
            rec["truncation_bound"] = self.truncation_bound
        if self.method == MONTE_CARLO:
            rec["replicas"] = self.replicas
            rec["seed"] = self.seed
        if self.conservation_error is not None:
            rec["conservation_error"] = self.conservation_error
        return rec


@dataclass
class SimPath:
    process: ProcessSpec
    initial: tuple
    times: list[float]
    states: list[np.ndarray]
    stream: tuple[int, ...]

    def conserved(self) -> np.ndarray:
        """Total energy (sum of squares) for BMP, total mass otherwise, at each time."""
        arr = np.asarray(self.states, dtype=float)
        if self.process.kind == "BMP":
            return (arr**2).sum(axis=1)
        return arr.sum(axis=1)

    def rows(self, replica: int = 0):
        for time, state in zip(self.times, self.states):
            for site, value in enumerate(state):
                yield replica, time, site, value


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


# ---------------------------------------------------------------------------
# uniformization


def uniformization_expectation(
    Q: RateMatrix,
    f: Sequence[float] | Callable[[tuple], float],
    x0: Sequence[int],
    t: float,
    tol: float = DEFAULT_TOL,
) -> SemigroupEstimate:
    """(e^{tQ} f)(x0) as a Poisson mixture of powers of I + Q/Lambda."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    values = np.array([f(s) for s in Q.states] if callable(f) else f, dtype=float)
    if values.shape != (Q.size,):
        raise ValueError(f"f has {values.shape[0]} entries, sector has {Q.size}")
    if not np.all(np.isfinite(values)):
        raise ValueError("f must be finite on every state")
    start = Q.index[tuple(int(v) for v in x0)]
    spread = float(values.max() - values.min()) if values.size else 0.0
    exits = np.array([float(e) for e in Q.exit_rates()])
    lam = float(exits.max()) if exits.size else 0.0
    if t == 0 or lam == 0 or spread == 0:
        return SemigroupEstimate(float(values[start]), 0.0, UNIFORMIZATION)
    mu = lam * t
    P = Q.to_sparse() / lam
    P = P + _sparse_identity(Q.size)
    PT = P.T.tocsr()
    # The tail sum_{m > M} w_m (P^m f)(x0) is an average of values of f, so
    # replacing it by tail_mass * (P^(M+1) f)(x0) errs by at most tail_mass * spread.
    m_max = int(stats.poisson.isf(tol / spread, mu)) + 1
    while stats.poisson.sf(m_max, mu) * spread > tol:
        m_max += 1
    weights = stats.poisson.pmf(np.arange(m_max + 1), mu)
    tail = float(stats.poisson.sf(m_max, mu))
    dist = np.zeros(Q.size)
    dist[start] = 1.0
    acc = 0.0
    for m in range(m_max + 1):
        acc += weights[m] * float(dist @ values)
        dist = PT @ dist
    acc += tail * float(dist @ values)
    bound = tail * spread
    return SemigroupEstimate(acc, 0.0, UNIFORMIZATION, truncation_bound=bound)


def _sparse_identity(n: int):
    from scipy import sparse

    return sparse.identity(n, format="csr")


# ---------------------------------------------------------------------------
# single-path simulation


def gillespie_simulate(
    proc: ProcessSpec, g: Graph, x0: Sequence, t: float, seed: int, replica: int = 0
) -> SimPath:
    """Exact event-driven path on [0, t] for SEP, SIP, IRW, DualKMP or KMP."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if proc.kind not in ("SEP", "SIP", "IRW", "DualKMP", "KMP"):
        raise ValueError(f"{proc.kind} is a diffusion; use diffusion_simulate")
    rng = _rng(seed, replica)
    dtype = float if proc.kind == "KMP" else np.int64
    state = np.array(x0, dtype=dtype)
    _check_config(proc, state, g)
    times, states = [0.0], [state.copy()]
    now = 0.0
    edges = g.edges
    while True:
        if proc.kind in ("KMP", "DualKMP"):
            total = float(len(edges))
            now += rng.exponential(1.0 / total)
            if now > t:
                break
            i, l = edges[rng.integers(len(edges))]
            s = state[i] + state[l]
            if proc.kind == "KMP":
                frac = rng.beta(float(proc.param), float(proc.param))
                state[i], state[l] = frac * s, (1.0 - frac) * s
            else:
                w = np.array([float(v) for v in beta_binomial_weights(proc.param, int(s))])
                r = int(rng.choice(len(w), p=w / w.sum()))
                state[i], state[l] = r, s - r
        else:
            moves, rates = [], []
            for i, l in edges:
                for a, b in ((i, l), (l, i)):
                    if state[a] > 0:
                        r = float(hop_rate(proc, int(state[a]), int(state[b])))
                        if r > 0:
                            moves.append((a, b))
                            rates.append(r)
            if not rates:
                break
            rates = np.asarray(rates)
            total = rates.sum()
            now += rng.exponential(1.0 / total)
            if now > t:
                break
            a, b = moves[int(np.searchsorted(np.cumsum(rates), rng.random() * total, side="right"))]
            state[a] -= 1
            state[b] += 1
        times.append(now)
        states.append(state.copy())
    return SimPath(proc, tuple(x0), times, states, (int(seed), int(replica)))


def diffusion_simulate(
    proc: ProcessSpec,
    g: Graph,
    x0: Sequence[float],
    t: float,
    dt: float,
    seed: int,
    replica: int = 0,
) -> SimPath:
    """Lie-Trotter edge splitting for BMP (exact rotations) or BEP (energy-fraction step).

    A BEP edge step is Euler-Maruyama on u = x_i/(x_i + x_l), clamped to [0, 1].
    For 2k < 1 the fraction reaches the boundary and the clamp leaves an O(sqrt(dt))
    bias; for 2k >= 1 the boundary is not reached.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if proc.kind not in ("BMP", "BEP"):
        raise ValueError(f"{proc.kind} is not a diffusion")
    state = np.array(x0, dtype=float)[None, :]
    _check_config(proc, state[0], g)
    n_steps = max(1, math.ceil(t / dt - 1e-12)) if t > 0 else 0
    h = t / n_steps if n_steps else 0.0
    rngs = [_rng(seed, replica, e) for e in range(len(g.edges))]
    times, states = [0.0], [state[0].copy()]
    for step in range(n_steps):
        _diffusion_step(proc, g, state, h, rngs)
        times.append((step + 1) * h)
        states.append(state[0].copy())
    return SimPath(proc, tuple(x0), times, states, (int(seed), int(replica)))


def _diffusion_step(proc: ProcessSpec, g: Graph, state: np.ndarray, h: float, rngs) -> None:
    """Advance every row of ``state`` by one split step of length h, in place."""
    n = state.shape[0]
    for e, (i, l) in enumerate(g.edges):
        z = rngs[e].standard_normal(n)
        if proc.kind == "BMP":
            theta = math.sqrt(2.0 * h) * z
            c, s = np.cos(theta), np.sin(theta)
            xi, xl = state[:, i].copy(), state[:, l]
            state[:, i] = xi * c - xl * s
            state[:, l] = xi * s + xl * c
        else:
            two_k = float(proc.param)
            total = state[:, i] + state[:, l]
            safe = np.where(total > 0, total, 1.0)
            u = np.where(total > 0, state[:, i] / safe, 0.5)
            u = u + two_k * (1.0 - 2.0 * u) * h + np.sqrt(2.0 * u * (1.0 - u) * h) * z
            u = np.clip(u, 0.0, 1.0)
            state[:, i] = u * total
            state[:, l] = (1.0 - u) * total


def _check_config(proc: ProcessSpec, state: np.ndarray, g: Graph) -> None:
    if state.shape != (g.n_vertices,):
        raise ValueError(f"configuration has {state.shape[0]} sites, graph has {g.n_vertices}")
    if proc.kind != "BMP" and np.any(state < 0):
        raise ValueError("configuration entries must be non-negative")
    if proc.kind == "SEP" and np.any(state > float(proc.param)):
        raise ValueError("SEP occupations must not exceed 2j")


# ---------------------------------------------------------------------------
# many-replica endpoint sampling


def sample_endpoints(
    proc: ProcessSpec,
    g: Graph,
    x0: Sequence,
    t: float,
    replicas: int,
    seed: int,
    dt: float | None = None,
    stream: int = 0,
) -> np.ndarray:
    """Configurations at time t for ``replicas`` independent copies, shape (replicas, N)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    x0 = np.asarray(x0, dtype=float)
    _check_config(proc, x0, g)
    if proc.kind in ("BMP", "BEP"):
        dt = dt if dt is not None else default_dt(proc, g, t)
        if dt <= 0:
            raise ValueError("dt must be positive")
        state = np.repeat(x0[None, :], replicas, axis=0)
        n_steps = max(1, math.ceil(t / dt - 1e-12)) if t > 0 else 0
        h = t / n_steps if n_steps else 0.0
        rngs = [_rng(seed, stream, e) for e in range(len(g.edges))]
        for _ in range(n_steps):
            _diffusion_step(proc, g, state, h, rngs)
        return state
    rng = _rng(seed, stream)
    if proc.kind == "KMP":
        return _kmp_endpoints(proc, g, x0, t, replicas, rng)
    Q = build_rate_matrix(proc, g, int(round(x0.sum())), state_cap=MC_SECTOR_CAP)
    idx = _sector_endpoints(Q, tuple(int(v) for v in x0), t, replicas, rng)
    return np.asarray(Q.states, dtype=float)[idx]


def default_dt(proc: ProcessSpec, g: Graph, t: float) -> float:
    # one edge on its own is integrated exactly by a single rotation
    if proc.kind == "BMP" and len(g.edges) == 1:
        return max(t, 1e-300)
    return 1e-3 * t if t > 0 else 1.0


def _kmp_endpoints(proc, g, x0, t, replicas, rng):
    state = np.repeat(x0[None, :], replicas, axis=0)
    n_edges = len(g.edges)
    rings = rng.poisson(n_edges * t, size=replicas)
    edges = np.asarray(g.edges)
    a = float(proc.param)
    for step in range(int(rings.max()) if replicas else 0):
        active = np.nonzero(rings > step)[0]
        chosen = edges[rng.integers(n_edges, size=active.size)]
        frac = rng.beta(a, a, size=active.size)
        i, l = chosen[:, 0], chosen[:, 1]
        s = state[active, i] + state[active, l]
        state[active, i] = frac * s
        state[active, l] = (1.0 - frac) * s
    return state


def _sector_endpoints(Q: RateMatrix, x0: tuple, t: float, replicas: int, rng) -> np.ndarray:
    exits, targets, cum = jump_kernel(Q)
    width = max((len(c) for c in cum), default=0)
    cum_pad = np.ones((Q.size, max(width, 1)))
    tgt_pad = np.zeros((Q.size, max(width, 1)), dtype=np.int64)
    for a in range(Q.size):
        k = len(cum[a])
        if k:
            cum_pad[a, :k] = cum[a]
            cum_pad[a, k - 1] = 1.0
            tgt_pad[a, :k] = targets[a]
            tgt_pad[a, k:] = targets[a][-1]
    idx = np.full(replicas, Q.index[x0], dtype=np.int64)
    clock = np.zeros(replicas)
    active = np.arange(replicas)
    while active.size:
        rate = exits[idx[active]]
        moving = rate > 0
        active = active[moving]
        if not active.size:
            break
        clock[active] += rng.exponential(1.0 / rate[moving])
        active = active[clock[active] <= t]
        if not active.size:
            break
        u = rng.random(active.size)
        rows = idx[active]
        pick = (u[:, None] > cum_pad[rows]).sum(axis=1)
        pick = np.minimum(pick, cum_pad.shape[1] - 1)
        idx[active] = tgt_pad[rows, pick]
    return idx


def write_samples_csv(path, rows) -> None:
    """rows: iterable of (replica, time, site, value)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replica", "time", "site", "value"])
        for r in rows:
            w.writerow(r)


# ---------------------------------------------------------------------------
# polynomial semigroup for two-site continuous processes


def polynomial_semigroup_expectation(proc: ProcessSpec, F: Poly2, x0: Sequence[float], t: float) -> SemigroupEstimate:
    """(e^{tL} F)(x0) on one edge, using that L preserves total degree.

    The generator is assembled exactly on monomials of total degree <= deg F and
    exponentiated in floating point.
    """
    if proc.kind not in ("BMP", "BEP", "KMP"):
        raise ValueError("polynomial semigroup is for the continuous two-site processes")
    terms = F.terms()
    if not terms:
        return SemigroupEstimate(0.0, 0.0, POLYNOMIAL)
    deg = max(a + b for a, b in terms)
    basis = [(a, d - a) for d in range(deg + 1) for a in range(d + 1)]
    pos = {m: i for i, m in enumerate(basis)}
    A = np.zeros((len(basis), len(basis)))
    for j, (a, b) in enumerate(basis):
        image = edge_generator_exact(proc, Poly2.from_dict({(a, b): 1}))
        for m, c in image.terms().items():
            A[pos[m], j] = float(c)
    coeffs = np.zeros(len(basis))
    for m, c in terms.items():
        coeffs[pos[m]] = float(c)
    evolved = linalg.expm(t * A) @ coeffs
    x1, x2 = float(x0[0]), float(x0[1])
    value = float(sum(c * x1**a * x2**b for c, (a, b) in zip(evolved, basis)))
    return SemigroupEstimate(value, 0.0, POLYNOMIAL)


# ---------------------------------------------------------------------------
# two-sided comparison


@dataclass
class DualityComparison:
    pair: str
    x0: tuple
    n0: tuple
    t: float
    forward: SemigroupEstimate
    dual: SemigroupEstimate
    tolerance: float = 1e-8
    parameters: dict = field(default_factory=dict)

    @property
    def difference(self) -> float:
        return float(self.forward.value - self.dual.value)

    @property
    def combined_se(self) -> float:
        return math.hypot(self.forward.standard_error, self.dual.standard_error)

    @property
    def passed(self) -> bool:
        if self.forward.deterministic and self.dual.deterministic:
            return bool(abs(self.difference) <= self.tolerance)
        return bool(abs(self.difference) <= max(3.0 * self.combined_se, 1e-12))

    def to_record(self) -> dict:
        return {
            "pair": self.pair,
            "parameters": {k: rational_str(v) for k, v in self.parameters.items()},
            "x0": [rational_str(v) if isinstance(v, Fraction) else v for v in self.x0],
            "n0": list(self.n0),
            "t": self.t,
            "forward": self.forward.to_record(),
            "dual": self.dual.to_record(),
            "difference": self.difference,
            "combined_se": self.combined_se,
            "passed": self.passed,
        }


def _product_values(pair, configs: np.ndarray, n: Sequence[int]) -> np.ndarray:
    out = np.ones(configs.shape[0])
    for site, ni in enumerate(n):
        out *= pair.family(int(ni))(configs[:, site])
    return out


def _exact_or_float(v):
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, str):
        return as_rational(v)
    return float(v)


def _mc_estimate(values: np.ndarray, seed: int) -> SemigroupEstimate:
    n = values.size
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return SemigroupEstimate(float(values.mean()), se, MONTE_CARLO, replicas=n, seed=seed)


def forward_expectation(
    pair, g, x0, n0, t, method="auto", replicas=10_000, seed=0, dt=None, tol=DEFAULT_TOL, stream=0
):
    """E_x0[D(X_t, n0)] for the forward process of ``pair``."""
    proc = pair.forward
    if proc.discrete and method in ("auto", UNIFORMIZATION):
        try:
            Q = build_rate_matrix(proc, g, int(sum(int(v) for v in x0)))
            vals = [float(pair.D(tuple(Fraction(v) for v in s), n0)) for s in Q.states]
            return uniformization_expectation(Q, vals, x0, t, tol)
        except StateSpaceTooLarge:
            if method == UNIFORMIZATION:
                raise
    if method == POLYNOMIAL:
        if g.n_vertices != 2:
            raise ValueError("polynomial semigroup needs a two-vertex graph")
        F = Poly2.outer(pair.family(n0[0]), pair.family(n0[1]))
        return polynomial_semigroup_expectation(proc, F, [float(v) for v in x0], t)
    x_start = np.asarray([float(v) for v in x0])
    ends = sample_endpoints(proc, g, x_start, t, replicas, seed, dt=dt, stream=2 * stream)
    est = _mc_estimate(_product_values(pair, ends, n0), seed)
    est.conservation_error = conservation_error(proc, x_start, ends)
    return est


def conservation_error(proc: ProcessSpec, x0: np.ndarray, ends: np.ndarray) -> float:
    """Largest relative change of the conserved quantity over sampled endpoints."""
    if proc.kind == "BMP":
        start, final = float((x0**2).sum()), (ends**2).sum(axis=1)
    else:
        start, final = float(x0.sum()), ends.sum(axis=1)
    if final.size == 0:
        return 0.0
    return float(np.max(np.abs(final - start)) / max(abs(start), 1e-300))


def dual_expectation(pair, g, x0, n0, t, method="auto", replicas=10_000, seed=0, tol=DEFAULT_TOL, stream=0):
    """E_n0[D(x0, N_t)] with the dual clock sped up by ``pair.dual_rate``."""
    proc = pair.dual
    t_dual = float(pair.dual_rate) * t
    xs = [_exact_or_float(v) for v in x0]
    if method in ("auto", UNIFORMIZATION):
        try:
            Q = build_rate_matrix(proc, g, int(sum(n0)))
            vals = [float(pair.D(xs, s)) for s in Q.states]
            return uniformization_expectation(Q, vals, n0, t_dual, tol)
        except StateSpaceTooLarge:
            if method == UNIFORMIZATION:
                raise
    ends = sample_endpoints(proc, g, n0, t_dual, replicas, seed, stream=2 * stream + 1).astype(np.int64)
    x_arr = np.asarray([float(v) for v in xs])
    vals = np.ones(ends.shape[0])
    for site in range(ends.shape[1]):
        col = ends[:, site]
        for n in np.unique(col):
            vals[col == n] *= float(pair.family(int(n))(x_arr[site]))
    return _mc_estimate(vals, seed)


def mc_duality_check(
    pair,
    g: Graph,
    x0: Sequence,
    n0: Sequence[int],
    t: float,
    replicas: int = 10_000,
    seed: int = 0,
    dt: float | None = None,
    forward_method: str = "auto",
    dual_method: str = "auto",
    tol: float = 1e-8,
    stream: int = 0,
) -> DualityComparison:
    """Compare both sides of the semigroup duality relation."""
    n0 = tuple(int(v) for v in n0)
    if replicas < MIN_REPLICAS:
        raise ValueError(f"replicas must be at least {MIN_REPLICAS}")
    if len(x0) != g.n_vertices or len(n0) != g.n_vertices:
        raise ValueError("x0 and n0 must have one entry per vertex")
    cap = pair.max_index()
    if cap is not None and max(n0) > cap:
        raise ValueError(f"dual configuration exceeds the index cap {cap}")
    fwd = forward_expectation(pair, g, x0, n0, t, forward_method, replicas, seed, dt, stream=stream)
    dual = dual_expectation(pair, g, x0, n0, t, dual_method, replicas, seed, stream=stream)
    return DualityComparison(pair.tag, tuple(x0), n0, float(t), fwd, dual, tol, pair.params())


@dataclass
class SplittingCheck:
    coarse: SemigroupEstimate
    fine: SemigroupEstimate
    dt: float

    @property
    def drift(self) -> float:
        return self.fine.value - self.coarse.value

    @property
    def passed(self) -> bool:
        se = math.hypot(self.coarse.standard_error, self.fine.standard_error)
        return bool(abs(self.drift) <= max(3.0 * se, 1e-12))


def splitting_self_test(
    proc: ProcessSpec,
    g: Graph,
    x0: Sequence[float],
    observable: Callable[[np.ndarray], np.ndarray],
    t: float,
    dt: float,
    replicas: int = 20_000,
    seed: int = 0,
) -> SplittingCheck:
    """Estimate E[observable(X_t)] at step dt and dt/2 with independent streams.

    Splitting error is the only bias of the rotation scheme, so the two
    estimates should agree within their combined standard error.
    """
    out = []
    for stream, step in enumerate((dt, dt / 2)):
        ends = sample_endpoints(proc, g, x0, t, replicas, seed, dt=step, stream=stream)
        out.append(_mc_estimate(np.asarray(observable(ends), dtype=float), seed))
    return SplittingCheck(out[0], out[1], dt)
