"""Stellar fidelities by multi-start optimization over Gaussian unitaries.

The stellar fidelity ``f_n`` of a pure state is the largest weight that any
circuit ``S D U`` (real squeezings) can concentrate on total photon number
``<= n``.  Every value returned here is an objective value actually attained
by the reported circuit, hence a lower bound on the true maximum.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .errors import InfeasibleOptimization, TruncationError
from .fock import FockState, total_photons
from .gaussian import (
    R_MAX,
    GaussianCircuit,
    apply_local_rows,
    apply_passive_array,
    beamsplitter_block,
    gaussian_rows,
    n_passive,
)

INF_RANK = math.inf


@dataclass(frozen=True)
class OptimizerOptions:
    starts: int | None = None  # None: 32 single-mode, 128 otherwise
    seed: int = 0
    fatol: float = 1e-8
    xatol: float = 1e-6
    max_evals: int = 2000
    r_start: float = 1.5
    alpha_start: float = 2.0
    r_max: float = R_MAX
    threads: int | None = None
    spread_tol: float = 1e-4
    rescore_extra: int = 15
    rescore_tol: float = 1e-6
    max_escalations: int = 2

    def n_starts(self, modes: int) -> int:
        if self.starts is not None:
            return self.starts
        return 32 if modes == 1 else 128

    def n_threads(self) -> int:
        if self.threads is not None:
            return max(1, self.threads)
        return max(1, int(os.environ.get("STELLAR_THREADS", "1")))

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class FidelityResult:
    n: int
    value: float
    circuit: GaussianCircuit
    starts: int
    evaluations: int
    spread: float
    cutoff: int
    escalations: int = 0

    def flagged(self, tol: float = 1e-4) -> bool:
        return self.spread > tol

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "value": self.value,
            "circuit": self.circuit.to_json(),
            "starts": self.starts,
            "evaluations": self.evaluations,
            "spread": self.spread,
            "cutoff": self.cutoff,
            "escalations": self.escalations,
        }


# --- objective ----------------------------------------------------------------


class Objective:
    """``x -> <psi| G(x)^dag Pi_n G(x) |psi>`` for a fixed state and rank."""

    def __init__(self, psi: FockState, n: int, r_max: float = R_MAX):
        # matrix elements are exact, so only the occupied photon range matters
        top = psi.max_photons()
        self.psi = psi.padded(top) if top >= psi.cutoff else psi.cropped(top)
        self.n = n
        self.modes = psi.modes
        self.r_max = r_max
        self._k = n_passive(self.modes)
        cols = self.psi.cutoff + 1
        self._phases = np.arange(cols)
        if self.modes > 1:
            self._mask = total_photons(self.modes, n) <= n
        if self.modes == 2:
            top = self.psi.cutoff
            self._strata = [np.arange(s + 1) for s in range(top + 1)]
            self._occupied = [s for s, ks in enumerate(self._strata) if self.psi.amps[ks, s - ks].any()]
        self.evaluations = 0

    def clip(self, x: np.ndarray) -> np.ndarray:
        x = np.array(x, dtype=float)
        m, k = self.modes, self._k
        x[k + 2 * m :] = np.clip(x[k + 2 * m :], -self.r_max, self.r_max)
        return x

    def __call__(self, x) -> float:
        self.evaluations += 1
        m, k, n = self.modes, self._k, self.n
        rs = np.clip(x[k + 2 * m :], -self.r_max, self.r_max)
        alphas = x[k : k + m] + 1j * x[k + m : k + 2 * m]
        cols = self.psi.cutoff + 1
        if m == 1:
            vec = self.psi.amps * np.exp(1j * x[0] * self._phases)
            out = gaussian_rows(rs[0], 0.0, alphas[0], n + 1, cols) @ vec
            return float(np.vdot(out, out).real)
        if m == 2:
            return self._two_mode(x, rs, alphas, cols)
        amps = apply_passive_array(self.psi.amps, m, x[:k])
        mats = [gaussian_rows(r, 0.0, a, n + 1, cols) for r, a in zip(rs, alphas)]
        out = apply_local_rows(amps, mats)
        kept = out[self._mask]
        return float(np.vdot(kept, kept).real)


    def _two_mode(self, x, rs, alphas, cols) -> float:
        n, ph = self.n, self._phases
        amps = self.psi.amps * np.outer(np.exp(1j * x[0] * ph), np.exp(1j * x[1] * ph))
        mixed = np.zeros_like(amps)
        for s in self._occupied:
            ks = self._strata[s]
            mixed[ks, s - ks] = beamsplitter_block(x[2], s) @ amps[ks, s - ks]
        mixed *= np.exp(1j * x[3] * ph)[:, None]
        g0 = gaussian_rows(rs[0], 0.0, alphas[0], n + 1, cols)
        g1 = gaussian_rows(rs[1], 0.0, alphas[1], n + 1, cols)
        kept = (g0 @ mixed @ g1.T)[self._mask]
        return float(np.vdot(kept, kept).real)


def _random_start(rng: np.random.Generator, modes: int, opts: OptimizerOptions) -> np.ndarray:
    k = n_passive(modes)
    passive = rng.uniform(0.0, 2 * math.pi, size=k)
    radius = opts.alpha_start * np.sqrt(rng.uniform(size=modes))
    angle = rng.uniform(0.0, 2 * math.pi, size=modes)
    rs = rng.uniform(-opts.r_start, opts.r_start, size=modes)
    return np.concatenate([passive, radius * np.cos(angle), radius * np.sin(angle), rs])


def _local_search(objective: Objective, x0: np.ndarray, opts: OptimizerOptions):
    dim = x0.size
    res = minimize(
        lambda x: -objective(x),
        x0,
        method="Nelder-Mead",
        options={
            "maxfev": opts.max_evals,
            "fatol": opts.fatol,
            "xatol": opts.xatol,
            "adaptive": dim > 4,
        },
    )
    x = objective.clip(res.x)
    return float(objective(x)), x, int(res.nfev)


def start_points(modes: int, n: int, opts: OptimizerOptions, warm=None) -> list[np.ndarray]:
    """Deterministic start list: identity, optional warm start, then seeded random draws.

    Each random start owns a child stream of ``SeedSequence([seed, n])`` so its
    trajectory is independent of scheduling.
    """
    dim = n_passive(modes) + 3 * modes
    points = [np.zeros(dim)]
    if warm is not None:
        points.append(np.asarray(warm, dtype=float))
    children = np.random.SeedSequence([opts.seed, n]).spawn(opts.n_starts(modes))
    points.extend(_random_start(np.random.default_rng(c), modes, opts) for c in children)
    return points


def _optimize(psi: FockState, n: int, opts: OptimizerOptions, warm=None):
    points = start_points(psi.modes, n, opts, warm)

    def run(x0):
        objective = Objective(psi, n, opts.r_max)
        try:
            value, x, nfev = _local_search(objective, x0, opts)
        except TruncationError:
            return None
        return value, x, nfev

    threads = opts.n_threads()
    if threads == 1:
        results = [run(x0) for x0 in points]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, points))
    feasible = [r for r in results if r is not None and np.isfinite(r[0])]
    if not feasible:
        raise InfeasibleOptimization(f"no feasible evaluation for n={n}")
    best_i = 0
    for i, r in enumerate(feasible):
        if r[0] > feasible[best_i][0]:
            best_i = i
    values = sorted((r[0] for r in feasible), reverse=True)
    spread = values[0] - values[min(4, len(values) - 1)]
    evals = sum(r[2] for r in feasible)
    return feasible[best_i][0], feasible[best_i][1], len(points), evals, spread


def stellar_fidelity(
    psi: FockState,
    n: int,
    opts: OptimizerOptions | None = None,
    warm=None,
    rebuild: Callable[[int], FockState] | None = None,
) -> FidelityResult:
    """Best value of ``sum_{|p| <= n} |<p|G psi>|^2`` over Euler-form circuits.

    ``rebuild(cutoff)`` regenerates the state at another cutoff; when given,
    the optimum is re-scored ``opts.rescore_extra`` levels higher and the
    search is repeated at the larger cutoff if the value moves by more than
    ``opts.rescore_tol``.
    """
    opts = opts or OptimizerOptions()
    if n < 0:
        raise ValueError("n must be non-negative")
    value, x, starts, evals, spread = _optimize(psi, n, opts, warm)
    escalations = 0
    while rebuild is not None:
        bigger = rebuild(psi.cutoff + opts.rescore_extra)
        rescored = Objective(bigger, n, opts.r_max)(x)
        if abs(rescored - value) <= opts.rescore_tol or escalations >= opts.max_escalations:
            break
        psi, escalations = bigger, escalations + 1
        value, x, starts, evals, spread = _optimize(psi, n, opts, x)
    circuit = GaussianCircuit.from_vector(psi.modes, x, opts.r_max)
    return FidelityResult(n, min(value, 1.0), circuit, starts, evals, spread, psi.cutoff, escalations)


# --- profiles -------------------------------------------------------------------


@dataclass
class StellarProfile:
    """Stellar fidelities ``f_0 .. f_{n_max}`` with per-entry diagnostics."""

    values: list[float]
    state_id: str = ""
    declared_rank: float = INF_RANK
    entries: list[FidelityResult] = field(default_factory=list)
    seed: int | None = None
    opts: dict = field(default_factory=dict)
    spread_tol: float = 1e-4

    @property
    def n_max(self) -> int:
        return len(self.values) - 1

    @property
    def spreads(self) -> list[float]:
        if self.entries:
            return [e.spread for e in self.entries]
        return [0.0] * len(self.values)

    @property
    def flags(self) -> list[bool]:
        return [s > self.spread_tol for s in self.spreads]

    def value(self, n: int) -> float | None:
        """``f_n``; ``None`` beyond the cap unless the declared rank pins it to 1."""
        if n <= self.n_max:
            return self.values[n]
        if n >= self.declared_rank:
            return 1.0
        return None

    def to_json(self) -> dict:
        rank = None if math.isinf(self.declared_rank) else int(self.declared_rank)
        return {
            "state": self.state_id,
            "declared_rank": rank,
            "n_max": self.n_max,
            "values": list(self.values),
            "flags": self.flags,
            "spreads": self.spreads,
            "seed": self.seed,
            "opts": self.opts,
            "entries": [e.to_json() for e in self.entries],
        }

    @classmethod
    def from_json(cls, data: dict) -> StellarProfile:
        rank = data.get("declared_rank")
        entries = []
        for e in data.get("entries", []):
            entries.append(
                FidelityResult(
                    e["n"], e["value"], GaussianCircuit.from_json(e["circuit"]), e["starts"],
                    e["evaluations"], e["spread"], e["cutoff"], e.get("escalations", 0),
                )
            )
        return cls(
            values=[float(v) for v in data["values"]],
            state_id=data.get("state", ""),
            declared_rank=INF_RANK if rank is None else rank,
            entries=entries,
            seed=data.get("seed"),
            opts=data.get("opts", {}),
        )

    def csv_rows(self) -> list[tuple[int, float]]:
        return list(enumerate(self.values))


def profile(
    psi: FockState,
    n_max: int,
    opts: OptimizerOptions | None = None,
    state_id: str = "",
    declared_rank: float = INF_RANK,
    rebuild: Callable[[int], FockState] | None = None,
) -> StellarProfile:
    """Stellar fidelities for ``n = 0 .. n_max``.

    Each ``n`` is warm-started from the previous optimum and the running
    maximum is enforced, so the values are non-decreasing.  Entries at or
    above a finite ``declared_rank`` are still optimized (the identity start
    reaches 1 there) so the terminal value is checked rather than assumed.
    """
    opts = opts or OptimizerOptions()
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    entries, values = [], []
    warm, running = None, 0.0
    for n in range(n_max + 1):
        res = stellar_fidelity(psi, n, opts, warm=warm, rebuild=rebuild)
        if res.value < running and entries:
            prev = entries[-1]
            res = FidelityResult(n, running, prev.circuit, res.starts, res.evaluations, res.spread, res.cutoff, res.escalations)
        running = max(running, res.value)
        entries.append(res)
        values.append(res.value)
        warm = res.circuit.to_vector()
    return StellarProfile(values, state_id, declared_rank, entries, opts.seed, opts.to_json(), opts.spread_tol)


# --- approximate stellar rank -------------------------------------------------


@dataclass(frozen=True)
class ApproxRankFunction:
    """Right-continuous non-increasing step function ``eps -> r_eps``.

    ``breakpoints[i] = (threshold, rank)`` means ``r_eps = rank`` for
    ``eps >= threshold`` up to the next threshold.  ``censored`` marks the
    first step as "at least ``n_max + 1``".
    """

    breakpoints: tuple
    censored: bool = False

    def __call__(self, eps: float) -> int:
        if not 0.0 <= eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")
        rank = self.breakpoints[0][1]
        for threshold, r in self.breakpoints:
            if eps >= threshold:
                rank = r
        return rank

    def thresholds(self) -> list[float]:
        return [t for t, _ in self.breakpoints[1:]]

    def to_json(self) -> dict:
        return {"breakpoints": [list(b) for b in self.breakpoints], "censored": self.censored}


def approx_rank_from_profile(p: StellarProfile, tol: float = 1e-6) -> ApproxRankFunction:
    """Read ``r_eps`` off a profile: ``r_eps <= n  <=>  1 - eps <= f_n``.

    ``r_eps = n`` on ``[1 - f_n, 1 - f_{n-1})``; ranks whose fidelity already
    equals the next one collapse.  Values within ``tol`` of 1 count as 1.
    """
    vals = [1.0 if v >= 1.0 - tol else float(v) for v in p.values]
    top = next((n for n, v in enumerate(vals) if v >= 1.0), None)
    censored = top is None
    if censored:
        top = p.n_max + 1
    steps = [(0.0, top)]
    for n in range(min(top, p.n_max + 1) - 1, -1, -1):
        threshold = 1.0 - vals[n]
        if threshold <= steps[-1][0]:
            steps[-1] = (steps[-1][0], n)
        else:
            steps.append((threshold, n))
    return ApproxRankFunction(tuple(steps), censored)


def subadditive_profile_bound(single: StellarProfile, k: int) -> list[tuple[int, float]]:
    """Lower bounds on ``f_{kn}(psi^{(x)k})`` from one copy: ``1 - k (1 - f_n(psi))``, clamped."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return [(k * n, min(1.0, max(0.0, 1.0 - k * (1.0 - f)))) for n, f in enumerate(single.values)]
