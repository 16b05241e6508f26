"""Constructors for the state families used in conversion studies.

Every constructor returns a normalized :class:`FockState` whose ``norm_leak``
holds the mass of the untruncated definition lying above the cutoff (or, for
states defined through a truncated generator, the mass cropped away from the
padded construction).  Passing ``cutoff=None`` picks the smallest cutoff (at
least the single-mode default) that keeps the leak below ``tail_tol``.

Quadratures use ``x = (a + a^dag) / sqrt(2)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .errors import ParameterRangeError, SpecError, TruncationError
from .fock import DEFAULT_CUTOFF, TAIL_TOL, FockState, normalize_amplitudes
from .gaussian import LEAK_TOL, R_MAX, gaussian_rows

INF_RANK = math.inf
GENERATOR_PAD = 20
MAX_AUTO_CUTOFF = 4000
TRISQUEEZED_CUTOFF = 60
TRISQUEEZED_LEAK_TOL = 1e-3


def _single(amps: np.ndarray, leak: float) -> FockState:
    return FockState(1, amps.size - 1, normalize_amplitudes(amps), leak)


def _tail_cutoff(weights: np.ndarray, tail_tol: float, floor: int) -> int:
    """Smallest cutoff whose tail mass (relative to the total) is <= tail_tol."""
    total = weights.sum()
    tail = total - np.cumsum(weights)
    ok = np.flatnonzero(tail <= tail_tol * total)
    if ok.size == 0:
        raise TruncationError("state needs a larger cutoff than the search range", float(tail[-1] / total))
    return max(int(ok[0]), floor)


def _check_leak(leak: float, tol: float, what: str, cutoff: int):
    if leak > tol:
        raise TruncationError(f"{what}: {leak:.3g} of the mass lies above cutoff {cutoff}", leak)


# --- finite-rank families -----------------------------------------------------


def make_fock(n: int, cutoff: int | None = None) -> FockState:
    cutoff = max(DEFAULT_CUTOFF[1], n) if cutoff is None else cutoff
    if n < 0 or n > cutoff:
        raise SpecError(f"Fock index {n} outside [0, {cutoff}]")
    amps = np.zeros(cutoff + 1, dtype=np.complex128)
    amps[n] = 1.0
    return FockState(1, cutoff, amps)


def make_superposition(terms, cutoff: int | None = None) -> FockState:
    """Normalized ``sum amp_k |n_k>`` from ``(amp, n)`` pairs."""
    terms = [(complex(a), int(n)) for a, n in terms]
    if not terms:
        raise SpecError("superposition needs at least one term")
    top = max(n for _, n in terms)
    cutoff = max(DEFAULT_CUTOFF[1], top) if cutoff is None else cutoff
    if top > cutoff or min(n for _, n in terms) < 0:
        raise SpecError(f"Fock indices must lie in [0, {cutoff}]")
    amps = np.zeros(cutoff + 1, dtype=np.complex128)
    for a, n in terms:
        amps[n] += a
    if not np.any(amps):
        raise SpecError("superposition amplitudes cancel to zero")
    return _single(amps, 0.0)


def make_binomial(order: int = 1, spacing: int = 1, logical: int = 0, cutoff: int | None = None) -> FockState:
    """Binomial code word ``sum_p sqrt(C(order+1, p)) |p (spacing+1)>`` over even/odd ``p``.

    ``order=1, spacing=1, logical=0`` gives ``(|0> + |4>)/sqrt(2)``.
    """
    if logical not in (0, 1):
        raise SpecError("logical must be 0 or 1")
    terms = [
        (math.sqrt(math.comb(order + 1, p)), p * (spacing + 1))
        for p in range(order + 2)
        if p % 2 == logical
    ]
    return make_superposition(terms, cutoff)


# --- Gaussian and infinite-rank families ---------------------------------------


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Untruncated coefficients ``e^{-|a|^2/2} a^n / sqrt(n!)`` for ``n <= cutoff``."""
    n = np.arange(cutoff + 1)
    if alpha == 0:
        out = np.zeros(cutoff + 1, dtype=np.complex128)
        out[0] = 1.0
        return out
    logmag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def _poisson_weights(mean: float) -> np.ndarray:
    top = int(mean + 12 * math.sqrt(mean + 1) + 40)
    n = np.arange(top + 1)
    with np.errstate(divide="ignore"):
        logp = -mean + n * (math.log(mean) if mean > 0 else -np.inf) - gammaln(n + 1)
    logp[0] = -mean
    return np.exp(logp)


def _poisson_cutoff(mean: float, tail_tol: float) -> int:
    return _tail_cutoff(_poisson_weights(mean), tail_tol, DEFAULT_CUTOFF[1])


def make_coherent(alpha: complex, cutoff: int | None = None, tail_tol: float = TAIL_TOL) -> FockState:
    alpha = complex(alpha)
    if cutoff is None:
        cutoff = _poisson_cutoff(abs(alpha) ** 2, tail_tol)
    amps = coherent_amplitudes(alpha, cutoff)
    leak = max(0.0, 1.0 - float(np.sum(np.abs(amps) ** 2)))
    _check_leak(leak, tail_tol, "coherent state", cutoff)
    return _single(amps, leak)


def make_cat(alpha: float, parity: str = "odd", cutoff: int | None = None, tail_tol: float = TAIL_TOL) -> FockState:
    """Cat state proportional to ``|alpha> + |-alpha>`` (even) or ``|alpha> - |-alpha>`` (odd)."""
    if parity not in ("even", "odd"):
        raise SpecError(f"parity must be 'even' or 'odd', got {parity!r}")
    alpha = float(alpha)
    if not alpha > 0:
        raise SpecError("cat amplitude must be real and positive")
    sign = 1.0 if parity == "even" else -1.0
    norm2 = 2.0 * (1.0 + sign * math.exp(-2 * alpha * alpha))
    if norm2 < 1e-14:
        raise SpecError(f"odd cat with alpha={alpha} is numerically degenerate")
    if cutoff is None:
        # parity filtering doubles the surviving weights, so size on those
        w = _poisson_weights(alpha * alpha)
        w = w * (1.0 + sign * (-1.0) ** np.arange(w.size)) ** 2
        cutoff = _tail_cutoff(w, tail_tol, DEFAULT_CUTOFF[1])
    n = np.arange(cutoff + 1)
    amps = coherent_amplitudes(alpha, cutoff) * (1.0 + sign * (-1.0) ** n)
    leak = max(0.0, 1.0 - float(np.sum(np.abs(amps) ** 2)) / norm2)
    _check_leak(leak, tail_tol, "cat state", cutoff)
    return _single(amps, leak)


def hermite_functions(xs: np.ndarray, nmax: int) -> np.ndarray:
    """Normalized Hermite functions ``<n|x>`` for ``n <= nmax``, shape ``(nmax+1, len(xs))``.

    The forward recurrence runs on mantissas with a separate log scale so that
    peaks far from the origin do not underflow before they matter.
    """
    xs = np.asarray(xs, dtype=float)
    out = np.zeros((nmax + 1, xs.size))
    logscale = -0.5 * xs * xs
    prev = np.zeros_like(xs)
    cur = np.full_like(xs, math.pi ** -0.25)
    out[0] = cur * np.exp(logscale)
    for n in range(nmax):
        nxt = math.sqrt(2.0 / (n + 1)) * xs * cur - math.sqrt(n / (n + 1)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > 1e100
        if big.any():
            cur[big] *= 1e-100
            prev[big] *= 1e-100
            logscale[big] += 100 * math.log(10)
        with np.errstate(under="ignore"):
            out[n + 1] = cur * np.exp(logscale)
    return out


def gkp_amplitudes(delta: float, nmax: int, logical: int = 0, peak_tol: float = 1e-12) -> np.ndarray:
    """Unnormalized ``<n| e^{-delta^2 n} sum_s |x = (2s + logical) sqrt(pi)>``."""
    eps = delta * delta
    spacing = 2 * math.sqrt(math.pi)
    # e^{-eps n}|x> has squared norm proportional to exp(-tanh(eps) x^2)
    reach = math.sqrt(math.log(1.0 / peak_tol) / math.tanh(eps))
    smax = int(reach / spacing) + 2
    xs = (np.arange(-smax, smax + 1) * 2 + logical) * math.sqrt(math.pi)
    xs = xs[np.exp(-math.tanh(eps) * xs * xs) > peak_tol]
    comb = hermite_functions(xs, nmax).sum(axis=1)
    return comb * np.exp(-eps * np.arange(nmax + 1))


def gkp_tail(delta: float, cutoff: int, logical: int = 0) -> float:
    """Mass of the finite-energy GKP state above ``cutoff``."""
    nbig = max(cutoff, int(40.0 / (2 * delta * delta))) + 50
    w = gkp_amplitudes(delta, nbig, logical) ** 2
    return float(w[cutoff + 1 :].sum() / w.sum())


def make_gkp(delta: float, logical: int = 0, cutoff: int | None = None, tail_tol: float = TAIL_TOL) -> FockState:
    """Finite-energy square-grid GKP code word ``e^{-delta^2 n} |logical>``."""
    if not 0 < delta < 1:
        raise ParameterRangeError("GKP delta must lie in (0, 1)")
    if logical not in (0, 1):
        raise SpecError("logical must be 0 or 1")
    nbig = int(40.0 / (2 * delta * delta)) + 50
    if cutoff is not None:
        nbig = max(nbig, cutoff)
    full = gkp_amplitudes(delta, nbig, logical)
    w = full**2
    if cutoff is None:
        cutoff = _tail_cutoff(w, tail_tol, DEFAULT_CUTOFF[1])
    leak = float(w[cutoff + 1 :].sum() / w.sum())
    _check_leak(leak, tail_tol, f"GKP(delta={delta})", cutoff)
    return _single(full[: cutoff + 1].astype(np.complex128), leak)


def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim)), 1)


def _generator_state(gen: np.ndarray, start: np.ndarray, cutoff: int, leak_tol: float, what: str) -> FockState:
    """``exp(gen) start`` on a padded space, cropped to ``cutoff``."""
    full = expm(gen) @ start
    kept = full[: cutoff + 1]
    # start holds exact (unit-norm) coefficients, so whatever is missing from kept leaked
    leak = max(0.0, 1.0 - float(np.vdot(kept, kept).real))
    _check_leak(leak, leak_tol, what, cutoff)
    return _single(kept, leak)


def _auto_generator_cutoff(build) -> FockState:
    cutoff = DEFAULT_CUTOFF[1]
    while True:
        try:
            return build(cutoff)
        except TruncationError:
            if cutoff >= MAX_AUTO_CUTOFF // 4:
                raise
            cutoff *= 2


def make_trisqueezed(t: complex, cutoff: int | None = None, leak_tol: float = TRISQUEEZED_LEAK_TOL) -> FockState:
    """``exp(t a^dag^3 - t^* a^3)|0>`` through the generator truncated ``GENERATOR_PAD`` levels higher.

    Cubic squeezing has no normalizable infinite-dimensional limit: the Fock
    weights of the truncated construction develop a slowly decaying tail that
    keeps moving outward as the truncation grows.  The state is therefore
    defined by its truncation (default cutoff 60), and the leak is the weight
    found in the padding, checked against a looser family tolerance.
    """
    t = complex(t)
    cutoff = TRISQUEEZED_CUTOFF if cutoff is None else cutoff
    dim = cutoff + 1 + GENERATOR_PAD
    a = _ladder(dim)
    a3 = a @ a @ a
    gen = t * a3.T - t.conjugate() * a3
    start = np.zeros(dim, dtype=np.complex128)
    start[0] = 1.0
    return _generator_state(gen, start, cutoff, leak_tol, f"trisqueezed(t={t})")


def make_cubic_phase(c: float, r: float = 0.0, cutoff: int | None = None, leak_tol: float = LEAK_TOL) -> FockState:
    """``exp(i c x^3) S(r)|0>`` with ``x = (a + a^dag)/sqrt(2)``."""
    if abs(r) > R_MAX:
        raise ParameterRangeError(f"|r| = {abs(r)} exceeds r_max = {R_MAX}")
    if cutoff is None:
        return _auto_generator_cutoff(lambda k: make_cubic_phase(c, r, k, leak_tol))
    dim = cutoff + 1 + GENERATOR_PAD
    a = _ladder(dim)
    x = (a + a.T) / math.sqrt(2)
    squeezed = _squeezed_vacuum(r, dim)
    return _generator_state(1j * c * (x @ x @ x), squeezed, cutoff, leak_tol, f"cubic_phase(c={c}, r={r})")


def _squeezed_vacuum(r: float, dim: int) -> np.ndarray:
    """``<n|S(r)|0>`` for ``n < dim`` (exact coefficients, not renormalized)."""
    return gaussian_rows(r, 0.0, 0j, dim, 1)[:, 0]


# --- specs ---------------------------------------------------------------------------

FAMILIES = ("fock", "coherent", "cat", "gkp", "trisqueezed", "cubic_phase", "binomial", "superposition")


@dataclass(frozen=True)
class StateSpec:
    """Family name plus parameters; ``build`` turns it into a state."""

    family: str
    params: dict = field(default_factory=dict)
    cutoff: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpecError(f"unknown state family {self.family!r}; choose from {', '.join(FAMILIES)}")

    @property
    def declared_rank(self) -> float:
        p = self.params
        if self.family == "fock":
            return int(p["n"])
        if self.family == "coherent":
            return 0
        if self.family == "superposition":
            return max(int(n) for a, n in p["terms"] if complex(*a if isinstance(a, list) else (a,)) != 0)
        if self.family == "binomial":
            order, spacing, logical = int(p.get("order", 1)), int(p.get("spacing", 1)), int(p.get("logical", 0))
            return max(q * (spacing + 1) for q in range(order + 2) if q % 2 == logical)
        return INF_RANK

    def build(self, cutoff: int | None = None) -> FockState:
        cutoff = self.cutoff if cutoff is None else cutoff
        p = self.params
        try:
            if self.family == "fock":
                return make_fock(int(p["n"]), cutoff)
            if self.family == "coherent":
                return make_coherent(_complex(p["alpha"]), cutoff)
            if self.family == "cat":
                return make_cat(float(p["alpha"]), p.get("parity", "odd"), cutoff)
            if self.family == "gkp":
                return make_gkp(float(p["delta"]), int(p.get("logical", 0)), cutoff)
            if self.family == "trisqueezed":
                return make_trisqueezed(_complex(p["t"]), cutoff)
            if self.family == "cubic_phase":
                return make_cubic_phase(float(p["c"]), float(p.get("r", 0.0)), cutoff)
            if self.family == "binomial":
                return make_binomial(int(p.get("order", 1)), int(p.get("spacing", 1)), int(p.get("logical", 0)), cutoff)
            terms = [(_complex(a), int(n)) for a, n in p["terms"]]
            return make_superposition(terms, cutoff)
        except KeyError as exc:
            raise SpecError(f"{self.family}: missing parameter {exc.args[0]!r}") from None

    @property
    def id(self) -> str:
        inner = ",".join(f"{k}={_fmt(v)}" for k, v in sorted(self.params.items()))
        return f"{self.family}({inner})"

    def to_json(self) -> dict:
        out = {"family": self.family, **self.params}
        if self.cutoff is not None:
            out["cutoff"] = self.cutoff
        return out

    @classmethod
    def from_json(cls, data: dict) -> StateSpec:
        data = dict(data)
        try:
            family = data.pop("family")
        except KeyError:
            raise SpecError("state spec needs a 'family' field") from None
        cutoff = data.pop("cutoff", None)
        return cls(family, data, None if cutoff is None else int(cutoff))

    @classmethod
    def parse(cls, text: str) -> StateSpec:
        """Parse ``family:arg[:arg...]`` shorthand, e.g. ``fock:2``, ``cat:3:odd``, ``gkp:0.1``.

        ``superposition`` takes ``amp@n`` terms: ``superposition:0.9@0:0.1@3``.
        A path to a JSON spec file is also accepted.
        """
        text = text.strip()
        if text.endswith(".json") and Path(text).exists():
            return cls.from_json(json.loads(Path(text).read_text()))
        head, *args = text.split(":")
        family = {"cubic": "cubic_phase", "tri": "trisqueezed"}.get(head, head)
        try:
            if family == "fock":
                return cls(family, {"n": int(args[0])})
            if family == "coherent":
                return cls(family, {"alpha": args[0]})
            if family == "cat":
                return cls(family, {"alpha": float(args[0]), "parity": args[1] if len(args) > 1 else "odd"})
            if family == "gkp":
                return cls(family, {"delta": float(args[0]), "logical": int(args[1]) if len(args) > 1 else 0})
            if family == "trisqueezed":
                return cls(family, {"t": args[0]})
            if family == "cubic_phase":
                return cls(family, {"c": float(args[0]), "r": float(args[1]) if len(args) > 1 else 0.0})
            if family == "binomial":
                keys = ("order", "spacing", "logical")
                return cls(family, {k: int(v) for k, v in zip(keys, args)})
            if family == "superposition":
                terms = []
                for term in args:
                    amp, n = term.split("@")
                    terms.append([amp, int(n)])
                return cls(family, {"terms": terms})
        except (IndexError, ValueError) as exc:
            raise SpecError(f"cannot parse state spec {text!r}: {exc}") from None
        raise SpecError(f"unknown state family in {text!r}")


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", ""))
    return complex(v)


def _fmt(v) -> str:
    if isinstance(v, list):
        return "[" + ";".join(_fmt(x) for x in v) + "]"
    return str(v)
