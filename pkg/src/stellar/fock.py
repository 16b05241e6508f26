"""Truncated Fock-space representation of pure multimode states.

A state on ``m`` modes with per-mode cutoff ``N`` is a complex tensor of shape
``(N + 1,) * m``; entry ``amps[n_1, ..., n_m]`` is the coefficient of
``|n_1, ..., n_m>``.  Flattening is always row-major (C order), which is also
the order used by the JSON file format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import comb
from pathlib import Path

import numpy as np

from .errors import CapacityError, DegenerateProjection, DimensionError

TAIL_TOL = 1e-10
MAX_ENTRIES = 20_000_000
DEFAULT_CUTOFF = {1: 40, 2: 25}


@dataclass(frozen=True)
class FockState:
    """Immutable pure state in a truncated Fock basis.

    ``norm_leak`` records ``1 - sum |amps|^2`` of the *untruncated* state when
    the constructor knows it (zero otherwise).
    """

    modes: int
    cutoff: int
    amps: np.ndarray = field(repr=False)
    norm_leak: float = 0.0

    def __post_init__(self):
        if self.modes < 1:
            raise DimensionError(f"modes must be >= 1, got {self.modes}")
        if self.cutoff < 0:
            raise DimensionError(f"cutoff must be >= 0, got {self.cutoff}")
        amps = np.array(self.amps, dtype=np.complex128)
        shape = (self.cutoff + 1,) * self.modes
        if amps.shape != shape:
            raise DimensionError(f"amplitude tensor has shape {amps.shape}, expected {shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def max_photons(self, tol: float = 0.0) -> int:
        """Largest total photon number carrying an amplitude above ``tol``."""
        totals = total_photons(self.modes, self.cutoff)
        mask = np.abs(self.amps) > tol
        return int(totals[mask].max()) if mask.any() else 0

    def mean_photons(self) -> float:
        probs = np.abs(self.amps) ** 2
        return float((probs * total_photons(self.modes, self.cutoff)).sum() / probs.sum())

    def padded(self, cutoff: int) -> FockState:
        """Same state embedded at a larger cutoff (zeros appended)."""
        if cutoff < self.cutoff:
            raise DimensionError("padded() cannot shrink a state; use cropped()")
        if cutoff == self.cutoff:
            return self
        out = np.zeros((cutoff + 1,) * self.modes, dtype=np.complex128)
        out[(slice(0, self.cutoff + 1),) * self.modes] = self.amps
        return FockState(self.modes, cutoff, out, self.norm_leak)

    def cropped(self, cutoff: int) -> FockState:
        """Restriction to a smaller cutoff; the dropped mass is added to ``norm_leak``."""
        if cutoff >= self.cutoff:
            return self.padded(cutoff)
        kept = self.amps[(slice(0, cutoff + 1),) * self.modes]
        lost = self.norm_squared - float(np.vdot(kept, kept).real)
        return FockState(self.modes, cutoff, kept, self.norm_leak + max(lost, 0.0))

    def normalized(self) -> FockState:
        """Unit-norm copy with the first nonzero amplitude made real-positive."""
        return FockState(self.modes, self.cutoff, normalize_amplitudes(self.amps), self.norm_leak)

    def to_json(self) -> dict:
        flat = self.amps.ravel()
        return {
            "modes": self.modes,
            "cutoff": self.cutoff,
            "amps": [[float(a.real), float(a.imag)] for a in flat],
            "norm_leak": float(self.norm_leak),
        }

    @classmethod
    def from_json(cls, data: dict) -> FockState:
        modes, cutoff = int(data["modes"]), int(data["cutoff"])
        flat = np.array([complex(re, im) for re, im in data["amps"]], dtype=np.complex128)
        expected = (cutoff + 1) ** modes
        if flat.size != expected:
            raise DimensionError(f"state file has {flat.size} amplitudes, expected {expected}")
        return cls(modes, cutoff, flat.reshape((cutoff + 1,) * modes), float(data.get("norm_leak", 0.0)))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path) -> FockState:
        return cls.from_json(json.loads(Path(path).read_text()))


def normalize_amplitudes(amps: np.ndarray) -> np.ndarray:
    amps = np.asarray(amps, dtype=np.complex128)
    norm = np.sqrt(np.vdot(amps, amps).real)
    if norm == 0.0:
        raise DegenerateProjection("cannot normalize the zero vector")
    out = amps / norm
    flat = out.ravel()
    nz = np.flatnonzero(np.abs(flat) > 1e-12 * np.abs(flat).max())
    phase = flat[nz[0]] / abs(flat[nz[0]])
    return out / phase


def basis_state(index, cutoff: int) -> FockState:
    """``|n_1, ..., n_m>`` at the given cutoff."""
    index = tuple(int(i) for i in np.atleast_1d(index))
    if any(i < 0 or i > cutoff for i in index):
        raise DimensionError(f"photon numbers {index} exceed cutoff {cutoff}")
    amps = np.zeros((cutoff + 1,) * len(index), dtype=np.complex128)
    amps[index] = 1.0
    return FockState(len(index), cutoff, amps)


# --- multi-index bookkeeping -------------------------------------------------


@lru_cache(maxsize=64)
def total_photons(modes: int, cutoff: int) -> np.ndarray:
    """Tensor of ``|n| = n_1 + ... + n_m`` over the truncated index set."""
    grids = np.indices((cutoff + 1,) * modes)
    totals = grids.sum(axis=0)
    totals.setflags(write=False)
    return totals


@dataclass(frozen=True)
class MultiIndexOrder:
    """Row-major enumeration of multi-indices and its total-photon strata."""

    modes: int
    cutoff: int

    @property
    def indices(self) -> np.ndarray:
        return _multi_indices(self.modes, self.cutoff)

    def stratum(self, s: int) -> np.ndarray:
        """Flat (row-major) positions of all ``n`` with ``|n| == s``."""
        return _strata(self.modes, self.cutoff)[s]

    def stratum_size(self, s: int) -> int:
        """Untruncated stratum size ``C(s + m - 1, m - 1)``."""
        return comb(s + self.modes - 1, self.modes - 1)

    @property
    def max_total(self) -> int:
        return self.modes * self.cutoff


@lru_cache(maxsize=64)
def _multi_indices(modes: int, cutoff: int) -> np.ndarray:
    idx = np.array(list(np.ndindex(*(cutoff + 1,) * modes)), dtype=np.int64).reshape(-1, modes)
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=64)
def _strata(modes: int, cutoff: int) -> tuple:
    totals = total_photons(modes, cutoff).ravel()
    return tuple(np.flatnonzero(totals == s) for s in range(modes * cutoff + 1))


# --- primitives ---------------------------------------------------------------


def _common(a: FockState, b: FockState) -> tuple[np.ndarray, np.ndarray]:
    if a.modes != b.modes:
        raise DimensionError(f"mode mismatch: {a.modes} vs {b.modes}")
    cutoff = max(a.cutoff, b.cutoff)
    return a.padded(cutoff).amps, b.padded(cutoff).amps


def overlap(a: FockState, b: FockState) -> complex:
    """``<a|b>`` with the smaller state zero-padded."""
    x, y = _common(a, b)
    return complex(np.vdot(x, y))


def fidelity(a: FockState, b: FockState) -> float:
    """Pure-state fidelity ``|<a|b>|^2``."""
    return min(max(abs(overlap(a, b)) ** 2, 0.0), 1.0)


def trace_distance_pure(a: FockState, b: FockState) -> float:
    """Trace distance between pure states, ``sqrt(1 - F)``."""
    return float(np.sqrt(min(max(1.0 - fidelity(a, b), 0.0), 1.0)))


def tensor(a: FockState, b: FockState, max_entries: int = MAX_ENTRIES) -> FockState:
    """Tensor product ``a (x) b``; modes of ``b`` follow those of ``a``."""
    cutoff = max(a.cutoff, b.cutoff)
    modes = a.modes + b.modes
    if (cutoff + 1) ** modes > max_entries:
        raise CapacityError(
            f"tensor product needs {(cutoff + 1) ** modes} entries (budget {max_entries})"
        )
    x, y = a.padded(cutoff).amps, b.padded(cutoff).amps
    amps = np.multiply.outer(x, y)
    leak = 1.0 - (1.0 - a.norm_leak) * (1.0 - b.norm_leak)
    return FockState(modes, cutoff, amps, leak)


def tensor_power(psi: FockState, k: int, max_entries: int = MAX_ENTRIES) -> FockState:
    if k < 1:
        raise ValueError("k must be >= 1")
    out = psi
    for _ in range(k - 1):
        out = tensor(out, psi, max_entries)
    return out


def projection_weight(psi: FockState, n: int) -> float:
    """``<psi| Pi_n |psi>`` where ``Pi_n`` projects on at most ``n`` photons in total."""
    mask = total_photons(psi.modes, psi.cutoff) <= n
    return float(np.sum(np.abs(psi.amps[mask]) ** 2))


def project_rank(psi: FockState, n: int, strict: bool = False):
    """Restrict ``psi`` to total photon number ``<= n``.

    Returns ``(weight, projected)`` where ``projected`` is the normalized
    restriction, or ``None`` when the weight is below 1e-15.  With
    ``strict=True`` that case raises :class:`DegenerateProjection` instead.
    """
    if not 0 <= n <= psi.cutoff * psi.modes:
        raise ValueError(f"n must lie in [0, {psi.cutoff * psi.modes}], got {n}")
    mask = total_photons(psi.modes, psi.cutoff) <= n
    kept = np.where(mask, psi.amps, 0.0)
    weight = float(np.sum(np.abs(kept) ** 2))
    if weight < 1e-15:
        if strict:
            raise DegenerateProjection(f"projection onto <= {n} photons has weight {weight:.3g}")
        return weight, None
    return weight, FockState(psi.modes, psi.cutoff, normalize_amplitudes(kept))
