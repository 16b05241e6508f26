"""Fock-basis action of Gaussian unitaries.

Conventions (generators taken verbatim):

* ``D(a) = exp(a a^dag - a^* a)``
* ``S(xi) = exp((xi a^dag^2 - xi^* a^2) / 2)`` with ``xi = r e^{i theta}``
* ``R(phi) = exp(i phi a^dag a)``
* ``BS(theta) = exp(theta (a_1^dag a_2 - a_1 a_2^dag))``, so that
  ``|1,0> -> cos(theta) |1,0> - sin(theta) |0,1>``.

Displacement and squeezing matrix elements are the *untruncated* values
``<m|S D|n>``, generated from the Bargmann kernel of ``S D`` by a three-term
recurrence.  Truncating a state therefore never corrupts the elements
themselves; mass pushed past a cutoff shows up as a norm deficit.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import CapacityError, DimensionError, ParameterRangeError, TruncationError
from .fock import MAX_ENTRIES, FockState, total_photons

R_MAX = 3.0
LEAK_TOL = 1e-6
MESH_ID = "rect-bs-phase-v1"


# --- single-mode matrix elements -------------------------------------------


def sd_kernel(r: float, theta: float, alpha: complex):
    """Bargmann kernel ``(C, A, b)`` of ``S(r e^{i theta}) D(alpha)``.

    ``sum_{m,n} <m|S D|n> z^m w^n / sqrt(m! n!) = C exp(q/2 + b.(z, w))``
    with ``q = A00 z^2 + 2 A01 z w + A11 w^2``.
    """
    ch, sh, th = math.cosh(r), math.sinh(r), math.tanh(r)
    sech = 1.0 / ch
    eth = cmath.exp(1j * theta)
    beta = alpha * ch + alpha.conjugate() * eth * sh
    bc = beta.conjugate()
    const = math.sqrt(sech) * cmath.exp(-0.5 * abs(beta) ** 2 + 0.5 * eth * th * bc * bc)
    a00, a01, a11 = eth * th, sech, -th * eth.conjugate()
    b0, b1 = beta - eth * th * bc, -sech * bc
    return const, (a00, a01, a11), (b0, b1)


def gaussian_rows(r: float, theta: float, alpha: complex, rows: int, cols: int) -> np.ndarray:
    """Matrix ``<m|S(r e^{i theta}) D(alpha)|n>`` for ``m < rows``, ``n < cols``."""
    const, (a00, a01, a11), (b0, b1) = sd_kernel(float(r), float(theta), complex(alpha))
    sq = np.sqrt(np.arange(max(rows, cols) + 1, dtype=np.float64))
    out = np.zeros((rows, cols), dtype=np.complex128)
    # row 0 is a scalar recurrence; a Python loop beats tiny numpy calls here
    row0 = [0j] * cols
    prev, cur = 0j, const
    row0[0] = cur
    for j in range(cols - 1):
        nxt = (b1 * cur + a11 * sq[j] * prev) / sq[j + 1]
        prev, cur = cur, nxt
        row0[j + 1] = cur
    out[0] = row0
    if rows > 1:
        shift = np.zeros(cols, dtype=np.complex128)
        for m in range(rows - 1):
            shift[1:] = sq[1:cols] * out[m, :-1]
            nxt = b0 * out[m] + a01 * shift
            if m > 0:
                nxt += a00 * sq[m] * out[m - 1]
            out[m + 1] = nxt / sq[m + 1]
    return out


def displacement_matrix(alpha: complex, cutoff: int) -> np.ndarray:
    """``<n|D(alpha)|k>`` for ``n, k <= cutoff``."""
    if not cmath.isfinite(complex(alpha)):
        raise ParameterRangeError("displacement must be finite")
    return gaussian_rows(0.0, 0.0, complex(alpha), cutoff + 1, cutoff + 1)


def squeezing_matrix(r: float, phase: float, cutoff: int, r_max: float = R_MAX) -> np.ndarray:
    """``<n|S(r e^{i phase})|k>`` for ``n, k <= cutoff``."""
    if abs(r) > r_max:
        raise ParameterRangeError(f"|r| = {abs(r)} exceeds r_max = {r_max}")
    return gaussian_rows(float(r), float(phase), 0j, cutoff + 1, cutoff + 1)


def rotation_matrix(phi: float, cutoff: int) -> np.ndarray:
    return np.diag(np.exp(1j * phi * np.arange(cutoff + 1)))


# --- beamsplitter -----------------------------------------------------------


@lru_cache(maxsize=512)
def _bs_eigen(s: int):
    """Eigendecomposition of ``i K`` on the ``s``-photon stratum ``|k, s-k>``."""
    k = np.arange(s)
    gen = np.zeros((s + 1, s + 1))
    vals = np.sqrt((k + 1.0) * (s - k))
    gen[k + 1, k] = vals
    gen[k, k + 1] = -vals
    lam, vec = np.linalg.eigh(1j * gen)
    lam.setflags(write=False)
    vec.setflags(write=False)
    return lam, vec


def beamsplitter_block(theta: float, s: int) -> np.ndarray:
    """``BS(theta)`` restricted to the stratum with ``s`` photons (basis ``k = 0..s``)."""
    lam, vec = _bs_eigen(s)
    return (vec * np.exp(-1j * theta * lam)) @ vec.conj().T


def _apply_bs_array(amps: np.ndarray, theta: float, i: int, j: int) -> np.ndarray:
    """Exact beamsplitter on axes ``(i, j)``; the cutoff must hold every stratum present."""
    if theta == 0.0:
        return amps
    dim = amps.shape[0]
    moved = np.moveaxis(amps, (i, j), (-2, -1))
    lead = moved.shape[:-2]
    flat = moved.reshape(-1, dim, dim)
    out = np.zeros_like(flat)
    pair_tot = np.add.outer(np.arange(dim), np.arange(dim))
    present = np.abs(flat).max(axis=0) > 0
    top = int(pair_tot[present].max()) if present.any() else 0
    for s in range(top + 1):
        ks = np.arange(max(0, s - dim + 1), min(s, dim - 1) + 1)
        if ks.size != s + 1:
            raise TruncationError("beamsplitter stratum exceeds the cutoff")
        sub = flat[:, ks, s - ks]
        if not sub.any():
            continue
        out[:, ks, s - ks] = sub @ beamsplitter_block(theta, s).T
    return np.moveaxis(out.reshape(lead + (dim, dim)), (-2, -1), (i, j))


def _apply_phase_array(amps: np.ndarray, phi: float, mode: int) -> np.ndarray:
    if phi == 0.0:
        return amps
    dim = amps.shape[mode]
    shape = [1] * amps.ndim
    shape[mode] = dim
    return amps * np.exp(1j * phi * np.arange(dim)).reshape(shape)


def _pad_for_passive(psi: FockState, max_entries: int) -> FockState:
    top = psi.max_photons()
    if top <= psi.cutoff or psi.modes == 1:
        return psi
    if (top + 1) ** psi.modes > max_entries:
        raise CapacityError(f"passive layer needs cutoff {top} on {psi.modes} modes")
    return psi.padded(top)


def beamsplitter_apply(theta: float, psi: FockState, modes=(0, 1), max_entries: int = MAX_ENTRIES) -> FockState:
    """Apply ``BS(theta)`` to the mode pair ``modes``.

    The result is exact: if the state carries more photons than its cutoff
    can hold in a single mode, the cutoff grows accordingly.
    """
    i, j = modes
    if i == j or not (0 <= i < psi.modes and 0 <= j < psi.modes):
        raise DimensionError(f"invalid mode pair {modes} for a {psi.modes}-mode state")
    psi = _pad_for_passive(psi, max_entries)
    return FockState(psi.modes, psi.cutoff, _apply_bs_array(psi.amps, theta, i, j), psi.norm_leak)


# --- circuits -----------------------------------------------------------------


def mesh_pairs(modes: int) -> list[tuple[int, int]]:
    """Rectangular nearest-neighbour mesh: ``modes`` layers, alternating parity."""
    pairs = []
    for layer in range(modes):
        for i in range(layer % 2, modes - 1, 2):
            pairs.append((i, i + 1))
    return pairs


def n_passive(modes: int) -> int:
    return modes * modes


@dataclass(frozen=True)
class GaussianCircuit:
    """Gaussian unitary ``S D U`` in Euler form.

    ``passive`` holds ``modes`` input phases followed by one
    ``(theta, phi)`` pair per mesh beamsplitter, where ``phi`` is a phase on
    the first mode of the pair applied right after the beamsplitter.  For two
    modes this is ``[phi_0, phi_1, theta, chi]``.
    """

    modes: int
    passive: tuple = ()
    alphas: tuple = ()
    rs: tuple = ()
    mesh: str = MESH_ID
    r_max: float = field(default=R_MAX, compare=False)

    def __post_init__(self):
        m = self.modes
        passive = tuple(float(x) for x in self.passive) or (0.0,) * n_passive(m)
        alphas = tuple(complex(a) for a in self.alphas) or (0j,) * m
        rs = tuple(float(r) for r in self.rs) or (0.0,) * m
        if len(passive) != n_passive(m) or len(alphas) != m or len(rs) != m:
            raise DimensionError("circuit parameter lengths do not match the mode count")
        if any(abs(r) > self.r_max for r in rs):
            raise ParameterRangeError(f"squeezing {rs} exceeds r_max = {self.r_max}")
        object.__setattr__(self, "passive", passive)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "rs", rs)

    @classmethod
    def identity(cls, modes: int) -> GaussianCircuit:
        return cls(modes)

    @property
    def n_params(self) -> int:
        return n_passive(self.modes) + 3 * self.modes

    def to_vector(self) -> np.ndarray:
        a = np.array(self.alphas)
        return np.concatenate([self.passive, a.real, a.imag, self.rs])

    @classmethod
    def from_vector(cls, modes: int, x, r_max: float = R_MAX) -> GaussianCircuit:
        x = np.asarray(x, dtype=float)
        k = n_passive(modes)
        alphas = x[k : k + modes] + 1j * x[k + modes : k + 2 * modes]
        return cls(modes, tuple(x[:k]), tuple(alphas), tuple(x[k + 2 * modes : k + 3 * modes]), r_max=r_max)

    def to_json(self) -> dict:
        return {
            "modes": self.modes,
            "passive": list(self.passive),
            "alphas": [[a.real, a.imag] for a in self.alphas],
            "rs": list(self.rs),
            "mesh": self.mesh,
        }

    @classmethod
    def from_json(cls, data: dict) -> GaussianCircuit:
        if data.get("mesh", MESH_ID) != MESH_ID:
            raise ValueError(f"unknown mesh {data['mesh']!r}")
        return cls(
            int(data["modes"]),
            tuple(data["passive"]),
            tuple(complex(re, im) for re, im in data["alphas"]),
            tuple(data["rs"]),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def apply_passive_array(amps: np.ndarray, modes: int, passive) -> np.ndarray:
    passive = list(passive)
    for mode in range(modes):
        amps = _apply_phase_array(amps, passive[mode], mode)
    pos = modes
    for i, j in mesh_pairs(modes):
        amps = _apply_bs_array(amps, passive[pos], i, j)
        amps = _apply_phase_array(amps, passive[pos + 1], i)
        pos += 2
    return amps


def passive_matrix(modes: int, passive) -> np.ndarray:
    """Mode transformation ``U a_i^dag U^dag = sum_j M[j, i] a_j^dag`` of the passive layer."""
    passive = list(passive)
    mat = np.diag(np.exp(1j * np.array(passive[:modes])))
    pos = modes
    for i, j in mesh_pairs(modes):
        c, s = math.cos(passive[pos]), math.sin(passive[pos])
        bs = np.eye(modes, dtype=complex)
        bs[i, i], bs[j, i], bs[i, j], bs[j, j] = c, -s, s, c
        ph = np.eye(modes, dtype=complex)
        ph[i, i] = cmath.exp(1j * passive[pos + 1])
        mat = ph @ bs @ mat
        pos += 2
    return mat


def apply_local_rows(amps: np.ndarray, mats) -> np.ndarray:
    """Contract one (rows x cols) matrix into each mode axis."""
    out = amps
    for mode, mat in enumerate(mats):
        out = np.moveaxis(np.tensordot(mat, out, axes=([1], [mode])), 0, mode)
    return out


def apply_circuit(
    g: GaussianCircuit,
    psi: FockState,
    out_cutoff: int | None = None,
    leak_tol: float = LEAK_TOL,
    max_entries: int = MAX_ENTRIES,
) -> FockState:
    """Return ``S D U |psi>`` truncated at ``out_cutoff`` (default: the input cutoff).

    Raises :class:`TruncationError` if more than ``leak_tol`` of the norm is
    pushed past the output cutoff; the returned state records the leak.
    """
    if g.modes != psi.modes:
        raise DimensionError(f"circuit acts on {g.modes} modes, state has {psi.modes}")
    out_cutoff = psi.cutoff if out_cutoff is None else out_cutoff
    if (out_cutoff + 1) ** psi.modes > max_entries:
        raise CapacityError(f"output needs {(out_cutoff + 1) ** psi.modes} entries")
    work = _pad_for_passive(psi, max_entries)
    amps = apply_passive_array(work.amps, work.modes, g.passive)
    cols = work.cutoff + 1
    mats = [gaussian_rows(r, 0.0, a, out_cutoff + 1, cols) for r, a in zip(g.rs, g.alphas)]
    out = apply_local_rows(amps, mats)
    before = work.norm_squared
    after = float(np.vdot(out, out).real)
    leak = max(0.0, 1.0 - after / before) if before > 0 else 0.0
    if leak > leak_tol:
        raise TruncationError(f"circuit pushed {leak:.3g} of the norm past cutoff {out_cutoff}", leak)
    return FockState(psi.modes, out_cutoff, out, psi.norm_leak + leak)


def photon_number_expectation(psi: FockState) -> float:
    probs = np.abs(psi.amps) ** 2
    return float((probs * total_photons(psi.modes, psi.cutoff)).sum())
