"""Single-mode Wigner functions on a square grid and the log-negativity ``log int |W|``.

Conventions: ``x = (a + a^dag)/sqrt(2)``, ``p = (a - a^dag)/(i sqrt(2))`` and
``int W dx dp = 1``, so the vacuum is ``exp(-x^2 - p^2)/pi``.  The log is
natural.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .errors import DimensionError, PrecisionError
from .fock import FockState
from .states import hermite_functions

DEFAULT_RESOLUTION = 801
CONVERGENCE_TOL = 1e-3
QUADRATURE_TOL = 1e-4
EDGE_TOL = 1e-10
MAX_GROWTH = 6


@dataclass
class WignerGrid:
    extent: float
    resolution: int
    values: np.ndarray = field(repr=False)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.extent, self.extent, self.resolution)

    def integrate(self, f: np.ndarray) -> float:
        ax = self.axis
        return float(simpson(simpson(f, x=ax, axis=1), x=ax))

    @property
    def total(self) -> float:
        return self.integrate(self.values)

    @property
    def abs_total(self) -> float:
        return self.integrate(np.abs(self.values))

    @property
    def edge_max(self) -> float:
        v = self.values
        return float(max(np.abs(v[0]).max(), np.abs(v[-1]).max(), np.abs(v[:, 0]).max(), np.abs(v[:, -1]).max()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "p", "w"])
        ax = self.axis
        for i, x in enumerate(ax):
            for j, p in enumerate(ax):
                w.writerow([repr(float(x)), repr(float(p)), repr(float(self.values[i, j]))])
        return buf.getvalue()


def default_extent(psi: FockState) -> float:
    return max(6.0, 4.0 * math.sqrt(psi.mean_photons() + 1.0))


def wigner_values(amps: np.ndarray, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``W(x, p)`` of ``sum_n amps[n] |n>`` at broadcastable arrays ``x``, ``p``.

    Builds the Wigner transforms of ``|m><n|`` one at a time with the
    Laguerre three-term recurrence in ``alpha = (x + i p)/sqrt(2)``, never
    storing more than one row of them.  Costs ``O(dim^2)`` passes over the
    points, so it serves scattered points; grids go through
    :func:`wigner_grid_values`.
    """
    amps = np.asarray(amps, dtype=np.complex128)
    dim = amps.size
    alpha = (x + 1j * p) / math.sqrt(2.0)
    rho = np.outer(amps, amps.conj())
    row = [np.exp(-2.0 * np.abs(alpha) ** 2) / math.pi]
    for n in range(1, dim):
        row.append(2.0 * alpha * row[n - 1] / math.sqrt(n))
    w = rho[0, 0].real * row[0]
    for n in range(1, dim):
        w = w + 2.0 * (rho[0, n] * row[n]).real
    for m in range(1, dim):
        prev_col = row[m].copy()
        row[m] = (2.0 * alpha.conj() * prev_col - math.sqrt(m) * row[m - 1]) / math.sqrt(m)
        w = w + (rho[m, m] * row[m]).real
        for n in range(m + 1, dim):
            nxt = (2.0 * alpha * row[n - 1] - math.sqrt(m) * prev_col) / math.sqrt(n)
            prev_col = row[n].copy()
            row[n] = nxt
            w = w + 2.0 * (rho[m, n] * row[n]).real
    return np.real(w)


def wigner(psi: FockState, extent: float | None = None, resolution: int = DEFAULT_RESOLUTION) -> WignerGrid:
    if psi.modes != 1:
        raise DimensionError("wigner() takes a single-mode state; use wln_product for product states")
    if resolution < 3 or resolution % 2 == 0:
        raise ValueError("resolution must be an odd integer >= 3 (Simpson panels)")
    amps = psi.amps[: _effective_top(psi.amps) + 1]
    if extent is None:
        extent = _auto_extent(amps, default_extent(psi), resolution)
    ax = np.linspace(-float(extent), float(extent), resolution)
    return WignerGrid(float(extent), resolution, wigner_grid_values(amps, ax))


def wigner_grid_values(amps: np.ndarray, ax: np.ndarray) -> np.ndarray:
    """``W`` on the square grid ``ax x ax`` from the position wavefunction.

    ``W(x, p) = (1/pi) int psi(x + y) conj(psi(x - y)) exp(-2 i p y) dy``
    with ``y`` on the grid spacing, so every ``x +- y`` is a grid point and
    the ``y`` sums for all ``p`` collapse into one matrix product.  The cost
    does not grow with the photon cutoff, unlike the Laguerre recurrence.
    """
    size = ax.size
    h = ax[1] - ax[0]
    half = (size - 1) // 2
    xs = ax[0] + h * np.arange(-half, size + half)
    psi = np.asarray(amps, dtype=np.complex128) @ hermite_functions(xs, len(amps) - 1).astype(np.complex128)
    j = np.arange(-half, half + 1)
    centre = np.arange(size)[:, None] + half
    corr = psi[centre + j] * psi[centre - j].conj()
    phase = np.exp(-2j * np.outer(h * j, ax))
    return (h / math.pi) * (corr @ phase).real


def _auto_extent(amps: np.ndarray, extent: float, resolution: int) -> float:
    """Grow the extent until |W| on the grid border is below ``EDGE_TOL``."""
    for _ in range(MAX_GROWTH + 1):
        ax = np.linspace(-extent, extent, resolution)
        side = np.full_like(ax, extent)
        xs = np.concatenate([ax, side, ax, -side])
        ps = np.concatenate([side, ax, -side, ax])
        if np.abs(wigner_values(amps, xs, ps)).max() < EDGE_TOL:
            return extent
        extent *= 1.3
    raise PrecisionError(f"Wigner function does not decay below {EDGE_TOL} within extent {extent / 1.3:.3g}")


def _effective_top(amps: np.ndarray) -> int:
    """Last index before a tail carrying less than 1e-16 of the weight."""
    w = np.abs(amps) ** 2
    tail = np.cumsum(w[::-1])[::-1]
    keep = np.flatnonzero(tail > 1e-16 * w.sum())
    return int(keep[-1]) if keep.size else 0


def wln(psi: FockState, extent: float | None = None, resolution: int = DEFAULT_RESOLUTION, check: bool = True) -> float:
    """``log int |W|`` for a single-mode state.

    With ``check`` the integral is repeated on a grid with twice the
    resolution and a shift above ``CONVERGENCE_TOL`` raises ``PrecisionError``.
    """
    grid = wigner(psi, extent, resolution)
    total = grid.total
    if abs(total - 1.0) > QUADRATURE_TOL:
        raise PrecisionError(f"Wigner function integrates to {total:.6f}; grid too coarse or too small")
    value = math.log(grid.abs_total)
    if check:
        fine = wigner(psi, grid.extent, 2 * resolution - 1)
        shifted = math.log(fine.abs_total)
        if abs(shifted - value) > CONVERGENCE_TOL:
            raise PrecisionError(f"WLN moved by {abs(shifted - value):.3g} when the resolution was doubled")
        value = shifted
    return max(value, 0.0)


def wln_product(states, **kw) -> float:
    """WLN of a product state: the single-mode values add."""
    return sum(wln(s, **kw) for s in states)
