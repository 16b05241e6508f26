"""No-go regions for Gaussian state conversion in (p, delta) space.

A region is a union of half-open rectangles ``(p_gt, 1] x [0, delta_lt)``.
Every rectangle comes from one inequality between stellar fidelities of the
input and the target; profile values are lower bounds, so a rectangle is only
marked ``certified`` when its extent survives the target entry's confidence
spread.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

from .errors import SpecError
from .profile import StellarProfile

FLAVORS = ("multicopy", "subadditive")
PURITIES = ("pure", "mixed")
FLOOR_EPS = 1e-12


def rank_floor(n: int, p: float) -> int:
    """``floor(n / p)`` with a small guard against representation error."""
    return int(math.floor(n / p + FLOOR_EPS))


@dataclass(frozen=True)
class ConversionScenario:
    """``k`` copies of ``source`` to ``m`` copies of ``target`` (spec strings or ids)."""

    source: str
    target: str
    k: int = 1
    m: int = 1
    flavor: str = "multicopy"
    purity: str = "pure"

    def __post_init__(self):
        if self.k < 1 or self.m < 1:
            raise SpecError("copy counts k and m must be >= 1")
        if self.flavor not in FLAVORS:
            raise SpecError(f"flavor must be one of {FLAVORS}")
        if self.purity not in PURITIES:
            raise SpecError(f"purity must be one of {PURITIES}")
        if self.flavor == "subadditive" and self.m != 1:
            raise SpecError("the sub-additive flavor needs a single target copy (m = 1)")
        if self.flavor == "multicopy" and self.m > 2:
            raise SpecError("multi-copy target profiles are limited to m <= 2")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Rectangle:
    p_gt: float
    delta_lt: float
    n: int
    q: int
    certified: bool

    def contains(self, p: float, delta: float) -> bool:
        return p > self.p_gt and 0.0 <= delta < self.delta_lt

    def to_json(self) -> dict:
        return {"p_gt": self.p_gt, "delta_lt": self.delta_lt, "n": self.n, "q": self.q, "certified": self.certified}


@dataclass
class NoGoRegion:
    rectangles: list[Rectangle]
    scenario: dict = field(default_factory=dict)
    profile_refs: dict = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.rectangles

    def contains(self, p: float, delta: float) -> bool:
        return any(r.contains(p, delta) for r in self.rectangles)

    def delta_star(self, p: float) -> float:
        """Largest excluded error at success probability ``p`` (0 outside the region)."""
        return max((r.delta_lt for r in self.rectangles if p > r.p_gt), default=0.0)

    @property
    def floor(self) -> float:
        """p-independent part of the region: extent of the rectangles open at p = 0."""
        return max((r.delta_lt for r in self.rectangles if r.p_gt <= 0.0), default=0.0)

    def p_threshold(self, delta: float) -> float | None:
        """Infimum of excluded ``p`` at error ``delta``; ``None`` if nothing is excluded there."""
        ps = [r.p_gt for r in self.rectangles if delta < r.delta_lt]
        return min(ps) if ps else None

    def boundary(self) -> list[tuple[float, float]]:
        """Step function ``delta*(p)``: pairs ``(p_i, d_i)`` meaning ``delta* = d_i`` on ``(p_i, p_{i+1}]``.

        Only steps where the value rises are kept, so the list is strictly
        increasing in both coordinates.
        """
        steps = []
        for p in sorted({r.p_gt for r in self.rectangles}):
            d = max(r.delta_lt for r in self.rectangles if r.p_gt <= p)
            if not steps or d > steps[-1][1]:
                steps.append((p, d))
        return steps

    def dominant(self) -> list[Rectangle]:
        """Rectangles not contained in another one."""
        keep = []
        for r in self.rectangles:
            covered = any(
                o is not r and o.p_gt <= r.p_gt and o.delta_lt >= r.delta_lt and (o.p_gt, o.delta_lt) != (r.p_gt, r.delta_lt)
                for o in self.rectangles
            )
            if not covered and all((o.p_gt, o.delta_lt) != (r.p_gt, r.delta_lt) for o in keep):
                keep.append(r)
        return keep

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "rectangles": [r.to_json() for r in self.rectangles],
            "boundary": [{"p": p, "delta": d} for p, d in self.boundary()],
            "profile_refs": self.profile_refs,
        }

    @classmethod
    def from_json(cls, data: dict) -> NoGoRegion:
        rects = [Rectangle(float(r["p_gt"]), float(r["delta_lt"]), int(r["n"]), int(r["q"]), bool(r["certified"])) for r in data["rectangles"]]
        return cls(rects, data.get("scenario", {}), data.get("profile_refs", {}))

    def boundary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "delta"])
        for p, d in self.boundary():
            w.writerow([repr(p), repr(d)])
        return buf.getvalue()


def _extent(gap: float, purity: str) -> float:
    if gap <= 0:
        return gap
    return gap if purity == "pure" else gap * gap / 2.0


def _spread(prof: StellarProfile, q: int) -> float:
    spreads = prof.spreads
    return spreads[q] if q < len(spreads) else 0.0


def _refs(*profiles: StellarProfile) -> dict:
    return {
        name: {"state": p.state_id, "n_max": p.n_max, "declared_rank": _rank_json(p.declared_rank)}
        for name, p in zip(("input", "target"), profiles)
    }


def _rank_json(rank):
    return None if rank == math.inf else int(rank)


def _emit(rects: list, n: int, q: int, p_gt: float, gap: float, spread: float, purity: str):
    extent = _extent(gap, purity)
    if extent > 0 and p_gt < 1.0:
        certified = _extent(gap - spread, purity) > 0
        rects.append(Rectangle(p_gt, extent, n, q, certified))


def nogo_region_multicopy(prof_in: StellarProfile, prof_out: StellarProfile, purity: str = "pure", scenario: dict | None = None) -> NoGoRegion:
    """Rectangles ``(n/q, 1] x [0, f_n(in) - f_q(out))`` from profiles of the full input and target."""
    rects: list[Rectangle] = []
    for n in range(prof_in.n_max + 1):
        fn = prof_in.value(n)
        qs = [0] if n == 0 else range(n, prof_out.n_max + 1)
        for q in qs:
            fq = prof_out.value(q)
            if fq is None:
                continue
            p_gt = 0.0 if n == 0 else n / q
            _emit(rects, n, q, p_gt, fn - fq, _spread(prof_out, q), purity)
    return NoGoRegion(rects, scenario or {}, _refs(prof_in, prof_out))


def nogo_region_subadditive(prof_single: StellarProfile, k: int, prof_out: StellarProfile, purity: str = "pure", scenario: dict | None = None) -> NoGoRegion:
    """Rectangles ``(kn/q, 1] x [0, 1 - f_q(target) - k (1 - f_n(single)))`` from single-copy profiles."""
    if k < 1:
        raise SpecError("k must be >= 1")
    rects: list[Rectangle] = []
    for n in range(prof_single.n_max + 1):
        loss = k * (1.0 - prof_single.value(n))
        qs = [0] if n == 0 else range(k * n, prof_out.n_max + 1)
        for q in qs:
            fq = prof_out.value(q)
            if fq is None:
                continue
            p_gt = 0.0 if n == 0 else k * n / q
            _emit(rects, n, q, p_gt, 1.0 - fq - loss, _spread(prof_out, q), purity)
    return NoGoRegion(rects, scenario or {}, _refs(prof_single, prof_out))


def exact_bound_check(prof_in: StellarProfile, prof_out: StellarProfile, p: float) -> dict:
    """Check ``f_n(in) <= f_{floor(n/p)}(out)`` for every ``n`` of the input profile."""
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    entries = []
    for n in range(prof_in.n_max + 1):
        q = rank_floor(n, p)
        lhs, rhs = prof_in.value(n), prof_out.value(q)
        if rhs is None:
            status = "inconclusive"
        else:
            status = "violated" if lhs > rhs else "satisfied"
        entries.append({"n": n, "q": q, "f_in": lhs, "f_out": rhs, "status": status})
    return {"p": p, "ruled_out": any(e["status"] == "violated" for e in entries), "entries": entries}


def assess_protocol(region: NoGoRegion, p: float, fidelity_achieved: float) -> dict:
    """Place a protocol's ``(p, delta = sqrt(1 - F))`` against the region.

    ``delta_margin = delta - delta*(p)`` and ``p_margin = p_threshold(delta) - p``
    are both positive when the point lies outside; ``p_margin`` is ``None``
    when no rectangle reaches the point's error level.
    """
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    if not 0 <= fidelity_achieved <= 1:
        raise ValueError("fidelity must lie in [0, 1]")
    delta = math.sqrt(max(0.0, 1.0 - fidelity_achieved))
    inside = region.contains(p, delta)
    p_thr = region.p_threshold(delta)
    return {
        "p": p,
        "fidelity": fidelity_achieved,
        "delta": delta,
        "verdict": "inside" if inside else "outside",
        "delta_star": region.delta_star(p),
        "delta_margin": delta - region.delta_star(p),
        "p_margin": None if p_thr is None else p_thr - p,
    }


def wln_bound_check(w_in: float, w_out: float, p: float) -> dict:
    """Monotone bound ``W(in) >= p W(out)``; violation rules the conversion out."""
    if not 0 < p <= 1:
        raise ValueError("p must lie in (0, 1]")
    threshold = w_in / w_out if w_out > 0 else math.inf
    return {"p": p, "w_in": w_in, "w_out": w_out, "ruled_out": w_in < p * w_out, "p_threshold": min(threshold, 1.0) if w_out > 0 else None}
