"""Command-line entry point: ``stellar {state,profile,nogo,assess,wln}``.

Outputs are JSON with sorted keys and no timestamps; every file echoes the
configuration and package version that produced it.  Thread counts only
affect scheduling and are left out of the echoed configuration, so runs that
differ only in ``--threads``/``STELLAR_THREADS`` write identical bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from . import __version__
from .bounds import ConversionScenario, NoGoRegion, assess_protocol, nogo_region_multicopy, nogo_region_subadditive
from .errors import (
    CapacityError,
    DegenerateProjection,
    DimensionError,
    InfeasibleOptimization,
    ParameterRangeError,
    PrecisionError,
    SpecError,
    TruncationError,
)
from .fock import FockState, tensor, tensor_power
from .profile import OptimizerOptions, StellarProfile, profile
from .states import StateSpec
from .wigner import DEFAULT_RESOLUTION, wln

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_INFEASIBLE = 0, 2, 3, 4
SCHEDULING_KEYS = ("threads",)


# --- state loading --------------------------------------------------------------


class StateSource:
    """A single-mode spec, a state file, or a ``*``-joined product of those."""

    def __init__(self, text: str, cutoff: int | None = None):
        self.text = text
        self.cutoff = cutoff
        self.factors = []
        for part in text.split("*"):
            part = part.strip()
            if part.endswith(".json"):
                data = _read_json(part)
                if "amps" in data:
                    self.factors.append(FockState.from_json(data))
                    continue
                self.factors.append(StateSpec.from_json(data))
            else:
                self.factors.append(StateSpec.parse(part))

    @property
    def id(self) -> str:
        return "*".join(f.id if isinstance(f, StateSpec) else f"file({self.text})" for f in self.factors)

    @property
    def declared_rank(self) -> float:
        return sum(f.declared_rank if isinstance(f, StateSpec) else math.inf for f in self.factors)

    @property
    def rescorable(self) -> bool:
        # trisqueezed states are defined by their truncation, so a larger cutoff is a different state
        return all(isinstance(f, StateSpec) and f.family != "trisqueezed" for f in self.factors)

    def build(self, cutoff: int | None = None) -> FockState:
        cutoff = self.cutoff if cutoff is None else cutoff
        out = None
        for f in self.factors:
            psi = f.build(cutoff) if isinstance(f, StateSpec) else f
            out = psi if out is None else tensor(out, psi)
        return out

    def copies(self, k: int):
        """``(state, rebuild, declared_rank)`` for ``k`` copies."""
        psi = tensor_power(self.build(), k)
        rebuild = (lambda c: tensor_power(self.build(c), k)) if self.rescorable else None
        return psi, rebuild, k * self.declared_rank


def _read_json(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


# --- output helpers ---------------------------------------------------------------


def _config(args: argparse.Namespace) -> dict:
    skip = {"func", *SCHEDULING_KEYS}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _opts_json(opts: OptimizerOptions) -> dict:
    return {k: v for k, v in opts.to_json().items() if k not in SCHEDULING_KEYS}


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _emit(args, payload: dict, csv_text: str | None = None):
    fmt = getattr(args, "format", "json")
    if args.out is None:
        sys.stdout.write(csv_text if fmt == "csv" and csv_text is not None else _dumps(payload))
        return
    base = Path(args.out)
    if base.suffix in (".json", ".csv"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    if fmt in ("json", "both") or csv_text is None:
        base.with_suffix(".json").write_text(_dumps(payload))
    if fmt in ("csv", "both") and csv_text is not None:
        base.with_suffix(".csv").write_text(csv_text)


def _options(args) -> OptimizerOptions:
    return OptimizerOptions(starts=args.starts, seed=args.seed, threads=args.threads)


def _profile_json(p: StellarProfile, opts: OptimizerOptions) -> dict:
    out = p.to_json()
    out["opts"] = _opts_json(opts)
    return out


def _rank_json(rank: float):
    return None if math.isinf(rank) else int(rank)


# --- subcommands ------------------------------------------------------------------


def _state_text(args) -> str:
    given = [
        (args.spec, lambda v: v),
        (args.fock, lambda v: f"fock:{v}"),
        (args.coherent, lambda v: f"coherent:{v}"),
        (args.cat, lambda v: f"cat:{v}:{args.parity}"),
        (args.gkp, lambda v: f"gkp:{v}:{args.logical}"),
        (args.trisqueezed, lambda v: f"trisqueezed:{v}"),
        (args.cubic, lambda v: f"cubic_phase:{v}:{args.squeeze}"),
        (args.binomial, lambda v: "binomial:" + ":".join(str(x) for x in v)),
        (args.superposition, lambda v: "superposition:" + v.replace(",", ":")),
    ]
    chosen = [fmt(v) for v, fmt in given if v is not None]
    if len(chosen) != 1:
        raise SpecError("give exactly one state family flag (or --spec)")
    return chosen[0]


def cmd_state(args) -> int:
    src = StateSource(_state_text(args), args.cutoff)
    psi = src.build()
    payload = psi.to_json()
    payload["meta"] = {"state": src.id, "declared_rank": _rank_json(src.declared_rank), "config": _config(args), "version": __version__}
    _emit(args, payload)
    return EXIT_OK


def cmd_profile(args) -> int:
    src = StateSource(args.state, args.cutoff)
    psi, rebuild, rank = src.copies(args.copies)
    opts = _options(args)
    state_id = src.id if args.copies == 1 else f"({src.id})^{args.copies}"
    prof = profile(psi, args.n_max, opts, state_id, rank, rebuild)
    payload = _profile_json(prof, opts)
    payload.update(config=_config(args), version=__version__, modes=psi.modes, cutoff=psi.cutoff)
    _emit(args, payload, _csv(["n", "f_star"], prof.csv_rows()))
    return EXIT_OK


def _load_or_profile(path, text, copies, n_max, opts, cutoff):
    if path is not None:
        return StellarProfile.from_json(_read_json(path))
    src = StateSource(text, cutoff)
    psi, rebuild, rank = src.copies(copies)
    if n_max is None:
        if math.isinf(rank):
            raise SpecError(f"{text} has infinite stellar rank; give an explicit profile cap")
        n_max = int(rank)
    state_id = src.id if copies == 1 else f"({src.id})^{copies}"
    return profile(psi, n_max, opts, state_id, rank, rebuild)


def cmd_nogo(args) -> int:
    scenario = ConversionScenario(args.input, args.target, args.k, args.m, args.flavor, args.purity)
    opts = _options(args)
    in_copies = args.k if args.flavor == "multicopy" else 1
    n_in = args.n_max_in
    if n_in is None and args.profile_in is None:
        rank = StateSource(args.input, args.cutoff).declared_rank * in_copies
        n_in = int(rank) if not math.isinf(rank) else args.n_max_out
    prof_in = _load_or_profile(args.profile_in, args.input, in_copies, n_in, opts, args.cutoff)
    prof_out = _load_or_profile(args.profile_out, args.target, args.m, args.n_max_out, opts, args.cutoff)
    if args.flavor == "multicopy":
        region = nogo_region_multicopy(prof_in, prof_out, args.purity, scenario.to_json())
    else:
        region = nogo_region_subadditive(prof_in, args.k, prof_out, args.purity, scenario.to_json())
    payload = region.to_json()
    payload.update(
        config=_config(args),
        version=__version__,
        profiles={"input": _profile_json(prof_in, opts), "target": _profile_json(prof_out, opts)},
        warnings=_cap_warnings(prof_in, prof_out),
    )
    _emit(args, payload, region.boundary_csv())
    return EXIT_OK


def _cap_warnings(prof_in: StellarProfile, prof_out: StellarProfile) -> list[str]:
    out = []
    if math.isinf(prof_out.declared_rank):
        out.append(f"target profile capped at n_max={prof_out.n_max}; rectangles with q > {prof_out.n_max} are omitted")
    if math.isinf(prof_in.declared_rank):
        out.append(f"input profile capped at n_max={prof_in.n_max}")
    flagged = [n for n, f in enumerate(prof_out.flags) if f]
    if flagged:
        out.append(f"target entries with spread above tolerance: {flagged}")
    return out


def cmd_assess(args) -> int:
    data = _read_json(args.region)
    region = NoGoRegion.from_json(data)
    verdict = assess_protocol(region, args.p, args.fidelity)
    payload = {"assessment": verdict, "region": args.region, "scenario": region.scenario, "config": _config(args), "version": __version__}
    _emit(args, payload)
    return EXIT_OK


def cmd_wln(args) -> int:
    src = StateSource(args.state, args.cutoff)
    values = []
    for f in src.factors:
        psi = f.build(args.cutoff) if isinstance(f, StateSpec) else f
        if psi.modes != 1:
            raise DimensionError("wln takes single-mode factors; join them with '*' for product states")
        values.append(wln(psi, resolution=args.resolution))
    payload = {
        "state": src.id,
        "wln": sum(values),
        "factors": values,
        "log": "natural",
        "grid": {"resolution": args.resolution, "extent": "auto"},
        "config": _config(args),
        "version": __version__,
    }
    _emit(args, payload)
    return EXIT_OK


# --- parser --------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, seed_required: bool = False):
    p.add_argument("--seed", type=int, required=seed_required, default=None if seed_required else 0)
    p.add_argument("--starts", type=int, default=None, help="multi-starts per entry (default 32 single-mode, 128 otherwise)")
    p.add_argument("--cutoff", type=int, default=None, help="per-mode photon cutoff override")
    p.add_argument("--threads", type=int, default=None, help="worker threads (default: STELLAR_THREADS or 1)")


def _output(p: argparse.ArgumentParser, formats=True):
    p.add_argument("--out", default=None, help="output path prefix (stdout when omitted)")
    if formats:
        p.add_argument("--format", choices=("json", "csv", "both"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stellar", description="Stellar fidelity profiles and Gaussian conversion no-go regions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("state", help="write a state in the Fock JSON format")
    p.add_argument("--spec", help="shorthand such as fock:2, cat:3:odd, gkp:0.1, or a JSON spec file")
    p.add_argument("--fock", type=int)
    p.add_argument("--coherent", type=str, help="complex amplitude, e.g. 1+0.5j")
    p.add_argument("--cat", type=float)
    p.add_argument("--parity", choices=("even", "odd"), default="odd")
    p.add_argument("--gkp", type=float, metavar="DELTA")
    p.add_argument("--logical", type=int, choices=(0, 1), default=0)
    p.add_argument("--trisqueezed", type=str, metavar="T")
    p.add_argument("--cubic", type=float, metavar="C")
    p.add_argument("--squeeze", type=float, default=0.0, help="squeezing r for --cubic")
    p.add_argument("--binomial", type=int, nargs=3, metavar=("ORDER", "SPACING", "LOGICAL"))
    p.add_argument("--superposition", type=str, help="comma-separated amp@n terms, e.g. 0.9@0,0.1@3")
    p.add_argument("--cutoff", type=int, default=None)
    _output(p, formats=False)
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("profile", help="stellar fidelity profile f_0 .. f_n_max")
    p.add_argument("state", help="state spec, state/spec JSON file, or product a*b")
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--copies", type=int, default=1, help="profile the k-fold tensor power")
    _common(p, seed_required=True)
    _output(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("nogo", help="no-go region in (p, delta)")
    p.add_argument("--input", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--k", type=int, default=1, help="input copies")
    p.add_argument("--m", type=int, default=1, help="target copies")
    p.add_argument("--flavor", choices=("multicopy", "subadditive"), default="multicopy")
    p.add_argument("--purity", choices=("pure", "mixed"), default="pure")
    p.add_argument("--n-max-in", type=int, default=None, help="input profile cap (default: its stellar rank)")
    p.add_argument("--n-max-out", type=int, default=12, help="target profile cap")
    p.add_argument("--profile-in", default=None, help="reuse a profile JSON for the input")
    p.add_argument("--profile-out", default=None, help="reuse a profile JSON for the target")
    _common(p)
    _output(p)
    p.set_defaults(func=cmd_nogo)

    p = sub.add_parser("assess", help="place a protocol (p, F) against a region file")
    p.add_argument("--region", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--fidelity", type=float, required=True)
    _output(p, formats=False)
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("wln", help="Wigner logarithmic negativity")
    p.add_argument("state", help="single-mode spec or product a*b")
    p.add_argument("--cutoff", type=int, default=None)
    p.add_argument("--resolution", type=int, default=DEFAULT_RESOLUTION)
    _output(p, formats=False)
    p.set_defaults(func=cmd_wln)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleOptimization as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (TruncationError, PrecisionError, CapacityError, DegenerateProjection) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SpecError, DimensionError, ParameterRangeError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
