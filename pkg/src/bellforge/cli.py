"""bellforge command line.

Exit codes: 0 success, 2 invalid input, 3 refusal by an enumeration guard.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, catalog, construct, criterion, formats, lroracle
from .quantum import correlation_tensor

EXIT_OK, EXIT_INVALID, EXIT_GUARD = 0, 2, 3

SCAN_COLUMNS = (
    "family",
    "n_parties",
    "alpha",
    "multisetting",
    "multisetting_threshold",
    "standard",
    "standard_threshold",
    "wwzb",
    "wwzb_threshold",
)

SCAN_HELP = """\
CSV columns, one row per grid point:
  family                  ghz or w
  n_parties               number of qubits
  alpha                   GHZ angle (empty for w)
  multisetting            maximized multisetting criterion value
  multisetting_threshold  noise threshold 1/sqrt(value), clamped to 1
  standard                single-frame sufficient value
  standard_threshold      1/sqrt(standard), clamped to 1
  wwzb                    largest ratio over standard two-setting inequalities
  wwzb_threshold          1/wwzb, clamped to 1
Columns for modes not requested by --modes are left empty.
"""


class UsageError(ValueError):
    pass


def _number(x):
    """JSON-safe scalar: exact rationals as ints or 'p/q' strings."""
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    return x


def run_report(command: str, inputs: dict, outputs: dict, seed: int = 0) -> dict:
    return {
        "command": command,
        "inputs": inputs,
        "outputs": outputs,
        "seed": seed,
        "tool_version": __version__,
    }


def _emit(doc, out: Path | None = None) -> None:
    text = formats.dumps(doc)
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


# --- input resolution --------------------------------------------------------


def load_state(source: str):
    """A state file path or a catalog name; returns (QuantumState, tensor)."""
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        if not path.exists():
            raise UsageError(f"state file {source} not found")
        state = formats.state_from_json(formats.read_json(path))
        return state, correlation_tensor(state)
    entry = catalog.resolve(source)
    return entry.state, entry.analytic_tensor


def load_inequality(path: str):
    p = Path(path)
    if not p.exists():
        raise UsageError(f"inequality file {path} not found")
    return formats.inequality_from_json(formats.read_json(p))


def _parse_signs(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"expected three sign-function indices a,b,c; got {text!r}")
    try:
        return tuple(construct.SignFunction.from_index(int(p)) for p in parts)
    except ValueError as exc:
        raise UsageError(f"bad sign triple {text!r}: {exc}") from None


def _parse_merge(text: str):
    """JSON object {party (1-based): {setting: representative}}."""
    try:
        doc = json.loads(text)
        return {
            int(party) - 1: {int(s): int(r) for s, r in mp.items()} for party, mp in doc.items()
        }
    except (json.JSONDecodeError, AttributeError, TypeError, ValueError) as exc:
        raise UsageError(f"bad merge map {text!r}: {exc}") from None


def _parse_grid(text: str) -> list[float]:
    """Comma list, or start:stop:count (inclusive).  'pi' is understood."""

    def num(s):
        s = s.strip().lower()
        try:
            if "pi" in s:
                head, _, tail = s.partition("pi")
                factor = float(head.rstrip("*") or 1)
                div = float(tail.lstrip("/") or 1)
                return factor * math.pi / div
            return float(s)
        except ValueError:
            raise UsageError(f"bad grid value {s!r}") from None

    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError("grid ranges are start:stop:count")
        start, stop = num(parts[0]), num(parts[1])
        try:
            count = int(parts[2])
        except ValueError:
            raise UsageError(f"bad grid count {parts[2]!r}") from None
        return [] if count < 1 else list(np.linspace(start, stop, count))
    return [num(s) for s in text.split(",") if s.strip()]


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad integer list {text!r}") from None


# --- commands ----------------------------------------------------------------


def cmd_tensor(args) -> int:
    _, tensor = load_state(args.state)
    _emit(formats.tensor_to_json(tensor), args.out)
    return EXIT_OK


def _ineq_summary(ineq) -> str:
    bound = formats.inequality_to_json(ineq)["declared_bound"]
    return (
        f"profile {'x'.join(map(str, ineq.settings_per_party))}, "
        f"{len(ineq.terms)} terms, declared bound {bound}"
    )


def cmd_inequality(args) -> int:
    if args.kind == "gen":
        if args.parties < 2:
            raise UsageError("--parties must be >= 2")
        ineq = construct.generating_inequality(args.parties)
    elif args.kind == "family":
        if args.count_classes:
            members = [q for _, q in construct.iter_family_442()]
            outputs = {"members": len(members), "flip_classes": construct.count_flip_classes(members)}
            _emit(run_report("inequality family", {"count_classes": True}, outputs), args.out)
            return EXIT_OK
        if (args.index is None) == (args.signs is None):
            raise UsageError("give exactly one of --index or --signs")
        signs = construct.family_signs(args.index) if args.signs is None else _parse_signs(args.signs)
        ineq = construct.family_442(signs)
    else:
        base = load_inequality(args.ineq)
        ineq = construct.identify_settings(base, _parse_merge(args.map), compact=not args.keep_profile)
    _emit(formats.inequality_to_json(ineq), args.out)
    print(_ineq_summary(ineq), file=sys.stderr)
    return EXIT_OK


def _bound_outputs(ineq) -> dict:
    res = lroracle.classical_bound(ineq)
    return {
        "bound": _number(res.bound),
        "declared_bound": _number(ineq.declared_bound),
        "n_strategies": res.n_strategies,
        "maximizers": res.strategies,
    }


def _tight_outputs(ineq) -> dict:
    rep = lroracle.certify(ineq)
    return {
        "bound": _number(rep.bound),
        "n_saturating_pos": rep.n_saturating_pos,
        "n_saturating_neg": rep.n_saturating_neg,
        "rank": rep.rank,
        "ambient_dim": rep.ambient_dim,
        "tight": rep.tight,
    }


def cmd_bound(args) -> int:
    ineq = load_inequality(args.ineq)
    _emit(run_report("bound", {"ineq": args.ineq}, _bound_outputs(ineq)))
    return EXIT_OK


def cmd_tight(args) -> int:
    ineq = load_inequality(args.ineq)
    _emit(run_report("tight", {"ineq": args.ineq}, _tight_outputs(ineq)))
    return EXIT_OK


def cmd_certify(args) -> int:
    ineq = load_inequality(args.ineq)
    out = _tight_outputs(ineq)
    out["declared_bound"] = _number(ineq.declared_bound)
    out["declared_bound_ok"] = Fraction(ineq.declared_bound) == lroracle.classical_bound(ineq).bound
    _emit(run_report("certify", {"ineq": args.ineq}, out))
    return EXIT_OK


def evaluate(tensor, mode: str, restarts: int, seed: int):
    if mode == "multisetting":
        return criterion.multisetting_criterion(tensor, restarts, seed)
    if mode == "standard":
        return criterion.standard_sufficient_criterion(tensor, restarts, seed)
    return criterion.wwzb_criterion(tensor, restarts, seed)


def _check_restarts(n: int) -> None:
    if n < 1:
        raise UsageError("--restarts must be >= 1")


def cmd_criterion(args) -> int:
    _check_restarts(args.restarts)
    _, tensor = load_state(args.state)
    res = evaluate(tensor, args.mode, args.restarts, args.seed)
    inputs = {"state": args.state, "mode": args.mode, "restarts": args.restarts}
    report = run_report("criterion", inputs, res.to_json(), args.seed)
    if args.json:
        _emit(report)
    else:
        print(
            f"{args.mode} value {res.value:.10g}  violation factor {res.violation_factor:.10g}  "
            f"noise threshold {res.noise_threshold:.10g}"
        )
    return EXIT_OK


def cmd_quantum_max(args) -> int:
    _check_restarts(args.restarts)
    ineq = load_inequality(args.ineq)
    _, tensor = load_state(args.state)
    res = criterion.quantum_max(ineq, tensor, args.restarts, args.seed)
    inputs = {"ineq": args.ineq, "state": args.state, "restarts": args.restarts}
    _emit(run_report("quantum-max", inputs, res.to_json(), args.seed))
    return EXIT_OK


def scan_rows(family: str, parties: list[int], alphas: list[float], modes, restarts: int, seed: int):
    points = []
    if family == "ghz":
        if not alphas:
            raise UsageError("empty alpha grid")
        points = [(n, a, catalog.ghz(n, a)) for n in parties for a in alphas]
    else:
        points = [(n, None, catalog.w_state(n)) for n in parties]
    if not points:
        raise UsageError("empty grid")
    rows = []
    for n, alpha, entry in points:
        row = dict.fromkeys(SCAN_COLUMNS, "")
        row.update(family=family, n_parties=n, alpha="" if alpha is None else repr(float(alpha)))
        for mode in modes:
            res = evaluate(entry.analytic_tensor, mode, restarts, seed)
            row[mode] = repr(float(res.value))
            row[f"{mode}_threshold"] = repr(float(res.noise_threshold))
        rows.append(row)
    return rows


def cmd_scan(args) -> int:
    _check_restarts(args.restarts)
    parties = _parse_ints(args.parties)
    if not parties or any(n < 2 for n in parties):
        raise UsageError("--parties needs values >= 2")
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    bad = [m for m in modes if m not in ("multisetting", "standard", "wwzb")]
    if bad or not modes:
        raise UsageError(f"unknown modes {bad}")
    alphas = _parse_grid(args.alphas) if args.family == "ghz" else []
    rows = scan_rows(args.family, parties, alphas, modes, args.restarts, args.seed)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SCAN_COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    if args.out is None:
        sys.stdout.write(buf.getvalue())
    else:
        args.out.write_text(buf.getvalue())
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bellforge",
        description="Multisetting Bell inequalities: construction, exact bounds, violation criteria.",
        epilog="BELLFORGE_THREADS caps the number of optimizer worker threads.",
    )
    p.add_argument("--version", action="version", version=f"bellforge {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(q, restarts=criterion.DEFAULT_RESTARTS):
        q.add_argument("--restarts", type=int, default=restarts, help="random starts (default %(default)s)")
        q.add_argument("--seed", type=int, default=0, help="random seed (default 0)")

    q = sub.add_parser("tensor", help="correlation tensor of a state as JSON")
    q.add_argument("--state", required=True, help="state JSON file or catalog name (ghz:N:alpha, w:N, psi4)")
    q.add_argument("--out", type=Path)
    q.set_defaults(func=cmd_tensor)

    q = sub.add_parser("inequality", help="build an inequality file")
    isub = q.add_subparsers(dest="kind", required=True)
    g = isub.add_parser("gen", help="generating inequality for N parties")
    g.add_argument("--parties", type=int, required=True)
    g.add_argument("--out", type=Path)
    g = isub.add_parser("family", help="member of the 4x4x2 family")
    g.add_argument("--index", type=int, help="lexicographic member index 0..4095")
    g.add_argument("--signs", help="sign-function indices a,b,c (each 0..15)")
    g.add_argument(
        "--count-classes",
        action="store_true",
        help="report how many members remain distinct up to outcome relabelings",
    )
    g.add_argument("--out", type=Path)
    g = isub.add_parser("merge", help="identify settings of an existing inequality")
    g.add_argument("--ineq", required=True)
    g.add_argument("--map", required=True, help='JSON, e.g. \'{"1": {"2": 1}}\' merges setting 2 of party 1 into 1')
    g.add_argument("--keep-profile", action="store_true", help="keep the original setting counts")
    g.add_argument("--out", type=Path)
    q.set_defaults(func=cmd_inequality)

    for name, func, text in (
        ("certify", cmd_certify, "exact bound, saturating vertices and rank"),
        ("bound", cmd_bound, "exact classical bound"),
        ("tight", cmd_tight, "tightness certificate"),
    ):
        q = sub.add_parser(name, help=text)
        q.add_argument("--ineq", required=True)
        q.set_defaults(func=func)

    q = sub.add_parser("criterion", help="violation criterion for a state")
    q.add_argument("--state", required=True, help="state JSON file or catalog name")
    q.add_argument("--mode", choices=("multisetting", "standard", "wwzb"), default="multisetting")
    q.add_argument("--json", action="store_true", help="print the full JSON report")
    seeded(q)
    q.set_defaults(func=cmd_criterion)

    q = sub.add_parser("quantum-max", help="maximum quantum value of an inequality on a state")
    q.add_argument("--ineq", required=True)
    q.add_argument("--state", required=True)
    seeded(q)
    q.set_defaults(func=cmd_quantum_max)

    q = sub.add_parser(
        "scan",
        help="criterion table over a parameter grid (CSV)",
        description="Evaluate criteria for GHZ or W states over a grid.",
        epilog=SCAN_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    q.add_argument("family", choices=("ghz", "w"))
    q.add_argument("--parties", default="3", help="comma list of N (default 3)")
    q.add_argument("--alphas", default="0.05:pi/4:16", help="GHZ angles: list or start:stop:count")
    q.add_argument("--modes", default="multisetting,standard,wwzb")
    q.add_argument("--out", type=Path)
    seeded(q)
    q.set_defaults(func=cmd_scan)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except lroracle.EnumerationLimitError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
