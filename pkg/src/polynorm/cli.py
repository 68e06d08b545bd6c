"""Command-line harness: polynorm <command> [options].

Options may also come from an INI file (``--config``), one section per
command; flags given on the command line override config keys.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import datetime
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .constants import (
    CSV_FIELDS,
    classify_region_A,
    fit_exponent,
    RegionPoint,
    estimate_A,
    estimate_B,
    predicted_exponent,
    records_from_csv,
    records_to_csv,
    sweep,
)
from .construct import (
    best_of_unimodular,
    greedy_partial_steiner,
    ones_poly,
    random_gaussian,
    spread_poly,
    steiner_family,
)
from .polycore import (
    CapacityError,
    PolyParseError,
    bombieri_norm,
    coeff_norm,
    format_extended,
    parse_extended,
    read_poly,
    serialize_poly,
    symform_coeff_norm,
)
from .supnorm import AscentOptions, estimate, format_estimate
from .uncond import BASIS_FACTOR_NOTE, bayart_check, chi_lower, classify_region_chi
from .vonneumann import (
    ConditionViolated,
    gen_diagonal_tuple,
    gen_nilpotent_tuple,
    gen_shiftpoly_tuple,
    vn_ratio,
    vn_records_to_csv,
)


class ConfigError(Exception):
    pass


def _ext(text: str) -> float:
    try:
        v = parse_extended(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an extended real: {text!r}") from None
    if math.isnan(v) or v < 1:
        raise argparse.ArgumentTypeError(f"exponent must be in [1, inf], got {text!r}")
    return v


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}") from None


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _add_search(p: argparse.ArgumentParser) -> None:
    p.add_argument("--starts", type=int, default=64, help="ascent starting points")
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--cap", type=int, default=None, help="monomial capacity cap (default POLYNORM_CAP or 1e7)")


def _add_out(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default=None, help="output file (default stdout); writes <out>.meta.json")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polynorm", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"polynorm {__version__}")
    ap.add_argument("--config", default=None, help="INI file with one [command] section")
    ap.add_argument("--threads", type=int, default=None, help="worker cap (default: available CPUs)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norms", help="coefficient norms and sup-norm interval of a polynomial file")
    p.add_argument("poly", nargs="?", default=None)
    p.add_argument("--p", type=_ext, default=None)
    p.add_argument("--r", type=_ext, default=None)
    p.add_argument("--seed", type=int, default=0)
    _add_search(p)

    p = sub.add_parser("construct", help="write a witness polynomial or a partial Steiner system")
    p.add_argument("kind", nargs="?", default=None,
                   choices=["spread", "ones", "unimodular", "gaussian", "steiner", "steiner-system"])
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--p", type=_ext, default=None, help="norm used to pick best-of rounds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rounds", type=int, default=1)
    _add_search(p)
    _add_out(p)

    for name in ("estimate", "sweep"):
        p = sub.add_parser(name, help=f"{name} A, B or chi")
        p.add_argument("kind", nargs="?", default=None, choices=["A", "B", "chi"])
        p.add_argument("--m", type=int, default=None)
        if name == "estimate":
            p.add_argument("--n", type=int, default=None)
        else:
            p.add_argument("--n-list", type=_int_list, default=None)
        p.add_argument("--p", type=_ext, default=None)
        p.add_argument("--r", type=_ext, default=None)
        p.add_argument("--q", type=_ext, default=None)
        p.add_argument("--family", default="default",
                       choices=["default", "spread", "ones", "unimodular", "steiner", "all"])
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--rounds", type=int, default=16)
        p.add_argument("--trials", type=int, default=8)
        _add_search(p)
        _add_out(p)

    p = sub.add_parser("fit", help="log-log exponent fit of sweep output")
    p.add_argument("input", nargs="?", default=None, help="sweep CSV, chi JSON lines, or n,value CSV")
    p.add_argument("--column", default=None)
    p.add_argument("--predicted", type=float, default=None)
    p.add_argument("--tol", type=float, default=0.05)
    p.add_argument("--gate", type=_bool, nargs="?", const=True, default=False,
                   help="exit 1 when the fitted slope misses the prediction")
    _add_out(p)

    p = sub.add_parser("regions", help="grid classification of (1/p, 1/r) or (1/p, 1/q)")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--kind", default="A", choices=["A", "chi"])
    _add_out(p)

    p = sub.add_parser("vn", help="von Neumann ratios on commuting tuples")
    p.add_argument("--family", default="nilpotent", choices=["nilpotent", "diagonal", "shiftpoly"])
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--p", type=_ext, default=None)
    p.add_argument("--q", type=_ext, default=None)
    p.add_argument("--condition", default="Ip", choices=["Ip", "IIp"])
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _add_search(p)
    _add_out(p)

    p = sub.add_parser("bayart", help="Monte Carlo check of the torus L1 inequality")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gate", type=_bool, nargs="?", const=True, default=False)
    p.add_argument("--cap", type=int, default=None)
    _add_out(p)
    return ap


def _subparser(ap: argparse.ArgumentParser, command: str) -> argparse.ArgumentParser:
    for action in ap._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


def apply_config(ap: argparse.ArgumentParser, command: str, path: str) -> None:
    """Use the [command] section of an INI file as defaults for that command."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    extra = [s for s in cp.sections() if s != command]
    if extra:
        raise ConfigError(f"config {path}: unexpected section(s) {extra} for command {command!r}")
    if not cp.has_section(command):
        return
    sp = _subparser(ap, command)
    actions = {a.dest: a for a in sp._actions if a.dest != "help"}
    values = {}
    for key, raw in cp.items(command):
        dest = key.replace("-", "_")
        if dest not in actions:
            raise ConfigError(f"config {path}: unknown key {key!r} in [{command}]")
        act = actions[dest]
        conv = act.type or (lambda s: s)
        try:
            val = conv(raw)
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise ConfigError(f"config {path}: bad value for {key!r}: {exc}") from None
        if act.choices is not None and val not in act.choices:
            raise ConfigError(f"config {path}: {key!r} must be one of {sorted(act.choices)}")
        values[dest] = val
    sp.set_defaults(**values)


def _need(args, *names) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise ConfigError(f"{args.command}: missing required option(s) " +
                          ", ".join("--" + m.replace("_", "-") for m in missing))


def _opts(args) -> AscentOptions:
    return AscentOptions(starts=args.starts, max_iters=args.max_iters, seed=getattr(args, "seed", 0))


def _settings(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("out", "config"):
            continue
        if isinstance(v, float) and math.isinf(v):
            v = "inf"
        out[k] = v
    return out


def emit(args, text: str, extra: dict | None = None) -> None:
    """Write data to --out (plus a metadata sidecar) or to stdout."""
    if args.out is None:
        sys.stdout.write(text)
        return
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    meta = {"command": args.command, "version": __version__, "settings": _settings(args),
            "created": datetime.datetime.now(datetime.timezone.utc).isoformat()}
    if extra:
        meta.update(extra)
    with open(args.out + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def cmd_norms(args) -> int:
    _need(args, "poly", "p", "r")
    P = read_poly(args.poly)
    r = args.r
    print(f"m={P.m} n={P.n} terms={P.nterms}")
    print(f"coeff |P|_{format_extended(r)} = {coeff_norm(P, r)!r}")
    if math.isinf(r):
        print("bombieri [P]_inf = n/a")
    else:
        print(f"bombieri [P]_{format_extended(r)} = {bombieri_norm(P, r)!r}")
    print(f"symmetric-form |T|_{format_extended(r)} = {symform_coeff_norm(P, r)!r}")
    est = estimate(P, args.p, _opts(args))
    print(f"sup-norm on l_{format_extended(args.p)}: {format_estimate(est)}")
    return 0


def cmd_construct(args) -> int:
    _need(args, "kind", "m", "n")
    kind, m, n = args.kind, args.m, args.n
    if kind in ("unimodular", "steiner") and args.rounds > 1:
        _need(args, "p")
    p = args.p if args.p is not None else 2.0
    if kind == "steiner-system":
        system = greedy_partial_steiner(m, n, args.seed, args.cap)
        emit(args, system.serialize())
        print(f"steiner-system m={m} n={n}: {len(system)} blocks, valid={system.is_valid()}",
              file=sys.stderr)
        return 0
    if kind == "spread":
        P = spread_poly(m, n)
    elif kind == "ones":
        P = ones_poly(m, n, args.cap)
    elif kind == "gaussian":
        P = random_gaussian(m, n, args.seed, args.cap)
    elif kind == "unimodular":
        P = best_of_unimodular(m, n, p, args.seed, args.rounds, _opts(args), args.cap)
    else:
        P = steiner_family(m, n, p, args.seed, args.rounds, _opts(args), args.cap)
    emit(args, serialize_poly(P))
    unimod = bool(np.all(np.abs(np.abs(P.coeffs) - 1) == 0))
    print(f"{kind} m={m} n={n}: {P.nterms} terms, unimodular={unimod}", file=sys.stderr)
    return 0


def _chi_rows(args, n_list) -> str:
    lines = []
    for n in n_list:
        try:
            e = chi_lower(args.m, n, args.p, args.q, args.seed, args.trials, args.rounds, _opts(args), args.cap)
            lines.append(e.to_json())
        except CapacityError as exc:
            lines.append(json.dumps({"m": args.m, "n": n, "p": format_extended(args.p),
                                     "q": format_extended(args.q), "status": f"failed: {exc}"}))
    return "".join(line + "\n" for line in lines)


def cmd_estimate(args) -> int:
    _need(args, "kind", "m", "n", "p")
    if args.kind == "chi":
        _need(args, "q")
        emit(args, _chi_rows(args, [args.n]), {"basis_factor": BASIS_FACTOR_NOTE})
        return 0
    _need(args, "r")
    recs = sweep(args.kind, args.m, args.p, args.r, [args.n], args.family, args.seed, args.rounds,
                 _opts(args), args.cap, threads=1)
    emit(args, records_to_csv(recs))
    return 0


def cmd_sweep(args) -> int:
    _need(args, "kind", "m", "n_list", "p")
    if args.kind == "chi":
        _need(args, "q")
        emit(args, _chi_rows(args, args.n_list), {"basis_factor": BASIS_FACTOR_NOTE})
        return 0
    _need(args, "r")
    recs = sweep(args.kind, args.m, args.p, args.r, args.n_list, args.family, args.seed, args.rounds,
                 _opts(args), args.cap, threads=_threads(args))
    emit(args, records_to_csv(recs))
    return 0


def _load_fit_input(path: str, column: str | None):
    """Return ((n, value) pairs, predicted exponent, prediction status)."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    first = text.lstrip().splitlines()[0] if text.strip() else ""
    if first.startswith("{"):
        pts, pred, status = [], None, "unknown"
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                raise ConfigError(f"{path}: line {lineno}: malformed JSON") from None
            if not str(rec.get("status", "")).startswith("failed"):
                pts.append((rec["n"], rec[column or "chi_empirical"]))
                pred, status = rec.get("predicted_exp"), rec.get("status", "unknown")
        return pts, pred, status
    header = [h.strip() for h in first.split(",")]
    if header == list(CSV_FIELDS):
        recs = records_from_csv(text)
        ok = [r for r in recs if r.ok]
        pred, status = (None, "unknown")
        if ok:
            pred, status = predicted_exponent(ok[0].kind, ok[0].m, ok[0].p, ok[0].r)
        return [(r.n, getattr(r, column or "empirical")) for r in ok], pred, status
    rows = list(csv.DictReader(io.StringIO(text)))
    col = column or "value"
    if not rows or "n" not in rows[0] or col not in rows[0]:
        raise ConfigError(f"{path}: expected sweep CSV, chi JSON lines, or columns n,{col}")
    return [(float(r["n"]), float(r[col])) for r in rows], None, "unknown"


def cmd_fit(args) -> int:
    _need(args, "input")
    pts, pred, status = _load_fit_input(args.input, args.column)
    if args.predicted is not None:
        pred, status = args.predicted, "given"
    fit = fit_exponent(pts)
    verdict = "NO-PREDICTION" if pred is None else ("PASS" if abs(fit.slope - pred) <= args.tol else "FAIL")
    out = {"slope": fit.slope, "intercept": fit.intercept, "r2": fit.r_squared, "predicted": pred,
           "status": verdict, "prediction_status": status}
    emit(args, json.dumps(out) + "\n")
    pred_txt = "none" if pred is None else f"{pred:.6f}"
    print(f"fitted slope {fit.slope:.6f} vs predicted {pred_txt} (tol {args.tol}): {verdict}", file=sys.stderr)
    return 1 if (args.gate and verdict == "FAIL") else 0


def cmd_regions(args) -> int:
    _need(args, "m")
    if args.grid < 2:
        raise ConfigError("regions: --grid must be >= 2")
    second = "inv_r" if args.kind == "A" else "inv_q"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["inv_p", second, "labels", "exponent", "status"])
    for i in range(args.grid):
        x = i / (args.grid - 1)
        for j in range(args.grid):
            y = j / (args.grid - 1)
            if args.kind == "A":
                v = classify_region_A(RegionPoint(x, y, args.m))
            else:
                v = classify_region_chi(args.m, x, y)
            exp = "" if v.exponent is None else repr(float(v.exponent))
            w.writerow([repr(x), repr(y), "+".join(v.labels), exp, v.status])
    emit(args, buf.getvalue())
    return 0


def _vn_instance(args, k: int):
    rng = np.random.default_rng([args.seed, k])
    m, n, p = args.m, args.n, args.p
    P = random_gaussian(m, n, int(rng.integers(2**63)), args.cap)
    if args.family == "nilpotent":
        c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        c /= np.abs(c).max() if math.isinf(p) else np.sum(np.abs(c) ** p) ** (1 / p)
        t = gen_nilpotent_tuple(m, n, c * (1 - 1e-12), args.d)
    elif args.family == "shiftpoly":
        t = gen_shiftpoly_tuple(m, n, args.d or m + 1, int(rng.integers(2**63)), p=p)
    else:
        d = args.d or m + 1
        Z = rng.standard_normal((d, n)) + 1j * rng.standard_normal((d, n))
        t = gen_diagonal_tuple(Z)
        norms = np.abs(Z).max(axis=0)
        s = norms.max() if math.isinf(p) else np.sum(norms ** p) ** (1 / p)
        t = gen_diagonal_tuple(Z / (s * (1 + 1e-12)))
    return P, t


def cmd_vn(args) -> int:
    _need(args, "m", "n", "p", "q")
    recs = []
    for k in range(args.count):
        P, t = _vn_instance(args, k)
        try:
            recs.append(vn_ratio(P, t, args.q, args.p, args.condition, _opts(args)))
        except ConditionViolated as exc:
            print(f"instance {k}: {exc}", file=sys.stderr)
    emit(args, vn_records_to_csv(recs))
    return 0


def cmd_bayart(args) -> int:
    _need(args, "m", "n")
    lines, passed = [], 0
    for k in range(args.count):
        P = random_gaussian(args.m, args.n, args.seed + k, args.cap)
        ts, ok = bayart_check(P, args.samples, args.seed + k)
        passed += ok
        lines.append(json.dumps({"m": args.m, "n": args.n, "index": k, "samples": ts.samples,
                                 "mean": ts.mean, "stderr": ts.stderr, "left": coeff_norm(P, 2.0),
                                 "pass": ok}))
    emit(args, "".join(line + "\n" for line in lines))
    print(f"bayart: {passed}/{args.count} pass", file=sys.stderr)
    return 1 if (args.gate and passed < args.count) else 0


COMMANDS = {"norms": cmd_norms, "construct": cmd_construct, "estimate": cmd_estimate, "sweep": cmd_sweep,
            "fit": cmd_fit, "regions": cmd_regions, "vn": cmd_vn, "bayart": cmd_bayart}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        pre = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if pre.config:
            apply_config(ap, pre.command, pre.config)
            args = ap.parse_args(argv)
        else:
            args = pre
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ConfigError, PolyParseError, CapacityError, OSError) as exc:
        print(f"polynorm {pre.command}: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"polynorm {pre.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
