"""Command-line front end.

    scottshift critical [--max-index K]
    scottshift levels --kind br --kappa 0.5 --two-j 1 --l 0 --n 6
    scottshift shift --kappa 0.3 0.6 [--curve 0.1:0.9:9]
    scottshift tf [--route minimize|ode|both]
    scottshift scott --Z 50 100 --c 137.036
    scottshift verify [--suite NAME]

Exit codes: 0 success, 1 computation error, 2 usage error, 3 verification
failure.  Floats are printed with 12 significant digits; JSON output echoes
the canonical configuration and is byte-identical for identical input.
Shift results are cached as JSON under $SCOTTSHIFT_CACHE (default
~/.cache/scottshift), keyed by a hash of the canonical shift configuration
and the package version.
"""

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .channels import (KAPPA_B, KAPPA_C, AngularChannel, OperatorKind, critical_coupling_b,
                       critical_coupling_c)
from .discretize import SCHEMES, assemble, build_grid, default_grid
from .errors import DomainError, ScottShiftError
from .scott import ShiftCurve, coupling, energy_table, scott_energy
from .shift import CurvePoint, GridPolicy, ShiftResult, total_shift
from .spectra import dirac_level, eigenvalues, schroedinger_level
from .thomasfermi import profile_csv, tf_minimize, tf_ode_solve
from .verify import DEFAULT_SEED, SUITES, run_suite

DIGITS = 12
EXIT_OK, EXIT_COMPUTE, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2, 3
FORMATS = ("pretty", "csv", "json")


# ------------------------------------------------------------ config

@dataclass
class RunConfig:
    """Validated run configuration.

    Defaults: j_max = 25/2, n_levels = 12, N = 1500 log-uniform nodes,
    automatic p-range, pretty output, seed 20240601, one thread.
    ``threads`` and ``cache_dir`` do not affect results and are not echoed.
    """

    subcommand: str
    kappas: list = field(default_factory=list)
    two_j_max: int = 25
    n_levels: int = 12
    p_min: float = None
    p_max: float = None
    n_nodes: int = 1500
    scheme: str = "log-uniform"
    output: str = "pretty"
    seed: int = DEFAULT_SEED
    cache_dir: str = None
    threads: int = 1
    options: dict = field(default_factory=dict)

    def validate(self):
        if self.output not in FORMATS:
            raise DomainError(f"output format must be one of {FORMATS}")
        if self.two_j_max < 5 or self.two_j_max % 2 != 1:
            raise DomainError("j_max must be a half-integer >= 5/2")
        if self.n_levels < 4:
            raise DomainError("n_levels must be at least 4")
        if self.n_nodes < 16:
            raise DomainError("N must be at least 16")
        if self.scheme not in SCHEMES:
            raise DomainError(f"scheme must be one of {SCHEMES}")
        if self.threads < 1:
            raise DomainError("threads must be >= 1")
        for k in self.kappas:
            if not (k > 0 and math.isfinite(k)):
                raise DomainError(f"kappa must be positive and finite, got {k}")
        for v in (self.p_min, self.p_max):
            if v is not None and not (v > 0 and math.isfinite(v)):
                raise DomainError("p_min/p_max must be positive")
        if self.p_min is not None and self.p_max is not None and self.p_min >= self.p_max:
            raise DomainError("p_min must be below p_max")
        return self

    def canonical(self):
        d = asdict(self)
        d.pop("threads")
        d.pop("cache_dir")
        d.pop("output")
        d["version"] = __version__
        return _round_floats(d)

    def grid_policy(self):
        return GridPolicy(n_nodes=self.n_nodes, scheme=self.scheme, p_min=self.p_min,
                          p_max=self.p_max,
                          range_scale=self.options.get("range_scale", 1.0),
                          extrapolate=not self.options.get("no_extrapolate", False))


def _round_floats(obj):
    """Round floats to DIGITS significant digits; non-finite become strings."""
    if isinstance(obj, float) or isinstance(obj, np.floating):
        x = float(obj)
        if not math.isfinite(x):
            return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return float(format(x, f".{DIGITS}g"))
    if isinstance(obj, dict):
        return {str(k): _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return format(float(x), f".{DIGITS}g")
    if x is None:
        return ""
    return str(x)


# ------------------------------------------------------------- cache

def cache_directory(override=None):
    if override:
        return Path(override)
    env = os.environ.get("SCOTTSHIFT_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "scottshift"


def cache_key(payload):
    text = json.dumps(_round_floats(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:32]


def _shift_payload(cfg, kappa, kind):
    return {"what": "shift", "kappa": float(kappa), "kind": OperatorKind.parse(kind).value,
            "grid": cfg.grid_policy().descriptor(), "two_j_max": cfg.two_j_max,
            "n_levels": cfg.n_levels, "mu": cfg.options.get("mu", 0.0),
            "grid_check": not cfg.options.get("no_grid_check", False),
            "version": __version__}


def cached_shift(cfg, kappa, kind=OperatorKind.BROWN_RAVENHALL):
    """total_shift with a JSON file cache (disabled by options['no_cache'])."""
    payload = _shift_payload(cfg, kappa, kind)
    use_cache = not cfg.options.get("no_cache", False)
    path = cache_directory(cfg.cache_dir) / f"shift-{cache_key(payload)}.json"
    if use_cache and path.is_file():
        try:
            stored = json.loads(path.read_text())
            if stored.get("payload") == _round_floats(payload):
                return ShiftResult.from_dict(stored["result"])
        except (ValueError, KeyError, TypeError):
            pass
    res = total_shift(kappa, cfg.two_j_max, cfg.grid_policy(), cfg.n_levels, kind,
                      mu=cfg.options.get("mu", 0.0), threads=cfg.threads,
                      grid_check=not cfg.options.get("no_grid_check", False))
    if use_cache:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps({"payload": _round_floats(payload),
                                       "result": res.to_dict()}, sort_keys=True))
            tmp.replace(path)
        except OSError as exc:
            print(f"warning: cache not written: {exc}", file=sys.stderr)
    return res


# ------------------------------------------------------------ output

def emit(cfg, columns, rows, extra=None, stream=None):
    out = stream or sys.stdout
    if cfg.output == "json":
        doc = {"config": cfg.canonical(), "rows": _round_floats(rows)}
        if extra:
            doc.update(_round_floats(extra))
        out.write(json.dumps(doc, sort_keys=True) + "\n")
    elif cfg.output == "csv":
        out.write(",".join(columns) + "\n")
        for r in rows:
            out.write(",".join(_csv_cell(_fmt(r.get(c))) for c in columns) + "\n")
    else:
        cells = [[_fmt(r.get(c)) for c in columns] for r in rows]
        widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
        out.write("  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip() + "\n")
        for row in cells:
            out.write("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip() + "\n")
        if extra:
            for k in sorted(extra):
                if not isinstance(extra[k], (dict, list)):
                    out.write(f"{k}: {_fmt(extra[k])}\n")


def _csv_cell(text):
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


# ----------------------------------------------------------- parsing

def _positive_float(text):
    t = text.strip().lower()
    if t in ("inf", "infinity"):
        return math.inf
    if t in ("kb", "kappab", "kappa_b"):
        return KAPPA_B
    if t in ("kc", "kappac", "kappa_c"):
        return KAPPA_C
    try:
        return float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _half_integer(text):
    try:
        v = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a half-integer: {text!r}") from None
    if (2 * v).denominator != 1 or (2 * v).numerator % 2 != 1:
        raise argparse.ArgumentTypeError(f"j must be a positive half-integer, got {text!r}")
    return int(2 * v)


def _curve_spec(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("curve must be a:b:steps")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad curve spec {text!r}") from None
    if n < 2 or not 0 < a < b:
        raise argparse.ArgumentTypeError("curve needs 0 < a < b and steps >= 2")
    return [float(x) for x in np.linspace(a, b, n)]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", dest="output", choices=FORMATS, default="pretty",
                        help="output format (default pretty)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--cache-dir", default=None,
                        help="cache directory (default $SCOTTSHIFT_CACHE or ~/.cache/scottshift)")
    common.add_argument("--threads", type=int, default=1, help="worker processes (default 1)")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--N", dest="n_nodes", type=int, default=None, help="grid nodes")
    grid.add_argument("--p-min", type=_positive_float, default=None, help="lower momentum")
    grid.add_argument("--p-max", type=_positive_float, default=None, help="upper momentum")
    grid.add_argument("--scheme", choices=SCHEMES, default=None, help="quadrature scheme")

    shiftopts = argparse.ArgumentParser(add_help=False)
    shiftopts.add_argument("--j-max", type=_half_integer, default=25,
                           help="largest explicit j, e.g. 25/2 (default)")
    shiftopts.add_argument("--n-levels", type=int, default=12,
                           help="explicit levels per channel (default 12)")
    shiftopts.add_argument("--range-scale", type=float, default=1.0,
                           help="divide p_min and multiply p_max (default 1)")
    shiftopts.add_argument("--no-grid-check", action="store_true",
                           help="skip the half-resolution rerun")
    shiftopts.add_argument("--no-extrapolate", action="store_true",
                           help="no cutoff extrapolation near criticality")
    shiftopts.add_argument("--no-cache", action="store_true", help="ignore the result cache")

    p = _Parser(prog="scottshift", description="Relativistic Scott correction toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    c = sub.add_parser("critical", parents=[common], help="critical couplings")
    c.add_argument("--max-index", type=int, default=5,
                   help="largest l (and j - 1/2) listed (default 5)")

    lv = sub.add_parser("levels", parents=[common, grid], help="channel eigenvalues")
    lv.add_argument("--kind", default="br",
                    help="br, c, s, b0 or c0 (Brown-Ravenhall, Chandrasekhar, Schroedinger, "
                         "massless variants)")
    lv.add_argument("--kappa", type=_positive_float, required=True)
    lv.add_argument("--two-j", type=int, required=True, help="2j (odd)")
    lv.add_argument("--l", type=int, required=True)
    lv.add_argument("--n", type=int, default=6, help="number of levels (default 6)")

    sh = sub.add_parser("shift", parents=[common, grid, shiftopts], help="spectral shift s(kappa)")
    sh.add_argument("--kappa", type=_positive_float, nargs="+", default=[])
    sh.add_argument("--curve", type=_curve_spec, default=None, help="a:b:steps")
    sh.add_argument("--kind", default="br", help="br (default) or c")
    sh.add_argument("--mu", type=float, default=0.0, help="soft spectral cutoff")

    tf = sub.add_parser("tf", parents=[common], help="Thomas-Fermi atom")
    tf.add_argument("--route", choices=("minimize", "ode", "both"), default="both")
    tf.add_argument("--Z", type=float, default=1.0)
    tf.add_argument("--profile", default=None,
                    help="write r, rho, phi_TF as CSV to this path (route appended for both)")

    sc = sub.add_parser("scott", parents=[common, grid, shiftopts], help="Scott-corrected energy")
    sc.add_argument("--Z", type=float, nargs="+", required=True)
    sc.add_argument("--c", type=_positive_float, nargs="+", required=True,
                    help="one value, or one per Z; inf for the nonrelativistic limit")
    sc.add_argument("--interpolate", type=_curve_spec, default=None,
                    help="interpolate s from a cached curve a:b:steps")

    v = sub.add_parser("verify", parents=[common], help="numerical verification suites")
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--samples", type=int, default=10 ** 6,
                   help="twisting-inequality samples (default 1e6)")
    return p


def config_from_args(args):
    opts = {}
    cfg = RunConfig(args.subcommand, output=args.output, seed=args.seed,
                    cache_dir=args.cache_dir, threads=args.threads)
    if getattr(args, "n_nodes", None) is not None:
        cfg.n_nodes = args.n_nodes
    for name in ("p_min", "p_max", "scheme"):
        if getattr(args, name, None) is not None:
            setattr(cfg, name, getattr(args, name))
    if hasattr(args, "j_max"):
        cfg.two_j_max = args.j_max
        cfg.n_levels = args.n_levels
        opts.update({"range_scale": args.range_scale, "no_grid_check": args.no_grid_check,
                     "no_extrapolate": args.no_extrapolate, "no_cache": args.no_cache})
    sc = args.subcommand
    if sc == "critical":
        opts["max_index"] = args.max_index
        if args.max_index < 0:
            raise DomainError("max-index must be nonnegative")
    elif sc == "levels":
        cfg.kappas = [args.kappa]
        opts.update({"kind": OperatorKind.parse(args.kind).value, "two_j": args.two_j,
                     "l": args.l, "n": args.n})
        if args.n < 1:
            raise DomainError("n must be positive")
        if args.n_nodes is None:
            cfg.n_nodes = 1200
        if args.scheme is None:
            cfg.scheme = "log-gauss"
    elif sc == "shift":
        ks = list(args.kappa) + (args.curve or [])
        if not ks:
            raise DomainError("give --kappa values and/or --curve a:b:steps")
        cfg.kappas = ks
        opts.update({"kind": OperatorKind.parse(args.kind).value, "mu": args.mu,
                     "curve": args.curve is not None})
        if args.mu < 0:
            raise DomainError("mu must be nonnegative")
    elif sc == "tf":
        opts.update({"route": args.route, "Z": args.Z, "profile": args.profile})
        if not args.Z > 0:
            raise DomainError("Z must be positive")
    elif sc == "scott":
        cs = list(args.c)
        if len(cs) == 1:
            cs = cs * len(args.Z)
        if len(cs) != len(args.Z):
            raise DomainError("--c takes one value or one per Z")
        opts.update({"Z": list(args.Z), "c": cs, "interpolate": args.interpolate})
    elif sc == "verify":
        opts.update({"suite": args.suite, "samples": args.samples})
        if args.samples < 1:
            raise DomainError("samples must be positive")
    cfg.options = opts
    return cfg.validate()


# ---------------------------------------------------------- commands

def cmd_critical(cfg):
    rows = []
    for i in range(cfg.options["max_index"] + 1):
        rows.append({"quantity": "kappa_C", "index": str(i), "value": critical_coupling_c(i)})
    for i in range(cfg.options["max_index"] + 1):
        rows.append({"quantity": "kappa_B", "index": f"{2 * i + 1}/2",
                     "value": critical_coupling_b(2 * i + 1)})
    rows.append({"quantity": "kappa_C", "index": "global", "value": KAPPA_C})
    rows.append({"quantity": "kappa_B", "index": "global", "value": KAPPA_B})
    emit(cfg, ["quantity", "index", "value"], rows)
    return EXIT_OK


def cmd_levels(cfg):
    o = cfg.options
    kind = OperatorKind.parse(o["kind"])
    ch = AngularChannel(o["two_j"], o["l"])
    kappa = cfg.kappas[0]
    n = o["n"]
    if cfg.p_min is None and cfg.p_max is None:
        grid = default_grid(kappa, ch, max(n, 6), cfg.n_nodes, cfg.scheme)
    else:
        ref = default_grid(kappa, ch, max(n, 6), cfg.n_nodes, cfg.scheme)
        grid = build_grid(cfg.p_min or ref.p_min, cfg.p_max or ref.p_max, cfg.n_nodes,
                          cfg.scheme)
    ev = eigenvalues(assemble(kind, ch, kappa, grid), n)
    rows = []
    for i, lam in enumerate(ev, start=1):
        row = {"n": i, "eigenvalue": float(lam), "schroedinger": None, "dirac_minus_1": None}
        if not kind.massless:
            row["schroedinger"] = schroedinger_level(i, ch.l, kappa)
        if kind == OperatorKind.BROWN_RAVENHALL and kappa < 1:
            row["dirac_minus_1"] = dirac_level(i, ch.two_j, kappa, l=ch.l) - 1.0
        rows.append(row)
    emit(cfg, ["n", "eigenvalue", "schroedinger", "dirac_minus_1"], rows,
         {"kind": kind.value, "channel": ch.label(), "kappa": kappa, "grid": grid.descriptor})
    return EXIT_OK


def cmd_shift(cfg):
    kind = OperatorKind.parse(cfg.options["kind"])
    rows = []
    results = []
    for k in cfg.kappas:
        if cfg.options.get("curve"):
            try:
                r = cached_shift(cfg, k, kind)
            except ScottShiftError as exc:
                rows.append({"kappa": k, "s": math.nan, "error": math.nan,
                             "channel_tail": math.nan,
                             "status": f"error: {exc}".replace("\n", " ")})
                continue
        else:
            r = cached_shift(cfg, k, kind)
        results.append(r)
        rows.append({"kappa": r.kappa, "s": r.s_value, "error": r.error_estimate,
                     "channel_tail": r.channel_tail, "status": "ok"})
    extra = None
    if cfg.output == "json":
        extra = {"results": [r.to_dict() for r in results]}
    emit(cfg, ["kappa", "s", "error", "channel_tail", "status"], rows, extra)
    return EXIT_OK


def cmd_tf(cfg):
    o = cfg.options
    routes = ("minimize", "ode") if o["route"] == "both" else (o["route"],)
    rows = []
    for route in routes:
        if route == "ode":
            sol = tf_ode_solve(1e-10, Z=o["Z"])
        else:
            sol = tf_minimize(Z=o["Z"])
        s = sol.summary()
        rows.append({"route": route, "Z": s["Z"], "E_TF_1": s["E_TF_1"], "energy": s["energy"],
                     "slope": s["slope"], "total_charge": s["total_charge"],
                     "r_min": s["grid"]["r_min"], "r_max": s["grid"]["r_max"],
                     "N": s["grid"]["N"]})
        if o["profile"]:
            path = Path(o["profile"])
            if len(routes) == 2:
                # tf.csv -> tf.minimize.csv, tf.ode.csv
                path = path.with_name(f"{path.stem}.{route}{path.suffix or '.csv'}")
            path.write_text(profile_csv(sol, DIGITS))
    extra = {}
    if len(rows) == 2:
        extra["relative_difference"] = abs(rows[0]["E_TF_1"] / rows[1]["E_TF_1"] - 1.0)
    emit(cfg, ["route", "Z", "E_TF_1", "energy", "slope", "total_charge", "r_min", "r_max",
               "N"], rows, extra or None)
    return EXIT_OK


def cmd_scott(cfg):
    o = cfg.options
    zs, cs = o["Z"], o["c"]
    if o["interpolate"]:
        pts = []
        for k in o["interpolate"]:
            r = cached_shift(cfg, k)
            pts.append(CurvePoint(r.kappa, r.s_value, r.error_estimate))
        source = ShiftCurve.from_points(pts)
        rows = energy_table(zs, cs, source)
    else:
        rows = []
        for z, c in zip(zs, cs):
            kappa = coupling(z, c)    # rejects supercritical input first
            src = cached_shift(cfg, kappa) if kappa > 0 else None
            rows.append(scott_energy(z, c, src))
    cols = ["Z", "c", "kappa", "e_tf", "scott_term", "total", "s_used", "s_error"]
    emit(cfg, cols, [r.to_dict() for r in rows])
    return EXIT_OK


def cmd_verify(cfg):
    o = cfg.options
    reports = run_suite(o["suite"], seed=cfg.seed, samples=o["samples"])
    rows = [{"check": r.name, "samples": r.samples, "max_residual": r.max_residual,
             "threshold": r.threshold, "result": "PASS" if r.passed else "FAIL"}
            for r in reports]
    extra = {"details": [r.details for r in reports]} if cfg.output == "json" else None
    emit(cfg, ["check", "samples", "max_residual", "threshold", "result"], rows, extra)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY


COMMANDS = {"critical": cmd_critical, "levels": cmd_levels, "shift": cmd_shift,
            "tf": cmd_tf, "scott": cmd_scott, "verify": cmd_verify}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        cfg = config_from_args(args)
    except DomainError as exc:
        print(f"scottshift: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[cfg.subcommand](cfg)
    except DomainError as exc:
        print(f"scottshift: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScottShiftError as exc:
        print(f"scottshift: computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
