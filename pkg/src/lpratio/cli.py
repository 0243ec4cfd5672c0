"""Command-line front end.

Every output starts with '#'-prefixed metadata lines (tool version, the
resolved config as JSON, seed, run diagnostics) followed by the data rows
as CSV, or the same content as a JSON object with "meta" and "rows".
"""

import argparse
import csv
import io
import json
import math
import sys

from . import __version__, experiments, ratefn, specfun
from .errors import DomainError, InvariantError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INTERNAL = 4

COMMANDS = ("constants", "rate-curve", "clt", "ldp", "surface-vs-cone")

DEFAULTS = {
    "constants": {"p_list": [1.0, 2.0, 4.0]},
    "rate-curve": {"p_list": [1.0, 2.0, 10.0], "theta_min": 0.05, "theta_max": 0.95, "points": 181},
    "clt": {
        "p": 2.0,
        "n": 4000,
        "reps": 2000,
        "measure": "cone",
        "a_grid": [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0],
        "seed": 0,
    },
    "ldp": {"p": 2.0, "n_list": [200], "reps": 100_000, "estimator": "tilted", "side": None, "seed": 0},
    "surface-vs-cone": {"p": 4.0, "n_list": [10, 100, 1000], "reps": 10_000, "a": 0.0, "seed": 0},
}

# key -> parser for values given as strings (flags or config files)
_FLOAT_LIST = lambda s: [float(v) for v in str(s).split(",") if v.strip()]  # noqa: E731
_INT_LIST = lambda s: [int(v) for v in str(s).split(",") if v.strip()]  # noqa: E731
CONVERTERS = {
    "p": float,
    "p_list": _FLOAT_LIST,
    "n": int,
    "n_list": _INT_LIST,
    "reps": int,
    "theta": _FLOAT_LIST,
    "theta_min": float,
    "theta_max": float,
    "points": int,
    "a_grid": _FLOAT_LIST,
    "a": float,
    "measure": str,
    "estimator": str,
    "side": str,
    "seed": int,
    "out": str,
    "format": str,
}


class UsageError(DomainError):
    pass


def load_config_file(path):
    """Read key=value lines; blank lines and '#' comments are skipped."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in CONVERTERS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def _convert(key, value):
    try:
        return CONVERTERS[key](value)
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {value!r}") from exc


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lpratio",
        description="Constants, rate curves and Monte Carlo checks for the geometric/p-mean ratio on l_p balls.",
    )
    parser.add_argument("--version", action="version", version=f"lpratio {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="file of key=value lines; flags override it")
        sp.add_argument("--p")
        sp.add_argument("--p-list")
        sp.add_argument("--n")
        sp.add_argument("--n-list")
        sp.add_argument("--reps")
        sp.add_argument("--theta", help="one value or a comma-separated list")
        sp.add_argument("--theta-min")
        sp.add_argument("--theta-max")
        sp.add_argument("--points")
        sp.add_argument("--a-grid")
        sp.add_argument("--a")
        sp.add_argument("--measure", choices=experiments.MEASURES)
        sp.add_argument("--estimator", choices=("naive", "tilted"))
        sp.add_argument("--side", choices=experiments.SIDES)
        sp.add_argument("--seed")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--workers", type=int, default=1, help="threads; never changes the results")
    return parser


def resolve_config(args):
    """Merge defaults < config file < flags into a validated RunConfig dict."""
    command = args.command
    cfg = dict(DEFAULTS[command])
    cfg.setdefault("format", "csv")
    cfg.setdefault("out", None)
    if args.config:
        for key, value in load_config_file(args.config).items():
            cfg[key] = _convert(key, value)
    for key in CONVERTERS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = _convert(key, value)
    # singular/plural aliases
    if "p_list" in DEFAULTS[command] and "p" in cfg and getattr(args, "p_list", None) is None:
        cfg["p_list"] = [cfg.pop("p")]
    if "n_list" in DEFAULTS[command] and "n" in cfg and getattr(args, "n_list", None) is None:
        cfg["n_list"] = [cfg.pop("n")]
    cfg["command"] = command
    _validate(cfg)
    return cfg


def _validate(cfg):
    command = cfg["command"]
    try:
        for p in cfg.get("p_list", [cfg.get("p", 1.0)]):
            ratefn.PParam(p)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    if cfg["format"] not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {cfg['format']!r}")
    if command == "rate-curve":
        if not 0.0 < cfg["theta_min"] < cfg["theta_max"] < 1.0:
            raise UsageError("need 0 < theta_min < theta_max < 1")
        if cfg["points"] < 2:
            raise UsageError("points must be >= 2")
    if command in ("clt", "ldp", "surface-vs-cone"):
        if cfg["reps"] < 1:
            raise UsageError("reps must be positive")
        if any(n < 1 for n in cfg.get("n_list", [cfg.get("n", 1)])):
            raise UsageError("n must be positive")
    if command == "clt":
        if cfg["measure"] not in experiments.MEASURES:
            raise UsageError(f"measure must be one of {experiments.MEASURES}")
        if cfg["measure"] == "surface" and cfg["p"] < 1.0:
            raise UsageError(f"surface measure requires p >= 1, got p={cfg['p']}")
    if command == "ldp":
        if not cfg.get("theta"):
            raise UsageError("ldp needs --theta")
        for theta in cfg["theta"]:
            if not 0.0 < theta < 1.0:
                raise UsageError(f"theta={theta} has an infinite rate; choose theta in (0, 1)")
        if cfg["estimator"] not in ("naive", "tilted"):
            raise UsageError("estimator must be naive or tilted")
    if command == "surface-vs-cone" and cfg["p"] < 1.0:
        raise UsageError(f"surface measure requires p >= 1, got p={cfg['p']}")


def run_config(cfg, workers=1):
    """Execute a resolved config; return (meta, columns, rows)."""
    command = cfg["command"]
    meta = {}
    if command == "constants":
        columns = ["p", "m_p", "exp_m_p", "clt_sigma", "digamma_inv_p", "trigamma_inv_p",
                   "theta_min", "theta_max", "g_min", "g_max"]
        rows = []
        for p in cfg["p_list"]:
            mp = ratefn.m_p(p)
            rows.append([p, mp, math.exp(mp), ratefn.clt_sigma(p), specfun.digamma(1.0 / p),
                         specfun.trigamma(1.0 / p), 0.0, 1.0, 0.0, math.inf])
    elif command == "rate-curve":
        columns = ["p", "theta", "j", "g", "s_star", "t_star"]
        rows = []
        for p in cfg["p_list"]:
            for pt in ratefn.rate_curve(p, cfg["theta_min"], cfg["theta_max"], cfg["points"]):
                rows.append([p, pt.theta, pt.j_value, pt.g_value, pt.s_star, pt.t_star])
    elif command == "clt":
        res = experiments.clt_experiment(
            cfg["p"], cfg["n"], cfg["reps"], cfg["measure"], cfg["a_grid"], cfg["seed"], workers
        )
        meta.update(ks_distance=res.ks_distance, half_prob=res.half_prob, mean=res.mean, sd=res.sd,
                    clt_sigma=ratefn.clt_sigma(cfg["p"]))
        columns = ["a", "empirical_prob", "limit_prob", "abs_diff", "stderr"]
        rows = [[r.a, r.empirical_prob, r.limit_prob, r.abs_diff, r.stderr] for r in res.rows]
    elif command == "ldp":
        estimate = experiments.ldp_tilted if cfg["estimator"] == "tilted" else experiments.ldp_naive
        columns = ["theta", "side", "n", "estimator", "minus_log_prob_per_n", "j_reference",
                   "rel_err", "stderr"]
        rows = []
        for theta in cfg["theta"]:
            for n in cfg["n_list"]:
                r = estimate(cfg["p"], theta, n, cfg["reps"], cfg["side"], cfg["seed"], workers)
                rows.append([r.theta, r.side, r.n, r.estimator, r.minus_log_prob_per_n,
                             r.j_reference, r.rel_err, r.std_error])
    elif command == "surface-vs-cone":
        columns = ["n", "cone_prob", "surface_prob", "diff", "diff_stderr"]
        gaps = experiments.surface_vs_cone(cfg["p"], cfg["n_list"], cfg["reps"], cfg["a"],
                                           cfg["seed"], workers)
        rows = [[g.n, g.cone_prob, g.surface_prob, g.diff, g.diff_stderr] for g in gaps]
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown command {command!r}")
    return meta, columns, rows


def _fmt(value):
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _config_echo(cfg):
    return {k: cfg[k] for k in sorted(cfg) if k != "out"}


def render(cfg, meta, columns, rows):
    echo = _config_echo(cfg)
    if cfg["format"] == "json":
        doc = {
            "meta": {
                "tool": f"lpratio {__version__}",
                "config": echo,
                "seed": cfg.get("seed"),
                **{k: _json_value(v) for k, v in meta.items()},
            },
            "rows": [{c: _json_value(v) for c, v in zip(columns, row)} for row in rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# tool: lpratio {__version__}\n")
    buf.write(f"# config: {json.dumps(echo, sort_keys=True)}\n")
    buf.write(f"# seed: {cfg.get('seed')}\n")
    for key, value in meta.items():
        buf.write(f"# {key}: {_fmt(value)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def read_header_config(text):
    """Recover the config echoed in a previous run's output (CSV or JSON)."""
    if text.lstrip().startswith("{"):
        return dict(json.loads(text)["meta"]["config"])
    for line in text.splitlines():
        if line.startswith("# config: "):
            return dict(json.loads(line[len("# config: "):]))
    raise UsageError("no '# config:' header line found")


def data_rows(text):
    """The data part of an output, without metadata (for reproducibility checks)."""
    if text.lstrip().startswith("{"):
        return json.dumps(json.loads(text)["rows"], sort_keys=True)
    return "".join(line + "\n" for line in text.splitlines() if not line.startswith("#"))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        meta, columns, rows = run_config(cfg, workers=args.workers)
        text = render(cfg, meta, columns, rows)
    except InvariantError as exc:
        print(f"lpratio: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except DomainError as exc:
        print(f"lpratio: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"lpratio: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if cfg["out"]:
            with open(cfg["out"], "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"lpratio: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
