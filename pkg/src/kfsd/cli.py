"""Command line interface: ``kfsd {simulate,depth,tune,detect,bench}``.

Settings are resolved as command-line flags > ``KFSD_*`` environment
variables > ``--config`` JSON file > built-in defaults.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from . import __version__
from .csvio import format_curves, format_labels, read_curves
from .depths import DEPTH_IDS, DepthSpec, depth_all
from .detect import BootstrapConfig, DetectorConfig, bootstrap_detect, fbp_detect, kfsd_detect
from .errors import ConfigError, KFSDError
from .experiment import KFSD_METHODS, parse_method, run_study
from .resample import rng_stream
from .serialize import canonical_json, config_hash
from .simgen import MODELS, gen_study_inputs
from .tune import TuningConfig, tune_percentile

ENV_PREFIX = "KFSD_"


@dataclass
class RunConfig:
    model: str = "MM1"
    alpha: str = "0.05"
    n: int = 50
    R: Optional[int] = None
    method: Optional[str] = None
    depth: Optional[str] = None
    sigma_percentile: Optional[float] = None
    delta: float = 0.05
    r: Optional[float] = None
    fap: float = 0.10
    nz_factor: int = 6
    gamma: float = 0.05
    J: int = 20
    B: int = 200
    seed: int = 0
    out: Optional[str] = None
    format: str = "json"
    threads: int = 1
    dry_run: bool = False
    noise: str = "pointwise"
    header: str = "auto"
    drop_incomplete: bool = False

    def models(self):
        return [m.strip().upper() for m in str(self.model).split(",") if m.strip()]

    def alphas(self):
        return [float(a) for a in str(self.alpha).split(",") if a.strip()]

    def methods(self):
        return [m.strip() for m in str(self.method).split(",") if m.strip()]

    def as_dict(self):
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name, value):
    kind = _FIELD_TYPES[name]
    if value is None:
        return None
    try:
        if "bool" in kind:
            if isinstance(value, str):
                return value.strip().lower() in ("1", "true", "yes", "on")
            return bool(value)
        if "int" in kind:
            return int(value)
        if "float" in kind:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value {value!r} for {name}") from None


def load_config(flags: dict, config_path=None, environ=None):
    """Merge defaults, config file, environment and flags into a :class:`RunConfig`."""
    environ = os.environ if environ is None else environ
    merged = {}
    if config_path:
        try:
            data = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {config_path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(data) - set(_FIELD_TYPES))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        merged.update({k: _coerce(k, v) for k, v in data.items()})
    for name in _FIELD_TYPES:
        key = ENV_PREFIX + name.upper()
        if key in environ:
            merged[name] = _coerce(name, environ[key])
    for name, value in flags.items():
        merged[name] = _coerce(name, value)
    return RunConfig(**merged)


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _write(path: Path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _warn(msg):
    print(f"WARN: {msg}", file=sys.stderr)


def cmd_simulate(cfg: RunConfig):
    R = cfg.R or 1
    if cfg.out is None:
        raise ConfigError("simulate needs --out DIR")
    alpha = cfg.alphas()[0]
    model = cfg.models()[0]
    datasets = gen_study_inputs(model, alpha, R, cfg.seed, n=cfg.n, noise=cfg.noise)
    out = Path(cfg.out)
    manifest = {
        "command": "simulate",
        "model": model,
        "alpha": alpha,
        "n": cfg.n,
        "R": R,
        "noise": cfg.noise,
        "seed": cfg.seed,
        "files": [],
    }
    for r, data in enumerate(datasets):
        stem = f"dataset_{r:03d}"
        _write(out / f"{stem}.csv", format_curves(data.sample))
        _write(out / f"{stem}.labels.csv", format_labels(data.is_outlier))
        manifest["files"].append({"curves": f"{stem}.csv", "labels": f"{stem}.labels.csv",
                                  "n_out": data.n_out})
    manifest["config_hash"] = config_hash({k: v for k, v in manifest.items() if k != "files"})
    _write(out / "manifest.json", canonical_json(manifest))
    print(f"wrote {R} dataset(s) to {out}")
    return 0


def _load_sample(cfg, path):
    header = {"auto": "auto", "yes": True, "true": True, "no": False, "false": False}
    if cfg.header not in header:
        raise ConfigError("header must be auto, yes or no")
    sample, kept = read_curves(path, header=header[cfg.header], drop_incomplete=cfg.drop_incomplete)
    return sample, kept


def _depth_spec(cfg, depth):
    depth = depth.upper()
    if depth not in DEPTH_IDS:
        raise ConfigError(f"unknown depth {depth!r}; choose from {', '.join(DEPTH_IDS)}")
    percentile = cfg.sigma_percentile if depth == "KFSD" else None
    return DepthSpec(depth, percentile=percentile, projection_seed=cfg.seed)


def cmd_depth(cfg: RunConfig, input_path):
    sample, _ = _load_sample(cfg, input_path)
    scores = depth_all(sample, _depth_spec(cfg, cfg.depth or "KFSD"))
    if cfg.format == "csv":
        text = scores.to_csv()
    else:
        text = canonical_json({
            "depth": scores.depth_id,
            "params": scores.params,
            "values": [float(v) for v in scores.values],
            "seed": cfg.seed,
            "input_sha256": _sha256(input_path),
        })
    if cfg.out:
        _write(Path(cfg.out), text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_tune(cfg: RunConfig, input_path):
    sample, _ = _load_sample(cfg, input_path)
    tcfg = TuningConfig(J=cfg.J, gamma=cfg.gamma)
    result = tune_percentile(sample, tcfg, rng_stream(cfg.seed))
    if result.fallback:
        _warn("no peripheral curves were drawn; using the 50% percentile")
    doc = {
        "percentile": result.percentile,
        "rank_sums": {str(k): v for k, v in result.rank_sums.items()},
        "fallback": result.fallback,
        "seed": cfg.seed,
        "J": cfg.J,
        "gamma": cfg.gamma,
        "input_sha256": _sha256(input_path),
    }
    if cfg.out:
        out = Path(cfg.out)
        _write(out / "tune.json", canonical_json(doc))
        _write(out / "tune_trace.csv", result.trace_csv())
    print(f"selected percentile: {result.percentile:g}")
    return 0


def _resolve_method(cfg):
    """``(family, scheme, depth)`` from --method/--depth, rejecting conflicts."""
    if cfg.depth and cfg.depth.upper() not in DEPTH_IDS:
        raise ConfigError(f"unknown depth {cfg.depth!r}; choose from {', '.join(DEPTH_IDS)}")
    if cfg.method is None and cfg.depth and cfg.depth.upper() != "KFSD":
        raise ConfigError(f"--depth {cfg.depth} needs --method fbp, b_tri or b_wei")
    text = (cfg.method or "KFSD_tri").strip()
    low = text.lower()
    aliases = {"smo": "KFSD_smo", "tri": "KFSD_tri", "wei": "KFSD_wei"}
    if low in aliases:
        text = aliases[low]
    elif low in ("fbp", "b_tri", "b_wei", "btri", "bwei"):
        default = {"fbp": "MBD"}.get(low, "HMD")
        text = f"{text}+{(cfg.depth or default).upper()}"
    family, scheme, depth = parse_method(text)
    if cfg.depth and cfg.depth.upper() != depth:
        raise ConfigError(f"--depth {cfg.depth} conflicts with method {text}")
    return family, scheme, depth


def cmd_detect(cfg: RunConfig, input_path):
    sample, kept = _load_sample(cfg, input_path)
    family, scheme, depth = _resolve_method(cfg)
    alpha = cfg.alphas()[0]
    rng = rng_stream(cfg.seed)
    if family == "kfsd":
        dcfg = DetectorConfig(
            scheme=scheme, delta=cfg.delta, r=alpha if cfg.r is None else cfg.r,
            desired_fap=cfg.fap, nz_factor=cfg.nz_factor, gamma=cfg.gamma,
            alpha_T=alpha, sigma_percentile=cfg.sigma_percentile, tuning_J=cfg.J,
        )
        report = kfsd_detect(sample, dcfg, rng)
    elif family == "fbp":
        report = fbp_detect(sample, depth_all(sample, _depth_spec(cfg, depth)))
    else:
        bcfg = BootstrapConfig(B=cfg.B, scheme=scheme, gamma=cfg.gamma, alpha_T=alpha)
        report = bootstrap_detect(sample, _depth_spec(cfg, depth), bcfg, rng)
    report.seed = cfg.seed
    report.config = dict(report.config)
    report.config.update({"alpha": alpha, "input_sha256": _sha256(input_path),
                          "kept_rows": kept})
    for w in report.warnings:
        _warn(w)
    summary = report.summary() + "\n"
    if cfg.out:
        out = Path(cfg.out)
        _write(out / "report.json", report.to_json())
        _write(out / "flags.csv", report.flags_csv())
        _write(out / "summary.txt", summary)
        sys.stdout.write(summary)
    else:
        sys.stderr.write(summary)
        sys.stdout.write(report.flags_csv() if cfg.format == "csv" else report.to_json())
    return 0


def cmd_bench(cfg: RunConfig):
    R = cfg.R or 100
    models, alphas = cfg.models(), cfg.alphas()
    methods = cfg.methods() if cfg.method else list(KFSD_METHODS)
    for m in methods:
        parse_method(m)
    for m in models:
        if m not in MODELS:
            raise ConfigError(f"unknown model {m!r}")
    if cfg.dry_run:
        print(f"bench plan: {len(models)} model(s) x {len(alphas)} alpha(s) x "
              f"{len(methods)} method(s), R={R}, seed={cfg.seed}")
        for model in models:
            for a in alphas:
                print(f"  {model} alpha={a:g}: {', '.join(methods)}")
        print(f"  datasets: {len(models) * len(alphas) * R}; "
              f"detector runs: {len(models) * len(alphas) * R * len(methods)}")
        return 0
    result = run_study(models, alphas, methods, R=R, master_seed=cfg.seed, n=cfg.n,
                       threads=cfg.threads, noise=cfg.noise, tuning_J=cfg.J, B=cfg.B)
    text = result.to_text()
    if cfg.out:
        out = Path(cfg.out)
        _write(out / "bench.csv", result.to_csv())
        _write(out / "bench.txt", text)
        _write(out / "bench.json", result.to_json())
    if cfg.format == "csv" and not cfg.out:
        sys.stdout.write(result.to_csv())
    else:
        sys.stdout.write(text)
    return 0


def _add_common(p):
    S = argparse.SUPPRESS
    p.add_argument("--config", default=None, help="JSON file with default settings")
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--out", default=S)
    p.add_argument("--format", choices=("csv", "json"), default=S)
    p.add_argument("--threads", type=int, default=S)


def _add_data(p):
    S = argparse.SUPPRESS
    p.add_argument("input", help="curve-matrix CSV, one curve per row")
    p.add_argument("--header", choices=("auto", "yes", "no"), default=S,
                   help="first row holds the grid abscissae (default: auto-detect)")
    p.add_argument("--drop-incomplete", dest="drop_incomplete", action="store_true", default=S,
                   help="skip curves with missing cells instead of failing")


def _add_kfsd(p):
    S = argparse.SUPPRESS
    g = p.add_mutually_exclusive_group()
    g.add_argument("--sigma-percentile", dest="sigma_percentile", type=float, default=S)
    g.add_argument("--auto-sigma", dest="sigma_percentile", action="store_const", const=None,
                   default=S, help="tune the KFSD percentile on the data (default)")
    p.add_argument("--gamma", type=float, default=S)
    p.add_argument("--J", type=int, default=S, help="tuning replications")


def build_parser():
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="kfsd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate MM1-MM6 datasets")
    _add_common(p)
    p.add_argument("--model", default=S)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--alpha", default=S)
    p.add_argument("--R", type=int, default=S)
    p.add_argument("--noise", choices=("pointwise", "shift"), default=S)

    p = sub.add_parser("depth", help="depth of every curve in a CSV")
    _add_common(p)
    _add_data(p)
    p.add_argument("--depth", default=S)
    p.add_argument("--sigma-percentile", dest="sigma_percentile", type=float, default=S)

    p = sub.add_parser("tune", help="select the KFSD bandwidth percentile")
    _add_common(p)
    _add_data(p)
    _add_kfsd(p)

    p = sub.add_parser("detect", help="flag outlying curves in a CSV")
    _add_common(p)
    _add_data(p)
    _add_kfsd(p)
    p.add_argument("--method", default=S,
                   help="KFSD_smo|KFSD_tri|KFSD_wei|fbp|b_tri|b_wei or a full name like FBP+MBD")
    p.add_argument("--depth", default=S)
    p.add_argument("--alpha", default=S, help="assumed contamination level (sets r and alpha_T)")
    p.add_argument("--delta", type=float, default=S)
    p.add_argument("--r", type=float, default=S)
    p.add_argument("--fap", type=float, default=S)
    p.add_argument("--nz-factor", dest="nz_factor", type=int, default=S)
    p.add_argument("--B", type=int, default=S)

    p = sub.add_parser("bench", help="Monte Carlo study tables")
    _add_common(p)
    p.add_argument("--model", default=S, help="comma-separated, e.g. MM1,MM2")
    p.add_argument("--alpha", default=S, help="comma-separated, e.g. 0.02,0.05")
    p.add_argument("--method", default=S, help="comma-separated table names")
    p.add_argument("--R", type=int, default=S)
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--J", type=int, default=S)
    p.add_argument("--B", type=int, default=S)
    p.add_argument("--noise", choices=("pointwise", "shift"), default=S)
    p.add_argument("--dry-run", dest="dry_run", action="store_true", default=S)
    return parser


def main(argv=None):
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)
    input_path = args.pop("input", None)
    try:
        cfg = load_config(args, config_path)
        if command == "simulate":
            return cmd_simulate(cfg)
        if command == "bench":
            return cmd_bench(cfg)
        if not Path(input_path).is_file():
            raise ConfigError(f"input file not found: {input_path}")
        if command == "depth":
            return cmd_depth(cfg, input_path)
        if command == "tune":
            return cmd_tune(cfg, input_path)
        return cmd_detect(cfg, input_path)
    except KFSDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
