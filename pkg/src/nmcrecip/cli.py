"""Command-line front end.

    nmcrecip <command> --config FILE [--seed INT] [--paths N] [--out DIR] [--workers K]

Commands: simulate, bridge, invariant, girsanov, duality-check,
membership-test. Configs are YAML documents; models are mappings with a
``kind`` key and path sources are mappings with a ``type`` key (see README).

Path sampling is split into fixed-size chunks, chunk ``c`` drawing from
``RngStream(seed, c)``, so artifacts do not depend on the worker count.

Exit codes: 0 pass/accept, 2 fail/reject, 3 inconclusive, 64 usage or
config error, 70 numeric failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path as FsPath

import numpy as np
import yaml

from . import __version__
from .core.errors import NumericError
from .core.functionals import SimpleFunctional
from .core.models import Constant, IntensityModel, model_from_config
from .core.paths import PathBatch, read_paths_csv, write_paths_csv
from .core.perturbations import perturbation_from_config
from .core.rng import RngStream
from .intensity import same_reciprocal_class
from .measure import girsanov_log_density
from .sampling import (
    sample_bridge_batch,
    sample_bridge_rejection_batch,
    sample_nmc_batch,
    sample_poisson_bridge_batch,
    superpose_batches,
    thin_batch,
)
from .variational import DEFAULT_DICTIONARY, FORMS, duality_check, membership_test

EXIT_OK = 0
EXIT_REJECT = 2
EXIT_INCONCLUSIVE = 3
EXIT_USAGE = 64
EXIT_NUMERIC = 70

COMMANDS = ("simulate", "bridge", "invariant", "girsanov", "duality-check", "membership-test")
SEED_ENV = "NMCRECIP_SEED"
CHUNK = 10_000


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


# -- config -----------------------------------------------------------------


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = FsPath(path)
    if not p.is_file():
        raise ConfigError(f"config file {path} not found")
    try:
        cfg = yaml.safe_load(p.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    if cfg is None:
        return {}
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    return cfg


def _model(cfg, key: str = "model") -> IntensityModel:
    if key not in cfg:
        raise ConfigError(f"config needs '{key}'")
    return model_from_config(cfg[key])


def _int(cfg, key, default=None) -> int:
    val = cfg.get(key, default)
    if val is None:
        raise ConfigError(f"config needs '{key}'")
    if isinstance(val, bool) or int(val) != val:
        raise ConfigError(f"'{key}' must be an integer, got {val!r}")
    return int(val)


def _check_source(spec) -> None:
    """Parse-time validation: files exist, probabilities in [0, 1]."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("path source needs a 'type' key")
    kind = spec["type"]
    if kind == "file":
        if not FsPath(str(spec.get("path", ""))).is_file():
            raise ConfigError(f"path file {spec.get('path')!r} not found")
    elif kind == "thin":
        c = float(spec.get("c", -1))
        if not 0.0 <= c <= 1.0:
            raise ConfigError(f"thinning probability {c} outside [0, 1]")
        _check_source(spec.get("source", {"type": "forward", **{k: spec[k] for k in ("model", "x") if k in spec}}))
    elif kind == "mixture":
        comps = spec.get("components") or []
        if not comps:
            raise ConfigError("mixture needs components")
        weights = [float(c.get("weight", 0)) for c in comps]
        if min(weights) < 0 or sum(weights) <= 0:
            raise ConfigError("mixture weights must be nonnegative with positive sum")
        for c in comps:
            _check_source(c.get("source"))
    elif kind not in ("forward", "bridge", "rejection_bridge", "poisson_bridge", "superpose"):
        raise ConfigError(f"unknown path source type {kind!r}")


def _dictionary(cfg):
    spec = cfg.get("dictionary", "default")
    if spec == "default":
        return list(DEFAULT_DICTIONARY)
    if isinstance(spec, dict):
        phis = [SimpleFunctional.parse(f) for f in spec["functionals"]]
        us = [perturbation_from_config(u) for u in spec["perturbations"]]
        return [(f, u) for f in phis for u in us]
    return [(SimpleFunctional.parse(e["functional"]), perturbation_from_config(e["perturbation"])) for e in spec]


# -- path sources -------------------------------------------------------------


def _sample_chunk(spec: dict, n: int, gen: np.random.Generator) -> PathBatch:
    kind = spec["type"]
    x = int(spec.get("x", 0))
    if kind == "forward":
        return sample_nmc_batch(model_from_config(spec["model"]), x, n, gen)
    if kind == "bridge":
        return sample_bridge_batch(model_from_config(spec["model"]), x, int(spec["y"]), n, gen)
    if kind == "rejection_bridge":
        return sample_bridge_rejection_batch(model_from_config(spec["model"]), x, int(spec["y"]), n, gen)[0]
    if kind == "poisson_bridge":
        return sample_poisson_bridge_batch(x, int(spec["y"]), n, gen)
    if kind == "thin":
        inner = spec.get("source", {"type": "forward", "model": spec.get("model"), "x": x})
        return thin_batch(_sample_chunk(inner, n, gen), float(spec["c"]), gen)
    if kind == "superpose":
        a, b = spec["sources"]
        return superpose_batches(_sample_chunk(a, n, gen), _sample_chunk(b, n, gen))
    if kind == "mixture":
        comps = spec["components"]
        w = np.array([float(c["weight"]) for c in comps])
        label = gen.choice(len(comps), size=n, p=w / w.sum())
        parts = [None] * len(comps)
        for k, comp in enumerate(comps):
            parts[k] = _sample_chunk(comp["source"], int((label == k).sum()), gen)
        order = np.argsort(np.concatenate([np.nonzero(label == k)[0] for k in range(len(comps))]), kind="stable")
        return PathBatch.concat(parts).subset(order)
    raise ConfigError(f"cannot sample from source type {kind!r}")


def _chunk_job(args):
    spec, n, seed, index = args
    return _sample_chunk(spec, n, RngStream(seed, index).generator())


def sample_source(spec: dict, n: int, seed: int, workers: int = 1) -> PathBatch:
    """``n`` paths from a source spec, deterministic in ``(spec, n, seed)``."""
    if spec["type"] == "file":
        with open(spec["path"]) as fh:
            batch = read_paths_csv(fh)
        if len(batch) == 0:
            raise ConfigError(f"path file {spec['path']} is empty")
        return batch
    jobs = [(spec, min(CHUNK, n - lo), seed, i) for i, lo in enumerate(range(0, n, CHUNK))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_job, jobs))
    else:
        parts = [_chunk_job(j) for j in jobs]
    return PathBatch.concat(parts)


# -- artifacts ----------------------------------------------------------------


def _write_json(out: FsPath, name: str, payload: dict) -> None:
    with open(out / name, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, allow_nan=True)
        fh.write("\n")


def _write_paths(out: FsPath, name: str, batch: PathBatch) -> None:
    with open(out / name, "w") as fh:
        write_paths_csv(batch, fh)


def _envelope(command, cfg, seed, n):
    echo = copy.deepcopy(cfg)
    echo.update({"command": command, "seed": seed, "paths": n})
    return {"version": __version__, "config": echo}


# -- commands -----------------------------------------------------------------


def _cmd_simulate(cfg, seed, n, workers, out):
    model = _model(cfg)
    spec = {"type": "forward", "model": cfg["model"], "x": _int(cfg, "x", 0)}
    batch = sample_source(spec, n, seed, workers)
    _write_paths(out, "paths.csv", batch)
    inc = batch.counts.astype(float)
    values, freq = np.unique(batch.counts, return_counts=True)
    res = {
        "model": model.kind,
        "mean_increment": float(inc.mean()),
        "stderr": float(inc.std(ddof=1) / np.sqrt(n)) if n > 1 else None,
        "count_histogram": {str(int(v)): int(f) for v, f in zip(values, freq)},
    }
    return EXIT_OK, res, f"simulate: {n} paths, mean increment {res['mean_increment']:.6g}"


def _cmd_bridge(cfg, seed, n, workers, out):
    _model(cfg)
    x, y = _int(cfg, "x", 0), _int(cfg, "y")
    method = cfg.get("method", "htransform")
    types = {"htransform": "bridge", "rejection": "rejection_bridge", "poisson": "poisson_bridge"}
    if method not in types:
        raise ConfigError(f"unknown bridge method {method!r}")
    if method == "poisson" and not isinstance(model_from_config(cfg["model"]), Constant):
        raise ConfigError("order-statistics bridge needs a constant intensity")
    if y < x:
        raise ConfigError(f"bridge needs y >= x, got x={x}, y={y}")
    batch = sample_source({"type": types[method], "model": cfg["model"], "x": x, "y": y}, n, seed, workers)
    _write_paths(out, "paths.csv", batch)
    first = batch.times[batch.counts > 0, 0] if batch.width else np.zeros(0)
    res = {"method": method, "x": x, "y": y, "mean_first_jump": float(first.mean()) if first.size else None}
    return EXIT_OK, res, f"bridge: {n} paths {x}->{y} by {method}"


def _cmd_invariant(cfg, seed, n, workers, out):
    m1, m2 = _model(cfg, "model"), _model(cfg, "other")
    n_times = _int(cfg, "n_times", 1001)
    same, dev = same_reciprocal_class(m1, m2, n_times=n_times, tol=cfg.get("tol"))
    verdict = "same-class" if same else "different-class"
    res = {"verdict": verdict, "max_deviation": float(dev), "n_times": n_times}
    return (EXIT_OK if same else EXIT_REJECT), res, f"invariant: {verdict}, max deviation {dev:.3e}"


def _cmd_girsanov(cfg, seed, n, workers, out):
    num, den = _model(cfg, "model"), _model(cfg, "reference")
    if "source" in cfg:
        spec = cfg["source"]
    else:
        spec = {"type": "forward", "model": cfg["reference"], "x": _int(cfg, "x", 0)}
    batch = sample_source(spec, n, seed, workers)
    logs = girsanov_log_density(num, den, batch)
    with open(out / "girsanov.csv", "w") as fh:
        fh.write("path,log_density\n")
        for i, v in enumerate(logs):
            fh.write(f"{i},{v:.17g}\n")
    dens = np.exp(logs)
    mean = float(dens.mean())
    se = float(dens.std(ddof=1) / np.sqrt(len(dens))) if len(dens) > 1 else float("nan")
    z = (mean - 1.0) / se if se > 0 else 0.0
    res = {
        "n_paths": len(batch),
        "normalization": {"mean_density": mean, "stderr": se, "z_score": z, "within_3_stderr": bool(abs(z) <= 3)},
    }
    return EXIT_OK, res, f"girsanov: mean density {mean:.6g} +- {se:.2g}"


def _duality_inputs(cfg, seed, n, workers):
    if "source" not in cfg:
        raise ConfigError("config needs a path 'source'")
    batch = sample_source(cfg["source"], n, seed, workers)
    return batch, _dictionary(cfg), float(cfg.get("alpha_level", 0.01))


def _cmd_duality(cfg, seed, n, workers, out):
    form = cfg.get("form", "invariant")
    if form not in FORMS:
        raise ConfigError(f"unknown form {form!r}")
    if "invariant" in cfg:
        inv = cfg["invariant"]
        inv = model_from_config(inv) if isinstance(inv, dict) else float(inv)
    else:
        inv = _model(cfg)
    batch, dictionary, alpha = _duality_inputs(cfg, seed, n, workers)
    report = duality_check(batch, inv, dictionary, alpha, form)
    code = {"pass": EXIT_OK, "fail": EXIT_REJECT, "inconclusive": EXIT_INCONCLUSIVE}[report.verdict]
    return code, report.to_dict(), f"duality-check: {report.verdict} (max |z| {report.max_abs_z:.3g}, N={report.n_paths})"


def _cmd_membership(cfg, seed, n, workers, out):
    model = _model(cfg)
    batch, dictionary, alpha = _duality_inputs(cfg, seed, n, workers)
    result = membership_test(batch, model, dictionary, alpha)
    code = {"ACCEPT": EXIT_OK, "REJECT": EXIT_REJECT, "INCONCLUSIVE": EXIT_INCONCLUSIVE}[result.verdict]
    return code, result.to_dict(), f"membership-test: {result.verdict} ({result.label})"


_HANDLERS = {
    "simulate": _cmd_simulate,
    "bridge": _cmd_bridge,
    "invariant": _cmd_invariant,
    "girsanov": _cmd_girsanov,
    "duality-check": _cmd_duality,
    "membership-test": _cmd_membership,
}
_SAMPLES = {"simulate", "bridge", "girsanov", "duality-check", "membership-test"}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nmcrecip", description="Nice Markov counting processes and their reciprocal classes.")
    parser.add_argument("--version", action="version", version=f"nmcrecip {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--seed", type=int, help=f"RNG seed (overrides ${SEED_ENV} and the config)")
        p.add_argument("--paths", type=int, help="number of paths N")
        p.add_argument("--out", default="out", help="artifact directory (default: out)")
        p.add_argument("--workers", type=int, default=1, help="worker processes for sampling")
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = _load_config(args.config)
        if args.seed is not None:
            seed = args.seed
        elif os.environ.get(SEED_ENV):
            seed = int(os.environ[SEED_ENV])
        else:
            seed = _int(cfg, "seed", 0)
        if seed < 0:
            raise ConfigError("seed must be nonnegative")
        n = args.paths if args.paths is not None else _int(cfg, "paths", 10_000)
        if args.command in _SAMPLES and n < 1:
            raise ConfigError(f"number of paths must be at least 1, got {n}")
        if args.workers < 1:
            raise ConfigError("workers must be at least 1")
        if "source" in cfg:
            _check_source(cfg["source"])
        out = FsPath(args.out)
        out.mkdir(parents=True, exist_ok=True)
        code, result, summary = _HANDLERS[args.command](cfg, seed, n, args.workers, out)
    except NumericError as exc:
        print(f"nmcrecip: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, TypeError) as exc:
        print(f"nmcrecip: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    payload = _envelope(args.command, cfg, seed, n)
    payload["result"] = result
    payload["exit_code"] = code
    _write_json(out, f"{args.command.replace('-', '_')}.json", payload)
    print(summary)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
