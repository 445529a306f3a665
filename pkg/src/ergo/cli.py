"""Command line entry point: ``ergo <subcommand> --config FILE [--seed N] [--out DIR] [--set KEY=VALUE ...]``.

Configuration precedence, lowest first: built-in defaults, the JSON config
file, then ``--seed`` / ``--set`` flags.  All numeric parameters are validated
before any computation or output happens.

Exit codes: 0 success, 2 config error, 3 capacity/numeric error, 4 oracle
violation, 5 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import config_model, cuts, degree_law, resilience, sampler, validation
from .errors import ConfigError, ErgoError, IOFailure
from .graph import Graph, degree_stats, format_edge_list, pair_count, read_edge_list
from .reports import csv_text, dumps, emit_report, energy_trace_csv, envelope, render

REQUIRED = object()


@dataclass(frozen=True)
class Field:
    kind: str  # int | float | str | bool | int_list | float_list
    default: Any = REQUIRED


SCHEMAS: dict[str, dict[str, Field]] = {
    "sample": {
        "n": Field("int"),
        "beta": Field("float"),
        "edges": Field("int", None),
        "c": Field("float", None),
        "steps": Field("int", None),
        "burn_in": Field("int", None),
        "thinning": Field("int", None),
        "snapshots": Field("int", 5),
        "replicas": Field("int", 1),
    },
    "degrees": {
        "n": Field("int"),
        "c": Field("float"),
        "beta": Field("float"),
        "alpha1": Field("float", None),
        "alpha2": Field("float", None),
        "source": Field("str", "law"),
        "samples": Field("int", 1),
    },
    "configmodel": {
        "degrees": Field("int_list", None),
        "n": Field("int", None),
        "regular": Field("int", None),
        "c": Field("float", None),
        "beta": Field("float", None),
        "trials": Field("int", 10_000),
        "erased_trials": Field("int", 1_000),
    },
    "cuts": {
        "graph": Field("str", None),
        "n": Field("int", None),
        "c": Field("float"),
        "beta": Field("float", 1.0),
        "trials": Field("int", 100),
    },
    "spectral": {
        "graph": Field("str", None),
        "n": Field("int", None),
        "edges": Field("int", None),
        "beta": Field("float", 1.0),
    },
    "resilience": {
        "n": Field("int"),
        "c": Field("float"),
        "beta": Field("float"),
        "p_grid": Field("float_list", [0.30, 0.45, 0.55, 0.65, 0.72]),
        "trials": Field("int", 200),
        "coupled": Field("bool", True),
        "profile_trials": Field("int", 50),
    },
    "validate": {
        "chain_steps": Field("int", 1_000_000),
        "percolation_trials": Field("int", 10_000),
    },
}


def _coerce(key: str, f: Field, value):
    if value is None:
        return None
    try:
        if f.kind == "int":
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            return int(value)
        if f.kind == "float":
            if isinstance(value, bool):
                raise ValueError
            out = float(value)
            if not math.isfinite(out):
                raise ValueError
            return out
        if f.kind == "str":
            if not isinstance(value, str):
                raise ValueError
            return value
        if f.kind == "bool":
            if isinstance(value, bool):
                return value
            if isinstance(value, str) and value.lower() in ("true", "false"):
                return value.lower() == "true"
            raise ValueError
        if f.kind in ("int_list", "float_list"):
            if isinstance(value, str):
                value = json.loads(value)
            if not isinstance(value, list):
                raise ValueError
            inner = Field(f.kind.split("_")[0])
            return [_coerce(key, inner, v) for v in value]
    except (TypeError, ValueError, json.JSONDecodeError):
        raise ConfigError(f"field {key!r} must be of type {f.kind}, got {value!r}") from None
    raise ConfigError(f"unknown field kind {f.kind}")  # pragma: no cover


def resolve_config(command: str, file_values: dict, overrides: dict) -> dict:
    schema = SCHEMAS[command]
    merged = {**file_values, **overrides}
    unknown = sorted(set(merged) - set(schema))
    if unknown:
        raise ConfigError(f"unknown field(s) for {command!r}: {', '.join(unknown)}")
    out = {}
    for key, f in schema.items():
        if key in merged:
            out[key] = _coerce(key, f, merged[key])
        elif f.default is REQUIRED:
            raise ConfigError(f"missing required field {key!r} for {command!r}")
        else:
            out[key] = f.default
    return out


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(sampler.mix64(seed, stream))


# -- subcommands -----------------------------------------------------------------------
Outputs = dict[str, str]


def _edge_target(n: int, c: float | None, edges: int | None) -> tuple[int, int | None]:
    if edges is not None:
        return edges, None
    _require(c is not None and c > 0, "either 'edges' or a positive 'c' is required")
    total = degree_law.target_total(c, n)
    return total // 2, total


def _check_sample(cfg: dict) -> None:
    _require(cfg["n"] >= 2, "n must be >= 2")
    _require(cfg["beta"] >= 0, "beta must be >= 0")
    _require(cfg["replicas"] >= 1 and cfg["snapshots"] >= 0, "replicas >= 1 and snapshots >= 0 required")
    m, _ = _edge_target(cfg["n"], cfg["c"], cfg["edges"])
    _require(0 < m < pair_count(cfg["n"]), f"edge count {m} leaves no valid swap move")


def _chain_config(cfg: dict, seed: int) -> sampler.ChainConfig:
    m, _ = _edge_target(cfg["n"], cfg["c"], cfg["edges"])
    burn = cfg["burn_in"] if cfg["burn_in"] is not None else sampler.default_burn_in(m)
    thin = cfg["thinning"] if cfg["thinning"] is not None else sampler.default_thinning(m)
    steps = cfg["steps"] if cfg["steps"] is not None else burn + thin * cfg["snapshots"]
    return sampler.ChainConfig(cfg["beta"], cfg["n"], m, steps, burn, thin, seed).resolved()


def cmd_sample(cfg: dict, seed: int) -> tuple[dict, Outputs, int | None]:
    base = _chain_config(cfg, seed)
    files: Outputs = {}
    replicas = []
    for r in range(cfg["replicas"]):
        run_cfg = base if cfg["replicas"] == 1 else replace(base, seed=sampler.mix64(seed, r))
        res = sampler.run_chain(run_cfg)
        for k, g in enumerate(res.graphs()):
            files[f"sample_r{r}_snapshot_{k:04d}.txt"] = format_edge_list(g)
        files[f"energy_r{r}.csv"] = csv_text(*energy_trace_csv(res.energy_trace))
        ds = degree_stats(res.final)
        replicas.append(
            {
                "replica": r,
                "seed": run_cfg.seed,
                "snapshots": len(res.snapshots),
                "acceptance_rate": res.acceptance_rate,
                "final_energy": int(res.energy_trace[-1]),
                "final_degree_variance": ds.variance,
                "final_d_min": ds.d_min,
                "final_d_max": ds.d_max,
            }
        )
    _, total = _edge_target(cfg["n"], cfg["c"], cfg["edges"])
    results = {"chain": {k: v for k, v in base.__dict__.items() if k != "seed"}, "replicas": replicas}
    return results, files, total


def _check_degrees(cfg: dict) -> None:
    _require(cfg["n"] >= 3 and cfg["c"] > 0 and cfg["beta"] > 0, "need n >= 3, c > 0, beta > 0")
    _require(cfg["source"] in ("law", "ergm", "er"), "source must be one of law, ergm, er")
    _require(cfg["samples"] >= 1, "samples must be >= 1")
    total = degree_law.target_total(cfg["c"], cfg["n"])
    _require(total // 2 < pair_count(cfg["n"]), "c too large for a simple graph on n nodes")


def cmd_degrees(cfg: dict, seed: int) -> tuple[dict, Outputs, int | None]:
    beta, c, n = cfg["beta"], cfg["c"], cfg["n"]
    a1, a2 = degree_law.default_alphas(beta)
    a1 = cfg["alpha1"] if cfg["alpha1"] is not None else a1
    a2 = cfg["alpha2"] if cfg["alpha2"] is not None else a2
    params = degree_law.calibrate_gamma(beta, c, n)
    mom = degree_law.moments(params)
    total = degree_law.target_total(c, n)
    rng = _rng(seed, 0)
    reports = []
    for i in range(cfg["samples"]):
        if cfg["source"] == "law":
            d = degree_law.sample_conditioned_degrees(params, total, rng)
        elif cfg["source"] == "ergm":
            d = degree_stats(sampler.sample_erg(n, total // 2, beta, sampler.mix64(seed, i + 1)))
        else:
            d = degree_stats(resilience.er_sample(n, total // 2, rng))
        reports.append(degree_law.concentration_report(d, c, n, a1, a2))
    law = {
        "gamma": params.gamma,
        "log_F": params.log_F,
        "x_gamma": params.x_gamma,
        "x_gamma_closed_form": params.x_gamma_closed,
        "k_gamma": params.k_gamma,
        "alpha": params.alpha,
        "mean": mom.mean,
        "variance": mom.variance,
    }
    return {"law": law, "concentration": reports}, {}, total


def _config_degrees(cfg: dict, seed: int) -> list[int]:
    if cfg["degrees"] is not None:
        return cfg["degrees"]
    if cfg["regular"] is not None:
        return [cfg["regular"]] * cfg["n"]
    params = degree_law.calibrate_gamma(cfg["beta"], cfg["c"], cfg["n"])
    total = degree_law.target_total(cfg["c"], cfg["n"])
    return list(degree_law.sample_conditioned_degrees(params, total, _rng(seed, 0)).degrees)


def _check_configmodel(cfg: dict) -> None:
    _require(cfg["trials"] >= 1 and cfg["erased_trials"] >= 1, "trials must be >= 1")
    if cfg["degrees"] is not None:
        _require(all(d >= 0 for d in cfg["degrees"]), "degrees must be non-negative")
        _require(sum(cfg["degrees"]) % 2 == 0, "degree sum must be even")
    elif cfg["regular"] is not None:
        _require(cfg["n"] is not None and cfg["n"] >= 1, "'regular' needs 'n'")
        _require(cfg["regular"] >= 0 and cfg["regular"] * cfg["n"] % 2 == 0, "n * regular must be even")
    else:
        _require(
            None not in (cfg["n"], cfg["c"], cfg["beta"]),
            "give 'degrees', or 'n' + 'regular', or 'n' + 'c' + 'beta'",
        )
        _require(cfg["n"] >= 3 and cfg["c"] > 0 and cfg["beta"] > 0, "need n >= 3, c > 0, beta > 0")


def cmd_configmodel(cfg: dict, seed: int) -> tuple[dict, Outputs, int | None]:
    d = _config_degrees(cfg, seed)
    stats = config_model.simple_fraction(d, cfg["trials"], _rng(seed, 1))
    erased = config_model.erased_stats(d, cfg["erased_trials"], _rng(seed, 2))
    total = sum(d)
    return {"degree_total": total, "simple": stats, "erased": erased}, {}, total


def _graph_source(cfg: dict, seed: int, m: int | None) -> Graph:
    if cfg["graph"] is not None:
        try:
            return read_edge_list(cfg["graph"])
        except OSError as exc:
            raise IOFailure(f"cannot read graph {cfg['graph']}: {exc}") from exc
    return sampler.sample_erg(cfg["n"], m, cfg["beta"], sampler.mix64(seed, 0))


def _check_cuts(cfg: dict) -> None:
    _require(cfg["c"] > 0 and cfg["trials"] >= 1, "c > 0 and trials >= 1 required")
    if cfg["graph"] is None:
        _require(cfg["n"] is not None and cfg["n"] >= 4, "give 'graph' or 'n' >= 4")
        m = degree_law.target_total(cfg["c"], cfg["n"]) // 2
        _require(0 < m < pair_count(cfg["n"]), "c too large for a simple graph on n nodes")


def cmd_cuts(cfg: dict, seed: int) -> tuple[dict, Outputs, int | None]:
    total = None if cfg["graph"] else degree_law.target_total(cfg["c"], cfg["n"])
    g = _graph_source(cfg, seed, None if total is None else total // 2)
    profile = cuts.cut_profile(g, cfg["c"], cfg["trials"], _rng(seed, 1))
    return {"n": g.n, "edges": g.edge_count, "profile": profile}, {"cuts.csv": render(profile, "csv")}, total


def _check_spectral(cfg: dict) -> None:
    if cfg["graph"] is None:
        _require(cfg["n"] is not None and cfg["edges"] is not None, "give 'graph' or 'n' + 'edges'")
        _require(2 <= cfg["n"] <= cuts.BRUTE_MAX_N, f"n must lie in [2, {cuts.BRUTE_MAX_N}]")
        _require(0 < cfg["edges"] < pair_count(cfg["n"]), "edges leaves no valid swap move")


def cmd_spectral(cfg: dict, seed: int) -> tuple[dict, Outputs, int | None]:
    g = _graph_source(cfg, seed, cfg["edges"])
    return {"n": g.n, "edges": g.edge_count, "report": cuts.cheeger_report(g)}, {}, None


def _check_resilience(cfg: dict) -> None:
    _require(cfg["n"] >= 4 and cfg["c"] > 0 and cfg["beta"] >= 0, "need n >= 4, c > 0, beta >= 0")
    _require(all(0 <= p <= 1 for p in cfg["p_grid"]), "p_grid entries must lie in [0, 1]")
    _require(cfg["trials"] >= 1 and cfg["profile_trials"] >= 1, "trial counts must be >= 1")
    m = degree_law.target_total(cfg["c"], cfg["n"]) // 2
    _require(0 < m < pair_count(cfg["n"]), "c too large for a simple graph on n nodes")


def cmd_resilience(cfg: dict, seed: int) -> tuple[dict, Outputs, int | None]:
    n, c = cfg["n"], cfg["c"]
    total = degree_law.target_total(c, n)
    m = total // 2
    erg = sampler.sample_erg(n, m, cfg["beta"], sampler.mix64(seed, 0))
    er = resilience.er_sample(n, m, _rng(seed, 1))
    profile = cuts.cut_profile(erg, c, cfg["profile_trials"], _rng(seed, 2))
    delta = min(max(profile.empirical_delta, 0.0), 0.999)
    reports = {}
    files = {}
    for name, g, stream in (("erg", erg, 3), ("er", er, 4)):
        rep = resilience.disconnect_probability(g, cfg["p_grid"], cfg["trials"], _rng(seed, stream), cfg["coupled"])
        rep = resilience.with_thresholds(rep, c, delta, model=name, baseline="G(n,m) with the same edge count")
        reports[name] = rep
        files[f"resilience_{name}.csv"] = render(rep, "csv")
    results = {
        "empirical_delta": profile.empirical_delta,
        "delta_used": delta,
        "erg": reports["erg"],
        "er": reports["er"],
    }
    return results, files, total


def _check_validate(cfg: dict) -> None:
    _require(cfg["chain_steps"] >= 1 and cfg["percolation_trials"] >= 1, "counts must be >= 1")


def cmd_validate(cfg: dict, seed: int) -> tuple[dict, Outputs, int | None]:
    checks = validation.run_validation(seed, cfg["chain_steps"], cfg["percolation_trials"])
    return {"passed": all(c.passed for c in checks), "checks": checks}, {}, None


COMMANDS: dict[str, tuple[Callable, Callable]] = {
    "sample": (_check_sample, cmd_sample),
    "degrees": (_check_degrees, cmd_degrees),
    "configmodel": (_check_configmodel, cmd_configmodel),
    "cuts": (_check_cuts, cmd_cuts),
    "spectral": (_check_spectral, cmd_spectral),
    "resilience": (_check_resilience, cmd_resilience),
    "validate": (_check_validate, cmd_validate),
}


def _parse_set(items: list[str]) -> dict:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ergo", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat JSON object with the subcommand's parameters")
    parser.add_argument("--seed", type=int, default=None, help="64-bit RNG seed (default: config 'seed' or 0)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config field")
    return parser


def run(command: str, file_values: dict, overrides: dict, seed: int, out_dir: Path) -> int:
    check, execute = COMMANDS[command]
    cfg = resolve_config(command, file_values, overrides)
    check(cfg)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    results, files, total = execute(cfg, seed)
    report = envelope(command, cfg, seed, results, total)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            (out_dir / name).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IOFailure(f"cannot write outputs to {out_dir}: {exc}") from exc
    emit_report(report, "json", out_dir / f"{command}.json")
    if command == "validate" and not results["passed"]:
        validation.assert_valid(results["checks"])
    return 0


def _error_record(kind: str, exc: Exception, code: int) -> str:
    return dumps({"error": kind, "type": type(exc).__name__, "message": str(exc), "exit_code": code})


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values: dict = {}
        if args.config:
            try:
                file_values = json.loads(Path(args.config).read_text())
            except OSError as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {args.config} is not valid JSON: {exc}") from exc
            if not isinstance(file_values, dict):
                raise ConfigError("config file must hold a flat JSON object")
        file_seed = file_values.pop("seed", 0)
        seed = args.seed if args.seed is not None else file_seed
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError(f"seed must be an integer, got {seed!r}")
        return run(args.command, file_values, _parse_set(args.set), seed, Path(args.out))
    except ErgoError as exc:
        kind = {2: "config error", 3: "capacity error", 4: "oracle violation", 5: "io error"}.get(exc.exit_code, "error")
        sys.stderr.write(_error_record(kind, exc, exc.exit_code))
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
