"""Command line front end: ``emlab <subcommand> --config <path>``.

Exit status is 0 on success, 2 for a config that does not parse or
validate, and 1 when the run itself fails.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from . import __version__
from .circuits import CircuitFamilySpec, build_circuit
from .limits import COST_COLUMNS, build_discrimination_ensemble, fano_lower_bound, mitigation_cost_chart
from .mitigation import ObservableSet, weak_mitigate
from .noise import noise_from_json, noise_to_json
from .parity import PARITY_COLUMNS, weak_to_strong_experiment
from .purity import decay_sweep, nonunital_decay_experiment
from .records import RECORD_COLUMNS, derive_seed, emit, json_text, read_csv, resolve_workers
from .validation import CHECKS, VALIDATE_COLUMNS, format_table, run_suite

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "run", "main", "MITIGATE_COLUMNS"]

SUBCOMMANDS = ("decay", "nonunital", "mitigate", "bounds", "parity", "validate")
MITIGATE_COLUMNS = RECORD_COLUMNS + ("protocol", "observable", "shots", "cap_exceeded", "required_shots")


class ConfigError(ValueError):
    """The config file is unreadable or describes an invalid experiment."""


class RunFailure(RuntimeError):
    """The experiment ran but did not produce a valid result."""


@dataclass
class ExperimentConfig:
    """A validated config: ``params`` holds ready-to-use library arguments."""

    subcommand: str
    seed: int
    raw: dict
    params: dict
    outputs: dict
    base_dir: Path = field(default_factory=Path.cwd)


def load_config(path) -> dict:
    """Read JSON, or TOML when the file name ends in ``.toml``."""
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    try:
        if p.suffix.lower() == ".toml":
            obj = tomllib.loads(data.decode())
        else:
            obj = json.loads(data)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse config {p}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config must be a mapping at the top level")
    return obj


def _keys(obj: dict, required: set, optional: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a mapping")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    extra = set(obj) - required - optional
    if extra:
        raise ConfigError(f"{where}: unknown keys {sorted(extra)}")


def _int_list(v, name: str, lo: int = 0) -> list[int]:
    if isinstance(v, int) and not isinstance(v, bool):
        v = [v]
    if not isinstance(v, list) or not v or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
        raise ConfigError(f"{name} must be a non-empty list of integers")
    if min(v) < lo:
        raise ConfigError(f"{name} entries must be >= {lo}")
    return v


def _positive_int(v, name: str) -> int:
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise ConfigError(f"{name} must be a positive integer")
    return v


def _unit_interval(v, name: str) -> float:
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not 0 < v < 1:
        raise ConfigError(f"{name} must lie in (0, 1)")
    return float(v)


def _noise_list(obj, where: str = "noise") -> list:
    """A noise mapping whose ``p``/``gamma`` may be a list, expanded to a grid."""
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a mapping")
    for key in ("p", "gamma"):
        if isinstance(obj.get(key), list):
            if not obj[key]:
                raise ConfigError(f"{where}.{key} is an empty list")
            return [x for v in obj[key] for x in _noise_list({**obj, key: v}, where)]
    try:
        return [noise_from_json(obj)]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _circuit(obj, seed: int) -> CircuitFamilySpec:
    if not isinstance(obj, dict):
        raise ConfigError("circuit must be a mapping")
    try:
        return CircuitFamilySpec.from_dict({"seed": seed, **obj})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"circuit: {exc}") from exc


def _prepare_decay(cfg: dict, seed: int, base: Path) -> dict:
    _keys(cfg, {"family", "ns", "Ds", "noise"}, {"trials", "circuits", "d", "seed", "outputs"}, "decay config")
    if cfg["family"] not in ("mixing", "identity", "brickwork"):
        raise ConfigError("decay family must be mixing, identity or brickwork")
    noises = _noise_list(cfg["noise"])
    if any(n.kind == "amplitude-damping" for n in noises):
        raise ConfigError("decay sweeps need Pauli noise; use the nonunital subcommand")
    circuits = cfg.get("circuits")
    return {
        "family": cfg["family"],
        "ns": _int_list(cfg["ns"], "ns", 1),
        "Ds": _int_list(cfg["Ds"], "Ds", 0),
        "noises": noises,
        "trials": _positive_int(cfg.get("trials", 10_000), "trials"),
        "circuits": None if circuits is None else _positive_int(circuits, "circuits"),
        "d": _positive_int(cfg.get("d", 1), "d"),
    }


def _prepare_nonunital(cfg: dict, seed: int, base: Path) -> dict:
    _keys(cfg, {"ns", "Ds", "gamma"}, {"trials", "seed", "outputs"}, "nonunital config")
    g = cfg["gamma"]
    gammas = g if isinstance(g, list) else [g]
    if not gammas or not all(isinstance(x, (int, float)) and 0 <= x <= 1 for x in gammas):
        raise ConfigError("gamma must be a number or list of numbers in [0, 1]")
    ns = _int_list(cfg["ns"], "ns", 1)
    if max(ns) > 8:
        raise ConfigError("nonunital runs are dense and limited to n <= 8")
    return {
        "ns": ns,
        "Ds": _int_list(cfg["Ds"], "Ds", 1),
        "gammas": [float(x) for x in gammas],
        "trials": _positive_int(cfg.get("trials", 2000), "trials"),
    }


_PROTOCOL_KEYS = {"epsilon", "delta", "shot_cap", "scales", "order", "pilot"}


def _prepare_mitigate(cfg: dict, seed: int, base: Path) -> dict:
    _keys(cfg, {"circuit", "noise", "protocols"}, {"observables", "seed", "outputs"}, "mitigate config")
    spec = _circuit(cfg["circuit"], seed)
    noises = _noise_list(cfg["noise"])
    if len(noises) != 1:
        raise ConfigError("mitigate takes a single noise model")
    obs = cfg.get("observables", "single-z")
    try:
        if obs == "single-z":
            M = ObservableSet.single_z(spec.n if spec.family != "parity" else len(spec.secret) + 1)
        elif isinstance(obs, list) and obs:
            M = ObservableSet.from_text(obs)
        else:
            raise ConfigError("observables must be 'single-z' or a list of Pauli sums")
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"observables: {exc}") from exc
    protos = cfg["protocols"]
    if not isinstance(protos, list) or not protos:
        raise ConfigError("protocols must be a non-empty list")
    plist = []
    for i, p in enumerate(protos):
        _keys(p, {"protocol", "epsilon", "delta"}, _PROTOCOL_KEYS, f"protocols[{i}]")
        if p["protocol"] not in ("pec", "zne", "vd"):
            raise ConfigError(f"protocols[{i}]: protocol must be pec, zne or vd")
        kw = {"epsilon": _unit_interval(p["epsilon"], "epsilon"), "delta": _unit_interval(p["delta"], "delta")}
        if "shot_cap" in p:
            kw["shot_cap"] = _positive_int(p["shot_cap"], "shot_cap")
        if "scales" in p:
            sc = p["scales"]
            if not isinstance(sc, list) or not all(isinstance(x, (int, float)) and x > 0 for x in sc):
                raise ConfigError("scales must be a list of positive numbers")
            kw["scales"] = [float(x) for x in sc]
        if "order" in p:
            kw["order"] = _positive_int(p["order"], "order")
        if "pilot" in p:
            kw["pilot"] = _positive_int(p["pilot"], "pilot")
        plist.append((p["protocol"], kw))
    try:
        circuit = build_circuit(spec)
    except ValueError as exc:
        raise ConfigError(f"circuit: {exc}") from exc
    if M.n != circuit.n:
        raise ConfigError(f"observables act on {M.n} qubits but the circuit has {circuit.n}")
    return {"spec": spec, "circuit": circuit, "noise": noises[0], "M": M, "protocols": plist}


def _prepare_bounds(cfg: dict, seed: int, base: Path) -> dict:
    _keys(cfg, {"delta"}, {"decay", "decay_csv", "ensembles", "seed", "outputs"}, "bounds config")
    delta = _unit_interval(cfg["delta"], "delta")
    if ("decay" in cfg) == ("decay_csv" in cfg) and "ensembles" not in cfg:
        raise ConfigError("bounds needs exactly one of decay or decay_csv (or an ensembles list)")
    if "decay" in cfg and "decay_csv" in cfg:
        raise ConfigError("give decay or decay_csv, not both")
    out = {"delta": delta, "decay": None, "decay_csv": None, "ensembles": []}
    if "decay" in cfg:
        out["decay"] = _prepare_decay(cfg["decay"], seed, base)
    if "decay_csv" in cfg:
        p = Path(cfg["decay_csv"])
        p = p if p.is_absolute() else base / p
        if not p.is_file():
            raise ConfigError(f"decay_csv {p} does not exist")
        out["decay_csv"] = p
    for i, e in enumerate(cfg.get("ensembles", [])):
        _keys(e, {"circuit"}, {"noise", "N", "method", "include_mixed", "trials"}, f"ensembles[{i}]")
        spec = _circuit(e["circuit"], seed)
        noise = _noise_list(e["noise"], f"ensembles[{i}].noise")[0] if "noise" in e else None
        method = e.get("method", "auto")
        if method not in ("auto", "dense", "surrogate"):
            raise ConfigError(f"ensembles[{i}]: unknown method {method!r}")
        N = e.get("N")
        out["ensembles"].append({
            "spec": spec, "noise": noise, "method": method,
            "N": None if N is None else _positive_int(N, "N"),
            "include_mixed": bool(e.get("include_mixed", False)),
            "trials": _positive_int(e.get("trials", 10_000), "trials"),
        })
    return out


def _prepare_parity(cfg: dict, seed: int, base: Path) -> dict:
    _keys(cfg, {"n", "tau", "budget"},
          {"reps", "sampling_reps", "sampling_n", "eps", "delta", "samples", "seed", "outputs"}, "parity config")
    n = _positive_int(cfg["n"], "n")
    budget = cfg["budget"]
    if not isinstance(budget, int) or isinstance(budget, bool) or budget < 1:
        raise ConfigError("budget must be a positive integer")
    if n > 14 or cfg.get("sampling_n", n) > 14:
        raise ConfigError("parity experiments are limited to n <= 14")
    if budget > 2**n:
        raise ConfigError("budget exceeds the number of candidate secrets")
    tau = cfg["tau"]
    if not isinstance(tau, (int, float)) or tau < 0:
        raise ConfigError("tau must be a non-negative number")
    kw = {"n": n, "tau": float(tau), "query_budget": budget}
    for key in ("reps", "sampling_reps", "sampling_n", "samples"):
        if key in cfg:
            kw[key] = _positive_int(cfg[key], key)
    for key in ("eps", "delta"):
        if key in cfg:
            kw[key] = _unit_interval(cfg[key], key)
    return kw


def _prepare_validate(cfg: dict, seed: int, base: Path) -> dict:
    _keys(cfg, set(), {"checks", "seed", "outputs"}, "validate config")
    checks = cfg.get("checks")
    if checks is not None:
        if not isinstance(checks, list) or not checks:
            raise ConfigError("checks must be a non-empty list")
        unknown = set(checks) - set(CHECKS)
        if unknown:
            raise ConfigError(f"unknown checks {sorted(unknown)}")
    return {"checks": checks}


_OUTPUTS = {
    "decay": {"csv": "decay.csv", "summary": "decay_summary.json"},
    "nonunital": {"csv": "nonunital.csv", "summary": "nonunital_summary.json"},
    "mitigate": {"csv": "mitigate.csv", "results": "mitigate.json"},
    "bounds": {"csv": "bounds.csv", "report": "bounds.json"},
    "parity": {"csv": "parity.csv", "report": "parity.json"},
    "validate": {"csv": "validate.csv"},
}

_PREPARE: dict[str, Callable] = {
    "decay": _prepare_decay,
    "nonunital": _prepare_nonunital,
    "mitigate": _prepare_mitigate,
    "bounds": _prepare_bounds,
    "parity": _prepare_parity,
    "validate": _prepare_validate,
}


def parse_config(subcommand: str, raw: dict, seed: int | None = None, base_dir=None) -> ExperimentConfig:
    """Validate ``raw`` for ``subcommand``; ``seed`` overrides the config's seed."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    raw = dict(raw)
    if seed is not None:
        raw["seed"] = seed
    if subcommand == "validate":
        raw.setdefault("seed", 0)
    if "seed" not in raw:
        raise ConfigError("config needs a seed (or pass --seed)")
    s = raw["seed"]
    if not isinstance(s, int) or isinstance(s, bool) or s < 0:
        raise ConfigError("seed must be a non-negative integer")
    outputs = dict(_OUTPUTS[subcommand])
    extra = raw.get("outputs", {})
    if not isinstance(extra, dict) or set(extra) - set(outputs):
        raise ConfigError(f"outputs may only rename {sorted(outputs)}")
    for k, v in extra.items():
        if not isinstance(v, str) or not v or Path(v).name != v:
            raise ConfigError(f"outputs.{k} must be a plain file name")
    outputs.update(extra)
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    params = _PREPARE[subcommand](raw, s, base)
    return ExperimentConfig(subcommand, s, raw, params, outputs, base)


# ------------------------------------------------------------------ runners


def _write_json(obj, path: Path) -> str:
    data = json_text(obj).encode()
    path.write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def _run_decay_params(p: dict, seed: int, workers: int):
    curves = [
        decay_sweep(p["family"], p["ns"], p["Ds"], nz, p["trials"], derive_seed(seed, 10, i),
                    p["circuits"], p["d"], workers)
        for i, nz in enumerate(p["noises"])
    ]
    return curves


def _run_decay(cfg: ExperimentConfig, out: Path, workers: int) -> dict:
    curves = _run_decay_params(cfg.params, cfg.seed, workers)
    recs = [r for c in curves for r in c.records()]
    return {
        cfg.outputs["csv"]: emit(recs, "csv", out / cfg.outputs["csv"], RECORD_COLUMNS),
        cfg.outputs["summary"]: _write_json([c.summary() for c in curves], out / cfg.outputs["summary"]),
    }


def _run_nonunital(cfg: ExperimentConfig, out: Path, workers: int) -> dict:
    p = cfg.params
    curves = [
        nonunital_decay_experiment(p["ns"], p["Ds"], g, p["trials"], derive_seed(cfg.seed, 11, i), workers)
        for i, g in enumerate(p["gammas"])
    ]
    recs = [r for c in curves for r in c.records()]
    return {
        cfg.outputs["csv"]: emit(recs, "csv", out / cfg.outputs["csv"], RECORD_COLUMNS),
        cfg.outputs["summary"]: _write_json([c.summary() for c in curves], out / cfg.outputs["summary"]),
    }


def _run_mitigate(cfg: ExperimentConfig, out: Path, workers: int) -> dict:
    p = cfg.params
    spec, circuit, noise, M = p["spec"], p["circuit"], p["noise"], p["M"]
    nj = noise_to_json(noise)
    param = float(nj.get("p", nj.get("gamma", math.nan)))
    rows, results = [], []
    for i, (proto, kw) in enumerate(p["protocols"]):
        s = derive_seed(cfg.seed, 12, i)
        res = weak_mitigate(proto, circuit, noise, M, seed=s, **kw)
        results.append({"seed": s, **res.as_dict()})
        se = res.stderr if res.stderr is not None else [math.nan] * len(res.estimates)
        for j, (val, err) in enumerate(zip(res.estimates, se)):
            rows.append({
                "family": spec.family, "n": circuit.n, "D": circuit.D, "noise_kind": nj["kind"],
                "param": param, "estimator": f"{proto}:median-of-means", "value": float(val),
                "stderr": float(err), "seed": s, "protocol": proto, "observable": M.labels[j],
                "shots": res.shots, "cap_exceeded": res.cap_exceeded,
                "required_shots": res.required_shots,
            })
    return {
        cfg.outputs["csv"]: emit(rows, "csv", out / cfg.outputs["csv"], MITIGATE_COLUMNS),
        cfg.outputs["results"]: _write_json(results, out / cfg.outputs["results"]),
    }


def _decay_rows_from_csv(path: Path) -> list[dict]:
    rows = []
    for r in read_csv(path):
        if r.get("estimator", "").endswith(":entropy_bound"):
            rows.append({"family": r["family"], "n": int(r["n"]), "D": int(r["D"]),
                         "entropy_bound": float(r["value"])})
    if not rows:
        raise RunFailure(f"{path} has no entropy_bound rows")
    return rows


def _run_bounds(cfg: ExperimentConfig, out: Path, workers: int) -> dict:
    p = cfg.params
    chart = []
    if p["decay"] is not None:
        for curve in _run_decay_params(p["decay"], cfg.seed, workers):
            chart += mitigation_cost_chart(curve, p["delta"])
    elif p["decay_csv"] is not None:
        chart = mitigation_cost_chart(_decay_rows_from_csv(p["decay_csv"]), p["delta"])
    reports = []
    for i, e in enumerate(p["ensembles"]):
        circuit = build_circuit(e["spec"])
        ens = build_discrimination_ensemble(circuit, e["noise"], e["N"], e["method"], e["trials"],
                                            derive_seed(cfg.seed, 13, i))
        rep = fano_lower_bound(ens, p["delta"], e["include_mixed"]).as_dict()
        rep.update({"family": e["spec"].family, "n": circuit.n, "D": circuit.D})
        reports.append(rep)
    return {
        cfg.outputs["csv"]: emit(chart, "csv", out / cfg.outputs["csv"], COST_COLUMNS),
        cfg.outputs["report"]: _write_json({"delta": p["delta"], "ensembles": reports}, out / cfg.outputs["report"]),
    }


def _run_parity(cfg: ExperimentConfig, out: Path, workers: int) -> dict:
    report, rows = weak_to_strong_experiment(seed=cfg.seed, workers=workers, **cfg.params)
    return {
        cfg.outputs["csv"]: emit(rows, "csv", out / cfg.outputs["csv"], PARITY_COLUMNS),
        cfg.outputs["report"]: _write_json(report, out / cfg.outputs["report"]),
    }


def _run_validate(cfg: ExperimentConfig, out: Path, workers: int) -> dict:
    results = run_suite(cfg.seed, cfg.params["checks"])
    print(format_table(results))
    rows = [{k: getattr(r, k) for k in VALIDATE_COLUMNS} for r in results]
    digest = emit(rows, "csv", out / cfg.outputs["csv"], VALIDATE_COLUMNS)
    failed = [r.check for r in results if not r.passed]
    if failed:
        raise RunFailure(f"{len(failed)} check(s) failed: {', '.join(failed)}")
    return {cfg.outputs["csv"]: digest}


_RUN = {
    "decay": _run_decay,
    "nonunital": _run_nonunital,
    "mitigate": _run_mitigate,
    "bounds": _run_bounds,
    "parity": _run_parity,
    "validate": _run_validate,
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run(cfg: ExperimentConfig, out_dir, workers: int | None = None) -> dict:
    """Execute a parsed config and write its outputs plus ``manifest.json``.

    Returns the manifest. Output digests are computed from the bytes
    written, before the manifest itself.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    workers = resolve_workers(workers)
    started = _now()
    t0 = time.perf_counter()
    status, error, digests = "ok", None, {}
    try:
        digests = _RUN[cfg.subcommand](cfg, out, workers)
    except Exception as exc:
        status, error = "failed", f"{type(exc).__name__}: {exc}"
        raise
    finally:
        manifest = {
            "tool": "emlab",
            "version": __version__,
            "subcommand": cfg.subcommand,
            "config": cfg.raw,
            "seed": cfg.seed,
            "workers": workers,
            "started": started,
            "finished": _now(),
            "seconds": round(time.perf_counter() - t0, 3),
            "status": status,
            "error": error,
            "outputs": digests,
        }
        _write_json(manifest, out / "manifest.json")
    return manifest


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="emlab", description="Noisy-circuit mitigation limits at desk scale.")
    ap.add_argument("--version", action="version", version=f"emlab {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=name != "validate", help="JSON or TOML config file")
        sp.add_argument("--out", default=".", help="output directory (default: current directory)")
        sp.add_argument("--workers", type=int, default=None, help="worker processes (default: EMLAB_WORKERS or 1)")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = load_config(args.config) if args.config else {}
        base = Path(args.config).resolve().parent if args.config else Path.cwd()
        cfg = parse_config(args.subcommand, raw, args.seed, base)
        workers = resolve_workers(args.workers)
    except ConfigError as exc:
        print(f"emlab: invalid config: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"emlab: invalid setting: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run(cfg, args.out, workers)
    except Exception as exc:
        print(f"emlab: {args.subcommand} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for name, digest in manifest["outputs"].items():
        print(f"wrote {Path(args.out) / name}  sha256={digest[:16]}")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
