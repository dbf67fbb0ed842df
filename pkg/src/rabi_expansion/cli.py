"""Quench-simulation command line: JSON config in, CSV trajectory and JSON manifest out.

Config documents are JSON objects with the sections ``params``, ``initial``,
``evolution`` and ``outputs`` plus an optional top-level ``preset``. Unknown
keys are rejected. A run manifest is itself a valid config document (its
``config`` section is read back).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .evolution import DEFAULT_J_MAX, EvolutionConfig, EvolutionError, Trajectory, evolve
from .model import ModelParams, Spin, SpinorFockState
from .oracle import DEFAULT_N_MAX, DEFAULT_TAIL_THRESHOLD
from .recurrence import RecurrenceError, TruncationPolicy

log = logging.getLogger(__name__)

# coupling ratio g = lambda / omega for each regime; repo conventions
PRESETS = {"weak": 1e-3, "ultrastrong": 0.1, "deep_strong": 2.0}

CSV_COLUMNS = ["t", "norm2", "sigma_z", "sigma_x", "photon_n", "parity", "fidelity_initial"]

_SECTIONS = {"preset", "params", "initial", "evolution", "outputs"}
_PARAM_KEYS = {"delta", "omega", "lambda"}
_INITIAL_KEYS = {
    "fock": {"kind", "n", "spin"},
    "coherent": {"kind", "re", "im", "spin"},
    "spin_superposition": {"kind", "n", "theta", "phi"},
}
_EVOLUTION_KEYS = {
    "t_final",
    "dt",
    "j_max",
    "n_max",
    "m_max",
    "deg_max",
    "prune_eps",
    "oracle_check",
    "record_every",
    "norm_ceiling",
    "remainder_tol",
    "tail_threshold",
}
_OUTPUT_KEYS = {"csv", "manifest", "trace"}
_MANIFEST_KEYS = {"config", "version", "status", "diagnostics", "error"}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry when known."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.field = field
        self.line = line


@dataclass(frozen=True)
class InitialState:
    kind: str = "fock"
    n: int = 0
    spin: str = "up"
    re: float = 0.0
    im: float = 0.0
    theta: float = 0.0
    phi: float = 0.0

    def build(self, n_max: int) -> SpinorFockState:
        if self.kind == "fock":
            return SpinorFockState.fock(self.n, self.spin, n_max)
        if self.kind == "coherent":
            return SpinorFockState.coherent(complex(self.re, self.im), self.spin, n_max)
        return SpinorFockState.spin_superposition(self.n, self.theta, self.phi, n_max)

    def to_dict(self) -> dict:
        keys = _INITIAL_KEYS[self.kind]
        return {k: getattr(self, k) for k in ("kind", "n", "spin", "re", "im", "theta", "phi") if k in keys}


@dataclass(frozen=True)
class OutputPaths:
    csv: str = "trajectory.csv"
    manifest: str | None = "manifest.json"
    trace: str | None = None


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    initial: InitialState
    evolution: EvolutionConfig
    outputs: OutputPaths = field(default_factory=OutputPaths)
    preset: str | None = None

    def to_dict(self) -> dict:
        ev = self.evolution
        return {
            "preset": self.preset,
            "params": {"delta": self.params.delta, "omega": self.params.omega, "lambda": self.params.lam},
            "initial": self.initial.to_dict(),
            "evolution": {
                "t_final": ev.t_final,
                "dt": ev.dt,
                "j_max": ev.j_max,
                "n_max": ev.n_max,
                "m_max": ev.policy.m_max,
                "deg_max": ev.policy.deg_max,
                "prune_eps": ev.policy.prune_eps,
                "oracle_check": ev.oracle_check,
                "record_every": ev.record_every,
                "norm_ceiling": ev.norm_ceiling,
                "remainder_tol": ev.remainder_tol,
                "tail_threshold": ev.tail_threshold,
            },
            "outputs": {
                "csv": self.outputs.csv,
                "manifest": self.outputs.manifest,
                "trace": self.outputs.trace,
            },
        }


# parsing


def _section(doc: dict, name: str, allowed: set[str]) -> dict:
    sec = doc.get(name)
    if sec is None:
        return {}
    if not isinstance(sec, dict):
        raise ConfigError("expected an object", name)
    unknown = sorted(set(sec) - allowed)
    if unknown:
        raise ConfigError("unknown key", f"{name}.{unknown[0]}")
    return sec


def _number(sec: dict, key: str, where: str, default=None, *, integer=False, allow_none=False):
    val = sec.get(key, default)
    name = f"{where}.{key}"
    if val is None:
        if allow_none:
            return None
        raise ConfigError("required value missing", name)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"expected a number, got {val!r}", name)
    if integer:
        if float(val) != int(val):
            raise ConfigError(f"expected an integer, got {val!r}", name)
        return int(val)
    if not math.isfinite(val):
        raise ConfigError("must be finite", name)
    return float(val)


def config_from_dict(doc: Any) -> RunConfig:
    """Validate a decoded config document and fill defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    if "config" in doc and set(doc) <= _MANIFEST_KEYS:
        doc = doc["config"]
        if not isinstance(doc, dict):
            raise ConfigError("expected an object", "config")
    unknown = sorted(set(doc) - _SECTIONS)
    if unknown:
        raise ConfigError("unknown key", unknown[0])

    preset = doc.get("preset")
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}", "preset")

    p = _section(doc, "params", _PARAM_KEYS)
    delta = _number(p, "delta", "params", 1.0)
    omega = _number(p, "omega", "params", 1.0)
    lam = _number(p, "lambda", "params", allow_none=True)
    if lam is None:
        if preset is None:
            raise ConfigError("required unless a preset is given", "params.lambda")
        lam = PRESETS[preset] * omega
    if omega <= 0:
        raise ConfigError(f"must be positive, got {omega}", "params.omega")
    if delta < 0:
        raise ConfigError(f"must be non-negative, got {delta}", "params.delta")
    params = ModelParams(delta, omega, lam)

    init = doc.get("initial", {"kind": "fock", "n": 0, "spin": "up"})
    if not isinstance(init, dict):
        raise ConfigError("expected an object", "initial")
    kind = init.get("kind", "fock")
    if kind not in _INITIAL_KEYS:
        raise ConfigError(f"unknown kind {kind!r}; choose from {sorted(_INITIAL_KEYS)}", "initial.kind")
    init = _section({"initial": init}, "initial", _INITIAL_KEYS[kind])
    spin = init.get("spin", "up")
    if spin not in {s.value for s in Spin}:
        raise ConfigError(f"expected 'up' or 'down', got {spin!r}", "initial.spin")
    initial = InitialState(
        kind=kind,
        n=_number(init, "n", "initial", 0, integer=True),
        spin=spin,
        re=_number(init, "re", "initial", 0.0),
        im=_number(init, "im", "initial", 0.0),
        theta=_number(init, "theta", "initial", 0.0),
        phi=_number(init, "phi", "initial", 0.0),
    )

    e = _section(doc, "evolution", _EVOLUTION_KEYS)
    n_max = _number(e, "n_max", "evolution", DEFAULT_N_MAX, integer=True)
    if initial.n < 0 or initial.n > n_max:
        raise ConfigError(f"photon number {initial.n} outside 0..{n_max}", "initial.n")
    oracle_check = e.get("oracle_check", False)
    if not isinstance(oracle_check, bool):
        raise ConfigError("expected true or false", "evolution.oracle_check")
    try:
        policy = TruncationPolicy(
            m_max=_number(e, "m_max", "evolution", 16, integer=True),
            deg_max=_number(e, "deg_max", "evolution", 160, integer=True),
            prune_eps=_number(e, "prune_eps", "evolution", 1e-14),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), "evolution") from exc
    try:
        evolution = EvolutionConfig(
            t_final=_number(e, "t_final", "evolution", 10.0),
            dt=_number(e, "dt", "evolution", allow_none=True),
            j_max=_number(e, "j_max", "evolution", DEFAULT_J_MAX, integer=True),
            n_max=n_max,
            policy=policy,
            oracle_check=oracle_check,
            record_every=_number(e, "record_every", "evolution", 1, integer=True),
            norm_ceiling=_number(e, "norm_ceiling", "evolution", 1e-4),
            remainder_tol=_number(e, "remainder_tol", "evolution", 1e-8),
            tail_threshold=_number(e, "tail_threshold", "evolution", DEFAULT_TAIL_THRESHOLD),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), "evolution") from exc

    o = _section(doc, "outputs", _OUTPUT_KEYS)
    for key in _OUTPUT_KEYS:
        if o.get(key) is not None and not isinstance(o[key], str):
            raise ConfigError("expected a path string", f"outputs.{key}")
    outputs = OutputPaths(
        csv=o.get("csv") or OutputPaths.csv,
        manifest=o.get("manifest", OutputPaths.manifest),
        trace=o.get("trace"),
    )
    return RunConfig(params, initial, evolution, outputs, preset)


def parse_config(text: str) -> RunConfig:
    """Parse a JSON config (or run manifest) document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{exc.msg} (column {exc.colno})", line=exc.lineno) from exc
    return config_from_dict(doc)


# output


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(path: str | Path, trajectory: Trajectory, oracle: bool) -> None:
    cols = CSV_COLUMNS + (["oracle_residual"] if oracle else [])
    lines = [",".join(cols)]
    for rec in trajectory.records():
        row = [rec.t, rec.norm2, rec.sigma_z, rec.sigma_x, rec.photon_n, rec.parity, rec.fidelity_initial]
        if oracle:
            row.append(rec.oracle_residual)
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_trace(path: str | Path, trajectory: Trajectory) -> None:
    with open(path, "w") as fh:
        for entry in trajectory.diagnostics:
            for chain, traces in entry["traces"].items():
                for tr in traces:
                    fh.write(json.dumps({"step": entry["step"], "t": entry["t"], "chain": chain, **tr}))
                    fh.write("\n")


def _write_manifest(path, config: RunConfig, status: str, diagnostics=None, error=None):
    if path is None:
        return
    doc = {"config": config.to_dict(), "version": __version__, "status": status}
    if diagnostics is not None:
        doc["diagnostics"] = diagnostics
    if error is not None:
        doc["error"] = error
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def run(config: RunConfig) -> int:
    """Evolve, write outputs, return a process exit status."""
    initial = config.initial.build(config.evolution.n_max)
    try:
        trajectory = evolve(initial, config.params, config.evolution)
    except (EvolutionError, RecurrenceError, ValueError, OverflowError) as exc:
        error = {"type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, EvolutionError):
            error["diagnostics"] = exc.diagnostics
        log.error("run failed: %s", exc)
        _write_manifest(config.outputs.manifest, config, "error", error=error)
        print(json.dumps({"error": error}), file=sys.stderr)
        return 1
    oracle = config.evolution.oracle_check
    write_csv(config.outputs.csv, trajectory, oracle)
    if config.outputs.trace:
        write_trace(config.outputs.trace, trajectory)
    recs = trajectory.records()
    diagnostics = dict(trajectory.summary)
    diagnostics.update(
        samples=len(trajectory),
        final_norm2=recs[-1].norm2,
        max_parity_deviation=float(
            np.max(np.abs(trajectory.parity_expectations - trajectory.parity_expectations[0]))
        ),
    )
    _write_manifest(config.outputs.manifest, config, "ok", diagnostics)
    return 0


# command line

_FLAG_MAP = {
    # flag dest -> (section, key)
    "delta": ("params", "delta"),
    "omega": ("params", "omega"),
    "lam": ("params", "lambda"),
    "t_final": ("evolution", "t_final"),
    "dt": ("evolution", "dt"),
    "j_max": ("evolution", "j_max"),
    "n_max": ("evolution", "n_max"),
    "m_max": ("evolution", "m_max"),
    "deg_max": ("evolution", "deg_max"),
    "prune_eps": ("evolution", "prune_eps"),
    "record_every": ("evolution", "record_every"),
    "norm_ceiling": ("evolution", "norm_ceiling"),
    "remainder_tol": ("evolution", "remainder_tol"),
    "tail_threshold": ("evolution", "tail_threshold"),
    "output": ("outputs", "csv"),
    "manifest": ("outputs", "manifest"),
    "trace": ("outputs", "trace"),
}
_SWEEPABLE = {"delta", "omega", "lambda", "t_final", "dt"}


def parse_initial(text: str) -> dict:
    """``fock:N:SPIN``, ``coherent:RE:IM:SPIN`` or ``spin:N:THETA:PHI``."""
    parts = text.split(":")
    try:
        if parts[0] == "fock" and len(parts) == 3:
            return {"kind": "fock", "n": int(parts[1]), "spin": parts[2]}
        if parts[0] == "coherent" and len(parts) == 4:
            return {"kind": "coherent", "re": float(parts[1]), "im": float(parts[2]), "spin": parts[3]}
        if parts[0] in ("spin", "spin_superposition") and len(parts) == 4:
            return {
                "kind": "spin_superposition",
                "n": int(parts[1]),
                "theta": float(parts[2]),
                "phi": float(parts[3]),
            }
    except ValueError as exc:
        raise ConfigError(f"bad initial state {text!r}: {exc}", "initial") from exc
    raise ConfigError(f"bad initial state {text!r}", "initial")


def parse_sweep(text: str) -> tuple[str, np.ndarray]:
    """``FIELD=START:STOP:COUNT`` to the field name and its values."""
    try:
        name, rng = text.split("=", 1)
        start, stop, count = rng.split(":")
        values = np.linspace(float(start), float(stop), int(count))
    except ValueError as exc:
        raise ConfigError(f"bad sweep {text!r}, expected FIELD=START:STOP:COUNT", "sweep") from exc
    if name not in _SWEEPABLE:
        raise ConfigError(f"cannot sweep {name!r}; choose from {sorted(_SWEEPABLE)}", "sweep")
    if values.size < 1:
        raise ConfigError("sweep needs at least one point", "sweep")
    return name, values


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rabi-quench",
        description="Quantum Rabi model quench dynamics by coherent-state Taylor expansion.",
    )
    ap.add_argument("--config", type=Path, help="JSON config or run manifest")
    ap.add_argument("--preset", choices=sorted(PRESETS), help="coupling regime (sets lambda if unset)")
    ap.add_argument("--delta", type=float)
    ap.add_argument("--omega", type=float)
    ap.add_argument("--lambda", dest="lam", type=float)
    ap.add_argument("--initial", help="fock:N:SPIN | coherent:RE:IM:SPIN | spin:N:THETA:PHI")
    ap.add_argument("--t-final", type=float)
    ap.add_argument("--dt", type=float)
    ap.add_argument("--j-max", type=int)
    ap.add_argument("--n-max", type=int)
    ap.add_argument("--m-max", type=int)
    ap.add_argument("--deg-max", type=int)
    ap.add_argument("--prune-eps", type=float)
    ap.add_argument("--record-every", type=int)
    ap.add_argument("--norm-ceiling", type=float)
    ap.add_argument("--remainder-tol", type=float)
    ap.add_argument("--tail-threshold", type=float)
    ap.add_argument("--oracle-check", action="store_true", default=None)
    ap.add_argument("--output", help="trajectory CSV path")
    ap.add_argument("--manifest", help="run manifest JSON path")
    ap.add_argument("--trace", help="per-order recurrence trace (JSON lines)")
    ap.add_argument("--sweep", help="FIELD=START:STOP:COUNT, one run per value")
    ap.add_argument("--workers", type=int, default=None, help="parallel sweep processes")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def merge_flags(doc: dict, args: argparse.Namespace) -> dict:
    """Overlay command-line flags on a config document."""
    doc = json.loads(json.dumps(doc))
    if "config" in doc and set(doc) <= _MANIFEST_KEYS:
        doc = doc["config"]
    for dest, (section, key) in _FLAG_MAP.items():
        val = getattr(args, dest, None)
        if val is not None:
            doc.setdefault(section, {})
            if doc[section] is None:
                doc[section] = {}
            doc[section][key] = val
    if args.oracle_check:
        doc.setdefault("evolution", {})["oracle_check"] = True
    if args.preset is not None:
        doc["preset"] = args.preset
    if args.initial is not None:
        doc["initial"] = parse_initial(args.initial)
    return doc


def _suffixed(path: str | None, tag: str) -> str | None:
    if path is None:
        return None
    p = Path(path)
    return str(p.with_name(f"{p.stem}_{tag}{p.suffix}"))


def sweep_configs(doc: dict, name: str, values: np.ndarray) -> list[RunConfig]:
    section = "params" if name in _PARAM_KEYS else "evolution"
    configs = []
    for i, val in enumerate(values):
        d = json.loads(json.dumps(doc))
        d.setdefault(section, {})[name] = float(val)
        cfg = config_from_dict(d)
        tag = f"{name}{i:03d}"
        outputs = OutputPaths(
            csv=_suffixed(cfg.outputs.csv, tag),
            manifest=_suffixed(cfg.outputs.manifest, tag),
            trace=_suffixed(cfg.outputs.trace, tag),
        )
        configs.append(replace(cfg, outputs=outputs))
    return configs


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        doc = {}
        if args.config is not None:
            text = args.config.read_text()
            try:
                doc = json.loads(text)
            except json.JSONDecodeError:
                parse_config(text)  # re-raise as ConfigError with the line number
        doc = merge_flags(doc, args)
        if args.sweep:
            name, values = parse_sweep(args.sweep)
            configs = sweep_configs(doc, name, values)
        else:
            configs = [config_from_dict(doc)]
    except (ConfigError, OSError) as exc:
        print(json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}), file=sys.stderr)
        return 2

    if len(configs) == 1:
        return run(configs[0])
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        statuses = list(pool.map(run, configs))
    return max(statuses)


if __name__ == "__main__":
    sys.exit(main())
