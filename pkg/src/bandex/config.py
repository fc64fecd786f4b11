"""Strict JSON experiment configuration: schema, parsing, serialization.

Unknown keys are rejected everywhere; every module-level invariant is checked
on load, and violations are reported together with their JSON paths.  The
serializer emits a canonical document (sorted keys, defaults made explicit),
so parse -> serialize -> parse is idempotent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .engine import RunConfig
from .errors import ConfigError, ParameterError
from .grid import (
    GridShape,
    Region,
    SpectralSupport,
    make_spectral_support,
    region_from_rect,
)
from .operators import RegularizationParams
from .synthesis import SynthesisSpec


@dataclass(frozen=True)
class NoiseSpec:
    """Out-of-band perturbation settings for the synthesized truth."""

    target_snr_db: float
    seed: int | None = None  # defaults to synthesis seed + 1
    bumps: int = 8
    width_range: tuple[float, float] = (0.03, 0.12)
    mode: str = "bumps"


@dataclass(frozen=True)
class WeightSpec:
    """How region weights are obtained: uniform, explicit values, or
    suggested from the concentration spectra (order/mu parameters)."""

    mode: str
    values: tuple[float, ...] | None = None
    order: int | None = None
    mu: float = 0.0


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    save_pgm: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully validated experiment description."""

    grid: GridShape
    support: SpectralSupport
    regions: tuple[Region, ...]
    weights: WeightSpec
    run: RunConfig
    synthesis: SynthesisSpec
    noise: NoiseSpec | None
    output: OutputSpec
    half_bandwidth: tuple[int, ...]
    rects: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]


class _Reader:
    """Path-tracking accessor over a parsed JSON document."""

    def __init__(self):
        self.errors: list[tuple[str, str]] = []

    def fail(self, path: str, message: str) -> None:
        self.errors.append((path, message))

    def object(self, value, path, required_keys, optional_keys=()):
        if not isinstance(value, dict):
            self.fail(path, f"expected an object, got {type(value).__name__}")
            return None
        unknown = set(value) - set(required_keys) - set(optional_keys)
        for key in sorted(unknown):
            self.fail(f"{path}.{key}" if path else key, "unknown key")
        missing = [k for k in required_keys if k not in value]
        for key in missing:
            self.fail(f"{path}.{key}" if path else key, "missing required key")
        if unknown or missing:
            return None
        return value

    def int_list(self, value, path):
        if not isinstance(value, list) or not value or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in value
        ):
            self.fail(path, "expected a non-empty list of integers")
            return None
        return value

    def integer(self, value, path):
        if not isinstance(value, int) or isinstance(value, bool):
            self.fail(path, "expected an integer")
            return None
        return value

    def number(self, value, path):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, "expected a number")
            return None
        return float(value)

    def string(self, value, path, choices=None):
        if not isinstance(value, str):
            self.fail(path, "expected a string")
            return None
        if choices is not None and value not in choices:
            self.fail(path, f"expected one of {sorted(choices)}, got {value!r}")
            return None
        return value

    def boolean(self, value, path):
        if not isinstance(value, bool):
            self.fail(path, "expected a boolean")
            return None
        return value


def parse_config(text: str) -> ExperimentConfig:
    """Parse and fully validate a JSON experiment configuration.

    Raises :class:`~bandex.errors.ConfigError` carrying one
    ``(path, message)`` entry per violation.
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([("", f"not valid JSON: {exc}")]) from exc

    r = _Reader()
    top = r.object(
        document, "", ("grid", "support", "regions", "weights", "run", "synthesis"),
        ("output",),
    )
    if top is None:
        raise ConfigError(r.errors)

    grid = _parse_grid(r, document.get("grid"))
    half_bandwidth = _parse_support(r, document.get("support"))
    rects = _parse_regions(r, document.get("regions"))
    weights = _parse_weights(r, document.get("weights"))
    run = _parse_run(r, document.get("run"))
    synthesis_fields, noise = _parse_synthesis(r, document.get("synthesis"))
    output = _parse_output(r, document.get("output"))
    if r.errors:
        raise ConfigError(r.errors)

    support = None
    try:
        support = make_spectral_support(grid, half_bandwidth)
    except ParameterError as exc:
        r.fail("support.half_bandwidth", str(exc))
    regions = []
    for i, (corner, extent) in enumerate(rects):
        try:
            regions.append(region_from_rect(grid, corner, extent))
        except ParameterError as exc:
            r.fail(f"regions[{i}]", str(exc))
    if weights.mode == "explicit" and len(weights.values) != len(rects):
        r.fail("weights.values", f"expected {len(rects)} weights, got {len(weights.values)}")
    if r.errors:
        raise ConfigError(r.errors)

    seed, rms = synthesis_fields
    try:
        synthesis = SynthesisSpec(shape=grid, support=support, seed=seed, rms=rms)
    except ParameterError as exc:
        raise ConfigError([("synthesis", str(exc))]) from exc

    return ExperimentConfig(
        grid=grid,
        support=support,
        regions=tuple(regions),
        weights=weights,
        run=run,
        synthesis=synthesis,
        noise=noise,
        output=output,
        half_bandwidth=tuple(half_bandwidth),
        rects=tuple(rects),
    )


def _parse_grid(r: _Reader, value):
    obj = r.object(value, "grid", ("dims",))
    if obj is None:
        return GridShape((1,))
    dims = r.int_list(obj["dims"], "grid.dims")
    if dims is None:
        return GridShape((1,))
    try:
        return GridShape(tuple(dims))
    except ParameterError as exc:
        r.fail("grid.dims", str(exc))
        return GridShape((1,))


def _parse_support(r: _Reader, value):
    obj = r.object(value, "support", ("half_bandwidth",))
    if obj is None:
        return (0,)
    hb = r.int_list(obj["half_bandwidth"], "support.half_bandwidth")
    return tuple(hb) if hb is not None else (0,)


def _parse_regions(r: _Reader, value):
    if not isinstance(value, list) or not value:
        r.fail("regions", "expected a non-empty list of region objects")
        return ()
    rects = []
    for i, item in enumerate(value):
        obj = r.object(item, f"regions[{i}]", ("corner", "extent"))
        if obj is None:
            continue
        corner = r.int_list(obj["corner"], f"regions[{i}].corner")
        extent = r.int_list(obj["extent"], f"regions[{i}].extent")
        if corner is not None and extent is not None:
            rects.append((tuple(corner), tuple(extent)))
    return tuple(rects)


def _parse_weights(r: _Reader, value):
    if not isinstance(value, dict) or "mode" not in value:
        r.fail("weights", "expected an object with a 'mode' key")
        return WeightSpec(mode="uniform")
    mode = r.string(value["mode"], "weights.mode", {"uniform", "explicit", "suggested"})
    if mode == "explicit":
        obj = r.object(value, "weights", ("mode", "values"))
        if obj is None:
            return WeightSpec(mode="uniform")
        vals = obj["values"]
        if not isinstance(vals, list) or not vals:
            r.fail("weights.values", "expected a non-empty list of numbers")
            return WeightSpec(mode="uniform")
        numbers = [r.number(v, f"weights.values[{i}]") for i, v in enumerate(vals)]
        if any(v is None for v in numbers):
            return WeightSpec(mode="uniform")
        total = sum(numbers)
        if abs(total - 1.0) > 1e-12:
            r.fail("weights.values", f"weights sum to {total!r}, must equal 1")
        for i, v in enumerate(numbers):
            if not (0.0 < v <= 1.0):
                r.fail(f"weights.values[{i}]", f"weight {v!r} must lie in (0, 1]")
        return WeightSpec(mode="explicit", values=tuple(numbers))
    if mode == "suggested":
        obj = r.object(value, "weights", ("mode", "order"), ("mu",))
        if obj is None:
            return WeightSpec(mode="uniform")
        order = r.integer(obj["order"], "weights.order")
        mu = r.number(obj.get("mu", 0.0), "weights.mu")
        if order is not None and order < 0:
            r.fail("weights.order", "must be >= 0")
        if mu is not None and mu < 0.0:
            r.fail("weights.mu", "must be >= 0")
        return WeightSpec(mode="suggested", order=order, mu=mu if mu is not None else 0.0)
    r.object(value, "weights", ("mode",))
    return WeightSpec(mode="uniform")


def _parse_run(r: _Reader, value):
    obj = r.object(
        value, "run", ("mode",),
        ("mu", "tau", "max_iters", "residual_tol", "record_every"),
    )
    fallback = RunConfig(mode="unregularized")
    if obj is None:
        return fallback
    mode = r.string(obj["mode"], "run.mode", {"unregularized", "regularized"})
    if mode is None:
        return fallback
    max_iters = obj.get("max_iters", 1000)
    residual_tol = obj.get("residual_tol", 0.0)
    record_every = obj.get("record_every", 1)
    if r.integer(max_iters, "run.max_iters") is None:
        return fallback
    if r.number(residual_tol, "run.residual_tol") is None:
        return fallback
    if r.integer(record_every, "run.record_every") is None:
        return fallback
    params = None
    if mode == "regularized":
        if "mu" not in obj or "tau" not in obj:
            r.fail("run", "regularized mode requires both 'mu' and 'tau'")
            return fallback
        mu = r.number(obj["mu"], "run.mu")
        tau = r.number(obj["tau"], "run.tau")
        if mu is None or tau is None:
            return fallback
        try:
            params = RegularizationParams(mu=mu, tau=tau)
        except ParameterError as exc:
            r.fail("run", str(exc))
            return fallback
    elif "mu" in obj or "tau" in obj:
        r.fail("run", "unregularized mode forbids 'mu' and 'tau'")
        return fallback
    try:
        return RunConfig(
            mode=mode,
            params=params,
            max_iters=max_iters,
            residual_tol=float(residual_tol),
            record_every=record_every,
        )
    except ParameterError as exc:
        r.fail("run", str(exc))
        return fallback


def _parse_synthesis(r: _Reader, value):
    obj = r.object(value, "synthesis", ("seed", "rms"), ("noise",))
    if obj is None:
        return (0, 1.0), None
    seed = r.integer(obj["seed"], "synthesis.seed")
    rms = r.number(obj["rms"], "synthesis.rms")
    if seed is not None and seed < 0:
        r.fail("synthesis.seed", "must be a nonnegative 64-bit integer")
    if rms is not None and rms <= 0.0:
        r.fail("synthesis.rms", "must be > 0")
    noise = None
    if "noise" in obj:
        noise = _parse_noise(r, obj["noise"])
    return (seed if seed is not None else 0, rms if rms is not None else 1.0), noise


def _parse_noise(r: _Reader, value):
    obj = r.object(
        value, "synthesis.noise", ("target_snr_db",),
        ("seed", "bumps", "width_range", "mode"),
    )
    if obj is None:
        return None
    target = r.number(obj["target_snr_db"], "synthesis.noise.target_snr_db")
    seed = None
    if "seed" in obj:
        seed = r.integer(obj["seed"], "synthesis.noise.seed")
        if seed is not None and seed < 0:
            r.fail("synthesis.noise.seed", "must be >= 0")
    bumps = obj.get("bumps", 8)
    if r.integer(bumps, "synthesis.noise.bumps") is None:
        bumps = 8
    elif bumps < 1:
        r.fail("synthesis.noise.bumps", "must be >= 1")
    width_range = obj.get("width_range", [0.03, 0.12])
    if (
        not isinstance(width_range, list)
        or len(width_range) != 2
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in width_range)
    ):
        r.fail("synthesis.noise.width_range", "expected [lo, hi] numbers")
        width_range = [0.03, 0.12]
    elif not (0.0 < float(width_range[0]) <= float(width_range[1])):
        r.fail("synthesis.noise.width_range", "must satisfy 0 < lo <= hi")
    mode = r.string(obj.get("mode", "bumps"), "synthesis.noise.mode", {"bumps", "spectral"})
    if target is None:
        return None
    return NoiseSpec(
        target_snr_db=target,
        seed=seed,
        bumps=int(bumps),
        width_range=(float(width_range[0]), float(width_range[1])),
        mode=mode if mode is not None else "bumps",
    )


def _parse_output(r: _Reader, value):
    if value is None:
        return OutputSpec()
    obj = r.object(value, "output", (), ("directory", "save_pgm"))
    if obj is None:
        return OutputSpec()
    directory = obj.get("directory", "out")
    if r.string(directory, "output.directory") is None:
        directory = "out"
    save_pgm = obj.get("save_pgm", False)
    if r.boolean(save_pgm, "output.save_pgm") is None:
        save_pgm = False
    return OutputSpec(directory=directory, save_pgm=bool(save_pgm))


def serialize_config(config: ExperimentConfig) -> str:
    """Canonical JSON form of a configuration (defaults made explicit)."""
    document = {
        "grid": {"dims": list(config.grid.dims)},
        "support": {"half_bandwidth": list(config.half_bandwidth)},
        "regions": [
            {"corner": list(corner), "extent": list(extent)}
            for corner, extent in config.rects
        ],
        "weights": _weights_doc(config.weights),
        "run": _run_doc(config.run),
        "synthesis": _synthesis_doc(config),
        "output": {
            "directory": config.output.directory,
            "save_pgm": config.output.save_pgm,
        },
    }
    return json.dumps(document, indent=2, sort_keys=True) + "\n"


def _weights_doc(weights: WeightSpec) -> dict:
    if weights.mode == "explicit":
        return {"mode": "explicit", "values": list(weights.values)}
    if weights.mode == "suggested":
        return {"mode": "suggested", "order": weights.order, "mu": weights.mu}
    return {"mode": "uniform"}


def _run_doc(run: RunConfig) -> dict:
    doc = {
        "mode": run.mode,
        "max_iters": run.max_iters,
        "residual_tol": run.residual_tol,
        "record_every": run.record_every,
    }
    if run.params is not None:
        doc["mu"] = run.params.mu
        doc["tau"] = run.params.tau
    return doc


def _synthesis_doc(config: ExperimentConfig) -> dict:
    doc = {"seed": config.synthesis.seed, "rms": config.synthesis.rms}
    if config.noise is not None:
        noise = {
            "target_snr_db": config.noise.target_snr_db,
            "bumps": config.noise.bumps,
            "width_range": list(config.noise.width_range),
            "mode": config.noise.mode,
        }
        if config.noise.seed is not None:
            noise["seed"] = config.noise.seed
        doc["noise"] = noise
    return doc
