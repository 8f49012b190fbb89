"""Experiment configuration: one TOML file per experiment, fully validated.

Every referenced model/profile/wedge spec is constructed (and therefore
validated by its own module) before any computation starts, so a bad config
fails fast with a field-level diagnostic.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import Boundary, ScalingParams, validate_jump_law
from .engine import ModelSpec
from .initial import ProfileSpec, RandomWedgeSpec
from .observables import TargetSet

__all__ = ["ExperimentConfig", "ParseError", "ValidationError", "parse_config",
           "parse_config_file", "KINDS"]

KINDS = ("simulate", "compare", "exact-check", "decompose", "tw-table",
         "maxima-tail", "wedge-energy")


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int
    label: str
    n: int
    model: ModelSpec | None
    scaling: ScalingParams | None
    window_sites: int
    window_origin: int | None
    boundary: Boundary
    initial: dict[str, Any]
    target: TargetSet | None
    options: dict[str, Any]
    out_dir: str
    raw: dict[str, Any] = field(repr=False, default_factory=dict)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def _get(d: dict, key: str, typ, default=None, section: str = ""):
    if key not in d:
        if default is not None or key in d:
            return default
        raise ValidationError(f"missing key '{section}{key}'")
    val = d[key]
    if typ is float and isinstance(val, int):
        val = float(val)
    if not isinstance(val, typ):
        raise ParseError(f"key '{section}{key}' has type {type(val).__name__}, "
                         f"expected {getattr(typ, '__name__', typ)}")
    return val


def _parse_model(sec: dict[str, Any]) -> ModelSpec:
    kind = _get(sec, "kind", str, section="model.")
    try:
        if kind == "tasep":
            return ModelSpec.tasep()
        if kind == "asep":
            return ModelSpec.asep(_get(sec, "p_right", float, section="model."),
                                  _get(sec, "p_left", float, section="model."))
        if kind == "aep":
            law_raw = _get(sec, "law", dict, section="model.")
            law = validate_jump_law({int(k): float(v) for k, v in law_raw.items()})
            return ModelSpec.aep(law)
        if kind == "wasep":
            return ModelSpec.wasep(_get(sec, "epsilon", float, section="model."),
                                   _get(sec, "delta", float, section="model."))
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(f"model: {exc}") from exc
    raise ValidationError(f"unknown model kind '{kind}'")


def _parse_profile(sec: dict[str, Any], section: str) -> ProfileSpec:
    pts = _get(sec, "points", list, section=section)
    try:
        return ProfileSpec.from_points(
            pts,
            left_slope=float(sec.get("left_slope", 0.0)),
            right_slope=float(sec.get("right_slope", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{section}: {exc}") from exc


def _parse_wedge(sec: dict[str, Any]) -> RandomWedgeSpec:
    try:
        return RandomWedgeSpec(
            anchors_y=tuple(float(v) for v in _get(sec, "anchors_y", list,
                                                   section="initial.")),
            heights_b=tuple(float(v) for v in _get(sec, "heights_b", list,
                                                   section="initial.")),
            gamma=float(sec.get("gamma", 1.0)),
            slope=float(sec.get("slope", math.inf)),
            floor=float(sec.get("floor", math.inf)),
        )
    except ValueError as exc:
        raise ValidationError(f"initial wedge: {exc}") from exc


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse and validate a TOML experiment description.

    Defaults: seed 0, boundary segment, averaging 0, output directory 'out'.
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{source}: {exc}") from exc

    kind = _get(raw, "kind", str)
    _require(kind in KINDS, f"unknown experiment kind '{kind}' (one of {KINDS})")
    seed = int(raw.get("seed", 0))
    label = str(raw.get("label", kind))
    n = int(raw.get("n", 1000))
    _require(n >= 1, "n must be >= 1")

    model = None
    if "model" in raw:
        model = _parse_model(_get(raw, "model", dict))

    scaling = None
    if "scaling" in raw:
        sec = _get(raw, "scaling", dict)
        try:
            scaling = ScalingParams(
                epsilon=_get(sec, "epsilon", float, section="scaling."),
                delta=float(sec.get("delta", 0.0)),
                macro_time=float(sec.get("macro_time", 0.0)),
                averaging_std=float(sec.get("averaging", 0.0)),
            )
        except ValueError as exc:
            raise ValidationError(f"scaling: {exc}") from exc

    window_sites = 0
    window_origin = None
    boundary = Boundary.CLOSED_SEGMENT
    if "window" in raw:
        sec = _get(raw, "window", dict)
        window_sites = int(_get(sec, "sites", int, section="window."))
        _require(window_sites > 0, "window.sites must be positive")
        if "origin" in sec:
            window_origin = int(sec["origin"])
            _require(0 <= window_origin <= window_sites,
                     "window.origin must lie inside the window")
        bname = str(sec.get("boundary", "segment"))
        _require(bname in ("segment", "ring"),
                 "window.boundary must be 'segment' or 'ring'")
        boundary = Boundary(bname)

    initial: dict[str, Any] = {}
    if "initial" in raw:
        sec = _get(raw, "initial", dict)
        ikind = _get(sec, "kind", str, section="initial.")
        _require(ikind in ("equilibrium", "profile", "wedge", "step"),
                 f"unknown initial kind '{ikind}'")
        initial = {"kind": ikind, "anchor": float(sec.get("anchor", 0.0))}
        if ikind == "profile":
            initial["profile"] = _parse_profile(sec, "initial.")
        if ikind == "wedge":
            initial["wedge"] = _parse_wedge(sec)

    target = None
    if "target" in raw:
        sec = _get(raw, "target", dict)
        mode = str(sec.get("mode", "hyp"))
        _require(mode in ("hyp", "epi"), "target.mode must be 'hyp' or 'epi'")
        target = TargetSet(mode=mode, profile=_parse_profile(sec, "target."))

    options: dict[str, Any] = {}
    for name in ("compare", "onepoint", "exactcheck", "decompose", "twtable",
                 "maxtail", "wedgeenergy", "simulate"):
        if name in raw:
            options[name] = _get(raw, name, dict)

    if kind == "decompose":
        sec = options.get("decompose", {})
        law_raw = _get(sec, "law", dict, section="decompose.")
        law = {int(k): float(v) for k, v in law_raw.items()}
        mean = sum(v * r for v, r in law.items())
        _require(abs(mean) < 1e-9, f"decompose.law must be mean-zero, got {mean}")
        options["decompose"] = {**sec, "law": law}
    if kind == "compare":
        sec = options.get("compare", {})
        eps_list = sec.get("epsilons")
        _require(isinstance(eps_list, list) and len(eps_list) >= 1,
                 "compare.epsilons must be a nonempty list")
        _require(model is not None, "compare needs a [model] section")
        _require(target is not None, "compare needs a [target] section")
    if kind == "simulate":
        _require(model is not None, "simulate needs a [model] section")
        _require(scaling is not None, "simulate needs a [scaling] section")
        _require(window_sites > 0, "simulate needs a [window] section")
        _require(bool(initial), "simulate needs an [initial] section")

    out_dir = str(raw.get("output", {}).get("dir", "out")) if isinstance(
        raw.get("output", {}), dict) else "out"

    return ExperimentConfig(
        kind=kind, seed=seed, label=label, n=n, model=model, scaling=scaling,
        window_sites=window_sites, window_origin=window_origin,
        boundary=boundary, initial=initial, target=target, options=options,
        out_dir=out_dir, raw=raw,
    )


def parse_config_file(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    return parse_config(p.read_text(), source=str(p))
