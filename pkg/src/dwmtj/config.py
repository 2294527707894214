"""JSON experiment configs: strict schema, documented defaults, and object builders."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import device as dev
from .crossbar import read_matrix_csv
from .netsim import (
    ConfigError,
    DriveWaveform,
    NoInhibition,
    Partial,
    SimConfig,
    WinnerTakeAll,
    dc_encode,
    pulse_train,
    rate_encode,
)


class ConfigValidationError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


DEFAULTS: dict[str, Any] = {
    "device": {
        "neuron": {
            "geometry": {"length_m": 1e-6, "width_start_m": 1e-7, "width_end_m": 1e-7, "thickness_m": 5e-9},
            "leak": {"type": "dipolar", "drift_speed_mps": 5.0},
            "material": {"stt_mobility": 5e-11},
            "output_mtj": {
                "g_parallel_S": 5e-5, "g_antiparallel_S": 1e-5,
                "window_start_m": 8e-7, "window_end_m": 1e-6,
            },
            "fire_position_m": 8e-7,
            "reset_position_m": 0.0,
            "hysteresis_m": 5e-8,
            "refractory_s": 0.0,
            "supply_voltage_V": 0.1,
        },
        "synapse": {
            "geometry": {"length_m": 1e-6, "width_start_m": 1e-7, "width_end_m": 1e-7, "thickness_m": 5e-9},
            "material": {"stt_mobility": 5e-11},
            "barrier": {
                "g_parallel_S": 5e-5, "g_antiparallel_S": 1e-5,
                "window_start_m": 1e-7, "window_end_m": 9e-7,
            },
        },
    },
    "stimulus": {"amplitude_A": 1e-4, "pulse_width_s": 5e-8, "period_s": 1e-7, "start_s": 0.0},
    "drive": {
        "mode": "dc", "values": [], "v_max_V": 1.0, "f_max_Hz": 1e7,
        "pulse_width_s": 5e-9, "v_pulse_V": 1.0, "seed": 0, "jitter": 0.0,
    },
    "simulation": {"dt_s": 1e-10, "t_end_s": 1e-6, "sample_stride": 1},
    "inhibition": {"policy": "none", "inhibit_displacement_m": None},
    "output": {"trace": None, "events": None, "report": None},
}

NETWORK_DEFAULTS = {"wire_resistance_ohm": 0.0, "sense_resistance_ohm": 1e4, "quantize_levels": None}

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_NUM = {"type": "number"}
_PATH = {"type": ["string", "null"]}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False, "required": list(required)}


_GEOMETRY = _obj({k: _POS for k in ("length_m", "width_start_m", "width_end_m", "thickness_m")})
_MATERIAL = _obj({"stt_mobility": _POS})
_MTJ = _obj({"g_parallel_S": _POS, "g_antiparallel_S": _POS, "window_start_m": _NONNEG, "window_end_m": _POS})
_LEAK = _obj({
    "type": {"enum": ["dipolar", "anisotropy", "taper", "none"]},
    "drift_speed_mps": _POS,
    "mobility_mk": _POS,
    "k0_jm3": _NUM,
    "k_slope_jm4": _NONNEG,
    "mobility_ms": _POS,
})
_LEAK_FIELDS = {
    "dipolar": {"drift_speed_mps"},
    "anisotropy": {"mobility_mk", "k0_jm3", "k_slope_jm4"},
    "taper": {"mobility_ms"},
    "none": set(),
}

SCHEMA = _obj({
    "device": _obj({
        "neuron": _obj({
            "geometry": _GEOMETRY,
            "leak": _LEAK,
            "material": _MATERIAL,
            "output_mtj": _MTJ,
            "fire_position_m": _POS,
            "reset_position_m": _NONNEG,
            "hysteresis_m": _NONNEG,
            "refractory_s": _NONNEG,
            "supply_voltage_V": _NUM,
        }),
        "synapse": _obj({"geometry": _GEOMETRY, "material": _MATERIAL, "barrier": _MTJ}),
    }),
    "stimulus": _obj({"amplitude_A": _NUM, "pulse_width_s": _POS, "period_s": _POS, "start_s": _NONNEG}),
    "network": _obj({
        "weights": {
            "type": "array", "minItems": 1,
            "items": {"anyOf": [
                {"type": "string"},
                {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _NUM}},
            ]},
        },
        "wire_resistance_ohm": _NONNEG,
        "sense_resistance_ohm": _POS,
        "quantize_levels": {"type": ["integer", "null"], "minimum": 2},
    }, required=["weights"]),
    "drive": _obj({
        "mode": {"enum": ["dc", "rate"]},
        "values": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}},
        "v_max_V": _NUM,
        "f_max_Hz": _POS,
        "pulse_width_s": _POS,
        "v_pulse_V": _NUM,
        "seed": {"type": "integer", "minimum": 0},
        "jitter": {"type": "number", "minimum": 0, "maximum": 1},
    }),
    "simulation": _obj({
        "dt_s": _POS,
        "t_end_s": _POS,
        "sample_stride": {"type": "integer", "minimum": 1},
    }),
    "inhibition": _obj({
        "policy": {"enum": ["none", "wta", "partial"]},
        "inhibit_displacement_m": {"type": ["number", "null"], "exclusiveMinimum": 0},
    }),
    "output": _obj({"trace": _PATH, "events": _PATH, "report": _PATH}),
})


def _merge(defaults: dict, given: dict) -> dict:
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _key_path(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


@dataclass
class ExperimentConfig:
    data: dict
    base_dir: Path = field(default=Path("."), compare=False)

    @property
    def has_network(self) -> bool:
        return self.data.get("network") is not None

    def to_json(self) -> str:
        data = {k: v for k, v in self.data.items() if not (k == "network" and v is None)}
        return json.dumps(data, indent=2, sort_keys=True) + "\n"

    # -- builders --------------------------------------------------------------

    def neuron(self) -> dev.NeuronDevice:
        return build_neuron(self.data["device"]["neuron"])

    def synapse(self) -> dev.SynapseDevice:
        return build_synapse(self.data["device"]["synapse"])

    def sim_config(self) -> SimConfig:
        s, inh = self.data["simulation"], self.data["inhibition"]
        return SimConfig(s["dt_s"], s["t_end_s"], build_inhibition(inh), s["sample_stride"])

    def stimulus(self) -> DriveWaveform:
        st = self.data["stimulus"]
        return pulse_train(st["amplitude_A"], st["pulse_width_s"], st["period_s"],
                           self.data["simulation"]["t_end_s"], st["start_s"])

    def drive(self) -> DriveWaveform:
        d = self.data["drive"]
        if d["mode"] == "dc":
            return dc_encode(d["values"], d["v_max_V"])
        return rate_encode(d["values"], d["f_max_Hz"], d["pulse_width_s"], d["v_pulse_V"],
                           seed=d["seed"], t_end_s=self.data["simulation"]["t_end_s"], jitter=d["jitter"])

    def weights(self) -> list[np.ndarray]:
        out = []
        for w in self.data["network"]["weights"]:
            out.append(read_matrix_csv(w) if isinstance(w, str) else np.asarray(w, dtype=float))
        return out

    def network(self):
        from .mapping import build_network

        net = self.data["network"]
        return build_network(
            self.weights(), self.neuron(), self.synapse(),
            wire_resistance_ohm=net["wire_resistance_ohm"],
            sense_resistance_ohm=net["sense_resistance_ohm"],
            quantize_levels=net["quantize_levels"],
        )


def build_leak(d: dict) -> dev.LeakMechanism:
    kind = d["type"]
    if kind == "dipolar":
        return dev.DipolarField(d["drift_speed_mps"])
    if kind == "anisotropy":
        return dev.AnisotropyGradient(d["mobility_mk"], d.get("k0_jm3", 0.0), d["k_slope_jm4"])
    if kind == "taper":
        return dev.ShapeTaper(d["mobility_ms"])
    return dev.NoLeak()


def build_neuron(d: dict) -> dev.NeuronDevice:
    return dev.NeuronDevice(
        geometry=dev.TrackGeometry(**d["geometry"]),
        leak=build_leak(d["leak"]),
        material=dev.MaterialParams(**d["material"]),
        output_mtj=dev.MtjStack(**d["output_mtj"]),
        fire_position_m=d["fire_position_m"],
        reset_position_m=d["reset_position_m"],
        hysteresis_m=d["hysteresis_m"],
        refractory_s=d["refractory_s"],
        supply_voltage_V=d["supply_voltage_V"],
    )


def build_synapse(d: dict) -> dev.SynapseDevice:
    barrier = dev.MtjStack(**d["barrier"])
    return dev.SynapseDevice(
        geometry=dev.TrackGeometry(**d["geometry"]),
        material=dev.MaterialParams(**d["material"]),
        barrier=barrier,
        dw_position_m=barrier.window_start_m,
    )


def build_inhibition(d: dict):
    if d["policy"] == "wta":
        return WinnerTakeAll()
    if d["policy"] == "partial":
        if d.get("inhibit_displacement_m") is None:
            raise ConfigError("partial inhibition needs inhibit_displacement_m")
        return Partial(d["inhibit_displacement_m"])
    return NoInhibition()


def validate(raw: Any, base_dir: Path = Path(".")) -> ExperimentConfig:
    """Validate a raw JSON value and fill defaults. Raises with every problem found."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = []
    for err in sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path))):
        errors.append(f"{_key_path(err.absolute_path)}: {err.message}")
    if errors:
        raise ConfigValidationError(errors)

    data = _merge(DEFAULTS, {k: v for k, v in raw.items() if k != "network"})
    if "network" in raw:
        data["network"] = _merge(NETWORK_DEFAULTS, raw["network"])
        data["network"]["weights"] = [
            str((base_dir / w).resolve()) if isinstance(w, str) else w for w in data["network"]["weights"]
        ]
    else:
        data["network"] = None

    leak = data["device"]["neuron"]["leak"]
    extra = set(raw.get("device", {}).get("neuron", {}).get("leak", {})) - {"type"} - _LEAK_FIELDS[leak["type"]]
    for key in sorted(extra):
        errors.append(f"device.neuron.leak.{key}: not a parameter of leak type {leak['type']!r}")
    if leak["type"] != "dipolar":
        leak.pop("drift_speed_mps", None)
    missing = _LEAK_FIELDS[leak["type"]] - set(leak) - {"k0_jm3"}
    for key in sorted(missing):
        errors.append(f"device.neuron.leak.{key}: required for leak type {leak['type']!r}")

    cfg = ExperimentConfig(data, base_dir)
    checks = [
        ("device.neuron", cfg.neuron),
        ("device.synapse", cfg.synapse),
        ("simulation", cfg.sim_config),
        ("stimulus", cfg.stimulus),
        ("drive", cfg.drive),
    ]
    if not errors:
        for where, build in checks:
            try:
                build()
            except (ValueError, TypeError) as exc:
                errors.append(f"{where}: {exc}")
    if not errors and cfg.has_network:
        try:
            net = cfg.network()
            if len(data["drive"]["values"]) != net.input_width:
                errors.append(
                    f"drive.values: network has {net.input_width} inputs, got {len(data['drive']['values'])} values"
                )
        except (ValueError, OSError) as exc:
            errors.append(f"network: {exc}")
    if errors:
        raise ConfigValidationError(errors)
    return cfg


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigValidationError([f"{path}: no such config file"])
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigValidationError([f"{path}: invalid JSON ({exc})"]) from exc
    return validate(raw, path.parent)


def set_dotted(data: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        if not isinstance(node.get(key), dict):
            raise ConfigValidationError([f"{dotted}: no such parameter"])
        node = node[key]
    if keys[-1] not in node:
        raise ConfigValidationError([f"{dotted}: no such parameter"])
    node[keys[-1]] = value


def with_override(cfg: ExperimentConfig, dotted: str, value) -> ExperimentConfig:
    data = copy.deepcopy(cfg.data)
    set_dotted(data, dotted, value)
    if data.get("network") is None:
        data.pop("network", None)
    return validate(data, cfg.base_dir)

