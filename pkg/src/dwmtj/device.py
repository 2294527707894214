"""Behavioral domain-wall MTJ devices: track geometry, leak mechanisms, neuron and synapse.

The DW is a single collective coordinate ``x`` on a track ``[0, L]``. ``x = 0`` is
the reset end, the output MTJ of a neuron sits near ``x = L``. Velocity is the
overdamped sum of a current-driven term and a position-dependent drift::

    v(x) = stt_mobility * I / (w(x) * t) + v_drift(x),    v_drift <= 0
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

# Relative slack on threshold comparisons. Absorbs roundoff when x_f is an exact
# multiple of v*dt; shared with the abstract oracle so both fire on the same step.
FIRE_RTOL = 1e-9


class DeviceError(ValueError):
    """Out-of-range argument or inconsistent device parameters."""


class MtjState(enum.IntEnum):
    ANTIPARALLEL = 0
    PARALLEL = 1


@dataclass(frozen=True)
class TrackGeometry:
    length_m: float = 1e-6
    width_start_m: float = 100e-9
    width_end_m: float = 100e-9
    thickness_m: float = 5e-9

    def __post_init__(self):
        for name in ("length_m", "width_start_m", "width_end_m", "thickness_m"):
            if not getattr(self, name) > 0:
                raise DeviceError(f"{name} must be > 0, got {getattr(self, name)!r}")

    @property
    def is_rectangular(self) -> bool:
        return self.width_start_m == self.width_end_m

    @property
    def width_slope(self) -> float:
        return (self.width_end_m - self.width_start_m) / self.length_m


@dataclass(frozen=True)
class DipolarField:
    """Fixed ferromagnet under the track; constant drift toward the reset end."""

    drift_speed_mps: float = 5.0

    def __post_init__(self):
        if not self.drift_speed_mps > 0:
            raise DeviceError("drift_speed_mps must be > 0")


@dataclass(frozen=True)
class AnisotropyGradient:
    """Linear anisotropy profile K(x) = k0 + k_slope * x.

    Only the slope drives the wall; ``k0_jm3`` is carried for completeness.
    """

    mobility_mk: float = 5e-12
    k0_jm3: float = 5e5
    k_slope_jm4: float = 1e12

    def __post_init__(self):
        if not self.mobility_mk > 0:
            raise DeviceError("mobility_mk must be > 0")
        if self.k_slope_jm4 < 0:
            raise DeviceError("k_slope_jm4 must be >= 0")


@dataclass(frozen=True)
class ShapeTaper:
    """Trapezoidal track; the wall relaxes from the wide end toward the narrow end."""

    mobility_ms: float = 1e-6

    def __post_init__(self):
        if not self.mobility_ms > 0:
            raise DeviceError("mobility_ms must be > 0")


@dataclass(frozen=True)
class NoLeak:
    pass


LeakMechanism = Union[DipolarField, AnisotropyGradient, ShapeTaper, NoLeak]


@dataclass(frozen=True)
class MaterialParams:
    stt_mobility: float = 5e-11  # (m/s) / (A/m^2)

    def __post_init__(self):
        if not self.stt_mobility > 0:
            raise DeviceError("stt_mobility must be > 0")


@dataclass(frozen=True)
class MtjStack:
    g_parallel_S: float = 5e-5
    g_antiparallel_S: float = 1e-5
    window_start_m: float = 0.8e-6
    window_end_m: float = 1e-6

    def __post_init__(self):
        if not 0 < self.g_antiparallel_S < self.g_parallel_S:
            raise DeviceError("need 0 < g_antiparallel_S < g_parallel_S")
        if not 0 <= self.window_start_m < self.window_end_m:
            raise DeviceError("need 0 <= window_start_m < window_end_m")

    def conductance(self, state: MtjState) -> float:
        return self.g_parallel_S if state == MtjState.PARALLEL else self.g_antiparallel_S


@dataclass(frozen=True)
class NeuronDevice:
    """Four-terminal LIF neuron: DW track input, electrically isolated output MTJ."""

    geometry: TrackGeometry = field(default_factory=TrackGeometry)
    leak: LeakMechanism = field(default_factory=DipolarField)
    material: MaterialParams = field(default_factory=MaterialParams)
    output_mtj: MtjStack = field(default_factory=MtjStack)
    fire_position_m: float = 0.8e-6
    reset_position_m: float = 0.0
    hysteresis_m: float = 50e-9
    refractory_s: float = 0.0
    supply_voltage_V: float = 0.1

    def __post_init__(self):
        L = self.geometry.length_m
        if not 0 <= self.reset_position_m < self.fire_position_m <= L:
            raise DeviceError("need 0 <= reset_position_m < fire_position_m <= length_m")
        if self.output_mtj.window_end_m > L:
            raise DeviceError("output MTJ window extends past the track")
        if not self.output_mtj.window_start_m <= self.fire_position_m <= self.output_mtj.window_end_m:
            raise DeviceError("fire_position_m must lie under the output MTJ window")
        if self.hysteresis_m < 0 or self.refractory_s < 0:
            raise DeviceError("hysteresis_m and refractory_s must be >= 0")
        if isinstance(self.leak, ShapeTaper) and self.geometry.width_start_m > self.geometry.width_end_m:
            raise DeviceError("shape-taper drift needs the narrow end at x=0 (width_start_m <= width_end_m)")


@dataclass(frozen=True)
class NeuronState:
    dw_position_m: float = 0.0
    mtj_state: MtjState = MtjState.ANTIPARALLEL
    refractory_until_s: float = 0.0
    last_fire_time_s: Optional[float] = None


@dataclass(frozen=True)
class FireEvent:
    time_s: float


@dataclass(frozen=True)
class SynapseDevice:
    """Three-terminal synapse whose long tunnel barrier gives an analog conductance."""

    geometry: TrackGeometry = field(default_factory=TrackGeometry)
    material: MaterialParams = field(default_factory=MaterialParams)
    barrier: MtjStack = field(default_factory=lambda: MtjStack(window_start_m=0.1e-6, window_end_m=0.9e-6))
    dw_position_m: float = 0.1e-6

    def __post_init__(self):
        if not self.geometry.is_rectangular:
            raise DeviceError("synapse track must be rectangular")
        if self.barrier.window_end_m > self.geometry.length_m:
            raise DeviceError("barrier window extends past the track")
        if not 0 <= self.dw_position_m <= self.geometry.length_m:
            raise DeviceError("dw_position_m outside the track")


@dataclass(frozen=True)
class Pulse:
    amplitude_A: float
    width_s: float


def _check_position(geometry: TrackGeometry, x: float) -> None:
    if not 0 <= x <= geometry.length_m:
        raise DeviceError(f"position {x!r} outside [0, {geometry.length_m!r}]")


def track_width(geometry: TrackGeometry, x: float) -> float:
    _check_position(geometry, x)
    return geometry.width_start_m + geometry.width_slope * x


def current_density(device, input_current: float, x: float) -> float:
    """Current density in the track at ``x`` (A/m^2). ``device`` is a neuron or synapse."""
    g = device.geometry
    return input_current / (track_width(g, x) * g.thickness_m)


def drift_velocity(leak: LeakMechanism, geometry: TrackGeometry, x: float) -> float:
    _check_position(geometry, x)
    if isinstance(leak, DipolarField):
        return -leak.drift_speed_mps
    if isinstance(leak, AnisotropyGradient):
        return -leak.mobility_mk * leak.k_slope_jm4
    if isinstance(leak, ShapeTaper):
        # w'/w is zero for a rectangular track
        return -leak.mobility_ms * geometry.width_slope / track_width(geometry, x)
    if isinstance(leak, NoLeak):
        return 0.0
    raise DeviceError(f"unknown leak mechanism {leak!r}")


def dw_velocity(device: NeuronDevice, input_current: float, x: float) -> float:
    stt = device.material.stt_mobility * current_density(device, input_current, x)
    return stt + drift_velocity(device.leak, device.geometry, x)


def mtj_output_state(state: NeuronState, device: NeuronDevice) -> MtjState:
    x = state.dw_position_m
    if x >= device.fire_position_m:
        return MtjState.PARALLEL
    if x <= device.fire_position_m - device.hysteresis_m:
        return MtjState.ANTIPARALLEL
    return state.mtj_state


def neuron_output_current(state: NeuronState, device: NeuronDevice) -> float:
    """Current through the output MTJ. Depends only on the MTJ state, never on the track current."""
    return device.supply_voltage_V * device.output_mtj.conductance(state.mtj_state)


def step_neuron(
    state: NeuronState,
    device: NeuronDevice,
    input_current: float,
    t: float,
    dt: float,
) -> tuple[NeuronState, Optional[FireEvent]]:
    """Advance one explicit-Euler step from ``t`` to ``t + dt``.

    A threshold crossing resets the wall at the end of the step. The event time is
    the crossing instant of the linear Euler segment, so it lies in ``(t, t + dt]``.
    """
    if not dt > 0:
        raise DeviceError(f"dt must be > 0, got {dt!r}")
    x = state.dw_position_m
    L = device.geometry.length_m
    # slack absorbs the roundoff between an interpolated fire time and the step grid
    refractory = state.refractory_until_s - t > FIRE_RTOL * dt
    current = 0.0 if refractory else input_current
    v = dw_velocity(device, current, x)
    x_free = x + v * dt
    x_new = min(max(x_free, 0.0), L)

    x_f = device.fire_position_m
    x_fire = x_f * (1.0 - FIRE_RTOL)
    if x < x_fire <= x_new:
        frac = (x_f - x) / (x_free - x)
        t_fire = t + dt * min(max(frac, 0.0), 1.0)
        reset = device.reset_position_m
        new = NeuronState(
            dw_position_m=reset,
            mtj_state=mtj_output_state(replace(state, dw_position_m=reset), device),
            refractory_until_s=t_fire + device.refractory_s,
            last_fire_time_s=t_fire,
        )
        return new, FireEvent(t_fire)

    moved = replace(state, dw_position_m=x_new)
    return replace(moved, mtj_state=mtj_output_state(moved, device)), None


def synapse_conductance(synapse: SynapseDevice) -> float:
    b = synapse.barrier
    frac = (synapse.dw_position_m - b.window_start_m) / (b.window_end_m - b.window_start_m)
    frac = min(max(frac, 0.0), 1.0)
    return b.g_antiparallel_S + (b.g_parallel_S - b.g_antiparallel_S) * frac


def synapse_position_for(synapse: SynapseDevice, target_conductance: float) -> float:
    """Inverse of :func:`synapse_conductance` restricted to the barrier window."""
    b = synapse.barrier
    if not b.g_antiparallel_S <= target_conductance <= b.g_parallel_S:
        raise DeviceError(
            f"target {target_conductance!r} S outside [{b.g_antiparallel_S!r}, {b.g_parallel_S!r}]"
        )
    frac = (target_conductance - b.g_antiparallel_S) / (b.g_parallel_S - b.g_antiparallel_S)
    return b.window_start_m + frac * (b.window_end_m - b.window_start_m)


def pulse_displacement(synapse: SynapseDevice, pulse: Pulse) -> float:
    """Unsigned DW displacement produced by one programming pulse."""
    j = current_density(synapse, abs(pulse.amplitude_A), synapse.dw_position_m)
    return synapse.material.stt_mobility * j * pulse.width_s


def program_synapse(
    synapse: SynapseDevice, target_conductance: float, pulse: Pulse
) -> tuple[int, SynapseDevice]:
    """Open-loop programming: pulse toward the target until the wall reaches or passes it.

    Returns the pulse count and the programmed synapse. The final position is within
    one pulse displacement of the target position.
    """
    if pulse.amplitude_A == 0 or not pulse.width_s > 0:
        raise DeviceError("pulse needs a non-zero amplitude and positive width")
    x_target = synapse_position_for(synapse, target_conductance)
    dx = pulse_displacement(synapse, pulse)
    L = synapse.geometry.length_m
    x = synapse.dw_position_m
    direction = math.copysign(1.0, x_target - x)
    tol = FIRE_RTOL * dx
    count = 0
    while direction * (x_target - x) > tol:
        x = min(max(x + direction * dx, 0.0), L)
        count += 1
    return count, replace(synapse, dw_position_m=x)
