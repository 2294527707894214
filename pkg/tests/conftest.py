import os
from pathlib import Path

import pytest
from hypothesis import settings

from dwmtj.device import (
    AnisotropyGradient,
    DipolarField,
    NeuronDevice,
    ShapeTaper,
    TrackGeometry,
)

settings.register_profile("default", max_examples=60, deadline=None)
settings.register_profile("ci", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = ROOT / "configs"

TAPER = TrackGeometry(width_start_m=50e-9, width_end_m=150e-9)


@pytest.fixture
def config_dir():
    return CONFIG_DIR


@pytest.fixture(params=["dipolar", "anisotropy", "taper"])
def leaky_device(request):
    """One neuron per leak mechanism with its pulse amplitude for a sawtooth run."""
    return {
        "dipolar": (NeuronDevice(leak=DipolarField(5.0)), 100e-6),
        "anisotropy": (NeuronDevice(leak=AnisotropyGradient(5e-12, 5e5, 1e12)), 100e-6),
        "taper": (NeuronDevice(geometry=TAPER, leak=ShapeTaper(1e-6)), 30e-6),
    }[request.param]


# -- acceptance summary ---------------------------------------------------------

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): numbered acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    crit = report.user_properties and dict(report.user_properties).get("criterion")
    if crit:
        n, title = crit
        ok, _ = _criteria.get(n, (True, title))
        _criteria[n] = (ok and report.passed, title)


@pytest.fixture(autouse=True)
def _record_criterion(request):
    marker = request.node.get_closest_marker("criterion")
    if marker:
        request.node.user_properties.append(("criterion", tuple(marker.args)))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        ok, title = _criteria[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}")
