import numpy as np
import pytest

from eit_squeezing.medium import SusceptibilityParams
from eit_squeezing.opa import OpaParams
from eit_squeezing.spectral import FrequencyGrid

TWO_PI = 2 * np.pi

# Reference medium: 7.5 cm cell, OD 4 bare line, 5 mW control -> ~300 ns delay.
W_REF = TWO_PI * 250.0
L_REF = 7.5
K0_REF = TWO_PI / 795e-7
KAPPA_REF = TWO_PI * 14.0 / np.sqrt(5.0)


def reference_medium(power_mw=5.0, **changes):
    params = dict(
        rabi=KAPPA_REF * np.sqrt(power_mw),
        gamma_bc=TWO_PI * 0.05,
        doppler_width=W_REF,
        one_photon_detuning=TWO_PI * 30.0,
        two_photon_detuning=0.0,
        chi_scale=4.0 * W_REF / (K0_REF * L_REF),
        length=L_REF,
        carrier_wavelength=795.0,
    )
    params.update(changes)
    return SusceptibilityParams(**params)


@pytest.fixture
def grid():
    return FrequencyGrid()


@pytest.fixture
def small_grid():
    """2^11 points, +-50 MHz: enough for 600 ns pulses, cheap for oracles."""
    return FrequencyGrid.from_span(2**11, 51.2)


@pytest.fixture
def medium():
    return reference_medium()


@pytest.fixture
def opa():
    return OpaParams(cavity_hwhm=TWO_PI * 5.0, pump_ratio=0.3, efficiency=0.7)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion and assert it."""

    def record(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
