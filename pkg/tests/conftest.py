import math

import pytest

from backaction.params import PAPER_PARAMS, PhysicalConstants, derive_params


@pytest.fixture(scope="session")
def paper():
    return derive_params(PhysicalConstants(), PAPER_PARAMS)


@pytest.fixture(scope="session")
def scaled(paper):
    """Oracle-reachable instance: strong coupling, low occupation, slow Larmor phase."""
    d = paper.with_kappa(1.2).with_nbar(1.0)
    return d.with_larmor(0.37 * d.omega_m)


def half_periods(d, *fractions):
    return tuple(math.pi * f / d.omega_m for f in fractions)


# criterion number -> (verdict, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        verdict, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {detail}")
