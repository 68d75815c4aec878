#!/usr/bin/env python3
"""Shared fixtures for the Splash Simulator tests."""

import numpy as np
import pytest

from config import ScenarioConfig
from curve import circle_curve, lobes_curve
from elliptic import disk_domain


@pytest.fixture(scope="session")
def small_disk():
    """Coarse disk domain away from the branch point; cheap enough for every module test."""
    return disk_domain(radial=8, angular=32)


@pytest.fixture(scope="session")
def medium_disk():
    return disk_domain(radial=12, angular=48)


@pytest.fixture
def unit_circle():
    return circle_curve(64, 1.0)


@pytest.fixture
def lobes():
    return lobes_curve(128, 0.3)


@pytest.fixture
def kinematic_cfg():
    """Disk union with the leftmost points 0.05 from the imaginary axis, moving left at unit speed."""
    return ScenarioConfig(mode="kinematic", curve="disk_union", gap=0.05, stream="zero", time_tol=1e-8)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
