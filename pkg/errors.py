#!/usr/bin/env python3
"""
Splash Simulator - Error Hierarchy
==================================

Every failure the simulator reports derives from SplashSimError and carries
the process exit code the CLI returns for it:

- ScenarioError (exit 2): geometry, solver and configuration failures
- IoFailure (exit 3): unreadable or inconsistent files
"""

from typing import Any, List, Optional


class SplashSimError(Exception):
    """Base class for all simulator errors."""

    exit_code = 1


class ScenarioError(SplashSimError):
    """A scenario could not be carried out as configured."""

    exit_code = 2


class IoFailure(SplashSimError):
    """Reading or writing an artifact failed."""

    exit_code = 3


# Conformal map
class PointOnCut(ScenarioError):
    pass


class SingularPoint(ScenarioError):
    pass


# Curve geometry
class TooFewSamples(ScenarioError):
    pass


class DegenerateTangent(ScenarioError):
    pass


class OutsideChart(ScenarioError):
    pass


class CurveHitsSingularity(ScenarioError):
    pass


# Initial data
class ChartTooNarrow(ScenarioError):
    pass


class PointsNotOnBoundary(ScenarioError):
    pass


# Solvers
class SolverDiverged(ScenarioError):
    pass


class IllPosed(ScenarioError):
    pass


class CompatibilityViolated(ScenarioError):
    pass


# Nonlinear iteration
class FoldingDetected(ScenarioError):
    pass


class ResolutionLost(ScenarioError):
    pass


class NoContraction(ScenarioError):
    """Picard factors exceeded 1 for consecutive iterations."""

    def __init__(self, message: str, history: Optional[List[Any]] = None):
        super().__init__(message)
        self.history = history or []


class NoTouchWithinHorizon(ScenarioError):
    """The run reached its horizon with the preimage still simple."""

    def __init__(self, message: str, timeline: Any = None):
        super().__init__(message)
        self.timeline = timeline


# Norms and configuration
class OutOfRange(ScenarioError):
    pass


class ConfigError(ScenarioError):
    pass


# Files
class DomainMismatch(IoFailure):
    """A snapshot was written for a different discrete domain."""
