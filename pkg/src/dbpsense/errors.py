"""Typed errors raised across the engine.

Every failure mode surfaces as a subclass of :class:`EngineError` so callers
(CLI, HTTP service) can map problems to diagnostics without string matching.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all engine failures."""


# ---------------------------------------------------------------------------
# Network file parsing


class InpError(EngineError):
    """Problem in an EPANET-style .inp file; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingSectionError(InpError):
    """A required section (junctions, or any fixed-head node source) is absent."""


class MalformedRowError(InpError):
    """A data row has the wrong field count or a non-numeric field."""


class DanglingReferenceError(InpError):
    """A link row names a node that no node section defines."""


class DuplicateIdError(InpError):
    """A node or pipe id appears more than once."""


class UnsupportedUnitsError(InpError):
    """[OPTIONS] declares a flow-unit system other than LPS."""


# ---------------------------------------------------------------------------
# Hydraulics and transport


class NonConvergenceError(EngineError):
    """Steady-state solver failed to reach the mass-balance tolerance."""

    def __init__(self, iterations: int, residual: float, tolerance: float):
        self.iterations = iterations
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            f"no convergence after {iterations} iterations "
            f"(residual {residual:.3e} L/s, tolerance {tolerance:.3e} L/s)"
        )


class UnsupportedElementError(EngineError):
    """Network connectivity depends on a pump or valve, which is not simulated."""


class DisconnectedNetworkError(EngineError):
    """A junction cannot be reached from any fixed-head node through open pipes."""


class CyclicFlowGraphError(EngineError):
    """Flow directions form a cycle among nonzero-flow pipes."""

    def __init__(self, cycle: list[str]):
        self.cycle = list(cycle)
        super().__init__("flow directions form a cycle: " + " -> ".join(self.cycle))


class CountExceedsNodesError(EngineError):
    """Requested more injection nodes than the network contains."""


# ---------------------------------------------------------------------------
# Environmental data


class CsvFormatError(EngineError):
    """A delimited data file has a bad header, cell, or duplicate record."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnknownNodeError(EngineError):
    """A data record references a node absent from the network."""


class NoObservationsError(EngineError):
    """A parameter has zero measured values and no configured default range."""


class SingularSystemError(EngineError):
    """Kriging system is singular (e.g. duplicate sample coordinates)."""


class InfeasibleTargetError(EngineError):
    """No parameter values within physical bounds exceed the target threshold."""


# ---------------------------------------------------------------------------
# Formulas and concentration models


class FormulaSyntaxError(EngineError):
    """Custom formula source failed to parse; carries the character offset."""

    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} at offset {position}")


class UnknownCharacterError(FormulaSyntaxError):
    """A character outside the formula grammar was encountered."""


class MissingVariableError(EngineError):
    """A model input variable is not bound at evaluation time."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"variable {name!r} is not bound")


class NonPositiveBaseError(EngineError):
    """A power-law model received a non-positive base under a fractional exponent."""


class FormulaDomainError(EngineError):
    """Evaluation hit a domain violation (negative base under fractional power,
    division by zero); reports the offending sub-expression."""

    def __init__(self, message: str, subexpression: str):
        self.subexpression = subexpression
        super().__init__(f"{message} in {subexpression!r}")


# ---------------------------------------------------------------------------
# Scoring and placement


class EmptyCandidateSetError(EngineError):
    """No node passes the relative-score cutoff."""


class MetricUnavailableError(EngineError):
    """An objective's metric is undefined for the run (e.g. no contracts data)."""


class NoScenariosError(EngineError):
    """Expected-detection-time placement requires at least one scenario."""


# ---------------------------------------------------------------------------
# Orchestration


class ConfigError(EngineError):
    """A run configuration violates an invariant."""


class StageError(EngineError):
    """Wraps a module error with the pipeline stage where it occurred."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r}: {cause}")
