"""
Exception hierarchy. Every error carries the exit code the command line reports for it.
"""
from __future__ import annotations


class ContactMcmError(Exception):
    exit_code: int = 3
    code: str = "error"


class ConfigError(ContactMcmError):
    exit_code = 2
    code = "config"


class StorageError(ContactMcmError):
    exit_code = 4
    code = "io"


###################################################################################################
# Solver
###################################################################################################

class SolverError(ContactMcmError):
    exit_code = 3
    code = "solver"


class GridTooSmall(SolverError):
    code = "grid_too_small"


class DegenerateImmersion(SolverError):
    code = "degenerate_immersion"


class DegenerateState(SolverError):
    code = "degenerate_state"


class BcSolveFailure(SolverError):
    code = "bc_solve_failure"


class StepUnderflow(SolverError):
    code = "step_underflow"


class MeshDegeneracy(SolverError):
    code = "mesh_degeneracy"


class NewtonDivergence(SolverError):
    code = "newton_divergence"


class NotDiffeo(SolverError):
    code = "not_diffeo"


class IncompatibleSeed(SolverError):
    code = "incompatible_seed"


###################################################################################################
# Diagnostics
###################################################################################################

class DiagnosticError(ContactMcmError):
    exit_code = 5
    code = "diagnostic"


class ReconstructionFailure(DiagnosticError):
    code = "reconstruction_failure"


class InconsistentSnapshots(DiagnosticError):
    code = "inconsistent_snapshots"


class OriginOutside(DiagnosticError):
    code = "origin_outside"


class NotApplicable(DiagnosticError):
    code = "not_applicable"


class DomainError(ContactMcmError, ValueError):
    exit_code = 2
    code = "domain"
