"""Search engines: a real-coded GA for five-bar synthesis and Powell's
conjugate-direction method with a quadratic penalty wrapper."""
from .ga import Bounds, GAConfig, GAResult, GenerationRecord, SynthesisProblem, ga_run, meets_termination
from .powell import (OptimizationError, PenaltyResult, PowellConfig, PowellResult,
                     penalty_minimize, penalty_wrap, powell_run)

__all__ = [
    "Bounds", "GAConfig", "GAResult", "GenerationRecord", "SynthesisProblem", "ga_run",
    "meets_termination", "OptimizationError", "PenaltyResult", "PowellConfig",
    "PowellResult", "penalty_minimize", "penalty_wrap", "powell_run",
]
