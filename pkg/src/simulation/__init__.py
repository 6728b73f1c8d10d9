"""
时间推进与衰减诊断
"""
from .diagnostics import DecayFit, LemmaCheck, check_lemma_decay, fit_decay, lyapunov_rate_bound, lyapunov_W
from .steppers import (
    PdeStepper,
    crank_nicolson_step,
    step_error,
    step_observer,
    step_plant,
    step_target,
    step_transformed,
)

__all__ = [
    "DecayFit",
    "LemmaCheck",
    "PdeStepper",
    "crank_nicolson_step",
    "step_plant",
    "step_transformed",
    "step_observer",
    "step_error",
    "step_target",
    "lyapunov_W",
    "fit_decay",
    "check_lemma_decay",
    "lyapunov_rate_bound",
]
