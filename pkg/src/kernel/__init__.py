"""
观测器核函数模块
"""
from .direct import solve_kernel_direct
from .fields import KernelField, PsiField
from .normalized import NormalizedCoeffs, diagonal_trace, eval_L, eval_lambda_bar, psi_initial
from .residual import KernelResidualReport, kernel_residual
from .successive import psi_iterate, solve_kernel

__all__ = [
    "KernelField",
    "PsiField",
    "NormalizedCoeffs",
    "KernelResidualReport",
    "eval_L",
    "eval_lambda_bar",
    "diagonal_trace",
    "psi_initial",
    "psi_iterate",
    "solve_kernel",
    "solve_kernel_direct",
    "kernel_residual",
]
