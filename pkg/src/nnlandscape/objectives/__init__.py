"""Population and sample objectives with analytic derivatives."""

from .ffun import (
    emp_F_value_and_grad,
    pop_F,
    pop_F_grad,
    pop_F_undercomplete,
    pop_F_undercomplete_grad,
    pop_F_value_grad,
)
from .gfun import (
    GParams,
    complete_basis,
    emp_G_terms,
    emp_G_value_and_grad,
    g_weights,
    grad_G_general,
    hess_G_general,
    kernel_sums,
    p_prime,
    pop_G,
    pop_G_general,
    pop_G_grad,
    pop_G_hess,
    pop_G_value_grad,
    single_row_h,
    varphi_sum,
)
from .risk import (
    RiskSeries,
    emp_fprime_loss_and_grad,
    emp_l2_loss_and_grad,
    fprime_constant,
    label_second_moment,
    pop_fprime,
    pop_l2_risk,
    pop_relu_risk,
    tensor_residual,
)

__all__ = [
    "GParams",
    "RiskSeries",
    "complete_basis",
    "emp_F_value_and_grad",
    "emp_G_terms",
    "emp_G_value_and_grad",
    "emp_fprime_loss_and_grad",
    "emp_l2_loss_and_grad",
    "fprime_constant",
    "g_weights",
    "grad_G_general",
    "hess_G_general",
    "kernel_sums",
    "label_second_moment",
    "p_prime",
    "pop_F",
    "pop_F_grad",
    "pop_F_undercomplete",
    "pop_F_undercomplete_grad",
    "pop_F_value_grad",
    "pop_G",
    "pop_G_general",
    "pop_G_grad",
    "pop_G_hess",
    "pop_G_value_grad",
    "pop_fprime",
    "pop_l2_risk",
    "pop_relu_risk",
    "single_row_h",
    "tensor_residual",
    "varphi_sum",
]
