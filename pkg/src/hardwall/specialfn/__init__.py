"""Special functions: incomplete gamma, log erfc, Jacobi theta, Weierstrass p
and the erfc-integral constants."""

from .erfc import log_erfc
from .gamma import (
    A_MIN,
    GammaRegime,
    TemmeDecomposition,
    log_reg_inc_gamma_pq,
    reg_inc_gamma,
    reg_inc_gamma_pq,
    reg_inc_gamma_temme,
    reg_inc_gamma_tricomi,
    temme_coefficients,
    temme_eta,
)
from .integrals import ErfcIntegralConstants, erfc_integral_constants
from .theta import (
    ThetaParams,
    jacobi_theta,
    jacobi_theta_modular,
    jacobi_theta_product,
    jacobi_theta_series,
    log_jacobi_theta,
    theta_log_derivatives,
    weierstrass_c,
    weierstrass_p,
)

__all__ = [
    "A_MIN",
    "ErfcIntegralConstants",
    "GammaRegime",
    "TemmeDecomposition",
    "log_reg_inc_gamma_pq",
    "ThetaParams",
    "erfc_integral_constants",
    "jacobi_theta",
    "jacobi_theta_modular",
    "jacobi_theta_product",
    "jacobi_theta_series",
    "log_erfc",
    "log_jacobi_theta",
    "reg_inc_gamma",
    "reg_inc_gamma_pq",
    "reg_inc_gamma_temme",
    "reg_inc_gamma_tricomi",
    "temme_coefficients",
    "temme_eta",
    "theta_log_derivatives",
    "weierstrass_c",
    "weierstrass_p",
]
