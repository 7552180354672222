from .quadrature import (DEFAULT_TOL, QuadratureResult, Side, Verdict,
                         default_schedule, integrate_adaptive,
                         integrate_improper)
from .special import EULER_GAMMA, bessel_i0, bessel_k0, exp_integral_e1
from .tridiag import (TridiagonalFactor, TridiagonalSystem, solve_tridiagonal,
                      tridiag_matvec)

__all__ = [
    "DEFAULT_TOL", "EULER_GAMMA", "QuadratureResult", "Side",
    "TridiagonalFactor", "TridiagonalSystem", "Verdict", "bessel_i0",
    "bessel_k0", "default_schedule", "exp_integral_e1", "integrate_adaptive",
    "integrate_improper", "solve_tridiagonal", "tridiag_matvec",
]
