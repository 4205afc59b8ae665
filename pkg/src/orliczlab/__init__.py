"""Numerical laboratory for Musielak-Orlicz spaces with power-log Phi-functions.

Exponent fields, the Phi-function ``t^p (log(e + t))^q``, Luxemburg and
Sobolev norms on quadrature grids, ball-domain geometry with measure density
fits, and empirical embedding scans.
"""

__version__ = "0.1.0"

from .box import Box, as_points  # noqa: E402
from .quadrature import QuadratureRule, integration_nodes  # noqa: E402
from .exponent_fields import (  # noqa: E402
    DecayData,
    ExponentField,
    check_log_holder,
    check_loglog_holder,
    check_nekvinda,
    mcshane_extend,
)
from .phi_core import (  # noqa: E402
    NonMonotoneError,
    PhiFunction,
    check_A0,
    check_A1,
    check_A2,
    check_ainc1,
    check_dec,
    eval_phi,
    eval_psi,
    invert_phi,
)
from .domain_geometry import (  # noqa: E402
    Domain,
    ball_intersection_measure,
    halving_sequence,
    log_density_fit,
    measure_density_check,
    r_tilde,
)
from .modular_norms import (  # noqa: E402
    GridFunction,
    char_fn_norm_bounds,
    luxemburg_norm,
    modular,
    sobolev_norm,
    unit_ball_check,
)
from .embedding_lab import (  # noqa: E402
    density_from_scan,
    embedding_exponents,
    embedding_ratio_scan,
    main_lemma_check,
    make_cutoff,
)

__all__ = [
    "Box", "as_points", "QuadratureRule", "integration_nodes", "DecayData", "ExponentField",
    "check_log_holder", "check_loglog_holder", "check_nekvinda", "mcshane_extend",
    "NonMonotoneError", "PhiFunction", "check_A0", "check_A1", "check_A2", "check_ainc1",
    "check_dec", "eval_phi", "eval_psi", "invert_phi", "Domain", "ball_intersection_measure",
    "halving_sequence", "log_density_fit", "measure_density_check", "r_tilde", "GridFunction",
    "char_fn_norm_bounds", "luxemburg_norm", "modular", "sobolev_norm", "unit_ball_check",
    "density_from_scan", "embedding_exponents", "embedding_ratio_scan", "main_lemma_check",
    "make_cutoff",
]
