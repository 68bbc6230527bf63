"""Numerical toolkit for the parameter space of quadratic polynomial skew
products F(z, w) = (z^2 + d, w^2 + a z^2 + b z + c)."""

from .dynamics import (BaseQuadratic, OrbitOutcome, SkewParams,
                       escape_radius_fiber, fiber_orbit, green_base,
                       normalize_quadratic, rho, step, sup_rho_on_julia)
from .basejulia import (MeasureSamples, PeriodicPoint, fatou_component_id,
                        periodic_points, sample_julia, sample_mu_p)
from .lyapunov import (LyapEstimate, lyap_base, lyap_vertical_measure,
                       lyap_vertical_periodic, lyap_vertical_return)
from .slices import ClassMask, ComplexLineSlice, ScalarField
from .fields import (bz_mask, cdm_mask, classify_CDM, ddc,
                     decomposition_check, field_Gz, field_Lv, support_mask,
                     total_mass)
from .pern import (VerticalCycle, equidistribution_report, pern_potential,
                   vertical_cycles)
from .infinity import (ProjPoint, RadialMeasure, adherence_bound_check,
                       cluster_set_report, e_set_membership, energy,
                       log_potential, pi_inverse, pi_map, radial_bif_measure)
from .topology import (LiftResult, LoopParam, circle_loop, component_type,
                       jonsson_check, julia_topology_label, lift_curve,
                       roots_in_component_count)

__version__ = "0.1.0"
