"""Dual averaging for composite problems min_x f(Ax) + h(x) without strong convexity of h.

Two solvers are provided: plain dual averaging, which can break down when the
prox subproblem has no minimizer, and a dual-monotone variant that stays
well-defined. Around them sit certified constants for their gap bounds, a
Lipschitz-extension toolkit, and a benchmark CLI.
"""
from .certificates import CertificateReport, certify, check_assumption2, delta_lower, diam_U
from .da import IllDefined, SolverRun, StepSchedule, da_prestart, da_run, da_step
from .envelope import (ConstraintSetC, LipschitzExtension, dom_FLstar_membership, eval_FL,
                       estimate_L_on_C, subgrad_FL_on_C)
from .errors import CapabilityError, CertificateError, DomainError, SchemaError, UsageError
from .mda import k_threshold_bound, mda_prestart, mda_run, mda_step, mda_warm_prestart
from .objectives import LogPlusMax, MaxAffine, MaxCoord, SupportPolytope
from .problem import CompositeProblem, dual_value, primal_value
from .prox import (Unbounded, conj_domain_classify, conj_grad, conj_value, entropy, log_barrier,
                   neg_power, prox_subproblem, quadratic, sum_exp)
from .spaces import NormPair, gauge_norm, project_simplex, solve_small_lp

__version__ = "0.1.0"
