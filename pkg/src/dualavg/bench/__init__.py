"""Instance generators, reference solver, experiment runner and CLI."""
from .affine import affine_invariance_harness, gauge_diameter, random_affine_map, reparametrize
from .experiment import RunReport, loglog_slope, run_experiment
from .generators import envelope_from_spec, gen_example61, gen_ptoy
from .reference import ReferenceOptimum, reference_dual_optimum
from .spec_io import ProblemSpec, committed_spec_path, load_spec, save_spec

__all__ = [
    "ProblemSpec", "ReferenceOptimum", "RunReport", "affine_invariance_harness",
    "committed_spec_path", "envelope_from_spec", "gauge_diameter", "gen_example61", "gen_ptoy",
    "load_spec", "loglog_slope", "random_affine_map", "reference_dual_optimum", "reparametrize",
    "run_experiment", "save_spec",
]
