"""Belief-state equilibrium solver and simulator for reputation-driven expert advice."""

__version__ = "0.1.0"

from .model import (BinarySignalParams, BranchDistribution, ModelParams, TailQuadruple,
                    apply_log_odds, binary_jumps, binary_recommendation_lr, branch_distribution,
                    gaussian_tails)
from .solver import (EquilibriumSolution, Grid, SolveSettings, ValueFunction, comparative_sweep,
                     delta_h, diagnosticity_at_cutoff, experimentation_rate, solve_cutoff,
                     value_iteration)
from .dynamics import (PathEnsemble, SimSettings, bayes_consistency_check, boundary_hitting,
                       ct_coefficients, drift_and_kl, simulate_paths)
from .policy import (BonusContract, PlannerInputs, bonus_cutoff, bonus_delta, calibrate_bonus,
                     minimal_transfers, planner_local_bonus, rho_of_beta, rho_prime)
from .committee import (CommitteeSpec, committee_delta, pivot_general, pivot_k_of_n,
                        pivot_monotonicity, poisson_binomial_pmf)
from .measure import PanelRecord, export_regression_tables, rep_beta_bernoulli

__all__ = [
    "BinarySignalParams", "BranchDistribution", "ModelParams", "TailQuadruple", "apply_log_odds",
    "binary_jumps", "binary_recommendation_lr", "branch_distribution", "gaussian_tails",
    "EquilibriumSolution", "Grid", "SolveSettings", "ValueFunction", "comparative_sweep", "delta_h",
    "diagnosticity_at_cutoff", "experimentation_rate", "solve_cutoff", "value_iteration",
    "PathEnsemble", "SimSettings", "bayes_consistency_check", "boundary_hitting", "ct_coefficients",
    "drift_and_kl", "simulate_paths", "BonusContract", "PlannerInputs", "bonus_cutoff", "bonus_delta",
    "calibrate_bonus", "minimal_transfers", "planner_local_bonus", "rho_of_beta", "rho_prime",
    "CommitteeSpec", "committee_delta", "pivot_general", "pivot_k_of_n", "pivot_monotonicity",
    "poisson_binomial_pmf", "PanelRecord", "export_regression_tables", "rep_beta_bernoulli",
]
