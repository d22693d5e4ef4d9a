//! Primal-dual interior point method for convex QPs.

mod newton;
mod problem;

pub use newton::{
    assemble_augmented, assemble_normal_equations, dual_steps, AugmentedOperator, Barrier, NormalEqOperator,
    NormalSystem, PrimalNormalOperator,
};
pub(crate) use newton::{augmented_combine, normal_apply, primal_combine, q_apply};
pub use problem::{compute_residuals, BoundKind, Iterate, ProblemInstance, Residuals};

mod solve;
mod theory;

pub use solve::{
    choose_sigma, ipm_solve, ipm_solve_report, is_converged, theory_sigma, vartol_tolerance, write_solves_csv,
    write_stats_csv, IdentityFactory, IpmConfig, IpmIterStats, IpmReport, IpmSolution, LinearMode,
    PreconditionerFactory, SigmaSchedule, SolveKind, SolveRecord, StepRule, StoppingPolicy, SystemKind,
    SOLVES_HEADER, STATS_HEADER,
};
pub use theory::{
    alpha_tilde, direction_ratios, lemma1_inequalities, neighborhood_check, products, theoretical_accept,
    TheoryConfig,
};
