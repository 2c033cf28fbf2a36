//! Optimization primitives shared by the solvers.

pub mod barrier;
pub mod linalg;
pub mod lp;

pub use barrier::{
    maximize_concave, BarrierOptions, BarrierResult, ConcaveObjective, ConstraintSet, LinearIneq,
    QuadIneq,
};
pub use lp::{
    check_linear_feasibility, feasibility_with_objective, solve_lp, Feasibility,
    LinearFeasibilityProblem, LpOutcome, Sense,
};
