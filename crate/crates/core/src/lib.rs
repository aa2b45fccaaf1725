//! Exact quantization of stochastic linear programs.
//!
//! Two-stage and multistage linear programs whose cost vectors follow a
//! continuous distribution can be replaced, without changing their value, by
//! finitely many scenarios: one per cone of the normal fan of the recourse
//! polyhedron. This crate computes those scenarios exactly in rational
//! arithmetic, together with the chamber complexes on which the expected
//! cost-to-go functions are affine, and the finite scenario trees that make a
//! multistage problem an ordinary linear program.
//!
//! ```
//! use exquant::prelude::*;
//!
//! // {(x, y) : ‖y‖₁ ≤ 1, y₁ ≤ x, y₂ ≤ x} with costs uniform on the ℓ¹ ball
//! let problem = TwoStageProblem::worked_example(CostDistribution::uniform_l1_ball(2, int(1)).unwrap());
//! let v = expected_value_at(&problem, &[int(0)], None).unwrap();
//! assert_eq!(v.exact(), Some(&rat(-7, 24)));
//! ```

pub mod complexes;
pub mod dd;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod polyhedron;
pub mod quantize;
pub mod rational;
pub mod stochastic;
pub mod triangulate;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular")]
    Singular,
    #[error("linear program has no optimal solution")]
    NotOptimal,
    #[error("polyhedron is empty")]
    EmptyPolyhedron,
    #[error("not a face of the polyhedron: {0}")]
    InvalidFace(String),
    #[error("supports differ: {0}")]
    SupportMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("integrability violated: {0}")]
    Integrability(String),
    #[error("irrational volume: {0}")]
    IrrationalVolume(String),
    #[error("cost support not contained in -Cone(Aᵀ): {0}")]
    SupportViolation(String),
    #[error("grid of {0} points exceeds the budget of {1}")]
    GridBudget(u128, u128),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub mod prelude {
    pub use crate::complexes::{chamber_complex, fan_above, meet, meet_unchecked, refines, Chamber, Fan, PolyComplex};
    pub use crate::linalg::Matrix;
    pub use crate::lp::{LinearProgram, LpOutcome, Sense};
    pub use crate::polyhedron::{FaceDesc, HPolyhedron, PolyCone, Polyhedron, VPolyhedron};
    pub use crate::quantize::{cone_valuation, sample, weak_cone_valuation, ConeValuation, CostDistribution};
    pub use crate::rational::{fmt_rat, int, parse_rat, rat, Rat, Vector};
    pub use crate::stochastic::{
        build_affine_representation, build_scenario_tree, eval_or_separate, expected_value_at, mc_estimate,
        nested_value, propagate_complexes, quantize_stage, recourse_value, solve_extensive, subgradient_at,
        Evaluation, ExtendedRat, MultistageProblem, PolyhedralValueFunction, ScenarioNode, TwoStageProblem,
    };
    pub use crate::Error;
}

/// The guide, compiled so that its code blocks run as doctests.
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/polyhedra.md")]
    pub mod polyhedra {}
    #[doc = include_str!("../../../book/src/chamber_complexes.md")]
    pub mod chamber_complexes {}
    #[doc = include_str!("../../../book/src/quantization.md")]
    pub mod quantization {}
    #[doc = include_str!("../../../book/src/multistage.md")]
    pub mod multistage {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
