//! Accelerated gradient-like flows and inertial direction-correction methods
//! for smooth convex multiobjective optimization.
//!
//! The crate is organized bottom-up:
//!
//! * [`qp`]: simplex-constrained quadratic subproblems (min-norm hull point,
//!   projection onto a scaled gradient hull);
//! * [`problems`]: the benchmark suite and the KKT residual;
//! * [`solvers`]: MFISC, AccG and steepest descent, with constant step or
//!   backtracking;
//! * [`flow`]: explicit integration of the damped inertial flows;
//! * [`merit`]: the merit function `φ(x) = sup_z min_i f_i(x) − f_i(z)`;
//! * [`harness`]: batch experiments with CSV/JSON output.

pub mod flow;
pub mod harness;
pub mod linalg;
pub mod merit;
pub mod problems;
pub mod qp;
pub mod rng;
pub mod solvers;

pub use problems::{kkt_residual, ProblemInstance};
pub use qp::{GradientMatrix, HullSolution, SimplexWeights};
pub use solvers::{IterationTrace, SolverConfig, Variant};

