//! Weighted-l1 (Lasso) estimation for high-dimensional generalized linear
//! models with penalty levels derived from exponential tail bounds on the
//! local stochastic Lipschitz coefficient of the empirical loss, plus a
//! Monte-Carlo harness that checks every bound numerically.
//!
//! The crate is organized around the pipeline
//!
//! * [`loss`] — GLM loss families with exact derivative oracles and the
//!   regularity constants `F_m`;
//! * [`design`] — fixed design, column scales, box domain and feasibility;
//! * [`bounds`] — the tail constants (phi, psi, A, B, C / w_j) and the
//!   high-probability thresholds built from them;
//! * [`solver`] — projected proximal-gradient for the penalized problem,
//!   the theoretical penalty level and the l2 error-bound right-hand side;
//! * [`re`] — restricted-eigenvalue certification on small designs;
//! * [`harness`] — deterministic simulation and the verification suite
//!   (tail coverage, linear-coefficient bounds, the Gaussian maximum
//!   inequality, the l2 error bound).
//!
//! Monte-Carlo trials are embarrassingly parallel; the `parallel` feature
//! (default) runs them on rayon with reports that are byte-identical to a
//! single-threaded run.

pub mod bounds;
pub mod design;
pub mod error;
pub mod harness;
pub mod io;
pub mod loss;
pub mod matrix;
pub mod parallel;
pub mod re;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use matrix::DesignMatrix;
