//! Quadratically regularized linear programs over polytopes.
//!
//! For a polytope `P` and a cost `c`, the regularized problem
//!
//! ```text
//! minimize  <c, x> + ||x||^2 / eta   subject to  x in P
//! ```
//!
//! has a unique solution `x^eta`, the Euclidean projection of `-eta c / 2`
//! onto `P`. The curve `eta -> x^eta` is piecewise affine and reaches the
//! minimum-norm LP solution `x*` at a finite threshold `eta*`, after which it
//! stays put. This crate
//!
//! - validates polytopes and enumerates their vertices at desk scale ([`polytope`]),
//! - projects onto them with a primal active-set method and certifies the result ([`projection`]),
//! - traces the exact piecewise-affine path in `eta` ([`homotopy`]),
//! - evaluates the closed-form threshold, slope bounds and small-`eta` rates ([`analysis`]),
//! - specializes all of it to quadratically regularized optimal transport on
//!   the Birkhoff polytope ([`ot`]),
//! - and carries brute-force oracles that check the above independently ([`oracle`]).

pub mod analysis;
pub mod error;
pub mod homotopy;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod ot;
pub mod polytope;
pub mod projection;
pub mod tol;

pub use analysis::{AnalysisReport, ECurvePoint, EtaStarFormula, SlopeReport};
pub use error::{Error, Result};
pub use homotopy::{trace_path, SolutionPath};
pub use ot::{CouplingView, OtInstance};
pub use polytope::{Polytope, PolytopeSpec, ValidationReport, VertexSet};
pub use projection::{project, solve_qlp, ProjectionResult, QlpInstance};
pub use tol::Tolerances;
