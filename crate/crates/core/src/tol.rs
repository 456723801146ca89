//! Numerical tolerances shared by every module.
//!
//! All defaults are absolute or relative thresholds for double precision on
//! desk-scale instances. [`Tolerances::scaled`] multiplies every entry by one
//! factor; the CLI's `--tol` flag maps onto it.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Constraint satisfaction for vertices and iterates.
    pub feasibility: f64,
    /// Infinity-norm distance under which two vertices are the same point.
    pub dedup: f64,
    /// Inequality multipliers above `-multiplier` count as nonnegative
    /// (relative to `1 + ||z||_inf`).
    pub multiplier: f64,
    /// KKT stationarity residual.
    pub kkt: f64,
    /// Relative residual under which a row lies in the span of the working set.
    pub independence: f64,
    /// `||direction|| <= stationarity * (1 + ||c||)` means the path has stopped.
    pub stationarity: f64,
    /// Breakpoints closer than this (relative to `max(1, eta)`) are merged.
    pub breakpoint_merge: f64,
    /// `|<c, v - x*>| <= optimal_class * (1 + ||c||)` puts `v` in the optimal face.
    pub optimal_class: f64,
    /// Variational-inequality certificate, relative to `1 + ||z||`.
    pub certificate: f64,
    /// Orthogonality condition of the small-eta bound.
    pub orthogonality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-9,
            dedup: 1e-9,
            multiplier: 1e-10,
            kkt: 1e-8,
            independence: 1e-9,
            stationarity: 1e-12,
            breakpoint_merge: 1e-10,
            optimal_class: 1e-9,
            certificate: 1e-7,
            orthogonality: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            feasibility: self.feasibility * factor,
            dedup: self.dedup * factor,
            multiplier: self.multiplier * factor,
            kkt: self.kkt * factor,
            independence: self.independence * factor,
            stationarity: self.stationarity * factor,
            breakpoint_merge: self.breakpoint_merge * factor,
            optimal_class: self.optimal_class * factor,
            certificate: self.certificate * factor,
            orthogonality: self.orthogonality * factor,
        }
    }
}
