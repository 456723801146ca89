//! Quantities attached to a traced path: the suboptimality `E(eta)`, the
//! closed-form threshold, the auxiliary cost `c*`, slope bounds on the last
//! segment, the `2BD / Delta` bound and the small-`eta` rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homotopy::SolutionPath;
use crate::io::fmt_sig;
use crate::linalg::{self, dot, norm, norm_sq};
use crate::polytope::{geometry, suboptimality_gap, VertexSet};
use crate::projection::QlpInstance;
use crate::tol::Tolerances;

/// Default number of uniform samples of the E-curve.
pub const DEFAULT_GRID: usize = 512;

/// `E(eta) = <c, x^eta - x*>`.
pub fn suboptimality(c: &[f64], x_eta: &[f64], x_star: &[f64]) -> f64 {
    dot(c, x_eta) - dot(c, x_star)
}

/// `E(eta)` read off a traced path.
pub fn suboptimality_on_path(path: &SolutionPath, c: &[f64], eta: f64) -> f64 {
    suboptimality(c, &path.eval(eta), &path.x_star)
}

/// Right-hand side of the decay estimate
/// `E(eta) <= (||x*||^2 - ||x^eta||^2 - ||x* - x^eta||^2) / eta`.
pub fn decay_bound(x_eta: &[f64], x_star: &[f64], eta: f64) -> f64 {
    (norm_sq(x_star) - norm_sq(x_eta) - linalg::dist(x_star, x_eta).powi(2)) / eta
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaStarFormula {
    pub eta_star: f64,
    /// Vertex indices attaining the maximum.
    pub argmax: Vec<usize>,
    /// Every vertex is optimal; `eta_star` is 0 by convention.
    pub all_optimal: bool,
}

/// `eta* = 2 max_{v not in M} <x*, x* - v> / <c, v - x*>` over the vertices.
///
/// A vertex counts as optimal when `<c, v - x*> <= optimal_class (1 + ||c||)`.
/// A negative maximum means `x^0 = x*` already; the threshold is then 0 and
/// `argmax` is left empty.
pub fn eta_star_formula(
    vs: &VertexSet,
    c: &[f64],
    x_star: &[f64],
    tol: &Tolerances,
) -> EtaStarFormula {
    let cut = tol.optimal_class * (1.0 + norm(c));
    let ratios: Vec<(usize, f64)> = vs
        .vertices
        .iter()
        .enumerate()
        .filter_map(|(k, v)| {
            let den = dot(c, v) - dot(c, x_star);
            (den > cut).then(|| (k, 2.0 * (norm_sq(x_star) - dot(x_star, v)) / den))
        })
        .collect();
    let Some(best) = ratios.iter().map(|r| r.1).reduce(f64::max) else {
        return EtaStarFormula {
            eta_star: 0.0,
            argmax: Vec::new(),
            all_optimal: true,
        };
    };
    if best <= 0.0 {
        return EtaStarFormula {
            eta_star: 0.0,
            argmax: Vec::new(),
            all_optimal: false,
        };
    }
    let argmax = ratios
        .iter()
        .filter(|r| r.1 >= best - 1e-9 * (1.0 + best.abs()))
        .map(|r| r.0)
        .collect();
    EtaStarFormula {
        eta_star: best,
        argmax,
        all_optimal: false,
    }
}

/// Checks on the auxiliary cost `c* = (eta*/2) c + x*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxCostCheck {
    pub c_star: Vec<f64>,
    /// `min_v <c*, v - x*>`; should be `>= -tolerance`.
    pub min_vertex_gap: f64,
    /// `max |<c*, v - x*>|` over the argmax vertices; should be `<= tolerance`.
    pub argmax_gap: f64,
    /// `max <c*, x^eta - x*>` over samples of the last segment.
    pub last_segment_gap: f64,
    /// Largest relative error of `eta* = 2 <x*, x* - x^eta> / <c, x^eta - x*>`
    /// on the open last segment.
    pub ratio_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn aux_cost_check(
    path: &SolutionPath,
    c: &[f64],
    vs: &VertexSet,
    argmax: &[usize],
    tol: &Tolerances,
) -> AuxCostCheck {
    let x_star = &path.x_star;
    let eta_star = path.eta_star;
    let c_star = linalg::axpy(x_star, 0.5 * eta_star, c);
    let (b, _) = geometry(vs);
    let tolerance = tol.certificate * (1.0 + norm(&c_star) * (1.0 + b));
    let gap = |v: &[f64]| dot(&c_star, v) - dot(&c_star, x_star);

    let min_vertex_gap = vs
        .vertices
        .iter()
        .map(|v| gap(v))
        .fold(f64::INFINITY, f64::min);
    let argmax_gap = argmax
        .iter()
        .map(|&k| gap(&vs.vertices[k]).abs())
        .fold(0.0, f64::max);

    let mut last_segment_gap = f64::NEG_INFINITY;
    let mut ratio_error: f64 = 0.0;
    if let Some((eta0, _)) = path.last_segment_start() {
        for k in 0..8 {
            let eta = eta0 + (eta_star - eta0) * (k as f64 + 0.5) / 8.0;
            let x = path.eval(eta);
            last_segment_gap = last_segment_gap.max(gap(&x));
            let den = suboptimality(c, &x, x_star);
            if den > 0.0 {
                let r = 2.0 * (norm_sq(x_star) - dot(x_star, &x)) / den;
                ratio_error = ratio_error.max((r - eta_star).abs() / (1.0 + eta_star));
            }
        }
    } else {
        last_segment_gap = 0.0;
    }
    let passed = min_vertex_gap >= -tolerance
        && argmax_gap <= tolerance
        && last_segment_gap <= tolerance
        && ratio_error <= 1e-7;
    AuxCostCheck {
        c_star,
        min_vertex_gap,
        argmax_gap,
        last_segment_gap,
        ratio_error,
        tolerance,
        passed,
    }
}

/// Slope of `E` on the last segment and its two upper bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    /// `E(eta_{n-1}) / (eta* - eta_{n-1})`
    pub slope: f64,
    /// `<c, u>^2 / 2` with `u` the unit vector from `x^{eta_{n-1}}` to `x*`.
    pub bound_angle: f64,
    /// `||c||^2 / 2`
    pub bound_norm: f64,
    pub passed: bool,
}

pub fn slope_report(path: &SolutionPath, c: &[f64]) -> Result<SlopeReport> {
    let (eta0, x0) = path
        .last_segment_start()
        .ok_or_else(|| Error::DegeneratePath("path has no segment before eta*".into()))?;
    let step = linalg::sub(&path.x_star, x0);
    let len = norm(&step);
    if len == 0.0 {
        return Err(Error::DegeneratePath("last segment has zero length".into()));
    }
    let slope = suboptimality(c, x0, &path.x_star) / (path.eta_star - eta0);
    let bound_angle = 0.5 * (dot(c, &step) / len).powi(2);
    let bound_norm = 0.5 * norm_sq(c);
    let passed = slope <= bound_angle + 1e-9 && bound_angle <= bound_norm + 1e-9;
    Ok(SlopeReport {
        slope,
        bound_angle,
        bound_norm,
        passed,
    })
}

/// `2 B D / Delta`.
pub fn gap_bound(vs: &VertexSet, c: &[f64], tol: &Tolerances) -> Result<f64> {
    let delta = suboptimality_gap(vs, c, tol)?;
    let (b, d) = geometry(vs);
    Ok(2.0 * b * d / delta)
}

/// Whether `<x0, v - x0> = 0` for every vertex `v`, within
/// `orthogonality (1 + ||x0||)(1 + max ||v||)`.
pub fn orthogonality_holds(x0: &[f64], vertices: &[Vec<f64>], tol: &Tolerances) -> bool {
    let b = vertices.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let cut = tol.orthogonality * (1.0 + norm(x0)) * (1.0 + b);
    vertices
        .iter()
        .all(|v| (dot(x0, v) - norm_sq(x0)).abs() <= cut)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallEtaPoint {
    pub eta: f64,
    /// `||x^eta - x^0||`
    pub distance: f64,
    /// `||c|| eta`, halved when the orthogonality condition holds.
    pub bound: f64,
    pub half_constant: bool,
    pub passed: bool,
}

/// Small-`eta` rates with an explicit choice of constant.
pub fn small_eta_bounds(
    path: &SolutionPath,
    c: &[f64],
    etas: &[f64],
    half_constant: bool,
) -> Vec<SmallEtaPoint> {
    let k = if half_constant { 0.5 } else { 1.0 };
    etas.iter()
        .map(|&eta| {
            let distance = linalg::dist(&path.eval(eta), &path.x_zero);
            let bound = k * norm(c) * eta;
            SmallEtaPoint {
                eta,
                distance,
                bound,
                half_constant,
                passed: distance <= bound + 1e-9,
            }
        })
        .collect()
}

/// Small-`eta` rates; the half constant is used when the orthogonality
/// condition can be verified on the vertex list.
pub fn small_eta_report(
    inst: &QlpInstance,
    path: &SolutionPath,
    etas: &[f64],
) -> Vec<SmallEtaPoint> {
    let half = inst
        .polytope
        .vertices()
        .is_some_and(|vs| orthogonality_holds(&path.x_zero, vs, inst.polytope.tol()));
    small_eta_bounds(path, &inst.c, etas, half)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ECurvePoint {
    pub eta: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub segment_index: usize,
}

/// `grid` uniform samples of `E` on `[0, 1.1 eta*]` (on `[0, 1]` if
/// `eta* = 0`) merged with the breakpoints, in increasing `eta`.
pub fn e_curve(path: &SolutionPath, c: &[f64], grid: usize) -> Vec<ECurvePoint> {
    let top = if path.eta_star > 0.0 {
        1.1 * path.eta_star
    } else {
        1.0
    };
    let mut etas: Vec<f64> = (0..grid)
        .map(|k| top * k as f64 / (grid.max(2) - 1) as f64)
        .collect();
    etas.extend_from_slice(&path.breakpoints);
    etas.sort_by(f64::total_cmp);
    etas.dedup();
    etas.into_iter()
        .map(|eta| ECurvePoint {
            eta,
            e: suboptimality_on_path(path, c, eta),
            segment_index: path.segment_index(eta),
        })
        .collect()
}

/// `eta,E,segment_index` rows.
pub fn e_curve_csv(curve: &[ECurvePoint]) -> String {
    let mut out = String::from("eta,E,segment_index\n");
    for p in curve {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_sig(p.eta, 12),
            fmt_sig(p.e, 12),
            p.segment_index
        ));
    }
    out
}

/// Everything above for one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub eta_star_path: f64,
    /// `None` when no vertex list is available.
    pub eta_star_formula: Option<f64>,
    pub argmax_vertices: Vec<usize>,
    pub all_vertices_optimal: bool,
    pub aux_cost: Vec<f64>,
    pub aux_cost_check: Option<AuxCostCheck>,
    pub slope: Option<SlopeReport>,
    pub gap_bound: Option<f64>,
    pub small_eta_bounds: Vec<SmallEtaPoint>,
    /// Largest violation of the decay estimate over the E-curve samples.
    pub decay_violation: f64,
    /// Largest increase of `E` between consecutive E-curve samples.
    pub monotonicity_violation: f64,
    pub e_curve: Vec<ECurvePoint>,
}

impl AnalysisReport {
    /// Every invariant that applies to this instance holds.
    pub fn bounds_ok(&self) -> bool {
        let scale = 1.0 + self.eta_star_path;
        let formula_ok = self
            .eta_star_formula
            .is_none_or(|f| (f - self.eta_star_path).abs() <= 1e-7 * scale);
        let gap_ok = match (self.eta_star_formula, self.gap_bound) {
            (Some(f), Some(g)) => f <= g + 1e-9 * scale,
            _ => true,
        };
        formula_ok
            && gap_ok
            && self.aux_cost_check.as_ref().is_none_or(|a| a.passed)
            && self.slope.as_ref().is_none_or(|s| s.passed)
            && self.small_eta_bounds.iter().all(|p| p.passed)
            && self.decay_violation <= 1e-9
            && self.monotonicity_violation <= 1e-9
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

/// Analyses `path`, which must be the traced path of `inst`.
pub fn analyze(inst: &QlpInstance, path: &SolutionPath, grid: usize) -> Result<AnalysisReport> {
    let c = &inst.c;
    let tol = inst.polytope.tol();
    let vs = inst.polytope.vertex_set();

    let formula = vs
        .as_ref()
        .map(|vs| eta_star_formula(vs, c, &path.x_star, tol));
    let all_optimal = match &formula {
        Some(f) => f.all_optimal,
        None => path.eta_star == 0.0,
    };
    let aux_cost_check = match (&vs, &formula) {
        (Some(vs), Some(f)) if !f.all_optimal => Some(aux_cost_check(path, c, vs, &f.argmax, tol)),
        _ => None,
    };
    let slope = match slope_report(path, c) {
        Ok(s) => Some(s),
        Err(Error::DegeneratePath(_)) => None,
        Err(e) => return Err(e),
    };
    let gap_bound = match &vs {
        Some(vs) if !all_optimal => match gap_bound(vs, c, tol) {
            Ok(g) => Some(g),
            Err(Error::AllVerticesOptimal) => None,
            Err(e) => return Err(e),
        },
        _ => None,
    };
    let small = if path.eta_star > 0.0 {
        small_eta_report(inst, path, &[path.eta_star / 10.0, path.eta_star / 100.0])
    } else {
        Vec::new()
    };

    let e_curve = e_curve(path, c, grid);
    let mut decay_violation: f64 = 0.0;
    for p in e_curve.iter().filter(|p| p.eta > 0.0) {
        let bound = decay_bound(&path.eval(p.eta), &path.x_star, p.eta);
        decay_violation = decay_violation.max(p.e - bound);
    }
    let monotonicity_violation = e_curve
        .windows(2)
        .map(|w| w[1].e - w[0].e)
        .fold(0.0, f64::max);

    Ok(AnalysisReport {
        eta_star_path: path.eta_star,
        eta_star_formula: formula.as_ref().map(|f| f.eta_star),
        argmax_vertices: formula.map(|f| f.argmax).unwrap_or_default(),
        all_vertices_optimal: all_optimal,
        aux_cost: linalg::axpy(&path.x_star, 0.5 * path.eta_star, c),
        aux_cost_check,
        slope,
        gap_bound,
        small_eta_bounds: small,
        decay_violation,
        monotonicity_violation,
        e_curve,
    })
}
