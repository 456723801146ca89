//! Quadratically regularized optimal transport between two uniform empirical
//! measures with `N` atoms each.
//!
//! Couplings `gamma` (marginals `1/N`) are handled as doubly stochastic
//! matrices `pi = N gamma`, vectorized row-major, with the scaled cost
//! `c = C / N`. Then `<c, pi> = <C, gamma>`, and the regularized problem in
//! `gamma` with weight `N^2 / eta` is the one in `pi` with weight `1 / eta`.

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, slope_report, AnalysisReport};
use crate::error::{Error, Result};
use crate::homotopy::{trace_path, SolutionPath};
use crate::io::{fmt_sig, OtFile};
use crate::linalg::{self, dot};
use crate::oracle::min_norm_over_m;
use crate::polytope::{Polytope, PolytopeSpec};
use crate::projection::{project, QlpInstance};
use crate::tol::Tolerances;

/// Largest `N` for which the `N!` permutation matrices are listed.
pub const PERMUTATION_LIMIT: usize = 8;
/// Largest `N` the experiment traces by default (`N^2` variables).
pub const HOMOTOPY_LIMIT: usize = 32;

/// Source and target point lists.
pub type PointSets = (Vec<Vec<f64>>, Vec<Vec<f64>>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OtInstance {
    pub n: usize,
    /// `C_ij = c(X_i, Y_j)`
    pub cost: Vec<Vec<f64>>,
    /// Source and target coordinates when the cost was derived from points.
    pub points: Option<PointSets>,
    /// `c = C / N`, row-major.
    pub scaled_cost: Vec<f64>,
}

impl OtInstance {
    pub fn from_cost(cost: Vec<Vec<f64>>) -> Result<Self> {
        let n = cost.len();
        if n == 0 || cost.iter().any(|row| row.len() != n) {
            return Err(Error::NonSquareCost);
        }
        if cost.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NaNInCost);
        }
        let scaled_cost = cost.iter().flatten().map(|v| v / n as f64).collect();
        Ok(Self {
            n,
            cost,
            points: None,
            scaled_cost,
        })
    }

    /// Cost from point lists; `kind` is `"sqeuclidean"` (`|x - y|^2`).
    pub fn from_points(x: Vec<Vec<f64>>, y: Vec<Vec<f64>>, kind: &str) -> Result<Self> {
        if kind != "sqeuclidean" {
            return Err(Error::InvalidInput(format!("unknown cost kind {kind:?}")));
        }
        if x.len() != y.len() || x.iter().chain(&y).any(|p| p.len() != x[0].len()) {
            return Err(Error::NonSquareCost);
        }
        let cost = x
            .iter()
            .map(|xi| y.iter().map(|yj| linalg::dist(xi, yj).powi(2)).collect())
            .collect();
        let mut inst = Self::from_cost(cost)?;
        inst.points = Some((x, y));
        Ok(inst)
    }

    pub fn from_file(file: OtFile) -> Result<Self> {
        match file {
            OtFile::Cost { cost } => Self::from_cost(cost),
            OtFile::Points { x, y, kind } => Self::from_points(
                x.iter().map(|p| p.coords()).collect(),
                y.iter().map(|p| p.coords()).collect(),
                &kind,
            ),
        }
    }

    /// `C = -Id`
    pub fn neg_identity(n: usize) -> Self {
        let cost = (0..n)
            .map(|i| (0..n).map(|j| if i == j { -1.0 } else { 0.0 }).collect())
            .collect();
        Self::from_cost(cost).expect("valid cost")
    }

    /// `X_i = Y_i = i / N` with squared distance: `C_ij = |i - j|^2 / N^2`.
    pub fn quadratic_1d(n: usize) -> Self {
        let pts: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
        Self::from_points(pts.clone(), pts, "sqeuclidean").expect("valid points")
    }

    /// The same instance with `m` added to every cost entry.
    pub fn shifted(&self, m: f64) -> Self {
        let cost = self
            .cost
            .iter()
            .map(|row| row.iter().map(|v| v + m).collect())
            .collect();
        Self::from_cost(cost).expect("finite shift")
    }

    pub fn mean_cost(&self) -> f64 {
        self.cost.iter().flatten().sum::<f64>() / (self.n * self.n) as f64
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.cost[i][j] == self.cost[j][i]))
    }

    /// The Birkhoff polytope in `N^2` coordinates, anchored at the uniform
    /// matrix; vertices are listed for `N <= PERMUTATION_LIMIT`.
    pub fn polytope(&self, tol: Tolerances) -> Polytope {
        birkhoff_polytope(self.n, 1.0, tol)
    }

    pub fn qlp(&self) -> QlpInstance {
        self.qlp_with(Tolerances::default())
    }

    pub fn qlp_with(&self, tol: Tolerances) -> QlpInstance {
        QlpInstance::new(self.polytope(tol), self.scaled_cost.clone())
            .expect("cost has N^2 entries")
    }
}

/// Transport polytope with all marginals equal to `mass`, built without
/// enumeration (its vertices are `mass` times the permutation matrices).
pub fn birkhoff_polytope(n: usize, mass: f64, tol: Tolerances) -> Polytope {
    let anchor = vec![mass / n as f64; n * n];
    let vertices = (n <= PERMUTATION_LIMIT).then(|| {
        permutation_matrices(n)
            .into_iter()
            .map(|v| linalg::scale(&v, mass))
            .collect()
    });
    Polytope::from_trusted(PolytopeSpec::transport(n, mass), anchor, vertices, tol)
}

/// All `n!` permutation matrices, row-major, in lexicographic order of the permutation.
pub fn permutation_matrices(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .permutations(n)
        .map(|sigma| {
            let mut m = vec![0.0; n * n];
            for (i, &j) in sigma.iter().enumerate() {
                m[i * n + j] = 1.0;
            }
            m
        })
        .collect()
}

/// A coupling seen both ways.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingView {
    pub pi: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    /// `(i, j)` with `pi_ij > 1e-9 N`.
    pub support: Vec<(usize, usize)>,
}

impl CouplingView {
    /// From a vectorized doubly stochastic `pi`.
    pub fn from_pi(x: &[f64], n: usize) -> Self {
        let pi: Vec<Vec<f64>> = x.chunks(n).map(|r| r.to_vec()).collect();
        let gamma = pi
            .iter()
            .map(|r| r.iter().map(|v| v / n as f64).collect())
            .collect();
        let cut = 1e-9 * n as f64;
        let support = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| pi[i][j] > cut)
            .collect();
        Self { pi, gamma, support }
    }

    /// Largest deviation of a row or column sum of `gamma` from `1/N`.
    pub fn marginal_error(&self) -> f64 {
        let n = self.gamma.len();
        let target = 1.0 / n as f64;
        let rows = self
            .gamma
            .iter()
            .map(|r| (r.iter().sum::<f64>() - target).abs());
        let cols = (0..n).map(|j| (self.gamma.iter().map(|r| r[j]).sum::<f64>() - target).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }
}

/// [`analysis::analyze`] for a Birkhoff instance. `x^0` is the uniform matrix,
/// orthogonal to every face direction, so the small-`eta` bounds use the half
/// constant even when the permutations are not listed.
pub fn analyze(inst: &QlpInstance, path: &SolutionPath, grid: usize) -> Result<AnalysisReport> {
    let mut report = analysis::analyze(inst, path, grid)?;
    if path.eta_star > 0.0 {
        let etas = [path.eta_star / 10.0, path.eta_star / 100.0];
        report.small_eta_bounds = analysis::small_eta_bounds(path, &inst.c, &etas, true);
    }
    Ok(report)
}

/// Threshold from the permutation form
/// `eta* = 2N max_{pi not optimal} <pi*, pi* - pi> / <C, pi - pi*>`.
///
/// Above [`PERMUTATION_LIMIT`] only symmetric separated costs are handled
/// (through [`separated_bounds`]).
pub fn ot_eta_star(inst: &OtInstance) -> Result<f64> {
    let n = inst.n;
    if n == 1 {
        return Ok(0.0);
    }
    if n > PERMUTATION_LIMIT {
        if let Ok(SeparatedBounds { exact: Some(v), .. }) = separated_bounds(inst, None) {
            return Ok(v);
        }
        return Err(Error::BudgetExceeded {
            candidates: (1..=n as u128).product(),
            cap: (1..=PERMUTATION_LIMIT as u64).product(),
        });
    }
    let cost: Vec<f64> = inst.cost.iter().flatten().copied().collect();
    let perms = permutation_matrices(n);
    let values: Vec<f64> = perms.iter().map(|p| dot(&cost, p)).collect();
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let scale = 1.0 + cost.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cut = 1e-9 * scale;
    let face: Vec<Vec<f64>> = perms
        .iter()
        .zip(&values)
        .filter(|(_, &v)| v <= best + cut)
        .map(|(p, _)| p.clone())
        .collect();
    let pi_star = min_norm_over_m(&face)?;
    let base = dot(&cost, &pi_star);
    let mut eta: f64 = 0.0;
    for p in &perms {
        let den = dot(&cost, p) - base;
        if den > cut {
            let num = dot(&pi_star, &pi_star) - dot(&pi_star, p);
            eta = eta.max(2.0 * n as f64 * num / den);
        }
    }
    Ok(eta)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparatedBounds {
    /// `4N / kappa'`
    pub lower: f64,
    /// `2N / kappa`
    pub upper: f64,
    /// `2N / kappa` when the relabeled cost is symmetric.
    pub exact: Option<f64>,
    pub kappa: f64,
    pub kappa_prime: f64,
}

/// Bounds for costs vanishing on a matching `sigma` (identity if `None`) and
/// positive off it. Columns are relabeled `C'_ij = C_{i, sigma(j)}` so the
/// matching becomes the diagonal.
pub fn separated_bounds(inst: &OtInstance, sigma: Option<&[usize]>) -> Result<SeparatedBounds> {
    let n = inst.n;
    let id: Vec<usize> = (0..n).collect();
    let sigma = sigma.unwrap_or(&id);
    if sigma.len() != n || !sigma.iter().copied().sorted().eq(0..n) {
        return Err(Error::InvalidInput("sigma is not a permutation".into()));
    }
    if n < 2 {
        return Err(Error::AssumptionViolated(
            "needs at least two points".into(),
        ));
    }
    let c = |i: usize, j: usize| inst.cost[i][sigma[j]];
    if let Some(i) = (0..n).find(|&i| c(i, i) != 0.0) {
        return Err(Error::AssumptionViolated(format!(
            "cost on the matching is nonzero at row {i}"
        )));
    }
    let mut kappa = f64::INFINITY;
    let mut kappa_prime = f64::INFINITY;
    let mut symmetric = true;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                kappa = kappa.min(c(i, j));
                kappa_prime = kappa_prime.min(c(i, j) + c(j, i));
                symmetric &= c(i, j) == c(j, i);
            }
        }
    }
    if kappa <= 0.0 {
        return Err(Error::AssumptionViolated(format!(
            "minimal off-matching cost {kappa} is not positive"
        )));
    }
    let upper = 2.0 * n as f64 / kappa;
    Ok(SeparatedBounds {
        lower: 4.0 * n as f64 / kappa_prime,
        upper,
        exact: symmetric.then_some(upper),
        kappa,
        kappa_prime,
    })
}

/// Half the variance of the cost entries under the uniform product measure,
/// `(mean(C^2) - mean(C)^2) / 2`.
pub fn ot_slope_bound(inst: &OtInstance) -> f64 {
    let m = inst.mean_cost();
    let var = inst
        .cost
        .iter()
        .flatten()
        .map(|v| (v - m).powi(2))
        .sum::<f64>()
        / (inst.n * inst.n) as f64;
    0.5 * var
}

/// Largest entrywise gap between `pi^eta` and `N gamma^eta`, where
/// `gamma^eta` minimizes `<C, gamma> + (N^2 / eta) ||gamma||^2` over
/// couplings with marginals `1/N`.
pub fn gamma_scaling_gap(inst: &OtInstance, eta: f64) -> Result<f64> {
    let n = inst.n as f64;
    let pi = project(
        &inst.polytope(Tolerances::default()),
        &linalg::scale(&inst.scaled_cost, -eta / 2.0),
    )?
    .x;
    let couplings = birkhoff_polytope(inst.n, 1.0 / n, Tolerances::default());
    let cost: Vec<f64> = inst.cost.iter().flatten().copied().collect();
    let gamma = project(&couplings, &linalg::scale(&cost, -eta / (2.0 * n * n)))?.x;
    Ok(linalg::dist_inf(&pi, &linalg::scale(&gamma, n)))
}

/// `L_N` for the 1-D quadratic cost: the slope of `E` on the last segment.
pub fn quadratic_1d_slope(n: usize) -> Result<(f64, SolutionPath)> {
    let path = trace_path(&OtInstance::quadratic_1d(n).qlp())?;
    let slope = slope_report(&path, &OtInstance::quadratic_1d(n).scaled_cost)?.slope;
    Ok((slope, path))
}

/// One experiment row; `l_n` and `ratio` are `None` when `N` was skipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Figure3Row {
    pub n: usize,
    pub l_n: Option<f64>,
    /// `(N - 1) / N^6`
    pub bound: f64,
    pub ratio: Option<f64>,
}

/// `L_N` against `(N - 1) / N^6` for each `N`, in the given order. Values of
/// `N` above `max_n` are skipped.
pub fn figure3_experiment(n_values: &[usize], max_n: usize) -> Vec<Figure3Row> {
    n_values
        .par_iter()
        .map(|&n| {
            let bound = (n as f64 - 1.0) / (n as f64).powi(6);
            let l_n = (n >= 2 && n <= max_n)
                .then(|| quadratic_1d_slope(n).ok().map(|r| r.0))
                .flatten();
            Figure3Row {
                n,
                l_n,
                bound,
                ratio: l_n.map(|l| bound / l),
            }
        })
        .collect()
}

/// `N,L_N,bound,ratio` rows; skipped entries read `skipped`.
pub fn figure3_csv(rows: &[Figure3Row]) -> String {
    let mut out = String::from("N,L_N,bound,ratio\n");
    let opt = |v: Option<f64>| v.map_or_else(|| "skipped".to_string(), |v| fmt_sig(v, 12));
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.n,
            opt(r.l_n),
            fmt_sig(r.bound, 12),
            opt(r.ratio)
        ));
    }
    out
}
