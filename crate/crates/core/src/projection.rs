//! Euclidean projection onto a polytope by a primal active-set method, and
//! the regularized LP solved through it.
//!
//! Minimizing `<c, x> + ||x||^2 / eta` over `P` is the same as projecting
//! `-eta c / 2` onto `P`, since
//! `<c, x> + ||x||^2 / eta = ||x + eta c / 2||^2 / eta - eta ||c||^2 / 4`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm, norm_inf};
use crate::polytope::Polytope;

/// Cost vector plus polytope.
#[derive(Clone, Debug)]
pub struct QlpInstance {
    pub polytope: Polytope,
    pub c: Vec<f64>,
}

impl QlpInstance {
    pub fn new(polytope: Polytope, c: Vec<f64>) -> Result<Self> {
        if c.len() != polytope.dim() {
            return Err(Error::ShapeMismatch(format!(
                "cost has {} entries, polytope dimension is {}",
                c.len(),
                polytope.dim()
            )));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite cost entry".into()));
        }
        Ok(Self { polytope, c })
    }

    /// `<c, x> + ||x||^2 / eta`
    pub fn objective(&self, x: &[f64], eta: f64) -> f64 {
        dot(&self.c, x) + linalg::norm_sq(x) / eta
    }

    /// The point projected onto `P` at parameter `eta`: `-eta c / 2`.
    pub fn target(&self, eta: f64) -> Vec<f64> {
        linalg::scale(&self.c, -0.5 * eta)
    }
}

/// Output of [`project`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub x: Vec<f64>,
    /// Inequality rows tight at `x`, ascending.
    pub active_set: Vec<usize>,
    /// Multiplier per entry of `active_set` (zero for tight rows outside the
    /// final working set).
    #[serde(skip)]
    pub multipliers: Vec<f64>,
    /// Largest variational-inequality violation `<z - x, v - x>` over the
    /// polytope's vertices when they are known; otherwise the KKT
    /// stationarity residual.
    pub residual: f64,
    /// Linearly independent rows the solver ended with.
    #[serde(skip)]
    pub working_set: Vec<usize>,
    #[serde(skip)]
    pub iterations: usize,
}

/// Outcome of [`certify`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertReport {
    /// `max_v <z - x, v - x>` over the supplied vertices.
    pub max_inner: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Linearly independent set of constraints held at equality.
///
/// Equality rows are always present. Inequality rows touching one coordinate
/// fix that coordinate; the remaining ("general") rows are restricted to the
/// free coordinates and handled through their Gram matrix.
#[derive(Clone, Debug)]
pub(crate) struct WorkingSet<'p> {
    poly: &'p Polytope,
    member: Vec<bool>,
    general_ineq: Vec<usize>,
    bound_ineq: Vec<usize>,
    fixed: Vec<Option<f64>>,
    factor: Option<Factor>,
}

#[derive(Clone, Debug)]
struct Factor {
    /// General rows (equalities then inequalities) with fixed coordinates zeroed.
    rows: Vec<Vec<f64>>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

/// `z` projected onto the affine hull of the working set, with one multiplier
/// per working row.
#[derive(Clone, Debug)]
pub(crate) struct AffineSolution {
    pub x: Vec<f64>,
    /// Indexed by inequality row; zero outside the working set.
    pub ineq_mult: Vec<f64>,
    pub eq_mult: Vec<f64>,
}

impl<'p> WorkingSet<'p> {
    pub fn new(poly: &'p Polytope) -> Self {
        Self {
            poly,
            member: vec![false; poly.n_ineq()],
            general_ineq: Vec::new(),
            bound_ineq: Vec::new(),
            fixed: vec![None; poly.dim()],
            factor: None,
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.member[i]
    }

    /// Inequality rows in the working set, ascending.
    pub fn rows(&self) -> Vec<usize> {
        let mut rows: Vec<usize> = self
            .general_ineq
            .iter()
            .chain(&self.bound_ineq)
            .copied()
            .collect();
        rows.sort_unstable();
        rows
    }

    fn general_rows(&self) -> impl Iterator<Item = (&'p [f64], f64)> + '_ {
        let p = self.poly;
        (0..p.n_eq()).map(move |i| (p.eq_row(i), p.b()[i])).chain(
            self.general_ineq
                .iter()
                .map(move |&i| (p.ineq_row(i), p.h()[i])),
        )
    }

    fn factor(&mut self) -> Result<&Factor> {
        if self.factor.is_none() {
            let fixed = &self.fixed;
            let rows: Vec<Vec<f64>> = self
                .general_rows()
                .map(|(g, _)| {
                    g.iter()
                        .zip(fixed)
                        .map(|(&v, f)| if f.is_some() { 0.0 } else { v })
                        .collect()
                })
                .collect();
            let k = rows.len();
            let gram = DMatrix::from_fn(k, k, |r, s| dot(&rows[r], &rows[s]));
            let chol = match gram.clone().cholesky() {
                Some(c) => c,
                None => {
                    let reg = gram + DMatrix::identity(k, k) * 1e-12;
                    reg.cholesky().ok_or_else(|| {
                        Error::NumericalBreakdown("singular working-set Gram matrix".into())
                    })?
                }
            };
            self.factor = Some(Factor { rows, chol });
        }
        Ok(self.factor.as_ref().expect("just built"))
    }

    /// Component of `g` (free coordinates only) orthogonal to the general rows.
    fn residual_norm(&mut self, g: &[f64]) -> Result<f64> {
        let free: Vec<f64> = g
            .iter()
            .zip(&self.fixed)
            .map(|(&v, f)| if f.is_some() { 0.0 } else { v })
            .collect();
        let f = self.factor()?;
        if f.rows.is_empty() {
            return Ok(norm(&free));
        }
        let rhs = DVector::from_iterator(f.rows.len(), f.rows.iter().map(|r| dot(r, &free)));
        let coef = f.chol.solve(&rhs);
        let mut r = free;
        for (k, row) in f.rows.iter().enumerate() {
            r.iter_mut().zip(row).for_each(|(ri, a)| *ri -= coef[k] * a);
        }
        Ok(norm(&r))
    }

    /// Whether inequality row `i` is linearly independent of the working set.
    pub fn independent(&mut self, i: usize) -> Result<bool> {
        let g = self.poly.ineq_row(i);
        let scale = norm(g);
        if scale == 0.0 {
            return Ok(false);
        }
        let tol = self.poly.tol().independence;
        Ok(self.residual_norm(g)? > tol * scale)
    }

    /// Adds row `i` without an independence check.
    pub fn add(&mut self, i: usize) {
        debug_assert!(!self.member[i]);
        self.member[i] = true;
        match self.poly.bound_row(i) {
            Some((j, a)) => {
                self.fixed[j] = Some(self.poly.h()[i] / a);
                self.bound_ineq.push(i);
            }
            None => self.general_ineq.push(i),
        }
        self.factor = None;
    }

    pub fn remove(&mut self, i: usize) {
        debug_assert!(self.member[i]);
        self.member[i] = false;
        match self.poly.bound_row(i) {
            Some((j, _)) => {
                self.fixed[j] = None;
                self.bound_ineq.retain(|&r| r != i);
            }
            None => self.general_ineq.retain(|&r| r != i),
        }
        self.factor = None;
    }

    /// Adds `i` if it is independent of the current rows; returns whether it was added.
    pub fn try_add(&mut self, i: usize) -> Result<bool> {
        if self.member[i] || !self.independent(i)? {
            return Ok(false);
        }
        self.add(i);
        Ok(true)
    }

    /// Projects `z` onto `{x : working rows hold with equality}` when
    /// `affine`, or onto the parallel linear subspace otherwise.
    ///
    /// Multipliers satisfy `z - x = sum_eq mu_i a_i + sum_W lambda_i g_i`.
    pub fn solve(&mut self, z: &[f64], affine: bool) -> Result<AffineSolution> {
        let poly = self.poly;
        let n = poly.dim();
        let mut x = vec![0.0; n];
        for j in 0..n {
            x[j] = match self.fixed[j] {
                Some(v) => {
                    if affine {
                        v
                    } else {
                        0.0
                    }
                }
                None => z[j],
            };
        }
        let general: Vec<(&[f64], f64)> = self.general_rows().collect();
        let fixed = self.fixed.clone();
        let f = self.factor()?;
        let k = f.rows.len();
        let mut nu = DVector::zeros(k);
        if k > 0 {
            // rows_U x_U = rhs - rows_F x_F
            let rhs = DVector::from_iterator(
                k,
                general.iter().enumerate().map(|(r, (g, rhs))| {
                    let fixed_part: f64 = g
                        .iter()
                        .zip(&fixed)
                        .filter_map(|(a, fv)| fv.map(|v| a * if affine { v } else { 0.0 }))
                        .sum();
                    let target = if affine { *rhs } else { 0.0 };
                    dot(&f.rows[r], &x) - (target - fixed_part)
                }),
            );
            nu = f.chol.solve(&rhs);
            for (r, row) in f.rows.iter().enumerate() {
                x.iter_mut().zip(row).for_each(|(xi, a)| *xi -= nu[r] * a);
            }
        }
        let mut ineq_mult = vec![0.0; poly.n_ineq()];
        let n_eq = poly.n_eq();
        for (r, &i) in self.general_ineq.iter().enumerate() {
            ineq_mult[i] = nu[n_eq + r];
        }
        for &i in &self.bound_ineq {
            let (j, a) = poly.bound_row(i).expect("bound row");
            let along: f64 = general
                .iter()
                .enumerate()
                .map(|(r, (g, _))| nu[r] * g[j])
                .sum();
            ineq_mult[i] = (z[j] - x[j] - along) / a;
        }
        let eq_mult = (0..n_eq).map(|r| nu[r]).collect();
        Ok(AffineSolution {
            x,
            ineq_mult,
            eq_mult,
        })
    }
}

/// Greedily adds rows tight at `x` (in index order) to a fresh working set.
pub(crate) fn working_set_at<'p>(
    poly: &'p Polytope,
    x: &[f64],
    hint: &[usize],
) -> Result<WorkingSet<'p>> {
    let tol = poly.tol().feasibility;
    let mut ws = WorkingSet::new(poly);
    let tight = |i: usize| poly.slack(i, x).abs() <= tol * (1.0 + poly.h()[i].abs());
    for &i in hint {
        if i < poly.n_ineq() && tight(i) {
            ws.try_add(i)?;
        }
    }
    if hint.is_empty() {
        for i in 0..poly.n_ineq() {
            if tight(i) {
                ws.try_add(i)?;
            }
        }
    }
    Ok(ws)
}

/// Projection of `z` onto the polytope, cold-started from its anchor point.
pub fn project(poly: &Polytope, z: &[f64]) -> Result<ProjectionResult> {
    project_from(poly, z, poly.anchor(), &[])
}

/// Projection of `z` warm-started from a feasible `start` and a suggested
/// working set (rows not tight at `start` are ignored).
pub fn project_from(
    poly: &Polytope,
    z: &[f64],
    start: &[f64],
    working: &[usize],
) -> Result<ProjectionResult> {
    if z.len() != poly.dim() || start.len() != poly.dim() {
        return Err(Error::ShapeMismatch(
            "point length differs from dimension".into(),
        ));
    }
    let tol = *poly.tol();
    let mut ws = working_set_at(poly, start, working)?;
    let mut x = start.to_vec();
    let scale = 1.0 + norm_inf(z) + norm_inf(&x);
    let max_iter = 50 * (poly.n_eq() + poly.n_ineq()).max(1);
    let mut skip: Vec<usize> = Vec::new();

    for iter in 0..max_iter {
        let sol = ws.solve(z, true)?;
        let step = linalg::sub(&sol.x, &x);
        if norm_inf(&step) <= 1e-13 * scale {
            x = sol.x.clone();
            let drop = ws
                .rows()
                .into_iter()
                .find(|&i| sol.ineq_mult[i] < -tol.multiplier * scale);
            match drop {
                Some(i) => {
                    ws.remove(i);
                    skip.clear();
                    continue;
                }
                None => return Ok(finish(poly, z, x, &ws, &sol, iter + 1)),
            }
        }
        // ratio test; ties go to the smallest row index
        let step_norm = norm_inf(&step);
        let mut alpha = 1.0;
        let mut blocking: Option<usize> = None;
        for i in 0..poly.n_ineq() {
            if ws.contains(i) || skip.contains(&i) {
                continue;
            }
            let g = poly.ineq_row(i);
            let gs = dot(g, &step);
            if gs <= 1e-14 * norm_inf(g) * step_norm {
                continue;
            }
            let a = poly.slack(i, &x).max(0.0) / gs;
            if a < alpha {
                alpha = a;
                blocking = Some(i);
            }
        }
        x = linalg::axpy(&x, alpha, &step);
        if let Some(i) = blocking {
            if ws.try_add(i)? {
                skip.clear();
            } else {
                // numerically dependent row; it cannot block a step in the null space
                skip.push(i);
            }
        }
    }
    Err(Error::MaxIterationsExceeded {
        iterations: max_iter,
        best: x,
    })
}

fn finish(
    poly: &Polytope,
    z: &[f64],
    x: Vec<f64>,
    ws: &WorkingSet<'_>,
    sol: &AffineSolution,
    iterations: usize,
) -> ProjectionResult {
    let tol = poly.tol();
    let active_set: Vec<usize> = (0..poly.n_ineq())
        .filter(|&i| poly.slack(i, &x).abs() <= tol.feasibility * (1.0 + poly.h()[i].abs()))
        .collect();
    let multipliers = active_set.iter().map(|&i| sol.ineq_mult[i]).collect();
    let residual = match poly.vertices() {
        Some(vs) => vi_violation(z, &x, vs).max(0.0),
        None => kkt_residual(poly, z, &x, sol),
    };
    ProjectionResult {
        x,
        active_set,
        multipliers,
        residual,
        working_set: ws.rows(),
        iterations,
    }
}

fn kkt_residual(poly: &Polytope, z: &[f64], x: &[f64], sol: &AffineSolution) -> f64 {
    let mut r = linalg::sub(z, x);
    for (i, &mu) in sol.eq_mult.iter().enumerate() {
        r.iter_mut()
            .zip(poly.eq_row(i))
            .for_each(|(ri, a)| *ri -= mu * a);
    }
    for (i, &lam) in sol.ineq_mult.iter().enumerate() {
        if lam != 0.0 {
            r.iter_mut()
                .zip(poly.ineq_row(i))
                .for_each(|(ri, g)| *ri -= lam * g);
        }
    }
    norm_inf(&r)
}

/// `max_v <z - x, v - x>`
pub fn vi_violation(z: &[f64], x: &[f64], vertices: &[Vec<f64>]) -> f64 {
    let d = linalg::sub(z, x);
    vertices
        .iter()
        .map(|v| dot(&d, &linalg::sub(v, x)))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// The minimizer of `<c, x> + ||x||^2 / eta` over `P`.
pub fn solve_qlp(inst: &QlpInstance, eta: f64) -> Result<ProjectionResult> {
    if eta.is_nan() || eta <= 0.0 || eta.is_infinite() {
        return Err(Error::InvalidInput(format!(
            "eta must be positive, got {eta}"
        )));
    }
    project(&inst.polytope, &inst.target(eta))
}

/// Checks the variational inequality `<z - x, v - x> <= tol` at every vertex.
/// The default tolerance is `certificate * (1 + ||z||)`.
pub fn certify(
    z: &[f64],
    result: &ProjectionResult,
    vertices: &[Vec<f64>],
    tol: f64,
) -> CertReport {
    let max_inner = vi_violation(z, &result.x, vertices);
    let tolerance = tol * (1.0 + norm(z));
    CertReport {
        max_inner,
        tolerance,
        passed: max_inner <= tolerance,
    }
}
