//! Polytopes in constraint form, their validation and desk-scale vertex
//! enumeration, and the vertex-based quantities `B`, `D` and the
//! suboptimality gap.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, dot, norm, orthogonal_complement};
use crate::tol::Tolerances;

/// Default cap on the number of candidate bases visited by enumeration.
pub const DEFAULT_BUDGET: u64 = 1_000_000;

/// `{x in R^dim : A x = b, G x <= h}`, optionally with its vertex list.
///
/// Serializes with the exact keys `dim`, `A`, `b`, `G`, `h`, `vertices`.
/// Matrices are row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolytopeSpec {
    pub dim: usize,
    #[serde(rename = "A", default)]
    pub eq_matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(rename = "G", default)]
    pub ineq_matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub h: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<Vec<f64>>>,
}

impl PolytopeSpec {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            eq_matrix: Vec::new(),
            b: Vec::new(),
            ineq_matrix: Vec::new(),
            h: Vec::new(),
            vertices: None,
        }
    }

    pub fn equality(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.eq_matrix.push(row);
        self.b.push(rhs);
        self
    }

    pub fn inequality(mut self, row: Vec<f64>, rhs: f64) -> Self {
        self.ineq_matrix.push(row);
        self.h.push(rhs);
        self
    }

    /// `[0, 1]` in one dimension.
    pub fn unit_interval() -> Self {
        Self::hypercube(1)
    }

    /// `[0, 1]^dim`, lower bounds first.
    pub fn hypercube(dim: usize) -> Self {
        let mut spec = Self::new(dim);
        for j in 0..dim {
            spec = spec.inequality(unit(dim, j, -1.0), 0.0);
        }
        for j in 0..dim {
            spec = spec.inequality(unit(dim, j, 1.0), 1.0);
        }
        spec
    }

    /// The probability simplex `{x >= 0, sum x = 1}`.
    pub fn simplex(dim: usize) -> Self {
        let mut spec = Self::new(dim).equality(vec![1.0; dim], 1.0);
        for j in 0..dim {
            spec = spec.inequality(unit(dim, j, -1.0), 0.0);
        }
        spec
    }

    /// Doubly stochastic `n x n` matrices, vectorized row-major
    /// (`x[i * n + j] = pi_ij`).
    ///
    /// Row sums come first, then the column sums of columns `0..n-1`; the
    /// last column sum is implied by the others and is left out so the
    /// equality block has full rank `2n - 1`. Inequality row `i * n + j` is
    /// `-pi_ij <= 0`.
    pub fn birkhoff(n: usize) -> Self {
        Self::transport(n, 1.0)
    }

    /// Like [`PolytopeSpec::birkhoff`] with every marginal equal to `mass`.
    pub fn transport(n: usize, mass: f64) -> Self {
        let d = n * n;
        let mut spec = Self::new(d);
        for i in 0..n {
            let mut row = vec![0.0; d];
            row[i * n..(i + 1) * n].fill(1.0);
            spec = spec.equality(row, mass);
        }
        for j in 0..n.saturating_sub(1) {
            let mut row = vec![0.0; d];
            for i in 0..n {
                row[i * n + j] = 1.0;
            }
            spec = spec.equality(row, mass);
        }
        for k in 0..d {
            spec = spec.inequality(unit(d, k, -1.0), 0.0);
        }
        spec
    }

    pub fn check_shapes(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::ShapeMismatch("dim must be positive".into()));
        }
        if self.eq_matrix.len() != self.b.len() {
            return Err(Error::ShapeMismatch(format!(
                "A has {} rows but b has {} entries",
                self.eq_matrix.len(),
                self.b.len()
            )));
        }
        if self.ineq_matrix.len() != self.h.len() {
            return Err(Error::ShapeMismatch(format!(
                "G has {} rows but h has {} entries",
                self.ineq_matrix.len(),
                self.h.len()
            )));
        }
        for (name, m) in [("A", &self.eq_matrix), ("G", &self.ineq_matrix)] {
            if let Some((i, row)) = m.iter().enumerate().find(|(_, r)| r.len() != self.dim) {
                return Err(Error::ShapeMismatch(format!(
                    "{name} row {i} has {} columns, expected {}",
                    row.len(),
                    self.dim
                )));
            }
        }
        if let Some(vs) = &self.vertices {
            if let Some(i) = vs.iter().position(|v| v.len() != self.dim) {
                return Err(Error::ShapeMismatch(format!("vertex {i} has wrong length")));
            }
        }
        let finite = self
            .eq_matrix
            .iter()
            .chain(&self.ineq_matrix)
            .flatten()
            .chain(&self.b)
            .chain(&self.h)
            .chain(self.vertices.iter().flatten().flatten())
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidInput("non-finite number in polytope".into()));
        }
        Ok(())
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.eq_matrix
            .iter()
            .zip(&self.b)
            .all(|(a, &b)| (dot(a, x) - b).abs() <= tol * (1.0 + b.abs()))
            && self
                .ineq_matrix
                .iter()
                .zip(&self.h)
                .all(|(g, &h)| dot(g, x) - h <= tol * (1.0 + h.abs()))
    }
}

fn unit(dim: usize, j: usize, value: f64) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[j] = value;
    e
}

/// Vertices of a polytope together with the optimal-face membership for one
/// cost vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexSet {
    pub vertices: Vec<Vec<f64>>,
    /// `optimal_mask[i]` iff `<c, v_i>` attains the minimum over vertices.
    pub optimal_mask: Vec<bool>,
}

impl VertexSet {
    /// Vertex set for the zero cost: every vertex is optimal.
    pub fn new(vertices: Vec<Vec<f64>>) -> Self {
        let optimal_mask = vec![true; vertices.len()];
        Self {
            vertices,
            optimal_mask,
        }
    }

    /// Classifies vertices against `c`: optimal when
    /// `<c, v> - min <c, .> <= tol * (1 + ||c||)`.
    pub fn for_cost(vertices: Vec<Vec<f64>>, c: &[f64], tol: f64) -> Self {
        let values: Vec<f64> = vertices.iter().map(|v| dot(c, v)).collect();
        let best = values.iter().copied().fold(f64::INFINITY, f64::min);
        let thresh = tol * (1.0 + norm(c));
        let optimal_mask = values.iter().map(|&v| v - best <= thresh).collect();
        Self {
            vertices,
            optimal_mask,
        }
    }

    pub fn classify(&self, c: &[f64], tol: f64) -> Self {
        Self::for_cost(self.vertices.clone(), c, tol)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn optimal(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.vertices
            .iter()
            .zip(&self.optimal_mask)
            .filter_map(|(v, &m)| m.then_some(v))
    }

    pub fn non_optimal(&self) -> impl Iterator<Item = (usize, &Vec<f64>)> {
        self.vertices
            .iter()
            .enumerate()
            .zip(&self.optimal_mask)
            .filter_map(|(iv, &m)| (!m).then_some(iv))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub canonical: PolytopeSpec,
    pub nonempty: bool,
    pub bounded: bool,
    /// Equality rows removed because they were implied by the others.
    pub dropped_equalities: Vec<usize>,
    pub vertex_count: usize,
    /// `Some(true)` when supplied vertices match the enumerated ones.
    pub vertices_consistent: Option<bool>,
}

/// The equality block in reduced form: `A x = b` iff `x = particular + basis * y`.
#[derive(Clone, Debug)]
struct Reduction {
    kept: Vec<usize>,
    dropped: Vec<usize>,
    particular: Vec<f64>,
    /// Orthonormal columns spanning `null(A)`, stored as rows.
    basis: Vec<Vec<f64>>,
}

impl Reduction {
    fn new(spec: &PolytopeSpec, tol: &Tolerances) -> Result<Self> {
        let mut kept = Vec::new();
        let mut dropped = Vec::new();
        let mut span: Vec<Vec<f64>> = Vec::new();
        for (i, row) in spec.eq_matrix.iter().enumerate() {
            let before = span.len();
            let comp_rows = {
                let mut rows = span.clone();
                rows.push(row.clone());
                rows
            };
            // rank test by orthogonalizing against the kept rows
            let q = gram_schmidt(&comp_rows, tol.independence);
            if q.len() > before {
                span.push(row.clone());
                kept.push(i);
            } else {
                dropped.push(i);
            }
        }
        let particular = if kept.is_empty() {
            vec![0.0; spec.dim]
        } else {
            let m = kept.len();
            let gram = DMatrix::from_fn(m, m, |r, s| {
                dot(&spec.eq_matrix[kept[r]], &spec.eq_matrix[kept[s]])
            });
            let rhs = DVector::from_iterator(m, kept.iter().map(|&i| spec.b[i]));
            let coef = gram
                .cholesky()
                .ok_or_else(|| Error::NumericalBreakdown("equality Gram matrix".into()))?
                .solve(&rhs);
            let mut x = vec![0.0; spec.dim];
            for (r, &i) in kept.iter().enumerate() {
                for (xj, aj) in x.iter_mut().zip(&spec.eq_matrix[i]) {
                    *xj += coef[r] * aj;
                }
            }
            x
        };
        for &i in &dropped {
            let lhs = dot(&spec.eq_matrix[i], &particular);
            if (lhs - spec.b[i]).abs() > tol.feasibility * (1.0 + spec.b[i].abs()) {
                return Err(Error::EmptyFeasibleSet);
            }
        }
        let basis = orthogonal_complement(&span, spec.dim, tol.independence);
        Ok(Self {
            kept,
            dropped,
            particular,
            basis,
        })
    }

    fn lift(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self.particular.clone();
        for (yk, q) in y.iter().zip(&self.basis) {
            for (xj, qj) in x.iter_mut().zip(q) {
                *xj += yk * qj;
            }
        }
        x
    }

    /// Inequalities in `y` coordinates: `rows[i] . y <= rhs[i]`.
    fn reduce(&self, spec: &PolytopeSpec) -> (Vec<Vec<f64>>, Vec<f64>) {
        let rows = spec
            .ineq_matrix
            .iter()
            .map(|g| self.basis.iter().map(|q| dot(g, q)).collect())
            .collect();
        let rhs = spec
            .ineq_matrix
            .iter()
            .zip(&spec.h)
            .map(|(g, h)| h - dot(g, &self.particular))
            .collect();
        (rows, rhs)
    }
}

fn gram_schmidt(rows: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in rows {
        let scale = norm(v);
        if scale == 0.0 {
            continue;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let a = dot(&r, q);
                r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= a * qi);
            }
        }
        let n = norm(&r);
        if n > tol * scale {
            basis.push(r.into_iter().map(|x| x / n).collect());
        }
    }
    basis
}

fn rank(rows: &[Vec<f64>], tol: f64) -> usize {
    gram_schmidt(rows, tol).len()
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Vertices of `{y : rows y <= rhs}` in `dim` coordinates, assuming the rows
/// span `R^dim`. Returns points in `y` coordinates, deduplicated, unsorted.
fn enumerate_reduced(
    rows: &[Vec<f64>],
    rhs: &[f64],
    dim: usize,
    budget: u64,
    tol: &Tolerances,
) -> Result<Vec<Vec<f64>>> {
    if dim == 0 {
        let origin_ok = rhs.iter().all(|&h| -h <= tol.feasibility * (1.0 + h.abs()));
        return Ok(if origin_ok {
            vec![Vec::new()]
        } else {
            Vec::new()
        });
    }
    let candidates = binomial(rows.len(), dim);
    if candidates > budget as u128 {
        return Err(Error::BudgetExceeded {
            candidates,
            cap: budget,
        });
    }
    let feasible = |y: &[f64]| {
        rows.iter()
            .zip(rhs)
            .all(|(g, &h)| dot(g, y) - h <= tol.feasibility * (1.0 + h.abs()))
    };
    let mut found: Vec<Vec<f64>> = Vec::new();
    for subset in (0..rows.len()).combinations(dim) {
        let m = DMatrix::from_fn(dim, dim, |r, s| rows[subset[r]][s]);
        let lu = m.full_piv_lu();
        let u = lu.u();
        let (lo, hi) = (0..dim).fold((f64::INFINITY, 0.0f64), |(lo, hi), k| {
            let p = u[(k, k)].abs();
            (lo.min(p), hi.max(p))
        });
        if hi == 0.0 || lo <= 1e-10 * hi {
            continue;
        }
        let b = DVector::from_iterator(dim, subset.iter().map(|&i| rhs[i]));
        let Some(y) = lu.solve(&b) else { continue };
        let y: Vec<f64> = y.iter().copied().collect();
        if !feasible(&y) {
            continue;
        }
        if !found.iter().any(|v| linalg::dist_inf(v, &y) <= tol.dedup) {
            found.push(y);
        }
    }
    Ok(found)
}

/// True when `{y : rows y <= 0}` contains a nonzero ray. Assumes the rows
/// span `R^dim` (pointed cone), so any ray is witnessed by an extreme ray.
fn has_recession_ray(rows: &[Vec<f64>], dim: usize, budget: u64, tol: &Tolerances) -> Result<bool> {
    if dim == 0 {
        return Ok(false);
    }
    let candidates = binomial(rows.len(), dim - 1);
    if candidates > budget as u128 {
        return Err(Error::BudgetExceeded {
            candidates,
            cap: budget,
        });
    }
    let cone_ok = |r: &[f64]| {
        rows.iter()
            .all(|g| dot(g, r) <= tol.feasibility * norm(g).max(1.0))
    };
    for subset in (0..rows.len()).combinations(dim - 1) {
        let sub: Vec<Vec<f64>> = subset.iter().map(|&i| rows[i].clone()).collect();
        let comp = orthogonal_complement(&sub, dim, tol.independence);
        if comp.len() != 1 {
            continue;
        }
        let r = &comp[0];
        if cone_ok(r) || cone_ok(&linalg::scale(r, -1.0)) {
            return Ok(true);
        }
    }
    Ok(false)
}

fn sort_lex(vs: &mut [Vec<f64>]) {
    vs.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .find(|(x, y)| (*x - *y).abs() > 1e-9)
            .map(|(x, y)| x.total_cmp(y))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

/// All extreme points of the polytope, deduplicated to `tol.dedup` in the
/// infinity norm and sorted lexicographically.
///
/// Visits every choice of `dim - rank(A)` inequality rows; fails with
/// [`Error::BudgetExceeded`] when there are more than `budget` of them.
pub fn enumerate_vertices(spec: &PolytopeSpec, budget: u64, tol: &Tolerances) -> Result<VertexSet> {
    spec.check_shapes()?;
    let red = Reduction::new(spec, tol)?;
    let (rows, rhs) = red.reduce(spec);
    let ys = enumerate_reduced(&rows, &rhs, red.basis.len(), budget, tol)?;
    let mut xs: Vec<Vec<f64>> = ys.iter().map(|y| red.lift(y)).collect();
    sort_lex(&mut xs);
    Ok(VertexSet::new(xs))
}

/// Checks shapes, nonemptiness and boundedness, removes redundant equality
/// rows, and cross-checks supplied vertices.
pub fn validate(spec: &PolytopeSpec, budget: u64, tol: &Tolerances) -> Result<ValidationReport> {
    spec.check_shapes()?;
    let red = Reduction::new(spec, tol)?;
    let (rows, rhs) = red.reduce(spec);
    let r = red.basis.len();

    if rank(&rows, tol.independence) < r {
        // P contains a line if it is nonempty; decide which by cutting the
        // lineality space away and looking for a vertex.
        let lineality = orthogonal_complement(&rows, r, tol.independence);
        let keep = orthogonal_complement(&lineality, r, tol.independence);
        let cut_rows: Vec<Vec<f64>> = rows
            .iter()
            .map(|g| keep.iter().map(|q| dot(g, q)).collect())
            .collect();
        let ys = enumerate_reduced(&cut_rows, &rhs, keep.len(), budget, tol)?;
        return Err(if ys.is_empty() {
            Error::EmptyFeasibleSet
        } else {
            Error::UnboundedSet
        });
    }

    let supplied = spec.vertices.clone();
    let enumerated = match enumerate_reduced(&rows, &rhs, r, budget, tol) {
        Ok(ys) => {
            if ys.is_empty() {
                return Err(Error::EmptyFeasibleSet);
            }
            if has_recession_ray(&rows, r, budget, tol)? {
                return Err(Error::UnboundedSet);
            }
            let mut xs: Vec<Vec<f64>> = ys.iter().map(|y| red.lift(y)).collect();
            sort_lex(&mut xs);
            Some(xs)
        }
        // Supplied vertices stand in for enumeration on larger instances.
        Err(e @ Error::BudgetExceeded { .. }) => {
            if supplied.is_none() {
                return Err(e);
            }
            None
        }
        Err(e) => return Err(e),
    };

    let mut canonical = PolytopeSpec {
        dim: spec.dim,
        eq_matrix: red
            .kept
            .iter()
            .map(|&i| spec.eq_matrix[i].clone())
            .collect(),
        b: red.kept.iter().map(|&i| spec.b[i]).collect(),
        ineq_matrix: spec.ineq_matrix.clone(),
        h: spec.h.clone(),
        vertices: None,
    };

    let mut vertices_consistent = None;
    if let Some(vs) = &supplied {
        for (i, v) in vs.iter().enumerate() {
            if !canonical.is_feasible(v, tol.feasibility) {
                return Err(Error::InvalidInput(format!(
                    "supplied vertex {i} is infeasible"
                )));
            }
            if !is_extreme(&canonical, &red, v, tol) {
                return Err(Error::InvalidInput(format!(
                    "supplied vertex {i} is not an extreme point"
                )));
            }
        }
        if let Some(xs) = &enumerated {
            let same = xs.len() == vs.len()
                && vs
                    .iter()
                    .all(|v| xs.iter().any(|x| linalg::dist_inf(x, v) <= tol.dedup));
            vertices_consistent = Some(same);
        }
    }
    let vertices = match (enumerated, supplied) {
        (Some(xs), _) => xs,
        (None, Some(mut vs)) => {
            sort_lex(&mut vs);
            vs
        }
        (None, None) => unreachable!(),
    };
    let vertex_count = vertices.len();
    canonical.vertices = Some(vertices);

    Ok(ValidationReport {
        canonical,
        nonempty: true,
        bounded: true,
        dropped_equalities: red.dropped.clone(),
        vertex_count,
        vertices_consistent,
    })
}

fn is_extreme(spec: &PolytopeSpec, red: &Reduction, v: &[f64], tol: &Tolerances) -> bool {
    let tight: Vec<Vec<f64>> = spec
        .ineq_matrix
        .iter()
        .zip(&spec.h)
        .filter(|(g, &h)| (dot(g, v) - h).abs() <= tol.feasibility * (1.0 + h.abs()))
        .map(|(g, _)| red.basis.iter().map(|q| dot(g, q)).collect())
        .collect();
    rank(&tight, tol.independence) == red.basis.len()
}

/// `(B, D)`: the largest vertex norm and the largest distance between two
/// vertices. Both suprema over `P` are attained at vertices.
pub fn geometry(vs: &VertexSet) -> (f64, f64) {
    let b = vs.vertices.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let mut d: f64 = 0.0;
    for (i, u) in vs.vertices.iter().enumerate() {
        for v in &vs.vertices[i + 1..] {
            d = d.max(linalg::dist(u, v));
        }
    }
    (b, d)
}

/// `min <c, v - x*>` over vertices outside the optimal face.
pub fn suboptimality_gap(vs: &VertexSet, c: &[f64], tol: &Tolerances) -> Result<f64> {
    let classified = vs.classify(c, tol.optimal_class);
    let best = classified
        .vertices
        .iter()
        .map(|v| dot(c, v))
        .fold(f64::INFINITY, f64::min);
    classified
        .non_optimal()
        .map(|(_, v)| dot(c, v) - best)
        .min_by(f64::total_cmp)
        .ok_or(Error::AllVerticesOptimal)
}

/// A validated polytope ready for projection and path tracing.
///
/// Inequality rows with a single nonzero coefficient are recognized as
/// coordinate bounds; the solvers eliminate those coordinates instead of
/// carrying them in dense systems.
#[derive(Clone, Debug)]
pub struct Polytope {
    spec: PolytopeSpec,
    bound_rows: Vec<Option<(usize, f64)>>,
    vertices: Option<Vec<Vec<f64>>>,
    anchor: Vec<f64>,
    tol: Tolerances,
}

impl Polytope {
    pub fn new(spec: PolytopeSpec) -> Result<Self> {
        Self::with_options(spec, DEFAULT_BUDGET, Tolerances::default())
    }

    pub fn with_options(spec: PolytopeSpec, budget: u64, tol: Tolerances) -> Result<Self> {
        let report = validate(&spec, budget, &tol)?;
        let mut canonical = report.canonical;
        let vertices = canonical.vertices.take();
        let anchor = centroid(
            vertices
                .as_deref()
                .expect("validated polytope has vertices"),
        );
        Ok(Self::assemble(canonical, anchor, vertices, tol))
    }

    /// Skips validation: the caller vouches that `spec` describes a nonempty
    /// bounded polytope with a full-rank equality block, that `anchor` is
    /// feasible and that `vertices`, if given, is the complete vertex list.
    pub fn from_trusted(
        mut spec: PolytopeSpec,
        anchor: Vec<f64>,
        vertices: Option<Vec<Vec<f64>>>,
        tol: Tolerances,
    ) -> Self {
        spec.vertices = None;
        Self::assemble(spec, anchor, vertices, tol)
    }

    fn assemble(
        spec: PolytopeSpec,
        anchor: Vec<f64>,
        vertices: Option<Vec<Vec<f64>>>,
        tol: Tolerances,
    ) -> Self {
        let bound_rows = spec
            .ineq_matrix
            .iter()
            .map(|g| {
                let mut nz = g.iter().enumerate().filter(|(_, &v)| v != 0.0);
                match (nz.next(), nz.next()) {
                    (Some((j, &a)), None) => Some((j, a)),
                    _ => None,
                }
            })
            .collect();
        Self {
            spec,
            bound_rows,
            vertices,
            anchor,
            tol,
        }
    }

    pub fn spec(&self) -> &PolytopeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn n_eq(&self) -> usize {
        self.spec.eq_matrix.len()
    }

    pub fn n_ineq(&self) -> usize {
        self.spec.ineq_matrix.len()
    }

    pub fn eq_row(&self, i: usize) -> &[f64] {
        &self.spec.eq_matrix[i]
    }

    pub fn ineq_row(&self, i: usize) -> &[f64] {
        &self.spec.ineq_matrix[i]
    }

    pub fn b(&self) -> &[f64] {
        &self.spec.b
    }

    pub fn h(&self) -> &[f64] {
        &self.spec.h
    }

    /// `Some((coordinate, coefficient))` when inequality row `i` bounds a single coordinate.
    pub fn bound_row(&self, i: usize) -> Option<(usize, f64)> {
        self.bound_rows[i]
    }

    pub fn vertices(&self) -> Option<&[Vec<f64>]> {
        self.vertices.as_deref()
    }

    pub fn vertex_set(&self) -> Option<VertexSet> {
        self.vertices.clone().map(VertexSet::new)
    }

    /// A feasible point used to cold-start the active-set solver.
    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn tol(&self) -> &Tolerances {
        &self.tol
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    /// `h_i - g_i . x`
    pub fn slack(&self, i: usize, x: &[f64]) -> f64 {
        self.spec.h[i] - dot(&self.spec.ineq_matrix[i], x)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.spec.is_feasible(x, self.tol.feasibility)
    }

    /// `(B, D)` from the known vertices.
    pub fn geometry(&self) -> Option<(f64, f64)> {
        self.vertex_set().map(|vs| geometry(&vs))
    }
}

fn centroid(vs: &[Vec<f64>]) -> Vec<f64> {
    let mut c = vec![0.0; vs[0].len()];
    for v in vs {
        c.iter_mut().zip(v).for_each(|(ci, vi)| *ci += vi);
    }
    let n = vs.len() as f64;
    c.iter_mut().for_each(|ci| *ci /= n);
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn unit_interval_is_valid() {
        let rep = validate(&PolytopeSpec::unit_interval(), DEFAULT_BUDGET, &tol()).unwrap();
        assert!(rep.nonempty && rep.bounded);
        assert_eq!(rep.canonical.vertices.unwrap(), vec![vec![0.0], vec![1.0]]);
    }

    #[test]
    fn birkhoff_two_has_two_permutations() {
        let rep = validate(&PolytopeSpec::birkhoff(2), DEFAULT_BUDGET, &tol()).unwrap();
        let vs = rep.canonical.vertices.unwrap();
        assert_eq!(vs.len(), 2);
        let swap = [0.0, 1.0, 1.0, 0.0];
        let ident = [1.0, 0.0, 0.0, 1.0];
        assert!(linalg::dist_inf(&vs[0], &swap) < 1e-12);
        assert!(linalg::dist_inf(&vs[1], &ident) < 1e-12);
    }

    #[test]
    fn halfplane_is_unbounded() {
        let spec = PolytopeSpec::new(2).inequality(vec![-1.0, 0.0], 0.0);
        assert!(matches!(
            validate(&spec, DEFAULT_BUDGET, &tol()),
            Err(Error::UnboundedSet)
        ));
    }

    #[test]
    fn pointed_unbounded_region_is_rejected() {
        // the nonnegative quadrant has a vertex but also rays
        let spec = PolytopeSpec::new(2)
            .inequality(vec![-1.0, 0.0], 0.0)
            .inequality(vec![0.0, -1.0], 0.0);
        assert!(matches!(
            validate(&spec, DEFAULT_BUDGET, &tol()),
            Err(Error::UnboundedSet)
        ));
    }

    #[test]
    fn contradictory_bounds_are_empty() {
        let spec = PolytopeSpec::new(1)
            .inequality(vec![1.0], 0.0)
            .inequality(vec![-1.0], -1.0);
        assert!(matches!(
            validate(&spec, DEFAULT_BUDGET, &tol()),
            Err(Error::EmptyFeasibleSet)
        ));
        let with_line = PolytopeSpec::new(2)
            .inequality(vec![1.0, 0.0], 0.0)
            .inequality(vec![-1.0, 0.0], -1.0);
        assert!(matches!(
            validate(&with_line, DEFAULT_BUDGET, &tol()),
            Err(Error::EmptyFeasibleSet)
        ));
    }

    #[test]
    fn inconsistent_equalities_are_empty() {
        let spec = PolytopeSpec::hypercube(2)
            .equality(vec![1.0, 1.0], 1.0)
            .equality(vec![2.0, 2.0], 3.0);
        assert!(matches!(
            validate(&spec, DEFAULT_BUDGET, &tol()),
            Err(Error::EmptyFeasibleSet)
        ));
    }

    #[test]
    fn redundant_equality_is_dropped() {
        let spec = PolytopeSpec::simplex(3).equality(vec![2.0, 2.0, 2.0], 2.0);
        let rep = validate(&spec, DEFAULT_BUDGET, &tol()).unwrap();
        assert_eq!(rep.dropped_equalities, vec![1]);
        assert_eq!(rep.canonical.eq_matrix.len(), 1);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let spec = PolytopeSpec::new(2).inequality(vec![1.0], 1.0);
        assert!(matches!(spec.check_shapes(), Err(Error::ShapeMismatch(_))));
        let mut spec = PolytopeSpec::unit_interval();
        spec.h.pop();
        assert!(matches!(spec.check_shapes(), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn simplex_vertices_are_basis_vectors() {
        let vs = enumerate_vertices(&PolytopeSpec::simplex(3), DEFAULT_BUDGET, &tol()).unwrap();
        assert_eq!(vs.len(), 3);
        let expect = [[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]];
        for (v, e) in vs.vertices.iter().zip(expect) {
            assert!(linalg::dist_inf(v, &e) < 1e-12);
        }
    }

    #[test]
    fn birkhoff_three_has_six_vertices() {
        let vs = enumerate_vertices(&PolytopeSpec::birkhoff(3), DEFAULT_BUDGET, &tol()).unwrap();
        assert_eq!(vs.len(), 6);
        for v in &vs.vertices {
            assert!(v.iter().all(|&x| x.abs() < 1e-9 || (x - 1.0).abs() < 1e-9));
        }
    }

    #[test]
    fn budget_is_enforced() {
        let err =
            enumerate_vertices(&PolytopeSpec::birkhoff(5), DEFAULT_BUDGET, &tol()).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn geometry_examples() {
        let (b, d) =
            geometry(&enumerate_vertices(&PolytopeSpec::unit_interval(), 100, &tol()).unwrap());
        assert_eq!((b, d), (1.0, 1.0));
        let (b, d) =
            geometry(&enumerate_vertices(&PolytopeSpec::birkhoff(2), 100, &tol()).unwrap());
        assert!((b - 2f64.sqrt()).abs() < 1e-12);
        assert!((d - 2.0).abs() < 1e-12);
        let (b, d) = geometry(&enumerate_vertices(&PolytopeSpec::simplex(3), 100, &tol()).unwrap());
        assert!((b - 1.0).abs() < 1e-12);
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn suboptimality_gap_examples() {
        let vs = enumerate_vertices(&PolytopeSpec::unit_interval(), 100, &tol()).unwrap();
        assert!((suboptimality_gap(&vs, &[-1.0], &tol()).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            suboptimality_gap(&vs, &[0.0], &tol()),
            Err(Error::AllVerticesOptimal)
        ));
        // C = -Id, N = 2, c = C / 2
        let vs = enumerate_vertices(&PolytopeSpec::birkhoff(2), 100, &tol()).unwrap();
        let c = [-0.5, 0.0, 0.0, -0.5];
        assert!((suboptimality_gap(&vs, &c, &tol()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn supplied_vertices_are_checked() {
        let mut spec = PolytopeSpec::unit_interval();
        spec.vertices = Some(vec![vec![1.0], vec![0.0]]);
        let rep = validate(&spec, DEFAULT_BUDGET, &tol()).unwrap();
        assert_eq!(rep.vertices_consistent, Some(true));

        spec.vertices = Some(vec![vec![0.5]]);
        assert!(matches!(
            validate(&spec, DEFAULT_BUDGET, &tol()),
            Err(Error::InvalidInput(_))
        ));

        spec.vertices = Some(vec![vec![1.0]]);
        let rep = validate(&spec, DEFAULT_BUDGET, &tol()).unwrap();
        assert_eq!(rep.vertices_consistent, Some(false));
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(25, 16), 2_042_975);
        assert_eq!(binomial(3, 4), 0);
    }

    #[test]
    fn bound_rows_are_detected() {
        let p = Polytope::new(PolytopeSpec::simplex(3)).unwrap();
        assert_eq!(p.bound_row(1), Some((1, -1.0)));
        let p = Polytope::new(PolytopeSpec::hypercube(2).inequality(vec![1.0, 1.0], 1.5)).unwrap();
        assert_eq!(p.bound_row(4), None);
    }
}
