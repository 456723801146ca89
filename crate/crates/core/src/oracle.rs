//! Brute-force ground truth at desk scale.
//!
//! Nothing here calls into [`crate::analysis`]; the threshold is recomputed
//! from scratch so the two can be compared.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::homotopy::{trace_path, SolutionPath};
use crate::linalg::{self, dot, norm_sq};
use crate::polytope::{Polytope, PolytopeSpec};
use crate::projection::{solve_qlp, QlpInstance};

/// LP value over the vertices and the indices attaining it
/// (ties within `1e-9 (1 + |value|)`).
pub fn lp_solve_bruteforce(vertices: &[Vec<f64>], c: &[f64]) -> (f64, Vec<usize>) {
    let values: Vec<f64> = vertices.iter().map(|v| dot(c, v)).collect();
    let value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let cut = value + 1e-9 * (1.0 + value.abs());
    let optimal = (0..values.len()).filter(|&k| values[k] <= cut).collect();
    (value, optimal)
}

/// Minimum-norm point of the convex hull of `points` (Wolfe's algorithm).
///
/// Checked afterwards: `<x, p - x> >= -1e-9 (1 + max ||p||^2)` for every `p`.
pub fn min_norm_over_m(points: &[Vec<f64>]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidInput("no points".into()));
    }
    let big = points.iter().map(|p| norm_sq(p)).fold(0.0, f64::max);
    let eps = 1e-12 * (1.0 + big);

    let first = (0..points.len())
        .min_by(|&a, &b| norm_sq(&points[a]).total_cmp(&norm_sq(&points[b])))
        .expect("nonempty");
    let mut support = vec![first];
    let mut weights = vec![1.0];
    let mut x = points[first].clone();

    for _ in 0..100 * (points.len() + 10) {
        let (j, best) = (0..points.len())
            .map(|j| (j, dot(&x, &points[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if norm_sq(&x) - best <= eps || support.contains(&j) {
            return certified(x, points);
        }
        support.push(j);
        weights.push(0.0);
        loop {
            let alpha = affine_min_norm(points, &support)?;
            if alpha.iter().all(|&a| a > 1e-14) {
                weights = alpha;
                break;
            }
            // move toward the affine minimizer until a weight hits zero
            let mut theta: f64 = 1.0;
            for (w, a) in weights.iter().zip(&alpha) {
                if *a <= 1e-14 {
                    theta = theta.min(w / (w - a));
                }
            }
            for (w, a) in weights.iter_mut().zip(&alpha) {
                *w = (1.0 - theta) * *w + theta * a;
            }
            let mut k = 0;
            while k < support.len() {
                if weights[k] <= 1e-14 {
                    support.remove(k);
                    weights.remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
        }
        x = combine(points, &support, &weights);
    }
    Err(Error::NumericalBreakdown(
        "min-norm iteration did not settle".into(),
    ))
}

fn combine(points: &[Vec<f64>], support: &[usize], weights: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; points[0].len()];
    for (&k, &w) in support.iter().zip(weights) {
        x = linalg::axpy(&x, w, &points[k]);
    }
    x
}

/// Weights of the minimum-norm point of the affine hull of `support`.
fn affine_min_norm(points: &[Vec<f64>], support: &[usize]) -> Result<Vec<f64>> {
    let k = support.len();
    let mut m = DMatrix::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            m[(a, b)] = dot(&points[support[a]], &points[support[b]]);
        }
        m[(a, k)] = 1.0;
        m[(k, a)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = m
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .map_err(|e| Error::NumericalBreakdown(e.to_string()))?;
    Ok(sol.as_slice()[..k].to_vec())
}

fn certified(x: Vec<f64>, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let big = points.iter().map(|p| norm_sq(p)).fold(0.0, f64::max);
    let worst = points
        .iter()
        .map(|p| dot(&x, p) - norm_sq(&x))
        .fold(f64::INFINITY, f64::min);
    if worst < -1e-9 * (1.0 + big) {
        return Err(Error::NumericalBreakdown(format!(
            "min-norm certificate off by {worst:e}"
        )));
    }
    Ok(x)
}

/// `eta*` straight from its definition over the vertex list, floored at 0
/// (a negative maximum means the path is constant).
pub fn eta_star_bruteforce(vertices: &[Vec<f64>], c: &[f64], x_star: &[f64]) -> Result<f64> {
    let base = dot(c, x_star);
    let cut = 1e-9 * (1.0 + norm_sq(c).sqrt());
    let mut ratios = Vec::new();
    for v in vertices {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..v.len() {
            num += x_star[j] * (x_star[j] - v[j]);
            den += c[j] * v[j];
        }
        den -= base;
        if den > cut {
            ratios.push(2.0 * num / den);
        }
    }
    ratios.sort_by(|a, b| b.total_cmp(a));
    ratios
        .first()
        .map(|r| r.max(0.0))
        .ok_or(Error::AllVerticesOptimal)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathVerifyReport {
    pub samples: usize,
    pub max_discrepancy: f64,
    pub worst_eta: f64,
    pub passed: bool,
}

/// Compares the path with cold-start solves at `samples` seeded random
/// `eta` in `(0, 1.5 eta*]` (`(0, 1]` when `eta* = 0`).
pub fn path_verify(
    inst: &QlpInstance,
    path: &SolutionPath,
    samples: usize,
    seed: u64,
) -> Result<PathVerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = if path.eta_star > 0.0 {
        1.5 * path.eta_star
    } else {
        1.0
    };
    let mut max_discrepancy: f64 = 0.0;
    let mut worst_eta = 0.0;
    for _ in 0..samples {
        let eta = top * (1.0 - rng.random::<f64>());
        let x = solve_qlp(inst, eta)?.x;
        let gap = linalg::dist_inf(&x, &path.eval(eta));
        if gap > max_discrepancy {
            max_discrepancy = gap;
            worst_eta = eta;
        }
    }
    Ok(PathVerifyReport {
        samples,
        max_discrepancy,
        worst_eta,
        passed: max_discrepancy <= 1e-7,
    })
}

/// `[0, 1]^d` cut by up to `12 - 2d` random halfspaces, each passing
/// strictly above a random interior point, plus an optional equality through
/// that point. `d` is drawn from `1..=6`.
pub fn random_polytope(rng: &mut impl Rng) -> PolytopeSpec {
    let d = rng.random_range(1..=6usize);
    let mut spec = PolytopeSpec::hypercube(d);
    let center: Vec<f64> = (0..d).map(|_| rng.random_range(0.3..0.7)).collect();
    let extra = rng.random_range(0..=(12 - 2 * d));
    for _ in 0..extra {
        let g: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = dot(&g, &center) + rng.random_range(0.05..0.5);
        spec = spec.inequality(g, h);
    }
    if d >= 2 && rng.random_bool(0.25) {
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = dot(&a, &center);
        spec = spec.equality(a, b);
    }
    spec
}

/// A random polytope with a random cost; rounded costs make ties (and so
/// non-singleton optimal faces) common.
pub fn random_instance(seed: u64) -> Result<QlpInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = random_polytope(&mut rng);
    let d = spec.dim;
    let round = rng.random_bool(0.3);
    let c = (0..d)
        .map(|_| {
            let v: f64 = rng.random_range(-2.0..2.0);
            if round {
                v.round()
            } else {
                v
            }
        })
        .collect();
    QlpInstance::new(Polytope::new(spec)?, c)
}

/// A random `N x N` cost with `N` in `2..=5`; entries are integers in
/// `0..=4` half of the time to produce ties.
pub fn random_ot_cost(seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=5usize);
    let integral = rng.random_bool(0.5);
    (0..n)
        .map(|_| {
            (0..n)
                .map(|_| {
                    if integral {
                        rng.random_range(0..=4) as f64
                    } else {
                        rng.random_range(0.0..1.0)
                    }
                })
                .collect()
        })
        .collect()
}

/// Oracle values for one instance next to the path tracer's.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub lp_value: f64,
    pub optimal_vertices: Vec<usize>,
    pub x_star_oracle: Vec<f64>,
    pub x_star_path: Vec<f64>,
    /// `None` when every vertex is optimal.
    pub eta_star_bruteforce: Option<f64>,
    pub eta_star_path: f64,
    pub path_verify: PathVerifyReport,
    pub passed: bool,
}

/// Runs every oracle on `inst`; the polytope must carry its vertex list.
pub fn oracle_check(inst: &QlpInstance, samples: usize, seed: u64) -> Result<OracleReport> {
    let vertices = inst
        .polytope
        .vertices()
        .ok_or_else(|| Error::InvalidInput("oracle needs the vertex list".into()))?;
    let path = trace_path(inst)?;
    let (lp_value, optimal_vertices) = lp_solve_bruteforce(vertices, &inst.c);
    let face: Vec<Vec<f64>> = optimal_vertices
        .iter()
        .map(|&k| vertices[k].clone())
        .collect();
    let x_star_oracle = min_norm_over_m(&face)?;
    let eta_star_bruteforce = match eta_star_bruteforce(vertices, &inst.c, &x_star_oracle) {
        Ok(v) => Some(v),
        Err(Error::AllVerticesOptimal) => None,
        Err(e) => return Err(e),
    };
    let path_verify = path_verify(inst, &path, samples, seed)?;
    let scale = 1.0 + path.eta_star;
    let passed = (dot(&inst.c, &path.x_star) - lp_value).abs() <= 1e-8 * (1.0 + lp_value.abs())
        && linalg::dist_inf(&x_star_oracle, &path.x_star) <= 1e-7
        && (eta_star_bruteforce.unwrap_or(0.0) - path.eta_star).abs() <= 1e-7 * scale
        && path_verify.passed;
    Ok(OracleReport {
        lp_value,
        optimal_vertices,
        x_star_oracle,
        x_star_path: path.x_star,
        eta_star_bruteforce,
        eta_star_path: path.eta_star,
        path_verify,
        passed,
    })
}
