//! Dense vector helpers on `f64` slices.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// `(1 - t) a + t b`
pub fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Orthonormal basis of the orthogonal complement of `span(rows)` in `R^dim`,
/// by Gram-Schmidt (applied twice) against the rows and then the unit vectors.
pub fn orthogonal_complement(rows: &[Vec<f64>], dim: usize, tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let extend = |v: &[f64], basis: &mut Vec<Vec<f64>>| -> bool {
        let scale = norm(v);
        if scale == 0.0 {
            return false;
        }
        let mut r = v.to_vec();
        for _ in 0..2 {
            for q in basis.iter() {
                let a = dot(&r, q);
                r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= a * qi);
            }
        }
        let n = norm(&r);
        if n > tol * scale {
            basis.push(r.into_iter().map(|x| x / n).collect());
            true
        } else {
            false
        }
    };
    for row in rows {
        extend(row, &mut basis);
    }
    let rank = basis.len();
    for j in 0..dim {
        let mut e = vec![0.0; dim];
        e[j] = 1.0;
        extend(&e, &mut basis);
    }
    basis.split_off(rank)
}
