//! Conjugate gradients for singular symmetric positive-semidefinite systems
//! whose null space is spanned by indicator vectors of known components.
//!
//! Iterates are kept mean-zero on every component, which fixes the gauge and
//! keeps the Krylov space inside the range of the operator.

use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CgError {
    #[error("conjugate gradients stalled after {iterations} iterations at relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("operator is not positive on the mean-zero subspace (pᵀAp = {0:e})")]
    Indefinite(f64),
    #[error("label vector length {labels} does not match right-hand side length {rhs}")]
    Length { labels: usize, rhs: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `‖b − Ax‖ / ‖b‖` (0 for a zero right-hand side).
    pub residual: f64,
}

/// Subtracts the per-component mean.
pub fn project_mean_zero(v: &mut [f64], labels: &[usize], components: usize) {
    let mut sums = alloc::vec![0.0; components];
    let mut counts = alloc::vec![0usize; components];
    for (x, &l) in v.iter().zip(labels) {
        sums[l] += x;
        counts[l] += 1;
    }
    for (x, &l) in v.iter_mut().zip(labels) {
        *x -= sums[l] / counts[l] as f64;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for `x` mean-zero on each component.
///
/// `apply(v, out)` must write `A v` into `out`. The component of `b` along the
/// null space is projected away first.
pub fn solve<F: FnMut(&[f64], &mut [f64])>(
    mut apply: F,
    b: &[f64],
    labels: &[usize],
    components: usize,
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgSolution, CgError> {
    let n = b.len();
    if labels.len() != n {
        return Err(CgError::Length { labels: labels.len(), rhs: n });
    }
    let mut r = b.to_vec();
    project_mean_zero(&mut r, labels, components);
    let bnorm = libm::sqrt(dot(&r, &r));
    let mut x = alloc::vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(CgSolution { x, iterations: 0, residual: 0.0 });
    }
    let mut p = r.clone();
    let mut ap = alloc::vec![0.0; n];
    let mut rr = dot(&r, &r);
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        project_mean_zero(&mut ap, labels, components);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(CgError::Indefinite(pap));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if libm::sqrt(rr_new) <= rel_tol * bnorm {
            // confirm with the true residual to guard against drift
            apply(&x, &mut ap);
            let mut true_r: Vec<f64> = b.iter().zip(&ap).map(|(bi, ai)| bi - ai).collect();
            project_mean_zero(&mut true_r, labels, components);
            let residual = libm::sqrt(dot(&true_r, &true_r)) / bnorm;
            if residual <= rel_tol {
                return Ok(CgSolution { x, iterations: it, residual });
            }
            r = true_r;
            p.copy_from_slice(&r);
            rr = dot(&r, &r);
            continue;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(CgError::NotConverged { iterations: max_iter, residual: libm::sqrt(rr) / bnorm })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Graph Laplacian of a path with `n` nodes.
    fn path_laplacian(v: &[f64], out: &mut [f64]) {
        let n = v.len();
        for i in 0..n {
            let mut acc = 0.0;
            if i > 0 {
                acc += v[i] - v[i - 1];
            }
            if i + 1 < n {
                acc += v[i] - v[i + 1];
            }
            out[i] = acc;
        }
    }

    #[test]
    fn singular_path_system() {
        let b = [1.0, 0.0, 0.0, -1.0];
        let sol = solve(path_laplacian, &b, &[0; 4], 1, 1e-12, 40).unwrap();
        let mut check = [0.0; 4];
        path_laplacian(&sol.x, &mut check);
        for (c, bi) in check.iter().zip(&b) {
            assert!((c - bi).abs() < 1e-10);
        }
        assert!(sol.x.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let sol = solve(path_laplacian, &[0.0; 3], &[0; 3], 1, 1e-10, 30).unwrap();
        assert_eq!(sol.x, alloc::vec![0.0; 3]);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn two_components_stay_separate() {
        // two disjoint edges {0,1} and {2,3}
        let apply = |v: &[f64], out: &mut [f64]| {
            out[0] = v[0] - v[1];
            out[1] = v[1] - v[0];
            out[2] = 2.0 * (v[2] - v[3]);
            out[3] = 2.0 * (v[3] - v[2]);
        };
        let sol = solve(apply, &[1.0, -1.0, 4.0, -4.0], &[0, 0, 1, 1], 2, 1e-12, 40).unwrap();
        assert!((sol.x[0] - 0.5).abs() < 1e-12 && (sol.x[2] - 1.0).abs() < 1e-12, "{:?}", sol.x);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let b = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0];
        let r = solve(path_laplacian, &b, &[0; 8], 1, 1e-14, 2);
        assert!(matches!(r, Err(CgError::NotConverged { iterations: 2, .. })));
    }
}
