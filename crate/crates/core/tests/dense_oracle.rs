use nalgebra::{DMatrix, DVector};
use nlhom_core::cellproblem::CellOptions;
use nlhom_core::{CellDiscretization, InclusionShape, PerforatedSet, RadialKernel};

/// Minimum of the cell functional by explicit pair enumeration over
/// periodic copies and a dense pseudo-inverse.
fn dense_minimum(set: &PerforatedSet, kernel: &RadialKernel, kappa: f64, m: usize, xi: &[f64]) -> f64 {
    let d = set.dim();
    let h = 1.0 / m as f64;
    let mut nodes = Vec::new();
    for idx in 0..m.pow(d as u32) {
        let p: Vec<f64> = (0..d).map(|a| ((idx / m.pow(a as u32)) % m) as f64 * h + 0.5 * h - 0.5).collect();
        if set.shape().contains_local(&p) {
            nodes.push(p);
        }
    }
    let n = nodes.len();
    let reach = kernel.support_radius();
    let kmax = (kappa * reach).ceil() as i64 + 1;
    let side = (2 * kmax + 1) as usize;
    let mut hess = DMatrix::<f64>::zeros(n, n);
    let mut lin = DVector::<f64>::zeros(n);
    let mut c = 0.0;
    for i in 0..n {
        for j in 0..n {
            for t in 0..side.pow(d as u32) {
                let k: Vec<f64> = (0..d).map(|a| ((t / side.pow(a as u32)) % side) as f64 - kmax as f64).collect();
                let diff: Vec<f64> = (0..d).map(|a| nodes[i][a] - nodes[j][a] - k[a]).collect();
                if diff.iter().all(|v| v.abs() < 1e-12) {
                    continue;
                }
                let scaled: Vec<f64> = diff.iter().map(|v| v / kappa).collect();
                let w = kernel.cell_average(&scaled, 0.5 * h / kappa);
                if w == 0.0 {
                    continue;
                }
                // w (a + u_i − u_j)²
                let a: f64 = xi.iter().zip(&diff).map(|(x, v)| x * v).sum();
                c += w * a * a;
                lin[i] += 2.0 * w * a;
                lin[j] -= 2.0 * w * a;
                hess[(i, i)] += w;
                hess[(j, j)] += w;
                hess[(i, j)] -= w;
                hess[(j, i)] -= w;
            }
        }
    }
    // min c + bᵀu + uᵀHu = c − bᵀH⁺b / 4
    let eig = hess.clone().symmetric_eigen();
    let top = eig.eigenvalues.amax();
    let mut pinv_b = DVector::<f64>::zeros(n);
    for (l, lambda) in eig.eigenvalues.iter().enumerate() {
        if *lambda > 1e-12 * top {
            let v = eig.eigenvectors.column(l);
            pinv_b += v * (v.dot(&lin) / lambda);
        }
    }
    let h2d = h.powi(2 * d as i32);
    h2d * (c - 0.25 * lin.dot(&pinv_b))
}

fn compare(set: &PerforatedSet, kernel: &RadialKernel, kappa: f64, m: usize, xi: &[f64]) {
    let cell = CellDiscretization::new(set, kernel, kappa, m, CellOptions::default()).unwrap();
    let fast = cell.minimize(xi).unwrap().value;
    let dense = dense_minimum(set, kernel, kappa, m, xi);
    // zero minima are compared against the scale of Q(0)
    let floor = 1e-12 * cell.no_corrector_value(xi).unwrap();
    assert!((fast - dense).abs() <= (1e-8 * dense.abs()).max(floor), "κ={kappa} m={m} ξ={xi:?}: {fast} vs {dense}");
}

#[test]
fn ball_matches_dense_solve() {
    let set = PerforatedSet::new(InclusionShape::ball(0.3), 2).unwrap();
    let kernel = RadialKernel::indicator(1.0, 2).unwrap();
    for kappa in [0.8, 1.5, 3.0] {
        for xi in [[1.0, 0.0], [0.3, -0.7]] {
            compare(&set, &kernel, kappa, 8, &xi);
        }
    }
}

#[test]
fn ellipse_and_tabulated_kernel_match_dense_solve() {
    let set = PerforatedSet::new(InclusionShape::ellipse(&[0.4, 0.25]), 2).unwrap();
    let kernel = RadialKernel::tabulated(vec![0.5, 1.0, 1.5], vec![2.0, 1.0, 0.25], 2).unwrap();
    compare(&set, &kernel, 1.2, 8, &[1.0, 1.0]);
    compare(&set, &kernel, 0.5, 6, &[0.0, 1.0]);
}

#[test]
fn one_dimensional_segment_matches_dense_solve() {
    let set = PerforatedSet::new(InclusionShape::ball(0.35), 1).unwrap();
    let kernel = RadialKernel::indicator(1.0, 1).unwrap();
    for kappa in [0.5, 2.0] {
        compare(&set, &kernel, kappa, 8, &[1.0]);
    }
}
