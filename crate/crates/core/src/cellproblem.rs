//! The periodic cell problem
//!
//! ```text
//! q(ξ) = min_{u 1-periodic} ∫_{[0,1]^d∩E} ∫_E φ((x−y)/κ) (⟨ξ, x−y⟩ + u(x) − u(y))² dx dy
//! ```
//!
//! and the homogenized tensor `⟨A ξ, ξ⟩ = κ^-(d+2) q(ξ)`.
//!
//! The unit cell carries `m^d` cell-centered nodes; `u` lives on the nodes
//! inside `K`. The `y` integral over all of `E` runs over every periodic copy
//! of those nodes within the kernel's reach. Since `u` is periodic, the pairs
//! `(x_i, y_j + k)` only enter through sums over `k` that depend on the residue
//! `(j − i) mod m`, so the whole form is assembled from three folded tables:
//!
//! ```text
//! S0[r] = Σ_o w(o),   S1[r] = Σ_o w(o) o h,   S2[r] = Σ_o w(o) (oh)(oh)ᵀ,   o ≡ r (mod m)
//! ```
//!
//! With `W_ij = S0[r_ij]`, `V_ij = S1[r_ij]`, `L = diag(W 1) − W` and
//! `g_i = Σ_j ⟨ξ, V_ij⟩`, the form reads
//! `Q(u) = h^{2d} (c − 4 gᵀu + 2 uᵀLu)` with `c = Σ_ij ξᵀ S2[r_ij] ξ`.

use alloc::vec::Vec;
use thiserror::Error;

use crate::cg::{self, CgError};
use crate::energy::WeightRule;
use crate::geometry::PerforatedSet;
use crate::kernels::{KernelError, RadialKernel};
use crate::unionfind::UnionFind;
use crate::MAX_DIM;

/// Normalization label written next to every tensor.
pub const NORMALIZATION: &str = "kappa^-(d+2)";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CellError {
    #[error("no cell node lies inside K at resolution m = {0}")]
    EmptyMask(usize),
    #[error("κ must be positive and finite, got {0}")]
    Kappa(f64),
    #[error("resolution m = {m} puts only {across:.1} nodes across K; at least 8 are needed")]
    Resolution { m: usize, across: f64 },
    #[error("direction has {got} components, the cell has dimension {dim}")]
    Direction { got: usize, dim: usize },
    #[error("kernel dimension {kernel} differs from the set dimension {set}")]
    Dimension { kernel: usize, set: usize },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Solver(#[from] CgError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellOptions {
    /// Relative tail allowed when truncating kernels without compact support.
    pub tail_tolerance: f64,
    pub weight_rule: WeightRule,
    /// Relative residual target of the corrector solve.
    pub rel_tol: f64,
    /// Iteration cap as a multiple of the number of unknowns.
    pub max_iter_factor: usize,
}

impl Default for CellOptions {
    fn default() -> Self {
        Self { tail_tolerance: 1e-6, weight_rule: WeightRule::CellAverage, rel_tol: 1e-10, max_iter_factor: 10 }
    }
}

/// Result of one corrector solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CellMinimum {
    /// Corrector values on the masked nodes, mean-zero on each component.
    pub corrector: Vec<f64>,
    /// Minimum of the quadratic form (not normalized by κ).
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Discretized cell problem at one `κ` and resolution `m`.
#[derive(Debug, Clone)]
pub struct CellDiscretization {
    dim: usize,
    m: usize,
    kappa: f64,
    options: CellOptions,
    /// Multi-indices of the nodes inside `K`.
    nodes: Vec<[usize; MAX_DIM]>,
    s0: Vec<f64>,
    s1: Vec<[f64; MAX_DIM]>,
    s2: Vec<[[f64; MAX_DIM]; MAX_DIM]>,
    labels: Vec<usize>,
    components: usize,
}

impl CellDiscretization {
    pub fn new(
        set: &PerforatedSet,
        kernel: &RadialKernel,
        kappa: f64,
        m: usize,
        options: CellOptions,
    ) -> Result<Self, CellError> {
        let d = set.dim();
        if kernel.dim() != d {
            return Err(CellError::Dimension { kernel: kernel.dim(), set: d });
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(CellError::Kappa(kappa));
        }
        if m == 0 {
            return Err(CellError::EmptyMask(m));
        }
        let h = 1.0 / m as f64;
        let total = m.pow(d as u32);
        let mut nodes = Vec::new();
        for idx in 0..total {
            let mi = unflatten(idx, m, d);
            let mut p = [0.0; MAX_DIM];
            for a in 0..d {
                p[a] = (mi[a] as f64 + 0.5) * h - 0.5;
            }
            if set.shape().contains_local(&p[..d]) {
                nodes.push(mi);
            }
        }
        if nodes.is_empty() {
            return Err(CellError::EmptyMask(m));
        }

        // raw weights on |o| ∈ [0, omax]^d, then folded over signed offsets
        let (reach, truncated) = if kernel.has_compact_support() {
            (kernel.support_radius(), false)
        } else {
            (kernel.truncation_radius(options.tail_tolerance)?, true)
        };
        let slack = match options.weight_rule {
            WeightRule::CellAverage => libm::sqrt(d as f64) / 2.0,
            WeightRule::PointSample => 0.0,
        };
        let omax = libm::ceil(reach * kappa / h + slack) as usize;
        let side = omax + 1;
        let half_width = 0.5 * h / kappa;
        let abs_weights = crate::par::map_indexed(side.pow(d as u32), |idx| {
            let off = unflatten(idx, side, d);
            if off[..d].iter().all(|&o| o == 0) {
                return 0.0;
            }
            let mut xi = [0.0; MAX_DIM];
            for a in 0..d {
                xi[a] = off[a] as f64 * h / kappa;
            }
            let xi = &xi[..d];
            if truncated && crate::norm(xi) >= reach {
                return 0.0;
            }
            match options.weight_rule {
                WeightRule::CellAverage => kernel.cell_average(xi, half_width),
                WeightRule::PointSample => kernel.evaluate(xi),
            }
        });

        let mut s0 = alloc::vec![0.0; total];
        let mut s1 = alloc::vec![[0.0; MAX_DIM]; total];
        let mut s2 = alloc::vec![[[0.0; MAX_DIM]; MAX_DIM]; total];
        let span = 2 * omax + 1;
        for idx in 0..span.pow(d as u32) {
            let raw = unflatten(idx, span, d);
            let mut o = [0i64; MAX_DIM];
            let mut abs_idx = 0;
            let mut stride = 1;
            let mut r = 0;
            let mut rstride = 1;
            for a in 0..d {
                o[a] = raw[a] as i64 - omax as i64;
                abs_idx += o[a].unsigned_abs() as usize * stride;
                stride *= side;
                r += o[a].rem_euclid(m as i64) as usize * rstride;
                rstride *= m;
            }
            let w = abs_weights[abs_idx];
            if w == 0.0 {
                continue;
            }
            s0[r] += w;
            for a in 0..d {
                let oa = o[a] as f64 * h;
                s1[r][a] += w * oa;
                for b in 0..d {
                    s2[r][a][b] += w * oa * o[b] as f64 * h;
                }
            }
        }

        let mut cell = Self { dim: d, m, kappa, options, nodes, s0, s1, s2, labels: Vec::new(), components: 0 };
        let n = cell.nodes.len();
        let mut uf = UnionFind::new(n);
        for i in 0..n {
            for j in i + 1..n {
                if cell.s0[cell.residue(i, j)] > 0.0 {
                    uf.union(i, j);
                }
            }
        }
        let (labels, components) = uf.labels();
        cell.labels = labels;
        cell.components = components;
        Ok(cell)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Number of unknowns (nodes inside `K`).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Multi-indices of the unknowns on the `m^d` cell lattice.
    pub fn nodes(&self) -> &[[usize; MAX_DIM]] {
        &self.nodes
    }

    /// Connected components of the pair graph.
    pub fn component_count(&self) -> usize {
        self.components
    }

    pub fn component_labels(&self) -> &[usize] {
        &self.labels
    }

    /// Folded index of `(j − i) mod m`.
    fn residue(&self, i: usize, j: usize) -> usize {
        let (a, b) = (&self.nodes[i], &self.nodes[j]);
        let mut r = 0;
        let mut stride = 1;
        for ax in 0..self.dim {
            r += (b[ax] + self.m - a[ax]) % self.m * stride;
            stride *= self.m;
        }
        r
    }

    /// Total weight `W_ij` between unknowns `i` and `j` over all periodic copies.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.s0[self.residue(i, j)]
    }

    fn h2d(&self) -> f64 {
        libm::pow(self.m as f64, -2.0 * self.dim as f64)
    }

    fn check_direction(&self, xi: &[f64]) -> Result<(), CellError> {
        if xi.len() != self.dim {
            return Err(CellError::Direction { got: xi.len(), dim: self.dim });
        }
        Ok(())
    }

    /// `c = Σ_ij ξᵀ S2[r_ij] ξ`.
    fn constant_term(&self, xi: &[f64]) -> f64 {
        let n = self.len();
        let rows = crate::par::map_indexed(n, |i| {
            let mut acc = 0.0;
            for j in 0..n {
                let s = &self.s2[self.residue(i, j)];
                for a in 0..self.dim {
                    for b in 0..self.dim {
                        acc += xi[a] * s[a][b] * xi[b];
                    }
                }
            }
            acc
        });
        rows.iter().sum()
    }

    /// `g_i = Σ_j ⟨ξ, V_ij⟩`.
    fn linear_term(&self, xi: &[f64]) -> Vec<f64> {
        let n = self.len();
        crate::par::map_indexed(n, |i| {
            let mut acc = 0.0;
            for j in 0..n {
                let v = &self.s1[self.residue(i, j)];
                for a in 0..self.dim {
                    acc += xi[a] * v[a];
                }
            }
            acc
        })
    }

    /// `L v` with `L = diag(W 1) − W`.
    pub fn laplacian_apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.len();
        let rows = crate::par::map_indexed(n, |i| {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.s0[self.residue(i, j)] * (v[i] - v[j]);
            }
            acc
        });
        out.copy_from_slice(&rows);
    }

    /// `Q(u)`.
    pub fn quadratic(&self, xi: &[f64], u: &[f64]) -> Result<f64, CellError> {
        self.check_direction(xi)?;
        let g = self.linear_term(xi);
        let mut lu = alloc::vec![0.0; self.len()];
        self.laplacian_apply(u, &mut lu);
        let gu: f64 = g.iter().zip(u).map(|(a, b)| a * b).sum();
        let ulu: f64 = u.iter().zip(&lu).map(|(a, b)| a * b).sum();
        Ok(self.h2d() * (self.constant_term(xi) - 4.0 * gu + 2.0 * ulu))
    }

    /// `∇Q(u) = h^{2d} (4 L u − 4 g)`.
    pub fn gradient(&self, xi: &[f64], u: &[f64]) -> Result<Vec<f64>, CellError> {
        self.check_direction(xi)?;
        let g = self.linear_term(xi);
        let mut lu = alloc::vec![0.0; self.len()];
        self.laplacian_apply(u, &mut lu);
        let s = 4.0 * self.h2d();
        Ok(lu.iter().zip(&g).map(|(a, b)| s * (a - b)).collect())
    }

    /// `∇²Q v = 4 h^{2d} L v`.
    pub fn hessian_apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.len()];
        self.laplacian_apply(v, &mut out);
        let s = 4.0 * self.h2d();
        out.iter_mut().for_each(|x| *x *= s);
        out
    }

    /// `Q(0)`, the energy without corrector.
    pub fn no_corrector_value(&self, xi: &[f64]) -> Result<f64, CellError> {
        self.check_direction(xi)?;
        Ok(self.h2d() * self.constant_term(xi))
    }

    /// Minimizes `Q` by solving `L u = g` with conjugate gradients.
    pub fn minimize(&self, xi: &[f64]) -> Result<CellMinimum, CellError> {
        self.check_direction(xi)?;
        let g = self.linear_term(xi);
        let n = self.len();
        let sol = cg::solve(
            |v, out| self.laplacian_apply(v, out),
            &g,
            &self.labels,
            self.components,
            self.options.rel_tol,
            self.options.max_iter_factor * n.max(1),
        )?;
        let gu: f64 = g.iter().zip(&sol.x).map(|(a, b)| a * b).sum();
        // at the minimizer uᵀLu = gᵀu
        let value = (self.h2d() * (self.constant_term(xi) - 2.0 * gu)).max(0.0);
        Ok(CellMinimum { corrector: sol.x, value, iterations: sol.iterations, residual: sol.residual })
    }

    /// `A` from `q(e_i)` and polarization on `q(e_i + e_j)`.
    pub fn homogenized_tensor(&self) -> Result<HomogenizedTensor, CellError> {
        let d = self.dim;
        let norm = libm::pow(self.kappa, -(d as f64 + 2.0));
        let mut raw_min = Vec::new();
        let mut diag = [0.0; MAX_DIM];
        let mut iterations = 0;
        let mut residual: f64 = 0.0;
        let mut solve = |xi: &[f64], raw_min: &mut Vec<f64>| -> Result<f64, CellError> {
            let r = self.minimize(xi)?;
            iterations += r.iterations;
            residual = residual.max(r.residual);
            raw_min.push(r.value);
            Ok(r.value)
        };
        for a in 0..d {
            let mut e = [0.0; MAX_DIM];
            e[a] = 1.0;
            diag[a] = solve(&e[..d], &mut raw_min)?;
        }
        let mut matrix = [[0.0; MAX_DIM]; MAX_DIM];
        for a in 0..d {
            matrix[a][a] = norm * diag[a];
            for b in a + 1..d {
                let mut e = [0.0; MAX_DIM];
                e[a] = 1.0;
                e[b] = 1.0;
                let q = solve(&e[..d], &mut raw_min)?;
                let off = 0.5 * norm * (q - diag[a] - diag[b]);
                matrix[a][b] = off;
                matrix[b][a] = off;
            }
        }
        Ok(HomogenizedTensor { dim: d, kappa: self.kappa, matrix, raw_min, iterations, residual })
    }
}

/// Checks that `m` puts at least 8 nodes across the inclusion and builds the tensor.
pub fn homogenized_tensor(
    set: &PerforatedSet,
    kernel: &RadialKernel,
    kappa: f64,
    m: usize,
    options: CellOptions,
) -> Result<HomogenizedTensor, CellError> {
    let across = 2.0 * set.shape().min_half_width(set.dim()) * m as f64;
    if across < 8.0 - 1e-9 {
        return Err(CellError::Resolution { m, across });
    }
    CellDiscretization::new(set, kernel, kappa, m, options)?.homogenized_tensor()
}

fn unflatten(idx: usize, side: usize, dim: usize) -> [usize; MAX_DIM] {
    let mut out = [0; MAX_DIM];
    let mut rest = idx;
    for o in out.iter_mut().take(dim) {
        *o = rest % side;
        rest /= side;
    }
    out
}

/// The symmetric matrix `A^κ_hom` with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedTensor {
    pub dim: usize,
    pub kappa: f64,
    /// Normalized by `κ^-(d+2)`; only the leading `dim × dim` block is used.
    pub matrix: [[f64; MAX_DIM]; MAX_DIM],
    /// Unnormalized minima for `e_1, .., e_d` followed by `e_i + e_j`, `i < j`.
    pub raw_min: Vec<f64>,
    /// Total conjugate-gradient iterations over all solves.
    pub iterations: usize,
    /// Largest final relative residual over all solves.
    pub residual: f64,
}

impl HomogenizedTensor {
    pub fn normalization(&self) -> &'static str {
        NORMALIZATION
    }

    /// `⟨A ξ, ξ⟩`.
    pub fn quadratic_form(&self, xi: &[f64]) -> f64 {
        let mut acc = 0.0;
        for a in 0..self.dim {
            for b in 0..self.dim {
                acc += xi[a] * self.matrix[a][b] * xi[b];
            }
        }
        acc
    }

    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.dim {
            for b in 0..self.dim {
                worst = worst.max(libm::fabs(self.matrix[a][b] - self.matrix[b][a]));
            }
        }
        worst
    }

    /// Eigenvalues in ascending order (cyclic Jacobi rotations).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.dim;
        let mut a = self.matrix;
        for _ in 0..64 {
            let mut off = 0.0;
            for p in 0..d {
                for q in p + 1..d {
                    off += a[p][q] * a[p][q];
                }
            }
            if off < 1e-30 {
                break;
            }
            for p in 0..d {
                for q in p + 1..d {
                    if a[p][q] == 0.0 {
                        continue;
                    }
                    let theta = 0.5 * libm::atan2(2.0 * a[p][q], a[q][q] - a[p][p]);
                    let (s, c) = (libm::sin(theta), libm::cos(theta));
                    for k in 0..d {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..d {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..d).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ev
    }

    /// `max_i |A_ii − mean| / mean` together with `max_{i≠j} |A_ij| / mean`.
    pub fn anisotropy(&self) -> (f64, f64) {
        let d = self.dim;
        let mean = (0..d).map(|i| self.matrix[i][i]).sum::<f64>() / d as f64;
        let mut diag: f64 = 0.0;
        let mut off: f64 = 0.0;
        for i in 0..d {
            diag = diag.max(libm::fabs(self.matrix[i][i] - mean) / mean);
            for j in 0..d {
                if i != j {
                    off = off.max(libm::fabs(self.matrix[i][j]) / mean);
                }
            }
        }
        (diag, off)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::InclusionShape;
    use core::f64::consts::PI;

    fn ball(c: f64) -> PerforatedSet {
        PerforatedSet::new(InclusionShape::ball(c), 2).unwrap()
    }

    fn indicator() -> RadialKernel {
        RadialKernel::indicator(1.0, 2).unwrap()
    }

    #[test]
    fn zero_direction_gives_zero() {
        let cell = CellDiscretization::new(&ball(0.3), &indicator(), 2.0, 8, CellOptions::default()).unwrap();
        let r = cell.minimize(&[0.0, 0.0]).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.corrector.iter().all(|&v| v == 0.0));
    }

    /// Q(0) from an explicit enumeration of the pairs `(x_i, y_j + k)`.
    fn brute_force_q0(cell: &CellDiscretization, kernel: &RadialKernel, xi: &[f64]) -> f64 {
        let m = cell.resolution();
        let h = 1.0 / m as f64;
        let kappa = cell.kappa();
        let kmax = (kernel.support_radius() * kappa).ceil() as i64 + 1;
        let mut acc = 0.0;
        for a in cell.nodes() {
            for b in cell.nodes() {
                for k0 in -kmax..=kmax {
                    for k1 in -kmax..=kmax {
                        let dx = [
                            (a[0] as f64 - b[0] as f64) * h - k0 as f64,
                            (a[1] as f64 - b[1] as f64) * h - k1 as f64,
                        ];
                        if dx == [0.0, 0.0] {
                            continue;
                        }
                        let w = kernel.cell_average(&[dx[0] / kappa, dx[1] / kappa], 0.5 * h / kappa);
                        let s = xi[0] * dx[0] + xi[1] * dx[1];
                        acc += w * s * s;
                    }
                }
            }
        }
        acc * h.powi(4)
    }

    #[test]
    fn no_corrector_value_matches_brute_force() {
        let kernel = indicator();
        let cell = CellDiscretization::new(&ball(0.3), &kernel, 1.5, 8, CellOptions::default()).unwrap();
        for xi in [[1.0, 0.0], [0.3, -0.7]] {
            let fast = cell.no_corrector_value(&xi).unwrap();
            let slow = brute_force_q0(&cell, &kernel, &xi);
            assert!((fast - slow).abs() < 1e-12 * slow, "{fast} vs {slow}");
            assert!((cell.quadratic(&xi, &alloc::vec![0.0; cell.len()]).unwrap() - fast).abs() < 1e-12 * fast);
        }
    }

    #[test]
    fn gradient_vanishes_at_minimizer() {
        let cell = CellDiscretization::new(&ball(0.3), &indicator(), 1.2, 12, CellOptions::default()).unwrap();
        let xi = [1.0, 0.5];
        let r = cell.minimize(&xi).unwrap();
        let grad = cell.gradient(&xi, &r.corrector).unwrap();
        let q0 = cell.no_corrector_value(&xi).unwrap();
        assert!(grad.iter().map(|g| g.abs()).fold(0.0, f64::max) < 1e-8 * q0);
        assert!((cell.quadratic(&xi, &r.corrector).unwrap() - r.value).abs() < 1e-9 * q0);
        assert!(r.value <= q0);
    }

    #[test]
    fn full_cell_recovers_bbm_constant() {
        let set = PerforatedSet::new(InclusionShape::full_cell(1, 2), 2).unwrap();
        let cell = CellDiscretization::new(&set, &indicator(), 1.0, 16, CellOptions::default()).unwrap();
        let xi = [1.0, 0.0];
        let q0 = cell.no_corrector_value(&xi).unwrap();
        let grad = cell.gradient(&xi, &alloc::vec![0.0; cell.len()]).unwrap();
        assert!(grad.iter().all(|g| g.abs() <= 1e-12 * q0));
        let r = cell.minimize(&xi).unwrap();
        assert!(r.residual <= 1e-10);
        assert!((r.value - q0).abs() <= 1e-10 * q0);
        let t = cell.homogenized_tensor().unwrap();
        let c_phi = PI / 4.0;
        assert!((t.matrix[0][0] - c_phi).abs() < 0.01 * c_phi, "{:?}", t.matrix);
        assert!(t.matrix[0][1].abs() < 1e-12);
    }

    #[test]
    fn disconnected_regime_has_zero_minimum() {
        // κ < D₀ = 0.4: no pair reaches another inclusion
        let cell = CellDiscretization::new(&ball(0.3), &indicator(), 0.3, 16, CellOptions::default()).unwrap();
        let r = cell.minimize(&[1.0, 0.0]).unwrap();
        let q0 = cell.no_corrector_value(&[1.0, 0.0]).unwrap();
        assert!(q0 > 0.0);
        assert!(r.value < 1e-9 * q0, "{} vs {}", r.value, q0);
    }

    #[test]
    fn resolution_guard() {
        let r = homogenized_tensor(&ball(0.25), &indicator(), 2.0, 8, CellOptions::default());
        assert!(matches!(r, Err(CellError::Resolution { .. })));
    }

    #[test]
    fn eigenvalues_of_known_matrix() {
        let t = HomogenizedTensor {
            dim: 2,
            kappa: 1.0,
            matrix: [[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0; 3]],
            raw_min: Vec::new(),
            iterations: 0,
            residual: 0.0,
        };
        let ev = t.eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }
}
