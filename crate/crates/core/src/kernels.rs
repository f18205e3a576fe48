//! Radial convolution kernels `φ(ξ) = φ₀(|ξ|)` with nonincreasing profiles.
//!
//! Besides pointwise evaluation this module computes the second moments that
//! govern every limit constant in the crate, the tail moments that bound the
//! degenerate regime, the staircase (simple-function) approximations of a
//! profile, and cell averages of the kernel used as quadrature weights on
//! uniform lattices.

use alloc::vec::Vec;
use core::f64::consts::PI;
use thiserror::Error;

use crate::quadrature::{self, QuadError};

const MOMENT_REL_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kernel dimension must be 1, 2 or 3, got {0}")]
    Dimension(usize),
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("tabulated profile: {0}")]
    InvalidTable(&'static str),
    #[error("second moment of the kernel diverges or failed to converge")]
    DivergentMoment,
    #[error("profile is unbounded at the origin; staircase approximation needs a bounded profile")]
    UnboundedProfile,
    #[error("staircase level must be positive")]
    InvalidLevel,
}

/// Shape of the radial profile `φ₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `φ₀ = χ_[0,s)`.
    Indicator { s: f64 },
    /// `φ₀(t) = e^{-λt}`.
    Exponential { lambda: f64 },
    /// Right-constant interpolation of nonincreasing samples: `φ₀(t) = phi[i]`
    /// on `[t[i], t[i+1])`, `phi[0]` below `t[0]`, and zero from the last
    /// abscissa on (which is the support radius).
    Tabulated { t: Vec<f64>, phi: Vec<f64> },
}

/// A radial kernel in dimension `d ∈ {1, 2, 3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialKernel {
    profile: Profile,
    dim: usize,
}

/// Surface measure of the unit sphere in `R^d`.
pub fn sphere_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => f64::NAN,
    }
}

/// Volume of the unit ball in `R^d`.
pub fn ball_volume(dim: usize) -> f64 {
    sphere_measure(dim) / dim as f64
}

fn check_dim(dim: usize) -> Result<(), KernelError> {
    if (1..=crate::MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(KernelError::Dimension(dim))
    }
}

impl RadialKernel {
    pub fn indicator(s: f64, dim: usize) -> Result<Self, KernelError> {
        check_dim(dim)?;
        if !(s.is_finite() && s > 0.0) {
            return Err(KernelError::InvalidParameter("indicator radius s must be positive and finite"));
        }
        Ok(Self { profile: Profile::Indicator { s }, dim })
    }

    pub fn exponential(lambda: f64, dim: usize) -> Result<Self, KernelError> {
        check_dim(dim)?;
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(KernelError::InvalidParameter("exponential rate lambda must be positive and finite"));
        }
        Ok(Self { profile: Profile::Exponential { lambda }, dim })
    }

    /// Builds a tabulated profile. Abscissae must be nonnegative and strictly
    /// increasing; values nonnegative and nonincreasing. The first value may be
    /// `+∞` (an unbounded profile), in which case moments will diverge.
    pub fn tabulated(t: Vec<f64>, phi: Vec<f64>, dim: usize) -> Result<Self, KernelError> {
        check_dim(dim)?;
        if t.len() != phi.len() {
            return Err(KernelError::InvalidTable("t and phi0 columns differ in length"));
        }
        if t.len() < 2 {
            return Err(KernelError::InvalidTable("at least two samples are required"));
        }
        if t.iter().any(|v| !v.is_finite()) || t[0] < 0.0 {
            return Err(KernelError::InvalidTable("abscissae must be finite and nonnegative"));
        }
        if t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(KernelError::InvalidTable("abscissae must be strictly increasing"));
        }
        if phi.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(KernelError::InvalidTable("profile values must be nonnegative numbers"));
        }
        if phi[1..].iter().any(|v| v.is_infinite()) {
            return Err(KernelError::InvalidTable("only the first profile value may be infinite"));
        }
        if phi.windows(2).any(|w| w[1] > w[0]) {
            return Err(KernelError::InvalidTable("profile must be nonincreasing"));
        }
        Ok(Self { profile: Profile::Tabulated { t, phi }, dim })
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same profile in another dimension.
    pub fn with_dim(&self, dim: usize) -> Result<Self, KernelError> {
        check_dim(dim)?;
        Ok(Self { profile: self.profile.clone(), dim })
    }

    /// `φ₀(t)` for `t ≥ 0`.
    pub fn profile_value(&self, t: f64) -> f64 {
        match &self.profile {
            Profile::Indicator { s } => {
                if t < *s {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Exponential { lambda } => libm::exp(-lambda * t),
            Profile::Tabulated { t: ts, phi } => {
                let last = ts.len() - 1;
                if t >= ts[last] {
                    return 0.0;
                }
                // number of abscissae <= t
                let idx = ts.partition_point(|&x| x <= t);
                if idx == 0 {
                    phi[0]
                } else {
                    phi[idx - 1]
                }
            }
        }
    }

    /// `φ(ξ) = φ₀(|ξ|)`.
    pub fn evaluate(&self, xi: &[f64]) -> f64 {
        debug_assert_eq!(xi.len(), self.dim);
        self.profile_value(crate::norm(xi))
    }

    /// Radius beyond which the kernel vanishes; `+∞` for unbounded support.
    pub fn support_radius(&self) -> f64 {
        match &self.profile {
            Profile::Indicator { s } => *s,
            Profile::Exponential { .. } => f64::INFINITY,
            Profile::Tabulated { t, .. } => t[t.len() - 1],
        }
    }

    pub fn has_compact_support(&self) -> bool {
        self.support_radius().is_finite()
    }

    /// Radii where `φ₀` is discontinuous, ascending.
    pub fn jumps(&self) -> Vec<f64> {
        match &self.profile {
            Profile::Indicator { s } => alloc::vec![*s],
            Profile::Exponential { .. } => Vec::new(),
            Profile::Tabulated { t, phi } => {
                let mut out = Vec::new();
                for i in 1..t.len() {
                    let left = phi[i - 1];
                    let right = if i == t.len() - 1 { 0.0 } else { phi[i] };
                    if left != right {
                        out.push(t[i]);
                    }
                }
                out
            }
        }
    }

    /// `∫_{r}^{∞} φ₀(t) t^{p} dt`, split at the profile's breakpoints.
    fn radial_moment_from(&self, r: f64, p: f64) -> Result<f64, KernelError> {
        let integrand = |t: f64| {
            let v = self.profile_value(t);
            if v == 0.0 { 0.0 } else { v * libm::pow(t, p) }
        };
        let mut breaks: Vec<f64> = alloc::vec![r];
        if let Profile::Tabulated { t, .. } = &self.profile {
            breaks.extend(t.iter().copied().filter(|&x| x > r));
        } else {
            breaks.extend(self.jumps().into_iter().filter(|&x| x > r));
        }
        let map_err = |_: QuadError| KernelError::DivergentMoment;
        let mut total = 0.0;
        for w in breaks.windows(2) {
            total += quadrature::integrate(integrand, w[0], w[1], MOMENT_REL_TOL, 0.0).map_err(map_err)?.value;
        }
        if !self.has_compact_support() {
            let start = *breaks.last().unwrap();
            total += quadrature::integrate_to_infinity(integrand, start, MOMENT_REL_TOL, 1e-300)
                .map_err(map_err)?
                .value;
        }
        if !total.is_finite() {
            return Err(KernelError::DivergentMoment);
        }
        Ok(total)
    }

    /// `C_φ = (1/d) ∫ φ(ξ)|ξ|² dξ`.
    pub fn c_phi(&self) -> Result<f64, KernelError> {
        Ok(sphere_measure(self.dim) / self.dim as f64 * self.radial_moment_from(0.0, self.dim as f64 + 1.0)?)
    }

    /// `∫_{|ξ|>R} φ(ξ)|ξ|² dξ`; equals `d · C_φ` at `R = 0`.
    pub fn tail_second_moment(&self, r: f64) -> Result<f64, KernelError> {
        if !(r >= 0.0) {
            return Err(KernelError::InvalidParameter("tail radius must be nonnegative"));
        }
        if r >= self.support_radius() {
            return Ok(0.0);
        }
        Ok(sphere_measure(self.dim) * self.radial_moment_from(r, self.dim as f64 + 1.0)?)
    }

    /// `∫ φ(ξ)(1 + |ξ|²) dξ`.
    pub fn growth_moment(&self) -> Result<f64, KernelError> {
        let d = self.dim as f64;
        let total = sphere_measure(self.dim) * (self.radial_moment_from(0.0, d - 1.0)? + self.radial_moment_from(0.0, d + 1.0)?);
        if total.is_finite() {
            Ok(total)
        } else {
            Err(KernelError::DivergentMoment)
        }
    }

    /// Smallest radius `R` (to 1e-9 relative) with
    /// `tail_second_moment(R) <= rel_tol * d * C_φ`. Compactly supported
    /// kernels return their support radius.
    pub fn truncation_radius(&self, rel_tol: f64) -> Result<f64, KernelError> {
        if self.has_compact_support() {
            return Ok(self.support_radius());
        }
        let full = self.tail_second_moment(0.0)?;
        let target = rel_tol * full;
        let mut hi = 1.0;
        while self.tail_second_moment(hi)? > target {
            hi *= 2.0;
            if hi > 1e12 {
                return Err(KernelError::DivergentMoment);
            }
        }
        let mut lo = 0.0;
        while hi - lo > 1e-9 * hi {
            let mid = 0.5 * (lo + hi);
            if self.tail_second_moment(mid)? > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    /// `sup{t : φ₀(t) ≥ level}`, zero for an empty set.
    fn superlevel_radius(&self, level: f64) -> f64 {
        match &self.profile {
            Profile::Indicator { s } => {
                if level <= 1.0 {
                    *s
                } else {
                    0.0
                }
            }
            Profile::Exponential { lambda } => {
                if level <= 1.0 {
                    -libm::log(level) / lambda
                } else {
                    0.0
                }
            }
            Profile::Tabulated { t, phi } => {
                // intervals [t_i, t_{i+1}) carry phi_i for i < last
                let last = t.len() - 1;
                match (0..last).rev().find(|&i| phi[i] >= level) {
                    Some(i) => t[i + 1],
                    None => 0.0,
                }
            }
        }
    }

    /// Staircase approximation at level `n`: radii
    /// `r_k = sup{t : φ₀(t) ≥ (k+1) 2^{-n}}` for `k = 0..=n 2^n`, weight `2^{-n}`.
    /// For compactly supported kernels the upper variant adds one more term
    /// `2^{-n} χ_[0,R)` with `R` the support radius.
    pub fn staircase(&self, n: u32) -> Result<StaircaseKernel, KernelError> {
        if n == 0 || n > 24 {
            return Err(KernelError::InvalidLevel);
        }
        if !self.profile_value(0.0).is_finite() {
            return Err(KernelError::UnboundedProfile);
        }
        let weight = libm::ldexp(1.0, -(n as i32));
        let count = (n as usize) << n;
        let radii = (0..=count).map(|k| self.superlevel_radius((k + 1) as f64 * weight)).collect();
        let upper_radius = self.has_compact_support().then(|| self.support_radius());
        Ok(StaircaseKernel { radii, weight, level: n, upper_radius, dim: self.dim })
    }

    /// Average of `φ` over the axis-aligned box `center ± half_width`.
    ///
    /// Boxes crossing a discontinuity of the profile are supersampled; elsewhere
    /// the center value is used (midpoint rule).
    pub fn cell_average(&self, center: &[f64], half_width: f64) -> f64 {
        let dim = center.len();
        let mut near2 = 0.0;
        let mut far2 = 0.0;
        for &c in center {
            let a = libm::fabs(c);
            let lo = (a - half_width).max(0.0);
            let hi = a + half_width;
            near2 += lo * lo;
            far2 += hi * hi;
        }
        let (rmin, rmax) = (libm::sqrt(near2), libm::sqrt(far2));
        if rmin >= self.support_radius() {
            return 0.0;
        }
        let crosses = self.jumps().iter().any(|&j| rmin < j && j < rmax);
        if !crosses {
            return self.evaluate(center);
        }
        let per_axis: usize = match dim {
            1 => 256,
            2 => 32,
            _ => 12,
        };
        let total = per_axis.pow(dim as u32);
        let mut acc = 0.0;
        let mut p = [0.0; crate::MAX_DIM];
        for idx in 0..total {
            let mut rest = idx;
            for a in 0..dim {
                let j = rest % per_axis;
                rest /= per_axis;
                let off = ((j as f64 + 0.5) / per_axis as f64 - 0.5) * 2.0 * half_width;
                p[a] = center[a] + off;
            }
            acc += self.evaluate(&p[..dim]);
        }
        acc / total as f64
    }
}

/// Simple-function approximation `2^{-n} Σ_k χ_[0, r_k)` of a kernel profile.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseKernel {
    /// Nonincreasing radii `r_k`.
    pub radii: Vec<f64>,
    /// `2^{-n}`.
    pub weight: f64,
    pub level: u32,
    /// Support radius added by the upper variant; `None` for unbounded support.
    pub upper_radius: Option<f64>,
    dim: usize,
}

impl StaircaseKernel {
    /// Lower staircase value at `t`; never exceeds `φ₀(t)`.
    pub fn lower_value(&self, t: f64) -> f64 {
        self.weight * self.radii.iter().filter(|&&r| t < r).count() as f64
    }

    /// Upper staircase value, available for compactly supported kernels.
    pub fn upper_value(&self, t: f64) -> Option<f64> {
        self.upper_radius.map(|r| self.lower_value(t) + if t < r { self.weight } else { 0.0 })
    }

    /// The staircase as a tabulated kernel (lower or upper variant).
    pub fn to_kernel(&self, upper: bool) -> Result<RadialKernel, KernelError> {
        let mut radii = self.radii.clone();
        if upper {
            radii.push(self.upper_radius.ok_or(KernelError::InvalidParameter("upper staircase needs compact support"))?);
        }
        let mut breaks: Vec<f64> = radii.iter().copied().filter(|&r| r > 0.0).collect();
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup();
        if breaks.is_empty() {
            return RadialKernel::tabulated(alloc::vec![0.0, 1.0], alloc::vec![0.0, 0.0], self.dim);
        }
        let mut t = alloc::vec![0.0];
        t.extend(breaks.iter().copied());
        let phi = t.iter().map(|&x| self.weight * radii.iter().filter(|&&r| x < r).count() as f64).collect();
        RadialKernel::tabulated(t, phi, self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn evaluate_examples() {
        let ind = RadialKernel::indicator(1.0, 2).unwrap();
        assert_eq!(ind.evaluate(&[0.5, 0.0]), 1.0);
        assert_eq!(ind.evaluate(&[1.5, 0.0]), 0.0);
        assert_eq!(ind.evaluate(&[1.0, 0.0]), 0.0);
        let exp = RadialKernel::exponential(1.0, 2).unwrap();
        assert_relative_eq!(exp.evaluate(&[3.0, 4.0]), (-5.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(exp.evaluate(&[3.0, 4.0]), 6.7379e-3, max_relative = 1e-4);
    }

    #[test]
    fn c_phi_examples() {
        let k2 = RadialKernel::indicator(1.0, 2).unwrap();
        assert_relative_eq!(k2.c_phi().unwrap(), PI / 4.0, max_relative = 1e-10);
        let k1 = RadialKernel::indicator(1.0, 1).unwrap();
        assert_relative_eq!(k1.c_phi().unwrap(), 2.0 / 3.0, max_relative = 1e-10);
        let zero = RadialKernel::tabulated(alloc::vec![0.0, 2.0], alloc::vec![0.0, 0.0], 2).unwrap();
        assert_eq!(zero.c_phi().unwrap(), 0.0);
        // (2π/2) ∫ e^{-t} t^3 dt = 6π
        let e2 = RadialKernel::exponential(1.0, 2).unwrap();
        assert_relative_eq!(e2.c_phi().unwrap(), 6.0 * PI, max_relative = 1e-9);
    }

    #[test]
    fn tail_examples() {
        let k = RadialKernel::indicator(1.0, 2).unwrap();
        assert_eq!(k.tail_second_moment(1.0).unwrap(), 0.0);
        assert_relative_eq!(k.tail_second_moment(0.0).unwrap(), PI / 2.0, max_relative = 1e-10);
        let e = RadialKernel::exponential(1.0, 1).unwrap();
        let mut prev = f64::INFINITY;
        for r in [0.0, 1.0, 5.0, 20.0, 60.0] {
            let t = e.tail_second_moment(r).unwrap();
            assert!(t <= prev);
            prev = t;
        }
        assert!(prev < 1e-20);
        // closed form 2 e^{-R}(R² + 2R + 2) in d = 1
        let r: f64 = 3.0;
        assert_relative_eq!(
            e.tail_second_moment(r).unwrap(),
            2.0 * (-r).exp() * (r * r + 2.0 * r + 2.0),
            max_relative = 1e-9
        );
    }

    #[test]
    fn unbounded_profile_errors() {
        let k = RadialKernel::tabulated(alloc::vec![0.0, 0.5, 1.0], alloc::vec![f64::INFINITY, 1.0, 0.0], 2).unwrap();
        assert_eq!(k.c_phi(), Err(KernelError::DivergentMoment));
        assert_eq!(k.staircase(2), Err(KernelError::UnboundedProfile));
    }

    #[test]
    fn staircase_indicator() {
        let k = RadialKernel::indicator(1.0, 2).unwrap();
        let s = k.staircase(3).unwrap();
        assert_eq!(s.radii.len(), 3 * 8 + 1);
        for (i, &r) in s.radii.iter().enumerate() {
            assert_eq!(r, if i <= 7 { 1.0 } else { 0.0 });
        }
        for t in [0.0, 0.3, 0.999, 1.0, 2.0] {
            assert_eq!(s.lower_value(t), k.profile_value(t));
        }
        assert_eq!(k.staircase(1).unwrap().radii.len(), 3);
    }

    #[test]
    fn staircase_exponential_uniform() {
        let k = RadialKernel::exponential(1.0, 2).unwrap();
        for n in 1..=8 {
            let s = k.staircase(n).unwrap();
            let gap = 2f64.powi(-(n as i32));
            for i in 0..=2000 {
                let t = 10.0 * i as f64 / 2000.0;
                let lo = s.lower_value(t);
                assert!(lo <= k.profile_value(t) + 1e-15);
                assert!(k.profile_value(t) - lo <= gap + 1e-15);
            }
        }
    }

    #[test]
    fn tabulated_interpolation_is_right_constant() {
        let k = RadialKernel::tabulated(alloc::vec![0.0, 1.0, 2.0], alloc::vec![3.0, 1.0, 0.5], 1).unwrap();
        assert_eq!(k.profile_value(0.5), 3.0);
        assert_eq!(k.profile_value(1.0), 1.0);
        assert_eq!(k.profile_value(1.999), 1.0);
        assert_eq!(k.profile_value(2.0), 0.0);
        assert_eq!(k.support_radius(), 2.0);
        assert!(RadialKernel::tabulated(alloc::vec![0.0, 1.0], alloc::vec![1.0, 2.0], 1).is_err());
        assert!(RadialKernel::tabulated(alloc::vec![0.0, 0.0], alloc::vec![1.0, 1.0], 1).is_err());
    }

    #[test]
    fn cell_average_of_indicator_matches_area() {
        let k = RadialKernel::indicator(1.0, 2).unwrap();
        assert_eq!(k.cell_average(&[0.0, 0.0], 0.1), 1.0);
        assert_eq!(k.cell_average(&[3.0, 0.0], 0.1), 0.0);
        // box [0.9,1.1]x[-0.1,0.1] straddles the unit circle roughly in half
        let v = k.cell_average(&[1.0, 0.0], 0.1);
        assert!((v - 0.5).abs() < 0.03, "{v}");
    }

    #[test]
    fn truncation_radius_meets_tolerance() {
        let k = RadialKernel::exponential(1.0, 2).unwrap();
        let r = k.truncation_radius(1e-6).unwrap();
        let full = k.tail_second_moment(0.0).unwrap();
        assert!(k.tail_second_moment(r).unwrap() <= 1e-6 * full * (1.0 + 1e-9));
        assert!(k.tail_second_moment(r * 0.99).unwrap() > 1e-6 * full);
        assert_eq!(RadialKernel::indicator(2.0, 2).unwrap().truncation_radius(1e-6).unwrap(), 2.0);
    }

    #[test]
    fn growth_moment_is_finite() {
        let k = RadialKernel::exponential(2.0, 3).unwrap();
        assert!(k.growth_moment().unwrap().is_finite());
    }
}
