//! Centered multivariate normal CDFs in one, two and three dimensions, plus
//! the univariate quantile.
//!
//! `phi1` is complementary-error-function based. `phi2` integrates the
//! conditional univariate CDF with deterministic adaptive Simpson quadrature;
//! `phi3` runs the same scheme one level up (outer integral over the first
//! coordinate of `phi2` of the conditional bivariate law). No randomized
//! integration is used anywhere, so results are bit-reproducible.
//!
//! Thresholds accept `f64::INFINITY` / `f64::NEG_INFINITY` as exact
//! "unbounded" sentinels: infinite coordinates are marginalized away (or
//! force probability 0) before any quadrature runs, so marginalization is
//! exact rather than a large-float approximation. A coordinate with zero
//! variance is a point mass at 0 and its CDF is the unit step.

use thiserror::Error;

use crate::linalg::{sym2_eigenvalues, sym3_eigenvalues};

#[derive(Debug, Error, PartialEq)]
pub enum GaussianError {
    #[error("variance must be nonnegative")]
    NegativeVariance,
    #[error("covariance matrix is not symmetric positive-semidefinite")]
    NotPsd,
    #[error("argument out of range")]
    OutOfRange,
    #[error("covariance is singular in a way that does not reduce to a marginal or step function")]
    SingularCovariance,
}

/// Standardized truncation radius: the normal tail mass beyond 8.5 sigma is
/// ~9.5e-18, far below every tolerance in this module.
const TRUNC: f64 = 8.5;

/// Absolute quadrature tolerances; the public contracts are 1e-10 (phi2) and
/// 1e-7 (phi3), budgeted as 1e-8 outer / 1e-9 inner for phi3.
const PHI2_TOL: f64 = 2e-12;
const PHI3_OUTER_TOL: f64 = 1e-8;
const PHI3_INNER_TOL: f64 = 1e-9;

/// Relative variance floor below which a coordinate is treated as a point
/// mass at 0.
const ZERO_VAR_REL: f64 = 1e-18;

/// Eigenvalue threshold below which a 3x3 interior is considered singular.
const SINGULAR_EIG: f64 = 1e-10;

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Centered normal CDF at `t` with variance `var`.
///
/// `var == 0` degenerates to the unit step at 0. Absolute error <= 1e-14.
pub fn phi1(t: f64, var: f64) -> Result<f64, GaussianError> {
    if var < 0.0 || var.is_nan() {
        return Err(GaussianError::NegativeVariance);
    }
    if t.is_nan() {
        return Err(GaussianError::OutOfRange);
    }
    if var == 0.0 {
        return Ok(if t >= 0.0 { 1.0 } else { 0.0 });
    }
    if t == f64::INFINITY {
        return Ok(1.0);
    }
    if t == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok(std_normal_cdf(t / var.sqrt()))
}

/// Inverse of [`phi1`] in `t` for fixed `var > 0`.
///
/// Bracketed bisection on the monotone CDF; the returned `t` satisfies
/// `|phi1(t, var) - q| <= 1e-12`.
pub fn phi1_inv(q: f64, var: f64) -> Result<f64, GaussianError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(GaussianError::OutOfRange);
    }
    if var <= 0.0 || var.is_nan() {
        return Err(GaussianError::NegativeVariance);
    }
    let s = var.sqrt();
    let (mut lo, mut hi) = (-50.0 * s, 50.0 * s);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if std_normal_cdf(mid / s) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * s {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// 3x3 dispersion/covariance matrix, validated symmetric and PSD
/// (eigenvalue slack -1e-12, scaled by the matrix magnitude).
#[derive(Debug, Clone, PartialEq)]
pub struct Cov3 {
    m: [[f64; 3]; 3],
}

impl Cov3 {
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self, GaussianError> {
        let scale = m.iter().flatten().map(|v| v.abs()).fold(0.0f64, f64::max);
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GaussianError::NotPsd);
        }
        let sym_tol = 1e-12 * scale.max(1.0);
        for i in 0..3 {
            for j in (i + 1)..3 {
                if (m[i][j] - m[j][i]).abs() > sym_tol {
                    return Err(GaussianError::NotPsd);
                }
            }
        }
        let eig_tol = 1e-12 * scale.max(1.0);
        if sym3_eigenvalues(&m)[0] < -eig_tol {
            return Err(GaussianError::NotPsd);
        }
        Ok(Self { m })
    }

    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn min_eigenvalue(&self) -> f64 {
        sym3_eigenvalues(&self.m)[0]
    }
}

/// Nonempty ordered subset of {1, 2, 3}: which coordinates a marginal keeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginalIndex(Vec<usize>);

impl MarginalIndex {
    pub fn new(coords: &[usize]) -> Result<Self, GaussianError> {
        let mut v: Vec<usize> = coords.to_vec();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() || v.iter().any(|&c| !(1..=3).contains(&c)) {
            return Err(GaussianError::OutOfRange);
        }
        Ok(Self(v))
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }
}

/// Principal submatrix returned by [`marginal`].
#[derive(Debug, Clone, PartialEq)]
pub enum SmallCov {
    D1(f64),
    D2([[f64; 2]; 2]),
    D3([[f64; 3]; 3]),
}

/// Principal submatrix of `cov` on the kept coordinates.
pub fn marginal(cov: &Cov3, keep: &MarginalIndex) -> SmallCov {
    let m = cov.entries();
    let idx: Vec<usize> = keep.coords().iter().map(|&c| c - 1).collect();
    match idx.len() {
        1 => SmallCov::D1(m[idx[0]][idx[0]]),
        2 => SmallCov::D2([
            [m[idx[0]][idx[0]], m[idx[0]][idx[1]]],
            [m[idx[1]][idx[0]], m[idx[1]][idx[1]]],
        ]),
        _ => SmallCov::D3(*m),
    }
}

/// Bivariate centered normal CDF `Pr{Y1 < t1, Y2 < t2}`.
///
/// Absolute error <= 1e-10. Degenerate correlations (|rho| = 1) reduce to the
/// binding univariate coordinate; zero-variance coordinates reduce to steps.
pub fn phi2(t1: f64, t2: f64, cov: &[[f64; 2]; 2]) -> Result<f64, GaussianError> {
    phi2_with_tol(t1, t2, cov, PHI2_TOL)
}

fn phi2_with_tol(t1: f64, t2: f64, cov: &[[f64; 2]; 2], tol: f64) -> Result<f64, GaussianError> {
    let scale = cov.iter().flatten().map(|v| v.abs()).fold(0.0f64, f64::max);
    if cov.iter().flatten().any(|v| !v.is_finite()) {
        return Err(GaussianError::NotPsd);
    }
    let slack = 1e-12 * scale.max(1.0);
    if (cov[0][1] - cov[1][0]).abs() > slack {
        return Err(GaussianError::NotPsd);
    }
    if sym2_eigenvalues(cov)[0] < -slack {
        return Err(GaussianError::NotPsd);
    }
    if t1.is_nan() || t2.is_nan() {
        return Err(GaussianError::OutOfRange);
    }

    let v1 = cov[0][0].max(0.0);
    let v2 = cov[1][1].max(0.0);

    if t1 == f64::NEG_INFINITY || t2 == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if t1 == f64::INFINITY {
        return phi1(t2, v2);
    }
    if t2 == f64::INFINITY {
        return phi1(t1, v1);
    }
    // Point-mass coordinates.
    if v1 <= ZERO_VAR_REL * scale || v1 == 0.0 {
        return Ok(if t1 >= 0.0 { phi1(t2, v2)? } else { 0.0 });
    }
    if v2 <= ZERO_VAR_REL * scale || v2 == 0.0 {
        return Ok(if t2 >= 0.0 { phi1(t1, v1)? } else { 0.0 });
    }

    let s1 = v1.sqrt();
    let s2 = v2.sqrt();
    let rho = (cov[0][1] / (s1 * s2)).clamp(-1.0, 1.0);
    let h1 = t1 / s1;
    let h2 = t2 / s2;
    if rho >= 1.0 - 1e-12 {
        // Y2 = (s2/s1) Y1 almost surely.
        return Ok(std_normal_cdf(h1.min(h2)));
    }
    if rho <= -1.0 + 1e-12 {
        // Y2 = -(s2/s1) Y1: the constraints become an interval on Y1.
        return Ok((std_normal_cdf(h1) + std_normal_cdf(h2) - 1.0).max(0.0));
    }

    if h1 < -TRUNC {
        return Ok(0.0);
    }
    let upper = h1.min(TRUNC);
    let denom = (1.0 - rho * rho).sqrt();
    let f = |x: f64| std_normal_pdf(x) * std_normal_cdf((h2 - rho * x) / denom);
    Ok(adaptive_simpson(&f, -TRUNC, upper, tol).clamp(0.0, 1.0))
}

/// Trivariate centered normal CDF `Pr{Y1 < t1, Y2 < t2, Y3 < t3}`.
///
/// Absolute error <= 1e-7. Infinite thresholds and zero-variance coordinates
/// are reduced exactly; a remaining singular 3x3 interior collapses through a
/// perfectly positively correlated pair when one exists and is otherwise
/// rejected with [`GaussianError::SingularCovariance`].
pub fn phi3(t1: f64, t2: f64, t3: f64, cov: &Cov3) -> Result<f64, GaussianError> {
    let m = *cov.entries();
    let t = [t1, t2, t3];
    if t.iter().any(|v| v.is_nan()) {
        return Err(GaussianError::OutOfRange);
    }
    if t.contains(&f64::NEG_INFINITY) {
        return Ok(0.0);
    }
    let scale = m.iter().flatten().map(|v| v.abs()).fold(0.0f64, f64::max);

    // Keep finite-threshold, positive-variance coordinates; each dropped
    // coordinate either marginalizes exactly (t = +inf, or point mass with
    // t >= 0) or forces probability 0 (point mass with t < 0).
    let mut active: Vec<usize> = Vec::with_capacity(3);
    for i in 0..3 {
        let vi = m[i][i].max(0.0);
        if vi <= ZERO_VAR_REL * scale || vi == 0.0 {
            if t[i] < 0.0 {
                return Ok(0.0);
            }
            continue;
        }
        if t[i] == f64::INFINITY {
            continue;
        }
        active.push(i);
    }
    match active.len() {
        0 => Ok(1.0),
        1 => {
            let i = active[0];
            phi1(t[i], m[i][i].max(0.0))
        }
        2 => {
            let (i, j) = (active[0], active[1]);
            let sub = [[m[i][i], m[i][j]], [m[j][i], m[j][j]]];
            phi2(t[i], t[j], &sub)
        }
        _ => {
            if sym3_eigenvalues(&m)[0] < SINGULAR_EIG {
                return phi3_collapse_singular(&t, &m);
            }
            phi3_quadrature(&t, &m)
        }
    }
}

/// Full-rank trivariate quadrature: outer integral over the first coordinate,
/// inner bivariate CDF of the conditional law.
fn phi3_quadrature(t: &[f64; 3], m: &[[f64; 3]; 3]) -> Result<f64, GaussianError> {
    let v1 = m[0][0];
    let s1 = v1.sqrt();
    let h1 = t[0] / s1;
    if h1 < -TRUNC {
        return Ok(0.0);
    }
    // E[Y_i | Y1 = s1 x] = (m[0][i]/s1) x; conditional covariance is the
    // Schur complement of the (1,1) entry.
    let b2 = m[0][1] / s1;
    let b3 = m[0][2] / s1;
    let mut cc = [
        [
            m[1][1] - m[0][1] * m[0][1] / v1,
            m[1][2] - m[0][1] * m[0][2] / v1,
        ],
        [
            m[1][2] - m[0][1] * m[0][2] / v1,
            m[2][2] - m[0][2] * m[0][2] / v1,
        ],
    ];
    cc[0][0] = cc[0][0].max(0.0);
    cc[1][1] = cc[1][1].max(0.0);
    // The Schur complement of a positive-definite matrix is itself
    // positive-definite, so this only fires on inconsistent rounding.
    phi2_with_tol(0.0, 0.0, &cc, 1e-3)?;

    let upper = h1.min(TRUNC);
    let f = |x: f64| {
        let inner = phi2_with_tol(t[1] - b2 * x, t[2] - b3 * x, &cc, PHI3_INNER_TOL).unwrap_or(0.0);
        std_normal_pdf(x) * inner
    };
    Ok(adaptive_simpson(&f, -TRUNC, upper, PHI3_OUTER_TOL).clamp(0.0, 1.0))
}

/// Singular 3x3 interior: collapse a perfectly positively correlated pair
/// onto its binding coordinate when possible.
fn phi3_collapse_singular(t: &[f64; 3], m: &[[f64; 3]; 3]) -> Result<f64, GaussianError> {
    for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let si = m[i][i].sqrt();
        let sj = m[j][j].sqrt();
        let rho = m[i][j] / (si * sj);
        if rho >= 1.0 - 1e-10 {
            // Y_j = (sj/si) Y_i: fold threshold j into i.
            let ti = t[i].min(t[j] * si / sj);
            let k = 3 - i - j;
            let sub = [[m[i][i], m[i][k]], [m[k][i], m[k][k]]];
            return phi2(ti, t[k], &sub);
        }
    }
    Err(GaussianError::SingularCovariance)
}

/// Deterministic adaptive Simpson integration to absolute tolerance `tol`.
///
/// The first `MIN_SPLITS` subdivision levels are unconditional: the
/// error-estimate acceptance heuristic is only trusted once narrow features
/// (near-degenerate conditional laws produce step-like integrands) cannot
/// hide between coarse nodes.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    const MIN_SPLITS: u32 = 5;
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 40, MIN_SPLITS)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    forced: u32,
) -> f64 {
    let mid = 0.5 * (a + b);
    let lm = 0.5 * (a + mid);
    let rm = 0.5 * (mid + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || (forced == 0 && delta.abs() <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    let forced = forced.saturating_sub(1);
    simpson_step(f, a, mid, fa, flm, fm, left, 0.5 * tol, depth - 1, forced)
        + simpson_step(f, mid, b, fm, frm, fb, right, 0.5 * tol, depth - 1, forced)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov2(v1: f64, c: f64, v2: f64) -> [[f64; 2]; 2] {
        [[v1, c], [c, v2]]
    }

    #[test]
    fn phi1_symmetry_and_limits() {
        assert_eq!(phi1(0.0, 1.0).unwrap(), 0.5);
        assert!((phi1(40.0, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(phi1(-40.0, 1.0).unwrap() < 1e-14);
        assert_eq!(phi1(f64::INFINITY, 2.0).unwrap(), 1.0);
        assert_eq!(phi1(f64::NEG_INFINITY, 2.0).unwrap(), 0.0);
        let t = 0.7;
        assert!((phi1(t, 1.0).unwrap() + phi1(-t, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(phi1(1.0, -1.0), Err(GaussianError::NegativeVariance));
    }

    #[test]
    fn phi1_degenerate_is_step() {
        assert_eq!(phi1(-1e-30, 0.0).unwrap(), 0.0);
        assert_eq!(phi1(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(phi1(0.5, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn phi1_inv_basics() {
        assert!(phi1_inv(0.5, 3.0).unwrap().abs() < 1e-12);
        let t = phi1_inv(0.9, 1.0).unwrap();
        assert!((t - 1.281552).abs() < 1e-6);
        assert!((phi1(t, 1.0).unwrap() - 0.9).abs() < 1e-12);
        // scale equivariance: quantile scales with sigma
        let t4 = phi1_inv(0.9, 4.0).unwrap();
        assert!((t4 - 2.0 * t).abs() < 1e-9);
        assert_eq!(phi1_inv(0.0, 1.0), Err(GaussianError::OutOfRange));
        assert_eq!(phi1_inv(1.0, 1.0), Err(GaussianError::OutOfRange));
    }

    #[test]
    fn phi2_independence_and_orthant() {
        let c = cov2(1.0, 0.0, 1.0);
        assert!((phi2(0.0, 0.0, &c).unwrap() - 0.25).abs() < 1e-10);
        // orthant probability with correlation: 1/4 + asin(rho) / (2 pi)
        let c = cov2(1.0, 0.5, 1.0);
        let expected = 0.25 + 0.5f64.asin() / (2.0 * std::f64::consts::PI);
        assert!((phi2(0.0, 0.0, &c).unwrap() - expected).abs() < 1e-10);
        let c = cov2(1.0, -0.3, 1.0);
        let expected = 0.25 + (-0.3f64).asin() / (2.0 * std::f64::consts::PI);
        assert!((phi2(0.0, 0.0, &c).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn phi2_marginalizes() {
        let c = cov2(2.0, 0.7, 0.5);
        for x in [-1.0, 0.0, 0.8] {
            let lim = phi2(40.0 * 2.0f64.sqrt(), x, &c).unwrap();
            assert!((lim - phi1(x, 0.5).unwrap()).abs() < 1e-10);
            let lim = phi2(f64::INFINITY, x, &c).unwrap();
            assert!((lim - phi1(x, 0.5).unwrap()).abs() < 1e-12);
        }
        assert_eq!(phi2(f64::NEG_INFINITY, 0.0, &c).unwrap(), 0.0);
    }

    #[test]
    fn phi2_degenerate_correlation() {
        // rho = 1, equal variances: P(Y < min(t1, t2)).
        let c = cov2(1.0, 1.0, 1.0);
        let v = phi2(0.3, -0.2, &c).unwrap();
        assert!((v - phi1(-0.2, 1.0).unwrap()).abs() < 1e-12);
        // rho = -1: interval probability.
        let c = cov2(1.0, -1.0, 1.0);
        let v = phi2(0.5, 0.5, &c).unwrap();
        let expected = 2.0 * phi1(0.5, 1.0).unwrap() - 1.0;
        assert!((v - expected).abs() < 1e-12);
        assert_eq!(phi2(0.5, -0.6, &c).unwrap(), 0.0);
    }

    #[test]
    fn phi2_rejects_non_psd() {
        assert_eq!(
            phi2(0.0, 0.0, &cov2(1.0, 2.0, 1.0)),
            Err(GaussianError::NotPsd)
        );
        assert_eq!(
            phi2(0.0, 0.0, &[[1.0, 0.2], [0.3, 1.0]]),
            Err(GaussianError::NotPsd)
        );
    }

    #[test]
    fn phi3_total_mass_and_independence() {
        let cov = Cov3::new([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert!((phi3(40.0, 40.0, 40.0, &cov).unwrap() - 1.0).abs() < 1e-7);
        assert!((phi3(0.0, 0.0, 0.0, &cov).unwrap() - 0.125).abs() < 1e-7);
        assert_eq!(
            phi3(f64::INFINITY, f64::INFINITY, f64::INFINITY, &cov).unwrap(),
            1.0
        );
    }

    #[test]
    fn phi3_equicorrelated_orthant() {
        // Pr{Y < 0} for standardized equicorrelated normals:
        // 1/8 + (3 asin(rho)) / (4 pi); rho = 1/2 gives exactly 1/4.
        let cov = Cov3::new([[1.0, 0.5, 0.5], [0.5, 1.0, 0.5], [0.5, 0.5, 1.0]]).unwrap();
        assert!((phi3(0.0, 0.0, 0.0, &cov).unwrap() - 0.25).abs() < 1e-7);
    }

    #[test]
    fn phi3_marginalization_ladder() {
        let cov = Cov3::new([[1.0, 0.3, 0.2], [0.3, 2.0, 0.5], [0.2, 0.5, 1.5]]).unwrap();
        let m = cov.entries();
        let sub = [[m[0][0], m[0][2]], [m[2][0], m[2][2]]];
        for (a, c) in [(0.4, -0.3), (-0.5, 0.9), (0.0, 0.0)] {
            let full = phi3(a, 40.0 * 2.0f64.sqrt(), c, &cov).unwrap();
            let two = phi2(a, c, &sub).unwrap();
            assert!((full - two).abs() < 2e-7, "{full} vs {two}");
            let exact = phi3(a, f64::INFINITY, c, &cov).unwrap();
            assert!((exact - two).abs() < 1e-9);
        }
    }

    #[test]
    fn phi3_zero_variance_reduces() {
        let cov = Cov3::new([[0.0, 0.0, 0.0], [0.0, 1.0, 0.2], [0.0, 0.2, 1.0]]).unwrap();
        let v = phi3(0.5, 0.1, -0.2, &cov).unwrap();
        let expect = phi2(0.1, -0.2, &[[1.0, 0.2], [0.2, 1.0]]).unwrap();
        assert!((v - expect).abs() < 1e-10);
        assert_eq!(phi3(-0.5, 0.1, -0.2, &cov).unwrap(), 0.0);
        // all-zero covariance: product of steps
        let z = Cov3::new([[0.0; 3]; 3]).unwrap();
        assert_eq!(phi3(0.0, 1.0, 2.0, &z).unwrap(), 1.0);
        assert_eq!(phi3(0.0, -1.0, 2.0, &z).unwrap(), 0.0);
    }

    #[test]
    fn phi3_singular_interior() {
        // Perfect +1 correlation between coordinates 1 and 2.
        let cov = Cov3::new([[1.0, 1.0, 0.1], [1.0, 1.0, 0.1], [0.1, 0.1, 1.0]]).unwrap();
        let v = phi3(0.4, 0.9, 0.2, &cov).unwrap();
        let expect = phi2(0.4, 0.2, &[[1.0, 0.1], [0.1, 1.0]]).unwrap();
        assert!((v - expect).abs() < 1e-9);
        // Singular without a +1 pair: rejected.
        let m = [[1.0, -1.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let cov = Cov3::new(m).unwrap();
        assert_eq!(
            phi3(0.0, 0.0, 0.0, &cov),
            Err(GaussianError::SingularCovariance)
        );
    }

    #[test]
    fn ladder_holds_near_degenerate_covariances() {
        // factor rows nearly parallel plus a small diagonal jitter: the
        // conditional laws get narrow and the integrands step-like
        for c2 in [0.0, 0.02, 0.1, 0.3] {
            for scale in [0.3, 1.0, 2.5] {
                let a0 = 1.2572 * scale;
                let c1 = 0.4908 * scale;
                let m = [
                    [a0 * a0 + 0.05, 0.0, a0 * c1],
                    [0.0, 0.05, 0.0],
                    [a0 * c1, 0.0, c1 * c1 + c2 * c2 + 0.05],
                ];
                let cov = Cov3::new(m).unwrap();
                let wide = 40.0 * m[1][1].sqrt();
                let sub = [[m[0][0], m[0][2]], [m[2][0], m[2][2]]];
                for t0 in [-2.5, -1.2, 0.3, 1.8] {
                    for t2 in [-1.9, -0.4, 0.9] {
                        let three = phi3(t0, wide, t2, &cov).unwrap();
                        let two = phi2(t0, t2, &sub).unwrap();
                        assert!(
                            (three - two).abs() < 2e-7,
                            "ladder violated at c2={c2}, scale={scale}, \
                             t=({t0},{t2}): {three} vs {two}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn marginal_submatrices() {
        let cov = Cov3::new([[1.0, 0.3, 0.2], [0.3, 2.0, 0.5], [0.2, 0.5, 1.5]]).unwrap();
        let keep13 = MarginalIndex::new(&[1, 3]).unwrap();
        assert_eq!(
            marginal(&cov, &keep13),
            SmallCov::D2([[1.0, 0.2], [0.2, 1.5]])
        );
        let keep3 = MarginalIndex::new(&[3]).unwrap();
        assert_eq!(marginal(&cov, &keep3), SmallCov::D1(1.5));
        let all = MarginalIndex::new(&[3, 1, 2, 2]).unwrap();
        assert_eq!(marginal(&cov, &all), SmallCov::D3(*cov.entries()));
        assert!(MarginalIndex::new(&[]).is_err());
        assert!(MarginalIndex::new(&[0]).is_err());
        assert!(MarginalIndex::new(&[4]).is_err());
    }

    #[test]
    fn phi2_bounded_by_marginals() {
        let c = cov2(1.3, 0.4, 0.8);
        for (a, b) in [(0.2, -0.4), (1.0, 1.0), (-2.0, 0.3)] {
            let v = phi2(a, b, &c).unwrap();
            assert!(v <= phi1(a, 1.3).unwrap() + 1e-12);
            assert!(v <= phi1(b, 0.8).unwrap() + 1e-12);
        }
    }
}
