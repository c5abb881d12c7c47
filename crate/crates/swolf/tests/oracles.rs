//! Independent numerical oracles for the Gaussian CDF stack and the
//! dispersion statistics.
//!
//! Nothing here reuses the library's evaluation path: the CDF oracles
//! integrate the explicit multivariate density on tensor Gauss-Legendre
//! grids (nodes computed locally by Newton iteration), the orthant values
//! come from closed forms, the Monte-Carlo check uses Box-Muller sampling
//! with no error function anywhere, and the dispersion check re-derives the
//! covariance entries by direct summation in bits.
#![allow(clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use swolf::gaussian::{phi1, phi1_inv, phi2, phi3, Cov3};
use swolf::source_model::example_table;

const PI: f64 = std::f64::consts::PI;

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0f64, x);
    for k in 2..=n {
        let kf = k as f64;
        let pk = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

/// Composite Gauss-Legendre nodes over [a, b] with `panels` panels.
fn composite_nodes(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre(order);
    let mut out = Vec::with_capacity(panels * order);
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let (lo, hi) = (a + p as f64 * h, a + (p + 1) as f64 * h);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (&x, &w) in xs.iter().zip(&ws) {
            out.push((mid + half * x, half * w));
        }
    }
    out
}

/// Oracle for the standard normal CDF: direct quadrature of the density,
/// with no error function involved.
fn oracle_std_normal_cdf(t: f64) -> f64 {
    if t <= -40.0 {
        return 0.0;
    }
    let lo = -40.0f64;
    let hi = t.min(40.0);
    let nodes = composite_nodes(lo, hi, 160, 24);
    let mut acc = 0.0;
    for (x, w) in nodes {
        acc += w * (-0.5 * x * x).exp();
    }
    acc / (2.0 * PI).sqrt()
}

fn det2(m: &[[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

fn inv2(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let d = det2(m);
    [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn inv3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let d = det3(m);
    let c =
        |r1: usize, c1: usize, r2: usize, c2: usize| m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1];
    [
        [c(1, 1, 2, 2) / d, -c(0, 1, 2, 2) / d, c(0, 1, 1, 2) / d],
        [-c(1, 0, 2, 2) / d, c(0, 0, 2, 2) / d, -c(0, 0, 1, 2) / d],
        [c(1, 0, 2, 1) / d, -c(0, 0, 2, 1) / d, c(0, 0, 1, 1) / d],
    ]
}

/// Oracle for the bivariate CDF: tensor quadrature of the explicit density.
fn oracle_phi2(t1: f64, t2: f64, cov: &[[f64; 2]; 2]) -> f64 {
    let s1 = cov[0][0].sqrt();
    let s2 = cov[1][1].sqrt();
    let inv = inv2(cov);
    let norm = 1.0 / (2.0 * PI * det2(cov).sqrt());
    let hi1 = t1.min(8.5 * s1);
    let hi2 = t2.min(8.5 * s2);
    if hi1 <= -8.5 * s1 || hi2 <= -8.5 * s2 {
        return 0.0;
    }
    let n1 = composite_nodes(-8.5 * s1, hi1, 12, 20);
    let n2 = composite_nodes(-8.5 * s2, hi2, 12, 20);
    let mut acc = 0.0;
    for &(x, wx) in &n1 {
        let mut inner = 0.0;
        for &(y, wy) in &n2 {
            let q = inv[0][0] * x * x + 2.0 * inv[0][1] * x * y + inv[1][1] * y * y;
            inner += wy * (-0.5 * q).exp();
        }
        acc += wx * inner;
    }
    acc * norm
}

/// Oracle for the trivariate CDF: tensor quadrature of the explicit density.
fn oracle_phi3(t: [f64; 3], cov: &[[f64; 3]; 3]) -> f64 {
    let s: Vec<f64> = (0..3).map(|i| cov[i][i].sqrt()).collect();
    let inv = inv3(cov);
    let norm = 1.0 / ((2.0 * PI).powf(1.5) * det3(cov).sqrt());
    let mut axes = Vec::new();
    for i in 0..3 {
        let hi = t[i].min(8.5 * s[i]);
        if hi <= -8.5 * s[i] {
            return 0.0;
        }
        axes.push(composite_nodes(-8.5 * s[i], hi, 7, 14));
    }
    let mut acc = 0.0;
    for &(x, wx) in &axes[0] {
        for &(y, wy) in &axes[1] {
            // precompute the xy part of the quadratic form
            let part = inv[0][0] * x * x + 2.0 * inv[0][1] * x * y + inv[1][1] * y * y;
            let lin = 2.0 * (inv[0][2] * x + inv[1][2] * y);
            let mut inner = 0.0;
            for &(z, wz) in &axes[2] {
                inner += wz * (-0.5 * (part + lin * z + inv[2][2] * z * z)).exp();
            }
            acc += wx * wy * inner;
        }
    }
    acc * norm
}

#[test]
fn quadrature_oracle_validates_phi1() {
    // the oracle itself reproduces the exact median and total mass
    assert!((oracle_std_normal_cdf(0.0) - 0.5).abs() < 1e-13);
    assert!((oracle_std_normal_cdf(40.0) - 1.0).abs() < 1e-13);
    for t in [-3.0, -1.0, -0.2, 0.7, 1.281552, 2.5, 5.0] {
        let oracle = oracle_std_normal_cdf(t);
        let lib = phi1(t, 1.0).unwrap();
        assert!((oracle - lib).abs() < 1e-12, "t = {t}: {oracle} vs {lib}");
    }
    // frozen value: the 0.9 quantile of the standard normal
    assert!((oracle_std_normal_cdf(1.281552) - 0.9).abs() < 1e-6);
    assert!((phi1(1.281552, 1.0).unwrap() - 0.9).abs() < 1e-6);
    // scale: variance enters through t / sigma
    assert!((phi1(2.563104, 4.0).unwrap() - 0.9).abs() < 1e-6);
}

#[test]
fn quantile_against_oracle() {
    for q in [0.1, 0.25, 0.5, 0.75, 0.9, 0.99] {
        let t = phi1_inv(q, 1.0).unwrap();
        let oracle = oracle_std_normal_cdf(t);
        assert!((oracle - q).abs() < 1e-12, "q = {q}");
    }
    assert!((phi1_inv(0.9, 1.0).unwrap() - 1.281552).abs() < 1e-6);
}

#[test]
fn phi2_against_density_quadrature_and_closed_form() {
    // closed-form orthant probability: Pr{X<0, Y<0} = 1/4 + asin(rho)/(2 pi)
    for rho in [-0.8f64, -0.3, 0.0, 0.5, 0.9] {
        let cov = [[1.0, rho], [rho, 1.0]];
        let expected = 0.25 + rho.asin() / (2.0 * PI);
        let lib = phi2(0.0, 0.0, &cov).unwrap();
        assert!(
            (lib - expected).abs() < 1e-10,
            "rho = {rho}: {lib} vs {expected}"
        );
        let oracle = oracle_phi2(0.0, 0.0, &cov);
        assert!(
            (oracle - expected).abs() < 1e-9,
            "oracle self-check, rho = {rho}"
        );
    }
    // general thresholds and scales against the density oracle
    let cases = [
        (0.4, -0.3, [[1.5, 0.6], [0.6, 0.9]]),
        (-1.2, 2.0, [[0.5, -0.4], [-0.4, 2.0]]),
        (1.0, 1.0, [[2.0, 1.2], [1.2, 1.0]]),
    ];
    for (t1, t2, cov) in cases {
        let lib = phi2(t1, t2, &cov).unwrap();
        let oracle = oracle_phi2(t1, t2, &cov);
        assert!(
            (lib - oracle).abs() < 1e-9,
            "({t1}, {t2}): {lib} vs {oracle}"
        );
    }
}

#[test]
fn phi2_orthant_against_boxmuller_mc() {
    // 1e7 samples, no error function anywhere in the sampling path
    let rho: f64 = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_527);
    let total = 10_000_000u64;
    let mut hits = 0u64;
    let comp = (1.0 - rho * rho).sqrt();
    for _ in 0..total {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let r = (-2.0 * u1.max(1e-300).ln()).sqrt();
        let z0 = r * (2.0 * PI * u2).cos();
        let z1 = r * (2.0 * PI * u2).sin();
        let x = z0;
        let y = rho * z0 + comp * z1;
        if x < 0.0 && y < 0.0 {
            hits += 1;
        }
    }
    let est = hits as f64 / total as f64;
    let expected = 1.0 / 3.0;
    let se = (expected * (1.0 - expected) / total as f64).sqrt();
    assert!(
        (est - expected).abs() < 3.0 * se,
        "MC {est} vs closed form {expected} (se {se})"
    );
    assert!((phi2(0.0, 0.0, &[[1.0, rho], [rho, 1.0]]).unwrap() - expected).abs() < 1e-10);
}

#[test]
fn phi3_equicorrelated_orthant_closed_form() {
    // Pr{X<0,Y<0,Z<0} = 1/8 + (asin r12 + asin r13 + asin r23)/(4 pi);
    // all rho = 1/2 gives exactly 1/4
    let cov = Cov3::new([[1.0, 0.5, 0.5], [0.5, 1.0, 0.5], [0.5, 0.5, 1.0]]).unwrap();
    let lib = phi3(0.0, 0.0, 0.0, &cov).unwrap();
    assert!((lib - 0.25).abs() < 3e-6);
    // mixed correlations
    let m: [[f64; 3]; 3] = [[1.0, 0.3, -0.2], [0.3, 1.0, 0.4], [-0.2, 0.4, 1.0]];
    let cov = Cov3::new(m).unwrap();
    let expected = 0.125 + (0.3f64.asin() + (-0.2f64).asin() + 0.4f64.asin()) / (4.0 * PI);
    let lib = phi3(0.0, 0.0, 0.0, &cov).unwrap();
    assert!((lib - expected).abs() < 1e-7, "{lib} vs {expected}");
}

#[test]
fn phi3_against_density_quadrature() {
    let sigma = example_table().stats().sigma;
    let cases = [
        ([0.3, 0.5, 0.6], sigma),
        (
            [0.5, -0.2, 0.9],
            [[1.0, 0.3, 0.2], [0.3, 2.0, 0.5], [0.2, 0.5, 1.5]],
        ),
        (
            [-0.4, 1.0, 0.2],
            [[0.8, -0.2, 0.1], [-0.2, 1.1, 0.3], [0.1, 0.3, 0.9]],
        ),
    ];
    for (t, m) in cases {
        let cov = Cov3::new(m).unwrap();
        let lib = phi3(t[0], t[1], t[2], &cov).unwrap();
        let oracle = oracle_phi3(t, &m);
        assert!((lib - oracle).abs() < 1e-7, "{t:?}: {lib} vs {oracle}");
    }
}

#[test]
fn phi3_against_seeded_mc() {
    // Box-Muller Monte Carlo with Cholesky correlation, 4e6 samples
    let m: [[f64; 3]; 3] = [[1.0, 0.3, 0.2], [0.3, 2.0, 0.5], [0.2, 0.5, 1.5]];
    let t = [0.5f64, -0.2, 0.9];
    // Cholesky of m (hand-rolled, lower triangular)
    let l11 = m[0][0].sqrt();
    let l21 = m[1][0] / l11;
    let l22 = (m[1][1] - l21 * l21).sqrt();
    let l31 = m[2][0] / l11;
    let l32 = (m[2][1] - l31 * l21) / l22;
    let l33 = (m[2][2] - l31 * l31 - l32 * l32).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(7_771_234);
    let total = 4_000_000u64;
    let mut hits = 0u64;
    let draw = |rng: &mut ChaCha8Rng| {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let r = (-2.0 * u1.max(1e-300).ln()).sqrt();
        (r * (2.0 * PI * u2).cos(), r * (2.0 * PI * u2).sin())
    };
    for _ in 0..total {
        let (z0, z1) = draw(&mut rng);
        let (z2, _) = draw(&mut rng);
        let y0 = l11 * z0;
        let y1 = l21 * z0 + l22 * z1;
        let y2 = l31 * z0 + l32 * z1 + l33 * z2;
        if y0 < t[0] && y1 < t[1] && y2 < t[2] {
            hits += 1;
        }
    }
    let est = hits as f64 / total as f64;
    let cov = Cov3::new(m).unwrap();
    let lib = phi3(t[0], t[1], t[2], &cov).unwrap();
    let se = (lib * (1.0 - lib) / total as f64).sqrt();
    assert!(
        (est - lib).abs() < 3.0 * se,
        "MC {est} vs phi3 {lib} (se {se})"
    );
}

#[test]
fn table_marginal_matches_quoted_display() {
    // the {1,3} principal submatrix of the example dispersion, in bits^2
    use swolf::gaussian::{marginal, MarginalIndex, SmallCov};
    let stats = example_table().stats();
    let ln2sq = std::f64::consts::LN_2 * std::f64::consts::LN_2;
    let mut bits2 = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            bits2[i][j] = stats.sigma[i][j] / ln2sq;
        }
    }
    let cov = Cov3::new(bits2).unwrap();
    let keep = MarginalIndex::new(&[1, 3]).unwrap();
    match marginal(&cov, &keep) {
        SmallCov::D2(m) => {
            assert!((m[0][0] - 0.475).abs() < 1e-3);
            assert!((m[0][1] - 0.492).abs() < 1e-3);
            assert!((m[1][0] - 0.492).abs() < 1e-3);
            assert!((m[1][1] - 0.690).abs() < 1e-3);
        }
        other => panic!("expected 2x2 marginal, got {other:?}"),
    }
}

#[test]
fn dispersion_confirmed_in_bits_by_direct_summation() {
    // Re-derive the example-table covariance entries working in log2
    // throughout, independently of the nats-based stats path.
    let pmf = example_table();
    let p = |x1: usize, x2: usize| pmf.joint(x1, x2);
    let p1 = [p(0, 0) + p(0, 1), p(1, 0) + p(1, 1)];
    let p2 = [p(0, 0) + p(1, 0), p(0, 1) + p(1, 1)];
    let mut h1g2 = 0.0;
    let mut h12 = 0.0;
    for x1 in 0..2 {
        for x2 in 0..2 {
            h1g2 += p(x1, x2) * -((p(x1, x2) / p2[x2]).log2());
            h12 += p(x1, x2) * -(p(x1, x2).log2());
        }
    }
    let (mut s11, mut s13, mut s33) = (0.0, 0.0, 0.0);
    for x1 in 0..2 {
        for x2 in 0..2 {
            let z1 = -((p(x1, x2) / p2[x2]).log2()) - h1g2;
            let z3 = -(p(x1, x2).log2()) - h12;
            s11 += p(x1, x2) * z1 * z1;
            s13 += p(x1, x2) * z1 * z3;
            s33 += p(x1, x2) * z3 * z3;
        }
    }
    // the quoted covariance display is in bits^2
    assert!((s11 - 0.475).abs() < 1e-3, "s11 = {s11}");
    assert!((s13 - 0.492).abs() < 1e-3, "s13 = {s13}");
    assert!((s33 - 0.690).abs() < 1e-3, "s33 = {s33}");
    // and the nats-based stats agree after unit conversion
    let stats = pmf.stats();
    let ln2sq = std::f64::consts::LN_2 * std::f64::consts::LN_2;
    assert!((stats.sigma[0][0] / ln2sq - s11).abs() < 1e-12);
    assert!((stats.sigma[0][2] / ln2sq - s13).abs() < 1e-12);
    assert!((stats.sigma[2][2] / ln2sq - s33).abs() < 1e-12);
    // marginal entropies in bits while we are here
    assert!((p1[0] - 0.75).abs() < 1e-12);
    assert!((p2[0] - 0.65).abs() < 1e-12);
}
