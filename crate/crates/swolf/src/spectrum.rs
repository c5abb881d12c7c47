//! Finite-`n` information-spectrum tail functionals, evaluated exactly by
//! type-class enumeration and statistically by seeded Monte Carlo, plus the
//! finite-blocklength achievability/converse bounds built on the same
//! three-way union event.
//!
//! The central object is the probability
//!
//! ```text
//! Pr{ S1 >= T1  or  S2 >= T2  or  S3 >= T3 }
//! ```
//!
//! where `S1 = -ln P(X1^n | X2^n)`, `S2 = -ln P(X2^n | X1^n)`,
//! `S3 = -ln P(X1^n X2^n)` over an i.i.d. block. All three sums are
//! functions of the joint symbol occupancy vector alone, so the probability
//! is an exact finite sum of multinomial masses over type classes. The
//! normalized form `F_n(L1, L2 | a1, a2)` uses thresholds
//! `T = n a + sqrt(n) L`; the achievability/converse bounds shift the same
//! thresholds by code sizes and slack terms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bounds::ClampedBound;
use crate::linalg::CompensatedSum;
use crate::region::{membership, RegionError, RegionQuery, SecondOrderPoint};
use crate::source_model::JointPmf;

/// Hard cap on the number of enumerated compositions.
pub const COMPOSITION_BUDGET: u128 = 1_500_000_000;

/// Alphabet-product cap for exact enumeration.
pub const MAX_CELLS: usize = 8;

/// Blocklength cap for exact enumeration.
pub const MAX_EXACT_N: u64 = 2000;

#[derive(Debug, Error, PartialEq)]
pub enum SpectrumError {
    #[error("exact enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error(transparent)]
    Region(#[from] RegionError),
}

/// The three normalized self-information sums of one sampled block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumTriple {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
}

impl SpectrumTriple {
    /// Builds the normalized triple from raw sums, checking the additive
    /// decomposition `S3 = S1 + sum(-ln P2)` that ties the joint
    /// self-information to the conditional one.
    pub fn from_raw_sums(
        s_cond1: f64,
        s_cond2: f64,
        s_joint: f64,
        s_marg2: f64,
        n: u64,
        a1: f64,
        a2: f64,
    ) -> Self {
        let slack = 1e-8 * (n as f64).max(1.0);
        assert!(
            (s_joint - (s_cond1 + s_marg2)).abs() <= slack,
            "self-information decomposition violated: {} vs {}",
            s_joint,
            s_cond1 + s_marg2
        );
        let rn = (n as f64).sqrt();
        Self {
            u1: (s_cond1 - n as f64 * a1) / rn,
            u2: (s_cond2 - n as f64 * a2) / rn,
            u3: (s_joint - n as f64 * (a1 + a2)) / rn,
        }
    }
}

/// Occupancy vector over the joint symbols of one `JointPmf`, with its
/// multinomial log-probability in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeClass {
    counts: Vec<u64>,
    log_prob: f64,
}

impl TypeClass {
    /// `counts` is row-major over the pmf cells and determines `n` by its
    /// sum. A positive count on a zero-probability cell yields
    /// `log_prob = -inf`.
    pub fn new(pmf: &JointPmf, counts: Vec<u64>) -> Result<Self, SpectrumError> {
        if counts.len() != pmf.cells().len() {
            return Err(SpectrumError::InvalidParameter("counts length mismatch"));
        }
        let n: u64 = counts.iter().sum();
        let mut lp = libm::lgamma((n + 1) as f64);
        for (&c, &p) in counts.iter().zip(pmf.cells()) {
            if c == 0 {
                continue;
            }
            if p == 0.0 {
                lp = f64::NEG_INFINITY;
                break;
            }
            lp += c as f64 * p.ln() - libm::lgamma((c + 1) as f64);
        }
        Ok(Self {
            counts,
            log_prob: lp,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn log_prob(&self) -> f64 {
        self.log_prob
    }
}

/// Per-cell log weights of the positive cells of a pmf.
struct CellWeights {
    /// `-ln P(x1|x2)` per cell.
    w1: Vec<f64>,
    /// `-ln P(x2|x1)` per cell.
    w2: Vec<f64>,
    /// `-ln P(x1,x2)` per cell.
    w3: Vec<f64>,
    /// `ln P(x1,x2)` per cell.
    lnp: Vec<f64>,
}

impl CellWeights {
    fn new(pmf: &JointPmf) -> Self {
        let m1: Vec<f64> = (0..pmf.rows()).map(|i| pmf.marginal1(i)).collect();
        let m2: Vec<f64> = (0..pmf.cols()).map(|j| pmf.marginal2(j)).collect();
        let mut w1 = Vec::new();
        let mut w2 = Vec::new();
        let mut w3 = Vec::new();
        let mut lnp = Vec::new();
        for x1 in 0..pmf.rows() {
            for x2 in 0..pmf.cols() {
                let p = pmf.joint(x1, x2);
                if p == 0.0 {
                    continue;
                }
                let lp = p.ln();
                w1.push(-(lp - m2[x2].ln()));
                w2.push(-(lp - m1[x1].ln()));
                w3.push(-lp);
                lnp.push(lp);
            }
        }
        Self { w1, w2, w3, lnp }
    }

    fn len(&self) -> usize {
        self.lnp.len()
    }
}

fn compositions(n: u64, k: usize) -> u128 {
    // C(n + k - 1, k - 1)
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 1..k as u128 {
        num *= n as u128 + i;
        den *= i;
    }
    num / den
}

fn check_budget(pmf: &JointPmf, n: u64) -> Result<(), SpectrumError> {
    let cells = pmf.rows() * pmf.cols();
    if cells > MAX_CELLS {
        return Err(SpectrumError::BudgetExceeded(format!(
            "alphabet product {cells} exceeds {MAX_CELLS}"
        )));
    }
    if n == 0 {
        return Err(SpectrumError::InvalidParameter("blocklength must be >= 1"));
    }
    if n > MAX_EXACT_N {
        return Err(SpectrumError::BudgetExceeded(format!(
            "blocklength {n} exceeds {MAX_EXACT_N}"
        )));
    }
    let count = compositions(n, cells);
    if count > COMPOSITION_BUDGET {
        return Err(SpectrumError::BudgetExceeded(format!(
            "{count} compositions exceed budget {COMPOSITION_BUDGET}"
        )));
    }
    Ok(())
}

/// Absolute slack on the raw-sum threshold comparisons: ties at the
/// threshold count as violations, and this absorbs the rounding accumulated
/// over up to `n` summand updates so lattice-point ties behave like exact
/// `>=`. Scaled by `n` at the call sites.
const TIE_TOL_PER_SYMBOL: f64 = 1e-9;

fn violates(s1: f64, s2: f64, s3: f64, t: &[f64; 3], tol: f64) -> bool {
    s1 >= t[0] - tol || s2 >= t[1] - tol || s3 >= t[2] - tol
}

struct Walk<'a> {
    c: &'a CellWeights,
    lf: &'a [f64],
    ln_i: &'a [f64],
    t: [f64; 3],
    tol: f64,
    acc: CompensatedSum,
}

impl Walk<'_> {
    /// Depth-first over cells; the innermost pair advances with O(1)
    /// updates per composition.
    fn go(&mut self, cell: usize, rem: usize, lm: f64, s1: f64, s2: f64, s3: f64) {
        let k = self.c.len();
        if cell + 2 < k {
            for cnt in 0..=rem {
                let cf = cnt as f64;
                self.go(
                    cell + 1,
                    rem - cnt,
                    lm + cf * self.c.lnp[cell] - self.lf[cnt],
                    s1 + cf * self.c.w1[cell],
                    s2 + cf * self.c.w2[cell],
                    s3 + cf * self.c.w3[cell],
                );
            }
            return;
        }
        // Last two cells: `a` counts on `cell`, the rest on `cell + 1`.
        let (ca, cb) = (cell, cell + 1);
        let rf = rem as f64;
        let mut lm = lm + rf * self.c.lnp[cb] - self.lf[rem];
        let mut s1 = s1 + rf * self.c.w1[cb];
        let mut s2 = s2 + rf * self.c.w2[cb];
        let mut s3 = s3 + rf * self.c.w3[cb];
        let dlnp = self.c.lnp[ca] - self.c.lnp[cb];
        let dw1 = self.c.w1[ca] - self.c.w1[cb];
        let dw2 = self.c.w2[ca] - self.c.w2[cb];
        let dw3 = self.c.w3[ca] - self.c.w3[cb];
        let mut a = 0usize;
        loop {
            if violates(s1, s2, s3, &self.t, self.tol) {
                self.acc.add(lm.exp());
            }
            if a == rem {
                break;
            }
            // move one count from cell b to cell a
            lm += dlnp - self.ln_i[a + 1] + self.ln_i[rem - a];
            s1 += dw1;
            s2 += dw2;
            s3 += dw3;
            a += 1;
        }
    }
}

/// Exact `Pr{S1 >= t1 or S2 >= t2 or S3 >= t3}` on raw self-information
/// sums, by enumerating every type class. Thresholds may be infinite.
fn exact_union_tail(pmf: &JointPmf, n: u64, t: [f64; 3]) -> Result<f64, SpectrumError> {
    check_budget(pmf, n)?;
    if t.iter().any(|x| x.is_nan()) {
        return Err(SpectrumError::InvalidParameter("threshold is NaN"));
    }
    if t.contains(&f64::NEG_INFINITY) {
        return Ok(1.0);
    }
    let cells = CellWeights::new(pmf);
    let nu = n as usize;
    let tol = TIE_TOL_PER_SYMBOL * n as f64;
    if cells.len() == 1 {
        // single positive cell: the block is deterministic
        let rf = n as f64;
        return Ok(
            if violates(
                rf * cells.w1[0],
                rf * cells.w2[0],
                rf * cells.w3[0],
                &t,
                tol,
            ) {
                1.0
            } else {
                0.0
            },
        );
    }
    let lf: Vec<f64> = (0..=nu).map(|i| libm::lgamma((i + 1) as f64)).collect();
    let ln_i: Vec<f64> = (0..=nu)
        .map(|i| if i == 0 { 0.0 } else { (i as f64).ln() })
        .collect();
    let mut walk = Walk {
        c: &cells,
        lf: &lf,
        ln_i: &ln_i,
        t,
        tol,
        acc: CompensatedSum::new(),
    };
    walk.go(0, nu, lf[nu], 0.0, 0.0, 0.0);
    Ok(walk.acc.total().clamp(0.0, 1.0))
}

/// Exact tail functional with explicit per-coordinate second-order
/// thresholds (`l3` on the sum coordinate); infinities are exact sentinels.
pub fn exact_fn_thresholds(
    pmf: &JointPmf,
    n: u64,
    a1: f64,
    a2: f64,
    l1: f64,
    l2: f64,
    l3: f64,
) -> Result<f64, SpectrumError> {
    let nf = n as f64;
    let rn = nf.sqrt();
    let map = |a: f64, l: f64| if l.is_infinite() { l } else { nf * a + rn * l };
    exact_union_tail(pmf, n, [map(a1, l1), map(a2, l2), map(a1 + a2, l3)])
}

/// Exact `F_n(L1, L2 | a1, a2)`: the probability that any of the three
/// normalized self-information sums meets its threshold.
pub fn exact_fn(
    pmf: &JointPmf,
    n: u64,
    q: &RegionQuery,
    pt: &SecondOrderPoint,
) -> Result<f64, SpectrumError> {
    exact_fn_thresholds(pmf, n, q.a1, q.a2, pt.l1, pt.l2, pt.sum())
}

/// Monte-Carlo estimate of `F_n` with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

/// Draws `samples` i.i.d. blocks of length `n` (single deterministic stream
/// from `seed`) and counts threshold violations.
pub fn mc_fn(
    pmf: &JointPmf,
    n: u64,
    q: &RegionQuery,
    pt: &SecondOrderPoint,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, SpectrumError> {
    if samples == 0 {
        return Err(SpectrumError::InvalidParameter("samples must be >= 1"));
    }
    if n == 0 {
        return Err(SpectrumError::InvalidParameter("blocklength must be >= 1"));
    }
    let cells = CellWeights::new(pmf);
    let m2: Vec<f64> = (0..pmf.cols()).map(|j| pmf.marginal2(j)).collect();
    // cumulative distribution over positive cells, and -ln P2 per cell
    let mut cum = Vec::with_capacity(cells.len());
    let mut wm2 = Vec::with_capacity(cells.len());
    let mut running = 0.0;
    for x1 in 0..pmf.rows() {
        for x2 in 0..pmf.cols() {
            let p = pmf.joint(x1, x2);
            if p == 0.0 {
                continue;
            }
            running += p;
            cum.push(running);
            wm2.push(-m2[x2].ln());
        }
    }
    let last = cum.len() - 1;
    let nf = n as f64;
    let rn = nf.sqrt();
    let t = [
        nf * q.a1 + rn * pt.l1,
        nf * q.a2 + rn * pt.l2,
        nf * (q.a1 + q.a2) + rn * pt.sum(),
    ];
    let tol = TIE_TOL_PER_SYMBOL * nf;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..samples {
        let (mut s1, mut s2, mut s3, mut sm2) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..n {
            let u: f64 = rng.random();
            let idx = cum.partition_point(|&c| c < u).min(last);
            s1 += cells.w1[idx];
            s2 += cells.w2[idx];
            s3 += cells.w3[idx];
            sm2 += wm2[idx];
        }
        // normalized triple keeps the decomposition check active
        let _ = SpectrumTriple::from_raw_sums(s1, s2, s3, sm2, n, q.a1, q.a2);
        if violates(s1, s2, s3, &t, tol) {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok(McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / samples as f64).sqrt(),
        samples,
        seed,
    })
}

fn check_bound_params(n: u64, m1: f64, m2: f64, gamma: f64) -> Result<(), SpectrumError> {
    if !(m1 >= 1.0 && m1.is_finite() && m2 >= 1.0 && m2.is_finite()) {
        return Err(SpectrumError::InvalidParameter(
            "code sizes must be finite and >= 1",
        ));
    }
    check_bound_log_params(n, m1.ln(), m2.ln(), gamma)
}

fn check_bound_log_params(n: u64, ln_m1: f64, ln_m2: f64, gamma: f64) -> Result<(), SpectrumError> {
    if n == 0 {
        return Err(SpectrumError::InvalidParameter("blocklength must be >= 1"));
    }
    if !(ln_m1 >= 0.0 && ln_m1.is_finite() && ln_m2 >= 0.0 && ln_m2.is_finite()) {
        return Err(SpectrumError::InvalidParameter(
            "log code sizes must be finite and >= 0",
        ));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(SpectrumError::InvalidParameter("gamma must be positive"));
    }
    Ok(())
}

/// Achievability bound: some code with sizes `(m1, m2)` has error at most
/// the union tail at thresholds `ln m - n^(1/4) gamma` plus slack
/// `3 exp(-n^(1/4) gamma)`. Can exceed 1; raw and clamped values are kept.
pub fn achievability_bound(
    pmf: &JointPmf,
    n: u64,
    m1: f64,
    m2: f64,
    gamma: f64,
) -> Result<ClampedBound, SpectrumError> {
    check_bound_params(n, m1, m2, gamma)?;
    achievability_bound_log(pmf, n, m1.ln(), m2.ln(), gamma)
}

/// [`achievability_bound`] with code sizes given as `ln M` in nats, for sizes far
/// beyond f64 range (e.g. `M = exp(n * rate)` at large `n`).
pub fn achievability_bound_log(
    pmf: &JointPmf,
    n: u64,
    ln_m1: f64,
    ln_m2: f64,
    gamma: f64,
) -> Result<ClampedBound, SpectrumError> {
    check_bound_log_params(n, ln_m1, ln_m2, gamma)?;
    let ln_z = -(n as f64).powf(0.25) * gamma;
    let p = exact_union_tail(pmf, n, [ln_m1 + ln_z, ln_m2 + ln_z, ln_m1 + ln_m2 + ln_z])?;
    Ok(ClampedBound::from_raw(p + 3.0 * ln_z.exp()))
}

/// Converse bound: every code with sizes `(m1, m2)` has error at least the
/// union tail at thresholds `ln m + sqrt(n) gamma` minus slack
/// `3 exp(-sqrt(n) gamma)`. Clamped below at 0.
pub fn converse_bound(
    pmf: &JointPmf,
    n: u64,
    m1: f64,
    m2: f64,
    gamma: f64,
) -> Result<ClampedBound, SpectrumError> {
    check_bound_params(n, m1, m2, gamma)?;
    converse_bound_log(pmf, n, m1.ln(), m2.ln(), gamma)
}

/// [`converse_bound`] with code sizes given as `ln M` in nats.
pub fn converse_bound_log(
    pmf: &JointPmf,
    n: u64,
    ln_m1: f64,
    ln_m2: f64,
    gamma: f64,
) -> Result<ClampedBound, SpectrumError> {
    check_bound_log_params(n, ln_m1, ln_m2, gamma)?;
    let shift = (n as f64).sqrt() * gamma;
    let p = exact_union_tail(
        pmf,
        n,
        [ln_m1 + shift, ln_m2 + shift, ln_m1 + ln_m2 + shift],
    )?;
    Ok(ClampedBound::from_raw(p - 3.0 * (-shift).exp()))
}

/// One row of an exact-vs-Gaussian convergence sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: u64,
    pub exact: f64,
    pub gaussian: f64,
    pub gap: f64,
}

/// Exact `F_n` against the limiting case value `1 - Phi_case` across the
/// given blocklengths, ascending.
pub fn convergence_report(
    pmf: &JointPmf,
    q: &RegionQuery,
    pt: &SecondOrderPoint,
    n_list: &[u64],
) -> Result<Vec<ConvergenceRow>, SpectrumError> {
    let stats = pmf.stats();
    let verdict = membership(&stats, q, pt)?;
    let gaussian = 1.0 - verdict.probability();
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    let mut rows = Vec::with_capacity(ns.len());
    for n in ns {
        let exact = exact_fn(pmf, n, q, pt)?;
        rows.push(ConvergenceRow {
            n,
            exact,
            gaussian,
            gap: (exact - gaussian).abs(),
        });
    }
    Ok(rows)
}
