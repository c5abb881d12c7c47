//! Random-binning code ensemble with exact maximum-likelihood decoding at
//! small blocklengths.
//!
//! Each encoder assigns every length-`n` source sequence an independent
//! uniformly random bin index. The decoder receives the bin pair and returns
//! the most probable source pair consistent with both bins, scanning the
//! full (budget-capped) sequence space; ties break to the lexicographically
//! first pair index, so a decode is a pure function of the code. Ensemble
//! error rates produced here are the empirical ground truth that the
//! achievability/converse bounds of [`crate::spectrum`] must sandwich.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::linalg::derive_seed;
use crate::source_model::JointPmf;

/// Default cap on `|X1|^n * |X2|^n`, the pairs scanned per ML decode.
pub const DEFAULT_PAIR_BUDGET: u64 = 1 << 20;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("sequence-space budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("no sequence pair maps to the received bin pair")]
    EmptyBinPair,
    #[error("trials must be >= 1")]
    InvalidTrials,
}

/// Enumerated length-`n` sequence space of a source pair, with the joint
/// log-probability of every sequence pair precomputed.
pub struct SequenceSpace {
    n: u32,
    count1: usize,
    count2: usize,
    /// `ln P(x1-block, x2-block)` indexed by `x1_idx * count2 + x2_idx`.
    ln_pair: Vec<f64>,
}

impl SequenceSpace {
    pub fn new(pmf: &JointPmf, n: u32, pair_budget: u64) -> Result<Self, SimError> {
        if n == 0 {
            return Err(SimError::InvalidParameter("blocklength must be >= 1"));
        }
        let count1 = checked_pow(pmf.rows(), n, pair_budget)?;
        let count2 = checked_pow(pmf.cols(), n, pair_budget)?;
        let pairs = (count1 as u64).checked_mul(count2 as u64);
        match pairs {
            Some(p) if p <= pair_budget => {}
            _ => {
                return Err(SimError::BudgetExceeded(format!(
                    "{count1} x {count2} sequence pairs exceed budget {pair_budget}"
                )))
            }
        }
        let mut ln_pair = vec![0.0f64; count1 * count2];
        let cols = pmf.cols();
        for i1 in 0..count1 {
            for i2 in 0..count2 {
                let (mut a, mut b) = (i1, i2);
                let mut lp = 0.0;
                for _ in 0..n {
                    let p = pmf.joint(a % pmf.rows(), b % cols);
                    lp += if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
                    a /= pmf.rows();
                    b /= cols;
                }
                ln_pair[i1 * count2 + i2] = lp;
            }
        }
        Ok(Self {
            n,
            count1,
            count2,
            ln_pair,
        })
    }

    pub fn count1(&self) -> usize {
        self.count1
    }

    pub fn count2(&self) -> usize {
        self.count2
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn ln_pair(&self, x1_idx: usize, x2_idx: usize) -> f64 {
        self.ln_pair[x1_idx * self.count2 + x2_idx]
    }
}

fn checked_pow(base: usize, n: u32, budget: u64) -> Result<usize, SimError> {
    let mut acc: u64 = 1;
    for _ in 0..n {
        acc = acc
            .checked_mul(base as u64)
            .filter(|&v| v <= budget)
            .ok_or_else(|| {
                SimError::BudgetExceeded(format!("{base}^{n} sequences exceed budget {budget}"))
            })?;
    }
    Ok(acc as usize)
}

/// One random binning code: total maps from sequence indices to bins,
/// reconstructible from the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct BinningCode {
    pub n: u32,
    pub m1: u32,
    pub m2: u32,
    bin1: Vec<u32>,
    bin2: Vec<u32>,
    pub seed: u64,
}

impl BinningCode {
    /// Draws uniform independent bin assignments for every sequence of both
    /// sources (single deterministic stream from `seed`).
    pub fn draw(space: &SequenceSpace, m1: u32, m2: u32, seed: u64) -> Result<Self, SimError> {
        if m1 == 0 || m2 == 0 {
            return Err(SimError::InvalidParameter("bin counts must be >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bin1 = (0..space.count1).map(|_| rng.random_range(0..m1)).collect();
        let bin2 = (0..space.count2).map(|_| rng.random_range(0..m2)).collect();
        Ok(Self {
            n: space.n,
            m1,
            m2,
            bin1,
            bin2,
            seed,
        })
    }

    /// Explicit bin maps; lets tests build structured (non-random) codes.
    pub fn from_bins(
        n: u32,
        m1: u32,
        m2: u32,
        bin1: Vec<u32>,
        bin2: Vec<u32>,
        seed: u64,
    ) -> Result<Self, SimError> {
        if m1 == 0 || m2 == 0 {
            return Err(SimError::InvalidParameter("bin counts must be >= 1"));
        }
        if bin1.iter().any(|&b| b >= m1) || bin2.iter().any(|&b| b >= m2) {
            return Err(SimError::InvalidParameter("bin index out of range"));
        }
        Ok(Self {
            n,
            m1,
            m2,
            bin1,
            bin2,
            seed,
        })
    }

    pub fn encode1(&self, x1_idx: usize) -> u32 {
        self.bin1[x1_idx]
    }

    pub fn encode2(&self, x2_idx: usize) -> u32 {
        self.bin2[x2_idx]
    }
}

/// Exhaustive maximum-likelihood decode of a bin pair: the most probable
/// sequence pair whose bins match, ties resolved to the smallest pair index.
pub fn ml_decode(
    code: &BinningCode,
    space: &SequenceSpace,
    i1: u32,
    i2: u32,
) -> Result<(usize, usize), SimError> {
    let mut best: Option<(usize, usize)> = None;
    let mut best_lp = f64::NEG_INFINITY;
    for x1 in 0..space.count1 {
        if code.bin1[x1] != i1 {
            continue;
        }
        for x2 in 0..space.count2 {
            if code.bin2[x2] != i2 {
                continue;
            }
            let lp = space.ln_pair(x1, x2);
            if best.is_none() || lp > best_lp {
                best = Some((x1, x2));
                best_lp = lp;
            }
        }
    }
    best.ok_or(SimError::EmptyBinPair)
}

/// How the ensemble treats a decode of a bin pair with no preimage. The
/// event cannot occur for bins produced by the matching encoder; the policy
/// matters for externally supplied bin pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmptyBinPolicy {
    /// Output the all-zero sequence pair and count the trial as an error if
    /// it differs from the truth.
    LexicographicFirst,
    /// Count the trial as an error outright.
    DeclareError,
}

/// Whether a fresh code is drawn per trial (ensemble average) or one code is
/// fixed for the whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeRedraw {
    PerTrial,
    Fixed,
}

/// Simulation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n: u32,
    pub m1: u32,
    pub m2: u32,
    pub trials: u64,
    pub redraw: CodeRedraw,
    pub seed: u64,
    pub policy: EmptyBinPolicy,
    pub pair_budget: u64,
    /// Worker threads for the trial loop. Any value produces the identical
    /// report because every trial reseeds from its own index.
    pub threads: usize,
}

impl EnsembleConfig {
    pub fn new(n: u32, m1: u32, m2: u32, trials: u64, redraw: CodeRedraw, seed: u64) -> Self {
        Self {
            n,
            m1,
            m2,
            trials,
            redraw,
            seed,
            policy: EmptyBinPolicy::LexicographicFirst,
            pair_budget: DEFAULT_PAIR_BUDGET,
            threads: 1,
        }
    }
}

/// Bin counts for an achievability demonstration at anchor `(a1, a2)` and
/// second-order rates `(l1, l2)` nats:
/// `M_i = ceil(exp(n a_i + L_i sqrt(n) + 2 n^(1/4) gamma))`,
/// the sizing whose ensemble error the matching achievability bound
/// covers. Ceilings keep the counts integral.
pub fn achievability_code_sizes(
    n: u32,
    a1: f64,
    a2: f64,
    l1: f64,
    l2: f64,
    gamma: f64,
) -> Result<(u32, u32), SimError> {
    if n == 0 {
        return Err(SimError::InvalidParameter("blocklength must be >= 1"));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(SimError::InvalidParameter("gamma must be positive"));
    }
    let nf = n as f64;
    let pad = 2.0 * nf.powf(0.25) * gamma;
    let size = |a: f64, l: f64| -> Result<u32, SimError> {
        let m = (nf * a + l * nf.sqrt() + pad).exp().ceil();
        if !(m >= 1.0 && m <= u32::MAX as f64) {
            return Err(SimError::BudgetExceeded(format!(
                "code size {m} outside the representable bin-count range"
            )));
        }
        Ok(m as u32)
    };
    Ok((size(a1, l1)?, size(a2, l2)?))
}

/// Empirical error report with a Wilson 95% interval and the seed ledger.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub trials: u64,
    pub errors: u64,
    pub rate: f64,
    /// Wilson 95% confidence interval for the error rate.
    pub ci95: (f64, f64),
    pub seed: u64,
    pub redraw: CodeRedraw,
}

fn wilson_ci95(errors: u64, trials: u64) -> (f64, f64) {
    let z = 1.959963984540054_f64;
    let n = trials as f64;
    let p = errors as f64 / n;
    let denom = 1.0 + z * z / n;
    let center = (p + z * z / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

// sub-seed stream tags
const TAG_FIXED_CODE: u64 = 0;
const TAG_SOURCE: u64 = 1;
const TAG_CODE: u64 = 2;

/// Runs one trial; the outcome is a pure function of `(cfg.seed, t)` and
/// the fixed code, never of scheduling.
fn run_trial(
    pmf: &JointPmf,
    space: &SequenceSpace,
    cfg: &EnsembleConfig,
    fixed: Option<&BinningCode>,
    cells: &[(usize, usize)],
    cum: &[f64],
    t: u64,
) -> Result<bool, SimError> {
    let last = cells.len() - 1;
    let mut src_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, TAG_SOURCE, t));
    let (mut x1_idx, mut x2_idx) = (0usize, 0usize);
    for _ in 0..cfg.n {
        let u: f64 = src_rng.random();
        let idx = cum.partition_point(|&c| c < u).min(last);
        let (s1, s2) = cells[idx];
        x1_idx = x1_idx * pmf.rows() + s1;
        x2_idx = x2_idx * pmf.cols() + s2;
    }
    let drawn;
    let code = match fixed {
        Some(c) => c,
        None => {
            drawn = BinningCode::draw(space, cfg.m1, cfg.m2, derive_seed(cfg.seed, TAG_CODE, t))?;
            &drawn
        }
    };
    let i1 = code.encode1(x1_idx);
    let i2 = code.encode2(x2_idx);
    let decoded = match ml_decode(code, space, i1, i2) {
        Ok(pair) => pair,
        Err(SimError::EmptyBinPair) => match cfg.policy {
            EmptyBinPolicy::LexicographicFirst => (0, 0),
            EmptyBinPolicy::DeclareError => return Ok(true),
        },
        Err(other) => return Err(other),
    };
    Ok(decoded != (x1_idx, x2_idx))
}

/// Runs `trials` independent encode/decode experiments and reports the
/// empirical error rate.
///
/// Trial `t` uses sub-seeds derived from `(seed, t)`, so the report is
/// identical however trials are scheduled (including across `threads`
/// settings); a fixed `(seed, config)` always reproduces the same report.
pub fn ensemble_error(pmf: &JointPmf, cfg: &EnsembleConfig) -> Result<TrialReport, SimError> {
    if cfg.trials == 0 {
        return Err(SimError::InvalidTrials);
    }
    let space = SequenceSpace::new(pmf, cfg.n, cfg.pair_budget)?;
    let fixed = match cfg.redraw {
        CodeRedraw::Fixed => Some(BinningCode::draw(
            &space,
            cfg.m1,
            cfg.m2,
            derive_seed(cfg.seed, TAG_FIXED_CODE, 0),
        )?),
        CodeRedraw::PerTrial => None,
    };
    // cumulative distribution over the positive joint cells
    let cells: Vec<(usize, usize)> = (0..pmf.rows())
        .flat_map(|x1| (0..pmf.cols()).map(move |x2| (x1, x2)))
        .filter(|&(x1, x2)| pmf.joint(x1, x2) > 0.0)
        .collect();
    let mut cum = Vec::with_capacity(cells.len());
    let mut running = 0.0;
    for &(x1, x2) in &cells {
        running += pmf.joint(x1, x2);
        cum.push(running);
    }

    let workers = cfg.threads.max(1).min(cfg.trials as usize);
    let errors = if workers <= 1 {
        let mut errors = 0u64;
        for t in 0..cfg.trials {
            if run_trial(pmf, &space, cfg, fixed.as_ref(), &cells, &cum, t)? {
                errors += 1;
            }
        }
        errors
    } else {
        let chunk = cfg.trials.div_ceil(workers as u64);
        let results: Vec<Result<u64, SimError>> = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for w in 0..workers as u64 {
                let (space, fixed, cells, cum) = (&space, fixed.as_ref(), &cells, &cum);
                handles.push(scope.spawn(move || {
                    let mut errors = 0u64;
                    for t in (w * chunk)..((w + 1) * chunk).min(cfg.trials) {
                        if run_trial(pmf, space, cfg, fixed, cells, cum, t)? {
                            errors += 1;
                        }
                    }
                    Ok(errors)
                }));
            }
            handles
                .into_iter()
                .map(|h| h.join().expect("worker panicked"))
                .collect()
        });
        let mut errors = 0u64;
        for r in results {
            errors += r?;
        }
        errors
    };
    Ok(TrialReport {
        trials: cfg.trials,
        errors,
        rate: errors as f64 / cfg.trials as f64,
        ci95: wilson_ci95(errors, cfg.trials),
        seed: cfg.seed,
        redraw: cfg.redraw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source_model::example_table;

    #[test]
    fn sequence_space_indexing() {
        let pmf = example_table();
        let space = SequenceSpace::new(&pmf, 2, DEFAULT_PAIR_BUDGET).unwrap();
        assert_eq!(space.count1(), 4);
        assert_eq!(space.count2(), 4);
        // block ((0,0),(0,0)) has probability 0.5^2
        assert!((space.ln_pair(0, 0) - (0.25f64).ln()).abs() < 1e-12);
        // x1 = (0,1) -> index 1 read little-endian in construction order:
        // probability P(0, b0) * P(1, b1)
        let lp = space.ln_pair(1, 0);
        assert!((lp - (pmf.joint(1, 0) * pmf.joint(0, 0)).ln()).abs() < 1e-12);
    }

    #[test]
    fn budget_rejected() {
        let pmf = example_table();
        assert!(matches!(
            SequenceSpace::new(&pmf, 30, DEFAULT_PAIR_BUDGET),
            Err(SimError::BudgetExceeded(_))
        ));
        // configurable cap
        assert!(SequenceSpace::new(&pmf, 4, 1 << 10).is_ok());
        assert!(SequenceSpace::new(&pmf, 6, 1 << 10).is_err());
    }

    #[test]
    fn code_draw_deterministic_and_balanced() {
        let pmf = example_table();
        let space = SequenceSpace::new(&pmf, 2, DEFAULT_PAIR_BUDGET).unwrap();
        let a = BinningCode::draw(&space, 2, 2, 42).unwrap();
        let b = BinningCode::draw(&space, 2, 2, 42).unwrap();
        assert_eq!(a, b);
        // bin of sequence 0 is uniform over seeds
        let mut zeros = 0u64;
        let total = 100_000u64;
        for seed in 0..total {
            let c = BinningCode::draw(&space, 2, 2, seed).unwrap();
            if c.encode1(0) == 0 {
                zeros += 1;
            }
        }
        let sd = (total as f64 * 0.25).sqrt();
        assert!(
            (zeros as f64 - total as f64 / 2.0).abs() < 3.0 * sd,
            "zeros = {zeros}"
        );
    }

    #[test]
    fn singleton_bins_decode_perfectly() {
        let pmf = example_table();
        let n = 2u32;
        let space = SequenceSpace::new(&pmf, n, DEFAULT_PAIR_BUDGET).unwrap();
        // identity binning: every sequence its own bin
        let code = BinningCode::from_bins(
            n,
            space.count1() as u32,
            space.count2() as u32,
            (0..space.count1() as u32).collect(),
            (0..space.count2() as u32).collect(),
            0,
        )
        .unwrap();
        for x1 in 0..space.count1() {
            for x2 in 0..space.count2() {
                let got = ml_decode(&code, &space, x1 as u32, x2 as u32).unwrap();
                assert_eq!(got, (x1, x2));
            }
        }
    }

    #[test]
    fn single_bin_decodes_to_mode() {
        let pmf = example_table();
        let n = 4u32;
        let space = SequenceSpace::new(&pmf, n, DEFAULT_PAIR_BUDGET).unwrap();
        let code =
            BinningCode::from_bins(n, 1, 1, vec![0; space.count1()], vec![0; space.count2()], 0)
                .unwrap();
        // the global mode is the all-(0,0) block for this table
        assert_eq!(ml_decode(&code, &space, 0, 0).unwrap(), (0, 0));
        // empirical error rate matches 1 - P(mode)
        let cfg = EnsembleConfig::new(n, 1, 1, 4000, CodeRedraw::Fixed, 11);
        let report = ensemble_error(&pmf, &cfg).unwrap();
        let expected = 1.0 - 0.5f64.powi(n as i32);
        assert!(
            report.rate >= report.ci95.0 && report.rate <= report.ci95.1,
            "rate inside its own CI"
        );
        assert!(
            (report.rate - expected).abs() < 4.0 * (expected * (1.0 - expected) / 4000f64).sqrt(),
            "rate {} vs analytic {expected}",
            report.rate
        );
    }

    #[test]
    fn report_reproducible_and_trials_validated() {
        let pmf = example_table();
        let cfg = EnsembleConfig::new(4, 4, 4, 500, CodeRedraw::PerTrial, 1234);
        let a = ensemble_error(&pmf, &cfg).unwrap();
        let b = ensemble_error(&pmf, &cfg).unwrap();
        assert_eq!(a, b);
        let zero = EnsembleConfig::new(4, 4, 4, 0, CodeRedraw::PerTrial, 1234);
        assert_eq!(ensemble_error(&pmf, &zero), Err(SimError::InvalidTrials));
    }

    #[test]
    fn report_identical_across_thread_counts() {
        let pmf = example_table();
        let mut base = EnsembleConfig::new(5, 8, 8, 700, CodeRedraw::PerTrial, 77);
        let single = ensemble_error(&pmf, &base).unwrap();
        for threads in [2usize, 3, 8] {
            base.threads = threads;
            assert_eq!(ensemble_error(&pmf, &base).unwrap(), single);
        }
        base.threads = 4;
        base.redraw = CodeRedraw::Fixed;
        let fixed_single = {
            let mut c = base.clone();
            c.threads = 1;
            ensemble_error(&pmf, &c).unwrap()
        };
        assert_eq!(ensemble_error(&pmf, &base).unwrap(), fixed_single);
    }

    #[test]
    fn error_rate_monotone_in_bin_counts() {
        let pmf = example_table();
        let mut prev = 1.1;
        for m in [2u32, 8, 64] {
            let cfg = EnsembleConfig::new(6, m, m, 2500, CodeRedraw::PerTrial, 5);
            let r = ensemble_error(&pmf, &cfg).unwrap();
            // allow CI-width slack in the monotonicity check
            assert!(
                r.rate <= prev + (r.ci95.1 - r.ci95.0),
                "m = {m}: rate {} vs previous {prev}",
                r.rate
            );
            prev = r.rate;
        }
        // per-coordinate: growing one side alone cannot hurt either
        let mut prev = 1.1;
        for m1 in [2u32, 8, 64] {
            let cfg = EnsembleConfig::new(6, m1, 16, 2500, CodeRedraw::PerTrial, 5);
            let r = ensemble_error(&pmf, &cfg).unwrap();
            assert!(r.rate <= prev + (r.ci95.1 - r.ci95.0), "m1 = {m1}");
            prev = r.rate;
        }
    }

    #[test]
    fn achievability_sizing_is_covered_by_the_bound() {
        // code sizes from the demo formula keep the empirical ensemble
        // error under the matching achievability bound, non-vacuously
        let pmf = example_table();
        let stats = pmf.stats();
        let n = 10u32;
        let gamma = 2.0;
        let (l1, l2) = (1.0, 1.0);
        let (m1, m2) =
            achievability_code_sizes(n, stats.h1_given_2, stats.h2, l1, l2, gamma).unwrap();
        assert!(m1 > 1 && m2 > 1);
        let upper =
            crate::spectrum::achievability_bound(&pmf, n as u64, m1 as f64, m2 as f64, gamma)
                .unwrap();
        assert!(
            upper.value < 0.2,
            "bound should be informative, got {}",
            upper.value
        );
        let cfg = EnsembleConfig::new(n, m1, m2, 3000, CodeRedraw::PerTrial, 21);
        let report = ensemble_error(&pmf, &cfg).unwrap();
        let ci_half = 0.5 * (report.ci95.1 - report.ci95.0);
        assert!(
            report.rate <= upper.value + 3.0 * ci_half,
            "rate {} above bound {}",
            report.rate,
            upper.value
        );
        // converse at starved sizes stays below the observed error
        let lower = crate::spectrum::converse_bound(&pmf, n as u64, 32.0, 32.0, 3.0).unwrap();
        assert!(lower.value > 0.0, "converse should be informative");
        let cfg = EnsembleConfig::new(n, 32, 32, 3000, CodeRedraw::PerTrial, 22);
        let starved = ensemble_error(&pmf, &cfg).unwrap();
        let ci_half = 0.5 * (starved.ci95.1 - starved.ci95.0);
        assert!(starved.rate >= lower.value - 3.0 * ci_half);
    }

    #[test]
    fn extreme_rate_regimes() {
        let pmf = example_table();
        let stats = pmf.stats();
        let n = 10u32;
        // code sizes far above the corner: error < 5%
        let r1 = stats.h1_given_2 + 3.0 * stats.var(0).sqrt();
        let r2 = stats.h2 + 3.0 * stats.var(2).sqrt();
        let m1 = (n as f64 * r1).exp().ceil() as u32;
        let m2 = (n as f64 * r2).exp().ceil() as u32;
        let cfg = EnsembleConfig::new(n, m1, m2, 2000, CodeRedraw::PerTrial, 9);
        let good = ensemble_error(&pmf, &cfg).unwrap();
        assert!(good.rate < 0.05, "rate {}", good.rate);
        // starved code: error > 90%
        let cfg = EnsembleConfig::new(n, 2, 2, 2000, CodeRedraw::PerTrial, 9);
        let bad = ensemble_error(&pmf, &cfg).unwrap();
        assert!(bad.rate > 0.9, "rate {}", bad.rate);
    }

    #[test]
    fn empty_bin_pair_only_for_foreign_bins() {
        let pmf = example_table();
        let space = SequenceSpace::new(&pmf, 2, DEFAULT_PAIR_BUDGET).unwrap();
        // all sequences in bin 0 of 2: bin 1 has no preimage
        let code =
            BinningCode::from_bins(2, 2, 2, vec![0; space.count1()], vec![0; space.count2()], 0)
                .unwrap();
        assert_eq!(ml_decode(&code, &space, 1, 0), Err(SimError::EmptyBinPair));
        assert!(ml_decode(&code, &space, 0, 0).is_ok());
    }
}
