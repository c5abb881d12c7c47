//! Gallager-type exponential error bounds for the Slepian-Wolf system, with
//! the three exponent parameters optimized independently, and their Gaussian
//! asymptotics.
//!
//! The three single-letter exponent functions are
//!
//! ```text
//! E1(s) = ln sum_x2 ( sum_x1 P(x1,x2)^(1/(1+s)) )^(1+s)
//! E2(s) = ln sum_x1 ( sum_x2 P(x1,x2)^(1/(1+s)) )^(1+s)
//! E3(s) = ln ( sum_{x1,x2} P(x1,x2)^(1/(1+s)) )^(1+s)
//! ```
//!
//! each vanishing at `s = 0`, with first derivative there equal to the
//! matching entropy (`H(X1|X2)`, `H(X2|X1)`, `H(X1 X2)`) and second
//! derivative equal to the matching dispersion diagonal entry. The error
//! bound at blocklength `n` and rates `(R1, R2)` is the sum of the three
//! independently minimized terms `exp[-n (R s - E(s))]`, `s` in [0, 1].

use thiserror::Error;

use crate::region::{BoundaryCase, Corner, SecondOrderPoint, Side};
use crate::source_model::{JointPmf, SourceStats};

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("exponent parameter must lie in [0, 1]")]
    OutOfRange,
    #[error("the sign constraint of this case is violated (need L1 >= 0 and/or L1+L2 >= 0)")]
    SignConstraintViolated,
    #[error("this quantity is defined only for boundary anchors")]
    UnsupportedCase,
}

/// Which of the three exponent functions to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentKind {
    /// Exponent paired with the `R1` rate term (inner sum over `x1`).
    Rate1,
    /// Exponent paired with the `R2` rate term (inner sum over `x2`).
    Rate2,
    /// Exponent paired with the sum rate (sum over all cells).
    SumRate,
}

/// One exponent function bound to a source.
#[derive(Debug, Clone)]
pub struct ExponentFn<'a> {
    pub kind: ExponentKind,
    pub pmf: &'a JointPmf,
}

impl<'a> ExponentFn<'a> {
    pub fn new(kind: ExponentKind, pmf: &'a JointPmf) -> Self {
        Self { kind, pmf }
    }

    /// `E(s)` for `s` in [0, 1], in nats.
    pub fn eval(&self, s: f64) -> Result<f64, BoundsError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(BoundsError::OutOfRange);
        }
        Ok(self.eval_unrestricted(s))
    }

    /// `E(s)` on the full analytic domain `s > -1`; used for finite
    /// differences about 0, where the central stencil needs `s < 0`.
    pub fn eval_unrestricted(&self, s: f64) -> f64 {
        let inv = 1.0 / (1.0 + s);
        let pmf = self.pmf;
        // log-sum-exp over the inner index keeps tiny probabilities stable
        let inner_lse = |terms: &mut dyn Iterator<Item = f64>| -> f64 {
            let logs: Vec<f64> = terms.filter(|&p| p > 0.0).map(|p| inv * p.ln()).collect();
            let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
        };
        match self.kind {
            ExponentKind::Rate1 => {
                let outer: Vec<f64> = (0..pmf.cols())
                    .map(|x2| {
                        let mut it = (0..pmf.rows()).map(|x1| pmf.joint(x1, x2));
                        (1.0 + s) * inner_lse(&mut it)
                    })
                    .collect();
                let m = outer.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                m + outer.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
            }
            ExponentKind::Rate2 => {
                let outer: Vec<f64> = (0..pmf.rows())
                    .map(|x1| {
                        let mut it = (0..pmf.cols()).map(|x2| pmf.joint(x1, x2));
                        (1.0 + s) * inner_lse(&mut it)
                    })
                    .collect();
                let m = outer.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                m + outer.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
            }
            ExponentKind::SumRate => {
                let mut it = pmf.cells().iter().copied();
                (1.0 + s) * inner_lse(&mut it)
            }
        }
    }
}

/// Evaluates the exponent function `e` at `s` in [0, 1].
pub fn exponent(e: &ExponentFn<'_>, s: f64) -> Result<f64, BoundsError> {
    e.eval(s)
}

/// Maximum of the concave map `s -> rate * s - E(s)` over [0, 1] by
/// golden-section search, guarded by a 64-point grid scan.
fn max_rate_exponent(e: &ExponentFn<'_>, rate: f64) -> f64 {
    let g = |s: f64| rate * s - e.eval_unrestricted(s);
    // grid scan fallback
    let mut best = f64::NEG_INFINITY;
    for i in 0..=64 {
        best = best.max(g(i as f64 / 64.0));
    }
    // golden section on [0, 1]
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = g(c);
    let mut fd = g(d);
    while b - a > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = g(d);
        }
    }
    best.max(g(0.5 * (a + b)))
}

/// Exponential error bound with possible clamping to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampedBound {
    /// Sum of the three exponential terms as computed; may exceed 1.
    pub raw: f64,
    /// `raw` clamped to [0, 1].
    pub value: f64,
}

impl ClampedBound {
    pub fn from_raw(raw: f64) -> Self {
        Self {
            raw,
            value: raw.clamp(0.0, 1.0),
        }
    }

    pub fn clamped(&self) -> bool {
        self.raw > 1.0 || self.raw < 0.0
    }
}

/// Error-probability upper bound at blocklength `n` and rates `(r1, r2)`
/// nats/symbol: the sum of the three independently optimized exponential
/// terms, clamped to [0, 1].
pub fn koshelev_bound(pmf: &JointPmf, r1: f64, r2: f64, n: u64) -> ClampedBound {
    let nf = n as f64;
    let t1 = max_rate_exponent(&ExponentFn::new(ExponentKind::Rate1, pmf), r1);
    let t2 = max_rate_exponent(&ExponentFn::new(ExponentKind::Rate2, pmf), r2);
    let t3 = max_rate_exponent(&ExponentFn::new(ExponentKind::SumRate, pmf), r1 + r2);
    ClampedBound::from_raw((-nf * t1).exp() + (-nf * t2).exp() + (-nf * t3).exp())
}

/// Large-`n` Gaussian form of the bound at a boundary anchor:
///
/// * corner: `exp[-L1^2 / (2 s11)] + exp[-(L1+L2)^2 / (2 s33)]`
///   (needs `L1 >= 0` and `L1 + L2 >= 0`);
/// * sum edge: `exp[-(L1+L2)^2 / (2 s33)]` (needs `L1 + L2 >= 0`);
/// * full side: `exp[-L1^2 / (2 s11)]` (needs `L1 >= 0`).
///
/// The second corner and second side mirror through `(L2, s22)`.
pub fn gaussian_tail_bound(
    stats: &SourceStats,
    case: &BoundaryCase,
    pt: &SecondOrderPoint,
) -> Result<f64, BoundsError> {
    let term = |l: f64, var: f64| (-l * l / (2.0 * var)).exp();
    match case {
        BoundaryCase::CornerI { corner } => {
            let (l_pin, pin_var) = match corner {
                Corner::First => (pt.l1, stats.var(0)),
                Corner::Second => (pt.l2, stats.var(1)),
            };
            if l_pin < 0.0 || pt.sum() < 0.0 {
                return Err(BoundsError::SignConstraintViolated);
            }
            Ok(term(l_pin, pin_var) + term(pt.sum(), stats.var(2)))
        }
        BoundaryCase::NonCornerII { .. } => {
            if pt.sum() < 0.0 {
                return Err(BoundsError::SignConstraintViolated);
            }
            Ok(term(pt.sum(), stats.var(2)))
        }
        BoundaryCase::FullSideIII { side } => {
            let (l, var) = match side {
                Side::First => (pt.l1, stats.var(0)),
                Side::Second => (pt.l2, stats.var(1)),
            };
            if l < 0.0 {
                return Err(BoundsError::SignConstraintViolated);
            }
            Ok(term(l, var))
        }
        BoundaryCase::Interior | BoundaryCase::Exterior => Err(BoundsError::UnsupportedCase),
    }
}

/// Sampling layout for a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub enum TableSpec {
    /// Rectangular `(L1, L2)` grid (contour data).
    Grid { l1: Vec<f64>, l2: Vec<f64> },
    /// Diagonal `L1 = L2 = v` sweep.
    Diagonal { values: Vec<f64> },
    /// 1-D sweep of the case's own coordinate (`L1+L2` split evenly on the
    /// sum edge, `L1` or `L2` on a full side placed in that coordinate).
    Sweep { values: Vec<f64> },
}

/// One comparison row: the second-order error `1 - Phi_case` next to the
/// Gaussian-asymptotic exponential bound (absent where its sign constraints
/// fail).
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub l1: f64,
    pub l2: f64,
    pub second_order_error: f64,
    pub koshelev_error: Option<f64>,
}

/// Tabulates `1 - Phi_case` against the Gaussian-asymptotic bound over the
/// requested sampling, for contouring or 1-D comparison plots.
pub fn comparison_table(
    stats: &SourceStats,
    q: &crate::region::RegionQuery,
    spec: &TableSpec,
) -> Result<Vec<ComparisonRow>, crate::region::RegionError> {
    let case = crate::region::classify(stats, q)?;
    if matches!(case, BoundaryCase::Interior | BoundaryCase::Exterior) {
        return Err(crate::region::RegionError::UnsupportedCase);
    }
    let points: Vec<SecondOrderPoint> = match spec {
        TableSpec::Grid { l1, l2 } => l1
            .iter()
            .flat_map(|&a| l2.iter().map(move |&b| SecondOrderPoint { l1: a, l2: b }))
            .collect(),
        TableSpec::Diagonal { values } => values
            .iter()
            .map(|&v| SecondOrderPoint { l1: v, l2: v })
            .collect(),
        TableSpec::Sweep { values } => values
            .iter()
            .map(|&v| match case {
                BoundaryCase::NonCornerII { .. } => SecondOrderPoint {
                    l1: 0.5 * v,
                    l2: 0.5 * v,
                },
                BoundaryCase::FullSideIII { side: Side::Second } => {
                    SecondOrderPoint { l1: 0.0, l2: v }
                }
                _ => SecondOrderPoint { l1: v, l2: 0.0 },
            })
            .collect(),
    };
    let mut rows = Vec::with_capacity(points.len());
    for pt in points {
        let verdict = crate::region::membership(stats, q, &pt)?;
        let second_order_error = 1.0 - verdict.probability();
        let koshelev_error = gaussian_tail_bound(stats, &case, &pt).ok();
        rows.push(ComparisonRow {
            l1: pt.l1,
            l2: pt.l2,
            second_order_error,
            koshelev_error,
        });
    }
    Ok(rows)
}
