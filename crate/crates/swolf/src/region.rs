//! First-order Slepian-Wolf polygons and second-order achievable-rate
//! regions for i.i.d. and finite mixed sources.
//!
//! Every question here is anchored at a first-order rate pair `(a1, a2)`.
//! Only the anchor's position relative to the polygon matters:
//!
//! * interior: every `(L1, L2)` is achievable;
//! * exterior: none is;
//! * boundary: the achievable set is a half-plane, a vertical half-plane or
//!   the region above a curved corner arc, cut out by one of the normal-CDF
//!   conditions evaluated from the dispersion matrix.
//!
//! Boundary membership is closed (`>=`): a point where the CDF condition
//! holds with equality belongs to the region. Anchors are compared against
//! entropies with snapping tolerance [`TOL_SNAP`]; the case analysis is
//! discontinuous in `(a1, a2)`, so callers wanting an exact corner should
//! pass entropies computed by this library (see [`Anchor`]).

use thiserror::Error;

use crate::gaussian::{phi1, phi1_inv, phi2, phi3, Cov3, GaussianError};
use crate::linalg::sym2_eigenvalues;
use crate::source_model::{MixedSource, SourceStats, POSITIVE_DEFINITE_EIGENVALUE_MIN};

/// Snapping tolerance (nats) when comparing an anchor against entropies.
pub const TOL_SNAP: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum RegionError {
    #[error("epsilon must lie in [0, 1)")]
    EpsilonOutOfRange,
    #[error("rates must be finite")]
    NonFiniteRate,
    #[error("blocklength must be at least 1")]
    InvalidBlocklength,
    #[error("the dispersion marginal required by this case is degenerate")]
    DegenerateSigma,
    #[error("mixture component {0} has a degenerate required dispersion marginal")]
    DegenerateComponentSigma(usize),
    #[error("no boundary solution at grid value {at}: anchor coordinate below the asymptote")]
    NoSolution { at: f64 },
    #[error("boundary curves exist only for anchors on the polygon boundary")]
    UnsupportedCase,
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
}

/// A second-order region question: first-order anchor plus error target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionQuery {
    pub a1: f64,
    pub a2: f64,
    pub epsilon: f64,
}

impl RegionQuery {
    pub fn new(a1: f64, a2: f64, epsilon: f64) -> Result<Self, RegionError> {
        if !a1.is_finite() || !a2.is_finite() {
            return Err(RegionError::NonFiniteRate);
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(RegionError::EpsilonOutOfRange);
        }
        Ok(Self { a1, a2, epsilon })
    }
}

/// A candidate second-order rate pair, nats per sqrt-symbol. May be negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderPoint {
    pub l1: f64,
    pub l2: f64,
}

impl SecondOrderPoint {
    pub fn new(l1: f64, l2: f64) -> Result<Self, RegionError> {
        if !l1.is_finite() || !l2.is_finite() {
            return Err(RegionError::NonFiniteRate);
        }
        Ok(Self { l1, l2 })
    }

    pub fn sum(&self) -> f64 {
        self.l1 + self.l2
    }
}

/// Which corner of the polygon an anchor sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    /// `(H(X1|X2), H(X2))`.
    First,
    /// `(H(X1), H(X2|X1))`.
    Second,
}

/// Which full side of the polygon an anchor sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `a1 = H(X1|X2)`, `a2 > H(X2)`.
    First,
    /// `a1 > H(X1)`, `a2 = H(X2|X1)`.
    Second,
}

/// Position of an anchor relative to the Slepian-Wolf polygon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryCase {
    Interior,
    Exterior,
    /// Corner point. For independent sources both corners coincide and
    /// `corner` is reported as [`Corner::First`].
    CornerI {
        corner: Corner,
    },
    /// Non-corner point of the sum-rate edge, the `lambda`-blend of the two
    /// corners with `lambda` in (0, 1). Exists only for correlated sources.
    NonCornerII {
        lambda: f64,
    },
    FullSideIII {
        side: Side,
    },
}

/// First-order polygon: three half-plane constraints and the two corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwPolygon {
    /// `R1 >= H(X1|X2)`.
    pub r1_min: f64,
    /// `R2 >= H(X2|X1)`.
    pub r2_min: f64,
    /// `R1 + R2 >= H(X1 X2)`.
    pub sum_min: f64,
    /// `(H(X1|X2), H(X2))`.
    pub corner1: (f64, f64),
    /// `(H(X1), H(X2|X1))`.
    pub corner2: (f64, f64),
}

impl SwPolygon {
    pub fn contains(&self, r1: f64, r2: f64) -> bool {
        r1 >= self.r1_min - TOL_SNAP
            && r2 >= self.r2_min - TOL_SNAP
            && r1 + r2 >= self.sum_min - TOL_SNAP
    }
}

/// The Slepian-Wolf polygon of a source.
pub fn first_order_region(stats: &SourceStats) -> SwPolygon {
    SwPolygon {
        r1_min: stats.h1_given_2,
        r2_min: stats.h2_given_1,
        sum_min: stats.h12,
        corner1: (stats.h1_given_2, stats.h2),
        corner2: (stats.h1, stats.h2_given_1),
    }
}

fn snap(x: f64) -> f64 {
    if x.abs() <= TOL_SNAP {
        0.0
    } else {
        x
    }
}

/// Classifies an anchor against the polygon with [`TOL_SNAP`] snapping.
pub fn classify(stats: &SourceStats, q: &RegionQuery) -> Result<BoundaryCase, RegionError> {
    let s1 = snap(q.a1 - stats.h1_given_2);
    let s2 = snap(q.a2 - stats.h2_given_1);
    let s3 = snap(q.a1 + q.a2 - stats.h12);
    if s1 < 0.0 || s2 < 0.0 || s3 < 0.0 {
        return Ok(BoundaryCase::Exterior);
    }
    Ok(match (s1 > 0.0, s2 > 0.0, s3 > 0.0) {
        (true, true, true) => BoundaryCase::Interior,
        // s1 = s3 = 0 is the first corner; with s2 = 0 as well the source is
        // independent and the two corners coincide.
        (false, _, false) => BoundaryCase::CornerI {
            corner: Corner::First,
        },
        (true, false, false) => BoundaryCase::CornerI {
            corner: Corner::Second,
        },
        (true, true, false) => BoundaryCase::NonCornerII {
            lambda: s1 / (s1 + s2),
        },
        (false, true, true) => BoundaryCase::FullSideIII { side: Side::First },
        (true, false, true) => BoundaryCase::FullSideIII { side: Side::Second },
        // s1 = s2 = 0 with s3 > 0 would force negative mutual information;
        // it can only arise from snapping slop on a nearly-degenerate source.
        (false, false, true) => return Err(RegionError::DegenerateSigma),
    })
}

/// Outcome of a second-order membership question.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegionVerdict {
    Member {
        probability: f64,
    },
    NonMember {
        probability: f64,
    },
    /// Interior anchor: the region is all of the plane.
    AllOfPlane,
    /// Exterior anchor: the region is empty.
    Empty,
}

impl RegionVerdict {
    pub fn is_member(&self) -> bool {
        matches!(
            self,
            RegionVerdict::Member { .. } | RegionVerdict::AllOfPlane
        )
    }

    /// The evaluated limit probability backing the verdict.
    pub fn probability(&self) -> f64 {
        match self {
            RegionVerdict::Member { probability } | RegionVerdict::NonMember { probability } => {
                *probability
            }
            RegionVerdict::AllOfPlane => 1.0,
            RegionVerdict::Empty => 0.0,
        }
    }
}

fn require_var(v: f64) -> Result<f64, RegionError> {
    if v > POSITIVE_DEFINITE_EIGENVALUE_MIN {
        Ok(v)
    } else {
        Err(RegionError::DegenerateSigma)
    }
}

fn require_posdef2(m: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2], RegionError> {
    if sym2_eigenvalues(&m)[0] > POSITIVE_DEFINITE_EIGENVALUE_MIN {
        Ok(m)
    } else {
        Err(RegionError::DegenerateSigma)
    }
}

/// The limit CDF value deciding membership for a classified boundary case.
fn case_probability(
    stats: &SourceStats,
    case: &BoundaryCase,
    pt: &SecondOrderPoint,
) -> Result<f64, RegionError> {
    Ok(match case {
        BoundaryCase::Interior => 1.0,
        BoundaryCase::Exterior => 0.0,
        BoundaryCase::CornerI {
            corner: Corner::First,
        } => {
            if stats.mutual_info <= TOL_SNAP {
                // Coincident corner of an independent source: the condition
                // is on the pair (L1, L2) directly.
                let cov = require_posdef2(stats.sigma2(0, 1))?;
                phi2(pt.l1, pt.l2, &cov)?
            } else {
                let cov = require_posdef2(stats.sigma2(0, 2))?;
                phi2(pt.l1, pt.sum(), &cov)?
            }
        }
        BoundaryCase::CornerI {
            corner: Corner::Second,
        } => {
            let cov = require_posdef2(stats.sigma2(1, 2))?;
            phi2(pt.l2, pt.sum(), &cov)?
        }
        BoundaryCase::NonCornerII { .. } => phi1(pt.sum(), require_var(stats.var(2))?)?,
        BoundaryCase::FullSideIII { side: Side::First } => phi1(pt.l1, require_var(stats.var(0))?)?,
        BoundaryCase::FullSideIII { side: Side::Second } => {
            phi1(pt.l2, require_var(stats.var(1))?)?
        }
    })
}

/// Second-order membership under the limiting case formula.
pub fn membership(
    stats: &SourceStats,
    q: &RegionQuery,
    pt: &SecondOrderPoint,
) -> Result<RegionVerdict, RegionError> {
    let case = classify(stats, q)?;
    match case {
        BoundaryCase::Interior => Ok(RegionVerdict::AllOfPlane),
        BoundaryCase::Exterior => Ok(RegionVerdict::Empty),
        _ => {
            let probability = case_probability(stats, &case, pt)?;
            if probability >= 1.0 - q.epsilon {
                Ok(RegionVerdict::Member { probability })
            } else {
                Ok(RegionVerdict::NonMember { probability })
            }
        }
    }
}

/// The canonical finite-`n` functional: one trivariate CDF evaluation that
/// needs no case analysis.
///
/// Returns `Phi(sqrt(n)(a1 - H(X1|X2)) + L1, sqrt(n)(a2 - H(X2|X1)) + L2,
/// sqrt(n)(a1 + a2 - H(X1 X2)) + L1 + L2)`; membership at blocklength `n`
/// means this value is at least `1 - eps`. As `n` grows it converges to the
/// classified case probability.
pub fn canonical_membership(
    stats: &SourceStats,
    q: &RegionQuery,
    pt: &SecondOrderPoint,
    n: u64,
) -> Result<f64, RegionError> {
    if n == 0 {
        return Err(RegionError::InvalidBlocklength);
    }
    if !stats.sigma_positive_definite {
        return Err(RegionError::DegenerateSigma);
    }
    let rn = (n as f64).sqrt();
    let cov = Cov3::new(stats.sigma)?;
    Ok(phi3(
        rn * (q.a1 - stats.h1_given_2) + pt.l1,
        rn * (q.a2 - stats.h2_given_1) + pt.l2,
        rn * (q.a1 + q.a2 - stats.h12) + pt.sum(),
        &cov,
    )?)
}

/// Geometric bracket expansion followed by bisection for the unique root of
/// the increasing function `f`, starting from a known-nonpositive point `lo`.
fn solve_increasing(f: &dyn Fn(f64) -> f64, lo: f64, step0: f64) -> Option<f64> {
    let mut step = step0;
    let mut hi = lo + step;
    let mut grew = 0;
    while f(hi) < 0.0 {
        step *= 2.0;
        hi = lo + step;
        grew += 1;
        if grew > 60 {
            return None;
        }
    }
    let (mut a, mut b) = (hi - step, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if f(mid) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a <= 1e-9 {
            break;
        }
    }
    Some(0.5 * (a + b))
}

/// Points on the boundary of the second-order region.
///
/// * Corner anchors: for each grid value `g` (an `L1` sample for the first
///   corner, an `L2` sample for the second) past the case asymptote, the
///   unique complementary coordinate with CDF value exactly `1 - eps`.
/// * Sum-edge anchors: the line `L1 + L2 = T_II`, sampled at `L1 = g`.
/// * Full-side anchors: the line `L1 = T_III` (or `L2 = T_III`), with the
///   free coordinate sampled at `g`.
pub fn boundary_curve(
    stats: &SourceStats,
    q: &RegionQuery,
    grid: &[f64],
) -> Result<Vec<SecondOrderPoint>, RegionError> {
    if !(q.epsilon > 0.0 && q.epsilon < 1.0) {
        return Err(RegionError::EpsilonOutOfRange);
    }
    let target = 1.0 - q.epsilon;
    let case = classify(stats, q)?;
    let mut out = Vec::with_capacity(grid.len());
    match case {
        BoundaryCase::Interior | BoundaryCase::Exterior => {
            return Err(RegionError::UnsupportedCase)
        }
        BoundaryCase::NonCornerII { .. } => {
            let t = phi1_inv(target, require_var(stats.var(2))?)?;
            for &g in grid {
                out.push(SecondOrderPoint { l1: g, l2: t - g });
            }
        }
        BoundaryCase::FullSideIII { side } => {
            let t = match side {
                Side::First => phi1_inv(target, require_var(stats.var(0))?)?,
                Side::Second => phi1_inv(target, require_var(stats.var(1))?)?,
            };
            for &g in grid {
                out.push(match side {
                    Side::First => SecondOrderPoint { l1: t, l2: g },
                    Side::Second => SecondOrderPoint { l1: g, l2: t },
                });
            }
        }
        BoundaryCase::CornerI { corner } => {
            let independent = stats.mutual_info <= TOL_SNAP;
            // pinned coordinate variance, pair covariance, free-coordinate
            // variance used to size the bracket
            let (pin_var, cov, free_var) = match (corner, independent) {
                (Corner::First, false) => (
                    stats.var(0),
                    require_posdef2(stats.sigma2(0, 2))?,
                    stats.var(2),
                ),
                (Corner::Second, false) => (
                    stats.var(1),
                    require_posdef2(stats.sigma2(1, 2))?,
                    stats.var(2),
                ),
                (_, true) => (
                    stats.var(0),
                    require_posdef2(stats.sigma2(0, 1))?,
                    stats.var(1),
                ),
            };
            require_var(pin_var)?;
            let step0 = require_var(free_var)?.sqrt();
            for &g in grid {
                // Existence: the pinned-coordinate marginal must exceed the
                // target, otherwise no second coordinate can compensate.
                if phi1(g, pin_var)? <= target {
                    return Err(RegionError::NoSolution { at: g });
                }
                let f = |s: f64| phi2(g, s, &cov).unwrap_or(0.0) - target;
                let lo = phi1_inv(target, free_var)?;
                let s = solve_increasing(&f, lo, step0).ok_or(RegionError::NoSolution { at: g })?;
                out.push(match (corner, independent) {
                    (Corner::First, false) => SecondOrderPoint { l1: g, l2: s - g },
                    (Corner::Second, false) => SecondOrderPoint { l1: s - g, l2: g },
                    (_, true) => SecondOrderPoint { l1: g, l2: s },
                });
            }
        }
    }
    Ok(out)
}

/// One emitted point of a finite-`n` boundary approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteNPoint {
    pub anchor: (f64, f64),
    pub case: BoundaryCase,
    /// Second-order boundary offset at the anchor.
    pub l: SecondOrderPoint,
    /// `anchor + l / sqrt(n)`.
    pub rate: (f64, f64),
}

/// Default anchor sampling of the polygon boundary: one full-side anchor,
/// the first corner, `case2` interior sum-edge points, the second corner,
/// and a full-side anchor on the other side, offset by `side_offset` nats.
pub fn sw_boundary_anchors(stats: &SourceStats, case2: usize, side_offset: f64) -> Vec<(f64, f64)> {
    let mut anchors = Vec::new();
    anchors.push((stats.h1_given_2, stats.h2 + side_offset));
    anchors.push((stats.h1_given_2, stats.h2));
    for i in 1..=case2 {
        let lambda = i as f64 / (case2 + 1) as f64;
        anchors.push((
            lambda * stats.h1 + (1.0 - lambda) * stats.h1_given_2,
            (1.0 - lambda) * stats.h2 + lambda * stats.h2_given_1,
        ));
    }
    anchors.push((stats.h1, stats.h2_given_1));
    anchors.push((stats.h1 + side_offset, stats.h2_given_1));
    anchors
}

/// Gaussian-approximate achievable boundary at blocklength `n`: polygon
/// boundary anchors offset by their second-order boundary over `sqrt(n)`.
/// Corner anchors contribute an arc of `corner_points` samples
/// (geometrically spaced away from the asymptote); edge anchors contribute
/// their single natural offset along the edge normal.
///
/// Membership of the emitted rates is Gaussian-approximate, not an exact
/// finite-`n` guarantee.
pub fn finite_n_boundary(
    stats: &SourceStats,
    epsilon: f64,
    n: u64,
    anchors: &[(f64, f64)],
    corner_points: usize,
) -> Result<Vec<FiniteNPoint>, RegionError> {
    if n == 0 {
        return Err(RegionError::InvalidBlocklength);
    }
    let rn = (n as f64).sqrt();
    let mut out = Vec::new();
    for &(a1, a2) in anchors {
        let q = RegionQuery::new(a1, a2, epsilon)?;
        let case = classify(stats, &q)?;
        let ls: Vec<SecondOrderPoint> = match case {
            BoundaryCase::Interior | BoundaryCase::Exterior => {
                return Err(RegionError::UnsupportedCase)
            }
            BoundaryCase::NonCornerII { .. } => {
                let t = phi1_inv(1.0 - epsilon, require_var(stats.var(2))?)?;
                vec![SecondOrderPoint {
                    l1: 0.5 * t,
                    l2: 0.5 * t,
                }]
            }
            BoundaryCase::FullSideIII { side } => {
                let var = match side {
                    Side::First => stats.var(0),
                    Side::Second => stats.var(1),
                };
                let t = phi1_inv(1.0 - epsilon, require_var(var)?)?;
                vec![match side {
                    Side::First => SecondOrderPoint { l1: t, l2: 0.0 },
                    Side::Second => SecondOrderPoint { l1: 0.0, l2: t },
                }]
            }
            BoundaryCase::CornerI { corner } => {
                let pin_var = match (corner, stats.mutual_info <= TOL_SNAP) {
                    (Corner::Second, false) => stats.var(1),
                    _ => stats.var(0),
                };
                let sigma = require_var(pin_var)?.sqrt();
                // Sweep the pinned coordinate from just past its asymptote
                // out toward the sum-edge regime.
                let asym = phi1_inv(1.0 - epsilon, pin_var)?;
                let k = corner_points.max(2);
                let (delta, span) = (0.05 * sigma, 8.0 * sigma);
                let grid: Vec<f64> = (0..k)
                    .map(|i| {
                        let f = i as f64 / (k - 1) as f64;
                        asym + delta * (span / delta).powf(f)
                    })
                    .collect();
                boundary_curve(stats, &q, &grid)?
            }
        };
        for l in ls {
            out.push(FiniteNPoint {
                anchor: (a1, a2),
                case,
                l,
                rate: (a1 + l.l1 / rn, a2 + l.l2 / rn),
            });
        }
    }
    Ok(out)
}

/// How one mixture component relates to the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ComponentClass {
    /// Some coordinate strictly below its entropy: the corresponding CDF
    /// argument diverges to -infinity, so the component contributes 0.
    SomeNegative,
    /// All coordinates strictly above: contributes 1.
    AllPositive,
    /// Nonempty set of snapped-to-zero coordinates (bit i = coordinate i+1).
    AtBoundary { zero_mask: u8 },
}

fn classify_component(stats: &SourceStats, q: &RegionQuery) -> ComponentClass {
    let s1 = snap(q.a1 - stats.h1_given_2);
    let s2 = snap(q.a2 - stats.h2_given_1);
    let s3 = snap(q.a1 + q.a2 - stats.h12);
    if s1 < 0.0 || s2 < 0.0 || s3 < 0.0 {
        return ComponentClass::SomeNegative;
    }
    let mut mask = 0u8;
    if s1 == 0.0 {
        mask |= 0b001;
    }
    if s2 == 0.0 {
        mask |= 0b010;
    }
    if s3 == 0.0 {
        mask |= 0b100;
    }
    if mask == 0 {
        ComponentClass::AllPositive
    } else {
        ComponentClass::AtBoundary { zero_mask: mask }
    }
}

/// Marginal CDF of the boundary coordinates of one component.
fn component_boundary_probability(
    index: usize,
    stats: &SourceStats,
    zero_mask: u8,
    pt: &SecondOrderPoint,
) -> Result<f64, RegionError> {
    let deg = |_| RegionError::DegenerateComponentSigma(index);
    let var = |i: usize| require_var(stats.var(i)).map_err(deg);
    let pos2 = |i: usize, j: usize| require_posdef2(stats.sigma2(i, j)).map_err(deg);
    Ok(match zero_mask {
        0b001 => phi1(pt.l1, var(0)?)?,
        0b010 => phi1(pt.l2, var(1)?)?,
        0b100 => phi1(pt.sum(), var(2)?)?,
        0b101 => phi2(pt.l1, pt.sum(), &pos2(0, 2)?)?,
        0b110 => phi2(pt.l2, pt.sum(), &pos2(1, 2)?)?,
        // All three at equality: independent component, coincident corner.
        0b111 => phi2(pt.l1, pt.l2, &pos2(0, 1)?)?,
        // s1 = s2 = 0 with s3 > 0 would need negative mutual information.
        _ => return Err(RegionError::DegenerateComponentSigma(index)),
    })
}

/// Second-order membership for a finite mixture.
///
/// Each component contributes 0, 1, or the marginal CDF of its boundary
/// coordinates; the point is a member when the weighted sum reaches
/// `1 - eps`. The whole plane is achievable exactly when the all-positive
/// weight alone reaches `1 - eps`; the region is empty exactly when the
/// weight of components with a violated coordinate reaches `eps` (no finite
/// point can then close the gap, since every CDF factor stays below 1).
pub fn mixed_membership(
    mix: &MixedSource,
    q: &RegionQuery,
    pt: &SecondOrderPoint,
) -> Result<RegionVerdict, RegionError> {
    let mut w_one = 0.0;
    let mut w_zero = 0.0;
    let mut total = 0.0;
    for (index, (w, pmf)) in mix.components().iter().enumerate() {
        let stats = pmf.stats();
        match classify_component(&stats, q) {
            ComponentClass::SomeNegative => w_zero += w,
            ComponentClass::AllPositive => {
                w_one += w;
                total += w;
            }
            ComponentClass::AtBoundary { zero_mask } => {
                total += w * component_boundary_probability(index, &stats, zero_mask, pt)?;
            }
        }
    }
    let target = 1.0 - q.epsilon;
    if w_one >= target - 1e-12 {
        return Ok(RegionVerdict::AllOfPlane);
    }
    if w_zero >= q.epsilon - 1e-12 {
        return Ok(RegionVerdict::Empty);
    }
    if total >= target {
        Ok(RegionVerdict::Member { probability: total })
    } else {
        Ok(RegionVerdict::NonMember { probability: total })
    }
}

/// The mixture limit probability assembled set-by-set over the anchor
/// partition (components grouped by which entropy equalities the anchor
/// satisfies) rather than coordinate-by-coordinate as in
/// [`mixed_membership`]. The two routes must agree to 1e-9; keeping both is
/// a deliberate cross-check of the classification logic.
pub fn mixed_phi_lambda(
    mix: &MixedSource,
    q: &RegionQuery,
    pt: &SecondOrderPoint,
) -> Result<f64, RegionError> {
    let eq = |a: f64, b: f64| (a - b).abs() <= TOL_SNAP;
    let gt = |a: f64, b: f64| a - b > TOL_SNAP;
    let mut total = 0.0;
    for (index, (w, pmf)) in mix.components().iter().enumerate() {
        let st = pmf.stats();
        let deg = |_| RegionError::DegenerateComponentSigma(index);
        let in_l0 = gt(q.a1, st.h1_given_2) && gt(q.a2, st.h2_given_1) && gt(q.a1 + q.a2, st.h12);
        let in_l1 = eq(q.a1, st.h1_given_2) && gt(q.a2, st.h2);
        let in_l2 = gt(q.a1, st.h1) && eq(q.a2, st.h2_given_1);
        let in_l3 = gt(q.a1, st.h1_given_2) && gt(q.a2, st.h2_given_1) && eq(q.a1 + q.a2, st.h12);
        let in_l4 = eq(q.a1, st.h1_given_2) && eq(q.a2, st.h2);
        let in_l5 = eq(q.a1, st.h1) && eq(q.a2, st.h2_given_1);
        let p = if in_l0 {
            1.0
        } else if in_l1 {
            phi1(pt.l1, require_var(st.var(0)).map_err(deg)?)?
        } else if in_l2 {
            phi1(pt.l2, require_var(st.var(1)).map_err(deg)?)?
        } else if in_l3 {
            phi1(pt.sum(), require_var(st.var(2)).map_err(deg)?)?
        } else if in_l4 && in_l5 {
            phi2(
                pt.l1,
                pt.l2,
                &require_posdef2(st.sigma2(0, 1)).map_err(deg)?,
            )?
        } else if in_l4 {
            phi2(
                pt.l1,
                pt.sum(),
                &require_posdef2(st.sigma2(0, 2)).map_err(deg)?,
            )?
        } else if in_l5 {
            phi2(
                pt.l2,
                pt.sum(),
                &require_posdef2(st.sigma2(1, 2)).map_err(deg)?,
            )?
        } else {
            // Outside every boundary set some coordinate sits strictly below
            // its entropy, so the component's CDF argument diverges to
            // -infinity and the contribution vanishes.
            0.0
        };
        total += w * p;
    }
    Ok(total)
}

/// Symbolic anchor resolved against computed entropies, eliminating
/// float-entry snapping mistakes at corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    Corner1,
    Corner2,
    /// Sum-edge blend, `lambda` in (0, 1).
    CaseII {
        lambda: f64,
    },
    /// `(H(X1|X2), H(X2) + offset)`, `offset > 0` nats.
    CaseIIIFirst {
        offset: f64,
    },
    /// `(H(X1) + offset, H(X2|X1))`, `offset > 0` nats.
    CaseIIISecond {
        offset: f64,
    },
    Explicit {
        a1: f64,
        a2: f64,
    },
}

impl Anchor {
    pub fn resolve(&self, stats: &SourceStats) -> (f64, f64) {
        match *self {
            Anchor::Corner1 => (stats.h1_given_2, stats.h2),
            Anchor::Corner2 => (stats.h1, stats.h2_given_1),
            Anchor::CaseII { lambda } => (
                lambda * stats.h1 + (1.0 - lambda) * stats.h1_given_2,
                (1.0 - lambda) * stats.h2 + lambda * stats.h2_given_1,
            ),
            Anchor::CaseIIIFirst { offset } => (stats.h1_given_2, stats.h2 + offset),
            Anchor::CaseIIISecond { offset } => (stats.h1 + offset, stats.h2_given_1),
            Anchor::Explicit { a1, a2 } => (a1, a2),
        }
    }
}
