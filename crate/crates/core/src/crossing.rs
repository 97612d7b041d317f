//! Crossing diagnostics for pairs of configurations: domain of crossing,
//! crossing energy, boundary-energy decomposition and the associated
//! estimates.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use serde::Serialize;
use thiserror::Error;

use crate::lattice::{alpha_beta_slices, clamp_variations, fmt_f64, AlphaBeta, LatticeError, Segment, Window};
use crate::model::{LocalEnergyModel, TwistMode};
use crate::quadrature::gl32;
use crate::solver::{verify_on_window, VerifyOptions};

#[derive(Debug, Error)]
pub enum CrossingError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("tail ordering undetermined on the {side} side of the overlap")]
    UndeterminedTails { side: &'static str },
    #[error("the minimum-maximum principle needs the strong twist condition")]
    UnsupportedMode,
    #[error("{which} does not solve the recurrence near site {site} (residual {residual:e})")]
    NotASolution { which: &'static str, site: i64, residual: f64 },
    #[error("{which} failed minimality verification: {reason}")]
    NotAMinimizer { which: &'static str, reason: String },
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
}

const ENERGY_TOL: f64 = 1e-8;
const SITE_TOL: f64 = 1e-9;
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSign {
    XBelow,
    XAbove,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CrossingDomain {
    Empty,
    Bounded { j0: i64, j1: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingReport {
    pub overlap: (i64, i64),
    /// Roles of `x` and `y` were exchanged so that `x ≤ y` on the left tail.
    pub swapped: bool,
    pub j0: Option<i64>,
    pub j1: Option<i64>,
    pub domain: CrossingDomain,
    /// Tail signs of the input pair (before any exchange).
    pub tail_sign_neg: TailSign,
    pub tail_sign_pos: TailSign,
    pub touch_points: Vec<i64>,
}

impl CrossingReport {
    /// `j1 − j0` for a bounded domain.
    pub fn size(&self) -> Option<i64> {
        match self.domain {
            CrossingDomain::Bounded { j0, j1 } => Some(j1 - j0),
            CrossingDomain::Empty => None,
        }
    }
}

fn tail_sign(diffs: &[f64]) -> TailSign {
    // diffs are y − x
    if diffs.iter().all(|d| *d >= 0.0) {
        TailSign::XBelow
    } else if diffs.iter().all(|d| *d <= 0.0) {
        TailSign::XAbove
    } else {
        TailSign::Undetermined
    }
}

/// Domain of crossing of `x` and `y` on `overlap` for interaction range `r`.
pub fn domain_of_crossing(
    x: &Window,
    y: &Window,
    overlap: RangeInclusive<i64>,
    r: usize,
) -> Result<CrossingReport, CrossingError> {
    let (lo, hi) = (*overlap.start(), *overlap.end());
    let xs = x.slice(lo, hi)?;
    let ys = y.slice(lo, hi)?;
    let n = xs.len();
    if n < 3 || n < 2 * (r + 1) {
        return Err(CrossingError::Contract(format!(
            "overlap of length {n} is too short for tail certificates of length {}",
            r + 1
        )));
    }
    let diffs: Vec<f64> = xs.iter().zip(&ys).map(|(a, b)| b - a).collect();
    let left = tail_sign(&diffs[..r + 1]);
    let right = tail_sign(&diffs[n - r - 1..]);
    if left == TailSign::Undetermined {
        return Err(CrossingError::UndeterminedTails { side: "left" });
    }
    if right == TailSign::Undetermined {
        return Err(CrossingError::UndeterminedTails { side: "right" });
    }
    let swapped = left == TailSign::XAbove && diffs[..r + 1].iter().any(|d| *d != 0.0);
    let oriented: Vec<f64> = if swapped { diffs.iter().map(|d| -d).collect() } else { diffs.clone() };
    let right_oriented = tail_sign(&oriented[n - r - 1..]);

    let index = |k: usize| lo + k as i64;
    let j0 = oriented.iter().position(|d| *d < 0.0).map(index);
    let j1 = match right_oriented {
        TailSign::XBelow => oriented.iter().rposition(|d| *d < 0.0),
        _ => oriented.iter().rposition(|d| *d > 0.0),
    }
    .map(index);
    let domain = match (j0, j1) {
        (Some(a), Some(b)) if a <= b => CrossingDomain::Bounded { j0: a, j1: b },
        _ => CrossingDomain::Empty,
    };
    let touch_points = diffs.iter().enumerate().filter(|(_, d)| **d == 0.0).map(|(k, _)| index(k)).collect();
    Ok(CrossingReport {
        overlap: (lo, hi),
        swapped,
        j0,
        j1,
        domain,
        tail_sign_neg: left,
        tail_sign_pos: right,
        touch_points,
    })
}

/// Rows `i, x_i, y_i, α_i, β_i` for plotting.
pub fn crossing_tsv(x: &Window, y: &Window, range: RangeInclusive<i64>) -> Result<String, CrossingError> {
    let (lo, hi) = (*range.start(), *range.end());
    let xs = x.slice(lo, hi)?;
    let ys = y.slice(lo, hi)?;
    let ab = alpha_beta_slices(lo, &xs, &ys);
    let mut out = String::from("# index\tx\ty\talpha\tbeta\n");
    for k in 0..xs.len() {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            lo + k as i64,
            fmt_f64(xs[k]),
            fmt_f64(ys[k]),
            fmt_f64(ab.alpha[k]),
            fmt_f64(ab.beta[k])
        );
    }
    Ok(out)
}

fn check_range(model: &LocalEnergyModel, seg: Segment) -> Result<(), CrossingError> {
    if seg.r != model.range() {
        return Err(CrossingError::Contract(format!(
            "segment built for range {} but the model has range {}",
            seg.r,
            model.range()
        )));
    }
    Ok(())
}

/// Crossing energy of closure slices, with index 0 at `i0 − r`.
fn crossing_energy_slices(model: &LocalEnergyModel, xs: &[f64], ys: &[f64], sites: usize) -> f64 {
    let ab = alpha_beta_slices(0, xs, ys);
    let d: Vec<f64> = ys.iter().zip(xs).map(|(b, a)| b - a).collect();
    (0..sites)
        .map(|t| {
            model.local_increment(&xs[t..], &d[t..])
                - model.local_increment(&xs[t..], &ab.alpha[t..])
                - model.local_increment(&xs[t..], &ab.beta[t..])
        })
        .sum()
}

fn closure_slices(x: &Window, y: &Window, seg: Segment) -> Result<(Vec<f64>, Vec<f64>), CrossingError> {
    let c = seg.closure();
    Ok((x.slice(*c.start(), *c.end())?, y.slice(*c.start(), *c.end())?))
}

fn site_count(seg: Segment) -> usize {
    (seg.i1 - seg.i0) as usize + seg.r + 1
}

/// `W_B(y) − W_B(m) − W_B(M) + W_B(x)`.
pub fn crossing_energy(model: &LocalEnergyModel, x: &Window, y: &Window, seg: Segment) -> Result<f64, CrossingError> {
    check_range(model, seg)?;
    let (xs, ys) = closure_slices(x, y, seg)?;
    Ok(crossing_energy_slices(model, &xs, &ys, site_count(seg)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinMaxCheck {
    pub crossing_energy: f64,
    pub nonneg: bool,
    pub lower_bound: f64,
    /// `W^c_B ≥ lower_bound` within tolerance.
    pub bound_holds: bool,
}

pub fn minmax_principle_check(
    model: &LocalEnergyModel,
    x: &Window,
    y: &Window,
    seg: Segment,
) -> Result<MinMaxCheck, CrossingError> {
    if model.twist_mode() != TwistMode::Strong {
        return Err(CrossingError::UnsupportedMode);
    }
    check_range(model, seg)?;
    let (xs, ys) = closure_slices(x, y, seg)?;
    let w = crossing_energy_slices(model, &xs, &ys, site_count(seg));
    let ab = alpha_beta_slices(0, &xs, &ys);
    let mut mixed = 0.0;
    for i in 0..site_count(seg) {
        for j in i..=i + seg.r {
            mixed += ab.alpha[j] * ab.beta[i] + ab.alpha[i] * ab.beta[j];
        }
    }
    let lower_bound = -model.lambda() * mixed;
    Ok(MinMaxCheck {
        crossing_energy: w,
        nonneg: w >= -1e-10,
        lower_bound,
        bound_holds: w >= lower_bound - 1e-10 * lower_bound.abs().max(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// The pair `(M^B(x), m^B(y))`.
    XClamped,
    /// The pair `(M^B(y), m^B(x))`.
    YClamped,
}

/// S-part of the boundary energies for one clamped pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitTerms {
    pub variant: Variant,
    pub w_minus: f64,
    pub w_plus: f64,
    pub s_mix_minus: f64,
    pub s_dbl_minus: f64,
    pub s_mix_plus: f64,
    pub s_dbl_plus: f64,
    /// Crossing energy of the clamped pair evaluated directly.
    pub direct: f64,
}

impl SplitTerms {
    pub fn identity_error(&self) -> f64 {
        (self.w_minus + self.w_plus - self.direct).abs()
    }
}

fn pair_integral(model: &LocalEnergyModel, offset: usize, u: f64, du: f64, v: f64, dv: f64) -> f64 {
    let pair = &model.potentials()[offset - 1].pair;
    let rule = gl32();
    let mut total = 0.0;
    for (s, ws) in rule.nodes.iter().zip(&rule.weights) {
        let mut inner = 0.0;
        for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
            inner += wt * pair.hessian(u + s * du, v + t * dv).d12;
        }
        total += ws * inner;
    }
    total
}

fn require_long_segment(seg: Segment) -> Result<(), CrossingError> {
    if seg.i1 - seg.i0 <= 2 * seg.ri() {
        return Err(CrossingError::Contract(format!(
            "segment interior [{}, {}] must satisfy i1 − i0 > 2r = {}",
            seg.i0,
            seg.i1,
            2 * seg.r
        )));
    }
    Ok(())
}

fn split_variant(
    model: &LocalEnergyModel,
    seg: Segment,
    lo: i64,
    ab: &AlphaBeta,
    base: &[f64],
    other: &[f64],
    variant: Variant,
) -> SplitTerms {
    let r = seg.r;
    let sites = site_count(seg);
    let n = base.len();
    let clamped = |top: bool, z: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|k| {
                if seg.in_interior(lo + k as i64) {
                    if top {
                        ab.big_m[k]
                    } else {
                        ab.small_m[k]
                    }
                } else {
                    z[k]
                }
            })
            .collect()
    };
    let upper = clamped(true, base);
    let lower = clamped(false, other);
    let clamped_ab = alpha_beta_slices(lo, &upper, &lower);
    let d: Vec<f64> = lower.iter().zip(&upper).map(|(b, a)| b - a).collect();

    let (mut mix_minus, mut dbl_minus, mut mix_plus, mut dbl_plus) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..sites {
        for m in 1..=r {
            let j = i + m;
            let (a, b) = if clamped_ab.alpha[i] > 0.0 && clamped_ab.beta[j] < 0.0 {
                (i, j)
            } else if clamped_ab.alpha[j] > 0.0 && clamped_ab.beta[i] < 0.0 {
                (j, i)
            } else {
                continue;
            };
            let weight = pair_integral(model, m, upper[i], d[i], upper[j], d[j]);
            let alpha_a = clamped_ab.alpha[a];
            let (mix, dbl) = if seg.in_interior(lo + b as i64) {
                match variant {
                    Variant::XClamped => (ab.beta[b], -ab.alpha[b]),
                    Variant::YClamped => (-ab.alpha[b], ab.beta[b]),
                }
            } else {
                (clamped_ab.beta[b], 0.0)
            };
            let on_minus = lo + (a as i64) < seg.i0;
            let (mix_acc, dbl_acc) =
                if on_minus { (&mut mix_minus, &mut dbl_minus) } else { (&mut mix_plus, &mut dbl_plus) };
            *mix_acc += weight * alpha_a * mix;
            *dbl_acc += weight * alpha_a * dbl;
        }
    }
    SplitTerms {
        variant,
        w_minus: mix_minus + dbl_minus,
        w_plus: mix_plus + dbl_plus,
        s_mix_minus: mix_minus,
        s_dbl_minus: dbl_minus,
        s_mix_plus: mix_plus,
        s_dbl_plus: dbl_plus,
        direct: crossing_energy_slices(model, &upper, &lower, sites),
    }
}

/// Splits the crossing energies of `(M^B(x), m^B(y))` and `(M^B(y), m^B(x))`
/// into the boundary parts at both ends of `B`.
pub fn boundary_energy_split(
    model: &LocalEnergyModel,
    x: &Window,
    y: &Window,
    seg: Segment,
) -> Result<[SplitTerms; 2], CrossingError> {
    check_range(model, seg)?;
    require_long_segment(seg)?;
    let (xs, ys) = closure_slices(x, y, seg)?;
    let lo = *seg.closure().start();
    let ab = alpha_beta_slices(lo, &xs, &ys);
    Ok([
        split_variant(model, seg, lo, &ab, &xs, &ys, Variant::XClamped),
        split_variant(model, seg, lo, &ab, &ys, &xs, Variant::YClamped),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexChoice {
    pub j: i64,
    pub index: i64,
}

/// E-part of the boundary energies for one clamped pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTerms {
    pub variant: Variant,
    pub e_mix_minus: f64,
    pub e_dbl_minus: f64,
    pub e_mix_plus: f64,
    pub e_dbl_plus: f64,
    pub e_minus: f64,
    pub e_plus: f64,
    /// The double-term estimate applies (`α` resp. `β` vanishes at `i0` and `i1`).
    pub hypothesis_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryBounds {
    pub x_clamped: BoundTerms,
    pub y_clamped: BoundTerms,
    pub k_of: Vec<IndexChoice>,
    pub l_of: Vec<IndexChoice>,
}

fn smallest_argmin(ab: &AlphaBeta, j: i64, r: i64) -> i64 {
    let mut best = j - r;
    for i in j - r..=j + r {
        if ab.beta_at(i) < ab.beta_at(best) {
            best = i;
        }
    }
    best
}

fn smallest_argmax(ab: &AlphaBeta, j: i64, r: i64) -> i64 {
    let mut best = j - r;
    for i in j - r..=j + r {
        if ab.alpha_at(i) > ab.alpha_at(best) {
            best = i;
        }
    }
    best
}

/// The E-terms at both ends of `B` for both clamped pairs. The window must
/// cover `[i0 − 2r, i1 + 2r]`.
pub fn bound_terms(x: &Window, y: &Window, seg: Segment) -> Result<BoundaryBounds, CrossingError> {
    require_long_segment(seg)?;
    let r = seg.ri();
    let (lo, hi) = (seg.i0 - 2 * r, seg.i1 + 2 * r);
    let ab = alpha_beta_slices(lo, &x.slice(lo, hi)?, &y.slice(lo, hi)?);
    let sum = |v: &dyn Fn(i64) -> f64, from: i64, to: i64| (from..=to).map(v).sum::<f64>();
    let a = |i: i64| ab.alpha_at(i);
    let b = |i: i64| ab.beta_at(i);

    // products over pairs (i, j) of the minus / plus boundary index sets
    let minus_pairs = |p: &dyn Fn(i64, i64) -> f64| {
        let mut s = 0.0;
        for i in seg.i0 - r..seg.i0 {
            for j in i..=i + r {
                s += p(i, j);
            }
            for j in i..seg.i0 {
                s += p(j, i);
            }
        }
        s
    };
    let plus_pairs = |p: &dyn Fn(i64, i64) -> f64| {
        let mut s = 0.0;
        for i in seg.i1 - r + 1..=seg.i1 {
            for j in seg.i1 + 1..=i + r {
                s += p(j, i);
            }
        }
        s
    };

    let k0 = smallest_argmin(&ab, seg.i0, r);
    let k1 = smallest_argmin(&ab, seg.i1, r);
    let l0 = smallest_argmax(&ab, seg.i0, r);
    let l1 = smallest_argmax(&ab, seg.i1, r);

    // x-clamped: α at the boundary index, β at the partner
    let xa = |ai: i64, bi: i64| -a(ai) * b(bi);
    let e_mix_minus = minus_pairs(&xa);
    let e_mix_plus = plus_pairs(&xa);
    let e_dbl_minus = -b(k0) * sum(&a, k0 - r, k0 + r);
    let e_dbl_plus = -b(k1) * sum(&a, k1 - r, k1 + r);
    let x_clamped = BoundTerms {
        variant: Variant::XClamped,
        e_mix_minus,
        e_dbl_minus,
        e_mix_plus,
        e_dbl_plus,
        e_minus: e_mix_minus + e_dbl_minus,
        e_plus: e_mix_plus + e_dbl_plus,
        hypothesis_met: a(seg.i0) == 0.0 && a(seg.i1) == 0.0,
    };

    let ya = |ai: i64, bi: i64| -b(ai) * a(bi);
    let t_mix_minus = minus_pairs(&ya);
    let t_mix_plus = plus_pairs(&ya);
    let t_dbl_minus = -a(l0) * sum(&b, l0 - r, l0 + r);
    let t_dbl_plus = -a(l1) * sum(&b, l1 - r, l1 + r);
    let y_clamped = BoundTerms {
        variant: Variant::YClamped,
        e_mix_minus: t_mix_minus,
        e_dbl_minus: t_dbl_minus,
        e_mix_plus: t_mix_plus,
        e_dbl_plus: t_dbl_plus,
        e_minus: t_mix_minus + t_dbl_minus,
        e_plus: t_mix_plus + t_dbl_plus,
        hypothesis_met: b(seg.i0) == 0.0 && b(seg.i1) == 0.0,
    };

    Ok(BoundaryBounds {
        x_clamped,
        y_clamped,
        k_of: vec![IndexChoice { j: seg.i0, index: k0 }, IndexChoice { j: seg.i1, index: k1 }],
        l_of: vec![IndexChoice { j: seg.i0, index: l0 }, IndexChoice { j: seg.i1, index: l1 }],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoremConstants {
    pub c: f64,
    pub tilde_k: u64,
    pub d: u64,
    pub r: usize,
    pub lambda: f64,
    pub big_k: f64,
}

pub fn theorem_constants(r: usize, lambda: f64, big_k: f64) -> Result<TheoremConstants, CrossingError> {
    if r < 1 || !(lambda > 0.0) || !(big_k >= lambda) {
        return Err(CrossingError::InvalidConstants(format!(
            "need r ≥ 1, λ > 0 and K ≥ λ (r = {r}, λ = {lambda}, K = {big_k})"
        )));
    }
    let rf = r as f64;
    let c = 2.0 * big_k * big_k * (2.0 * rf + 1.0) / lambda;
    let tilde_k = (12.0 * rf * c * c / (lambda * lambda) + 3.0 * rf).ceil() as u64;
    let inner = (24.0 * big_k * big_k * (2.0 * rf + 1.0) * rf * rf / (lambda * lambda)).ceil() as u64;
    let d = 6 * r as u64 * inner + 4 * r as u64;
    Ok(TheoremConstants { c, tilde_k, d, r, lambda, big_k })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub applicable: bool,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(name: impl Into<String>, lhs: f64, rhs: f64, applicable: bool) -> Self {
        let tol = ENERGY_TOL * lhs.abs().max(rhs.abs()).max(1.0);
        InequalityCheck { name: name.into(), lhs, rhs, applicable, holds: !applicable || lhs <= rhs + tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub segment: Segment,
    pub constants: TheoremConstants,
    pub split: [SplitTerms; 2],
    pub bounds: BoundaryBounds,
    /// Both configurations solve the recurrence around `i0` and `i1`.
    pub solutions_near_ends: bool,
    pub checks: Vec<InequalityCheck>,
}

impl EstimateReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

fn solves_near(model: &LocalEnergyModel, z: &Window, center: i64) -> bool {
    let r = model.range() as i64;
    (center - r..=center + r).all(|k| match model.site_residual(|i| z.get(i), k) {
        Some((res, scale)) => res.abs() <= RESIDUAL_TOL * scale.max(1.0),
        None => false,
    })
}

/// Mixed-term sandwich, double-term bounds and the swapping estimate at
/// both ends of `B`, for both clamped pairs.
pub fn check_estimates(
    model: &LocalEnergyModel,
    x: &Window,
    y: &Window,
    seg: Segment,
) -> Result<EstimateReport, CrossingError> {
    let constants = theorem_constants(model.range(), model.lambda(), model.big_k())?;
    let split = boundary_energy_split(model, x, y, seg)?;
    let bounds = bound_terms(x, y, seg)?;
    let solutions_near_ends = [seg.i0, seg.i1].iter().all(|&c| solves_near(model, x, c) && solves_near(model, y, c));
    let (lambda, big_k, c) = (model.lambda(), model.big_k(), constants.c);
    let mut checks = Vec::new();
    for (s, e) in split.iter().zip([&bounds.x_clamped, &bounds.y_clamped]) {
        let tag = match s.variant {
            Variant::XClamped => "x",
            Variant::YClamped => "y",
        };
        for (side, s_mix, e_mix, s_dbl, e_dbl, w, e_total) in [
            ("minus", s.s_mix_minus, e.e_mix_minus, s.s_dbl_minus, e.e_dbl_minus, s.w_minus, e.e_minus),
            ("plus", s.s_mix_plus, e.e_mix_plus, s.s_dbl_plus, e.e_dbl_plus, s.w_plus, e.e_plus),
        ] {
            checks.push(InequalityCheck::new(format!("{tag}/{side}/mix_lower"), lambda * e_mix, s_mix, true));
            checks.push(InequalityCheck::new(format!("{tag}/{side}/mix_upper"), s_mix, big_k * e_mix, true));
            let applicable = e.hypothesis_met && solutions_near_ends;
            checks.push(InequalityCheck::new(format!("{tag}/{side}/double"), s_dbl, c * e_dbl, applicable));
            checks.push(InequalityCheck::new(format!("{tag}/{side}/swapping"), w, c * e_total, applicable));
        }
    }
    Ok(EstimateReport { segment: seg, constants, split, bounds, solutions_near_ends, checks })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HarnackForm {
    /// `β_i = 0`: negative parts bounded by positive parts.
    BetaVanishes,
    /// `α_i = 0`: positive parts bounded by negative parts.
    AlphaVanishes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarnackResult {
    pub form: HarnackForm,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Local comparison of the positive and negative parts of `y − x` around
/// site `i` for two solutions.
pub fn harnack_check(model: &LocalEnergyModel, x: &Window, y: &Window, i: i64) -> Result<HarnackResult, CrossingError> {
    if !(model.lambda() > 0.0) {
        return Err(CrossingError::InvalidConstants("λ must be positive".into()));
    }
    for (which, z) in [("x", x), ("y", y)] {
        let r = model.range() as i64;
        for k in i - r..=i + r {
            let (res, scale) = model
                .site_residual(|j| z.get(j), k)
                .ok_or(CrossingError::Lattice(LatticeError::OutOfWindow { lo: k - r, hi: k + r }))?;
            if res.abs() > RESIDUAL_TOL * scale.max(1.0) {
                return Err(CrossingError::NotASolution { which, site: k, residual: res });
            }
        }
    }
    let r = model.range() as i64;
    let ab = alpha_beta_slices(i - r, &x.slice(i - r, i + r)?, &y.slice(i - r, i + r)?);
    let double_sum = |v: &dyn Fn(i64) -> f64| (i - r..=i).map(v).sum::<f64>() + (i..=i + r).map(v).sum::<f64>();
    let pos = double_sum(&|j| ab.alpha_at(j));
    let neg = double_sum(&|j| -ab.beta_at(j));
    let ratio = model.big_k() / model.lambda();
    let (form, lhs, rhs) = if ab.beta_at(i) == 0.0 {
        (HarnackForm::BetaVanishes, neg, ratio * pos)
    } else {
        (HarnackForm::AlphaVanishes, pos, ratio * neg)
    };
    Ok(HarnackResult { form, lhs, rhs, holds: lhs <= rhs + SITE_TOL })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralPrinciple {
    pub crossing_energy: f64,
    pub clamped_x_energy: f64,
    pub clamped_y_energy: f64,
    pub holds: bool,
}

/// Compares `W^c_B(x, y)` with the crossing energies of both clamped pairs,
/// without checking that `x` and `y` are minimizers.
pub fn general_principle_unchecked(
    model: &LocalEnergyModel,
    x: &Window,
    y: &Window,
    seg: Segment,
) -> Result<GeneralPrinciple, CrossingError> {
    check_range(model, seg)?;
    let w = crossing_energy(model, x, y, seg)?;
    let clamp = clamp_variations(x, y, seg)?;
    let cx = crossing_energy(model, &clamp.big_m_x, &clamp.small_m_y, seg)?;
    let cy = crossing_energy(model, &clamp.big_m_y, &clamp.small_m_x, seg)?;
    Ok(GeneralPrinciple {
        crossing_energy: w,
        clamped_x_energy: cx,
        clamped_y_energy: cy,
        holds: w <= cx + ENERGY_TOL && w <= cy + ENERGY_TOL,
    })
}

pub fn general_principle_check(
    model: &LocalEnergyModel,
    x: &Window,
    y: &Window,
    seg: Segment,
    verify: &VerifyOptions,
) -> Result<GeneralPrinciple, CrossingError> {
    let r = seg.ri();
    let (lo, hi) = (seg.i0 - 2 * r, seg.i1 + 2 * r);
    for (which, z) in [("x", x), ("y", y)] {
        let local = z.materialize(lo, hi)?;
        let report = verify_on_window(model, &local, verify);
        if !report.passed() {
            return Err(CrossingError::NotAMinimizer { which, reason: report.summary() });
        }
    }
    general_principle_unchecked(model, x, y, seg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::translate;
    use crate::model::{fk_classic, second_neighbor, HarmonicPair, InteractionPotential, PairFunction, PairHessian};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn w(base: i64, v: &[f64]) -> Window {
        Window::new(base, v.to_vec()).unwrap()
    }

    #[test]
    fn domain_examples() {
        let zero = Window::from_fn(-5..=5, |_| 0.0).unwrap();
        let one = Window::from_fn(-5..=5, |_| 1.0).unwrap();
        let rep = domain_of_crossing(&zero, &one, -5..=5, 1).unwrap();
        assert_eq!(rep.domain, CrossingDomain::Empty);
        assert_eq!((rep.tail_sign_neg, rep.tail_sign_pos), (TailSign::XBelow, TailSign::XBelow));

        let ramp = Window::from_fn(-5..=5, |i| i as f64 - 0.5).unwrap();
        let rep = domain_of_crossing(&zero, &ramp, -5..=5, 1).unwrap();
        assert_eq!(rep.domain, CrossingDomain::Empty);
        assert_eq!((rep.j0, rep.j1), (Some(1), Some(0)));
        assert_ne!(rep.tail_sign_neg, rep.tail_sign_pos);

        let bumps = Window::from_fn(-5..=8, |i| if i == 0 || i == 3 { 1.0 } else { -1.0 }).unwrap();
        let zero = Window::from_fn(-5..=8, |_| 0.0).unwrap();
        let rep = domain_of_crossing(&zero, &bumps, -5..=8, 1).unwrap();
        assert_eq!(rep.domain, CrossingDomain::Bounded { j0: 0, j1: 3 });
        assert!(rep.swapped);

        let wobbly = Window::from_fn(-5..=5, |i| if i == -5 { 1.0 } else { -1.0 }).unwrap();
        let zero = Window::from_fn(-5..=5, |_| 0.0).unwrap();
        assert!(matches!(
            domain_of_crossing(&zero, &wobbly, -5..=5, 1),
            Err(CrossingError::UndeterminedTails { side: "left" })
        ));
    }

    #[test]
    fn crossing_energy_examples() {
        let free = fk_classic(0.0);
        let x = w(-1, &[0.0, 0.0, 0.0, 0.0]);
        let y = w(-1, &[0.0, 1.0, -1.0, 0.0]);
        let seg = Segment::new(0, 1, 1).unwrap();
        assert_eq!(crossing_energy(&free, &x, &y, seg).unwrap(), 1.0);
        assert_eq!(crossing_energy(&free, &y, &x, seg).unwrap(), 1.0);
        let check = minmax_principle_check(&free, &x, &y, seg).unwrap();
        assert_eq!(check.lower_bound, 1.0);
        assert!(check.nonneg && check.bound_holds);

        let above = w(-1, &[0.5, 1.5, 0.5, 0.5]);
        assert_eq!(crossing_energy(&fk_classic(3.0), &x, &above, seg).unwrap(), 0.0);
    }

    #[test]
    fn weak_mode_is_rejected() {
        let mut spec = crate::model::fk_spec(1.0);
        spec.twist_mode = TwistMode::Weak;
        let model = spec.to_model().unwrap();
        let x = w(-1, &[0.0; 4]);
        let seg = Segment::new(0, 1, 1).unwrap();
        assert!(matches!(minmax_principle_check(&model, &x, &x, seg), Err(CrossingError::UnsupportedMode)));
    }

    #[test]
    fn theorem_constants_examples() {
        let t = theorem_constants(1, 1.0, 1.0).unwrap();
        assert_eq!((t.c, t.tilde_k, t.d), (6.0, 435, 436));
        let t = theorem_constants(2, 1.0, 1.0).unwrap();
        assert_eq!((t.c, t.tilde_k, t.d), (10.0, 2406, 5768));
        let half = theorem_constants(1, 0.5, 1.0).unwrap();
        assert_eq!(half.c, 12.0);
        assert_eq!(half.tilde_k, 6915);
        assert!(theorem_constants(1, 0.0, 1.0).is_err());
        assert!(theorem_constants(1, 2.0, 1.0).is_err());
    }

    #[test]
    fn zero_alpha_gives_zero_terms() {
        let model = second_neighbor(0.5, 0.0);
        let x = Window::from_fn(-10..=20, |i| 0.1 * i as f64).unwrap();
        let y = Window::from_fn(-10..=20, |i| 0.1 * i as f64 - 0.3).unwrap();
        let seg = Segment::new(0, 10, 2).unwrap();
        let [xc, yc] = boundary_energy_split(&model, &x, &y, seg).unwrap();
        assert_eq!([xc.w_minus, xc.w_plus, xc.direct], [0.0; 3]);
        assert_eq!([yc.s_mix_minus, yc.s_mix_plus], [0.0; 2]);
        assert!(yc.direct > 0.0 && yc.identity_error() < 1e-12, "{yc:?}");
        let b = bound_terms(&x, &y, seg).unwrap();
        for e in [&b.x_clamped, &b.y_clamped] {
            assert_eq!([e.e_mix_minus, e.e_dbl_minus, e.e_mix_plus, e.e_dbl_plus], [0.0; 4]);
        }
    }

    #[test]
    fn quadratic_split_is_exact() {
        let model = second_neighbor(0.5, 0.0);
        let x = Window::from_fn(-6..=16, |i| (0.7 * i as f64).sin()).unwrap();
        let y = Window::from_fn(-6..=16, |i| (0.9 * i as f64 + 0.4).cos()).unwrap();
        let seg = Segment::new(0, 8, 2).unwrap();
        for s in boundary_energy_split(&model, &x, &y, seg).unwrap() {
            assert!(s.identity_error() < 1e-12, "{s:?}");
        }
        let report = check_estimates(&model, &x, &y, seg).unwrap();
        // with constant weights, S^mix is exactly a positive multiple of E^mix
        for s in &report.split {
            let e = match s.variant {
                Variant::XClamped => &report.bounds.x_clamped,
                Variant::YClamped => &report.bounds.y_clamped,
            };
            for (sm, em) in [(s.s_mix_minus, e.e_mix_minus), (s.s_mix_plus, e.e_mix_plus)] {
                assert!(sm >= 0.5 * em - 1e-12 && sm <= 0.5 * em + 1e-12 || em == 0.0 && sm == 0.0);
            }
        }
    }

    #[derive(Debug)]
    struct Anharmonic;

    impl PairFunction for Anharmonic {
        fn value(&self, nu: f64, mu: f64) -> f64 {
            let d = nu - mu;
            0.5 * d * d + 0.01 * (2.0 * std::f64::consts::PI * d).cos() + 0.02 * (2.0 * std::f64::consts::PI * nu).cos()
        }
        fn gradient(&self, nu: f64, mu: f64) -> [f64; 2] {
            let tau = 2.0 * std::f64::consts::PI;
            let d = nu - mu;
            let g = d - 0.01 * tau * (tau * d).sin();
            [g - 0.02 * tau * (tau * nu).sin(), -g]
        }
        fn hessian(&self, nu: f64, mu: f64) -> PairHessian {
            let tau = 2.0 * std::f64::consts::PI;
            let d = nu - mu;
            let h = 1.0 - 0.01 * tau * tau * (tau * d).cos();
            PairHessian { d11: h - 0.02 * tau * tau * (tau * nu).cos(), d12: -h, d22: h }
        }
    }

    fn anharmonic_model() -> LocalEnergyModel {
        LocalEnergyModel::new(
            vec![
                InteractionPotential { offset: 1, pair: Arc::new(Anharmonic) },
                InteractionPotential { offset: 2, pair: Arc::new(HarmonicPair::new(0.3)) },
            ],
            TwistMode::Strong,
            None,
        )
        .unwrap()
    }

    #[test]
    fn anharmonic_split_identity() {
        let model = anharmonic_model();
        assert!(model.lambda() > 0.0);
        let x = Window::from_fn(-6..=18, |i| 0.3 * (0.5 * i as f64).sin()).unwrap();
        let y = Window::from_fn(-6..=18, |i| 0.4 * (0.8 * i as f64 + 1.0).cos()).unwrap();
        let seg = Segment::new(0, 10, 2).unwrap();
        for s in boundary_energy_split(&model, &x, &y, seg).unwrap() {
            assert!(s.identity_error() <= 1e-8, "{s:?}");
        }
        let report = check_estimates(&model, &x, &y, seg).unwrap();
        for c in report.checks.iter().filter(|c| c.name.contains("mix")) {
            assert!(c.holds, "{c:?}");
        }
    }

    #[test]
    fn short_segments_are_rejected() {
        let model = fk_classic(1.0);
        let x = Window::from_fn(-5..=5, |_| 0.0).unwrap();
        let seg = Segment::new(0, 2, 1).unwrap();
        assert!(matches!(boundary_energy_split(&model, &x, &x, seg), Err(CrossingError::Contract(_))));
    }

    #[test]
    fn harnack_trivial_and_linear() {
        let model = second_neighbor(0.5, 0.0);
        let x = Window::from_fn(-20..=20, |_| 0.0).unwrap();
        let res = harnack_check(&model, &x, &x, 0).unwrap();
        assert_eq!((res.lhs, res.rhs), (0.0, 0.0));
        assert!(res.holds);
        let c0 = -(3.0 + 5f64.sqrt()) / 2.0;
        let y = Window::from_fn(-20..=20, |i| 1e-6 * c0.powi(i as i32)).unwrap();
        for i in -3..=3 {
            let res = harnack_check(&model, &x, &y, i).unwrap();
            assert!(res.holds, "site {i}: {res:?}");
        }
        let bumped = Window::from_fn(-20..=20, |i| if i == 0 { 0.1 } else { 0.0 }).unwrap();
        assert!(matches!(harnack_check(&model, &x, &bumped, 0), Err(CrossingError::NotASolution { .. })));
    }

    #[test]
    fn general_principle_ordered_pair() {
        let model = fk_classic(0.0);
        let x = Window::from_fn(-20..=20, |i| 0.25 * i as f64).unwrap();
        let y = translate(&x, 0, 1);
        let seg = Segment::new(-3, 3, 1).unwrap();
        let gp = general_principle_check(&model, &x, &y, seg, &VerifyOptions::default()).unwrap();
        assert_eq!((gp.crossing_energy, gp.clamped_y_energy), (0.0, 0.0));
        assert!(gp.clamped_x_energy > 0.0);
        assert!(gp.holds);
        let swapped = general_principle_check(&model, &y, &x, seg, &VerifyOptions::default()).unwrap();
        assert_eq!((swapped.crossing_energy, swapped.clamped_x_energy), (0.0, 0.0));
        assert_eq!(swapped.clamped_y_energy, gp.clamped_x_energy);
    }

    fn pair_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (8usize..24).prop_flat_map(|n| (prop::collection::vec(-3.0f64..3.0, n), prop::collection::vec(-3.0f64..3.0, n)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn crossing_energy_nonnegative((xs, ys) in pair_strategy(), amp in 0.0f64..5.0) {
            let model = fk_classic(amp);
            let n = xs.len() as i64;
            let x = Window::new(0, xs).unwrap();
            let y = Window::new(0, ys).unwrap();
            let seg = Segment::new(1, n - 2, 1).unwrap();
            let check = minmax_principle_check(&model, &x, &y, seg).unwrap();
            prop_assert!(check.nonneg, "{check:?}");
            prop_assert!(check.bound_holds, "{check:?}");
            prop_assert!(check.lower_bound >= 0.0);
            let swapped = crossing_energy(&model, &y, &x, seg).unwrap();
            prop_assert!((swapped - check.crossing_energy).abs() <= 1e-9 * check.crossing_energy.abs().max(1.0));
        }

        #[test]
        fn crossing_energy_monotone_in_segment((xs, ys) in pair_strategy(), amp in 0.0f64..5.0) {
            let model = second_neighbor(0.4, amp);
            let n = xs.len() as i64;
            let x = Window::new(0, xs).unwrap();
            let y = Window::new(0, ys).unwrap();
            let big = Segment::new(2, n - 3, 2).unwrap();
            let small = Segment::new(3, n - 4, 2).unwrap();
            let wb = crossing_energy(&model, &x, &y, big).unwrap();
            let ws = crossing_energy(&model, &x, &y, small).unwrap();
            prop_assert!(ws <= wb + 1e-9 * wb.abs().max(1.0));
        }

        #[test]
        fn split_identity_random((xs, ys) in pair_strategy(), amp in 0.0f64..3.0) {
            let model = second_neighbor(0.5, amp);
            let n = xs.len() as i64;
            let x = Window::new(0, xs).unwrap();
            let y = Window::new(0, ys).unwrap();
            let seg = Segment::new(2, n - 3, 2).unwrap();
            prop_assume!(seg.i1 - seg.i0 > 4);
            let report = check_estimates(&model, &x, &y, Segment::new(4, n - 5, 2).unwrap_or(seg));
            if let Ok(report) = report {
                for s in &report.split {
                    prop_assert!(s.identity_error() <= 1e-8);
                }
                for c in report.checks.iter().filter(|c| c.name.contains("mix")) {
                    prop_assert!(c.holds, "{c:?}");
                }
            }
        }

        #[test]
        fn tie_breaking_is_deterministic((xs, ys) in pair_strategy()) {
            let n = xs.len() as i64;
            prop_assume!(n >= 14);
            let x = Window::new(0, xs).unwrap();
            let y = Window::new(0, ys).unwrap();
            let seg = Segment::new(4, n - 5, 2).unwrap();
            let a = bound_terms(&x, &y, seg).unwrap();
            let b = bound_terms(&x, &y, seg).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
