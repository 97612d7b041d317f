//! Finite windows of bi-infinite configurations and the lattice operations on them.

use std::fmt::Write as _;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("index range {lo}..={hi} is not covered by the window(s)")]
    OutOfWindow { lo: i64, hi: i64 },
    #[error("windows do not overlap")]
    EmptyOverlap,
    #[error("invalid window: {0}")]
    Invalid(String),
}

/// The rule `x_{i+p} = x_i + q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicExtension {
    pub p: usize,
    pub q: i64,
}

/// Values `x_base, …, x_{base+len−1}` of a configuration, optionally
/// extended to all of `ℤ` by a periodicity rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    base: i64,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    extension: Option<PeriodicExtension>,
}

impl Window {
    pub fn new(base: i64, values: Vec<f64>) -> Result<Self, LatticeError> {
        if values.is_empty() {
            return Err(LatticeError::Invalid("a window needs at least one value".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LatticeError::Invalid("window values must be finite".into()));
        }
        Ok(Window { base, values, extension: None })
    }

    pub fn from_fn(range: RangeInclusive<i64>, f: impl Fn(i64) -> f64) -> Result<Self, LatticeError> {
        let base = *range.start();
        Window::new(base, range.map(f).collect())
    }

    /// A periodic configuration given by one cell `x_base, …, x_{base+p−1}`.
    pub fn periodic(base: i64, cell: Vec<f64>, p: usize, q: i64) -> Result<Self, LatticeError> {
        if p == 0 || cell.len() != p {
            return Err(LatticeError::Invalid(format!(
                "a ({p},{q}) cell must hold exactly p values, got {}",
                cell.len()
            )));
        }
        let mut w = Window::new(base, cell)?;
        w.extension = Some(PeriodicExtension { p, q });
        Ok(w)
    }

    pub fn base(&self) -> i64 {
        self.base
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn extension(&self) -> Option<PeriodicExtension> {
        self.extension
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last stored index.
    pub fn last(&self) -> i64 {
        self.base + self.values.len() as i64 - 1
    }

    /// Indices at which the configuration is known.
    pub fn domain(&self) -> RangeInclusive<i64> {
        match self.extension {
            Some(_) => i64::MIN / 4..=i64::MAX / 4,
            None => self.base..=self.last(),
        }
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        let d = self.domain();
        lo >= *d.start() && hi <= *d.end()
    }

    pub fn get(&self, i: i64) -> Option<f64> {
        let offset = i - self.base;
        if offset >= 0 && (offset as usize) < self.values.len() {
            return Some(self.values[offset as usize]);
        }
        let ext = self.extension?;
        let p = ext.p as i64;
        let shift = offset.div_euclid(p);
        let rem = offset.rem_euclid(p) as usize;
        Some(self.values[rem] + (shift * ext.q) as f64)
    }

    /// `x_lo, …, x_hi` as a plain vector.
    pub fn slice(&self, lo: i64, hi: i64) -> Result<Vec<f64>, LatticeError> {
        if hi < lo || !self.covers(lo, hi) {
            return Err(LatticeError::OutOfWindow { lo, hi });
        }
        Ok((lo..=hi).map(|i| self.get(i).expect("covered")).collect())
    }

    /// A plain window holding `x_lo, …, x_hi`.
    pub fn materialize(&self, lo: i64, hi: i64) -> Result<Window, LatticeError> {
        Ok(Window { base: lo, values: self.slice(lo, hi)?, extension: None })
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Window, LatticeError> {
        if values.len() != self.values.len() {
            return Err(LatticeError::Invalid("replacement must keep the window length".into()));
        }
        Ok(Window { base: self.base, values, extension: self.extension })
    }

    /// Tab-separated `index\tvalue` lines with a commented header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# index\tvalue\n");
        for (k, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{}\t{}", self.base + k as i64, fmt_f64(*v));
        }
        out
    }
}

/// Shortest round-trip representation of a float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// `(τ_{k,l} x)_i = x_{i−k} + l`.
pub fn translate(x: &Window, k: i64, l: i64) -> Window {
    Window { base: x.base + k, values: x.values.iter().map(|v| v + l as f64).collect(), extension: x.extension }
}

/// Indices at which both windows are known.
pub fn overlap(x: &Window, y: &Window) -> Result<RangeInclusive<i64>, LatticeError> {
    let (a, b) = (x.domain(), y.domain());
    let lo = (*a.start()).max(*b.start());
    let hi = (*a.end()).min(*b.end());
    if lo > hi {
        return Err(LatticeError::EmptyOverlap);
    }
    if x.extension.is_some() && y.extension.is_some() {
        let lo = x.base.min(y.base);
        let hi = x.last().max(y.last());
        return Ok(lo..=hi);
    }
    Ok(lo..=hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    Equal,
    /// `x ≤ y` everywhere, but only within the equality tolerance at some site
    /// where `x` is numerically above.
    Leq,
    Geq,
    StrictlyLess,
    StrictlyGreater,
    /// `x ≤ y` with equality (within tolerance) at some site.
    WeaklyLess,
    WeaklyGreater,
    Incomparable,
}

/// Partial-order relation of `x` to `y` on `range`.
pub fn compare(x: &Window, y: &Window, range: RangeInclusive<i64>, tol: f64) -> Result<Order, LatticeError> {
    let (lo, hi) = (*range.start(), *range.end());
    let xs = x.slice(lo, hi)?;
    let ys = y.slice(lo, hi)?;
    let (mut less, mut greater, mut tied_above, mut tied_below) = (0usize, 0usize, false, false);
    for (a, b) in xs.iter().zip(&ys) {
        let d = b - a;
        if d > tol {
            less += 1;
        } else if -d > tol {
            greater += 1;
        } else if d < 0.0 {
            tied_above = true;
        } else if d > 0.0 {
            tied_below = true;
        }
    }
    let n = xs.len();
    Ok(match (less, greater) {
        (0, 0) => Order::Equal,
        (l, 0) if l == n => Order::StrictlyLess,
        (_, 0) if tied_above => Order::Leq,
        (_, 0) => Order::WeaklyLess,
        (0, g) if g == n => Order::StrictlyGreater,
        (0, _) if tied_below => Order::Geq,
        (0, _) => Order::WeaklyGreater,
        _ => Order::Incomparable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RotationEstimate {
    pub rho: f64,
    /// `|x_n − x_0 − ρ̂ n| ≤ 1` holds over the window.
    pub birkhoff_bound_ok: bool,
    pub max_deviation: f64,
}

pub fn rotation_estimate(x: &Window) -> RotationEstimate {
    let (rho, span) = match x.extension {
        Some(ext) => (ext.q as f64 / ext.p as f64, x.len().max(ext.p) as i64),
        None => {
            let n = (x.len() - 1).max(1) as f64;
            ((x.values[x.len() - 1] - x.values[0]) / n, x.len() as i64)
        }
    };
    let x0 = x.values[0];
    let max_deviation =
        (0..span).map(|n| (x.get(x.base + n).expect("covered") - x0 - rho * n as f64).abs()).fold(0.0, f64::max);
    RotationEstimate { rho, birkhoff_bound_ok: max_deviation <= 1.0 + 1e-9, max_deviation }
}

/// Search box and tolerance for [`birkhoff_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BirkhoffSearch {
    pub k_max: i64,
    pub l_max: i64,
    /// A translate must exceed `x` by more than `tol` at one site and fall
    /// short by more than `tol` at another to count as a violation.
    pub tol: f64,
}

impl BirkhoffSearch {
    pub fn default_for(x: &Window) -> Self {
        let k_max = match x.extension {
            Some(ext) => ext.p as i64,
            None => ((2 * x.len()) / 3).max(1) as i64,
        };
        let rho = rotation_estimate(x).rho;
        let l_max = (rho.abs() * k_max as f64).ceil() as i64 + 2;
        BirkhoffSearch { k_max, l_max, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BirkhoffVerdict {
    BirkhoffOnWindow,
    Violated { k: i64, l: i64, i_up: i64, i_down: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirkhoffReport {
    #[serde(flatten)]
    pub verdict: BirkhoffVerdict,
    pub search: BirkhoffSearch,
    /// Shifts whose overlap with the window was empty.
    pub skipped: Vec<i64>,
}

impl BirkhoffReport {
    pub fn is_birkhoff(&self) -> bool {
        self.verdict == BirkhoffVerdict::BirkhoffOnWindow
    }
}

/// Looks for a translate `τ_{k,l} x` that crosses `x` on the window,
/// scanning `k = 1, −1, 2, −2, …`.
pub fn birkhoff_check(x: &Window, search: BirkhoffSearch) -> Result<BirkhoffReport, LatticeError> {
    if search.k_max < 1 || search.l_max < 0 {
        return Err(LatticeError::Invalid("search box must have k_max ≥ 1 and l_max ≥ 0".into()));
    }
    let rho = rotation_estimate(x).rho;
    let (lo, hi) = (x.base, x.last());
    let mut skipped = Vec::new();
    for step in 1..=search.k_max {
        for k in [step, -step] {
            let (from, to) = if x.extension.is_some() { (lo, hi) } else { (lo.max(lo + k), hi.min(hi + k)) };
            if from > to {
                skipped.push(k);
                continue;
            }
            let diffs: Vec<(i64, f64)> =
                (from..=to).map(|i| (i, x.get(i).expect("covered") - x.get(i - k).expect("covered"))).collect();
            let dmin = diffs.iter().map(|d| d.1).fold(f64::INFINITY, f64::min);
            let dmax = diffs.iter().map(|d| d.1).fold(f64::NEG_INFINITY, f64::max);
            let l_lo = ((dmin + search.tol).floor() as i64 + 1).max(-search.l_max);
            let l_hi = ((dmax - search.tol).ceil() as i64 - 1).min(search.l_max);
            if l_lo > l_hi {
                continue;
            }
            let target = (rho * k as f64).round() as i64;
            let l = target.clamp(l_lo, l_hi);
            // (τ_{k,l}x − x)_i = l − d_i
            let i_up = diffs.iter().find(|d| l as f64 - d.1 > search.tol).map(|d| d.0);
            let i_down = diffs.iter().find(|d| l as f64 - d.1 < -search.tol).map(|d| d.0);
            if let (Some(i_up), Some(i_down)) = (i_up, i_down) {
                return Ok(BirkhoffReport {
                    verdict: BirkhoffVerdict::Violated { k, l, i_up, i_down },
                    search,
                    skipped,
                });
            }
        }
    }
    Ok(BirkhoffReport { verdict: BirkhoffVerdict::BirkhoffOnWindow, search, skipped })
}

/// Positive and negative parts of `y − x` together with the pointwise
/// maximum `M` and minimum `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaBeta {
    pub lo: i64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub big_m: Vec<f64>,
    pub small_m: Vec<f64>,
}

impl AlphaBeta {
    pub fn hi(&self) -> i64 {
        self.lo + self.alpha.len() as i64 - 1
    }

    fn idx(&self, i: i64) -> usize {
        debug_assert!(i >= self.lo && i <= self.hi(), "index {i} outside α/β range");
        (i - self.lo) as usize
    }

    pub fn alpha_at(&self, i: i64) -> f64 {
        self.alpha[self.idx(i)]
    }

    pub fn beta_at(&self, i: i64) -> f64 {
        self.beta[self.idx(i)]
    }

    /// `y` recovered exactly from `M` and `m`.
    pub fn reconstruct_y(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(self.big_m.iter().zip(&self.small_m))
            .map(|(a, (mx, mn))| if *a > 0.0 { *mx } else { *mn })
            .collect()
    }
}

pub fn alpha_beta(x: &Window, y: &Window, range: RangeInclusive<i64>) -> Result<AlphaBeta, LatticeError> {
    let (lo, hi) = (*range.start(), *range.end());
    let xs = x.slice(lo, hi)?;
    let ys = y.slice(lo, hi)?;
    Ok(alpha_beta_slices(lo, &xs, &ys))
}

pub(crate) fn alpha_beta_slices(lo: i64, xs: &[f64], ys: &[f64]) -> AlphaBeta {
    let n = xs.len();
    let mut ab = AlphaBeta {
        lo,
        alpha: Vec::with_capacity(n),
        beta: Vec::with_capacity(n),
        big_m: Vec::with_capacity(n),
        small_m: Vec::with_capacity(n),
    };
    for (&a, &b) in xs.iter().zip(ys) {
        let d = b - a;
        ab.alpha.push(if b > a { d } else { 0.0 });
        ab.beta.push(if b < a { d } else { 0.0 });
        ab.big_m.push(a.max(b));
        ab.small_m.push(a.min(b));
    }
    ab
}

/// `B = [i0 − r, i1]` with interior `[i0, i1]` and closure `[i0 − r, i1 + r]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub i0: i64,
    pub i1: i64,
    pub r: usize,
}

impl Segment {
    pub fn new(i0: i64, i1: i64, r: usize) -> Result<Self, LatticeError> {
        if i1 < i0 || r == 0 {
            return Err(LatticeError::Invalid(format!("segment needs i0 ≤ i1 and r ≥ 1 (got [{i0},{i1}], r={r})")));
        }
        Ok(Segment { i0, i1, r })
    }

    pub fn ri(&self) -> i64 {
        self.r as i64
    }

    pub fn sites(&self) -> RangeInclusive<i64> {
        self.i0 - self.ri()..=self.i1
    }

    pub fn interior(&self) -> RangeInclusive<i64> {
        self.i0..=self.i1
    }

    pub fn closure(&self) -> RangeInclusive<i64> {
        self.i0 - self.ri()..=self.i1 + self.ri()
    }

    pub fn minus_boundary(&self) -> RangeInclusive<i64> {
        self.i0 - self.ri()..=self.i0 - 1
    }

    pub fn plus_boundary(&self) -> RangeInclusive<i64> {
        self.i1 + 1..=self.i1 + self.ri()
    }

    pub fn in_interior(&self, i: i64) -> bool {
        i >= self.i0 && i <= self.i1
    }
}

/// `M^B(z)` and `m^B(z)` for both `z = x` and `z = y` over the closure of `B`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClampedVariations {
    pub segment: Segment,
    pub big_m_x: Window,
    pub small_m_x: Window,
    pub big_m_y: Window,
    pub small_m_y: Window,
}

pub fn clamp_variations(x: &Window, y: &Window, segment: Segment) -> Result<ClampedVariations, LatticeError> {
    let closure = segment.closure();
    let (lo, hi) = (*closure.start(), *closure.end());
    let xs = x.slice(lo, hi)?;
    let ys = y.slice(lo, hi)?;
    let ab = alpha_beta_slices(lo, &xs, &ys);
    let clamp = |outside: &[f64], inside: &[f64]| -> Window {
        let values = (lo..=hi)
            .map(|i| {
                let k = (i - lo) as usize;
                if segment.in_interior(i) {
                    inside[k]
                } else {
                    outside[k]
                }
            })
            .collect();
        Window { base: lo, values, extension: None }
    };
    Ok(ClampedVariations {
        segment,
        big_m_x: clamp(&xs, &ab.big_m),
        small_m_x: clamp(&xs, &ab.small_m),
        big_m_y: clamp(&ys, &ab.big_m),
        small_m_y: clamp(&ys, &ab.small_m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(lo: i64, hi: i64, slope: f64, c: f64) -> Window {
        Window::from_fn(lo..=hi, |i| slope * i as f64 + c).unwrap()
    }

    #[test]
    fn translation_example() {
        let x = Window::new(0, vec![0.0, 0.5, 1.0]).unwrap();
        let t = translate(&x, 1, 1);
        assert_eq!(t.base(), 1);
        assert_eq!(t.values(), &[1.0, 1.5, 2.0]);
    }

    #[test]
    fn periodic_extension_lookup() {
        let x = Window::periodic(0, vec![0.0, 0.4, 0.7], 3, 1).unwrap();
        assert_eq!(x.get(3), Some(1.0));
        assert_eq!(x.get(-1), Some(0.7 - 1.0));
        assert_eq!(rotation_estimate(&x).rho, 1.0 / 3.0);
    }

    #[test]
    fn compare_examples() {
        let x = Window::new(0, vec![0.0, 0.0]).unwrap();
        let y = Window::new(0, vec![0.0, 1.0]).unwrap();
        assert_eq!(compare(&x, &y, 0..=1, 0.0).unwrap(), Order::WeaklyLess);
        let z = Window::new(0, vec![1.0, -1.0]).unwrap();
        assert_eq!(compare(&x, &z, 0..=1, 0.0).unwrap(), Order::Incomparable);
        let w = Window::new(0, vec![1e-12, 0.5]).unwrap();
        assert_eq!(compare(&w, &y, 0..=1, 1e-9).unwrap(), Order::Leq);
        assert_eq!(compare(&w, &x, 0..=1, 1e-9).unwrap(), Order::WeaklyGreater);
        assert_eq!(compare(&x, &x, 0..=1, 0.0).unwrap(), Order::Equal);
        assert!(compare(&x, &y, 0..=2, 0.0).is_err());
    }

    #[test]
    fn rotation_examples() {
        let x = line(0, 20, 0.5, 0.1);
        assert!((rotation_estimate(&x).rho - 0.5).abs() < 1e-15);
        let phi = -(3.0 + 5f64.sqrt()) / 2.0;
        let wild = Window::from_fn(-10..=10, |i| i as f64 + 0.3 * phi.powi(i as i32)).unwrap();
        assert!(!rotation_estimate(&wild).birkhoff_bound_ok);
    }

    #[test]
    fn birkhoff_examples() {
        let x = line(-20, 20, 0.37, 0.2);
        assert!(birkhoff_check(&x, BirkhoffSearch::default_for(&x)).unwrap().is_birkhoff());
        let bumped = Window::from_fn(-3..=3, |i| if i == 0 { 2.0 } else { i as f64 }).unwrap();
        let search = BirkhoffSearch { k_max: 2, l_max: 2, tol: 1e-9 };
        let report = birkhoff_check(&bumped, search).unwrap();
        match report.verdict {
            BirkhoffVerdict::Violated { k, l, i_up, i_down } => {
                assert_eq!((k, l), (1, 1));
                let t = translate(&bumped, k, l);
                assert!(t.get(i_up).unwrap() > bumped.get(i_up).unwrap());
                assert!(t.get(i_down).unwrap() < bumped.get(i_down).unwrap());
            }
            other => panic!("expected violation, got {other:?}"),
        }
        let tiny = Window::new(0, vec![0.0]).unwrap();
        let report = birkhoff_check(&tiny, BirkhoffSearch { k_max: 1, l_max: 1, tol: 0.0 }).unwrap();
        assert!(report.is_birkhoff());
        assert_eq!(report.skipped, vec![1, -1]);
    }

    #[test]
    fn alpha_beta_example() {
        let x = Window::new(0, vec![0.0, 1.0]).unwrap();
        let y = Window::new(0, vec![1.0, 0.0]).unwrap();
        let ab = alpha_beta(&x, &y, 0..=1).unwrap();
        assert_eq!(ab.alpha, vec![1.0, 0.0]);
        assert_eq!(ab.beta, vec![0.0, -1.0]);
        assert_eq!(ab.big_m, vec![1.0, 1.0]);
        assert_eq!(ab.small_m, vec![0.0, 0.0]);
    }

    #[test]
    fn clamp_example() {
        let x = Window::from_fn(-2..=2, |_| 0.0).unwrap();
        let y = Window::from_fn(-2..=2, |_| 1.0).unwrap();
        let seg = Segment::new(0, 0, 1).unwrap();
        let c = clamp_variations(&x, &y, seg).unwrap();
        assert_eq!(c.big_m_x.values(), &[0.0, 1.0, 0.0]);
        assert_eq!(c.small_m_y.values(), &[1.0, 0.0, 1.0]);
        assert_eq!(c.big_m_x.base(), -1);
    }

    #[test]
    fn tsv_layout() {
        let x = Window::new(-1, vec![0.5, 1.0]).unwrap();
        assert_eq!(x.to_tsv(), "# index\tvalue\n-1\t0.5\n0\t1.0\n");
    }

    fn window_strategy() -> impl Strategy<Value = (i64, Vec<f64>)> {
        (-20i64..20, prop::collection::vec(-50.0f64..50.0, 1..40))
    }

    proptest! {
        #[test]
        fn translation_group_law((base, vals) in window_strategy(), k1 in -5i64..5, l1 in -5i64..5, k2 in -5i64..5, l2 in -5i64..5) {
            let x = Window::new(base, vals).unwrap();
            let composed = translate(&translate(&x, k1, l1), k2, l2);
            let direct = translate(&x, k1 + k2, l1 + l2);
            prop_assert_eq!(composed.base(), direct.base());
            for (a, b) in composed.values().iter().zip(direct.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
            let identity = translate(&x, 0, 0);
            prop_assert_eq!(identity, x);
        }

        #[test]
        fn alpha_beta_invariants((base, xs) in window_strategy(), shift in prop::collection::vec(-5.0f64..5.0, 40)) {
            let n = xs.len();
            let ys: Vec<f64> = xs.iter().zip(&shift).map(|(a, s)| a + s).collect();
            let x = Window::new(base, xs).unwrap();
            let y = Window::new(base, ys[..n].to_vec()).unwrap();
            let ab = alpha_beta(&x, &y, base..=base + n as i64 - 1).unwrap();
            for k in 0..n {
                prop_assert!(ab.alpha[k] >= 0.0 && ab.beta[k] <= 0.0);
                prop_assert!(ab.alpha[k] * ab.beta[k] == 0.0);
                prop_assert!(ab.small_m[k] <= ab.big_m[k]);
                let sum = x.values()[k] + ab.alpha[k] + ab.beta[k];
                prop_assert!((sum - y.values()[k]).abs() <= 1e-13 * (1.0 + y.values()[k].abs()));
                prop_assert_eq!(ab.big_m[k], x.values()[k].max(y.values()[k]));
            }
            prop_assert_eq!(ab.reconstruct_y(), y.values().to_vec());
        }

        #[test]
        fn birkhoff_lines(slope in -3.0f64..3.0, c in -1.0f64..1.0, half in 3i64..30) {
            let x = line(-half, half, slope, c);
            prop_assert!(birkhoff_check(&x, BirkhoffSearch::default_for(&x)).unwrap().is_birkhoff());
        }

        #[test]
        fn violation_witness_is_genuine((base, vals) in window_strategy()) {
            let x = Window::new(base, vals).unwrap();
            let report = birkhoff_check(&x, BirkhoffSearch::default_for(&x)).unwrap();
            if let BirkhoffVerdict::Violated { k, l, i_up, i_down } = report.verdict {
                let t = translate(&x, k, l);
                prop_assert!(t.get(i_up).unwrap() > x.get(i_up).unwrap());
                prop_assert!(t.get(i_down).unwrap() < x.get(i_down).unwrap());
            }
        }
    }
}
