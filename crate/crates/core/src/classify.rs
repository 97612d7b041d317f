//! Birkhoff / non-Birkhoff classification of candidate minimizers on a
//! finite window, with exponential-oscillation witnesses.

use serde::Serialize;
use thiserror::Error;

use crate::crossing::theorem_constants;
use crate::lattice::{
    birkhoff_check, rotation_estimate, translate, BirkhoffReport, BirkhoffSearch, BirkhoffVerdict, LatticeError, Window,
};
use crate::model::LocalEnergyModel;
use crate::solver::{verify_on_window, EvidenceReport, VerifyOptions};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("window failed minimality verification: {0}")]
    NotAMinimizer(String),
    #[error("invalid model constants: {0}")]
    Constants(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Birkhoff,
    NonBirkhoff,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessVariant {
    Plus,
    Minus,
}

/// A chain `k_0 < k_1 < …` with partners `l_n` such that
/// `(x_{k_n} − y_{k_n})(y_{l_n} − x_{l_n}) ≥ 2ⁿ` for `y = τ_{k,l} x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub translate: (i64, i64),
    pub k_seq: Vec<i64>,
    pub l_seq: Vec<i64>,
    pub products: Vec<f64>,
    pub inequality_variant: Option<WitnessVariant>,
}

impl Witness {
    /// Number of doublings certified by the chain.
    pub fn doublings(&self) -> usize {
        self.k_seq.len().saturating_sub(1)
    }
}

/// Greedy leftmost search for a witness chain against `τ_{k,l} x`, with
/// `k_{n+1} − k_n ≤ d_bound` and `|l_n − k_n| ≤ r`.
pub fn exponential_witness(x: &Window, shift: (i64, i64), d_bound: u64, r: usize) -> Option<Witness> {
    let y = translate(x, shift.0, shift.1);
    let lo = x.base().max(y.base());
    let hi = x.last().min(y.last());
    if lo > hi {
        return None;
    }
    let diff = |i: i64| x.get(i).expect("in overlap") - y.get(i).expect("in overlap");
    let r = r as i64;
    let mut k_seq = Vec::new();
    let mut l_seq = Vec::new();
    let mut products = Vec::new();
    let mut prev: Option<i64> = None;
    loop {
        let n = k_seq.len() as i32;
        let target = 2f64.powi(n);
        let from = prev.map_or(lo, |p| p + 1);
        let to = prev.map_or(hi, |p| (p + d_bound as i64).min(hi));
        let mut found = None;
        'scan: for kn in from..=to {
            let dk = diff(kn);
            if !(dk > 0.0) {
                continue;
            }
            for ln in (kn - r).max(lo)..=(kn + r).min(hi) {
                let dl = -diff(ln);
                if dl > 0.0 && dk * dl >= target {
                    found = Some((kn, ln, dk * dl));
                    break 'scan;
                }
            }
        }
        match found {
            Some((kn, ln, prod)) => {
                k_seq.push(kn);
                l_seq.push(ln);
                products.push(prod);
                prev = Some(kn);
            }
            None => break,
        }
    }
    if k_seq.is_empty() {
        return None;
    }
    let inequality_variant = match shift {
        (1, 1) => Some(WitnessVariant::Plus),
        (-1, -1) => Some(WitnessVariant::Minus),
        _ => None,
    };
    Some(Witness { translate: shift, k_seq, l_seq, products, inequality_variant })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifySearch {
    pub k_max: Option<i64>,
    pub l_max: Option<i64>,
    /// Doublings required for a non-Birkhoff verdict.
    pub depth: usize,
    pub tol: f64,
}

impl Default for ClassifySearch {
    fn default() -> Self {
        ClassifySearch { k_max: None, l_max: None, depth: 8, tol: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DichotomyVerdict {
    pub kind: VerdictKind,
    pub rho: Option<f64>,
    pub witness: Option<Witness>,
    pub birkhoff: BirkhoffReport,
    pub searched_translates: Vec<(i64, i64)>,
    pub d_bound: u64,
    pub depth: usize,
    pub evidence: EvidenceReport,
}

pub fn classify(
    model: &LocalEnergyModel,
    x: &Window,
    search: &ClassifySearch,
    verify: &VerifyOptions,
) -> Result<DichotomyVerdict, ClassifyError> {
    let evidence = verify_on_window(model, x, verify);
    if !evidence.passed() {
        return Err(ClassifyError::NotAMinimizer(evidence.summary()));
    }
    classify_verified(model, x, search, evidence)
}

/// Classification of a window whose minimality evidence is already known.
pub fn classify_verified(
    model: &LocalEnergyModel,
    x: &Window,
    search: &ClassifySearch,
    evidence: EvidenceReport,
) -> Result<DichotomyVerdict, ClassifyError> {
    let constants = theorem_constants(model.range(), model.lambda(), model.big_k())
        .map_err(|e| ClassifyError::Constants(e.to_string()))?;
    let mut box_ = BirkhoffSearch::default_for(x);
    if let Some(k) = search.k_max {
        box_.k_max = k;
    }
    if let Some(l) = search.l_max {
        box_.l_max = l;
    }
    box_.tol = search.tol;
    let birkhoff = birkhoff_check(x, box_)?;
    let mut verdict = DichotomyVerdict {
        kind: VerdictKind::Birkhoff,
        rho: None,
        witness: None,
        birkhoff: birkhoff.clone(),
        searched_translates: Vec::new(),
        d_bound: constants.d,
        depth: search.depth,
        evidence,
    };
    let violation = match birkhoff.verdict {
        BirkhoffVerdict::BirkhoffOnWindow => {
            verdict.rho = Some(rotation_estimate(x).rho);
            return Ok(verdict);
        }
        BirkhoffVerdict::Violated { k, l, .. } => (k, l),
    };
    let mut candidates = vec![(1, 1), (-1, -1)];
    if !candidates.contains(&violation) {
        candidates.push(violation);
    }
    let mut best: Option<Witness> = None;
    for &shift in &candidates {
        if let Some(w) = exponential_witness(x, shift, constants.d, model.range()) {
            if best.as_ref().is_none_or(|b| w.doublings() > b.doublings()) {
                best = Some(w);
            }
        }
    }
    verdict.searched_translates = candidates;
    verdict.kind = match &best {
        Some(w) if w.doublings() >= search.depth => VerdictKind::NonBirkhoff,
        _ => VerdictKind::Inconclusive,
    };
    verdict.witness = best;
    Ok(verdict)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthScreen {
    pub subexponential: bool,
    pub fitted_rate: f64,
    pub threshold: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Log-linear growth rate of the deviation from a robust linear fit,
/// compared with `ln 2 / (2d)`.
pub fn growth_screen(x: &Window, d: u64) -> GrowthScreen {
    let v = x.values();
    let base = x.base();
    let slope = median(v.windows(2).map(|w| w[1] - w[0]).collect());
    let intercept = median(v.iter().enumerate().map(|(k, xi)| xi - slope * (base + k as i64) as f64).collect());
    let center = base + (v.len() as i64 - 1) / 2;
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (k, xi) in v.iter().enumerate() {
        let i = base + k as i64;
        let dev = (xi - slope * i as f64 - intercept).abs().ln_1p();
        if i <= center {
            left.push(((center - i) as f64, dev));
        }
        if i >= center {
            right.push(((i - center) as f64, dev));
        }
    }
    let fitted_rate = ls_slope(&left).max(ls_slope(&right)).max(0.0);
    let threshold = std::f64::consts::LN_2 / (2.0 * d.max(1) as f64);
    GrowthScreen { subexponential: fitted_rate < threshold, fitted_rate, threshold }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailRelation {
    Greater,
    Less,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AsymptoticOrder {
    /// Relation of `x` to `y` on the left tail.
    pub alpha: TailRelation,
    /// Relation of `x` to `y` on the right tail.
    pub omega: TailRelation,
    pub ordered: bool,
}

pub fn asymptotic_order(x: &Window, y: &Window, tail_length: usize) -> Result<AsymptoticOrder, ClassifyError> {
    let lo = x.base().max(y.base());
    let hi = x.last().min(y.last());
    if tail_length == 0 || hi - lo + 1 < tail_length as i64 {
        return Err(ClassifyError::Lattice(LatticeError::OutOfWindow { lo, hi }));
    }
    let xs = x.slice(lo, hi)?;
    let ys = y.slice(lo, hi)?;
    let relation = |range: std::ops::Range<usize>| {
        if range.clone().all(|k| xs[k] > ys[k]) {
            TailRelation::Greater
        } else if range.clone().all(|k| xs[k] < ys[k]) {
            TailRelation::Less
        } else {
            TailRelation::Undetermined
        }
    };
    let n = xs.len();
    let ordered = xs.iter().zip(&ys).all(|(a, b)| a <= b) || xs.iter().zip(&ys).all(|(a, b)| a >= b);
    Ok(AsymptoticOrder { alpha: relation(0..tail_length), omega: relation(n - tail_length..n), ordered })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_oracle::{oracle_fixture, FixtureKind};
    use crate::model::{fk_classic, second_neighbor};

    #[test]
    fn linear_window_is_birkhoff() {
        let model = fk_classic(0.0);
        let x = Window::from_fn(-20..=20, |i| 0.3 * i as f64 + 0.1).unwrap();
        let v = classify(&model, &x, &ClassifySearch::default(), &VerifyOptions::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::Birkhoff);
        assert!((v.rho.unwrap() - 0.3).abs() < 1e-12);
        assert!(v.witness.is_none());
    }

    #[test]
    fn wild_fixture_is_non_birkhoff() {
        let f = oracle_fixture(FixtureKind::WildExponential, 0.5, -30..=30).unwrap();
        let model = f.model();
        let v = classify(&model, &f.window, &ClassifySearch::default(), &VerifyOptions::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::NonBirkhoff);
        let w = v.witness.unwrap();
        assert!(w.doublings() >= 8);
        for n in 0..w.k_seq.len() {
            assert!(w.products[n] >= 2f64.powi(n as i32) * (1.0 - 1e-9));
            assert!((w.l_seq[n] - w.k_seq[n]).abs() <= 2);
        }
    }

    #[test]
    fn witness_on_pure_exponential() {
        let f = crate::linear_oracle::general_solution(
            &crate::linear_oracle::char_roots(0.5).unwrap(),
            &crate::linear_oracle::SolutionCoefficients::new(0.0, 0.0, 0.3, 0.0),
            -30..=30,
        )
        .unwrap();
        let w = exponential_witness(&f, (1, 1), 436, 2).unwrap();
        assert!(w.doublings() >= 8);
        assert!(w.k_seq.windows(2).all(|p| p[1] - p[0] <= 2));
        let line = Window::from_fn(-30..=30, |i| 0.4 * i as f64).unwrap();
        assert!(exponential_witness(&line, (1, 1), 436, 2).is_none());
    }

    #[test]
    fn witness_stalls_below_critical_growth() {
        // amplitude grows a little slower than 2^{1/(2d)} per site
        let d = 4u64;
        let rate = 0.97 * 2f64.powf(1.0 / (2.0 * d as f64));
        let x = Window::from_fn(0..=80, |i| if i % 2 == 0 { 1.0 } else { -1.0 } * 3.0 * rate.powi(i as i32)).unwrap();
        assert!(exponential_witness(&x, (0, 0), d, 1).is_none());
        let w = exponential_witness(&x, (1, 0), d, 1).unwrap();
        for n in 0..w.k_seq.len() {
            assert!(w.products[n] >= 2f64.powi(n as i32));
            if n > 0 {
                assert!(w.k_seq[n] - w.k_seq[n - 1] <= d as i64);
            }
        }
        assert!(*w.k_seq.last().unwrap() < 80 - d as i64, "chain should stall inside the window");
    }

    #[test]
    fn growth_screen_examples() {
        let line = Window::from_fn(-20..=20, |i| 0.4 * i as f64 + 0.2).unwrap();
        let s = growth_screen(&line, 436);
        assert!(s.subexponential && s.fitted_rate < 1e-12);
        let f = oracle_fixture(FixtureKind::WildExponential, 0.5, -30..=30).unwrap();
        let s = growth_screen(&f.window, 1);
        assert!(!s.subexponential);
        assert!((s.fitted_rate - 0.962).abs() < 0.05, "{}", s.fitted_rate);
        let bounded = Window::from_fn(-30..=30, |i| (0.9 * i as f64).sin()).unwrap();
        assert!(growth_screen(&bounded, 1).subexponential);
    }

    #[test]
    fn asymptotic_order_examples() {
        let one = Window::from_fn(-10..=10, |_| 1.0).unwrap();
        let zero = Window::from_fn(-10..=10, |_| 0.0).unwrap();
        let o = asymptotic_order(&one, &zero, 3).unwrap();
        assert_eq!((o.alpha, o.omega, o.ordered), (TailRelation::Greater, TailRelation::Greater, true));
        let ramp = Window::from_fn(-10..=10, |i| 0.1 * i as f64 + 0.05).unwrap();
        let o = asymptotic_order(&zero, &ramp, 3).unwrap();
        assert_eq!((o.alpha, o.omega, o.ordered), (TailRelation::Greater, TailRelation::Less, false));
        let f = oracle_fixture(FixtureKind::WildExponential, 0.5, -30..=30).unwrap();
        let t = translate(&f.window, 1, 1);
        let o = asymptotic_order(&f.window, &t, 4).unwrap();
        assert_eq!(o.omega, TailRelation::Undetermined);
    }

    #[test]
    fn non_minimizer_is_rejected() {
        let model = second_neighbor(0.5, 0.0);
        let x = Window::from_fn(-10..=10, |i| (i as f64).sin()).unwrap();
        assert!(matches!(
            classify(&model, &x, &ClassifySearch::default(), &VerifyOptions::default()),
            Err(ClassifyError::NotAMinimizer(_))
        ));
    }
}
