//! Closed-form solutions of the quadratic second-neighbour model
//! `S = b/2 (ξ₀ − ξ₁)² + (1 − b)/2 (ξ₀ − ξ₂)²`.

use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::VerdictKind;
use crate::lattice::{LatticeError, Window};
use crate::model::{second_neighbor, LocalEnergyModel};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("coupling b = {0} outside [0, 1)")]
    OutOfRange(f64),
    #[error("span too large: values overflow beyond |i| = {safe_bound}")]
    SpanTooLarge { safe_bound: i64 },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModelParams {
    pub b: f64,
    pub c0: f64,
    pub c1: f64,
    pub degenerate: bool,
}

pub fn char_roots(b: f64) -> Result<LinearModelParams, OracleError> {
    if !(0.0..1.0).contains(&b) {
        return Err(OracleError::OutOfRange(b));
    }
    if b == 0.0 {
        return Ok(LinearModelParams { b, c0: -1.0, c1: -1.0, degenerate: true });
    }
    // c + 1/c = −s; take the larger root and invert for the smaller
    let s = (2.0 - b) / (1.0 - b);
    let c0 = -0.5 * (s + ((s - 2.0) * (s + 2.0)).sqrt());
    Ok(LinearModelParams { b, c0, c1: 1.0 / c0, degenerate: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionCoefficients {
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl SolutionCoefficients {
    pub fn new(k0: f64, k1: f64, k2: f64, k3: f64) -> Self {
        SolutionCoefficients { k0, k1, k2, k3 }
    }
}

fn safe_bound(params: &LinearModelParams, coeffs: &SolutionCoefficients) -> i64 {
    let amp = coeffs.k2.abs().max(coeffs.k3.abs()).max(1.0);
    let growth = params.c0.abs().ln();
    if growth <= 0.0 {
        return i64::MAX;
    }
    ((f64::MAX.ln() - amp.ln() - 1.0) / growth).floor() as i64
}

/// `x_i = k0 + k1 i + k2 c0^i + k3 c0^{−i}`, or in the degenerate case
/// `x_i = k0 + k1 i + k2 (−1)^i + k3 (−1)^i i`.
pub fn general_solution(
    params: &LinearModelParams,
    coeffs: &SolutionCoefficients,
    span: RangeInclusive<i64>,
) -> Result<Window, OracleError> {
    let bound = safe_bound(params, coeffs);
    let (lo, hi) = (*span.start(), *span.end());
    if lo.abs().max(hi.abs()) > bound {
        return Err(OracleError::SpanTooLarge { safe_bound: bound });
    }
    let SolutionCoefficients { k0, k1, k2, k3 } = *coeffs;
    let value = |i: i64| {
        let fi = i as f64;
        if params.degenerate {
            let sign = if i.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            k0 + k1 * fi + k2 * sign + k3 * sign * fi
        } else {
            let n = i as i32;
            let mut v = k0 + k1 * fi;
            if k2 != 0.0 {
                v += k2 * params.c0.powi(n);
            }
            if k3 != 0.0 {
                v += k3 * params.c0.powi(-n);
            }
            v
        }
    };
    let w = Window::from_fn(lo..=hi, value)?;
    if w.values().iter().any(|v| !v.is_finite()) {
        return Err(OracleError::SpanTooLarge { safe_bound: bound });
    }
    Ok(w)
}

/// Largest defect `|(1−b)x_{i−2} + b x_{i−1} − 2x_i + b x_{i+1} + (1−b)x_{i+2}|`.
pub fn verify_rr1(x: &Window, b: f64) -> Result<f64, OracleError> {
    if x.len() < 5 {
        return Err(OracleError::Contract("the relation needs at least 5 values".into()));
    }
    let v = x.values();
    Ok((2..v.len() - 2)
        .map(|i| ((1.0 - b) * v[i - 2] + b * v[i - 1] - 2.0 * v[i] + b * v[i + 1] + (1.0 - b) * v[i + 2]).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    BirkhoffLinear,
    WildExponential,
    DegenerateBounded,
}

impl std::str::FromStr for FixtureKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "birkhoff_linear" => Ok(FixtureKind::BirkhoffLinear),
            "wild_exponential" => Ok(FixtureKind::WildExponential),
            "degenerate_bounded" => Ok(FixtureKind::DegenerateBounded),
            other => Err(format!("unknown fixture kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedVerdict {
    Birkhoff,
    NonBirkhoff,
    OutsideStrongTwist,
}

impl ExpectedVerdict {
    pub fn matches(&self, kind: VerdictKind) -> bool {
        matches!(
            (self, kind),
            (ExpectedVerdict::Birkhoff, VerdictKind::Birkhoff)
                | (ExpectedVerdict::NonBirkhoff, VerdictKind::NonBirkhoff)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fixture {
    pub kind: FixtureKind,
    pub params: LinearModelParams,
    pub coefficients: SolutionCoefficients,
    pub expected: ExpectedVerdict,
    pub window: Window,
}

impl Fixture {
    /// The quadratic model the fixture solves.
    pub fn model(&self) -> LocalEnergyModel {
        second_neighbor(self.params.b, 0.0)
    }
}

/// Slope of the linear fixture.
pub const LINEAR_FIXTURE_SLOPE: f64 = 0.5;

pub fn oracle_fixture(kind: FixtureKind, b: f64, span: RangeInclusive<i64>) -> Result<Fixture, OracleError> {
    let params = char_roots(b)?;
    let (coefficients, expected) = match kind {
        FixtureKind::BirkhoffLinear => {
            (SolutionCoefficients::new(0.2, LINEAR_FIXTURE_SLOPE, 0.0, 0.0), ExpectedVerdict::Birkhoff)
        }
        FixtureKind::WildExponential => {
            if params.degenerate {
                return Err(OracleError::Contract("the exponential fixture needs b in (0, 1)".into()));
            }
            (SolutionCoefficients::new(0.0, 1.0, 0.3, 0.0), ExpectedVerdict::NonBirkhoff)
        }
        FixtureKind::DegenerateBounded => {
            if !params.degenerate {
                return Err(OracleError::Contract("the degenerate fixture needs b = 0".into()));
            }
            (SolutionCoefficients::new(0.0, 0.0, 0.0, 1.0), ExpectedVerdict::OutsideStrongTwist)
        }
    };
    let window = general_solution(&params, &coefficients, span)?;
    Ok(Fixture { kind, params, coefficients, expected, window })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn root_examples() {
        let d = char_roots(0.0).unwrap();
        assert!(d.degenerate && d.c0 == -1.0 && d.c1 == -1.0);
        let h = char_roots(0.5).unwrap();
        assert!((h.c0 + (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!((h.c1 + 0.3819660113).abs() < 1e-10);
        assert!((h.c0 + h.c1 + 3.0).abs() < 1e-12);
        let t = char_roots(2.0 / 3.0).unwrap();
        assert!((t.c0 + 2.0 + 3f64.sqrt()).abs() < 1e-12);
        assert!((t.c1 + 2.0 - 3f64.sqrt()).abs() < 1e-12);
        assert!(matches!(char_roots(1.0), Err(OracleError::OutOfRange(_))));
        assert!(matches!(char_roots(-0.1), Err(OracleError::OutOfRange(_))));
    }

    #[test]
    fn closed_form_root_formula_agrees() {
        for b in [0.1, 0.25, 0.5, 0.9] {
            let p = char_roots(b).unwrap();
            let disc = (b * (4.0 - 3.0 * b)).sqrt();
            let minus = (b - 2.0 - disc) / (2.0 * (1.0 - b));
            let plus = (b - 2.0 + disc) / (2.0 * (1.0 - b));
            assert!((p.c0 - minus).abs() < 1e-12 * minus.abs());
            assert!((p.c1 - plus).abs() < 1e-12);
        }
    }

    #[test]
    fn solution_examples() {
        let h = char_roots(0.5).unwrap();
        let w = general_solution(&h, &SolutionCoefficients::new(0.0, 0.0, 1.0, 0.0), 0..=2).unwrap();
        assert_eq!(w.values()[0], 1.0);
        assert!((w.values()[1] + 2.618034).abs() < 1e-6);
        assert!((w.values()[2] - 6.854102).abs() < 1e-6);
        let d = char_roots(0.0).unwrap();
        let w = general_solution(&d, &SolutionCoefficients::new(0.0, 0.0, 0.0, 1.0), 0..=2).unwrap();
        assert_eq!(w.values(), &[0.0, -1.0, 2.0]);
        let line = general_solution(&h, &SolutionCoefficients::new(0.0, 0.7, 0.0, 0.0), -3..=3).unwrap();
        assert!(verify_rr1(&line, 0.5).unwrap() < 1e-14);
        assert!(matches!(
            general_solution(&h, &SolutionCoefficients::new(0.0, 0.0, 1.0, 0.0), 0..=2000),
            Err(OracleError::SpanTooLarge { .. })
        ));
    }

    #[test]
    fn perturbed_solution_has_defect() {
        let b = 0.3;
        let p = char_roots(b).unwrap();
        let w = general_solution(&p, &SolutionCoefficients::new(0.1, 0.2, 0.01, 0.02), -5..=5).unwrap();
        let mut v = w.values().to_vec();
        v[5] += 0.1;
        let bumped = w.with_values(v).unwrap();
        assert!(verify_rr1(&bumped, b).unwrap() >= 0.1 * b.min(1.0 - b).min(2.0));
    }

    #[test]
    fn fixture_contracts() {
        assert!(oracle_fixture(FixtureKind::DegenerateBounded, 0.5, -5..=5).is_err());
        assert!(oracle_fixture(FixtureKind::WildExponential, 0.0, -5..=5).is_err());
        let f = oracle_fixture(FixtureKind::WildExponential, 0.5, -30..=30).unwrap();
        assert_eq!(f.expected, ExpectedVerdict::NonBirkhoff);
        assert!(verify_rr1(&f.window, 0.5).unwrap() <= 1e-9 * 0.3 * 2.62f64.powi(30));
    }

    proptest! {
        #[test]
        fn root_identities(b in 0.001f64..0.999) {
            let p = char_roots(b).unwrap();
            prop_assert!(p.c0 < -1.0 && -1.0 < p.c1 && p.c1 < 0.0);
            prop_assert!((p.c0 * p.c1 - 1.0).abs() <= 1e-12);
            prop_assert!((p.c0 + p.c1 + (2.0 - b) / (1.0 - b)).abs() <= 1e-12 * p.c0.abs());
        }

        #[test]
        fn solutions_satisfy_relation(b in 0.05f64..0.95, k in prop::array::uniform4(-1.0f64..1.0)) {
            let p = char_roots(b).unwrap();
            let w = general_solution(&p, &SolutionCoefficients::new(k[0], k[1], k[2], k[3]), -30..=30).unwrap();
            let scale = w.values().iter().fold(1.0f64, |m, v| m.max(v.abs()));
            prop_assert!(verify_rr1(&w, b).unwrap() <= 1e-9 * scale);
        }
    }
}
