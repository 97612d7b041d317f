//! Periodic minimizers, minimality evidence on windows, rotation-number
//! sweeps, gaps of the periodic minimizer set and heteroclinic connections.

use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{birkhoff_check, BirkhoffSearch, LatticeError, Window};
use crate::model::LocalEnergyModel;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("no convergence after {iterations} iterations (gradient max-norm {grad_norm:e})")]
    Diverged { iterations: usize, grad_norm: f64, last: Vec<f64> },
    #[error("only saddle points found after {restarts} restarts (smallest Hessian eigenvalue {min_eigenvalue:e})")]
    SaddleRejected { restarts: usize, min_eigenvalue: f64 },
    #[error("converged configuration is not Birkhoff on a 3-period window")]
    NotBirkhoff,
    #[error("no gap found: {0}")]
    NoGap(String),
    #[error("pin level {0} coincides with a minimizer value at site 0")]
    PinOnMinimizer(f64),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// A `(p,q)`-periodic configuration given by `x_0, …, x_{p−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicState {
    pub p: usize,
    pub q: i64,
    pub cell: Vec<f64>,
}

impl PeriodicState {
    pub fn new(p: usize, q: i64, cell: Vec<f64>) -> Result<Self, SolverError> {
        if p == 0 || cell.len() != p {
            return Err(SolverError::Contract(format!("a ({p},{q}) state needs p ≥ 1 and exactly p values")));
        }
        Ok(PeriodicState { p, q, cell })
    }

    /// `x_i = (q/p) i + shift`.
    pub fn linear(p: usize, q: i64, shift: f64) -> Self {
        let slope = q as f64 / p as f64;
        PeriodicState { p, q, cell: (0..p).map(|i| slope * i as f64 + shift).collect() }
    }

    pub fn get(&self, i: i64) -> f64 {
        let p = self.p as i64;
        self.cell[i.rem_euclid(p) as usize] + (i.div_euclid(p) * self.q) as f64
    }

    pub fn window(&self) -> Window {
        Window::periodic(0, self.cell.clone(), self.p, self.q).expect("valid cell")
    }

    /// `(τ_{k,l} x)_i = x_{i−k} + l`.
    pub fn translated(&self, k: i64, l: i64) -> PeriodicState {
        let cell = (0..self.p as i64).map(|i| self.get(i - k) + l as f64).collect();
        PeriodicState { p: self.p, q: self.q, cell }
    }

    pub fn rotation_number(&self) -> f64 {
        self.q as f64 / self.p as f64
    }

    fn extended(&self, r: usize) -> Vec<f64> {
        (0..(self.p + r) as i64).map(|i| self.get(i)).collect()
    }

    fn with_cell(&self, cell: Vec<f64>) -> PeriodicState {
        PeriodicState { p: self.p, q: self.q, cell }
    }
}

/// `W_{p,q}(x) = Σ_{i=0}^{p−1} S_i(x)`.
pub fn periodic_action(model: &LocalEnergyModel, state: &PeriodicState) -> f64 {
    let ext = state.extended(model.range());
    (0..state.p).map(|i| model.local_energy(&ext[i..])).sum()
}

pub fn periodic_grad(model: &LocalEnergyModel, state: &PeriodicState) -> Vec<f64> {
    let p = state.p;
    let ext = state.extended(model.range());
    let mut g = vec![0.0; p];
    for i in 0..p {
        for pot in model.potentials() {
            let j = pot.offset;
            let [a, b] = pot.pair.gradient(ext[i], ext[i + j]);
            g[i] += a;
            g[(i + j) % p] += b;
        }
    }
    g
}

/// Hessian of `W_{p,q}` with respect to the cell, indices folded mod `p`.
pub fn periodic_hessian(model: &LocalEnergyModel, state: &PeriodicState) -> DMatrix<f64> {
    let p = state.p;
    let ext = state.extended(model.range());
    let mut h = DMatrix::zeros(p, p);
    for i in 0..p {
        for pot in model.potentials() {
            let j = pot.offset;
            let m = (i + j) % p;
            let d = pot.pair.hessian(ext[i], ext[i + j]);
            h[(i, i)] += d.d11;
            h[(m, m)] += d.d22;
            h[(i, m)] += d.d12;
            h[(m, i)] += d.d12;
        }
    }
    h
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Gradient max-norm accepted as converged.
    pub tol: f64,
    /// Damped Newton iterations per start.
    pub max_iter: usize,
    /// Gradient-descent iterations before the Newton phase.
    pub descent_iter: usize,
    /// Perturbed restarts after a saddle or non-Birkhoff result.
    pub restarts: usize,
    /// Number of shifted linear seeds used when no seed is given.
    pub multistart: usize,
    pub psd_tol: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iter: 500,
            descent_iter: 2000,
            restarts: 8,
            multistart: 3,
            psd_tol: 1e-8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizerRecord {
    pub state: PeriodicState,
    pub action: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub hessian_psd: bool,
    pub birkhoff_ok: bool,
    pub min_eigenvalue: f64,
}

impl MinimizerRecord {
    pub fn translated(&self, k: i64, l: i64) -> MinimizerRecord {
        MinimizerRecord { state: self.state.translated(k, l), ..self.clone() }
    }
}

fn descend(
    model: &LocalEnergyModel,
    start: &PeriodicState,
    opts: &SolveOptions,
) -> Result<(PeriodicState, usize), SolverError> {
    let mut x = start.clone();
    let mut iterations = 0;
    let mut step = 1.0;
    let switch = (1e3 * opts.tol).max(1e-6);
    for _ in 0..opts.descent_iter {
        let g = periodic_grad(model, &x);
        if max_norm(&g) <= switch {
            break;
        }
        let w0 = periodic_action(model, &x);
        let g2: f64 = g.iter().map(|v| v * v).sum();
        let mut accepted = false;
        while step > 1e-14 {
            let trial = x.with_cell(x.cell.iter().zip(&g).map(|(a, b)| a - step * b).collect());
            if periodic_action(model, &trial) <= w0 - 0.5 * step * g2 {
                x = trial;
                accepted = true;
                step = (step * 2.0).min(1e3);
                break;
            }
            step *= 0.5;
        }
        iterations += 1;
        if !accepted {
            break;
        }
    }

    let mut mu = 1e-10;
    for _ in 0..opts.max_iter {
        let g = periodic_grad(model, &x);
        if max_norm(&g) <= opts.tol {
            return Ok((x, iterations));
        }
        iterations += 1;
        let w0 = periodic_action(model, &x);
        let g_norm = l2(&g);
        let h = periodic_hessian(model, &x);
        let rhs = -DVector::from_column_slice(&g);
        loop {
            let shifted = &h + DMatrix::<f64>::identity(x.p, x.p) * mu;
            if let Some(ch) = shifted.cholesky() {
                let delta = ch.solve(&rhs);
                let trial = x.with_cell(x.cell.iter().zip(delta.iter()).map(|(a, d)| a + d).collect());
                let w1 = periodic_action(model, &trial);
                let slack = 1e-12 * w0.abs().max(1.0);
                let g1 = l2(&periodic_grad(model, &trial));
                if w1 < w0 - slack || (w1 <= w0 + slack && g1 < g_norm) {
                    x = trial;
                    mu = (mu * 0.1).max(1e-14);
                    break;
                }
            }
            mu *= 10.0;
            if mu > 1e14 {
                let grad_norm = max_norm(&periodic_grad(model, &x));
                return Err(SolverError::Diverged { iterations, grad_norm, last: x.cell });
            }
        }
    }
    let grad_norm = max_norm(&periodic_grad(model, &x));
    if grad_norm <= opts.tol {
        return Ok((x, iterations));
    }
    Err(SolverError::Diverged { iterations, grad_norm, last: x.cell })
}

fn min_eigenvalue(h: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(h).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn birkhoff_on_three_periods(state: &PeriodicState) -> bool {
    let w = state.window().materialize(0, 3 * state.p as i64 - 1).expect("periodic window");
    let mut search = BirkhoffSearch::default_for(&w);
    search.tol = 1e-9;
    birkhoff_check(&w, search).map(|r| r.is_birkhoff()).unwrap_or(false)
}

fn rng_for(seed: u64, p: usize, q: i64) -> ChaCha8Rng {
    let mix = seed ^ (p as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (q as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    ChaCha8Rng::seed_from_u64(mix)
}

/// Minimizes from one seed, restarting from perturbations of the seed when
/// the result is a saddle or fails the Birkhoff check.
fn minimize_from(
    model: &LocalEnergyModel,
    seed: &PeriodicState,
    opts: &SolveOptions,
    rng: &mut ChaCha8Rng,
) -> Result<MinimizerRecord, SolverError> {
    let mut start = seed.clone();
    let mut total_iterations = 0;
    let mut worst_eigen = f64::INFINITY;
    let mut saw_non_birkhoff = false;
    for attempt in 0..=opts.restarts {
        let (x, iterations) = descend(model, &start, opts)?;
        total_iterations += iterations;
        let lambda_min = min_eigenvalue(periodic_hessian(model, &x));
        let psd = lambda_min >= -opts.psd_tol;
        let birkhoff = psd && birkhoff_on_three_periods(&x);
        if psd && birkhoff {
            return Ok(MinimizerRecord {
                action: periodic_action(model, &x),
                grad_norm: max_norm(&periodic_grad(model, &x)),
                iterations: total_iterations,
                hessian_psd: true,
                birkhoff_ok: true,
                min_eigenvalue: lambda_min,
                state: x,
            });
        }
        worst_eigen = worst_eigen.min(lambda_min);
        saw_non_birkhoff |= psd && !birkhoff;
        let scale = 0.05 * (1.0 + attempt as f64) / seed.p as f64;
        start = x.with_cell(x.cell.iter().map(|v| v + scale * rng.random_range(-1.0..1.0)).collect());
    }
    if saw_non_birkhoff && worst_eigen >= -opts.psd_tol {
        return Err(SolverError::NotBirkhoff);
    }
    Err(SolverError::SaddleRejected { restarts: opts.restarts, min_eigenvalue: worst_eigen })
}

/// A `(p,q)`-periodic minimizer. Without a seed, several shifted linear
/// seeds are tried and the lowest action is kept.
pub fn minimize_periodic(
    model: &LocalEnergyModel,
    p: usize,
    q: i64,
    seed: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<MinimizerRecord, SolverError> {
    if p == 0 {
        return Err(SolverError::Contract("period p must be at least 1".into()));
    }
    let mut rng = rng_for(opts.seed, p, q);
    if let Some(cell) = seed {
        let start = PeriodicState::new(p, q, cell.to_vec())?;
        return minimize_from(model, &start, opts, &mut rng);
    }
    let starts = opts.multistart.max(1);
    let mut best: Option<MinimizerRecord> = None;
    let mut last_err = None;
    for s in 0..starts {
        let shift = s as f64 / (starts as f64 * p as f64);
        match minimize_from(model, &PeriodicState::linear(p, q, shift), opts, &mut rng) {
            Ok(rec) => {
                if best.as_ref().is_none_or(|b| rec.action < b.action - 1e-12 * b.action.abs().max(1.0)) {
                    best = Some(rec);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.expect("at least one start"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub trials: usize,
    pub segment_sizes: Vec<usize>,
    pub amplitudes: Vec<f64>,
    pub seed: u64,
    /// Relative equilibrium tolerance, scaled by `max(1, Σ|contributions|)`.
    pub residual_tol: f64,
    pub energy_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            trials: 200,
            segment_sizes: vec![1, 2, 4, 8],
            amplitudes: vec![1e-3, 1e-2, 0.1, 0.5],
            seed: 0,
            residual_tol: 1e-8,
            energy_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Falsifier {
    pub start: i64,
    pub len: usize,
    pub amplitude: f64,
    pub energy_change: f64,
}

/// Evidence of global minimality of a window: equilibrium residuals and the
/// outcome of random compact perturbations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvidenceReport {
    pub equilibrium_ok: bool,
    pub worst_residual: f64,
    pub worst_relative_residual: f64,
    pub sites_checked: usize,
    pub failing_sites: Vec<i64>,
    pub trials_run: usize,
    pub falsifiers: Vec<Falsifier>,
}

impl EvidenceReport {
    pub fn passed(&self) -> bool {
        self.equilibrium_ok && self.falsifiers.is_empty() && self.sites_checked > 0
    }

    pub fn summary(&self) -> String {
        format!(
            "equilibrium {} (worst relative residual {:e} over {} sites), {} of {} perturbations lowered the energy",
            if self.equilibrium_ok { "ok" } else { "violated" },
            self.worst_relative_residual,
            self.sites_checked,
            self.falsifiers.len(),
            self.trials_run
        )
    }
}

pub fn verify_on_window(model: &LocalEnergyModel, x: &Window, opts: &VerifyOptions) -> EvidenceReport {
    let r = model.range() as i64;
    let (lo, hi) = (x.base(), x.last());
    let mut report = EvidenceReport {
        equilibrium_ok: true,
        worst_residual: 0.0,
        worst_relative_residual: 0.0,
        sites_checked: 0,
        failing_sites: Vec::new(),
        trials_run: 0,
        falsifiers: Vec::new(),
    };
    let stored = |i: i64| if i >= lo && i <= hi { x.get(i) } else { None };
    for k in lo + r..=hi - r {
        let Some((res, scale)) = model.site_residual(stored, k) else { continue };
        report.sites_checked += 1;
        let rel = res.abs() / scale.max(1.0);
        report.worst_residual = report.worst_residual.max(res.abs());
        report.worst_relative_residual = report.worst_relative_residual.max(rel);
        if rel > opts.residual_tol {
            report.equilibrium_ok = false;
            if report.failing_sites.len() < 16 {
                report.failing_sites.push(k);
            }
        }
    }

    let sizes: Vec<usize> =
        opts.segment_sizes.iter().copied().filter(|&s| s >= 1 && lo + r + s as i64 - 1 <= hi - r).collect();
    if sizes.is_empty() || opts.amplitudes.is_empty() {
        return report;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5DEE_CE66_D1CE_4E5B);
    let values = x.values();
    for _ in 0..opts.trials {
        let s = sizes[rng.random_range(0..sizes.len())];
        let amplitude = opts.amplitudes[rng.random_range(0..opts.amplitudes.len())];
        let start = rng.random_range(lo + r..=hi - r - s as i64 + 1);
        let first = start - r;
        let span = s + 2 * r as usize;
        let mut dv = vec![0.0; span];
        for v in dv[r as usize..r as usize + s].iter_mut() {
            *v = amplitude * rng.random_range(-1.0..1.0);
        }
        let base = &values[(first - lo) as usize..(first - lo) as usize + span];
        let mut delta = 0.0;
        let mut magnitude = 0.0;
        for t in 0..s + r as usize {
            let inc = model.local_increment(&base[t..], &dv[t..]);
            let sizes_here = model.local_energy(&base[t..]).abs();
            delta += inc;
            magnitude += inc.abs() + 1e-3 * sizes_here;
        }
        report.trials_run += 1;
        let budget = opts.energy_tol + 1e-13 * magnitude;
        if delta < -budget {
            report.falsifiers.push(Falsifier { start, len: s, amplitude, energy_change: delta });
        }
    }
    report
}

/// Reduced fractions `q/p` with `1 ≤ p ≤ p_max` inside `[lo, hi]`, sorted.
pub fn farey(p_max: usize, lo: f64, hi: f64) -> Vec<(i64, usize)> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let mut out = Vec::new();
    for p in 1..=p_max {
        let pf = p as f64;
        let q_lo = (lo * pf - 1e-9).ceil() as i64;
        let q_hi = (hi * pf + 1e-9).floor() as i64;
        for q in q_lo..=q_hi {
            if gcd(q, p as i64) == 1 {
                out.push((q, p));
            }
        }
    }
    out.sort_by(|a, b| (a.0 * b.1 as i64).cmp(&(b.0 * a.1 as i64)));
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepFailure {
    pub p: usize,
    pub q: i64,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub records: Vec<MinimizerRecord>,
    pub failures: Vec<SweepFailure>,
}

/// One minimizer per reduced rotation number in `interval`, solved in
/// parallel on `jobs` threads.
pub fn sweep_farey(
    model: &LocalEnergyModel,
    p_max: usize,
    interval: (f64, f64),
    opts: &SolveOptions,
    jobs: usize,
) -> Result<SweepResult, SolverError> {
    if p_max == 0 || jobs == 0 || !(interval.0 <= interval.1) {
        return Err(SolverError::Contract("sweep needs p_max ≥ 1, jobs ≥ 1 and lo ≤ hi".into()));
    }
    let fractions = farey(p_max, interval.0, interval.1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SolverError::Contract(format!("worker pool: {e}")))?;
    let outcomes: Vec<_> = pool
        .install(|| fractions.par_iter().map(|&(q, p)| (p, q, minimize_periodic(model, p, q, None, opts))).collect());
    let mut result = SweepResult { records: Vec::new(), failures: Vec::new() };
    for (p, q, outcome) in outcomes {
        match outcome {
            Ok(rec) => result.records.push(rec),
            Err(e) => result.failures.push(SweepFailure { p, q, error: e.to_string() }),
        }
    }
    Ok(result)
}

fn same_action(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

/// A minimizer strictly between two ordered translates, found from
/// interpolated seeds.
fn minimizer_between(
    model: &LocalEnergyModel,
    action: f64,
    lower: &PeriodicState,
    upper: &PeriodicState,
    opts: &SolveOptions,
) -> Option<PeriodicState> {
    let probe = SolveOptions { multistart: 1, ..opts.clone() };
    for theta in [0.5, 0.25, 0.75] {
        let seed: Vec<f64> = lower.cell.iter().zip(&upper.cell).map(|(a, b)| (1.0 - theta) * a + theta * b).collect();
        let Ok(rec) = minimize_periodic(model, lower.p, lower.q, Some(&seed), &probe) else { continue };
        let strictly_between = rec
            .state
            .cell
            .iter()
            .zip(lower.cell.iter().zip(&upper.cell))
            .all(|(v, (a, b))| *v > a + 1e-7 && *v < b - 1e-7);
        if strictly_between && same_action(rec.action, action) {
            return Some(rec.state);
        }
    }
    None
}

/// Translate `(k, l)` of `state` together with its value at site 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiteZeroTranslate {
    pub k: i64,
    pub l: i64,
    pub value: f64,
}

fn bracketing_translates(state: &PeriodicState, b: f64) -> Result<(SiteZeroTranslate, SiteZeroTranslate), SolverError> {
    let mut below: Option<SiteZeroTranslate> = None;
    let mut above: Option<SiteZeroTranslate> = None;
    for k in 0..state.p as i64 {
        let v = state.get(-k);
        let mut l = (b - v).floor() as i64;
        while v + l as f64 >= b {
            l -= 1;
        }
        let lower = SiteZeroTranslate { k, l, value: v + l as f64 };
        let upper = SiteZeroTranslate { k, l: l + 1, value: v + (l + 1) as f64 };
        if (upper.value - b).abs() <= 1e-12 {
            return Err(SolverError::PinOnMinimizer(b));
        }
        let upper =
            if upper.value > b { upper } else { SiteZeroTranslate { l: l + 2, value: upper.value + 1.0, ..upper } };
        if below.is_none_or(|c| lower.value > c.value) {
            below = Some(lower);
        }
        if above.is_none_or(|c| upper.value < c.value) {
            above = Some(upper);
        }
    }
    Ok((below.expect("p ≥ 1"), above.expect("p ≥ 1")))
}

/// Two ordered minimizers with site-0 values around `b` and no minimizer
/// found strictly between them.
pub fn find_gap(
    model: &LocalEnergyModel,
    base: &MinimizerRecord,
    b: f64,
    opts: &SolveOptions,
) -> Result<(PeriodicState, PeriodicState), SolverError> {
    let (lo, hi) = bracketing_translates(&base.state, b)?;
    let mut lower = base.state.translated(lo.k, lo.l);
    let mut upper = base.state.translated(hi.k, hi.l);
    for _ in 0..4 {
        if upper.cell[0] - lower.cell[0] < 1e-6 {
            break;
        }
        match minimizer_between(model, base.action, &lower, &upper, opts) {
            None => return Ok((lower, upper)),
            Some(mid) => {
                if (mid.cell[0] - b).abs() <= 1e-12 {
                    return Err(SolverError::NoGap(format!(
                        "a ({},{}) minimizer passes through the pin {b}",
                        base.state.p, base.state.q
                    )));
                }
                if mid.cell[0] < b {
                    lower = mid;
                } else {
                    upper = mid;
                }
            }
        }
    }
    Err(SolverError::NoGap(format!(
        "minimizers keep appearing between the translates bracketing {b}; the ({},{}) minimizers look like a continuum",
        base.state.p, base.state.q
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Gap {
    pub lower: SiteZeroTranslate,
    pub upper: SiteZeroTranslate,
    pub width_at_zero: f64,
    /// `Σ (x⁺_i − x⁻_i)` over one period.
    pub window_sum: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub p: usize,
    pub q: i64,
    pub minimizer: MinimizerRecord,
    pub gaps: Vec<Gap>,
    pub pairs_examined: usize,
}

/// Slack on the windowed gap-sum diagnostic.
pub const GAP_SUM_SLACK: f64 = 0.05;

/// Adjacent translates of a `(p,q)` minimizer within one fundamental domain
/// that have no minimizer between them.
pub fn gap_analysis(model: &LocalEnergyModel, p: usize, q: i64, opts: &SolveOptions) -> Result<GapReport, SolverError> {
    let base = minimize_periodic(model, p, q, None, opts)?;
    let x0 = base.state.cell[0];
    let mut translates: Vec<SiteZeroTranslate> = (0..p as i64)
        .map(|k| {
            let v = base.state.get(-k);
            let l = -(v - x0 + 1e-12).floor() as i64;
            SiteZeroTranslate { k, l, value: v + l as f64 }
        })
        .collect();
    translates.sort_by(|a, b| a.value.total_cmp(&b.value));
    translates.dedup_by(|a, b| (a.value - b.value).abs() <= 1e-9);
    let first = translates[0];
    translates.push(SiteZeroTranslate { l: first.l + 1, value: first.value + 1.0, ..first });

    let mut gaps = Vec::new();
    for pair in translates.windows(2) {
        let lower = base.state.translated(pair[0].k, pair[0].l);
        let upper = base.state.translated(pair[1].k, pair[1].l);
        if minimizer_between(model, base.action, &lower, &upper, opts).is_some() {
            continue;
        }
        let window_sum: f64 = upper.cell.iter().zip(&lower.cell).map(|(a, b)| a - b).sum();
        gaps.push(Gap {
            lower: pair[0],
            upper: pair[1],
            width_at_zero: pair[1].value - pair[0].value,
            window_sum,
            within_bound: window_sum <= 1.0 + GAP_SUM_SLACK,
        });
    }
    Ok(GapReport { p, q, pairs_examined: translates.len() - 1, minimizer: base, gaps })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Approximants from below.
    Plus,
    /// Approximants from above.
    Minus,
}

/// Stern-Brocot approximants of `q/p` from one side, `depth` terms.
pub fn approximants(p: usize, q: i64, side: Side, depth: usize) -> Vec<(i64, usize)> {
    let pi = p as i64;
    let (a, c) = match side {
        Side::Plus => {
            let c = (1..=pi).find(|c| (q * c - 1).rem_euclid(pi) == 0).expect("gcd(q,p) = 1");
            ((q * c - 1).div_euclid(pi), c)
        }
        Side::Minus => {
            let c = (1..=pi).find(|c| (q * c + 1).rem_euclid(pi) == 0).expect("gcd(q,p) = 1");
            ((q * c + 1).div_euclid(pi), c)
        }
    };
    (1..=depth as i64).map(|n| (a + n * q, (c + n * pi) as usize)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeteroclinicResult {
    pub window: Window,
    pub lower: MinimizerRecord,
    pub upper: MinimizerRecord,
    pub side: Side,
    pub pin: f64,
    pub approximants: Vec<(i64, usize)>,
    pub approximant: MinimizerRecord,
    pub selected_translate: (i64, i64),
    /// Distance to the asymptotic endpoint over one base period at the left
    /// and right ends of the window.
    pub asymptotic_defects: [f64; 2],
    pub monotone: bool,
    pub envelope_ok: bool,
    pub birkhoff_ok: bool,
    pub evidence: EvidenceReport,
}

fn gcd_i(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd_i(b, a % b)
    }
}

/// Heteroclinic connection across the gap containing `b` at site 0, built
/// from periodic minimizers of Stern-Brocot approximants.
pub fn heteroclinic(
    model: &LocalEnergyModel,
    p: usize,
    q: i64,
    b: f64,
    depth: usize,
    side: Side,
    opts: &SolveOptions,
) -> Result<HeteroclinicResult, SolverError> {
    if p == 0 || depth == 0 || gcd_i(q, p as i64) != 1 {
        return Err(SolverError::Contract("heteroclinic needs p ≥ 1, depth ≥ 1 and gcd(p, q) = 1".into()));
    }
    let base = minimize_periodic(model, p, q, None, opts)?;
    let (lower, upper) = find_gap(model, &base, b, opts)?;
    let approx = approximants(p, q, side, depth);
    let (qn, pn) = *approx.last().expect("depth ≥ 1");
    let y = minimize_periodic(model, pn, qn, None, opts)?;

    let mut pick: Option<SiteZeroTranslate> = None;
    for k in 0..pn as i64 {
        let v = y.state.get(-k);
        let l = (b - v).ceil() as i64;
        let l = if v + (l as f64) < b { l + 1 } else { l };
        let cand = SiteZeroTranslate { k, l, value: v + l as f64 };
        if pick.is_none_or(|c| cand.value < c.value) {
            pick = Some(cand);
        }
    }
    let pick = pick.expect("p_n ≥ 1");
    let selected = y.state.translated(pick.k, pick.l);

    let inside = |i: i64| {
        let v = selected.get(i);
        v >= lower.get(i) - 1e-9 && v <= upper.get(i) + 1e-9
    };
    let cap = 3 * pn as i64;
    let mut lo = 0;
    while lo > -cap && inside(lo - 1) {
        lo -= 1;
    }
    let mut hi = 0;
    while hi < cap && inside(hi + 1) {
        hi += 1;
    }
    let values: Vec<f64> = (lo..=hi).map(|i| selected.get(i)).collect();
    let window = Window::new(lo, values.clone())?;

    let (left_target, right_target) = match side {
        Side::Plus => (&upper, &lower),
        Side::Minus => (&lower, &upper),
    };
    let period = p as i64;
    let left_defect =
        (lo..(lo + period).min(hi + 1)).map(|i| (selected.get(i) - left_target.get(i)).abs()).fold(0.0, f64::max);
    let right_defect =
        ((hi - period + 1).max(lo)..=hi).map(|i| (selected.get(i) - right_target.get(i)).abs()).fold(0.0, f64::max);
    let monotone = match side {
        Side::Plus => values.windows(2).all(|w| w[1] <= w[0] + 1e-12),
        Side::Minus => values.windows(2).all(|w| w[1] >= w[0] - 1e-12),
    };
    let envelope_ok = (lo..=hi).all(inside);
    let birkhoff_ok =
        birkhoff_check(&window, BirkhoffSearch::default_for(&window)).map(|r| r.is_birkhoff()).unwrap_or(false);
    let evidence = verify_on_window(model, &window, &VerifyOptions { seed: opts.seed, ..VerifyOptions::default() });
    let record = |state: PeriodicState| MinimizerRecord { state, ..base.clone() };
    Ok(HeteroclinicResult {
        window,
        lower: record(lower),
        upper: record(upper),
        side,
        pin: b,
        approximants: approx,
        approximant: y,
        selected_translate: (pick.k, pick.l),
        asymptotic_defects: [left_defect, right_defect],
        monotone,
        envelope_ok,
        birkhoff_ok,
        evidence,
    })
}

/// Sites of `range` where `x` is in equilibrium within `tol` (relative).
pub fn equilibrium_sites(
    model: &LocalEnergyModel,
    x: &Window,
    range: RangeInclusive<i64>,
    tol: f64,
) -> Vec<(i64, f64)> {
    range
        .filter_map(|k| {
            let stored = |i: i64| if i >= x.base() && i <= x.last() { x.get(i) } else { None };
            model.site_residual(stored, k).map(|(res, scale)| (k, res.abs() / scale.max(1.0)))
        })
        .filter(|(_, rel)| *rel <= tol)
        .collect()
}
