//! Logarithms `f = e^g` with `spec(g) ⊂ Σ`, built along the contraction path
//! `t ↦ R_t(f)` from the constant term of `f` up to `f` itself, and the
//! truncated exponential used to verify them.
//!
//! With `F_t = R_t(f / c_0)` and `0 < t_K < … < t_0 = 1`, stage `k` forms
//! `r_k = F_{t_k} · F_{t_{k+1}}^{-1}` (with `F_0 = 1`) so that
//! `Π_k r_k = F_1` telescopes. Each `r_k` is close to 1, so
//! `log r_k = -Σ_m (1 - r_k)^m / m` converges; the inverse carried to the
//! next stage is the Neumann series of the same defect.

use num_complex::Complex64;

use crate::corona::CoronaCertificate;
use crate::error::{Error, Result};
use crate::poly::APPolynomial;
use crate::semigroup::Semigroup;

#[derive(Clone, Debug)]
pub struct ExpSeries {
    pub value: APPolynomial,
    /// Bound on the coefficient sum of `e^g - value`.
    pub tail_bound: f64,
    pub order: usize,
}

/// Tail of `Σ_{m > order} r^m / m!`, bounded by its first term times a
/// geometric factor.
fn exp_tail(r: f64, order: usize) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let n1 = (order + 1) as f64;
    if r >= n1 + 1.0 {
        return f64::INFINITY;
    }
    let log_first = n1 * r.ln() - ln_factorial(order + 1);
    log_first.exp() / (1.0 - r / (n1 + 1.0))
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Smallest order whose series tail for a non-constant part of coefficient
/// sum `r`, scaled by `scale`, is at most `tol`.
pub fn exp_order_for(r: f64, scale: f64, tol: f64) -> usize {
    let mut n = 1;
    while scale * exp_tail(r, n) > tol && n < 10_000 {
        n += 1;
    }
    n
}

/// `e^{c_0} Σ_{m ≤ order} (g - c_0)^m / m!`.
///
/// Factoring out the constant term makes scalar exponentials exact up to
/// rounding. The reported tail bounds the omitted terms and the mass lost
/// to pruning; it must not exceed `tol`.
pub fn exp_truncated(g: &APPolynomial, sigma: &Semigroup, order: usize, tol: f64) -> Result<ExpSeries> {
    if order == 0 {
        return Err(Error::OutOfRange { name: "order", value: 0.0 });
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::OutOfRange { name: "tol", value: tol });
    }
    sigma.require_spectrum(g)?;
    let c0 = g.constant_term();
    let scale = c0.exp();
    let h = g.without_constant();
    let r = h.coef_sum();

    let series_tail = scale.norm() * exp_tail(r, order);
    if series_tail > tol {
        return Err(Error::IncreaseOrder { tail: series_tail });
    }
    // Pruning may use a tenth of the tolerance overall.
    let budget = tol / (10.0 * order as f64 * scale.norm().max(1e-300) * r.exp());
    let mut term = APPolynomial::constant(g.basis(), Complex64::new(1.0, 0.0));
    let mut sum = term.clone();
    let mut dropped = 0.0;
    for m in 1..=order {
        term = (&term * &h).scale(Complex64::new(1.0 / m as f64, 0.0));
        dropped += term.prune(budget);
        if term.is_empty() {
            break;
        }
        sum = &sum + &term;
    }
    let tail_bound = series_tail + scale.norm() * dropped * r.exp();
    if tail_bound > tol {
        return Err(Error::IncreaseOrder { tail: tail_bound });
    }
    Ok(ExpSeries { value: sum.scale(scale), tail_bound, order })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogConfig {
    /// Geometric schedule ratio `t_{k+1} = ratio · t_k`.
    pub schedule_ratio: f64,
    /// A stage is accepted when the coefficient sum of `1 - r_k` is below this.
    pub stage_radius: f64,
    pub stage_cap: usize,
    /// Verification retries, each with a hundredfold tighter internal tolerance.
    pub attempts: usize,
}

impl Default for LogConfig {
    fn default() -> Self {
        LogConfig { schedule_ratio: 0.9, stage_radius: 0.5, stage_cap: 400, attempts: 4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogStage {
    pub t: f64,
    pub previous_t: f64,
    /// Coefficient sum of `1 - r_k`.
    pub defect: f64,
    pub series_terms: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogPath {
    /// Decreasing, starting at 1.
    pub t_schedule: Vec<f64>,
    /// In processing order, from the smallest `t` up to 1.
    pub stages: Vec<LogStage>,
    pub constant_log: Complex64,
}

#[derive(Clone, Debug)]
pub struct Logarithm {
    pub g: APPolynomial,
    pub path: LogPath,
    /// Coefficient-sum bound of `e^g - f`, including the exponential's tail.
    pub residual_upper: f64,
    pub exp_order: usize,
}

pub fn logarithm(f: &APPolynomial, sigma: &Semigroup, cert: &CoronaCertificate, tol: f64) -> Result<Logarithm> {
    logarithm_with(f, sigma, cert, tol, &LogConfig::default())
}

pub fn logarithm_with(
    f: &APPolynomial,
    sigma: &Semigroup,
    cert: &CoronaCertificate,
    tol: f64,
    config: &LogConfig,
) -> Result<Logarithm> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::OutOfRange { name: "tol", value: tol });
    }
    if !(config.schedule_ratio > 0.0 && config.schedule_ratio < 1.0) {
        return Err(Error::OutOfRange { name: "schedule_ratio", value: config.schedule_ratio });
    }
    if !(config.stage_radius > 0.0 && config.stage_radius < 1.0) {
        return Err(Error::OutOfRange { name: "stage_radius", value: config.stage_radius });
    }
    if !(cert.lower_bound > 0.0) {
        return Err(Error::CoronaNotCertified { lower_bound: cert.lower_bound });
    }
    sigma.require_spectrum(f)?;
    let c0 = f.constant_term();
    if c0 == Complex64::default() {
        return Err(Error::NotInvertible);
    }
    let normalized = f.scale(c0.inv());
    let schedule = initial_schedule(&normalized, config)?;

    let mut internal = tol / 10.0;
    let mut best: Option<Logarithm> = None;
    for _ in 0..config.attempts.max(1) {
        let (g, path) = follow_path(&normalized, c0, &schedule, internal, config)?;
        let g_mass = g.without_constant().coef_sum();
        let scale = g.constant_term().exp().norm();
        let order = exp_order_for(g_mass, scale, tol / 4.0);
        let check = exp_truncated(&g, sigma, order, tol / 2.0)?;
        let residual_upper = (&check.value - f).coef_sum() + check.tail_bound;
        let candidate = Logarithm { g, path, residual_upper, exp_order: order };
        let done = residual_upper <= tol;
        if best.as_ref().is_none_or(|b| candidate.residual_upper < b.residual_upper) {
            best = Some(candidate);
        }
        if done {
            break;
        }
        internal /= 100.0;
    }
    let best = best.unwrap();
    if best.residual_upper > tol {
        return Err(Error::ToleranceNotReached { achieved: best.residual_upper, tol });
    }
    sigma.require_spectrum(&best.g)?;
    Ok(best)
}

/// `1, ρ, ρ², …, t_K` with the positive-frequency mass of `R_{t_K}` inside
/// the stage radius.
fn initial_schedule(normalized: &APPolynomial, config: &LogConfig) -> Result<Vec<f64>> {
    let mut ts = vec![1.0];
    loop {
        let t = *ts.last().unwrap();
        let mass = normalized.homotopy(t)?.without_constant().coef_sum();
        if mass < config.stage_radius {
            return Ok(ts);
        }
        if ts.len() >= config.stage_cap {
            return Err(Error::StageCapExceeded { cap: config.stage_cap });
        }
        ts.push(t * config.schedule_ratio);
    }
}

fn log_terms(rho: f64, tol: f64) -> usize {
    let mut m = 1;
    while rho.powi(m as i32 + 1) / ((m + 1) as f64 * (1.0 - rho)) > tol && m < 100_000 {
        m += 1;
    }
    m
}

fn follow_path(
    normalized: &APPolynomial,
    c0: Complex64,
    schedule: &[f64],
    internal_tol: f64,
    config: &LogConfig,
) -> Result<(APPolynomial, LogPath)> {
    let basis = normalized.basis();
    let one = APPolynomial::constant(basis, Complex64::new(1.0, 0.0));
    let stage_tol = internal_tol / (4.0 * (schedule.len() + 1) as f64);
    let budget = stage_tol / 20.0;

    let mut pending: Vec<f64> = schedule.to_vec(); // popped from the back: smallest t first
    let mut previous_t = 0.0;
    let mut inverse = one.clone();
    let mut acc = APPolynomial::zero(basis);
    let mut stages: Vec<LogStage> = Vec::new();
    let mut visited: Vec<f64> = Vec::new();

    while let Some(t) = pending.pop() {
        let ft = normalized.homotopy(t)?;
        let r = (&ft * &inverse).pruned(budget);
        let delta = &one - &r;
        let rho = delta.coef_sum();
        if rho >= config.stage_radius {
            if stages.len() + pending.len() + 2 > config.stage_cap {
                return Err(Error::StageCapExceeded { cap: config.stage_cap });
            }
            pending.push(t);
            pending.push(0.5 * (previous_t + t));
            continue;
        }
        let terms = log_terms(rho, stage_tol);
        let power_budget = budget / terms as f64;
        // log r = -Σ_{m ≥ 1} δ^m / m ; 1/r = Σ_{m ≥ 0} δ^m
        let mut power = one.clone();
        let mut log_r = APPolynomial::zero(basis);
        let mut inv_r = one.clone();
        for m in 1..=terms {
            power = (&power * &delta).pruned(power_budget);
            if power.is_empty() {
                break;
            }
            log_r = &log_r - &power.scale(Complex64::new(1.0 / m as f64, 0.0));
            inv_r = &inv_r + &power;
        }
        acc = &acc + &log_r;
        if t < 1.0 {
            inverse = (&inverse * &inv_r).pruned(budget);
        }
        stages.push(LogStage { t, previous_t, defect: rho, series_terms: terms });
        visited.push(t);
        previous_t = t;
    }
    let constant_log = c0.ln();
    let g = &acc + &APPolynomial::constant(basis, constant_log);
    visited.reverse();
    Ok((g, LogPath { t_schedule: visited, stages, constant_log }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::FrequencyBasis;
    use crate::corona::{certify_infimum, CoronaConfig};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn setup() -> (Arc<FrequencyBasis>, Semigroup) {
        let b = Arc::new(FrequencyBasis::rational());
        let sg = Semigroup::from_ints(&b, &[1]).unwrap();
        (b, sg)
    }

    fn e(b: &Arc<FrequencyBasis>, k: i64, c: Complex64) -> APPolynomial {
        APPolynomial::monomial(b, b.from_int(k), c).unwrap()
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn exp_of_zero_is_one() {
        let (b, sg) = setup();
        let r = exp_truncated(&APPolynomial::zero(&b), &sg, 1, 1e-12).unwrap();
        assert_eq!(r.value, APPolynomial::constant(&b, re(1.0)));
        assert_eq!(r.tail_bound, 0.0);
    }

    #[test]
    fn exp_of_i_pi() {
        let (b, sg) = setup();
        let g = APPolynomial::constant(&b, Complex64::new(0.0, PI));
        let r = exp_truncated(&g, &sg, 5, 1e-12).unwrap();
        assert!((&r.value - &APPolynomial::constant(&b, re(-1.0))).coef_sum() < 1e-12);
    }

    #[test]
    fn exp_matches_closed_form() {
        let (b, sg) = setup();
        let g = e(&b, 1, re(0.25));
        let r = exp_truncated(&g, &sg, 20, 1e-12).unwrap();
        let mut fact = 1.0;
        for m in 0..=20 {
            if m > 0 {
                fact *= m as f64;
            }
            let want = 0.25f64.powi(m) / fact;
            assert!((r.value.coefficient(&b.from_int(m as i64)) - want).norm() < 1e-12);
        }
        assert!(r.tail_bound < 1e-12);
    }

    #[test]
    fn exp_reports_insufficient_order() {
        let (b, sg) = setup();
        let g = e(&b, 1, re(3.0));
        assert_eq!(exp_truncated(&g, &sg, 3, 1e-6).unwrap_err().code(), "increase-order");
    }

    fn cert_for(f: &APPolynomial, sg: &Semigroup) -> CoronaCertificate {
        certify_infimum(std::slice::from_ref(f), sg, &CoronaConfig::default()).unwrap()
    }

    #[test]
    fn log_of_constant() {
        let (b, sg) = setup();
        let f = APPolynomial::constant(&b, re(std::f64::consts::E));
        let lg = logarithm(&f, &sg, &cert_for(&f, &sg), 1e-12).unwrap();
        assert!((&lg.g - &APPolynomial::constant(&b, re(1.0))).coef_sum() < 1e-15);
    }

    #[test]
    fn log_round_trip_quarter() {
        let (b, sg) = setup();
        let p = e(&b, 1, re(0.25));
        let f = exp_truncated(&p, &sg, 30, 1e-14).unwrap().value;
        let lg = logarithm(&f, &sg, &cert_for(&f, &sg), 1e-10).unwrap();
        assert!(lg.g.max_coef_distance(&p) <= 1e-6, "{:?}", lg.g);
        assert!(lg.residual_upper <= 1e-10);
    }

    #[test]
    fn log_of_affine_uses_principal_branch() {
        let (b, sg) = setup();
        let f = &e(&b, 1, re(1.0)) - &e(&b, 0, re(2.0));
        let lg = logarithm(&f, &sg, &cert_for(&f, &sg), 1e-9).unwrap();
        assert!(lg.residual_upper <= 1e-9);
        assert!((lg.path.constant_log - Complex64::new(2f64.ln(), PI)).norm() < 1e-15);
        // log(w - 2) = Log(-2) + log(1 - w/2) = Log(-2) - Σ w^k / (k 2^k)
        assert!((lg.g.constant_term() - Complex64::new(2f64.ln(), PI)).norm() < 1e-9);
        for k in 1..6 {
            let want = -1.0 / (k as f64 * 2f64.powi(k as i32));
            assert!((lg.g.coefficient(&b.from_int(k)) - want).norm() < 1e-9);
        }
        assert!(lg.path.t_schedule[0] == 1.0);
        assert!(lg.path.t_schedule.windows(2).all(|w| w[0] > w[1]));
        assert!(lg.path.stages.iter().all(|s| s.defect < 1.0));
    }

    #[test]
    fn log_requires_certificate_and_constant() {
        let (b, sg) = setup();
        let f = &e(&b, 1, re(1.0)) - &e(&b, 0, re(2.0));
        let mut cert = cert_for(&f, &sg);
        cert.lower_bound = 0.0;
        assert_eq!(logarithm(&f, &sg, &cert, 1e-9).unwrap_err().code(), "corona-not-certified");
        let g = e(&b, 1, re(1.0));
        let cert = cert_for(&f, &sg);
        assert_eq!(logarithm(&g, &sg, &cert, 1e-9).unwrap_err(), Error::NotInvertible);
    }

    #[test]
    fn tight_stage_cap_is_reported() {
        let (b, sg) = setup();
        let f = &e(&b, 0, re(1.0)) + &e(&b, 1, re(0.9));
        let cert = cert_for(&f, &sg);
        let config = LogConfig { stage_cap: 2, ..LogConfig::default() };
        assert_eq!(logarithm_with(&f, &sg, &cert, 1e-9, &config).unwrap_err().code(), "stage-cap");
    }
}
