//! Certified lower bounds for `inf_{z ∈ H+} Σ_j |f̂_j(z)|`.
//!
//! Above a tail height `Y` the positive-frequency terms are dominated by the
//! constant terms. Below it, when all frequencies are rational, the functions
//! are periodic in `Re z` and one period of the strip is covered by a grid;
//! a Lipschitz bound turns the grid minimum into a bound for the whole strip.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use num_integer::Integer;
use num_traits::Zero;
use rayon::prelude::*;

use crate::basis::Rational;
use crate::error::{Error, Result};
use crate::poly::{APPolynomial, UpperHalfPoint};
use crate::semigroup::Semigroup;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateMode {
    /// All frequencies rational: the strip covers a full common period and
    /// the lower bound is rigorous (up to floating-point evaluation).
    CertifiedPeriodic,
    /// Some frequency is irrational: the strip width is user-chosen and no
    /// soundness claim is made.
    Heuristic,
}

impl CertificateMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertificateMode::CertifiedPeriodic => "certified-periodic",
            CertificateMode::Heuristic => "heuristic",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoronaConfig {
    /// Grid step `h`; derived from `margin_fraction` when absent.
    pub grid_step: Option<f64>,
    /// Strip width `X` for heuristic mode (ignored when a period exists).
    pub strip_width: Option<f64>,
    /// Override for the tail height `Y`.
    pub tail_height: Option<f64>,
    /// Automatic `h` makes the Lipschitz margin `L h √2` this fraction of
    /// `Σ_j |c_0(f_j)|`; the automatic tail height leaves the same slack.
    pub margin_fraction: f64,
    /// Cap on grid nodes; `h` is enlarged to respect it.
    pub max_grid_points: usize,
    /// When false, vanishing constant terms yield a zero bound instead of
    /// [`Error::InfimumZero`].
    pub require_positive: bool,
}

impl Default for CoronaConfig {
    fn default() -> Self {
        CoronaConfig {
            grid_step: None,
            strip_width: None,
            tail_height: None,
            margin_fraction: 0.025,
            max_grid_points: 4_000_000,
            require_positive: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoronaCertificate {
    pub lower_bound: f64,
    pub tail_height: f64,
    pub strip_width: f64,
    pub grid_step: f64,
    pub lipschitz: f64,
    pub mode: CertificateMode,
    /// Smallest grid value of `Σ|f̂_j|` and where it occurred.
    pub grid_minimum: f64,
    pub grid_argmin: (f64, f64),
    /// Guaranteed value of `Σ|f̂_j|` on `Im z ≥ Y`.
    pub tail_bound: f64,
    pub constant_mass: f64,
    pub grid_points: usize,
}

/// `Σ_j |f̂_j(z)|`.
pub fn corona_sum(f: &[APPolynomial], z: UpperHalfPoint) -> f64 {
    f.iter().map(|p| p.eval_upper(z).norm()).sum()
}

/// Common period `2π/d`, `d` the gcd of all nonzero frequencies, if every
/// frequency is rational. `Some(None)` when all functions are constant.
fn common_period(f: &[APPolynomial]) -> Option<Option<f64>> {
    let mut d: Option<Rational> = None;
    for p in f {
        for (freq, _) in p.terms() {
            if !freq.is_rational() {
                return None;
            }
            let q = freq.rational_part();
            if q.is_zero() {
                continue;
            }
            d = Some(match d {
                None => q,
                Some(acc) => Rational::new(acc.numer().gcd(q.numer()), acc.denom().lcm(q.denom())),
            });
        }
    }
    Some(d.map(|d| 2.0 * PI * (*d.denom() as f64) / (*d.numer() as f64)))
}

pub fn certify_infimum(f: &[APPolynomial], sigma: &Semigroup, config: &CoronaConfig) -> Result<CoronaCertificate> {
    for p in f {
        sigma.require_spectrum(p)?;
    }
    let constant_mass: f64 = f.iter().map(|p| p.constant_term().norm()).sum();
    let tail_mass: f64 = f.iter().map(|p| p.without_constant().coef_sum()).sum();
    let lipschitz: f64 = f.iter().flat_map(|p| p.numeric_terms()).map(|(l, c)| (1.0 + l) * c.norm()).sum();
    let lambda_min =
        f.iter().filter_map(APPolynomial::min_positive_frequency).fold(f64::INFINITY, f64::min) * (1.0 - 1e-12);
    let period = common_period(f);
    let mode = if period.is_some() { CertificateMode::CertifiedPeriodic } else { CertificateMode::Heuristic };

    if constant_mass == 0.0 {
        if config.require_positive {
            return Err(Error::InfimumZero);
        }
        return Ok(CoronaCertificate {
            lower_bound: 0.0,
            tail_height: f64::INFINITY,
            strip_width: 0.0,
            grid_step: 0.0,
            lipschitz,
            mode,
            grid_minimum: 0.0,
            grid_argmin: (0.0, f64::INFINITY),
            tail_bound: 0.0,
            constant_mass,
            grid_points: 0,
        });
    }

    if tail_mass == 0.0 {
        // Constant family: the sum is identically the constant mass.
        return Ok(CoronaCertificate {
            lower_bound: constant_mass,
            tail_height: 0.0,
            strip_width: 0.0,
            grid_step: 0.0,
            lipschitz,
            mode: CertificateMode::CertifiedPeriodic,
            grid_minimum: constant_mass,
            grid_argmin: (0.0, 0.0),
            tail_bound: constant_mass,
            constant_mass,
            grid_points: 1,
        });
    }

    let tail_height = match config.tail_height {
        Some(y) if y >= 0.0 && y.is_finite() => y,
        Some(y) => return Err(Error::OutOfRange { name: "tail_height", value: y }),
        // Tail slack equal to the grid margin; never lower than the height
        // where the tail mass drops to half the constant mass.
        None => {
            let eps = config.margin_fraction.clamp(f64::MIN_POSITIVE, 0.5);
            ((tail_mass / (eps * constant_mass)).ln() / lambda_min).max(0.0)
        }
    };
    let tail_bound = (constant_mass - tail_mass * (-lambda_min * tail_height).exp()).max(0.0);

    let strip_width = match period {
        Some(Some(p)) => p,
        Some(None) => unreachable!("nonconstant family has a positive frequency"),
        None => match config.strip_width {
            Some(x) if x > 0.0 && x.is_finite() => x,
            Some(x) => return Err(Error::OutOfRange { name: "strip_width", value: x }),
            // Four periods of the slowest frequency.
            None => 8.0 * PI / lambda_min,
        },
    };

    let mut h = match config.grid_step {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(Error::OutOfRange { name: "grid_step", value: h }),
        None => config.margin_fraction * constant_mass / (lipschitz * SQRT_2),
    };
    let count = |h: f64| ((strip_width / h).ceil() as usize + 1) * ((tail_height / h).ceil() as usize + 1);
    while count(h) > config.max_grid_points {
        h *= ((count(h) as f64) / config.max_grid_points as f64).sqrt().max(1.01);
    }
    let nx = (strip_width / h).ceil() as usize + 1;
    let ny = (tail_height / h).ceil() as usize + 1;

    let (grid_minimum, grid_argmin) = grid_minimum(f, h, nx, ny);
    let lower_bound = (grid_minimum - lipschitz * h * SQRT_2).min(tail_bound).max(0.0);

    Ok(CoronaCertificate {
        lower_bound,
        tail_height,
        strip_width,
        grid_step: h,
        lipschitz,
        mode,
        grid_minimum,
        grid_argmin,
        tail_bound,
        constant_mass,
        grid_points: nx * ny,
    })
}

/// Minimum of `Σ_j |f̂_j|` over nodes `(k h, m h)`, `k < nx`, `m < ny`.
/// Rows are evaluated in parallel and min-reduced.
fn grid_minimum(f: &[APPolynomial], h: f64, nx: usize, ny: usize) -> (f64, (f64, f64)) {
    let funcs: Vec<Vec<(f64, Complex64)>> = f.iter().map(APPolynomial::numeric_terms).collect();
    let flat: Vec<f64> = funcs.iter().flatten().map(|(l, _)| *l).collect();
    // phases[k][t] = e^{i λ_t x_k}
    let phases: Vec<Vec<Complex64>> =
        (0..nx).map(|k| flat.iter().map(|l| Complex64::from_polar(1.0, l * k as f64 * h)).collect()).collect();
    let coeffs: Vec<Complex64> = funcs.iter().flatten().map(|(_, c)| *c).collect();
    let spans: Vec<usize> = funcs.iter().map(Vec::len).collect();

    (0..ny)
        .into_par_iter()
        .map(|m| {
            let y = m as f64 * h;
            let weighted: Vec<Complex64> = coeffs.iter().zip(&flat).map(|(c, l)| c * (-l * y).exp()).collect();
            let mut best = (f64::INFINITY, (0.0, y));
            for (k, ph) in phases.iter().enumerate() {
                let mut start = 0;
                let mut total = 0.0;
                for len in &spans {
                    let v: Complex64 =
                        weighted[start..start + len].iter().zip(&ph[start..start + len]).map(|(a, b)| a * b).sum();
                    total += v.norm();
                    start += len;
                }
                if total < best.0 {
                    best = (total, (k as f64 * h, y));
                }
            }
            best
        })
        .reduce(|| (f64::INFINITY, (0.0, 0.0)), |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::FrequencyBasis;
    use std::sync::Arc;

    fn setup() -> (Arc<FrequencyBasis>, Semigroup) {
        let b = Arc::new(FrequencyBasis::rational());
        let sg = Semigroup::from_ints(&b, &[1]).unwrap();
        (b, sg)
    }

    fn e(b: &Arc<FrequencyBasis>, k: i64, c: f64) -> APPolynomial {
        APPolynomial::monomial(b, b.from_int(k), Complex64::new(c, 0.0)).unwrap()
    }

    /// Independent oracle: the sum written in closed form in `w = e^{iz}`,
    /// minimized over a grid of step `step` covering the certified strip and
    /// a band above the tail height.
    fn dense_minimum(sum: impl Fn(Complex64) -> f64, cert: &CoronaCertificate, step: f64) -> f64 {
        let nx = (cert.strip_width / step).ceil() as usize;
        let ny = ((cert.tail_height + 1.0) / step).ceil() as usize;
        let phases: Vec<Complex64> = (0..=nx).map(|k| Complex64::from_polar(1.0, k as f64 * step)).collect();
        let mut best = f64::INFINITY;
        for m in 0..=ny {
            let r = (-(m as f64) * step).exp();
            for p in &phases {
                best = best.min(sum(p * r));
            }
        }
        best
    }

    #[test]
    fn single_function_example() {
        let (b, sg) = setup();
        let f = vec![&e(&b, 1, 1.0) - &e(&b, 0, 2.0)];
        let cert = certify_infimum(&f, &sg, &CoronaConfig::default()).unwrap();
        assert_eq!(cert.mode, CertificateMode::CertifiedPeriodic);
        assert!((0.9..=1.0).contains(&cert.lower_bound), "{cert:?}");
        assert!((cert.strip_width - 2.0 * PI).abs() < 1e-12);
        assert!(dense_minimum(|w| (w - 2.0).norm(), &cert, cert.grid_step / 10.0) >= cert.lower_bound);
    }

    #[test]
    fn pair_example() {
        let (b, sg) = setup();
        let f = vec![&e(&b, 1, 1.0) - &e(&b, 0, 2.0), e(&b, 1, 1.0)];
        let cert = certify_infimum(&f, &sg, &CoronaConfig::default()).unwrap();
        assert!((1.8..=2.0).contains(&cert.lower_bound), "{cert:?}");
        assert!(dense_minimum(|w| (w - 2.0).norm() + w.norm(), &cert, cert.grid_step / 10.0) >= cert.lower_bound);
    }

    #[test]
    fn vanishing_constant_terms() {
        let (b, sg) = setup();
        let f = vec![e(&b, 1, 1.0)];
        assert_eq!(certify_infimum(&f, &sg, &CoronaConfig::default()), Err(Error::InfimumZero));
        let relaxed = CoronaConfig { require_positive: false, ..CoronaConfig::default() };
        assert_eq!(certify_infimum(&f, &sg, &relaxed).unwrap().lower_bound, 0.0);
    }

    #[test]
    fn constant_family_is_exact() {
        let (b, sg) = setup();
        let f = vec![e(&b, 0, 3.0), e(&b, 0, -1.0)];
        assert_eq!(certify_infimum(&f, &sg, &CoronaConfig::default()).unwrap().lower_bound, 4.0);
    }

    #[test]
    fn spectrum_outside_sigma_rejected() {
        let b = Arc::new(FrequencyBasis::rational());
        let sg = Semigroup::from_ints(&b, &[2, 3]).unwrap();
        let f = vec![&e(&b, 1, 1.0) - &e(&b, 0, 2.0)];
        assert_eq!(certify_infimum(&f, &sg, &CoronaConfig::default()).unwrap_err().code(), "spectrum-violation");
    }

    #[test]
    fn irrational_spectrum_is_heuristic() {
        let b = Arc::new(FrequencyBasis::sqrt2());
        let s = b.combination(&[("s", Rational::from_integer(1))]).unwrap();
        let sg = Semigroup::new(&b, vec![b.from_int(1), s.clone()]).unwrap();
        let f = vec![
            &APPolynomial::constant(&b, Complex64::new(3.0, 0.0))
                + &APPolynomial::monomial(&b, s, Complex64::new(1.0, 0.0)).unwrap(),
        ];
        let cert = certify_infimum(&f, &sg, &CoronaConfig::default()).unwrap();
        assert_eq!(cert.mode, CertificateMode::Heuristic);
        assert!(cert.lower_bound > 1.8 && cert.lower_bound <= 2.0);
    }

    #[test]
    fn rational_period_uses_gcd() {
        let b = Arc::new(FrequencyBasis::rational());
        let p = &APPolynomial::monomial(&b, b.from_rational(Rational::new(2, 3)), Complex64::new(1.0, 0.0)).unwrap()
            + &APPolynomial::monomial(&b, b.from_int(1), Complex64::new(1.0, 0.0)).unwrap();
        // gcd(2/3, 1) = 1/3
        assert!((common_period(&[p]).unwrap().unwrap() - 6.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn grid_cap_enlarges_step() {
        let (b, sg) = setup();
        let f = vec![&e(&b, 1, 1.0) - &e(&b, 0, 2.0)];
        let config = CoronaConfig { max_grid_points: 100, ..CoronaConfig::default() };
        let cert = certify_infimum(&f, &sg, &config).unwrap();
        assert!(cert.grid_points <= 100);
        assert!(cert.lower_bound <= 1.0);
    }
}
