//! Numerical Bohr means `(1/2N) ∫_{-N}^{N} f(x) e^{-iλx} dx`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Where the integrand comes from.
pub enum SampleSource<'a> {
    /// Evaluated on a trapezoid grid over `[-half_width, half_width]`.
    Function { f: &'a dyn Fn(f64) -> Complex64, half_width: f64, step: f64 },
    /// Values at `start + k * step`, `k = 0..values.len()`.
    Uniform { start: f64, step: f64, values: &'a [Complex64] },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BohrEstimate {
    pub value: Complex64,
    /// Quadrature estimate plus the `O(1/N)` truncation heuristic.
    pub error: f64,
    pub quadrature_error: f64,
    pub truncation_error: f64,
}

/// Trapezoid approximation of the Bohr mean at frequency `lambda`.
///
/// The quadrature error is estimated by Richardson comparison against the
/// half-resolution rule; the truncation term is `max|f| / N`, the size of the
/// mean of a unit-gap cross term over a window of half-width `N`.
pub fn bohr_mean_numeric(source: SampleSource<'_>, lambda: f64) -> Result<BohrEstimate> {
    if !lambda.is_finite() {
        return Err(Error::OutOfRange { name: "lambda", value: lambda });
    }
    let (start, step, samples) = match source {
        SampleSource::Function { f, half_width, step } => {
            if !(half_width > 0.0 && half_width.is_finite()) {
                return Err(Error::OutOfRange { name: "N", value: half_width });
            }
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::OutOfRange { name: "quadrature_step", value: step });
            }
            let mut n = (2.0 * half_width / step).ceil() as usize;
            n += n % 2;
            let h = 2.0 * half_width / n as f64;
            let values: Vec<Complex64> = (0..=n).map(|k| f(-half_width + k as f64 * h)).collect();
            (-half_width, h, values)
        }
        SampleSource::Uniform { start, step, values } => {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::OutOfRange { name: "quadrature_step", value: step });
            }
            if values.len() < 3 {
                return Err(Error::OutOfRange { name: "samples", value: values.len() as f64 });
            }
            (start, step, values.to_vec())
        }
    };

    let mut sup = 0.0f64;
    for (k, v) in samples.iter().enumerate() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::NonFiniteSample(start + k as f64 * step));
        }
        sup = sup.max(v.norm());
    }

    let n = samples.len() - 1;
    let length = n as f64 * step;
    let weighted = |k: usize| samples[k] * Complex64::from_polar(1.0, -lambda * (start + k as f64 * step));

    let mut fine = Complex64::default();
    for k in 0..=n {
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        fine += weighted(k) * w;
    }
    fine *= step / length;

    // Coarse rule on every other node; with an odd interval count the last
    // interval is dropped, which the error estimate absorbs.
    let m = n / 2;
    let mut coarse = Complex64::default();
    for j in 0..=m {
        let w = if j == 0 || j == m { 0.5 } else { 1.0 };
        coarse += weighted(2 * j) * w;
    }
    coarse *= 2.0 * step / (2.0 * m as f64 * step);

    let quadrature_error = (fine - coarse).norm() / 3.0;
    let truncation_error = sup / (length / 2.0);
    Ok(BohrEstimate { value: fine, error: quadrature_error + truncation_error, quadrature_error, truncation_error })
}
