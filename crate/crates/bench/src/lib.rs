//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use apsigma_core::{APPolynomial, FrequencyBasis, Semigroup};
use num_complex::Complex64;

pub fn sqrt2_semigroup() -> Semigroup {
    let b = Arc::new(FrequencyBasis::sqrt2());
    let gens = vec![b.from_int(1), b.combination(&[("s", 1.into())]).unwrap()];
    Semigroup::new(&b, gens).unwrap()
}

/// `Σ_{a+b<n} c_{ab} e(a + b s)` with slowly decaying coefficients.
pub fn dense_poly(sigma: &Semigroup, n: i64, scale: f64) -> APPolynomial {
    let b = sigma.basis();
    let mut terms = Vec::new();
    for a in 0..n {
        for k in 0..n - a {
            let f = b.combination(&[("one", a.into()), ("s", k.into())]).unwrap();
            let c = if a + k == 0 { 1.0 } else { scale / ((a + k) * (a + k)) as f64 };
            terms.push((f, Complex64::new(c, 0.5 * c)));
        }
    }
    APPolynomial::from_terms(b, terms).unwrap()
}
