//! Constructive Bezout identities `Σ f_j g_j = 1` and inverses.
//!
//! Coefficients of the `g_j` are supported on the smallest elements of `Σ`
//! and fitted by complex least squares, with frequencies as orthonormal
//! labels. A fit whose residual `h - 1` has coefficient sum below 1 is then
//! corrected by a Neumann series. Residuals are always reported as the
//! coefficient sum of `Σ f_j g_j - 1`, which dominates its sup on `H+`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::basis::Frequency;
use crate::error::{Error, Result};
use crate::poly::APPolynomial;
use crate::semigroup::Semigroup;

/// Degree bound used by [`invert`] when the Neumann radius is exceeded.
pub const DEFAULT_DEGREE_BOUND: usize = 32;
/// Cap on the length of a single Neumann series.
pub const MAX_NEUMANN_TERMS: usize = 4000;
const MAX_CORRECTION_ROUNDS: usize = 8;
const SNAP_SCALE: f64 = (1u64 << 30) as f64;

#[derive(Clone, Debug)]
pub struct BezoutSolution {
    pub g: Vec<APPolynomial>,
    /// Coefficient sum of `Σ f_j g_j - 1`.
    pub residual_upper: f64,
    pub residual: APPolynomial,
    /// Support allowed for the least-squares fit.
    pub truncation: Vec<Frequency>,
    /// Best least-squares residual over the prefixes of the truncation set.
    pub pre_correction_residual: f64,
    pub neumann_terms: usize,
}

/// `Σ_{m < terms} d^m`, each power pruned with `budget`.
pub fn neumann_sum(d: &APPolynomial, terms: usize, budget: f64) -> APPolynomial {
    let one = APPolynomial::constant(d.basis(), Complex64::new(1.0, 0.0));
    let mut acc = one.clone();
    let mut power = one;
    for _ in 1..terms {
        power = (&power * d).pruned(budget);
        if power.is_empty() {
            break;
        }
        acc = &acc + &power;
    }
    acc
}

/// Smallest `k ≥ 1` with `rho^k ≤ target`.
pub fn neumann_terms_for(rho: f64, target: f64) -> usize {
    if rho <= 0.0 || target >= 1.0 {
        return 1;
    }
    let k = (target.ln() / rho.ln()).ceil().max(1.0);
    (k as usize).min(MAX_NEUMANN_TERMS)
}

fn residual_of(f: &[APPolynomial], g: &[APPolynomial]) -> APPolynomial {
    let basis = f[0].basis();
    let mut h = APPolynomial::constant(basis, Complex64::new(-1.0, 0.0));
    for (fj, gj) in f.iter().zip(g) {
        h = &h + &(fj * gj);
    }
    h
}

fn snap(c: Complex64) -> Complex64 {
    Complex64::new((c.re * SNAP_SCALE).round() / SNAP_SCALE, (c.im * SNAP_SCALE).round() / SNAP_SCALE)
}

/// Least-squares `g` supported on `support`, minimizing the coefficient
/// residual of `Σ f_j g_j - 1`.
fn least_squares(f: &[APPolynomial], support: &[Frequency]) -> Vec<APPolynomial> {
    let basis = f[0].basis();
    let mut rows: HashMap<Frequency, usize> = HashMap::new();
    let zero = basis.zero();
    rows.insert(zero.clone(), 0);
    let mut entries: Vec<(usize, usize, Complex64)> = Vec::new();
    let k = support.len();
    for (j, fj) in f.iter().enumerate() {
        for (si, s) in support.iter().enumerate() {
            for (lambda, c) in fj.terms() {
                let freq = lambda + s;
                let next = rows.len();
                let r = *rows.entry(freq).or_insert(next);
                entries.push((r, j * k + si, *c));
            }
        }
    }
    let mut a = DMatrix::<Complex64>::zeros(rows.len(), f.len() * k);
    for (r, c, v) in entries {
        a[(r, c)] += v;
    }
    let mut b = DVector::<Complex64>::zeros(rows.len());
    b[0] = Complex64::new(1.0, 0.0);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let x = svd.solve(&b, 1e-12 * smax.max(f64::MIN_POSITIVE)).expect("svd with vectors");
    (0..f.len())
        .map(|j| {
            let terms =
                (0..k).map(|si| (support[si].clone(), x[j * k + si])).filter(|(_, c)| *c != Complex64::default());
            APPolynomial::from_terms(basis, terms).expect("support lies in Σ")
        })
        .collect()
}

/// Snaps coefficients to a dyadic grid when that does not worsen the
/// residual; exact solutions then come out exact.
fn tidy(f: &[APPolynomial], g: Vec<APPolynomial>, residual: APPolynomial) -> (Vec<APPolynomial>, APPolynomial) {
    let snapped: Vec<APPolynomial> = g.iter().map(|p| p.map_coefficients(|_, c| snap(c))).collect();
    let r = residual_of(f, &snapped);
    if r.coef_sum() <= residual.coef_sum() {
        (snapped, r)
    } else {
        (g, residual)
    }
}

pub fn solve_bezout(f: &[APPolynomial], sigma: &Semigroup, degree_bound: usize, tol: f64) -> Result<BezoutSolution> {
    if f.is_empty() {
        return Err(Error::ShapeMismatch("empty family".into()));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::OutOfRange { name: "tol", value: tol });
    }
    if degree_bound == 0 {
        return Err(Error::OutOfRange { name: "degree_bound", value: 0.0 });
    }
    for p in f {
        sigma.require_spectrum(p)?;
    }
    let support = sigma.smallest_elements(degree_bound)?;

    // Prefix sweep: the best residual can only improve as the bound grows.
    let mut best: Option<(Vec<APPolynomial>, APPolynomial, usize)> = None;
    for k in 1..=support.len() {
        let g = least_squares(f, &support[..k]);
        let r = residual_of(f, &g);
        let (g, r) = tidy(f, g, r);
        let better = best.as_ref().is_none_or(|(_, br, _)| r.coef_sum() < br.coef_sum());
        if better {
            best = Some((g, r, k));
        }
        if best.as_ref().unwrap().1.coef_sum() <= tol {
            break;
        }
    }
    let (mut g, mut residual, k) = best.unwrap();
    let pre = residual.coef_sum();
    let truncation = support[..k].to_vec();
    if pre <= tol {
        return Ok(BezoutSolution {
            g,
            residual_upper: pre,
            residual,
            truncation,
            pre_correction_residual: pre,
            neumann_terms: 0,
        });
    }
    if pre >= 1.0 {
        return Err(Error::InsufficientDegree { residual: pre });
    }

    let f_mass: f64 = f.iter().map(APPolynomial::coef_sum).sum::<f64>().max(1.0);
    let mut rho = pre;
    let mut total_terms = 0;
    for _ in 0..MAX_CORRECTION_ROUNDS {
        let d = -&residual;
        let terms = neumann_terms_for(rho, tol / 4.0);
        let g_mass: f64 = g.iter().map(APPolynomial::coef_sum).sum::<f64>().max(1.0);
        let series_budget = tol / (20.0 * terms as f64 * f_mass * g_mass);
        let series = neumann_sum(&d, terms, series_budget);
        let g_budget = tol / (10.0 * f.len() as f64 * f_mass);
        let next: Vec<APPolynomial> = g.iter().map(|gj| (gj * &series).pruned(g_budget)).collect();
        let r = residual_of(f, &next);
        total_terms += terms;
        let r_sum = r.coef_sum();
        if r_sum >= rho {
            break;
        }
        g = next;
        residual = r;
        rho = r_sum;
        if rho <= tol {
            break;
        }
    }
    for gj in &g {
        debug_assert!(sigma.require_spectrum(gj).is_ok());
    }
    if rho > tol {
        return Err(Error::ToleranceNotReached { achieved: rho, tol });
    }
    Ok(BezoutSolution {
        g,
        residual_upper: rho,
        residual,
        truncation,
        pre_correction_residual: pre,
        neumann_terms: total_terms,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InverseMethod {
    Neumann,
    Bezout,
}

#[derive(Clone, Debug)]
pub struct Inverse {
    pub u: APPolynomial,
    /// Coefficient sum of `f u - 1`.
    pub residual_upper: f64,
    pub method: InverseMethod,
    pub terms: usize,
}

/// `u = c_0^{-1} Σ_{m < terms} (1 - f/c_0)^m` and its verified residual.
pub fn neumann_inverse(f: &APPolynomial, terms: usize) -> Result<Inverse> {
    let c0 = f.constant_term();
    if c0 == Complex64::default() {
        return Err(Error::NotInvertible);
    }
    let one = APPolynomial::constant(f.basis(), Complex64::new(1.0, 0.0));
    let d = &one - &f.scale(c0.inv());
    let u = neumann_sum(&d, terms.max(1), 0.0).scale(c0.inv());
    let residual_upper = (&(f * &u) - &one).coef_sum();
    Ok(Inverse { u, residual_upper, method: InverseMethod::Neumann, terms: terms.max(1) })
}

pub fn invert(f: &APPolynomial, sigma: &Semigroup, tol: f64) -> Result<Inverse> {
    invert_with_degree(f, sigma, tol, DEFAULT_DEGREE_BOUND)
}

pub fn invert_with_degree(f: &APPolynomial, sigma: &Semigroup, tol: f64, degree_bound: usize) -> Result<Inverse> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::OutOfRange { name: "tol", value: tol });
    }
    sigma.require_spectrum(f)?;
    let c0 = f.constant_term();
    if c0 == Complex64::default() {
        return Err(Error::NotInvertible);
    }
    let rho = f.without_constant().coef_sum() / c0.norm();
    if rho < 1.0 {
        let mut terms = neumann_terms_for(rho, tol);
        loop {
            let inv = neumann_inverse(f, terms)?;
            if inv.residual_upper <= tol {
                return Ok(inv);
            }
            if terms >= MAX_NEUMANN_TERMS {
                break;
            }
            terms = (terms + terms / 4 + 2).min(MAX_NEUMANN_TERMS);
        }
    }
    let sol = solve_bezout(std::slice::from_ref(f), sigma, degree_bound, tol)?;
    Ok(Inverse {
        u: sol.g.into_iter().next().unwrap(),
        residual_upper: sol.residual_upper,
        method: InverseMethod::Bezout,
        terms: sol.neumann_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::FrequencyBasis;
    use crate::poly::UpperHalfPoint;
    use std::sync::Arc;

    fn setup() -> (Arc<FrequencyBasis>, Semigroup) {
        let b = Arc::new(FrequencyBasis::rational());
        let sg = Semigroup::from_ints(&b, &[1]).unwrap();
        (b, sg)
    }

    fn e(b: &Arc<FrequencyBasis>, k: i64, c: f64) -> APPolynomial {
        APPolynomial::monomial(b, b.from_int(k), Complex64::new(c, 0.0)).unwrap()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn pair_is_solved_exactly() {
        let (b, sg) = setup();
        let f = vec![&e(&b, 1, 1.0) - &e(&b, 0, 2.0), e(&b, 1, 1.0)];
        let sol = solve_bezout(&f, &sg, 8, 1e-12).unwrap();
        assert_eq!(sol.residual_upper, 0.0);
        assert_eq!(sol.g[0], APPolynomial::constant(&b, c(-0.5)));
        assert_eq!(sol.g[1], APPolynomial::constant(&b, c(0.5)));
    }

    #[test]
    fn constant_is_inverted() {
        let (b, sg) = setup();
        let sol = solve_bezout(&[e(&b, 0, 2.0)], &sg, 4, 1e-12).unwrap();
        assert_eq!(sol.g[0], APPolynomial::constant(&b, c(0.5)));
        let inv = invert(&e(&b, 0, 2.0), &sg, 1e-12).unwrap();
        assert_eq!(inv.u, APPolynomial::constant(&b, c(0.5)));
        assert_eq!(inv.residual_upper, 0.0);
    }

    #[test]
    fn geometric_inverse_via_bezout() {
        let (b, sg) = setup();
        let f = vec![&e(&b, 1, 1.0) - &e(&b, 0, 2.0)];
        let sol = solve_bezout(&f, &sg, 12, 1e-10).unwrap();
        assert!(sol.residual_upper <= 1e-10);
        // The coefficient-sum bound dominates pointwise errors.
        for k in 0..50 {
            let z = UpperHalfPoint::new(0.37 * k as f64 - 9.0, 0.05 * k as f64).unwrap();
            let v = f[0].eval_upper(z) * sol.g[0].eval_upper(z) - 1.0;
            assert!(v.norm() <= sol.residual_upper + 1e-15);
        }
        // Oracle: the first coefficients agree with -1/2^{k+1}.
        for k in 0..4 {
            let got = sol.g[0].coefficient(&b.from_int(k));
            assert!((got - c(-0.5f64.powi(k as i32 + 1))).norm() < 1e-6, "{k}: {got}");
        }
    }

    #[test]
    fn neumann_inverse_thirty_terms() {
        let (b, _) = setup();
        let f = &e(&b, 0, 1.0) - &e(&b, 1, 0.5);
        let inv = neumann_inverse(&f, 30).unwrap();
        assert!(inv.residual_upper <= 2f64.powi(-30) * 2.0);
        for k in 0..30 {
            assert_eq!(inv.u.coefficient(&b.from_int(k)), c(0.5f64.powi(k as i32)));
        }
        assert_eq!(inv.u.len(), 30);
    }

    #[test]
    fn invert_picks_neumann_inside_radius() {
        let (b, sg) = setup();
        let f = &e(&b, 0, 1.0) - &e(&b, 1, 0.5);
        let inv = invert(&f, &sg, 2f64.powi(-30)).unwrap();
        assert_eq!(inv.method, InverseMethod::Neumann);
        assert_eq!(inv.terms, 30);
    }

    #[test]
    fn invert_falls_back_outside_radius() {
        let (b, sg) = setup();
        let f = &e(&b, 0, 1.0) + &e(&b, 1, 1.5);
        // 1 + 1.5 w vanishes at w = -2/3 inside the disc: no inverse exists,
        // and no least-squares fit gets below the Neumann radius.
        let err = invert(&f, &sg, 1e-8).unwrap_err();
        assert_eq!(err.code(), "insufficient-degree");
        let g = &e(&b, 0, 1.0) + &e(&b, 1, 0.9);
        let inv = invert(&g, &sg, 1e-8).unwrap();
        assert!(inv.residual_upper <= 1e-8);
        let h = &e(&b, 0, 1.0) + &e(&b, 1, -0.6) + &e(&b, 2, 0.6);
        let inv = invert(&h, &sg, 1e-8).unwrap();
        assert_eq!(inv.method, InverseMethod::Bezout);
        assert!(inv.residual_upper <= 1e-8);
    }

    #[test]
    fn zero_constant_term_is_not_invertible() {
        let (b, sg) = setup();
        assert_eq!(invert(&e(&b, 1, 1.0), &sg, 1e-8).unwrap_err(), Error::NotInvertible);
    }

    #[test]
    fn spectrum_of_solution_stays_in_sigma() {
        let b = Arc::new(FrequencyBasis::rational());
        let sg = Semigroup::from_ints(&b, &[2, 3]).unwrap();
        let f = vec![&e(&b, 0, 3.0) + &e(&b, 2, 1.0) + &e(&b, 3, -1.0)];
        let sol = solve_bezout(&f, &sg, 10, 1e-9).unwrap();
        for gj in &sol.g {
            sg.require_spectrum(gj).unwrap();
        }
        assert!(sol.residual_upper <= 1e-9);
    }
}
