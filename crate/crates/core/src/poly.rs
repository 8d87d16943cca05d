//! Almost periodic polynomials `p = Σ c_λ e_λ` with exact nonnegative
//! frequencies and complex floating-point coefficients.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::{Frequency, FrequencyBasis};
use crate::error::{Error, Result};

/// A point of the closed upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UpperHalfPoint {
    re: f64,
    im: f64,
}

impl UpperHalfPoint {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::OutOfRange { name: "z", value: if re.is_finite() { im } else { re } });
        }
        if im < 0.0 {
            return Err(Error::LowerHalfPlane(im));
        }
        Ok(UpperHalfPoint { re, im })
    }

    pub fn real(x: f64) -> Self {
        UpperHalfPoint { re: x, im: 0.0 }
    }

    pub fn re(&self) -> f64 {
        self.re
    }

    pub fn im(&self) -> f64 {
        self.im
    }

    /// `self + i*dy` for `dy >= 0`.
    pub fn shifted_up(&self, dy: f64) -> Self {
        assert!(dy >= 0.0, "upward shift must be nonnegative");
        UpperHalfPoint { re: self.re, im: self.im + dy }
    }
}

/// Uniform sampling window `[-half_width, half_width]` on the real line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleGrid {
    pub half_width: f64,
    pub step: f64,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid { half_width: 200.0, step: 0.01 }
    }
}

impl SampleGrid {
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let n = (self.half_width / self.step).ceil().max(0.0) as i64;
        (-n..=n).map(move |k| k as f64 * self.step)
    }
}

/// Two-sided enclosure of `sup_R |a| = sup_{H+} |â|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupBounds {
    /// Maximum of `|a|` over the sample grid.
    pub lower: f64,
    /// Coefficient sum `Σ |c_λ|`.
    pub upper: f64,
}

#[derive(Clone, PartialEq)]
pub struct APPolynomial {
    basis: Arc<FrequencyBasis>,
    terms: BTreeMap<Frequency, Complex64>,
}

impl fmt::Debug for APPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_map();
        for (freq, c) in &self.terms {
            list.entry(&self.basis.render(freq), c);
        }
        list.finish()
    }
}

impl APPolynomial {
    pub fn zero(basis: &Arc<FrequencyBasis>) -> Self {
        APPolynomial { basis: basis.clone(), terms: BTreeMap::new() }
    }

    pub fn constant(basis: &Arc<FrequencyBasis>, c: Complex64) -> Self {
        Self::from_terms_unchecked(basis, [(basis.zero(), c)])
    }

    /// `c * e_λ`; rejects negative `λ`.
    pub fn monomial(basis: &Arc<FrequencyBasis>, freq: Frequency, c: Complex64) -> Result<Self> {
        Self::from_terms(basis, [(freq, c)])
    }

    /// Sums the given terms; rejects negative frequencies.
    pub fn from_terms(
        basis: &Arc<FrequencyBasis>,
        terms: impl IntoIterator<Item = (Frequency, Complex64)>,
    ) -> Result<Self> {
        let terms: Vec<_> = terms.into_iter().collect();
        for (f, _) in &terms {
            assert_eq!(f.dim(), basis.dim(), "frequency dimension must match basis");
            if basis.sign(f)? == Ordering::Less {
                return Err(Error::NegativeFrequency(basis.render(f)));
            }
        }
        Ok(Self::from_terms_unchecked(basis, terms))
    }

    /// Callers guarantee every frequency is nonnegative.
    pub(crate) fn from_terms_unchecked(
        basis: &Arc<FrequencyBasis>,
        terms: impl IntoIterator<Item = (Frequency, Complex64)>,
    ) -> Self {
        let mut map: BTreeMap<Frequency, Complex64> = BTreeMap::new();
        for (f, c) in terms {
            *map.entry(f).or_default() += c;
        }
        map.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        APPolynomial { basis: basis.clone(), terms: map }
    }

    pub fn basis(&self) -> &Arc<FrequencyBasis> {
        &self.basis
    }

    pub fn terms(&self) -> impl ExactSizeIterator<Item = (&Frequency, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Exact Bohr coefficient: the stored coefficient at `freq`, or 0.
    pub fn coefficient(&self, freq: &Frequency) -> Complex64 {
        self.terms.get(freq).copied().unwrap_or_default()
    }

    pub fn constant_term(&self) -> Complex64 {
        self.coefficient(&self.basis.zero())
    }

    /// The term frequencies sorted by value.
    pub fn spectrum(&self) -> Result<Vec<Frequency>> {
        let mut freqs: Vec<Frequency> = self.terms.keys().cloned().collect();
        self.basis.sort(&mut freqs)?;
        Ok(freqs)
    }

    /// `(value(λ), c_λ)` pairs for numerical evaluation loops.
    pub fn numeric_terms(&self) -> Vec<(f64, Complex64)> {
        self.terms.iter().map(|(f, c)| (self.basis.value(f), *c)).collect()
    }

    /// `Σ |c_λ|`, the coefficient-sum norm; dominates the sup norm.
    pub fn coef_sum(&self) -> f64 {
        // `+ 0.0` turns the empty sum's -0.0 into 0.0.
        self.terms.values().map(|c| c.norm()).sum::<f64>() + 0.0
    }

    /// Smallest positive frequency value, if any.
    pub fn min_positive_frequency(&self) -> Option<f64> {
        self.terms.keys().filter(|f| !f.is_zero()).map(|f| self.basis.value(f)).min_by(f64::total_cmp)
    }

    /// Largest frequency value (0 for the zero polynomial).
    pub fn max_frequency(&self) -> f64 {
        self.terms.keys().map(|f| self.basis.value(f)).fold(0.0, f64::max)
    }

    pub fn eval_real(&self, x: f64) -> Complex64 {
        eval_numeric(&self.numeric_terms(), x, 0.0)
    }

    /// Holomorphic extension `Σ c_λ e^{iλz}` on the closed upper half-plane.
    pub fn eval_upper(&self, z: UpperHalfPoint) -> Complex64 {
        eval_numeric(&self.numeric_terms(), z.re, z.im)
    }

    /// Lower bound from grid sampling on the real line, upper bound from the
    /// coefficient sum.
    pub fn sup_bounds(&self, grid: &SampleGrid) -> SupBounds {
        let terms = self.numeric_terms();
        let lower = grid.points().map(|x| eval_numeric(&terms, x, 0.0).norm()).fold(0.0, f64::max);
        let upper = self.coef_sum();
        SupBounds { lower: lower.min(upper), upper }
    }

    /// The contraction `c_λ ↦ t^λ c_λ` (with `0^0 = 1`).
    pub fn homotopy(&self, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange { name: "t", value: t });
        }
        let terms = self.terms.iter().map(|(f, c)| {
            let w = if f.is_zero() { 1.0 } else { t.powf(self.basis.value(f)) };
            (f.clone(), c * w)
        });
        Ok(Self::from_terms_unchecked(&self.basis, terms))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_terms_unchecked(&self.basis, self.terms.iter().map(|(f, c)| (f.clone(), c * s)))
    }

    pub fn map_coefficients(&self, mut op: impl FnMut(&Frequency, Complex64) -> Complex64) -> Self {
        Self::from_terms_unchecked(&self.basis, self.terms.iter().map(|(f, c)| (f.clone(), op(f, *c))))
    }

    /// `self - c_0`.
    pub fn without_constant(&self) -> Self {
        let mut out = self.clone();
        out.terms.remove(&self.basis.zero());
        out
    }

    /// `self^n` by repeated squaring.
    pub fn pow(&self, mut n: u32) -> Self {
        let mut acc = Self::constant(&self.basis, Complex64::new(1.0, 0.0));
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Drops the smallest-magnitude terms while their total mass stays within
    /// `budget`. Returns the dropped mass.
    pub fn prune(&mut self, budget: f64) -> f64 {
        if budget <= 0.0 || self.terms.is_empty() {
            return 0.0;
        }
        let mut mags: Vec<(f64, Frequency)> = self.terms.iter().map(|(f, c)| (c.norm(), f.clone())).collect();
        mags.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let mut dropped = 0.0;
        for (m, f) in mags {
            if dropped + m > budget {
                break;
            }
            dropped += m;
            self.terms.remove(&f);
        }
        dropped
    }

    pub fn pruned(mut self, budget: f64) -> Self {
        self.prune(budget);
        self
    }

    /// Sup over coefficients of `|a_λ - b_λ|`.
    pub fn max_coef_distance(&self, other: &Self) -> f64 {
        (self - other).terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn assert_same_basis(&self, other: &Self) {
        assert!(self.basis.check_same(&other.basis).is_ok(), "polynomials over different frequency bases");
    }
}

pub(crate) fn eval_numeric(terms: &[(f64, Complex64)], x: f64, y: f64) -> Complex64 {
    terms.iter().map(|(lambda, c)| c * Complex64::from_polar((-lambda * y).exp(), lambda * x)).sum()
}

impl Add for &APPolynomial {
    type Output = APPolynomial;
    fn add(self, rhs: &APPolynomial) -> APPolynomial {
        self.assert_same_basis(rhs);
        let mut out = self.clone();
        for (f, c) in &rhs.terms {
            *out.terms.entry(f.clone()).or_default() += c;
        }
        out.terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        out
    }
}

impl Sub for &APPolynomial {
    type Output = APPolynomial;
    fn sub(self, rhs: &APPolynomial) -> APPolynomial {
        self.assert_same_basis(rhs);
        let mut out = self.clone();
        for (f, c) in &rhs.terms {
            *out.terms.entry(f.clone()).or_default() -= c;
        }
        out.terms.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        out
    }
}

impl Mul for &APPolynomial {
    type Output = APPolynomial;
    fn mul(self, rhs: &APPolynomial) -> APPolynomial {
        self.assert_same_basis(rhs);
        let mut acc: HashMap<Frequency, Complex64> = HashMap::with_capacity(self.terms.len() * rhs.terms.len());
        for (fa, ca) in &self.terms {
            for (fb, cb) in &rhs.terms {
                *acc.entry(fa + fb).or_default() += ca * cb;
            }
        }
        APPolynomial::from_terms_unchecked(&self.basis, acc)
    }
}

impl Neg for &APPolynomial {
    type Output = APPolynomial;
    fn neg(self) -> APPolynomial {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<Complex64> for &APPolynomial {
    type Output = APPolynomial;
    fn mul(self, rhs: Complex64) -> APPolynomial {
        self.scale(rhs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for APPolynomial {
            type Output = APPolynomial;
            fn $m(self, rhs: APPolynomial) -> APPolynomial {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&APPolynomial> for APPolynomial {
            type Output = APPolynomial;
            fn $m(self, rhs: &APPolynomial) -> APPolynomial {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Rational;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn setup() -> (Arc<FrequencyBasis>, Frequency, Frequency) {
        let b = Arc::new(FrequencyBasis::sqrt2());
        let one = b.from_int(1);
        let s = b.combination(&[("s", Rational::from_integer(1))]).unwrap();
        (b, one, s)
    }

    fn e(b: &Arc<FrequencyBasis>, f: &Frequency) -> APPolynomial {
        APPolynomial::monomial(b, f.clone(), c(1.0)).unwrap()
    }

    #[test]
    fn exponent_law() {
        let (b, one, s) = setup();
        let prod = &e(&b, &one) * &e(&b, &s);
        assert_eq!(prod, e(&b, &(&one + &s)));
    }

    #[test]
    fn addition_merges_terms() {
        let (b, one, _) = setup();
        let a = &e(&b, &one) - &APPolynomial::constant(&b, c(2.0));
        let sum = &a + &e(&b, &one);
        assert_eq!(sum.coefficient(&one), c(2.0));
        assert_eq!(sum.constant_term(), c(-2.0));
        assert_eq!(sum.len(), 2);
    }

    #[test]
    fn square_of_incommensurable_binomial() {
        let (b, one, s) = setup();
        let p = &e(&b, &one) + &e(&b, &s);
        let sq = &p * &p;
        assert_eq!(sq.len(), 3);
        assert_eq!(sq.coefficient(&one.scale(2)), c(1.0));
        assert_eq!(sq.coefficient(&(&one + &s)), c(2.0));
        assert_eq!(sq.coefficient(&s.scale(2)), c(1.0));
        assert_eq!(p.pow(2), sq);
    }

    #[test]
    fn spectrum_examples() {
        let (b, one, s) = setup();
        let p = APPolynomial::constant(&b, c(3.0));
        assert_eq!(p.spectrum().unwrap(), vec![b.zero()]);
        let q = &e(&b, &s).scale(Complex64::i()) + &e(&b, &one);
        assert_eq!(q.spectrum().unwrap(), vec![one.clone(), s]);
        let z = &e(&b, &one) - &e(&b, &one);
        assert!(z.spectrum().unwrap().is_empty());
        assert!(z.is_empty());
    }

    #[test]
    fn exact_coefficients_of_product() {
        let b = Arc::new(FrequencyBasis::rational());
        let e1 = APPolynomial::monomial(&b, b.from_int(1), c(1.0)).unwrap();
        let e2 = APPolynomial::monomial(&b, b.from_int(2), c(1.0)).unwrap();
        let p = &(&e1 + &e2) * &(&e1 - &e2);
        assert_eq!(p.coefficient(&b.from_int(2)), c(1.0));
        assert_eq!(p.coefficient(&b.from_int(4)), c(-1.0));
        assert_eq!(p.coefficient(&b.from_int(3)), c(0.0));
        assert_eq!(APPolynomial::monomial(&b, b.from_int(1), c(3.0)).unwrap().coefficient(&b.from_int(1)), c(3.0));
    }

    #[test]
    fn negative_frequency_rejected() {
        let b = Arc::new(FrequencyBasis::rational());
        let err = APPolynomial::monomial(&b, b.from_int(-1), c(1.0)).unwrap_err();
        assert_eq!(err.code(), "negative-frequency");
    }

    #[test]
    fn eval_upper_examples() {
        let b = Arc::new(FrequencyBasis::rational());
        let e1 = APPolynomial::monomial(&b, b.from_int(1), c(1.0)).unwrap();
        let i = UpperHalfPoint::new(0.0, 1.0).unwrap();
        assert!((e1.eval_upper(i) - c((-1f64).exp())).norm() < 1e-15);
        let one = APPolynomial::constant(&b, c(1.0));
        assert_eq!(one.eval_upper(UpperHalfPoint::new(3.0, 7.0).unwrap()), c(1.0));
        let f = &e1 - &APPolynomial::constant(&b, c(2.0));
        assert_eq!(f.eval_upper(UpperHalfPoint::real(0.0)), c(-1.0));
        assert_eq!(UpperHalfPoint::new(0.0, -1.0), Err(Error::LowerHalfPlane(-1.0)));
    }

    #[test]
    fn sup_bounds_examples() {
        let (b, one, s) = setup();
        let grid = SampleGrid::default();
        let sb = e(&b, &one).sup_bounds(&grid);
        assert_eq!(sb.upper, 1.0);
        assert!(sb.lower >= 1.0 - 1e-12);
        let two = e(&b, &one.scale(2));
        let sb = (&e(&b, &one) + &two).sup_bounds(&grid);
        assert_eq!(sb.upper, 2.0);
        assert!(sb.lower > 2.0 - 1e-9);
        let sb = (&e(&b, &one) + &e(&b, &s)).sup_bounds(&grid);
        assert_eq!(sb.upper, 2.0);
        assert!(sb.lower > 2.0 - 1e-2);
    }

    #[test]
    fn sup_lower_bound_climbs_with_wider_grids() {
        // Shift away from x = 0 so the window has to find near-coincidences.
        let (b, one, s) = setup();
        let p = &e(&b, &one) - &e(&b, &s);
        let narrow = p.sup_bounds(&SampleGrid { half_width: 1.0, step: 0.01 }).lower;
        let wide = p.sup_bounds(&SampleGrid { half_width: 500.0, step: 0.01 }).lower;
        assert!(wide >= narrow);
        assert!(wide > 2.0 - 1e-2, "wide grid lower bound {wide}");
    }

    #[test]
    fn homotopy_examples() {
        let b = Arc::new(FrequencyBasis::rational());
        let e1 = APPolynomial::monomial(&b, b.from_int(1), c(1.0)).unwrap();
        let a = &e1 + &APPolynomial::constant(&b, c(5.0));
        assert_eq!(a.homotopy(1.0).unwrap(), a);
        assert_eq!(a.homotopy(0.0).unwrap(), APPolynomial::constant(&b, c(5.0)));
        let t = (-1f64).exp();
        let r = e1.homotopy(t).unwrap();
        for (x, y) in [(0.0, 0.0), (1.3, 0.2), (-4.0, 2.5)] {
            let z = UpperHalfPoint::new(x, y).unwrap();
            assert!((r.eval_upper(z) - e1.eval_upper(z.shifted_up(1.0))).norm() < 1e-15);
        }
        assert!(a.homotopy(1.5).is_err());
        assert!(a.homotopy(-0.1).is_err());
    }

    #[test]
    fn prune_respects_budget() {
        let b = Arc::new(FrequencyBasis::rational());
        let mut p = APPolynomial::from_terms(&b, (0..5).map(|k| (b.from_int(k), c(10f64.powi(-(k as i32)))))).unwrap();
        let dropped = p.prune(2e-3);
        assert!(dropped <= 2e-3);
        assert_eq!(p.len(), 3);
    }
}
