//! Exact frequencies over a declared real basis.
//!
//! A [`Frequency`] is a vector of rationals, one per basis label, standing for
//! the real number `Σ coords[i] * value(label[i])`. The labels are assumed to
//! be linearly independent over the rationals, so two frequencies are equal
//! exactly when their coordinate vectors are. Ordering by value goes through
//! interval enclosures whose width shrinks as the working precision grows.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact frequency coordinate.
pub type Rational = Ratio<i64>;

/// Label of the rational unit, always first in a basis.
pub const UNIT_LABEL: &str = "one";

/// Precision at which enclosures are first evaluated.
pub const DEFAULT_WORKING_BITS: u32 = 64;

/// Default cap on enclosure precision.
pub const DEFAULT_PRECISION_CEILING: u32 = 1024;

/// A basis value: exact, an algebraic square root refinable to any precision,
/// or a fixed enclosure supplied by the user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RealValue {
    Rational(BigRational),
    Sqrt(BigRational),
    Interval { mid: BigRational, rad: BigRational },
}

impl RealValue {
    pub fn rational(num: i64, den: i64) -> Self {
        RealValue::Rational(BigRational::new(num.into(), den.into()))
    }

    pub fn sqrt(num: i64, den: i64) -> Self {
        RealValue::Sqrt(BigRational::new(num.into(), den.into()))
    }

    /// Enclosure `mid ± rad` given in floating point. Both must be finite.
    pub fn interval(mid: f64, rad: f64) -> Option<Self> {
        let mid = BigRational::from_float(mid)?;
        let rad = BigRational::from_float(rad.abs())?;
        if rad.is_zero() {
            Some(RealValue::Rational(mid))
        } else {
            Some(RealValue::Interval { mid, rad })
        }
    }

    pub fn is_exact_rational(&self) -> bool {
        match self {
            RealValue::Rational(_) => true,
            RealValue::Sqrt(q) => perfect_square(q).is_some(),
            RealValue::Interval { .. } => false,
        }
    }

    /// Closed rational interval containing the value, of width at most
    /// `2^-bits` (fixed intervals cannot be refined).
    pub fn enclose(&self, bits: u32) -> (BigRational, BigRational) {
        match self {
            RealValue::Rational(q) => (q.clone(), q.clone()),
            RealValue::Interval { mid, rad } => (mid - rad, mid + rad),
            RealValue::Sqrt(q) => {
                if let Some(r) = perfect_square(q) {
                    return (r.clone(), r);
                }
                // sqrt(a/b) = sqrt(a*b)/b
                let ab = q.numer() * q.denom();
                let scale = BigInt::one() << (bits as usize);
                let n = &ab * &scale * &scale;
                let s = n.sqrt();
                let den = q.denom() * &scale;
                (BigRational::new(s.clone(), den.clone()), BigRational::new(s + 1, den))
            }
        }
    }

    fn approx(&self) -> (f64, f64) {
        match self {
            RealValue::Rational(q) => (q.to_f64().unwrap_or(f64::NAN), 0.0),
            RealValue::Sqrt(q) => (q.to_f64().unwrap_or(f64::NAN).sqrt(), 0.0),
            RealValue::Interval { mid, rad } => {
                (mid.to_f64().unwrap_or(f64::NAN), rad.to_f64().unwrap_or(f64::NAN) * (1.0 + 1e-15))
            }
        }
    }
}

fn perfect_square(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let n = q.numer().sqrt();
    let d = q.denom().sqrt();
    (&n * &n == *q.numer() && &d * &d == *q.denom()).then(|| BigRational::new(n, d))
}

/// Ordered set of labelled reals, the first of which is exactly 1.
#[derive(Clone, Debug)]
pub struct FrequencyBasis {
    labels: Vec<String>,
    values: Vec<RealValue>,
    approx: Vec<f64>,
    approx_rad: Vec<f64>,
    precision_ceiling: u32,
}

impl PartialEq for FrequencyBasis {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.values == other.values && self.precision_ceiling == other.precision_ceiling
    }
}

impl FrequencyBasis {
    /// Validates entries and prepends `("one", 1)` unless it already leads.
    pub fn new(entries: Vec<(String, RealValue)>) -> Result<Self> {
        Self::with_ceiling(entries, DEFAULT_PRECISION_CEILING)
    }

    pub fn with_ceiling(entries: Vec<(String, RealValue)>, precision_ceiling: u32) -> Result<Self> {
        if precision_ceiling == 0 {
            return Err(Error::InvalidBasis("precision ceiling must be positive".into()));
        }
        let mut all = Vec::with_capacity(entries.len() + 1);
        if entries.first().map(|(l, _)| l.as_str()) != Some(UNIT_LABEL) {
            all.push((UNIT_LABEL.to_string(), RealValue::rational(1, 1)));
        }
        all.extend(entries);

        let mut labels: Vec<String> = Vec::with_capacity(all.len());
        let mut values = Vec::with_capacity(all.len());
        for (i, (label, value)) in all.into_iter().enumerate() {
            if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::InvalidBasis(format!("bad label `{label}`")));
            }
            if label == "e" || label == "i" || label.starts_with(|c: char| c.is_ascii_digit()) {
                return Err(Error::InvalidBasis(format!("reserved label `{label}`")));
            }
            if labels.contains(&label) {
                return Err(Error::DuplicateLabel(label));
            }
            if i == 0 && value != RealValue::rational(1, 1) {
                return Err(Error::InvalidBasis("the unit label must have value 1".into()));
            }
            match &value {
                RealValue::Sqrt(q) if q.is_negative() => return Err(Error::NonFiniteValue(label)),
                RealValue::Interval { rad, .. } if rad.is_negative() => return Err(Error::NonFiniteValue(label)),
                _ => {}
            }
            let (a, r) = value.approx();
            if !a.is_finite() || !r.is_finite() {
                return Err(Error::NonFiniteValue(label));
            }
            labels.push(label);
            values.push(value);
        }
        let (approx, approx_rad) = values.iter().map(RealValue::approx).unzip();
        Ok(FrequencyBasis { labels, values, approx, approx_rad, precision_ceiling })
    }

    /// The basis `{1}`.
    pub fn rational() -> Self {
        Self::new(Vec::new()).expect("unit basis is valid")
    }

    /// The basis `{1, sqrt(2)}` with label `s`.
    pub fn sqrt2() -> Self {
        Self::new(vec![("s".into(), RealValue::sqrt(2, 1))]).expect("valid basis")
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[RealValue] {
        &self.values
    }

    pub fn precision_ceiling(&self) -> u32 {
        self.precision_ceiling
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn zero(&self) -> Frequency {
        Frequency(vec![Rational::zero(); self.dim()])
    }

    pub fn from_rational(&self, q: Rational) -> Frequency {
        let mut f = self.zero();
        f.0[0] = q;
        f
    }

    pub fn from_int(&self, n: i64) -> Frequency {
        self.from_rational(Rational::from_integer(n))
    }

    /// Frequency with the given coordinates; panics if the length is wrong.
    pub fn from_coords(&self, coords: Vec<Rational>) -> Frequency {
        assert_eq!(coords.len(), self.dim(), "coordinate vector length must match basis");
        Frequency(coords)
    }

    /// `Σ q_i * label_i`.
    pub fn combination(&self, terms: &[(&str, Rational)]) -> Result<Frequency> {
        let mut f = self.zero();
        for (label, q) in terms {
            let i = self.index_of(label).ok_or_else(|| Error::InvalidBasis(format!("unknown label `{label}`")))?;
            f.0[i] += *q;
        }
        Ok(f)
    }

    /// Floating-point value; accurate to a few ulps for exact basis entries.
    pub fn value(&self, f: &Frequency) -> f64 {
        f.0.iter().zip(&self.approx).map(|(c, v)| rat_f64(c) * v).sum()
    }

    /// Rational enclosure of the value at the given precision.
    pub fn enclose(&self, f: &Frequency, bits: u32) -> (BigRational, BigRational) {
        let mut lo = BigRational::zero();
        let mut hi = BigRational::zero();
        for (c, v) in f.0.iter().zip(&self.values) {
            if c.is_zero() {
                continue;
            }
            let c = BigRational::new((*c.numer()).into(), (*c.denom()).into());
            let (vl, vh) = v.enclose(bits);
            if c.is_positive() {
                lo += &c * vl;
                hi += &c * vh;
            } else {
                lo += &c * vh;
                hi += &c * vl;
            }
        }
        (lo, hi)
    }

    /// Sign of the value, decided by precision escalation.
    pub fn sign(&self, f: &Frequency) -> Result<Ordering> {
        if f.is_zero() {
            return Ok(Ordering::Equal);
        }
        if self.precision_ceiling >= DEFAULT_WORKING_BITS {
            let mut v = 0.0;
            let mut scale = 0.0;
            let mut rad = 0.0;
            for ((c, a), r) in f.0.iter().zip(&self.approx).zip(&self.approx_rad) {
                let c = rat_f64(c);
                v += c * a;
                scale += (c * a).abs();
                rad += c.abs() * r;
            }
            if v.abs() > 1e-9 * scale + 2.0 * rad {
                return Ok(if v > 0.0 { Ordering::Greater } else { Ordering::Less });
            }
        }
        let mut bits = DEFAULT_WORKING_BITS.min(self.precision_ceiling);
        loop {
            let (lo, hi) = self.enclose(f, bits);
            if lo.is_positive() {
                return Ok(Ordering::Greater);
            }
            if hi.is_negative() {
                return Ok(Ordering::Less);
            }
            if bits >= self.precision_ceiling {
                return Err(Error::Unresolvable { bits });
            }
            bits = bits.saturating_mul(2).min(self.precision_ceiling);
        }
    }

    /// Orders two frequencies by value; `Equal` only for identical coordinates.
    pub fn compare(&self, a: &Frequency, b: &Frequency) -> Result<Ordering> {
        if a == b {
            return Ok(Ordering::Equal);
        }
        self.sign(&(a - b))
    }

    /// Sorts ascending by value.
    pub fn sort(&self, freqs: &mut [Frequency]) -> Result<()> {
        let mut failure = None;
        freqs.sort_by(|a, b| match self.compare(a, b) {
            Ok(o) => o,
            Err(e) => {
                failure.get_or_insert(e);
                a.cmp(b)
            }
        });
        failure.map_or(Ok(()), Err)
    }

    /// Renders as a rational combination of labels, e.g. `3/2 + 2*s`.
    pub fn render(&self, f: &Frequency) -> String {
        let mut out = String::new();
        for (i, c) in f.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let negative = c.is_negative();
            let mag = c.abs();
            let body = if i == 0 {
                mag.to_string()
            } else if mag.is_one() {
                self.labels[i].clone()
            } else {
                format!("{}*{}", mag, self.labels[i])
            };
            match (out.is_empty(), negative) {
                (true, false) => out.push_str(&body),
                (true, true) => {
                    out.push('-');
                    out.push_str(&body);
                }
                (false, false) => {
                    out.push_str(" + ");
                    out.push_str(&body);
                }
                (false, true) => {
                    out.push_str(" - ");
                    out.push_str(&body);
                }
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }

    pub fn check_same(&self, other: &FrequencyBasis) -> Result<()> {
        if std::ptr::eq(self, other) || self == other {
            Ok(())
        } else {
            Err(Error::BasisMismatch)
        }
    }
}

pub(crate) fn rat_f64(q: &Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Exact rational coordinates over a [`FrequencyBasis`].
///
/// The derived `Ord` is lexicographic on coordinates; it is a storage order,
/// not the order of values. Use [`FrequencyBasis::compare`] for the latter.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Frequency(Vec<Rational>);

impl Frequency {
    pub fn coords(&self) -> &[Rational] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    /// True when only the unit coordinate is nonzero.
    pub fn is_rational(&self) -> bool {
        self.0[1..].iter().all(Zero::is_zero)
    }

    pub fn rational_part(&self) -> Rational {
        self.0[0]
    }

    /// `n * self`. Panics on `i64` overflow of a coordinate.
    pub fn scale(&self, n: i64) -> Frequency {
        let n = Rational::from_integer(n);
        Frequency(self.0.iter().map(|c| c.checked_mul(&n).expect("frequency coordinate overflow")).collect())
    }

    /// If `self = k * unit` for an integer `k`, returns `k`.
    pub fn integer_multiple_of(&self, unit: &Frequency) -> Option<i64> {
        let pivot = unit.0.iter().position(|c| !c.is_zero())?;
        let k = self.0[pivot] / unit.0[pivot];
        if !k.is_integer() {
            return None;
        }
        let k = k.to_integer();
        (unit.scale(k) == *self).then_some(k)
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Add for &Frequency {
    type Output = Frequency;
    fn add(self, rhs: &Frequency) -> Frequency {
        assert_eq!(self.0.len(), rhs.0.len(), "frequency dimension mismatch");
        Frequency(
            self.0.iter().zip(&rhs.0).map(|(a, b)| a.checked_add(b).expect("frequency coordinate overflow")).collect(),
        )
    }
}

impl Sub for &Frequency {
    type Output = Frequency;
    fn sub(self, rhs: &Frequency) -> Frequency {
        assert_eq!(self.0.len(), rhs.0.len(), "frequency dimension mismatch");
        Frequency(
            self.0.iter().zip(&rhs.0).map(|(a, b)| a.checked_sub(b).expect("frequency coordinate overflow")).collect(),
        )
    }
}

impl Neg for &Frequency {
    type Output = Frequency;
    fn neg(self) -> Frequency {
        Frequency(self.0.iter().map(|c| -c).collect())
    }
}

impl Add for Frequency {
    type Output = Frequency;
    fn add(self, rhs: Frequency) -> Frequency {
        &self + &rhs
    }
}

impl Sub for Frequency {
    type Output = Frequency;
    fn sub(self, rhs: Frequency) -> Frequency {
        &self - &rhs
    }
}
