//! Finite coordinate model of the space of functions on `Σ`.
//!
//! Points assign complex values to finitely many tracked frequencies. The
//! half-plane embeds via `j(z)(λ) = e^{iλz}`, polynomials in the coordinate
//! functionals pull back to AP polynomials along `j`, and a point is rejected
//! from the polynomial hull as soon as some test polynomial exceeds the
//! coefficient-sum bound of its pullback. Absence of a witness proves nothing.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::basis::{Frequency, FrequencyBasis};
use crate::error::{Error, Result};
use crate::lattice::integer_kernel;
use crate::poly::{APPolynomial, SampleGrid, UpperHalfPoint};
use crate::semigroup::{Membership, MembershipCertificate, Semigroup};

/// Rejection slack relative to the coefficient mass of a test polynomial.
pub const HULL_SLACK: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct CoordinateModel {
    sigma: Semigroup,
    tracked: Vec<Frequency>,
    certificates: Vec<MembershipCertificate>,
    relations: Vec<Vec<i64>>,
}

impl CoordinateModel {
    /// Tracks the generators of `sigma` together with `extra` (deduplicated,
    /// sorted by value). Every tracked frequency must lie in `sigma`.
    pub fn new(sigma: Semigroup, extra: Vec<Frequency>) -> Result<Self> {
        let basis = sigma.basis().clone();
        let mut tracked: Vec<Frequency> = sigma.generators().to_vec();
        for f in extra {
            if !tracked.contains(&f) {
                tracked.push(f);
            }
        }
        basis.sort(&mut tracked)?;
        let certificates = tracked
            .iter()
            .map(|f| {
                let cert = sigma.membership(f)?;
                if cert.is_member() {
                    Ok(cert)
                } else {
                    Err(Error::NotInSemigroup(basis.render(f)))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let relations = Self::relations_of(&sigma, &tracked, &certificates);
        Ok(CoordinateModel { sigma, tracked, certificates, relations })
    }

    /// Integer relations among tracked coordinates: the kernel of the
    /// generator coordinate matrix plus one relation per non-generator,
    /// read off its membership certificate. Together they form a basis of
    /// all relations among the tracked frequencies.
    fn relations_of(sigma: &Semigroup, tracked: &[Frequency], certificates: &[MembershipCertificate]) -> Vec<Vec<i64>> {
        let gens = sigma.generators();
        let position = |f: &Frequency| tracked.iter().position(|t| t == f).expect("generator is tracked");
        let gen_pos: Vec<usize> = gens.iter().map(position).collect();
        let columns: Vec<Vec<_>> = gens.iter().map(|g| g.coords().to_vec()).collect();
        let mut out = Vec::new();
        for k in integer_kernel(&columns) {
            let mut rel = vec![0i64; tracked.len()];
            for (gi, c) in k.into_iter().enumerate() {
                rel[gen_pos[gi]] += c;
            }
            out.push(rel);
        }
        for (ti, cert) in certificates.iter().enumerate() {
            if gen_pos.contains(&ti) {
                continue;
            }
            let Membership::Member { combo } = &cert.membership else { unreachable!() };
            let mut rel = vec![0i64; tracked.len()];
            for (gi, &m) in combo.iter().enumerate() {
                rel[gen_pos[gi]] += m as i64;
            }
            rel[ti] -= 1;
            out.push(rel);
        }
        out
    }

    pub fn semigroup(&self) -> &Semigroup {
        &self.sigma
    }

    pub fn basis(&self) -> &Arc<FrequencyBasis> {
        self.sigma.basis()
    }

    pub fn tracked(&self) -> &[Frequency] {
        &self.tracked
    }

    pub fn certificates(&self) -> &[MembershipCertificate] {
        &self.certificates
    }

    /// Integer vectors over tracked indices with `Σ k_i λ_i = 0`.
    pub fn relation_lattice(&self) -> &[Vec<i64>] {
        &self.relations
    }

    /// `λ ↦ e^{iλz}` on the tracked coordinates.
    pub fn embed_j(&self, z: UpperHalfPoint) -> HullPoint {
        let basis = self.basis();
        let assignment = self
            .tracked
            .iter()
            .map(|f| {
                let l = basis.value(f);
                (f.clone(), Complex64::from_polar((-l * z.im()).exp(), l * z.re()))
            })
            .collect();
        HullPoint { basis: basis.clone(), assignment }
    }

    /// Point with explicitly given coordinates; every tracked frequency must
    /// be assigned.
    pub fn point(&self, values: &[Complex64]) -> HullPoint {
        assert_eq!(values.len(), self.tracked.len(), "one value per tracked coordinate");
        HullPoint {
            basis: self.basis().clone(),
            assignment: self.tracked.iter().cloned().zip(values.iter().copied()).collect(),
        }
    }

    /// Binomial `Π z^{k+} - Π z^{k-}` for a relation `k`.
    pub fn relation_binomial(&self, relation: &[i64]) -> CoordPolynomial {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (f, &k) in self.tracked.iter().zip(relation) {
            if k > 0 {
                pos.push((f.clone(), k as u32));
            } else if k < 0 {
                neg.push((f.clone(), (-k) as u32));
            }
        }
        CoordPolynomial::new(vec![
            (Complex64::new(1.0, 0.0), Monomial::new(pos)),
            (Complex64::new(-1.0, 0.0), Monomial::new(neg)),
        ])
    }

    /// All monomials of total degree `1..=max_degree` in the tracked
    /// coordinates (degree 1 first), followed by the relation binomials.
    pub fn default_test_family(&self, max_degree: u32) -> Vec<CoordPolynomial> {
        let n = self.tracked.len();
        let mut family = Vec::new();
        for degree in 1..=max_degree {
            let mut exps = vec![0u32; n];
            multisets(n, degree, 0, &mut exps, &mut |e| {
                let vars = self.tracked.iter().zip(e).filter(|(_, &k)| k > 0).map(|(f, &k)| (f.clone(), k)).collect();
                family.push(CoordPolynomial::monomial(Monomial::new(vars)));
            });
        }
        family.extend(self.relations.iter().map(|r| self.relation_binomial(r)));
        family
    }
}

fn multisets(n: usize, remaining: u32, start: usize, exps: &mut Vec<u32>, emit: &mut dyn FnMut(&[u32])) {
    if remaining == 0 {
        emit(exps);
        return;
    }
    for i in start..n {
        exps[i] += 1;
        multisets(n, remaining - 1, i, exps, emit);
        exps[i] -= 1;
    }
}

/// A candidate point: finitely many coordinate values.
#[derive(Clone, Debug, PartialEq)]
pub struct HullPoint {
    basis: Arc<FrequencyBasis>,
    assignment: BTreeMap<Frequency, Complex64>,
}

impl HullPoint {
    pub fn get(&self, f: &Frequency) -> Option<Complex64> {
        self.assignment.get(f).copied()
    }

    pub fn set(&mut self, f: Frequency, value: Complex64) {
        self.assignment.insert(f, value);
    }

    pub fn assignment(&self) -> &BTreeMap<Frequency, Complex64> {
        &self.assignment
    }

    /// Largest coordinate modulus.
    pub fn max_modulus(&self) -> f64 {
        self.assignment.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest `|v(λ+μ) - v(λ) v(μ)|` over tracked triples with `λ+μ = ν`.
    pub fn multiplicativity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let keys: Vec<&Frequency> = self.assignment.keys().collect();
        for (i, a) in keys.iter().enumerate() {
            for b in &keys[i..] {
                if let Some(vn) = self.assignment.get(&(*a + *b)) {
                    let d = (vn - self.assignment[*a] * self.assignment[*b]).norm();
                    worst = worst.max(d);
                }
            }
        }
        if let Some(v0) = self.assignment.get(&self.basis.zero()) {
            worst = worst.max((v0 - v0 * v0).norm());
        }
        worst
    }

    /// `λ ↦ t^λ v(λ)`, with `0^0 = 1`.
    pub fn contract(&self, t: f64) -> Result<HullPoint> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange { name: "t", value: t });
        }
        let assignment = self
            .assignment
            .iter()
            .map(|(f, v)| {
                let w = if f.is_zero() { 1.0 } else { t.powf(self.basis.value(f)) };
                (f.clone(), v * w)
            })
            .collect();
        Ok(HullPoint { basis: self.basis.clone(), assignment })
    }
}

/// Product of coordinate functionals `Π z_λ^{k_λ}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(Frequency, u32)>);

impl Monomial {
    pub fn new(vars: Vec<(Frequency, u32)>) -> Self {
        let mut merged: BTreeMap<Frequency, u32> = BTreeMap::new();
        for (f, k) in vars {
            *merged.entry(f).or_default() += k;
        }
        merged.retain(|_, k| *k > 0);
        Monomial(merged.into_iter().collect())
    }

    pub fn single(f: Frequency) -> Self {
        Monomial(vec![(f, 1)])
    }

    pub fn vars(&self) -> &[(Frequency, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, k)| k).sum()
    }

    /// The frequency `Σ k λ` the monomial pulls back to.
    pub fn frequency(&self, basis: &FrequencyBasis) -> Frequency {
        self.0.iter().fold(basis.zero(), |acc, (f, k)| &acc + &f.scale(*k as i64))
    }
}

/// Element of the polynomial algebra in the coordinate functionals.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordPolynomial {
    terms: Vec<(Complex64, Monomial)>,
}

impl CoordPolynomial {
    pub fn new(terms: Vec<(Complex64, Monomial)>) -> Self {
        CoordPolynomial { terms }
    }

    pub fn monomial(m: Monomial) -> Self {
        CoordPolynomial { terms: vec![(Complex64::new(1.0, 0.0), m)] }
    }

    pub fn terms(&self) -> &[(Complex64, Monomial)] {
        &self.terms
    }

    pub fn coefficient_mass(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.norm()).sum()
    }

    pub fn eval(&self, v: &HullPoint) -> Result<Complex64> {
        let mut total = Complex64::default();
        for (c, m) in &self.terms {
            let mut term = *c;
            for (f, k) in m.vars() {
                let x = v.get(f).ok_or_else(|| Error::UntrackedCoordinate(v.basis.render(f)))?;
                term *= x.powu(*k);
            }
            total += term;
        }
        Ok(total)
    }

    /// The AP polynomial `p ∘ j`, using `z_λ ∘ j = e_λ`.
    pub fn pullback(&self, basis: &Arc<FrequencyBasis>) -> APPolynomial {
        APPolynomial::from_terms_unchecked(basis, self.terms.iter().map(|(c, m)| (m.frequency(basis), *c)))
    }

    /// `q(z) = p(t^λ z_λ)`, so that `q(v) = p(contract(v, t))`.
    pub fn contracted(&self, basis: &FrequencyBasis, t: f64) -> Result<CoordPolynomial> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::OutOfRange { name: "t", value: t });
        }
        let terms = self
            .terms
            .iter()
            .map(|(c, m)| {
                let f = m.frequency(basis);
                let w = if f.is_zero() { 1.0 } else { t.powf(basis.value(&f)) };
                (c * w, m.clone())
            })
            .collect();
        Ok(CoordPolynomial { terms })
    }

    pub fn display<'a>(&'a self, basis: &'a FrequencyBasis) -> impl fmt::Display + 'a {
        DisplayCoord { p: self, basis }
    }
}

struct DisplayCoord<'a> {
    p: &'a CoordPolynomial,
    basis: &'a FrequencyBasis,
}

impl fmt::Display for DisplayCoord<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, m)) in self.p.terms.iter().enumerate() {
            let sign = if c.im == 0.0 && c.re < 0.0 { "-" } else { "+" };
            let mag = if c.im == 0.0 { Complex64::new(c.re.abs(), 0.0) } else { *c };
            if i > 0 {
                write!(f, " {sign} ")?;
            } else if sign == "-" {
                write!(f, "-")?;
            }
            let unit = mag == Complex64::new(1.0, 0.0);
            if !unit {
                if mag.im == 0.0 {
                    write!(f, "{}", mag.re)?;
                } else {
                    write!(f, "({}{:+}i)", mag.re, mag.im)?;
                }
            }
            if m.vars().is_empty() {
                if unit {
                    write!(f, "1")?;
                }
                continue;
            }
            for (j, (freq, k)) in m.vars().iter().enumerate() {
                if j > 0 || !unit {
                    write!(f, "*")?;
                }
                write!(f, "z[{}]", self.basis.render(freq))?;
                if *k > 1 {
                    write!(f, "^{k}")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum HullVerdict {
    /// No test polynomial separates the point. Not a membership proof.
    NoWitnessFound { tested: usize },
    Rejected {
        witness: CoordPolynomial,
        /// `|p(v)|`.
        value: f64,
        /// Coefficient-sum bound of the pullback, `≥ sup_{j(H+)} |p|`.
        sup_upper: f64,
        /// Grid lower estimate of the same supremum.
        sup_lower: f64,
    },
}

impl HullVerdict {
    pub fn is_rejected(&self) -> bool {
        matches!(self, HullVerdict::Rejected { .. })
    }
}

/// Semi-decision for membership of `v` in the polynomial hull of `j(H+)`.
///
/// Rejects with the first polynomial `p` such that `|p(v)|` exceeds the
/// coefficient sum of `p ∘ j` (plus [`HULL_SLACK`] times the coefficient mass
/// of `p`). Since that sum dominates `sup_{j(H+)} |p|`, rejections are sound.
pub fn hull_membership_test(v: &HullPoint, test_polys: &[CoordPolynomial], grid: &SampleGrid) -> Result<HullVerdict> {
    for p in test_polys {
        let value = p.eval(v)?.norm();
        let pull = p.pullback(&v.basis);
        let upper = pull.coef_sum();
        if value > upper + HULL_SLACK * (1.0 + p.coefficient_mass()) {
            let sup_lower = pull.sup_bounds(grid).lower;
            return Ok(HullVerdict::Rejected { witness: p.clone(), value, sup_upper: upper, sup_lower });
        }
    }
    Ok(HullVerdict::NoWitnessFound { tested: test_polys.len() })
}
