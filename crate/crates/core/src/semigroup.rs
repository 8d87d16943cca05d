//! Finitely generated additive semigroups `Σ ⊂ [0, ∞)` containing 0.
//!
//! Membership is decided exactly. When every generator is rational the
//! semigroup is a scaled numerical semigroup and membership is an Apéry-set
//! lookup; otherwise the multiplicity vectors bounded by the target value are
//! searched exhaustively, so a refusal is definitive either way.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashSet};
use std::sync::Arc;

use num_integer::Integer;
use num_traits::Zero;

use crate::basis::{Frequency, FrequencyBasis, Rational};
use crate::error::{Error, Result};
use crate::poly::APPolynomial;

/// Largest modulus for which an Apéry table is materialized.
pub const APERY_LIMIT: u64 = 1 << 20;

/// Node budget for the exhaustive membership search.
pub const SEARCH_NODE_LIMIT: u64 = 10_000_000;

#[derive(Clone, Debug)]
pub struct Semigroup {
    basis: Arc<FrequencyBasis>,
    generators: Vec<Frequency>,
    values: Vec<f64>,
    /// Generator indices sorted by increasing value.
    ascending: Vec<usize>,
    integer_model: Option<IntegerModel>,
}

/// Scaled-integer model of an all-rational semigroup: generator `i` equals
/// `gcd * reduced[i] / denominator`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerModel {
    pub denominator: i64,
    pub gcd: i64,
    pub reduced: Vec<u64>,
    apery: Option<AperyTable>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct AperyTable {
    /// Index of the generator used as modulus (smallest reduced value).
    modulus_gen: usize,
    modulus: u64,
    elements: Vec<u64>,
    /// Shortest-path predecessor: (previous residue, generator index).
    pred: Vec<Option<(u64, usize)>>,
}

impl AperyTable {
    fn build(reduced: &[u64]) -> Option<Self> {
        let (modulus_gen, &modulus) = reduced.iter().enumerate().min_by_key(|(i, v)| (**v, *i))?;
        if modulus > APERY_LIMIT {
            return None;
        }
        let m = modulus as usize;
        let mut elements = vec![u64::MAX; m];
        let mut pred = vec![None; m];
        elements[0] = 0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0u64, 0usize)));
        while let Some(Reverse((d, r))) = heap.pop() {
            if d > elements[r] {
                continue;
            }
            for (gi, &g) in reduced.iter().enumerate() {
                if gi == modulus_gen {
                    continue;
                }
                let nd = d + g;
                let nr = (r + (g % modulus) as usize) % m;
                if nd < elements[nr] {
                    elements[nr] = nd;
                    pred[nr] = Some((r as u64, gi));
                    heap.push(Reverse((nd, nr)));
                }
            }
        }
        Some(AperyTable { modulus_gen, modulus, elements, pred })
    }

    fn representation(&self, mut residue: u64, ngens: usize) -> Vec<u64> {
        let mut combo = vec![0; ngens];
        while let Some((prev, gi)) = self.pred[residue as usize] {
            combo[gi] += 1;
            residue = prev;
        }
        combo
    }
}

/// Frobenius number and Apéry set of the gcd-normalized integer generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrobeniusData {
    pub denominator: i64,
    pub gcd: i64,
    pub reduced_generators: Vec<u64>,
    /// Largest non-representable integer, or -1 when every integer is.
    pub frobenius: i64,
    /// Smallest element of each residue class modulo `modulus`, by residue.
    pub apery: Vec<u64>,
    pub modulus: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Membership {
    /// Multiplicity of each generator (by generator index).
    Member { combo: Vec<u64> },
    /// Definitive refusal; `search_bounds[i]` bounds the multiplicity of
    /// generator `i` in any representation.
    Refused { search_bounds: Vec<u64> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipCertificate {
    pub target: Frequency,
    pub membership: Membership,
}

impl MembershipCertificate {
    pub fn is_member(&self) -> bool {
        matches!(self.membership, Membership::Member { .. })
    }

    /// For members, re-checks `Σ combo_i * g_i = target` exactly.
    pub fn verify(&self, sigma: &Semigroup) -> bool {
        match &self.membership {
            Membership::Member { combo } => sigma.recombine(combo) == self.target,
            Membership::Refused { .. } => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Saturation {
    Saturated,
    /// A nonnegative element of the generated group that is not in `Σ`.
    Witness(Frequency),
    /// No witness up to the search bound; nothing is claimed.
    Inconclusive {
        height: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpectrumCheck {
    Contained,
    Violation(Frequency),
}

impl Semigroup {
    pub fn new(basis: &Arc<FrequencyBasis>, generators: Vec<Frequency>) -> Result<Self> {
        let mut seen = HashSet::new();
        for g in &generators {
            assert_eq!(g.dim(), basis.dim(), "generator dimension must match basis");
            if basis.sign(g)? != Ordering::Greater {
                return Err(Error::NonPositiveGenerator(basis.render(g)));
            }
            if !seen.insert(g.clone()) {
                return Err(Error::DuplicateGenerator(basis.render(g)));
            }
        }
        let values: Vec<f64> = generators.iter().map(|g| basis.value(g)).collect();
        let mut ascending: Vec<usize> = (0..generators.len()).collect();
        let mut failure = None;
        ascending.sort_by(|&a, &b| {
            basis.compare(&generators[a], &generators[b]).unwrap_or_else(|e| {
                failure.get_or_insert(e);
                a.cmp(&b)
            })
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let integer_model = Self::integer_model_of(&generators);
        Ok(Semigroup { basis: basis.clone(), generators, values, ascending, integer_model })
    }

    /// Semigroup generated by integers over the given basis.
    pub fn from_ints(basis: &Arc<FrequencyBasis>, gens: &[i64]) -> Result<Self> {
        Self::new(basis, gens.iter().map(|&g| basis.from_int(g)).collect())
    }

    fn integer_model_of(generators: &[Frequency]) -> Option<IntegerModel> {
        if generators.is_empty() || !generators.iter().all(Frequency::is_rational) {
            return None;
        }
        let denominator = generators.iter().fold(1i64, |acc, g| acc.lcm(g.rational_part().denom()));
        let ints: Vec<i64> = generators
            .iter()
            .map(|g| {
                let q = g.rational_part();
                q.numer().checked_mul(denominator / q.denom()).expect("generator overflow")
            })
            .collect();
        let gcd = ints.iter().fold(0i64, |acc, v| acc.gcd(v));
        let reduced: Vec<u64> = ints.iter().map(|v| (v / gcd) as u64).collect();
        let apery = AperyTable::build(&reduced);
        Some(IntegerModel { denominator, gcd, reduced, apery })
    }

    pub fn basis(&self) -> &Arc<FrequencyBasis> {
        &self.basis
    }

    pub fn generators(&self) -> &[Frequency] {
        &self.generators
    }

    pub fn generator_values(&self) -> &[f64] {
        &self.values
    }

    pub fn integer_model(&self) -> Option<&IntegerModel> {
        self.integer_model.as_ref()
    }

    pub fn is_commensurable(&self) -> bool {
        self.integer_model.is_some()
    }

    /// `Σ combo_i * g_i`.
    pub fn recombine(&self, combo: &[u64]) -> Frequency {
        assert_eq!(combo.len(), self.generators.len());
        combo
            .iter()
            .zip(&self.generators)
            .fold(self.basis.zero(), |acc, (&k, g)| &acc + &g.scale(i64::try_from(k).expect("multiplicity overflow")))
    }

    fn search_bounds(&self, target_value: f64) -> Vec<u64> {
        self.values
            .iter()
            .map(|v| {
                let r = target_value / v;
                (r + 1e-9 * r.max(1.0)).floor().max(0.0) as u64
            })
            .collect()
    }

    /// Decides `λ ∈ Σ` with a witness combination or a definitive refusal.
    pub fn membership(&self, target: &Frequency) -> Result<MembershipCertificate> {
        let sign = self.basis.sign(target)?;
        if sign == Ordering::Less {
            return Err(Error::NegativeFrequency(self.basis.render(target)));
        }
        let ngens = self.generators.len();
        let certificate = |membership| Ok(MembershipCertificate { target: target.clone(), membership });
        if sign == Ordering::Equal {
            return certificate(Membership::Member { combo: vec![0; ngens] });
        }
        let bounds = self.search_bounds(self.basis.value(target));
        if ngens == 0 {
            return certificate(Membership::Refused { search_bounds: bounds });
        }
        if let Some(model) = &self.integer_model {
            if !target.is_rational() {
                return certificate(Membership::Refused { search_bounds: bounds });
            }
            if let Some(table) = &model.apery {
                let q = target.rational_part();
                let scaled = *q.numer() as i128 * model.denominator as i128;
                let den = *q.denom() as i128 * model.gcd as i128;
                if scaled % den != 0 {
                    return certificate(Membership::Refused { search_bounds: bounds });
                }
                let n = u64::try_from(scaled / den).expect("target overflow");
                let residue = n % table.modulus;
                let least = table.elements[residue as usize];
                if n < least {
                    return certificate(Membership::Refused { search_bounds: bounds });
                }
                let mut combo = table.representation(residue, ngens);
                combo[table.modulus_gen] += (n - least) / table.modulus;
                return certificate(Membership::Member { combo });
            }
        }
        match self.exhaustive(target)? {
            Some(combo) => certificate(Membership::Member { combo }),
            None => certificate(Membership::Refused { search_bounds: bounds }),
        }
    }

    pub fn contains(&self, target: &Frequency) -> Result<bool> {
        Ok(self.membership(target)?.is_member())
    }

    /// Lexicographic search over multiplicity vectors, largest generator
    /// outermost; the smallest generator's multiplicity is solved directly.
    fn exhaustive(&self, target: &Frequency) -> Result<Option<Vec<u64>>> {
        let smallest = self.ascending[0];
        let outer: Vec<usize> = self.ascending[1..].iter().rev().copied().collect();
        let target_value = self.basis.value(target);
        let bounds = self.search_bounds(target_value);
        let slack = 1e-9 * target_value.max(1.0);
        let mut combo = vec![0u64; self.generators.len()];
        let mut nodes = 0u64;

        struct Search<'a> {
            sigma: &'a Semigroup,
            outer: &'a [usize],
            smallest: usize,
            bounds: &'a [u64],
            slack: f64,
        }

        fn go(
            s: &Search<'_>,
            level: usize,
            remaining: Frequency,
            remaining_value: f64,
            combo: &mut Vec<u64>,
            nodes: &mut u64,
        ) -> Result<bool> {
            *nodes += 1;
            if *nodes > SEARCH_NODE_LIMIT {
                return Err(Error::SearchLimit { nodes: SEARCH_NODE_LIMIT });
            }
            if level == s.outer.len() {
                let g = &s.sigma.generators[s.smallest];
                if let Some(k) = remaining.integer_multiple_of(g) {
                    if k >= 0 {
                        combo[s.smallest] = k as u64;
                        return Ok(true);
                    }
                }
                return Ok(false);
            }
            let gi = s.outer[level];
            let g = &s.sigma.generators[gi];
            let gv = s.sigma.values[gi];
            let mut rem = remaining;
            for k in 0..=s.bounds[gi] {
                let rv = remaining_value - k as f64 * gv;
                if rv < -s.slack {
                    break;
                }
                combo[gi] = k;
                if go(s, level + 1, rem.clone(), rv, combo, nodes)? {
                    return Ok(true);
                }
                rem = &rem - g;
            }
            combo[gi] = 0;
            Ok(false)
        }

        let s = Search { sigma: self, outer: &outer, smallest, bounds: &bounds, slack };
        let found = go(&s, 0, target.clone(), target_value, &mut combo, &mut nodes)?;
        Ok(found.then_some(combo))
    }

    /// Frobenius number and Apéry set for an all-rational semigroup.
    pub fn frobenius_data(&self) -> Result<FrobeniusData> {
        let model = self.integer_model.as_ref().ok_or(Error::IrrationalGenerator)?;
        let table = model.apery.as_ref().ok_or(Error::SearchLimit { nodes: APERY_LIMIT })?;
        let max = *table.elements.iter().max().expect("nonempty table");
        if table.elements.contains(&u64::MAX) {
            // Unreachable residue: only possible without gcd normalization.
            return Err(Error::SearchLimit { nodes: APERY_LIMIT });
        }
        Ok(FrobeniusData {
            denominator: model.denominator,
            gcd: model.gcd,
            reduced_generators: model.reduced.clone(),
            frobenius: max as i64 - table.modulus as i64,
            apery: table.elements.clone(),
            modulus: table.modulus,
        })
    }

    /// Default saturation search bound: ten times the largest generator.
    pub fn default_saturation_bound(&self) -> f64 {
        10.0 * self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Tests whether `Σ = Δ ∩ [0, ∞)` for the group `Δ` generated by `Σ`.
    ///
    /// Exact for rational generators. Otherwise group elements `Σ k_i g_i`
    /// with value in `[0, search_bound]` are enumerated by increasing
    /// `Σ |k_i|` (ties by value) up to height `ceil(bound / min g) + 1`; the
    /// first non-member is returned.
    pub fn saturation_check(&self, search_bound: f64) -> Result<Saturation> {
        if !(search_bound > 0.0) {
            return Err(Error::OutOfRange { name: "search_bound", value: search_bound });
        }
        if self.generators.is_empty() {
            return Ok(Saturation::Saturated);
        }
        if let Some(model) = &self.integer_model {
            if model.reduced.contains(&1) {
                return Ok(Saturation::Saturated);
            }
            let d = Rational::new(model.gcd, model.denominator);
            return Ok(Saturation::Witness(self.basis.from_rational(d)));
        }

        let min_value = self.values[self.ascending[0]];
        let height = (search_bound / min_value).ceil() as u64 + 1;
        let r = self.generators.len();
        let mut seen: HashSet<Frequency> = HashSet::new();
        for h in 1..=height {
            let mut shell: Vec<Frequency> = Vec::new();
            for k in integer_vectors_with_l1(r, h as i64) {
                if k.iter().all(|&x| x >= 0) {
                    continue;
                }
                let f = k.iter().zip(&self.generators).fold(self.basis.zero(), |acc, (&c, g)| &acc + &g.scale(c));
                let v = self.basis.value(&f);
                if v < -1e-9 || v > search_bound + 1e-9 || !seen.insert(f.clone()) {
                    continue;
                }
                if self.basis.sign(&f)? == Ordering::Less {
                    continue;
                }
                shell.push(f);
            }
            self.basis.sort(&mut shell)?;
            for f in shell {
                if !self.contains(&f)? {
                    return Ok(Saturation::Witness(f));
                }
            }
        }
        Ok(Saturation::Inconclusive { height })
    }

    /// First spectrum element (in increasing order) outside `Σ`, if any.
    pub fn validate_spectrum(&self, a: &APPolynomial) -> Result<SpectrumCheck> {
        self.basis.check_same(a.basis())?;
        for f in a.spectrum()? {
            if !self.contains(&f)? {
                return Ok(SpectrumCheck::Violation(f));
            }
        }
        Ok(SpectrumCheck::Contained)
    }

    /// Like [`validate_spectrum`](Self::validate_spectrum) but as an error.
    pub fn require_spectrum(&self, a: &APPolynomial) -> Result<()> {
        match self.validate_spectrum(a)? {
            SpectrumCheck::Contained => Ok(()),
            SpectrumCheck::Violation(f) => Err(Error::SpectrumViolation(self.basis.render(&f))),
        }
    }

    /// The `count` smallest elements of `Σ` in increasing order (0 first).
    pub fn smallest_elements(&self, count: usize) -> Result<Vec<Frequency>> {
        #[derive(PartialEq, Eq, PartialOrd, Ord)]
        struct Key(OrdF64, Frequency);

        let mut out: Vec<Frequency> = Vec::with_capacity(count);
        if count == 0 {
            return Ok(out);
        }
        let mut heap = BinaryHeap::new();
        let mut queued: BTreeSet<Frequency> = BTreeSet::new();
        let zero = self.basis.zero();
        queued.insert(zero.clone());
        heap.push(Reverse(Key(OrdF64(0.0), zero)));
        let mut cutoff = f64::INFINITY;
        while let Some(Reverse(Key(OrdF64(v), f))) = heap.pop() {
            if out.len() >= count && v > cutoff {
                break;
            }
            for g in &self.generators {
                let next = &f + g;
                if queued.insert(next.clone()) {
                    heap.push(Reverse(Key(OrdF64(self.basis.value(&next)), next)));
                }
            }
            out.push(f);
            if out.len() == count {
                cutoff = v + 1e-9 * v.max(1.0);
            }
        }
        // Near-ties around the cutoff are settled by exact comparison.
        self.basis.sort(&mut out)?;
        out.truncate(count);
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// All integer vectors of length `r` with `Σ |k_i| = l1`.
fn integer_vectors_with_l1(r: usize, l1: i64) -> Vec<Vec<i64>> {
    fn rec(r: usize, remaining: i64, prefix: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if prefix.len() + 1 == r {
            for v in if remaining == 0 { vec![0] } else { vec![-remaining, remaining] } {
                prefix.push(v);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        for a in -remaining..=remaining {
            prefix.push(a);
            rec(r, remaining - a.abs(), prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if r > 0 {
        rec(r, l1, &mut Vec::with_capacity(r), &mut out);
    }
    out.retain(|v| v.iter().map(|x| x.abs()).sum::<i64>() == l1 && !v.iter().all(Zero::is_zero));
    out
}
