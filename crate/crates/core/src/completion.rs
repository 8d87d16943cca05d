//! Completion of `n × (n-1)` matrices over `AP_Σ` to determinant one.
//!
//! Appending a column `c` gives `det = Σ_i c_i m_i` with `m_i` the signed
//! maximal minors, so completion is a Bezout problem on the minors.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::bezout::{solve_bezout, BezoutSolution};
use crate::corona::{certify_infimum, CoronaCertificate, CoronaConfig};
use crate::error::{Error, Result};
use crate::poly::APPolynomial;
use crate::semigroup::{Semigroup, SpectrumCheck};

#[derive(Clone, Debug)]
pub struct APMatrix {
    rows: usize,
    cols: usize,
    /// Row-major.
    entries: Vec<APPolynomial>,
    sigma: Semigroup,
}

impl APMatrix {
    /// Checks dimensions and that every entry has spectrum in `Σ`.
    pub fn new(sigma: &Semigroup, rows: usize, cols: usize, entries: Vec<APPolynomial>) -> Result<Self> {
        let m = Self::new_unchecked(sigma, rows, cols, entries)?;
        for e in &m.entries {
            sigma.require_spectrum(e)?;
        }
        Ok(m)
    }

    /// Checks dimensions only; spectra are left to [`verify_completion`].
    pub fn new_unchecked(sigma: &Semigroup, rows: usize, cols: usize, entries: Vec<APPolynomial>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!("{} entries for a {rows}x{cols} matrix", entries.len())));
        }
        for e in &entries {
            sigma.basis().check_same(e.basis())?;
        }
        Ok(APMatrix { rows, cols, entries, sigma: sigma.clone() })
    }

    pub fn from_rows(sigma: &Semigroup, rows: Vec<Vec<APPolynomial>>) -> Result<Self> {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::new(sigma, n, k, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn semigroup(&self) -> &Semigroup {
        &self.sigma
    }

    pub fn get(&self, i: usize, j: usize) -> &APPolynomial {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: APPolynomial) {
        self.entries[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[APPolynomial] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<APPolynomial> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn entries(&self) -> &[APPolynomial] {
        &self.entries
    }

    pub fn without_row(&self, skip: usize) -> APMatrix {
        let entries = (0..self.rows).filter(|&i| i != skip).flat_map(|i| self.row(i).to_vec()).collect();
        APMatrix { rows: self.rows - 1, cols: self.cols, entries, sigma: self.sigma.clone() }
    }

    pub fn with_column(&self, column: &[APPolynomial]) -> Result<APMatrix> {
        if column.len() != self.rows {
            return Err(Error::ShapeMismatch(format!("column of length {} for {} rows", column.len(), self.rows)));
        }
        let mut entries = Vec::with_capacity(self.rows * (self.cols + 1));
        for (i, c) in column.iter().enumerate() {
            entries.extend_from_slice(self.row(i));
            entries.push(c.clone());
        }
        Ok(APMatrix { rows: self.rows, cols: self.cols + 1, entries, sigma: self.sigma.clone() })
    }

    /// Cofactor expansion along rows, memoized on the set of used columns.
    pub fn determinant(&self) -> Result<APPolynomial> {
        if self.rows != self.cols {
            return Err(Error::ShapeMismatch(format!("determinant of a {}x{} matrix", self.rows, self.cols)));
        }
        if self.rows > 20 {
            return Err(Error::ShapeMismatch("determinant beyond 20x20".into()));
        }
        let mut memo = HashMap::new();
        Ok(self.det_from(0, (1u32 << self.cols) - 1, &mut memo))
    }

    fn det_from(&self, row: usize, free: u32, memo: &mut HashMap<u32, APPolynomial>) -> APPolynomial {
        if free == 0 {
            return APPolynomial::constant(self.sigma.basis(), Complex64::new(1.0, 0.0));
        }
        if let Some(d) = memo.get(&free) {
            return d.clone();
        }
        let mut acc = APPolynomial::zero(self.sigma.basis());
        let mut position = 0;
        for j in 0..self.cols {
            if free & (1 << j) == 0 {
                continue;
            }
            let a = self.get(row, j);
            if !a.is_empty() {
                let minor = self.det_from(row + 1, free & !(1 << j), memo);
                let term = a * &minor;
                acc = if position % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            position += 1;
        }
        memo.insert(free, acc.clone());
        acc
    }
}

/// `m_i = (-1)^{i+n} det(A without row i)` (1-based `i`), so that appending
/// a column `c` yields `det = Σ_i c_i m_i`.
pub fn maximal_minors(a: &APMatrix) -> Result<Vec<APPolynomial>> {
    let n = a.rows;
    if n == 0 || a.cols + 1 != n {
        return Err(Error::UnsupportedShape { rows: a.rows, cols: a.cols });
    }
    (0..n)
        .map(|i| {
            let d = a.without_row(i).determinant()?;
            Ok(if (i + 1 + n).is_multiple_of(2) { d } else { -&d })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct CompletionResult {
    pub completed: APMatrix,
    pub minors: Vec<APPolynomial>,
    pub certificate: CoronaCertificate,
    pub bezout: BezoutSolution,
    /// Coefficient sum of `det(completed) - 1`.
    pub det_residual: f64,
}

pub fn complete_matrix(a: &APMatrix, tol: f64, degree_bound: usize) -> Result<CompletionResult> {
    complete_matrix_with(a, tol, degree_bound, &CoronaConfig::default())
}

pub fn complete_matrix_with(
    a: &APMatrix,
    tol: f64,
    degree_bound: usize,
    corona: &CoronaConfig,
) -> Result<CompletionResult> {
    let minors = maximal_minors(a)?;
    let certificate = certify_infimum(&minors, &a.sigma, corona)?;
    if !(certificate.lower_bound > 0.0) {
        return Err(Error::CoronaNotCertified { lower_bound: certificate.lower_bound });
    }
    let bezout = solve_bezout(&minors, &a.sigma, degree_bound, tol)?;
    let completed = a.with_column(&bezout.g)?;
    let det = completed.determinant()?;
    let det_residual = (&det - &APPolynomial::constant(a.sigma.basis(), Complex64::new(1.0, 0.0))).coef_sum();
    Ok(CompletionResult { completed, minors, certificate, bezout, det_residual })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompletionReport {
    pub columns_preserved: bool,
    pub determinant: Option<APPolynomial>,
    pub det_residual: f64,
    pub det_within_tol: bool,
    pub spectra_valid: bool,
    pub tol: f64,
}

impl CompletionReport {
    pub fn passed(&self) -> bool {
        self.columns_preserved && self.determinant.is_some() && self.det_within_tol && self.spectra_valid
    }

    /// `(name, passed)` for each check, in order.
    pub fn checks(&self) -> [(&'static str, bool); 4] {
        [
            ("columns-preserved", self.columns_preserved),
            ("determinant-computed", self.determinant.is_some()),
            ("determinant-residual", self.det_within_tol),
            ("spectra-valid", self.spectra_valid),
        ]
    }
}

/// Re-checks a completion of `a` from scratch. Never fails; a check that
/// cannot be carried out is reported as not passed.
pub fn verify_completion(a: &APMatrix, completed: &APMatrix, tol: f64) -> CompletionReport {
    let shapes_ok = completed.rows == a.rows && completed.cols == a.cols + 1;
    let columns_preserved = shapes_ok && (0..a.rows).all(|i| (0..a.cols).all(|j| completed.get(i, j) == a.get(i, j)));
    let determinant = completed.determinant().ok();
    let det_residual = determinant
        .as_ref()
        .map_or(f64::INFINITY, |d| (d - &APPolynomial::constant(a.sigma.basis(), Complex64::new(1.0, 0.0))).coef_sum());
    let spectra_valid =
        completed.entries.iter().all(|e| matches!(a.sigma.validate_spectrum(e), Ok(SpectrumCheck::Contained)));
    CompletionReport {
        columns_preserved,
        determinant,
        det_residual,
        det_within_tol: det_residual <= tol,
        spectra_valid,
        tol,
    }
}
