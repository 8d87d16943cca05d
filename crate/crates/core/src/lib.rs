//! Computation in algebras of almost periodic polynomials whose Bohr–Fourier
//! spectrum lies in a finitely generated additive semigroup `Σ ⊂ [0, ∞)`.
//!
//! Frequencies are exact rational combinations of a declared real basis;
//! coefficients are complex floating point. On top of the polynomial algebra
//! the crate provides semigroup membership and saturation, the coordinate
//! hull model with its contraction, certified lower bounds for the corona
//! quantity `inf_{H+} Σ |f̂_j|`, constructive Bezout and logarithm solvers,
//! and completion of `n × (n-1)` matrices to determinant one.

// `!(x > 0.0)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod bezout;
pub mod bohr;
pub mod completion;
pub mod corona;
pub mod error;
pub mod factor;
pub mod hull;
pub mod lattice;
pub mod poly;
pub mod semigroup;

pub use basis::{Frequency, FrequencyBasis, Rational, RealValue};
pub use bezout::{
    invert, invert_with_degree, neumann_inverse, neumann_sum, solve_bezout, BezoutSolution, Inverse, InverseMethod,
};
pub use bohr::{bohr_mean_numeric, BohrEstimate, SampleSource};
pub use completion::{
    complete_matrix, complete_matrix_with, maximal_minors, verify_completion, APMatrix, CompletionReport,
    CompletionResult,
};
pub use corona::{certify_infimum, corona_sum, CertificateMode, CoronaCertificate, CoronaConfig};
pub use error::{Error, Result};
pub use factor::{
    exp_order_for, exp_truncated, logarithm, logarithm_with, ExpSeries, LogConfig, LogPath, LogStage, Logarithm,
};
pub use hull::{hull_membership_test, CoordPolynomial, CoordinateModel, HullPoint, HullVerdict, Monomial};
pub use poly::{APPolynomial, SampleGrid, SupBounds, UpperHalfPoint};
pub use semigroup::{FrobeniusData, Membership, MembershipCertificate, Saturation, Semigroup, SpectrumCheck};
