//! Szegő kernels and Szegő metrics for monogenic functions in `Cl(0,m)`.
//!
//! The algebraic layers ([`clifford`], [`mobius`], [`calculus`],
//! [`monogenic`]) are generic over a [`Scalar`] so identities can be checked
//! exactly with rationals. The numerical layers ([`quadrature`], [`szego`],
//! [`metric`]) work in `f64`.

pub mod calculus;
pub mod clifford;
pub mod error;
pub mod metric;
pub mod mobius;
pub mod monogenic;
pub mod quadrature;
pub mod scalar;
pub mod szego;

pub use clifford::{Multivector, Paravector, Signature};
pub use error::{Error, Result};
pub use scalar::{ratio, RealScalar, Scalar};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

pub type Multivector64 = Multivector<f64>;
pub type MultivectorQ = Multivector<Rational>;
pub type Paravector64 = Paravector<f64>;
pub type ParavectorQ = Paravector<Rational>;
pub type Polynomial64 = calculus::MultivectorPolynomial<f64>;
pub type PolynomialQ = calculus::MultivectorPolynomial<Rational>;
pub type Vahlen64 = mobius::VahlenMatrix<f64>;
pub type VahlenQ = mobius::VahlenMatrix<Rational>;
