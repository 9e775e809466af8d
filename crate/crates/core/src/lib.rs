//! Free group words, Stallings graphs, automorphisms, triangular graph maps
//! and simplicial tree computations used to put unipotent polynomially
//! growing outer automorphisms of free groups into triangular form.

pub mod word;
pub mod subgroup;
pub mod linalg;
pub mod automorphism;
pub mod graph;
pub mod triangular;
pub mod free_factor;
pub mod tree;
pub mod growth;
pub mod driver;

/// Exact rational numbers used for lengths and growth coefficients.
pub type Rational = num_rational::BigRational;

/// `n / d` as a [`Rational`].
pub fn rational(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}
