//! Numerical harmonic analysis for the Hermite operator `H = -Δ + |x|²` on ℝⁿ.
//!
//! Functions are represented by finite Hermite expansions ([`HermiteExpansion`]) with
//! coefficients in a finite-dimensional value space ([`ValueSpace`]). On top of that
//! representation the crate provides
//!
//! * stable Hermite function evaluation, grid analysis/synthesis and `L^p` quadrature
//!   ([`basis`], [`grid`]);
//! * the heat and Poisson semigroups in kernel and spectral form, fractional time
//!   derivatives and negative powers ([`semigroup`]);
//! * multivariate square functions, discretized `γ`-radonifying norms and the
//!   polarization identity ([`littlewood_paley`]);
//! * spectral multipliers, imaginary powers, the Mellin-type transform of a symbol and
//!   the Meda-type integrability estimator ([`multiplier`]);
//! * ladder operators, shifts, Hermite–Riesz transforms and Sobolev / potential /
//!   Triebel–Lizorkin norms ([`sobolev`]);
//! * a reproducible experiment runner with CSV/JSON output ([`runner`]).

pub mod basis;
pub mod error;
pub mod expansion;
pub mod grid;
pub mod littlewood_paley;
pub mod multiplier;
pub mod rng;
pub mod runner;
pub mod semigroup;
pub mod sobolev;
pub mod special;
pub mod symbol_expr;
pub mod tensor;
pub mod value;

pub use basis::{eval_hermite, eval_hermite_multi, hermite_table, MultiIndex};
pub use error::{Error, Result};
pub use expansion::HermiteExpansion;
pub use grid::{default_grid, GridField, SpatialGrid};
pub use littlewood_paley::TimeGrid;
pub use multiplier::MultiplierSymbol;
pub use value::ValueSpace;

pub use num_complex::Complex64;
