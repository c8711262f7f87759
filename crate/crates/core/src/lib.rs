//! Randomly weighted averages of Dirichlet random vectors.
//!
//! If `X_1, …, X_n` are independent with `X_j ~ Dirichlet(α^(j))` and the weights
//! `W ~ Dirichlet(Σ_i α^(1)_i, …, Σ_i α^(n)_i)` are independent of them, then
//! `Z = Σ_j W_j X_j ~ Dirichlet(Σ_j α^(j)_1, …, Σ_j α^(j)_k)`.
//!
//! The crate checks this three ways:
//!
//! * [`rwa`] samples `Z` along independent paths and [`stattest`] compares the
//!   samples with the target law (moment z-tests, marginal KS, energy distance);
//! * [`moments`] evaluates the exact mixed moments of `Z` by multinomial expansion
//!   and compares them with the target's closed form;
//! * [`stieltjes`] evaluates Stieltjes transforms of the arcsine and power-semicircle
//!   laws and checks the derivative identities they satisfy.

// Negated float comparisons are how NaN gets rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod batch;
pub mod distributions;
pub mod error;
pub mod moments;
pub mod quadrature;
pub mod rng;
pub mod rwa;
pub mod special;
pub mod stattest;
pub mod stieltjes;

pub use batch::SampleBatch;
pub use distributions::{
    dirichlet_log_pdf, dirichlet_mixed_moment, sample_dirichlet, sample_gamma, DirichletParams, GammaParams,
    SimplexPoint,
};
pub use error::{Error, Result};
pub use moments::{
    dirmult_normalization_check, dirmult_pmf, rwa_moment_closed_form, rwa_moment_expansion, weight_moment,
    CompositionTable, DirMultParams, ExpansionPlan, MomentIndex,
};
pub use rng::RngStream;
pub use rwa::{
    sample_rwa_direct, sample_rwa_gamma_path, sample_rwa_gamma_ratio, sample_z_batch, target_params, variant_spec,
    weight_params, RwaSample, RwaSpec, SamplingPath,
};
