//! Max-product Kantorovich sampling operators over generalized kernels,
//! Orlicz modulars and Luxemburg norms, and a harness for checking the
//! operators' inequalities and convergence numerically.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`); the aliases below fix it to `f64` or `f32`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod kernels;
pub mod operators;
pub mod orlicz;
pub mod quadrature;
pub mod scalar;
pub mod signals;

pub use analysis::{
    check_exponential_inequality, check_jackson, check_lp_lipschitz, check_modular_inequality,
    check_zygmund_inequality, compare_linear_vs_maxprod, find_modular_lambda,
    modulus_of_continuity, run_campaign, run_convergence, CampaignConfig, CampaignSummary,
    ConvergenceReport, ConvergenceSetup, InequalityCheck,
};
pub use error::{Error, Result};
pub use kernels::{
    check_assumptions, lower_bound_constant, moment, DomainKind, Kernel, KernelDiagnostics, Moment,
};
pub use operators::{
    linear_kantorovich, maxprod_kantorovich, maxprod_kantorovich_grid, shift_wrapper,
    KantorovichOperator, LinearKantorovich, NumeratorMode, OperatorConfig, ShiftedOperator,
};
pub use orlicz::{
    luxemburg_norm, maxphi_inequality_check, modular, Modular, ModularValue, PhiFunction,
};
pub use scalar::Real;
pub use signals::{from_csv, mean_values, Domain, MeanValueTable, Signal};

pub type Kernel64 = Kernel<f64>;
pub type Kernel32 = Kernel<f32>;
pub type Signal64 = Signal<f64>;
pub type Signal32 = Signal<f32>;
pub type PhiFunction64 = PhiFunction<f64>;
pub type PhiFunction32 = PhiFunction<f32>;
pub type OperatorConfig64 = OperatorConfig<f64>;
pub type OperatorConfig32 = OperatorConfig<f32>;
pub type KantorovichOperator64 = KantorovichOperator<f64>;
pub type KantorovichOperator32 = KantorovichOperator<f32>;
pub type Domain64 = Domain<f64>;
pub type ConvergenceReport64 = ConvergenceReport<f64>;
pub type InequalityCheck64 = InequalityCheck<f64>;
