//! Thermodynamic pressure, Bowen-equation dimensions and shrinking-target
//! exponents for expanding Markov maps of the interval with finitely or
//! countably many inverse branches.

// Negated float comparisons in this crate are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterexample;
pub mod dimension;
pub mod error;
pub mod exec;
pub mod interval;
pub mod lse;
pub mod markov_ifs;
pub mod pressure;
pub mod targets;

pub use counterexample::{
    verify_moran, zero_dim_cover_report, CounterexampleSystem, ShrinkFn, ZeroDimReport,
};
pub use dimension::{
    bowen_dimension, moran_solve, moran_solve_log, shrink_exponent_alpha,
    shrink_exponent_potential, solve_pressure_zero, spectrum, DimensionResult, SolverConfig,
};
pub use error::{Error, Result};
pub use exec::{EvalOptions, Reduction};
pub use interval::Interval;
pub use markov_ifs::{
    enumerate_words, AffineBranch, Alphabet, BranchFamily, CountableAffine, CylinderGeometry,
    Distortion, GaussBranch, GeometricAffine, MarkovSystem, MonotoneBranch, Symbol, Word,
};
pub use pressure::{
    birkhoff_bracket, default_depth, partition_sum, pressure_bracket, Mode, PerSymbolBracket,
    PotentialSpec, PressureEstimate, Tail, TailBound, Truncation,
};
pub use targets::{
    cover_sum, cylinder_density, hit_times, upper_dimension_certificate, Certificate,
    CertificateParams, CoverReport, HitEpoch, HitReport, HitStatus, Rate, TargetSpec,
};
