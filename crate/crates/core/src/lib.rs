//! Numerical building blocks for group-pooled "HW modules" and the kernels they induce.
//!
//! A layer computes rectified dot products of its input with group-transformed
//! templates and pools them over the group. This crate provides:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`signal`] | unit-norm signals, finite permutation groups, orbits |
//! | [`hw`] | simple-cell responses, pooling operators, layers and hierarchies |
//! | [`kernels`] | Monte-Carlo `K0` / group-averaged kernels, the step-nonlinearity kernel, Gram/PSD and selectivity tests |
//! | [`ramp`] | ramp identities, ramp-built steps and hats, least-squares ramp fits |
//! | [`hbf`] | HyperBF networks with moving centers |
//! | [`hvq`] | flat versus hierarchical vector quantization with memory accounting |
//!
//! All randomness is driven by explicit 64-bit seeds; see [`rng`].

// `!(x > 0.0)` is used throughout to reject NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hbf;
pub mod hvq;
pub mod hw;
pub mod kernels;
pub mod ramp;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
pub use hbf::{HbfModel, TrainConfig, TrainingSet};
pub use hvq::{HvqCodebook, PatternFamily, VqCodebook};
pub use hw::{HwLayer, HwNetwork, PoolingSpec};
pub use kernels::{GramReport, KernelEstimate, TemplateSampler};
pub use ramp::RampCombination;
pub use signal::{FiniteGroup, Orbit, Permutation, Signal};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}
