//! Asymmetric boosting for cascade classifiers.
//!
//! The crate implements totally-corrective boosting by column generation
//! (FisherBoost and LACBoost), where each restricted master problem is a
//! quadratic program over the unit simplex solved by entropic gradient
//! descent. AdaBoost and AsymBoost are provided as baselines, together with
//! closed-form LAC/LDA recalibration, multi-exit cascade training, Haar-like
//! features on integral images and synthetic data generators.
//!
//! Data flows through the modules roughly as
//! [`data`] → [`stump`] → [`booster`] (which drives [`simplex`]) →
//! [`postprocess`] → [`cascade`], with [`haar`] supplying features for image
//! datasets and [`model`] handling persistence.

// `!(x > 0.0)` is used deliberately so that NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod booster;
pub mod cascade;
pub mod data;
pub mod datasets;
pub mod error;
pub mod haar;
pub mod model;
pub mod postprocess;
pub mod rng;
pub mod simplex;
pub mod stump;

pub use error::{Error, Result};
