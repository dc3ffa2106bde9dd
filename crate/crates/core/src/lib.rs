//! Friction images for electrovibration displays.
//!
//! The pipeline turns a visual image of a textured surface into a bitmap the
//! display consumes 1:1: a height map (roughness) is scaled by the mean of a
//! friction-coefficient trace (slipperiness) and the batch is mapped onto the
//! display's 0–255 intensity range.
//!
//! Modules follow the data flow: [`synth`] and [`dataset`] produce training
//! corpora, [`signals`] and [`photometric`] convert raw modalities, [`infer`]
//! runs exported generator networks, [`compose`] renders friction images and
//! [`metrics`] scores generated signals.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compose;
pub mod dataset;
pub mod error;
pub mod formats;
pub mod infer;
pub mod metrics;
pub mod photometric;
pub mod pipeline;
pub mod seed;
pub mod signals;
pub mod synth;

pub use error::{Error, Result};
