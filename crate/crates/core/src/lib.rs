//! Classical two-view stereo: camera and epipolar geometry, rectification,
//! block matching with semi-global aggregation, disparity refinement and
//! evaluation against ground truth.
//!
//! Data-parallel stages take an [`Executor`] from the caller; with the
//! `parallel` feature disabled every stage runs sequentially.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod disparity;
pub mod epipolar;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod image;
pub mod io;
pub mod matching;
pub mod parallel;
pub mod rectification;
pub mod refinement;
pub mod synth;

pub use disparity::{DisparityImage, INVALID_DISPARITY};
pub use error::{Result, StereoError};
pub use image::GrayImage;
pub use parallel::Executor;
