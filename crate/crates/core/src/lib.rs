//! Highway trajectory prediction on vehicle interaction graphs.
//!
//! A traffic scene is turned into a directed graph whose edges lead from
//! neighbouring vehicles to the vehicle they influence. Graph convolutional
//! and graph attention layers then predict five seconds of future motion for
//! every vehicle at once. The crate also carries the classical baselines
//! (constant velocity, Intelligent Driver Model), the data pipeline for
//! NGSIM- and HighD-style track tables, and the experiment harness.
//!
//! Module map:
//!
//! - [`numkern`]: dense tensors, a reverse-mode tape, initialisation, Adam.
//! - [`scenegraph`]: neighbour search and graph construction strategies.
//! - [`models`]: feed-forward, GCN and GAT predictors.
//! - [`classical`]: constant-velocity and IDM baselines, IDM tuning.
//! - [`datapipe`]: ingestion, smoothing, windowing, splits, synthetic traffic.
//! - [`exp`]: training, displacement metrics, multi-seed runs and reports.

pub mod classical;
pub mod datapipe;
mod error;
pub mod exp;
pub mod models;
pub mod numkern;
pub mod scenegraph;

pub use error::{Error, Result};
