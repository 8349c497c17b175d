//! Stochastic generator for correlated communication and sensing (ISAC)
//! channels built on a cluster-based channel pipeline.
//!
//! The pipeline runs per link: communication clusters ([`comm`]) are mapped
//! to scatterer coordinates ([`mapping`]), turned into shared and newborn
//! sensing clusters ([`sensing`]), merged globally across links, and
//! finally converted into channel taps ([`coeff`]). [`analytics`] holds the
//! clustering and spread statistics used to parameterize and check the
//! model; [`config`], [`pipeline`] and [`export`] drive full runs.

// `!(x > 0.0)` style guards intentionally reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod coeff;
pub mod comm;
pub mod config;
pub mod error;
pub mod export;
pub mod geometry;
pub mod mapping;
pub mod pipeline;
pub mod rng;
pub mod scenario;
pub mod sensing;
pub mod validation;

pub use error::{Error, ErrorCategory, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
