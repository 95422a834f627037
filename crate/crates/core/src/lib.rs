//! Monte Carlo simulator for indoor downlink optical wireless networks.
//!
//! Compares VCSEL micro-lens-array access points with LED access points
//! serving the same users under zero-forcing precoding, and reports per-user
//! SINR, achievable rate, sum rate and consumption factor (bits per joule of
//! transmitter electrical energy) against the number of users.
//!
//! The pipeline of one drop is
//! [`scenario`] → [`channel`] → [`precoding`] + [`noise`] → [`metrics`],
//! orchestrated by [`runner`]; [`io`] and [`cli`] handle files and the
//! command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod error;
pub mod io;
pub mod metrics;
pub mod noise;
pub mod optics;
pub mod precoding;
pub mod rng;
pub mod runner;
pub mod scenario;

pub use error::{Error, Result};
