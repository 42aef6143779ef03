//! Performance analysis for STAR-RIS assisted downlinks with fluid-antenna
//! receivers under rate-splitting multiple access.
//!
//! A simultaneously-transmitting-and-reflecting surface (STAR-RIS) splits a
//! base-station signal towards one user on each side of the surface.  Each
//! user carries a fluid antenna (FAS): a single RF chain that can switch among
//! `N` closely spaced ports and ride the best instantaneous channel.  The
//! surface co-phases imperfectly, leaving a von Mises residual phase error per
//! element.
//!
//! The crate computes, for that system model,
//!
//! * closed-form outage probability through a Student-t copula over the
//!   correlated per-port channel gains,
//! * its high-SNR asymptote,
//! * an average-capacity approximation built on an expected-best-port gain
//!   heuristic,
//!
//! and cross-validates every analytic quantity against an independent
//! Monte Carlo channel simulator.
//!
//! Module map:
//!
//! * [`specfun`] — scalar special functions and a quasi-Monte Carlo
//!   multivariate Student-t CDF; everything else builds on this kernel.
//! * [`model`] — scenario description: geometry, surface, power split,
//!   phase-error statistics, the fitted Gamma gain marginal and the port
//!   correlation model.
//! * [`copula`] — the joint law of the per-port gains and of their maximum.
//! * [`analysis`] — SINRs, outage thresholds, outage probability and average
//!   capacity.
//! * [`simkit`] — the Monte Carlo oracle: physical channel draws, outage and
//!   capacity estimation with deterministic parallel streams.
//! * [`cli`] — command implementations behind the `starfas` binary: analyze,
//!   simulate, sweep, figures, validate.

// Numeric-kernel idioms: reference constants are written at full printed
// precision, `!(x > 0.0)` comparisons deliberately catch NaN, and range
// loops mirror triangular matrix index patterns.
#![allow(clippy::excessive_precision)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod cli;
pub mod copula;
pub mod model;
pub mod simkit;
pub mod specfun;
