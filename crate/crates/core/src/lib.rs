//! Order-driven market model with empirically shaped order flow.
//!
//! Unit-size orders arrive one per event. Each carries a sign from a
//! long-memory `±1` series and a relative price from a composite density;
//! orders at or beyond the spread execute against the opposite best, the rest
//! rest on a tick grid, and every resting order is cancelled at each event
//! with a probability that depends on how far the market has moved away from
//! it, the size of the book and the book imbalance. Mid-price returns at
//! trade event time are then analysed for their tail behaviour.
//!
//! The crate is `no_std` (with `alloc`). IO, configuration files, parallel
//! round execution and the command-line front end live in the `mfsim` crate.
#![no_std]
extern crate alloc;

pub mod analysis;
pub mod cancellation;
pub mod engine;
pub mod fft;
pub mod orderbook;
pub mod special;
pub mod stochastic;

pub use cancellation::{CancellationParams, ImbalanceConvention, RatioReference};
pub use analysis::{StudentFit, SurfacePoint, SurfaceRegression, TailFit, TailSide, TailVerdict};
pub use engine::{RunConfig, ReturnSeries};
pub use orderbook::{BookStats, Order, OrderBook, OrderId, Placement, Side, Trade};
pub use stochastic::{DensityFamily, FamilyKind, PriceSamplerSpec, SignSeries};
