//! Order cancellation.
//!
//! Each resting order `i` is cancelled at each event with probability
//! `A (1 − e^{−y_i}) (n_imb + B) / n_tot`, clamped to `[0, 1]`, using an
//! independent uniform draw per order.

use alloc::vec::Vec;

use libm::{exp, fabs};
use rand::Rng;
use thiserror::Error;

use crate::orderbook::{Order, OrderBook, OrderId, Side};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CancelError {
    #[error("cancellation probability needs a non-empty book")]
    EmptyBook,
    #[error("invalid cancellation parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

/// Which side's count feeds `n_imb` for order `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImbalanceConvention {
    /// Fraction of resting orders with the same sign as `i`.
    #[default]
    SameSide,
    OppositeSide,
}

/// Which best quote the price ratio `y_i` is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RatioReference {
    /// Distance from the same-side best (the placement convention for `x`).
    #[default]
    SameBest,
    /// Distance from the opposite best.
    OppositeBest,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CancellationParams {
    pub a: f64,
    pub b: f64,
    pub imbalance: ImbalanceConvention,
    pub ratio: RatioReference,
}

impl Default for CancellationParams {
    fn default() -> Self {
        Self {
            a: 1.12,
            b: 0.2,
            imbalance: ImbalanceConvention::SameSide,
            ratio: RatioReference::SameBest,
        }
    }
}

impl CancellationParams {
    pub fn new(a: f64, b: f64) -> Result<Self, CancelError> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(CancelError::InvalidParameter { name: "A", value: a });
        }
        if !(b >= 0.0 && b.is_finite()) {
            return Err(CancelError::InvalidParameter { name: "B", value: b });
        }
        Ok(Self { a, b, ..Self::default() })
    }
}

/// `clamp(A (1 − e^{−y}) (n_imb + B) / n_tot, 0, 1)`.
pub fn cancellation_probability(
    y: f64,
    n_tot: usize,
    n_imb: f64,
    params: &CancellationParams,
) -> Result<f64, CancelError> {
    if n_tot == 0 {
        return Err(CancelError::EmptyBook);
    }
    Ok(raw_probability(y, n_tot as f64, n_imb, params).clamp(0.0, 1.0))
}

#[inline]
fn raw_probability(y: f64, n_tot: f64, n_imb: f64, params: &CancellationParams) -> f64 {
    params.a * (1.0 - exp(-y)) * (n_imb + params.b) / n_tot
}

/// Ratio `y_i` of an order's current distance from the reference best to its
/// distance at placement. Both distances are floored at one tick, so the
/// result is always positive and finite.
pub fn order_price_ratio(order: &Order, book: &OrderBook, reference: RatioReference) -> f64 {
    let tick = book.tick();
    let side = match reference {
        RatioReference::SameBest => order.side,
        RatioReference::OppositeBest => order.side.opposite(),
    };
    let Some(best) = book.best_level(side) else {
        return 1.0;
    };
    let now = fabs(order.log_price - book.price_of(best)).max(tick);
    let orig = match reference {
        RatioReference::SameBest => fabs(order.x_original),
        RatioReference::OppositeBest => order.opposite_distance,
    }
    .max(tick);
    now / orig
}

/// Draw one cancellation decision for every resting order against the
/// pre-sweep snapshot of `n_tot` and the side counts, then remove the
/// cancelled orders. Returns the cancelled ids in draw order.
pub fn cancellation_sweep<R: Rng + ?Sized>(
    book: &mut OrderBook,
    params: &CancellationParams,
    rng: &mut R,
) -> Vec<OrderId> {
    sweep_orders(book, params, rng).into_iter().map(|o| o.id).collect()
}

/// [`cancellation_sweep`], returning the removed orders themselves.
pub fn sweep_orders<R: Rng + ?Sized>(
    book: &mut OrderBook,
    params: &CancellationParams,
    rng: &mut R,
) -> Vec<Order> {
    let stats = book.stats();
    if stats.n_tot == 0 {
        return Vec::new();
    }
    let n_tot = stats.n_tot as f64;
    let frac = |side: Side| match side {
        Side::Buy => stats.n_buy as f64 / n_tot,
        Side::Sell => stats.n_sell as f64 / n_tot,
    };
    let imb_buy = match params.imbalance {
        ImbalanceConvention::SameSide => frac(Side::Buy),
        ImbalanceConvention::OppositeSide => frac(Side::Sell),
    };
    let imb_sell = match params.imbalance {
        ImbalanceConvention::SameSide => frac(Side::Sell),
        ImbalanceConvention::OppositeSide => frac(Side::Buy),
    };

    let mut cancelled = Vec::new();
    for order in book.orders() {
        let y = order_price_ratio(order, book, params.ratio);
        let imb = match order.side {
            Side::Buy => imb_buy,
            Side::Sell => imb_sell,
        };
        let p = raw_probability(y, n_tot, imb, params).clamp(0.0, 1.0);
        if rng.random::<f64>() < p {
            cancelled.push(order.id);
        }
    }
    cancelled
        .into_iter()
        .map(|id| book.remove_order(id).expect("swept ids are resting"))
        .collect()
}
