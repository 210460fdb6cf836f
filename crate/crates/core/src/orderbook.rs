//! Unit-size limit order book on a fixed tick grid.
//!
//! Prices are log-prices. Internally every resting order lives on an integer
//! tick level, so the grid invariant holds exactly; `log_price` is derived as
//! `level * tick`. Incoming orders are described by a sign and a relative
//! price `x` measured from the same-side best quote (`π − π_b` for buys,
//! `π_a − π` for sells). Orders with `x` at or beyond the spread execute
//! against the opposite best; the rest are rounded down onto the grid and
//! rest in the book.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    /// `+1` for buys, `−1` for sells.
    pub fn sign(self) -> i8 {
        match self {
            Side::Buy => 1,
            Side::Sell => -1,
        }
    }

    pub fn from_sign(sign: i8) -> Self {
        if sign >= 0 {
            Side::Buy
        } else {
            Side::Sell
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrderId(pub u64);

/// A resting unit-size limit order.
#[derive(Debug, Clone, PartialEq)]
pub struct Order {
    pub id: OrderId,
    pub side: Side,
    /// Tick index of the price level.
    pub level: i64,
    pub log_price: f64,
    /// Relative price at placement, in log-price units.
    pub x_original: f64,
    /// Distance from the opposite best quote at placement.
    pub opposite_distance: f64,
    pub placed_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trade {
    pub event_time: u64,
    /// Log-price of the resting order that was hit.
    pub price: f64,
    pub aggressor: Side,
    pub resting: OrderId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    Executed(Trade),
    Rested(Order),
    /// Effective market order against an empty opposite side. The order is
    /// dropped; the reference quote for that side is the remembered one.
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BookStats {
    pub n_tot: usize,
    pub n_buy: usize,
    pub n_sell: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BookError {
    #[error("order {0:?} is not resting in the book")]
    UnknownOrder(OrderId),
    #[error("no reference quote on the {0:?} side; the book was never seeded")]
    NoReference(Side),
    #[error("relative price must be finite, got {0}")]
    NonFinitePrice(f64),
    #[error("tick size must be positive and finite, got {0}")]
    InvalidTick(f64),
}

#[derive(Debug, Clone)]
pub struct OrderBook {
    tick: f64,
    bids: BTreeMap<i64, VecDeque<OrderId>>,
    asks: BTreeMap<i64, VecDeque<OrderId>>,
    orders: Vec<Order>,
    slots: BTreeMap<OrderId, usize>,
    n_buy: usize,
    n_sell: usize,
    last_bid: Option<i64>,
    last_ask: Option<i64>,
    next_id: u64,
}

impl OrderBook {
    /// An empty book with no reference quotes.
    pub fn new(tick: f64) -> Result<Self, BookError> {
        if !(tick > 0.0 && tick.is_finite()) {
            return Err(BookError::InvalidTick(tick));
        }
        Ok(Self {
            tick,
            bids: BTreeMap::new(),
            asks: BTreeMap::new(),
            orders: Vec::new(),
            slots: BTreeMap::new(),
            n_buy: 0,
            n_sell: 0,
            last_bid: None,
            last_ask: None,
            next_id: 0,
        })
    }

    /// A book holding one buy at `−T` and one sell at `0`: the `T·int[∓T/2 / T]`
    /// roundings of a one-tick spread centred on log-price zero.
    pub fn seeded(tick: f64) -> Result<Self, BookError> {
        let mut book = Self::new(tick)?;
        book.insert(Side::Buy, -1, 0.0, 0);
        book.insert(Side::Sell, 0, 0.0, 0);
        Ok(book)
    }

    pub fn tick(&self) -> f64 {
        self.tick
    }

    fn side_map(&self, side: Side) -> &BTreeMap<i64, VecDeque<OrderId>> {
        match side {
            Side::Buy => &self.bids,
            Side::Sell => &self.asks,
        }
    }

    fn side_map_mut(&mut self, side: Side) -> &mut BTreeMap<i64, VecDeque<OrderId>> {
        match side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        }
    }

    fn live_best(&self, side: Side) -> Option<i64> {
        match side {
            Side::Buy => self.bids.keys().next_back().copied(),
            Side::Sell => self.asks.keys().next().copied(),
        }
    }

    /// Best level on `side`, falling back to the last observed best when the
    /// side is empty.
    pub fn best_level(&self, side: Side) -> Option<i64> {
        self.live_best(side).or(match side {
            Side::Buy => self.last_bid,
            Side::Sell => self.last_ask,
        })
    }

    /// `(π_b, π_a)` with the empty-side fallback applied.
    pub fn best_quotes(&self) -> (Option<f64>, Option<f64>) {
        (
            self.best_level(Side::Buy).map(|l| self.price_of(l)),
            self.best_level(Side::Sell).map(|l| self.price_of(l)),
        )
    }

    /// Spread in ticks, if both reference quotes exist.
    pub fn spread_ticks(&self) -> Option<i64> {
        Some(self.best_level(Side::Sell)? - self.best_level(Side::Buy)?)
    }

    /// `(π_b + π_a) / 2`.
    pub fn mid_price(&self) -> Option<f64> {
        let (b, a) = self.best_quotes();
        Some(0.5 * (b? + a?))
    }

    pub fn price_of(&self, level: i64) -> f64 {
        level as f64 * self.tick
    }

    pub fn stats(&self) -> BookStats {
        BookStats {
            n_tot: self.n_buy + self.n_sell,
            n_buy: self.n_buy,
            n_sell: self.n_sell,
        }
    }

    /// Resting orders in unspecified (but deterministic) order.
    pub fn orders(&self) -> &[Order] {
        &self.orders
    }

    pub fn get(&self, id: OrderId) -> Option<&Order> {
        self.slots.get(&id).map(|&i| &self.orders[i])
    }

    /// Number of orders queued at `level` on `side`.
    pub fn depth_at(&self, side: Side, level: i64) -> usize {
        self.side_map(side).get(&level).map_or(0, VecDeque::len)
    }

    /// Order ids at a level in priority order.
    pub fn queue_at(&self, side: Side, level: i64) -> impl Iterator<Item = OrderId> + '_ {
        self.side_map(side).get(&level).into_iter().flat_map(|q| q.iter().copied())
    }

    fn refresh_memory(&mut self, side: Side) {
        if let Some(l) = self.live_best(side) {
            match side {
                Side::Buy => self.last_bid = Some(l),
                Side::Sell => self.last_ask = Some(l),
            }
        }
    }

    fn insert(&mut self, side: Side, level: i64, x_original: f64, t: u64) -> Order {
        let id = OrderId(self.next_id);
        self.next_id += 1;
        let opposite_distance = self
            .best_level(side.opposite())
            .map_or(self.tick, |opp| (opp - level).unsigned_abs() as f64 * self.tick);
        let order = Order {
            id,
            side,
            level,
            log_price: self.price_of(level),
            x_original,
            opposite_distance,
            placed_at: t,
        };
        self.side_map_mut(side).entry(level).or_default().push_back(id);
        self.slots.insert(id, self.orders.len());
        self.orders.push(order.clone());
        match side {
            Side::Buy => self.n_buy += 1,
            Side::Sell => self.n_sell += 1,
        }
        self.refresh_memory(side);
        order
    }

    fn detach(&mut self, id: OrderId) -> Result<Order, BookError> {
        let slot = self.slots.remove(&id).ok_or(BookError::UnknownOrder(id))?;
        let order = self.orders.swap_remove(slot);
        if let Some(moved) = self.orders.get(slot) {
            self.slots.insert(moved.id, slot);
        }
        match order.side {
            Side::Buy => self.n_buy -= 1,
            Side::Sell => self.n_sell -= 1,
        }
        Ok(order)
    }

    /// Route one incoming unit order with sign `side` and relative price `x`.
    pub fn classify_and_apply(&mut self, side: Side, x: f64, t: u64) -> Result<Placement, BookError> {
        if !x.is_finite() {
            return Err(BookError::NonFinitePrice(x));
        }
        let bid = self.best_level(Side::Buy).ok_or(BookError::NoReference(Side::Buy))?;
        let ask = self.best_level(Side::Sell).ok_or(BookError::NoReference(Side::Sell))?;
        let spread = (ask - bid) as f64 * self.tick;

        if x >= spread {
            let target = side.opposite();
            let Some(level) = self.live_best(target) else {
                return Ok(Placement::Rejected);
            };
            let queue = self.side_map_mut(target).get_mut(&level).expect("best level exists");
            let resting = queue.pop_front().expect("levels are never empty");
            if queue.is_empty() {
                self.side_map_mut(target).remove(&level);
            }
            self.detach(resting)?;
            self.refresh_memory(target);
            return Ok(Placement::Executed(Trade {
                event_time: t,
                price: self.price_of(level),
                aggressor: side,
                resting,
            }));
        }

        let steps = x / self.tick;
        let level = match side {
            // T·int[(π_b + x)/T], never at or above the ask
            Side::Buy => (bid + libm::floor(steps) as i64).min(ask - 1),
            // T·int[(π_a − x)/T], clamped to one tick above the bid
            Side::Sell => (ask - libm::ceil(steps) as i64).max(bid + 1),
        };
        Ok(Placement::Rested(self.insert(side, level, x, t)))
    }

    /// Remove a resting order by id (cancellation).
    pub fn remove_order(&mut self, id: OrderId) -> Result<Order, BookError> {
        let (side, level) = {
            let o = self.get(id).ok_or(BookError::UnknownOrder(id))?;
            (o.side, o.level)
        };
        let map = self.side_map_mut(side);
        if let Some(queue) = map.get_mut(&level) {
            if let Some(pos) = queue.iter().position(|&q| q == id) {
                queue.remove(pos);
            }
            if queue.is_empty() {
                map.remove(&level);
            }
        }
        let order = self.detach(id)?;
        self.refresh_memory(side);
        Ok(order)
    }

    /// Checks structural invariants; returns a description of the first
    /// violation found. Intended for tests and debug assertions.
    pub fn check_invariants(&self) -> Result<(), &'static str> {
        if let (Some(b), Some(a)) = (self.live_best(Side::Buy), self.live_best(Side::Sell)) {
            if b >= a {
                return Err("book crossed");
            }
        }
        let counted: usize = self.bids.values().chain(self.asks.values()).map(VecDeque::len).sum();
        if counted != self.orders.len() || self.n_buy + self.n_sell != self.orders.len() {
            return Err("volume bookkeeping mismatch");
        }
        if self.bids.values().chain(self.asks.values()).any(VecDeque::is_empty) {
            return Err("empty level retained");
        }
        for o in &self.orders {
            let grid = libm::floor(o.log_price / self.tick + 0.5) * self.tick;
            if o.log_price != grid || o.log_price != self.price_of(o.level) {
                return Err("price off the tick grid");
            }
            if self.slots.get(&o.id).map(|&s| self.orders[s].id) != Some(o.id) {
                return Err("slot index stale");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: f64 = 3e-4;

    fn book_with(bids: &[i64], asks: &[i64]) -> OrderBook {
        let mut b = OrderBook::new(T).unwrap();
        for &l in bids {
            b.insert(Side::Buy, l, 0.0, 0);
        }
        for &l in asks {
            b.insert(Side::Sell, l, 0.0, 0);
        }
        b
    }

    #[test]
    fn quotes_read_out() {
        let b = book_with(&[-1], &[1]);
        assert_eq!(b.best_quotes(), (Some(-1.0 * T), Some(T)));
    }

    #[test]
    fn seeded_book_has_one_tick_spread() {
        let b = OrderBook::seeded(T).unwrap();
        assert_eq!(b.best_quotes(), (Some(-T), Some(0.0)));
        assert_eq!(b.spread_ticks(), Some(1));
        assert_eq!(b.stats(), BookStats { n_tot: 2, n_buy: 1, n_sell: 1 });
    }

    #[test]
    fn empty_side_falls_back_to_last_quote() {
        let mut b = book_with(&[-2, -1], &[1]);
        let ask = b.queue_at(Side::Sell, 1).next().unwrap();
        b.remove_order(ask).unwrap();
        assert_eq!(b.best_quotes(), (Some(-T), Some(T)));
        assert_eq!(b.stats().n_sell, 0);
    }

    #[test]
    fn unseeded_book_has_no_reference() {
        let mut b = OrderBook::new(T).unwrap();
        assert_eq!(b.best_quotes(), (None, None));
        assert!(matches!(b.classify_and_apply(Side::Buy, 0.0, 1), Err(BookError::NoReference(_))));
    }

    #[test]
    fn market_order_hits_best_ask() {
        let mut b = book_with(&[-1], &[1, 2]);
        match b.classify_and_apply(Side::Buy, 2.0 * T, 5).unwrap() {
            Placement::Executed(tr) => {
                assert_eq!(tr.price, T);
                assert_eq!(tr.aggressor, Side::Buy);
                assert_eq!(tr.event_time, 5);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(b.best_quotes().1, Some(2.0 * T));
    }

    #[test]
    fn zero_relative_price_joins_best_bid() {
        let mut b = book_with(&[-1], &[1]);
        match b.classify_and_apply(Side::Buy, 0.0, 1).unwrap() {
            Placement::Rested(o) => assert_eq!(o.level, -1),
            other => panic!("{other:?}"),
        }
        assert_eq!(b.depth_at(Side::Buy, -1), 2);
        assert_eq!(b.best_quotes().0, Some(-T));
    }

    #[test]
    fn sell_rounding_is_clamped_above_bid() {
        let mut b = book_with(&[-1], &[1]);
        match b.classify_and_apply(Side::Sell, 0.00055, 1).unwrap() {
            Placement::Rested(o) => {
                assert_eq!(o.level, 0);
                assert_eq!(o.log_price, 0.0);
            }
            other => panic!("{other:?}"),
        }
        b.check_invariants().unwrap();
    }

    #[test]
    fn negative_relative_price_rests_behind_best() {
        let mut b = book_with(&[-1], &[1]);
        // sell at π_a − x = 0.0003 + 0.001 → floor(4.33) = 4
        match b.classify_and_apply(Side::Sell, -0.001, 1).unwrap() {
            Placement::Rested(o) => assert_eq!(o.level, 4),
            other => panic!("{other:?}"),
        }
        // buy at π_b + x = −0.0003 − 0.001 → floor(−4.33) = −5
        match b.classify_and_apply(Side::Buy, -0.001, 2).unwrap() {
            Placement::Rested(o) => assert_eq!(o.level, -5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn market_order_against_empty_side_is_rejected() {
        let mut b = book_with(&[-1], &[1]);
        let ask = b.queue_at(Side::Sell, 1).next().unwrap();
        b.remove_order(ask).unwrap();
        assert_eq!(b.classify_and_apply(Side::Buy, 1.0, 3).unwrap(), Placement::Rejected);
        assert_eq!(b.stats().n_tot, 1);
    }

    #[test]
    fn fifo_within_level() {
        let mut b = book_with(&[-1], &[]);
        b.insert(Side::Sell, 1, 0.0, 1);
        b.insert(Side::Sell, 1, 0.0, 2);
        let first = b.queue_at(Side::Sell, 1).next().unwrap();
        match b.classify_and_apply(Side::Buy, 1.0, 3).unwrap() {
            Placement::Executed(tr) => assert_eq!(tr.resting, first),
            other => panic!("{other:?}"),
        }
        assert_eq!(b.depth_at(Side::Sell, 1), 1);
    }

    #[test]
    fn remove_keeps_level_neighbours() {
        let mut b = book_with(&[-1, -1], &[1, 2]);
        let first = b.queue_at(Side::Buy, -1).next().unwrap();
        b.remove_order(first).unwrap();
        assert_eq!(b.depth_at(Side::Buy, -1), 1);
        let best_ask = b.queue_at(Side::Sell, 1).next().unwrap();
        b.remove_order(best_ask).unwrap();
        assert_eq!(b.best_quotes().1, Some(2.0 * T));
        assert_eq!(b.remove_order(best_ask), Err(BookError::UnknownOrder(best_ask)));
        b.check_invariants().unwrap();
    }

    #[test]
    fn stats_track_executions() {
        let mut b = book_with(&[-3, -2, -1], &[1, 2]);
        assert_eq!(b.stats(), BookStats { n_tot: 5, n_buy: 3, n_sell: 2 });
        b.classify_and_apply(Side::Buy, 1.0, 1).unwrap();
        assert_eq!(b.stats(), BookStats { n_tot: 4, n_buy: 3, n_sell: 1 });
        assert_eq!(OrderBook::new(T).unwrap().stats(), BookStats { n_tot: 0, n_buy: 0, n_sell: 0 });
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(OrderBook::new(0.0).is_err());
        let mut b = OrderBook::seeded(T).unwrap();
        assert!(matches!(b.classify_and_apply(Side::Buy, f64::NAN, 1), Err(BookError::NonFinitePrice(_))));
        assert!(matches!(b.classify_and_apply(Side::Sell, f64::INFINITY, 1), Err(BookError::NonFinitePrice(_))));
    }
}
