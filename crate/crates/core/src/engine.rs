//! Simulation driver and trade-time return series.
//!
//! A round seeds a fresh book, pre-generates the sign and relative-price
//! arrays, then for every event routes one order and runs one cancellation
//! sweep. The mid-price is sampled right after each trade; nothing from the
//! transient window is kept. Rounds are independent and seeded from the
//! master seed by a counter-based split, so pooling them in round order gives
//! the same output however they are scheduled.

use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cancellation::{sweep_orders, CancellationParams};
use crate::orderbook::{BookError, OrderBook, Placement, Side};
use crate::stochastic::{generate_sign_series, FamilyKind, PriceSamplerSpec, StochasticError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid run configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Book(#[from] BookError),
    #[error(transparent)]
    Stochastic(#[from] StochasticError),
    #[error("order rejected at event {0}: no reference quote")]
    Rejected(u64),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReturnsError {
    #[error("aggregation interval must be at least 1")]
    ZeroInterval,
    #[error("too few trades for lag {dt}: need at least two returns, have {have}")]
    TooShort { dt: usize, have: usize },
    #[error("returns at lag {0} have zero variance")]
    Degenerate(usize),
}

/// Everything that determines a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub hurst: f64,
    pub left: FamilyKind,
    pub right: FamilyKind,
    pub alpha_x: f64,
    pub sigma_x: f64,
    pub cancel: CancellationParams,
    pub tick: f64,
    pub steps_per_round: usize,
    pub transient: usize,
    pub rounds: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            hurst: 0.8,
            left: FamilyKind::StudentQG,
            right: FamilyKind::StudentQG,
            alpha_x: 1.3,
            sigma_x: 0.0024,
            cancel: CancellationParams::default(),
            tick: 3e-4,
            steps_per_round: 200_000,
            transient: 2000,
            rounds: 20,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |msg: &str| Err(EngineError::Config(String::from(msg)));
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return bad("hurst must lie in (0, 1)");
        }
        if !(self.tick > 0.0 && self.tick.is_finite()) {
            return bad("tick must be positive");
        }
        if self.steps_per_round == 0 || self.rounds == 0 {
            return bad("steps_per_round and rounds must be at least 1");
        }
        if self.transient >= self.steps_per_round {
            return bad("transient must be smaller than steps_per_round");
        }
        if !(self.cancel.a >= 0.0 && self.cancel.b >= 0.0) {
            return bad("cancellation A and B must be non-negative");
        }
        self.sampler()?;
        Ok(())
    }

    pub fn sampler(&self) -> Result<PriceSamplerSpec, StochasticError> {
        PriceSamplerSpec::solve(self.left, self.right, self.alpha_x, self.sigma_x)
    }
}

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of round `index` derived from the master seed.
pub fn round_seed(master: u64, index: usize) -> u64 {
    mix64(master.wrapping_add((index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

// Independent generator streams inside one round.
pub const STREAM_SIGNS: u64 = 0;
pub const STREAM_PRICES: u64 = 1;
pub const STREAM_CANCEL: u64 = 2;

/// Generator for one stream of a round.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Place,
    Execute,
    Cancel,
    Reject,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Place => "place",
            EventKind::Execute => "execute",
            EventKind::Cancel => "cancel",
            EventKind::Reject => "reject",
        }
    }
}

/// One book event, as emitted to an [`EventSink`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: u64,
    pub kind: EventKind,
    pub sign: i8,
    pub price: f64,
    pub n_tot: usize,
}

pub trait EventSink {
    fn record(&mut self, event: &Event);
}

impl EventSink for () {
    fn record(&mut self, _: &Event) {}
}

impl EventSink for Vec<Event> {
    fn record(&mut self, event: &Event) {
        self.push(*event);
    }
}

/// Post-transient event counts of one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EventCounts {
    pub orders: u64,
    pub trades: u64,
    pub rested: u64,
    pub rejected: u64,
    pub cancelled: u64,
}

impl EventCounts {
    pub fn trade_fraction(&self) -> f64 {
        if self.orders == 0 {
            0.0
        } else {
            self.trades as f64 / self.orders as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutput {
    /// Mid-price after each post-transient trade.
    pub mid_prices: Vec<f64>,
    pub counts: EventCounts,
}

/// One round with no event logging.
pub fn run_round(config: &RunConfig, seed: u64) -> Result<RoundOutput, EngineError> {
    run_round_with_sink(config, seed, &mut ())
}

/// One round, reporting every post-transient event to `sink`.
pub fn run_round_with_sink<S: EventSink + ?Sized>(
    config: &RunConfig,
    seed: u64,
    sink: &mut S,
) -> Result<RoundOutput, EngineError> {
    config.validate()?;
    let sampler = config.sampler()?;
    let steps = config.steps_per_round;

    let signs = generate_sign_series(config.hurst, steps, &mut stream(seed, STREAM_SIGNS))?;
    let mut price_rng = stream(seed, STREAM_PRICES);
    let xs: Vec<f64> = (0..steps).map(|_| sampler.sample(&mut price_rng)).collect();
    let mut cancel_rng = stream(seed, STREAM_CANCEL);

    let mut book = OrderBook::seeded(config.tick)?;
    let mut mids = Vec::new();
    let mut counts = EventCounts::default();

    for (i, (&s, &x)) in signs.values.iter().zip(&xs).enumerate() {
        let t = i as u64 + 1;
        let keep = i >= config.transient;
        let side = Side::from_sign(s);
        let placement = book.classify_and_apply(side, x, t).map_err(|e| match e {
            BookError::NoReference(_) => EngineError::Rejected(t),
            other => EngineError::Book(other),
        })?;
        if keep {
            counts.orders += 1;
            let (kind, price) = match &placement {
                Placement::Executed(tr) => {
                    counts.trades += 1;
                    mids.push(book.mid_price().expect("seeded book always has quotes"));
                    (EventKind::Execute, tr.price)
                }
                Placement::Rested(o) => {
                    counts.rested += 1;
                    (EventKind::Place, o.log_price)
                }
                Placement::Rejected => {
                    counts.rejected += 1;
                    (EventKind::Reject, f64::NAN)
                }
            };
            sink.record(&Event { time: t, kind, sign: s, price, n_tot: book.stats().n_tot });
        }

        let cancelled = sweep_orders(&mut book, &config.cancel, &mut cancel_rng);
        if keep {
            counts.cancelled += cancelled.len() as u64;
            let n_tot = book.stats().n_tot;
            for o in &cancelled {
                sink.record(&Event { time: t, kind: EventKind::Cancel, sign: o.side.sign(), price: o.log_price, n_tot });
            }
        }
    }

    Ok(RoundOutput { mid_prices: mids, counts })
}

/// Mid-prices at trade event time, one segment per round.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReturnSeries {
    pub segments: Vec<Vec<f64>>,
}

/// Standardised returns at one aggregation lag.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregated {
    pub dt: usize,
    pub standardized: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

impl ReturnSeries {
    pub fn trade_count(&self) -> usize {
        self.segments.iter().map(Vec::len).sum()
    }

    /// Non-overlapping lag-`dt` differences `I(t) − I(t − dt)` within each
    /// segment, pooled in segment order.
    pub fn raw_returns(&self, dt: usize) -> Result<Vec<f64>, ReturnsError> {
        if dt == 0 {
            return Err(ReturnsError::ZeroInterval);
        }
        Ok(self
            .segments
            .iter()
            .flat_map(|seg| {
                seg.iter()
                    .step_by(dt)
                    .zip(seg.iter().skip(dt).step_by(dt))
                    .map(|(a, b)| b - a)
            })
            .collect())
    }

    /// Standardised lag-`dt` returns `g = (r − μ)/σ`.
    pub fn aggregate_returns(&self, dt: usize) -> Result<Aggregated, ReturnsError> {
        let raw = self.raw_returns(dt)?;
        standardize(&raw, dt)
    }
}

/// `(r − μ)/σ` with population moments.
pub fn standardize(raw: &[f64], dt: usize) -> Result<Aggregated, ReturnsError> {
    if raw.len() < 2 {
        return Err(ReturnsError::TooShort { dt, have: raw.len() });
    }
    let n = raw.len() as f64;
    let mean = raw.iter().sum::<f64>() / n;
    let var = raw.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    if !(std > 0.0) || std <= 1e-12 * libm::fabs(mean) {
        return Err(ReturnsError::Degenerate(dt));
    }
    let mut standardized: Vec<f64> = raw.iter().map(|r| (r - mean) / std).collect();
    // one correction pass so the sample moments come out exact to round-off
    let m2 = standardized.iter().sum::<f64>() / n;
    let s2 = libm::sqrt(standardized.iter().map(|g| (g - m2) * (g - m2)).sum::<f64>() / n);
    for g in &mut standardized {
        *g = (*g - m2) / s2;
    }
    Ok(Aggregated { dt, standardized, mean, std })
}

/// Pooled output of all rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub series: ReturnSeries,
    pub rounds: Vec<EventCounts>,
}

impl SimulationOutput {
    pub fn from_rounds(rounds: Vec<RoundOutput>) -> Self {
        let mut series = ReturnSeries::default();
        let mut counts = Vec::with_capacity(rounds.len());
        for r in rounds {
            counts.push(r.counts);
            series.segments.push(r.mid_prices);
        }
        Self { series, rounds: counts }
    }

    pub fn total_counts(&self) -> EventCounts {
        self.rounds.iter().fold(EventCounts::default(), |acc, c| EventCounts {
            orders: acc.orders + c.orders,
            trades: acc.trades + c.trades,
            rested: acc.rested + c.rested,
            rejected: acc.rejected + c.rejected,
            cancelled: acc.cancelled + c.cancelled,
        })
    }
}

/// All rounds, sequentially, pooled in round order.
pub fn run_simulation(config: &RunConfig) -> Result<SimulationOutput, EngineError> {
    config.validate()?;
    let rounds = (0..config.rounds)
        .map(|k| run_round(config, round_seed(config.seed, k)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SimulationOutput::from_rounds(rounds))
}
