//! Log-space probability model: marginal likelihood of the network given the
//! groups, the group-assignment prior, and the Poisson prior on `k`.

mod jtable;
mod quadrature;

use std::ops::Add;
use std::sync::OnceLock;

pub use jtable::{JTable, DEFAULT_LOG_FLOOR, DEFAULT_QUADRATURE_ORDER, MAX_TABLE_NODES};
pub use quadrature::gauss_legendre_unit;

use crate::assignment::GroupAssignment;
use crate::error::{Error, Result};
use crate::network::TemporalNetwork;
use crate::stats::SufficientStats;

/// A natural-log probability. `-inf` marks an impossible event.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub const ONE: LogProb = LogProb(0.0);
    pub const IMPOSSIBLE: LogProb = LogProb(f64::NEG_INFINITY);

    /// Panics on NaN.
    pub fn new(value: f64) -> Self {
        assert!(!value.is_nan(), "log-probability is NaN");
        LogProb(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp()
    }

    pub fn is_impossible(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

impl Add for LogProb {
    type Output = LogProb;

    fn add(self, rhs: LogProb) -> LogProb {
        if self.is_impossible() || rhs.is_impossible() {
            LogProb::IMPOSSIBLE
        } else {
            LogProb(self.0 + rhs.0)
        }
    }
}

impl std::iter::Sum for LogProb {
    fn sum<I: Iterator<Item = LogProb>>(iter: I) -> Self {
        iter.fold(LogProb::ONE, Add::add)
    }
}

const LN_FACTORIAL_TABLE: usize = 1 << 16;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACTORIAL_TABLE);
        let mut acc = 0.0f64;
        for x in 0..LN_FACTORIAL_TABLE {
            if x >= 256 {
                t.push(stirling_ln_factorial(x as f64));
            } else {
                if x > 1 {
                    acc += (x as f64).ln();
                }
                t.push(acc);
            }
        }
        t
    })
}

fn stirling_ln_factorial(x: f64) -> f64 {
    // ln Γ(x + 1) with the asymptotic series truncated after x^-7.
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + series
}

/// `ln(x!)`.
#[inline]
pub fn ln_factorial(x: u64) -> f64 {
    match ln_factorial_table().get(x as usize) {
        Some(&v) => v,
        None => stirling_ln_factorial(x as f64),
    }
}

/// `ln C(n, c)` for `c <= n`.
#[inline]
pub fn ln_binomial(n: u64, c: u64) -> f64 {
    debug_assert!(c <= n);
    ln_factorial(n) - ln_factorial(c) - ln_factorial(n - c)
}

/// `ln[ m! (t-m)! / (t+1)! ]`: one layer-group factor of the marginal likelihood.
#[inline]
pub(crate) fn likelihood_term(t: u64, m: u64) -> f64 {
    ln_factorial(m) + ln_factorial(t - m) - ln_factorial(t + 1)
}

/// Unchecked transition term; see [`log_transition`].
#[inline]
pub(crate) fn transition_term(jt: &JTable, sizes: [u64; 2], stays: [u64; 2]) -> f64 {
    let mut acc = 0.0;
    for s in 0..2 {
        let (n, c) = (sizes[s], stays[s]);
        if n > 0 {
            acc += jt.log_j((n - c) as usize, n as usize) - ln_binomial(n, c);
        }
    }
    acc
}

/// Marginal likelihood `ln P(A | g, k)` with uniform priors on every edge
/// probability: `sum over layers and groups of ln[ m! (t-m)! / (t+1)! ]`.
pub fn log_marginal_likelihood(stats: &SufficientStats) -> Result<LogProb> {
    let mut acc = 0.0;
    for r in 0..stats.k() {
        for layer in 0..stats.layer_count() {
            let (t, m) = (stats.pair_count(r, layer), stats.edge_count(r, layer));
            if m > t {
                return Err(Error::Inconsistent(format!(
                    "group {r} layer {layer}: {m} edges among {t} pairs"
                )));
            }
            acc += likelihood_term(t, m);
        }
    }
    Ok(LogProb::new(acc))
}

/// Prior of the first layer's memberships: each group's size uniform on
/// `0..=n`, then a uniform subset of that size.
pub fn log_first_layer_prior(g: &GroupAssignment) -> LogProb {
    let n = g.node_count() as u64;
    let acc: f64 = (1..g.k())
        .map(|r| {
            let size = g.group_size(r, 0) as u64;
            ln_factorial(size) + ln_factorial(n - size) - ln_factorial(n + 1)
        })
        .sum();
    LogProb::new(acc)
}

/// Probability of one group's indicator row given the previous layer's row,
/// from the previous indicator counts `(n_0, n_1)` and the stay counts
/// `(c_00, c_11)`:
/// `sum over s of [ -ln C(n_s, c_ss) + ln J(n_s - c_ss, n_s) ]`.
pub fn log_transition(jt: &JTable, sizes: [u64; 2], stays: [u64; 2]) -> Result<LogProb> {
    for s in 0..2 {
        if stays[s] > sizes[s] {
            return Err(Error::Range {
                what: "stay count",
                value: stays[s] as usize,
                limit: sizes[s] as usize + 1,
            });
        }
        if sizes[s] as usize > jt.n_max() {
            return Err(Error::Range {
                what: "indicator count",
                value: sizes[s] as usize,
                limit: jt.n_max() + 1,
            });
        }
    }
    Ok(LogProb::new(transition_term(jt, sizes, stays)))
}

/// `ln F(g | k)`: all layer-to-layer transitions of groups `1..k`.
pub fn log_f(stats: &SufficientStats, jt: &JTable) -> Result<LogProb> {
    if stats.node_count() > jt.n_max() {
        return Err(Error::Range {
            what: "node count",
            value: stats.node_count(),
            limit: jt.n_max() + 1,
        });
    }
    Ok(LogProb::new(log_f_unchecked(stats, jt)))
}

pub(crate) fn log_f_unchecked(stats: &SufficientStats, jt: &JTable) -> f64 {
    let mut acc = 0.0;
    for r in 1..stats.k() {
        for layer in 1..stats.layer_count() {
            let (sizes, stays) = stats.transition_counts(r, layer);
            acc += transition_term(jt, sizes, stays);
        }
    }
    acc
}

/// Poisson prior with mean one on `k - 1`: `ln(e^-1 / (k-1)!)`.
pub fn log_k_prior(k: usize) -> Result<LogProb> {
    if k == 0 {
        return Err(Error::Range {
            what: "group count",
            value: 0,
            limit: 1,
        });
    }
    Ok(LogProb::new(-1.0 - ln_factorial(k as u64 - 1)))
}

/// Unnormalized log posterior `ln P(k) + ln P(A|g,k) + ln P(g_1|k) + ln F(g|k)`.
pub fn log_joint(
    net: &TemporalNetwork,
    g: &GroupAssignment,
    stats: &SufficientStats,
    jt: &JTable,
) -> Result<LogProb> {
    if stats.k() != g.k() || g.node_count() != net.node_count() {
        return Err(Error::DimensionMismatch(
            "statistics, assignment and network disagree".into(),
        ));
    }
    Ok(log_k_prior(g.k())?
        + log_marginal_likelihood(stats)?
        + log_first_layer_prior(g)
        + log_f(stats, jt)?)
}

/// The part of the log posterior that the acceptance ratio compares:
/// marginal likelihood plus `ln F`.
pub(crate) fn log_target_terms(stats: &SufficientStats, jt: &JTable) -> f64 {
    let mut acc = log_f_unchecked(stats, jt);
    for r in 0..stats.k() {
        for layer in 0..stats.layer_count() {
            acc += likelihood_term(stats.pair_count(r, layer), stats.edge_count(r, layer));
        }
    }
    acc
}
