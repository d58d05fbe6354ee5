//! Counted-memory workspace and run metrics.
//!
//! Space claims are measured, not assumed: every working structure of the
//! reachability engine and the pseudoseparator construction charges its
//! footprint (in machine words) to a [`Workspace`]. Two channels are kept
//! strictly apart:
//!
//! * `Core` — the divide-and-conquer machinery itself: visited tables,
//!   pseudoseparators, separator working sets, recursion frames and
//!   base-case DFS state.
//! * `Conn` — the substituted subroutines that the space analysis treats
//!   separately: the bounded-workspace connectivity labeler that stands in
//!   for a logspace connectivity oracle, and the implicit-edge backend's
//!   per-block memo tables.
//!
//! The read-only input grid is never charged (standard convention for
//! space-bounded computation).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Accounting channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    Core,
    Conn,
}

#[derive(Debug, Error)]
pub enum MeterError {
    #[error("workspace accounting bug: channel balance would go negative ({live} {delta:+})")]
    NegativeBalance { live: i64, delta: i64 },
    #[error("scaling fit needs at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("scaling fit needs the sizes to span >= 2 decades (got {decades:.2})")]
    TooNarrow { decades: f64 },
}

/// Tracked allocation counters for one query.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    live: [i64; 2],
    peak: [i64; 2],
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Apply a signed word-count delta to a channel, maintaining peaks.
    pub fn track(&mut self, delta: i64, ch: Channel) -> Result<(), MeterError> {
        let i = ch as usize;
        let next = self.live[i] + delta;
        if next < 0 {
            return Err(MeterError::NegativeBalance {
                live: self.live[i],
                delta,
            });
        }
        self.live[i] = next;
        if next > self.peak[i] {
            self.peak[i] = next;
        }
        Ok(())
    }

    #[inline]
    pub fn charge(&mut self, words: usize, ch: Channel) {
        self.track(words as i64, ch).expect("charge");
    }

    #[inline]
    pub fn release(&mut self, words: usize, ch: Channel) {
        self.track(-(words as i64), ch).expect("release underflow");
    }

    pub fn live(&self, ch: Channel) -> i64 {
        self.live[ch as usize]
    }

    pub fn peak(&self, ch: Channel) -> i64 {
        self.peak[ch as usize]
    }
}

/// Per-run measurement record. Serializes to the one-object-per-run JSON
/// schema used by the CLI and the bench CSV.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub n: u64,
    pub m: u32,
    pub alpha: f64,
    pub beta: f64,
    pub mode: String,
    pub peak_core: u64,
    pub peak_conn: u64,
    pub queries: u64,
    pub depth: u32,
    pub ms: f64,
}

/// Least-squares fit of `log(peak)` against `log(n)`.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingFit {
    pub points: Vec<(u64, u64)>,
    pub slope: f64,
    pub r2: f64,
}

/// Fit the log-log exponent of a `(n, peak_words)` series. Requires at
/// least 4 points spanning at least two decades of `n`.
pub fn fit_scaling(points: &[(u64, u64)]) -> Result<ScalingFit, MeterError> {
    if points.len() < 4 {
        return Err(MeterError::TooFewPoints {
            need: 4,
            got: points.len(),
        });
    }
    let lo = points.iter().map(|p| p.0).min().unwrap().max(1);
    let hi = points.iter().map(|p| p.0).max().unwrap().max(1);
    let decades = (hi as f64 / lo as f64).log10();
    if decades < 2.0 {
        return Err(MeterError::TooNarrow { decades });
    }
    let xy: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, w)| ((n.max(1) as f64).ln(), (w.max(1) as f64).ln()))
        .collect();
    let k = xy.len() as f64;
    let sx: f64 = xy.iter().map(|p| p.0).sum();
    let sy: f64 = xy.iter().map(|p| p.1).sum();
    let sxx: f64 = xy.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = xy.iter().map(|p| p.0 * p.1).sum();
    let denom = k * sxx - sx * sx;
    let slope = (k * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / k;
    let mean_y = sy / k;
    let ss_tot: f64 = xy.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = xy
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(ScalingFit {
        points: points.to_vec(),
        slope,
        r2,
    })
}
