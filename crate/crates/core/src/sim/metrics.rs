//! Summary statistics of a tracking log.

use crate::params::CONTROL_PERIOD;

use super::episode::TickRecord;

/// Errors within this distance of the episode minimum count as having reached it, m.
pub const MINIMUM_BAND: f64 = 0.005;
/// Time after manipulation start from which errors count as steady state, s.
pub const SETTLE_SECONDS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingMetrics {
    /// Tick at which the final trajectory clock started.
    pub start_tick: usize,
    /// Largest position error within the first second after the start, m.
    pub peak_error: f64,
    pub min_error: f64,
    /// Seconds from the start until the error first comes within
    /// [`MINIMUM_BAND`] of its minimum.
    pub time_to_min: f64,
    /// Mean position error from [`SETTLE_SECONDS`] after the start on, m.
    pub steady_error: f64,
    /// Mean orientation error over the same span, rad.
    pub steady_orientation: f64,
}

/// Metrics measured from the last clock restart, which for the scripted
/// expert is the switch from approach to manipulation. `None` for logs that
/// end before the settling time.
pub fn tracking_metrics(log: &[TickRecord]) -> Option<TrackingMetrics> {
    let start = log.iter().rposition(|r| r.phase_time == 0.0)?;
    let run = &log[start..];
    let settle = libm::round(SETTLE_SECONDS / CONTROL_PERIOD) as usize;
    if run.len() <= settle {
        return None;
    }
    let min_error = run.iter().map(|r| r.position_error).fold(f64::INFINITY, f64::min);
    let reached = run.iter().position(|r| r.position_error <= min_error + MINIMUM_BAND)?;
    let first_second = libm::round(1.0 / CONTROL_PERIOD) as usize;
    let peak_error = run[..first_second.min(run.len())]
        .iter()
        .map(|r| r.position_error)
        .fold(0.0, f64::max);
    let tail = &run[settle..];
    let n = tail.len() as f64;
    Some(TrackingMetrics {
        start_tick: start,
        peak_error,
        min_error,
        time_to_min: reached as f64 * CONTROL_PERIOD,
        steady_error: tail.iter().map(|r| r.position_error).sum::<f64>() / n,
        steady_orientation: tail.iter().map(|r| r.orientation_error).sum::<f64>() / n,
    })
}
