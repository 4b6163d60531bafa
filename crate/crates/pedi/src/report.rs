//! Tracking-error reports over episode logs.
//!
//! The table format is plain whitespace-separated text. Lines starting with
//! `#` are comments carrying the per-run summary; the first non-comment line
//! names the columns.

use pedi_core::params::CONTROL_PERIOD;
use pedi_core::sim::{tracking_metrics, TickRecord, TrackingMetrics};

use crate::{Error, Result};

pub const COLUMNS: [&str; 6] = ["tick", "time", "pos_mean", "pos_std", "ori_mean", "ori_std"];

/// Orientation error the learned tracking policy settles at, rad. Printed as a
/// reference next to the oracle controller's floor.
pub const LEARNED_ORIENTATION_FLOOR: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub tick: u64,
    pub time: f64,
    pub pos_mean: f64,
    pub pos_std: f64,
    pub ori_mean: f64,
    pub ori_std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: String,
    /// `None` when the run never started a trajectory.
    pub metrics: Option<TrackingMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport {
    pub rows: Vec<ReportRow>,
    pub runs: Vec<RunSummary>,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregates labelled episode logs. Rows stop at the shortest log.
pub fn tracking_report(logs: &[(String, &[TickRecord])]) -> Result<TrackingReport> {
    if logs.is_empty() {
        return Err(Error::Usage("tracking report needs at least one episode".to_string()));
    }
    let ticks = logs.iter().map(|(_, l)| l.len()).min().unwrap_or(0);
    let rows = (0..ticks)
        .map(|i| {
            let (pos_mean, pos_std) = mean_std(logs.iter().map(move |(_, l)| l[i].position_error));
            let (ori_mean, ori_std) = mean_std(logs.iter().map(move |(_, l)| l[i].orientation_error));
            let tick = logs[0].1[i].tick;
            ReportRow {
                tick,
                time: tick as f64 * CONTROL_PERIOD,
                pos_mean,
                pos_std,
                ori_mean,
                ori_std,
            }
        })
        .collect();
    let runs = logs
        .iter()
        .map(|(label, log)| RunSummary {
            label: label.clone(),
            metrics: tracking_metrics(log),
        })
        .collect();
    Ok(TrackingReport { rows, runs })
}

impl TrackingReport {
    fn metrics(&self) -> impl Iterator<Item = &TrackingMetrics> {
        self.runs.iter().filter_map(|r| r.metrics.as_ref())
    }

    /// Share of runs whose error reached its minimum within `seconds` of the
    /// manipulation start. Runs without a start count as misses.
    pub fn fraction_converged(&self, seconds: f64) -> f64 {
        let hits = self.metrics().filter(|m| m.time_to_min <= seconds).count();
        hits as f64 / self.runs.len() as f64
    }

    pub fn mean_steady_error(&self) -> Option<f64> {
        let v: Vec<f64> = self.metrics().map(|m| m.steady_error).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Mean steady-state orientation error of the runs, rad.
    pub fn orientation_floor(&self) -> Option<f64> {
        let v: Vec<f64> = self.metrics().map(|m| m.steady_orientation).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn summary_lines(&self) -> Vec<String> {
        let mut out = vec![format!(
            "run peak_error_m min_error_m time_to_min_s steady_error_m steady_orientation_rad"
        )];
        for r in &self.runs {
            out.push(match &r.metrics {
                Some(m) => format!(
                    "{} {:.6} {:.6} {:.2} {:.6} {:.4}",
                    r.label, m.peak_error, m.min_error, m.time_to_min, m.steady_error, m.steady_orientation
                ),
                None => format!("{} - - - - -", r.label),
            });
        }
        out.push(format!(
            "converged within 3.0 s: {:.0}% of {} runs",
            100.0 * self.fraction_converged(3.0),
            self.runs.len()
        ));
        if let Some(s) = self.mean_steady_error() {
            out.push(format!("steady-state position error: {s:.6} m"));
        }
        if let Some(o) = self.orientation_floor() {
            out.push(format!(
                "orientation floor: {o:.4} rad (learned policy reference {LEARNED_ORIENTATION_FLOOR:.1} rad)"
            ));
        }
        out
    }

    /// Summary as comments, then the per-tick table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for line in self.summary_lines() {
            s.push_str("# ");
            s.push_str(&line);
            s.push('\n');
        }
        s.push_str(&COLUMNS.join(" "));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{} {:.2} {:.6e} {:.6e} {:.6e} {:.6e}\n",
                r.tick, r.time, r.pos_mean, r.pos_std, r.ori_mean, r.ori_std
            ));
        }
        s
    }
}

/// Parses the numeric rows of a table written by [`TrackingReport::to_table`].
pub fn parse_table(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    let bad = |line: usize, msg: String| Error::Parse {
        path: "report".to_string(),
        line: line + 1,
        msg,
    };
    match lines.next() {
        Some((_, h)) if h.split_whitespace().eq(COLUMNS.iter().copied()) => {}
        Some((i, h)) => return Err(bad(i, format!("unexpected header {h:?}"))),
        None => return Err(bad(0, "missing header".to_string())),
    }
    lines
        .map(|(i, l)| {
            let v: Vec<f64> = l
                .split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|e| bad(i, format!("{x:?}: {e}"))))
                .collect::<Result<_>>()?;
            if v.len() != COLUMNS.len() {
                return Err(bad(i, format!("expected {} columns, found {}", COLUMNS.len(), v.len())));
            }
            Ok(ReportRow {
                tick: v[0] as u64,
                time: v[1],
                pos_mean: v[2],
                pos_std: v[3],
                ori_mean: v[4],
                ori_std: v[5],
            })
        })
        .collect()
}
