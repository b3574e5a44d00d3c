//! Coupled plant/observer integration, input schedules, measurement noise
//! and the normalized estimation error `J`.

mod beam;
mod integrate;
mod noise;
mod schedule;

use std::io::Write;

use crate::error::{Error, Result};

pub use beam::{surrogate_beam, surrogate_beam_from, BeamParams};
pub use integrate::{integrate, IntegrateOptions};
pub use noise::{add_output_noise, snr_db, GaussianStream, NoiseSpec, NoisyOutput};
pub use schedule::{standard_schedule, InputSchedule, Segment, SegmentKind, SineComponent, StandardScheduleConfig};

/// Row-major `[x; ξ̂]` snapshots, one row per grid point.
#[derive(Debug, Clone)]
pub struct StateDump {
    pub n: usize,
    pub nu: usize,
    pub data: Vec<f64>,
}

impl StateDump {
    fn row(&self, k: usize) -> &[f64] {
        let w = self.n + self.nu;
        &self.data[k * w..(k + 1) * w]
    }

    pub fn x(&self, k: usize) -> &[f64] {
        &self.row(k)[..self.n]
    }

    pub fn xi(&self, k: usize) -> &[f64] {
        &self.row(k)[self.n..]
    }
}

/// Scalar series on the uniform grid `t_k = k·h`.
#[derive(Debug, Clone)]
pub struct SimTrace {
    pub h: f64,
    pub n: usize,
    pub nu: usize,
    pub times: Vec<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub y_meas: Vec<f64>,
    /// `‖x − Πξ̂‖`.
    pub norm_e: Vec<f64>,
    pub norm_x: Vec<f64>,
    pub states: Option<StateDump>,
    pub warnings: Vec<String>,
    pub realized_snr_db: Option<f64>,
    pub noise_sigma: f64,
}

impl SimTrace {
    fn with_capacity(len: usize, h: f64, n: usize, nu: usize, states: bool) -> Self {
        Self {
            h,
            n,
            nu,
            times: Vec::with_capacity(len),
            u: Vec::with_capacity(len),
            y: Vec::with_capacity(len),
            y_meas: Vec::with_capacity(len),
            norm_e: Vec::with_capacity(len),
            norm_x: Vec::with_capacity(len),
            states: states.then(|| StateDump {
                n,
                nu,
                data: Vec::with_capacity(len * (n + nu)),
            }),
            warnings: Vec::new(),
            realized_snr_db: None,
            noise_sigma: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Indices with `t0 ≤ t_k ≤ t1`.
    pub fn window(&self, t0: f64, t1: f64) -> std::ops::Range<usize> {
        let lo = self.times.partition_point(|&t| t < t0);
        let hi = self.times.partition_point(|&t| t <= t1);
        lo..hi.max(lo)
    }
}

/// `J(t_k) = 100·‖x(t_k) − Πξ̂(t_k)‖ / max_j ‖x(t_j)‖`.
pub fn compute_j(trace: &SimTrace) -> Result<Vec<f64>> {
    let peak = trace.norm_x.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Degenerate("state is identically zero, so J is undefined".into()));
    }
    Ok(trace.norm_e.iter().map(|e| 100.0 * e / peak).collect())
}

/// Largest entry of `values` over the grid window `[t0, t1]`.
pub fn max_over(trace: &SimTrace, values: &[f64], t0: f64, t1: f64) -> f64 {
    values[trace.window(t0, t1)]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// CSV with header `t,u,y,y_meas,J,normE`, followed by `x_i` and `xi_i`
/// columns when the trace carries states.
pub fn write_trace_csv<W: Write>(trace: &SimTrace, j: &[f64], out: W) -> Result<()> {
    if j.len() != trace.len() {
        return Err(Error::InvalidInput(format!(
            "J has {} samples but the trace has {}",
            j.len(),
            trace.len()
        )));
    }
    let io = |e: csv::Error| Error::Internal(format!("CSV write failed: {e}"));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header: Vec<String> = ["t", "u", "y", "y_meas", "J", "normE"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if let Some(d) = &trace.states {
        header.extend((0..d.n).map(|i| format!("x_{i}")));
        header.extend((0..d.nu).map(|i| format!("xi_{i}")));
    }
    w.write_record(&header).map_err(io)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for (k, &jk) in j.iter().enumerate() {
        row.clear();
        for v in [
            trace.times[k],
            trace.u[k],
            trace.y[k],
            trace.y_meas[k],
            jk,
            trace.norm_e[k],
        ] {
            row.push(v.to_string());
        }
        if let Some(d) = &trace.states {
            row.extend(d.x(k).iter().chain(d.xi(k)).map(|v| v.to_string()));
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::Internal(format!("CSV write failed: {e}")))?;
    Ok(())
}
