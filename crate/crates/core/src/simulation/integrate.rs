use nalgebra_sparse::CsrMatrix;

use super::noise::{noise_sigma, snr_db, GaussianStream, NoiseSpec};
use super::schedule::InputSchedule;
use super::SimTrace;
use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, Matrix, Vector};
use crate::systems::{LowDimObserver, StateSpaceSystem};

/// Step size, horizon and initial conditions of one run.
#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    pub h: f64,
    pub t_final: f64,
    /// Plant initial state; zero when absent.
    pub x0: Option<Vector>,
    /// Observer initial state; zero when absent.
    pub xi0: Option<Vector>,
    /// Keep `x` and `ξ̂` at every grid point.
    pub record_states: bool,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self {
            h: 0.01,
            t_final: 10.0,
            x0: None,
            xi0: None,
            record_states: false,
        }
    }
}

struct Plant {
    a: CsrMatrix<f64>,
    b: Vector,
    c: Vector,
}

impl Plant {
    fn rate(&self, x: &Vector, u: f64, out: &mut Vector) {
        let offsets = self.a.row_offsets();
        let cols = self.a.col_indices();
        let vals = self.a.values();
        for i in 0..out.len() {
            let mut acc = self.b[i] * u;
            for p in offsets[i]..offsets[i + 1] {
                acc += vals[p] * x[cols[p]];
            }
            out[i] = acc;
        }
    }

    fn output(&self, x: &Vector) -> f64 {
        self.c.dot(x)
    }
}

struct Observer {
    m: Matrix,
    g: Vector,
    k: Vector,
}

impl Observer {
    fn rate(&self, xi: &Vector, u: f64, y_meas: f64, out: &mut Vector) {
        out.gemv(1.0, &self.m, xi, 0.0);
        out.axpy(u, &self.g, 1.0);
        out.axpy(y_meas, &self.k, 1.0);
    }
}

/// Zero-order-held noise realization.
struct HeldNoise {
    period: f64,
    values: Vec<f64>,
}

impl HeldNoise {
    fn at(&self, t: f64, left: bool) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        let x = t / self.period;
        let j = if left {
            x.ceil() as isize - 1
        } else {
            x.floor() as isize
        };
        self.values[j.clamp(0, self.values.len() as isize - 1) as usize]
    }
}

fn step_count(h: f64, t_final: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite() && t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "step and horizon must be positive and finite, got h={h}, t_final={t_final}"
        )));
    }
    let steps = (t_final / h).round();
    if (steps * h - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "horizon {t_final} is not an integer multiple of the step {h}"
        )));
    }
    Ok(steps as usize)
}

fn initial(v: &Option<Vector>, dim: usize, name: &str) -> Result<Vector> {
    match v {
        None => Ok(Vector::zeros(dim)),
        Some(v) if v.len() == dim && v.iter().all(|x| x.is_finite()) => Ok(v.clone()),
        Some(v) => Err(Error::InvalidInput(format!(
            "{name} must be a finite vector of length {dim}, got length {}",
            v.len()
        ))),
    }
}

/// Output `y = Cx` of the plant alone on the step grid.
fn plant_outputs(plant: &Plant, schedule: &InputSchedule, x0: &Vector, h: f64, steps: usize) -> Vec<f64> {
    let n = x0.len();
    let mut x = x0.clone();
    let (mut k1, mut k2, mut k3, mut k4) = (Vector::zeros(n), Vector::zeros(n), Vector::zeros(n), Vector::zeros(n));
    let mut tmp = Vector::zeros(n);
    let mut ys = Vec::with_capacity(steps + 1);
    ys.push(plant.output(&x));
    for step in 0..steps {
        let t = step as f64 * h;
        let t_next = (step + 1) as f64 * h;
        let (u1, um, u4) = (schedule.eval(t), schedule.eval(t + 0.5 * h), schedule.eval_left(t_next));
        plant.rate(&x, u1, &mut k1);
        tmp.copy_from(&x);
        tmp.axpy(0.5 * h, &k1, 1.0);
        plant.rate(&tmp, um, &mut k2);
        tmp.copy_from(&x);
        tmp.axpy(0.5 * h, &k2, 1.0);
        plant.rate(&tmp, um, &mut k3);
        tmp.copy_from(&x);
        tmp.axpy(h, &k3, 1.0);
        plant.rate(&tmp, u4, &mut k4);
        rk4_combine(&mut x, h, &k1, &k2, &k3, &k4);
        ys.push(plant.output(&x));
    }
    ys
}

fn rk4_combine(x: &mut Vector, h: f64, k1: &Vector, k2: &Vector, k3: &Vector, k4: &Vector) {
    let w = h / 6.0;
    for i in 0..x.len() {
        x[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Classical fixed-step RK4 on the coupled plant and observer.
///
/// The observer sees `y_meas = Cx + η`, with `η` held between noise sample
/// instants and scaled so that the SNR of `η` against `y` on the step grid
/// equals the target, `y` being taken from a noise-free pass over the same
/// grid. Inputs are evaluated at
/// stage times with the left limit at the end of each step, so piecewise
/// inputs with breakpoints on the grid are integrated without loss of order.
pub fn integrate(
    sys: &StateSpaceSystem,
    obs: &LowDimObserver,
    schedule: &InputSchedule,
    noise: Option<&NoiseSpec>,
    opts: &IntegrateOptions,
) -> Result<SimTrace> {
    let n = sys.n();
    let nu = obs.nu();
    if obs.pi().nrows() != n {
        return Err(Error::InvalidInput(format!(
            "observer lift has {} rows but the plant has {n} states",
            obs.pi().nrows()
        )));
    }
    let h = opts.h;
    let steps = step_count(h, opts.t_final)?;
    if schedule.end() < opts.t_final * (1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!(
            "input schedule ends at {} before the horizon {}",
            schedule.end(),
            opts.t_final
        )));
    }
    let x0 = initial(&opts.x0, n, "x0")?;
    let xi0 = initial(&opts.xi0, nu, "xi0")?;

    let obs_m = obs.state_matrix();
    let rho = sys.spectrum()?.radius().max(spectral_radius(&obs_m)?);
    let mut warnings = Vec::new();
    if h * rho >= 2.0 {
        return Err(Error::StepTooLarge(h * rho));
    }
    if h * rho > 1.0 {
        let msg = format!("h * spectral radius = {:.3} exceeds 1; accuracy may suffer", h * rho);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    if !obs.is_certified() {
        let msg = format!(
            "observer is not certified (spectral abscissa {:.3e})",
            obs.certification().spectral_abscissa
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let plant = Plant {
        a: CsrMatrix::from(sys.a()),
        b: sys.b().column(0).into_owned(),
        c: sys.c().row(0).transpose(),
    };
    let observer = Observer {
        m: obs_m,
        g: obs.g().column(0).into_owned(),
        k: obs.k().column(0).into_owned(),
    };

    let mut realized_snr_db = None;
    let mut noise_sd = 0.0;
    let held = match noise {
        Some(spec) => {
            spec.validate()?;
            let ys = plant_outputs(&plant, schedule, &x0, h, steps);
            let count = (opts.t_final / spec.sample_period).floor() as usize + 2;
            let mut stream = GaussianStream::new(spec.seed);
            let mut held = HeldNoise {
                period: spec.sample_period,
                values: (0..count).map(|_| stream.sample()).collect(),
            };
            let raw_grid: Vec<f64> = (0..=steps).map(|k| held.at(k as f64 * h, false)).collect();
            noise_sd = noise_sigma(&ys, &raw_grid, spec.snr_db)?;
            held.values.iter_mut().for_each(|v| *v *= noise_sd);
            let eta_grid: Vec<f64> = raw_grid.iter().map(|v| noise_sd * v).collect();
            realized_snr_db = Some(snr_db(&ys, &eta_grid));
            held
        }
        None => HeldNoise {
            period: 1.0,
            values: Vec::new(),
        },
    };

    let mut trace = SimTrace::with_capacity(steps + 1, h, n, nu, opts.record_states);
    trace.warnings = warnings;
    trace.realized_snr_db = realized_snr_db;
    trace.noise_sigma = noise_sd;

    let mut x = x0;
    let mut xi = xi0;
    let zeros_n = || Vector::zeros(n);
    let zeros_nu = || Vector::zeros(nu);
    let (mut kx1, mut kx2, mut kx3, mut kx4) = (zeros_n(), zeros_n(), zeros_n(), zeros_n());
    let (mut kq1, mut kq2, mut kq3, mut kq4) = (zeros_nu(), zeros_nu(), zeros_nu(), zeros_nu());
    let (mut xt, mut qt) = (zeros_n(), zeros_nu());
    let mut lifted = zeros_n();

    let record = |trace: &mut SimTrace, t: f64, x: &Vector, xi: &Vector, lifted: &mut Vector| -> Result<()> {
        lifted.gemv(1.0, obs.pi(), xi, 0.0);
        let mut e2 = 0.0;
        for i in 0..n {
            let d = x[i] - lifted[i];
            e2 += d * d;
        }
        let norm_x = x.norm();
        if !(norm_x.is_finite() && e2.is_finite()) {
            return Err(Error::NonFiniteState(t));
        }
        let y = plant.output(x);
        trace.times.push(t);
        trace.u.push(schedule.eval(t));
        trace.y.push(y);
        trace.y_meas.push(y + held.at(t, false));
        trace.norm_e.push(e2.sqrt());
        trace.norm_x.push(norm_x);
        if let Some(dump) = trace.states.as_mut() {
            dump.data.extend(x.iter());
            dump.data.extend(xi.iter());
        }
        Ok(())
    };

    record(&mut trace, 0.0, &x, &xi, &mut lifted)?;
    for step in 0..steps {
        let t = step as f64 * h;
        let t_mid = t + 0.5 * h;
        let t_next = (step + 1) as f64 * h;
        let (u1, um, u4) = (schedule.eval(t), schedule.eval(t_mid), schedule.eval_left(t_next));
        let (e1, em, e4) = (held.at(t, false), held.at(t_mid, false), held.at(t_next, true));

        plant.rate(&x, u1, &mut kx1);
        observer.rate(&xi, u1, plant.output(&x) + e1, &mut kq1);

        xt.copy_from(&x);
        xt.axpy(0.5 * h, &kx1, 1.0);
        qt.copy_from(&xi);
        qt.axpy(0.5 * h, &kq1, 1.0);
        plant.rate(&xt, um, &mut kx2);
        observer.rate(&qt, um, plant.output(&xt) + em, &mut kq2);

        xt.copy_from(&x);
        xt.axpy(0.5 * h, &kx2, 1.0);
        qt.copy_from(&xi);
        qt.axpy(0.5 * h, &kq2, 1.0);
        plant.rate(&xt, um, &mut kx3);
        observer.rate(&qt, um, plant.output(&xt) + em, &mut kq3);

        xt.copy_from(&x);
        xt.axpy(h, &kx3, 1.0);
        qt.copy_from(&xi);
        qt.axpy(h, &kq3, 1.0);
        plant.rate(&xt, u4, &mut kx4);
        observer.rate(&qt, u4, plant.output(&xt) + e4, &mut kq4);

        rk4_combine(&mut x, h, &kx1, &kx2, &kx3, &kx4);
        rk4_combine(&mut xi, h, &kq1, &kq2, &kq3, &kq4);
        record(&mut trace, t_next, &x, &xi, &mut lifted)?;
    }
    Ok(trace)
}
