//! Validation, reduction and end-to-end runs of one experiment.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use lodo_core::analysis::{bound_for_trace, check_bound, write_bound_csv, BoundCheck, Omega0Fit};
use lodo_core::linalg::eigenvalues;
use lodo_core::observer::{assemble_error_system, build_observer_with_margin, constant_gain, design_k_pole_placement};
use lodo_core::reduction::{build_rom, design_g_stabilizing, verify_moment_matching, MomentMatchingReport};
use lodo_core::simulation::{
    compute_j, integrate, max_over, standard_schedule, surrogate_beam_from, write_trace_csv, InputSchedule,
    IntegrateOptions, NoiseSpec, SegmentKind, SimTrace, StandardScheduleConfig,
};
use lodo_core::systems::{
    build_generator, validate_sa1, validate_sa2, Certification, ReducedOrderModel, RomInvariants, Sa1Report, Sa2Report,
    SignalGenerator, StateSpaceSystem,
};
use lodo_core::{Matrix, Spectrum, Vector};
use nalgebra::Complex;
use serde::Serialize;

use crate::config::{ExperimentConfig, GMode, KMode, ScheduleSpec, SystemSource, DEFAULT_K};
use crate::error::CliError;
use crate::matrix_market::load_matrix_market;

/// Relative tolerance of the transfer-function interpolation check.
pub const MOMENT_TOL: f64 = 1e-8;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TXT: &str = "report.txt";
pub const TRACE_CSV: &str = "trace.csv";
pub const BOUND_CSV: &str = "bound.csv";
pub const ROM_JSON: &str = "rom.json";

#[derive(Debug, Clone, Serialize)]
pub struct Validation {
    pub n: usize,
    pub nu: usize,
    pub sa1: Sa1Report,
    pub sa2: Sa2Report,
}

impl Validation {
    pub fn passes(&self) -> bool {
        self.sa1.passes() && self.sa2.passes()
    }

    fn failures(&self) -> Vec<String> {
        let mut f = self.sa1.failures();
        f.extend(self.sa2.failures());
        f
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Reduction {
    pub g_mode: String,
    pub moment: Vec<f64>,
    pub g: Vec<f64>,
    pub rom_abscissa: f64,
    pub invariants: RomInvariants,
    pub moment_matching: MomentMatchingReport,
}

impl Reduction {
    fn passes(&self) -> bool {
        self.invariants.holds() && self.moment_matching.passes()
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumExtremes {
    /// Largest real part.
    pub abscissa: f64,
    /// Smallest real part.
    pub min_real: f64,
    pub radius: f64,
}

impl From<&Spectrum> for SpectrumExtremes {
    fn from(s: &Spectrum) -> Self {
        Self {
            abscissa: s.abscissa(),
            min_real: s.min_real(),
            radius: s.radius(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ObserverSection {
    pub k_mode: String,
    pub k: Vec<f64>,
    pub certification: Certification,
    pub observer_spectrum: SpectrumExtremes,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorSystemSection {
    /// `σ(Ξ) = σ(A) ∪ σ(S − GL − K·CΠ)`.
    pub spectrum: SpectrumExtremes,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub phi_norm: f64,
    pub p_psi_norm: f64,
    pub lambda_min_p: f64,
    pub lambda_max_p: f64,
    pub lambda_min_q: f64,
    pub lyapunov_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentSummary {
    pub index: usize,
    pub kind: String,
    pub start: f64,
    pub end: f64,
    pub max_j: f64,
    /// `J` at the last grid point of the window.
    pub final_j: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSection {
    pub h: f64,
    pub t_final: f64,
    pub samples: usize,
    pub max_j: f64,
    pub segments: Vec<SegmentSummary>,
    pub target_snr_db: Option<f64>,
    pub realized_snr_db: Option<f64>,
    pub noise_sigma: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundSection {
    pub fit: Omega0Fit,
    pub initial_error: f64,
    pub check: BoundCheck,
    /// The bound covers noise-free measurements only.
    pub applicable: bool,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub kind: String,
    pub path: PathBuf,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passes: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub name: String,
    pub seed: u64,
    pub validation: Validation,
    pub reduction: Reduction,
    pub observer: ObserverSection,
    pub error_system: ErrorSystemSection,
    pub simulation: SimulationSection,
    pub bound: Option<BoundSection>,
    pub checks: Vec<CheckOutcome>,
    pub artifacts: Vec<Artifact>,
    pub success: bool,
}

/// Everything needed to simulate, built from a validated configuration.
pub struct Synthesis {
    pub sys: StateSpaceSystem,
    pub gen: SignalGenerator,
    pub validation: Validation,
    pub rom: ReducedOrderModel,
    pub reduction: Reduction,
}

pub fn load_system(cfg: &ExperimentConfig) -> Result<StateSpaceSystem, CliError> {
    match &cfg.system {
        SystemSource::Surrogate { params } => Ok(surrogate_beam_from(params)?),
        SystemSource::MatrixMarket { a, b, c } => {
            let (a, b, c) = (load_matrix_market(a)?, load_matrix_market(b)?, load_matrix_market(c)?);
            StateSpaceSystem::new(a, b, c).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

/// Checks the configuration, loads the plant and evaluates both assumption
/// reports. Fails only on configuration or loading errors.
pub fn validate(cfg: &ExperimentConfig) -> Result<(StateSpaceSystem, SignalGenerator, Validation), CliError> {
    cfg.check()?;
    let sys = load_system(cfg)?;
    let gen = build_generator(cfg.generator.dc, &cfg.generator.frequencies)
        .map_err(|e| CliError::Config(format!("generator: {e}")))?;
    let validation = Validation {
        n: sys.n(),
        nu: gen.nu(),
        sa1: validate_sa1(&sys)?,
        sa2: validate_sa2(&sys, &gen)?,
    };
    Ok((sys, gen, validation))
}

/// Validation followed by the choice of `G` and the reduced model.
pub fn reduce(cfg: &ExperimentConfig) -> Result<Synthesis, CliError> {
    let (sys, gen, validation) = validate(cfg)?;
    if !validation.passes() {
        return Err(CliError::Assumption(validation.failures().join("; ")));
    }
    let nu = gen.nu();
    let (g, g_mode) = match &cfg.g {
        GMode::Lyapunov { q_scale } => {
            let q = Matrix::identity(sys.n(), sys.n()) * *q_scale;
            (
                design_g_stabilizing(&sys, &gen, &q)?,
                format!("lyapunov (Q = {q_scale}·I)"),
            )
        }
        GMode::Explicit { values } => {
            if values.len() != nu {
                return Err(CliError::Config(format!(
                    "g.values has {} entries, expected {nu}",
                    values.len()
                )));
            }
            (Matrix::from_column_slice(nu, 1, values), "explicit".to_string())
        }
    };
    let rom = build_rom(&sys, &gen, &g)?;
    let invariants = rom.verify(&sys)?;
    let moment_matching = verify_moment_matching(&sys, &rom, MOMENT_TOL)?;
    let reduction = Reduction {
        g_mode,
        moment: rom.h().iter().copied().collect(),
        g: g.iter().copied().collect(),
        rom_abscissa: eigenvalues(&rom.f()).map_err(lodo_core::Error::from)?.abscissa(),
        invariants,
        moment_matching,
    };
    Ok(Synthesis {
        sys,
        gen,
        validation,
        rom,
        reduction,
    })
}

fn injection_gain(cfg: &ExperimentConfig, syn: &Synthesis) -> Result<(Matrix, String), CliError> {
    let nu = syn.gen.nu();
    Ok(match &cfg.k {
        KMode::Default => (constant_gain(nu, DEFAULT_K), format!("default ({DEFAULT_K}·1)")),
        KMode::Constant { value } => (constant_gain(nu, *value), format!("constant ({value}·1)")),
        KMode::Explicit { values } => {
            if values.len() != nu {
                return Err(CliError::Config(format!(
                    "k.values has {} entries, expected {nu}",
                    values.len()
                )));
            }
            (Matrix::from_column_slice(nu, 1, values), "explicit".into())
        }
        KMode::PolePlacement { poles } => {
            if poles.len() != nu {
                return Err(CliError::Config(format!(
                    "k.poles has {} entries, expected {nu}",
                    poles.len()
                )));
            }
            let poles: Vec<Complex<f64>> = poles.iter().map(|p| Complex::new(p[0], p[1])).collect();
            let k = design_k_pole_placement(&syn.gen, syn.rom.g(), syn.rom.h(), &poles)
                .map_err(|e| CliError::Config(e.to_string()))?;
            (k, "pole placement".into())
        }
    })
}

fn schedule_for(cfg: &ExperimentConfig) -> Result<InputSchedule, CliError> {
    let schedule = match &cfg.schedule {
        ScheduleSpec::Standard { window, amplitudes: a } => standard_schedule(
            *window,
            &StandardScheduleConfig {
                level_high: a.level_high,
                level_low: a.level_low,
                sine_amplitude: a.sine_amplitude,
                omega1: a.omega1,
                omega2: a.omega2,
                ramp_peak: a.ramp_peak,
                noise_variance: a.noise_variance,
                noise_period: a.noise_period,
                noise_seed: cfg.seed,
            },
        ),
        ScheduleSpec::Segments { segments } => InputSchedule::new(segments.clone()),
    };
    schedule.map_err(|e| CliError::Config(format!("schedule: {e}")))
}

fn initial(v: &Option<Vec<f64>>, dim: usize, what: &str) -> Result<Vector, CliError> {
    match v {
        None => Ok(Vector::zeros(dim)),
        Some(x) if x.len() == dim => Ok(Vector::from_column_slice(x)),
        Some(x) => Err(CliError::Config(format!(
            "{what} has {} entries, expected {dim}",
            x.len()
        ))),
    }
}

fn kind_name(kind: &SegmentKind) -> &'static str {
    match kind {
        SegmentKind::Constant { .. } => "constant",
        SegmentKind::Sine { .. } => "sine",
        SegmentKind::Multisine { .. } => "multisine",
        SegmentKind::Ramp { .. } => "ramp",
        SegmentKind::ZohNoise { .. } => "zoh_noise",
    }
}

fn segment_summaries(schedule: &InputSchedule, trace: &SimTrace, j: &[f64]) -> Vec<SegmentSummary> {
    let t_end = trace.times.last().copied().unwrap_or(0.0);
    schedule
        .segments()
        .iter()
        .enumerate()
        .filter(|(_, s)| s.start <= t_end)
        .map(|(index, s)| {
            let end = s.end.min(t_end);
            let range = trace.window(s.start, end);
            SegmentSummary {
                index,
                kind: kind_name(&s.kind).into(),
                start: s.start,
                end,
                max_j: max_over(trace, j, s.start, end),
                final_j: range.clone().last().map_or(f64::NAN, |k| j[k]),
            }
        })
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn trace_columns(trace: &SimTrace) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "u", "y", "y_meas", "J", "normE"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if let Some(d) = &trace.states {
        cols.extend((0..d.n).map(|i| format!("x_{i}")));
        cols.extend((0..d.nu).map(|i| format!("xi_{i}")));
    }
    cols
}

/// Full pipeline. Artifacts are written before any post-condition failure
/// is returned, so a failed run can still be inspected.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let syn = reduce(cfg)?;
    let (k, k_mode) = injection_gain(cfg, &syn)?;
    let obs = build_observer_with_margin(&syn.rom, &k, cfg.certification.margin)?;
    let observer_spectrum = eigenvalues(&obs.state_matrix()).map_err(lodo_core::Error::from)?;
    if !obs.is_certified() {
        return Err(CliError::Uncertified(format!(
            "spectral abscissa of S − GL − K·CΠ is {:.6e}, margin {}",
            obs.certification().spectral_abscissa,
            cfg.certification.margin
        )));
    }
    let n = syn.sys.n();
    let nu = syn.gen.nu();
    let q = Matrix::identity(n + nu, n + nu) * cfg.certification.q_scale;
    let err = assemble_error_system(&syn.sys, &syn.rom, &k, &q)?;
    let mut xi_spectrum = syn.sys.spectrum()?.clone();
    xi_spectrum
        .eigenvalues
        .extend(observer_spectrum.eigenvalues.iter().copied());

    let schedule = schedule_for(cfg)?;
    let t_final = cfg.integration.t_final.unwrap_or_else(|| schedule.end());
    let x0 = initial(&cfg.initial.x0, n, "initial.x0")?;
    let xi0 = initial(&cfg.initial.xi0, nu, "initial.xi0")?;
    let noise = cfg.noise.as_ref().map(|nc| NoiseSpec {
        snr_db: nc.snr_db,
        sample_period: nc.sample_period,
        seed: cfg.seed.wrapping_add(1),
    });
    let opts = IntegrateOptions {
        h: cfg.integration.h,
        t_final,
        x0: Some(x0.clone()),
        xi0: Some(xi0.clone()),
        record_states: cfg.output.full_state,
    };
    log::info!("integrating {} steps (n = {n}, nu = {nu})", (t_final / opts.h).round());
    let trace = integrate(&syn.sys, &obs, &schedule, noise.as_ref(), &opts)?;
    let j = compute_j(&trace)?;

    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut artifacts = Vec::new();
    let trace_path = dir.join(TRACE_CSV);
    write_trace_csv(&trace, &j, create(&trace_path)?)?;
    artifacts.push(Artifact {
        kind: "trace".into(),
        path: trace_path,
        columns: trace_columns(&trace),
    });

    let bound = if cfg.output.bound {
        let (fit, b) = bound_for_trace(&err, &syn.gen, syn.rom.pi(), &trace, &x0, &xi0, cfg.output.fit_method)?;
        let check = check_bound(&trace, &b)?;
        let bound_path = dir.join(BOUND_CSV);
        write_bound_csv(&trace, &b, create(&bound_path)?)?;
        artifacts.push(Artifact {
            kind: "bound".into(),
            path: bound_path,
            columns: vec!["t".into(), "bound".into(), "normE".into()],
        });
        let applicable = noise.is_none();
        let mut note = "sup over continuous time approximated by the simulation grid".to_string();
        if !applicable {
            note.push_str("; measurement noise is outside the bound's hypotheses, so violations are not failures");
        }
        Some(BoundSection {
            initial_error: b.initial_error,
            fit,
            check,
            applicable,
            note,
        })
    } else {
        None
    };

    let mut checks = vec![
        CheckOutcome {
            name: "rom invariants".into(),
            passes: syn.reduction.invariants.holds(),
            detail: format!(
                "Sylvester residual {:.3e} (bound {:.3e}), rank {} of {}",
                syn.reduction.invariants.sylvester_residual,
                syn.reduction.invariants.sylvester_bound,
                syn.reduction.invariants.rank,
                syn.reduction.invariants.nu
            ),
        },
        CheckOutcome {
            name: "moment matching".into(),
            passes: syn.reduction.moment_matching.passes(),
            detail: format!(
                "max transfer error {:.3e}, tolerance {:.0e}",
                syn.reduction.moment_matching.max_transfer_error(),
                MOMENT_TOL
            ),
        },
    ];
    if let Some(b) = &bound {
        checks.push(CheckOutcome {
            name: "error bound".into(),
            passes: b.check.passes || !b.applicable,
            detail: format!(
                "{} violations, max excess {:.3e} at t = {}",
                b.check.violations, b.check.max_violation, b.check.worst_time
            ),
        });
    }
    if let (Some(nc), Some(realized)) = (&cfg.noise, trace.realized_snr_db) {
        if nc.snr_db.is_finite() {
            checks.push(CheckOutcome {
                name: "snr".into(),
                passes: (realized - nc.snr_db).abs() <= 0.5,
                detail: format!("realized {realized:.3} dB, target {} dB", nc.snr_db),
            });
        }
    }
    let success = checks.iter().all(|c| c.passes);

    let report = RunReport {
        name: cfg.name.clone(),
        seed: cfg.seed,
        validation: syn.validation,
        reduction: syn.reduction,
        observer: ObserverSection {
            k_mode,
            k: k.iter().copied().collect(),
            certification: obs.certification(),
            observer_spectrum: SpectrumExtremes::from(&observer_spectrum),
        },
        error_system: ErrorSystemSection {
            spectrum: SpectrumExtremes::from(&xi_spectrum),
            c1: err.c1,
            c2: err.c2,
            c3: err.c3,
            phi_norm: err.phi_norm,
            p_psi_norm: err.p_psi_norm,
            lambda_min_p: err.lambda_min_p,
            lambda_max_p: err.lambda_max_p,
            lambda_min_q: err.lambda_min_q,
            lyapunov_residual: err.lyapunov_residual,
        },
        simulation: SimulationSection {
            h: trace.h,
            t_final,
            samples: trace.len(),
            max_j: j.iter().copied().fold(0.0, f64::max),
            segments: segment_summaries(&schedule, &trace, &j),
            target_snr_db: cfg.noise.as_ref().map(|n| n.snr_db),
            realized_snr_db: trace.realized_snr_db,
            noise_sigma: trace.noise_sigma,
            warnings: trace.warnings.clone(),
        },
        bound,
        checks,
        artifacts,
        success,
    };
    write_report(dir, &report)?;
    if !report.success {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.passes)
            .map(|c| c.name.as_str())
            .collect();
        return Err(CliError::CheckFailed(failed.join(", ")));
    }
    Ok(report)
}

/// Writes `report.json` and `report.txt` into `dir`.
pub fn write_report(dir: &Path, report: &RunReport) -> Result<(), CliError> {
    let json_path = dir.join(REPORT_JSON);
    serde_json::to_writer_pretty(create(&json_path)?, report)
        .map_err(|e| CliError::io(&json_path, std::io::Error::other(e)))?;
    let txt_path = dir.join(REPORT_TXT);
    std::fs::write(&txt_path, render_report(report)).map_err(|e| CliError::io(&txt_path, e))
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6e}")).collect();
    format!("[{}]", parts.join(", "))
}

pub fn render_validation(v: &Validation) -> String {
    let mut s = String::new();
    let yn = |b: bool| if b { "yes" } else { "NO" };
    let _ = writeln!(s, "plant: n = {}, generator: nu = {}", v.n, v.nu);
    let _ = writeln!(
        s,
        "  Hurwitz {} (abscissa {:.6e}), controllable {}, observable {}",
        yn(v.sa1.hurwitz),
        v.sa1.spectral_abscissa,
        yn(v.sa1.controllable),
        yn(v.sa1.observable)
    );
    let _ = writeln!(
        s,
        "  generator observable {}, spectra disjoint {} (separation {:.3e}), imaginary eigenvalues simple {}",
        yn(v.sa2.generator_observable),
        yn(v.sa2.disjoint),
        v.sa2.min_separation,
        yn(v.sa2.imaginary_simple)
    );
    for w in &v.sa2.warnings {
        let _ = writeln!(s, "  warning: {w}");
    }
    s
}

pub fn render_reduction(r: &Reduction) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "G mode: {}", r.g_mode);
    let _ = writeln!(s, "  moment C*Pi = {}", fmt_vec(&r.moment));
    let _ = writeln!(s, "  G = {}", fmt_vec(&r.g));
    let _ = writeln!(s, "  S - GL abscissa {:.6e}", r.rom_abscissa);
    let _ = writeln!(
        s,
        "  Sylvester residual {:.3e} (bound {:.3e}), rank(Pi) = {}",
        r.invariants.sylvester_residual, r.invariants.sylvester_bound, r.invariants.rank
    );
    for c in &r.moment_matching.transfer {
        let _ = writeln!(
            s,
            "  s = {:+.4e}{:+.4e}i: plant {:+.6e}{:+.6e}i, reduced {:+.6e}{:+.6e}i, error {:.3e}",
            c.point_re, c.point_im, c.full_re, c.full_im, c.rom_re, c.rom_im, c.error
        );
    }
    s
}

pub fn render_report(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "experiment {} (seed {})", r.name, r.seed);
    let _ = writeln!(s, "status: {}", if r.success { "ok" } else { "FAILED" });
    s.push_str(&render_validation(&r.validation));
    s.push_str(&render_reduction(&r.reduction));
    let o = &r.observer;
    let _ = writeln!(s, "K mode: {}", o.k_mode);
    let _ = writeln!(s, "  K = {}", fmt_vec(&o.k));
    let _ = writeln!(
        s,
        "  observer abscissa {:.6e} (margin {})",
        o.certification.spectral_abscissa, o.certification.margin
    );
    let e = &r.error_system;
    let _ = writeln!(
        s,
        "error system: abscissa {:.6e}, min real part {:.6e}, radius {:.6e}",
        e.spectrum.abscissa, e.spectrum.min_real, e.spectrum.radius
    );
    let _ = writeln!(s, "  c1 = {:.6e}, c2 = {:.6e}, c3 = {:.6e}", e.c1, e.c2, e.c3);
    let sim = &r.simulation;
    let _ = writeln!(
        s,
        "simulation: h = {}, t_final = {}, {} samples",
        sim.h, sim.t_final, sim.samples
    );
    if let (Some(t), Some(re)) = (sim.target_snr_db, sim.realized_snr_db) {
        let _ = writeln!(s, "  SNR target {t} dB, realized {re:.3} dB");
    }
    let _ = writeln!(
        s,
        "  {:>3}  {:<10} {:>12} {:>12} {:>12} {:>12}",
        "seg", "kind", "start", "end", "max J", "final J"
    );
    for g in &sim.segments {
        let _ = writeln!(
            s,
            "  {:>3}  {:<10} {:>12} {:>12} {:>12.4e} {:>12.4e}",
            g.index, g.kind, g.start, g.end, g.max_j, g.final_j
        );
    }
    for w in &sim.warnings {
        let _ = writeln!(s, "  warning: {w}");
    }
    if let Some(b) = &r.bound {
        let _ = writeln!(
            s,
            "bound: {} fit, tau = {:.6e}, omega0 = {}",
            b.fit.method,
            b.fit.tau,
            fmt_vec(&b.fit.omega0)
        );
        let _ = writeln!(
            s,
            "  {} violations, max excess {:.3e} at t = {} ({})",
            b.check.violations, b.check.max_violation, b.check.worst_time, b.note
        );
    }
    for c in &r.checks {
        let _ = writeln!(
            s,
            "check {}: {} ({})",
            c.name,
            if c.passes { "pass" } else { "FAIL" },
            c.detail
        );
    }
    for a in &r.artifacts {
        let _ = writeln!(s, "artifact {}: {}", a.kind, a.path.display());
    }
    s
}

/// ROM-only output of `lodo reduce`.
#[derive(Debug, Clone, Serialize)]
pub struct ReduceReport {
    pub name: String,
    pub validation: Validation,
    pub reduction: Reduction,
    pub f: Vec<Vec<f64>>,
    pub pi_shape: (usize, usize),
}

pub fn reduce_experiment(cfg: &ExperimentConfig) -> Result<ReduceReport, CliError> {
    let syn = reduce(cfg)?;
    let f = syn.rom.f();
    let report = ReduceReport {
        name: cfg.name.clone(),
        f: f.row_iter().map(|r| r.iter().copied().collect()).collect(),
        pi_shape: syn.rom.pi().shape(),
        validation: syn.validation,
        reduction: syn.reduction,
    };
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(ROM_JSON);
    serde_json::to_writer_pretty(create(&path)?, &report).map_err(|e| CliError::io(&path, std::io::Error::other(e)))?;
    if !report.reduction.passes() {
        return Err(CliError::CheckFailed(
            "reduced model fails its invariants or moment matching".into(),
        ));
    }
    Ok(report)
}
