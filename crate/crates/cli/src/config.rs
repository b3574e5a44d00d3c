//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use lodo_core::analysis::FitMethod;
use lodo_core::simulation::{BeamParams, Segment};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

fn one() -> f64 {
    1.0
}

fn default_h() -> f64 {
    0.01
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub system: SystemSource,
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub g: GMode,
    #[serde(default)]
    pub k: KMode,
    pub schedule: ScheduleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default)]
    pub integration: IntegrationSpec,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub certification: CertificationSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemSource {
    Surrogate {
        #[serde(default)]
        params: BeamParams,
    },
    /// Paths are relative to the configuration file.
    MatrixMarket { a: PathBuf, b: PathBuf, c: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    #[serde(default)]
    pub dc: bool,
    #[serde(default)]
    pub frequencies: Vec<f64>,
}

/// Choice of `G` within the moment-matching family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GMode {
    /// Lyapunov-weighted projection with `Q = q_scale·I`.
    Lyapunov {
        #[serde(default = "one")]
        q_scale: f64,
    },
    Explicit {
        values: Vec<f64>,
    },
}

impl Default for GMode {
    fn default() -> Self {
        GMode::Lyapunov { q_scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KMode {
    /// `K = 100·1`.
    #[default]
    Default,
    /// `K = value·1`.
    Constant {
        value: f64,
    },
    Explicit {
        values: Vec<f64>,
    },
    /// Observer poles as `[re, im]` pairs, closed under conjugation.
    PolePlacement {
        poles: Vec<[f64; 2]>,
    },
}

pub const DEFAULT_K: f64 = 100.0;

/// Amplitudes of the seven-window schedule; the noise seed comes from the
/// top-level seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleAmplitudes {
    pub level_high: f64,
    pub level_low: f64,
    pub sine_amplitude: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub ramp_peak: f64,
    pub noise_variance: f64,
    pub noise_period: f64,
}

impl Default for ScheduleAmplitudes {
    fn default() -> Self {
        let d = lodo_core::simulation::StandardScheduleConfig::default();
        Self {
            level_high: d.level_high,
            level_low: d.level_low,
            sine_amplitude: d.sine_amplitude,
            omega1: d.omega1,
            omega2: d.omega2,
            ramp_peak: d.ramp_peak,
            noise_variance: d.noise_variance,
            noise_period: d.noise_period,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduleSpec {
    /// Seven windows of length `window`.
    Standard {
        window: f64,
        #[serde(default)]
        amplitudes: ScheduleAmplitudes,
    },
    Segments {
        segments: Vec<Segment>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub snr_db: f64,
    #[serde(default = "one")]
    pub sample_period: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSpec {
    #[serde(default = "default_h")]
    pub h: f64,
    /// Defaults to the end of the schedule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        Self {
            h: default_h(),
            t_final: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificationSpec {
    /// Required distance of the observer spectrum from the imaginary axis.
    #[serde(default)]
    pub margin: f64,
    /// Lyapunov weight `Q = q_scale·I` of the error-system certificate.
    #[serde(default = "one")]
    pub q_scale: f64,
}

impl Default for CertificationSpec {
    fn default() -> Self {
        Self {
            margin: 0.0,
            q_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// Relative to the configuration file.
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub full_state: bool,
    #[serde(default)]
    pub bound: bool,
    #[serde(default)]
    pub fit_method: FitMethod,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            full_state: false,
            bound: false,
            fit_method: FitMethod::Minimax,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub h: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub full_state: bool,
    pub bound: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(base);
        if cfg.name.is_empty() {
            cfg.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let SystemSource::MatrixMarket { a, b, c } = &mut self.system {
            fix(a);
            fix(b);
            fix(c);
        }
        fix(&mut self.output.dir);
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(h) = o.h {
            self.integration.h = h;
        }
        if let Some(dir) = &o.out_dir {
            self.output.dir = dir.clone();
        }
        self.output.full_state |= o.full_state;
        self.output.bound |= o.bound;
    }

    /// Structural checks that need no numerics.
    pub fn check(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.integration.h > 0.0 && self.integration.h.is_finite()) {
            return bad(format!("integration.h must be positive, got {}", self.integration.h));
        }
        if let Some(t) = self.integration.t_final {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("integration.t_final must be positive, got {t}"));
            }
        }
        if !self.generator.dc && self.generator.frequencies.is_empty() {
            return bad("generator needs dc = true or at least one frequency".into());
        }
        if let GMode::Lyapunov { q_scale } = self.g {
            if !(q_scale > 0.0 && q_scale.is_finite()) {
                return bad(format!("g.q_scale must be positive, got {q_scale}"));
            }
        }
        if !(self.certification.q_scale > 0.0 && self.certification.q_scale.is_finite()) {
            return bad(format!(
                "certification.q_scale must be positive, got {}",
                self.certification.q_scale
            ));
        }
        if !(self.certification.margin >= 0.0 && self.certification.margin.is_finite()) {
            return bad(format!(
                "certification.margin must be >= 0, got {}",
                self.certification.margin
            ));
        }
        if let Some(n) = &self.noise {
            if !(n.sample_period > 0.0 && n.sample_period.is_finite()) || n.snr_db.is_nan() {
                return bad("noise needs a positive sample_period and a numeric snr_db".into());
            }
        }
        if let ScheduleSpec::Standard { window, .. } = self.schedule {
            if !(window > 0.0 && window.is_finite()) {
                return bad(format!("schedule.window must be positive, got {window}"));
            }
        }
        Ok(())
    }

    /// `ν` implied by the generator section.
    pub fn nu(&self) -> usize {
        usize::from(self.generator.dc) + 2 * self.generator.frequencies.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lodo_core::simulation::SegmentKind;
    use proptest::prelude::*;

    const EXAMPLE: &str = r#"
seed = 4

[system]
source = "surrogate"
params = { n = 20 }

[generator]
dc = true
frequencies = [0.104]

[k]
mode = "explicit"
values = [1.0, 2.0, 3.0]

[schedule]
kind = "segments"

[[schedule.segments]]
start = 0.0
end = 10.0
kind = "constant"
level = 1.5

[[schedule.segments]]
start = 10.0
end = 20.0
kind = "sine"
amplitude = 1.0
frequency = 0.104

[noise]
snr_db = 20.0
"#;

    #[test]
    fn parses_example() {
        let cfg = ExperimentConfig::from_toml(EXAMPLE).unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.nu(), 3);
        assert!(matches!(cfg.system, SystemSource::Surrogate { params } if params.n == 20 && params.mass == 40.0));
        assert_eq!(cfg.g, GMode::Lyapunov { q_scale: 1.0 });
        match &cfg.schedule {
            ScheduleSpec::Segments { segments } => {
                assert_eq!(segments[0].kind, SegmentKind::Constant { level: 1.5 });
                assert_eq!(
                    segments[1].kind,
                    SegmentKind::Sine {
                        amplitude: 1.0,
                        frequency: 0.104,
                        phase: 0.0
                    }
                );
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(cfg.noise.as_ref().unwrap().sample_period, 1.0);
        assert_eq!(cfg.integration.h, 0.01);
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let no_source = EXAMPLE.replace("source = \"surrogate\"", "");
        assert!(ExperimentConfig::from_toml(&no_source).is_err());
        let unknown = format!("{EXAMPLE}\n[extra]\nx = 1\n");
        assert!(ExperimentConfig::from_toml(&unknown).is_err());
        let empty_gen = EXAMPLE.replace("dc = true\nfrequencies = [0.104]", "");
        assert!(ExperimentConfig::from_toml(&empty_gen).is_err());
        let bad_h = format!("{EXAMPLE}\n[integration]\nh = -1.0\n");
        assert!(ExperimentConfig::from_toml(&bad_h).is_err());
    }

    #[test]
    fn overrides_apply() {
        let mut cfg = ExperimentConfig::from_toml(EXAMPLE).unwrap();
        cfg.apply(&Overrides {
            seed: Some(9),
            h: Some(0.05),
            out_dir: Some("elsewhere".into()),
            full_state: true,
            bound: false,
        });
        assert_eq!((cfg.seed, cfg.integration.h), (9, 0.05));
        assert_eq!(cfg.output.dir, PathBuf::from("elsewhere"));
        assert!(cfg.output.full_state && !cfg.output.bound);
    }

    fn finite() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1e6f64..1e6,
            Just(0.104),
            Just(-0.0f64).prop_map(|v| v.abs()),
            1e-9f64..1e-3
        ]
    }

    prop_compose! {
        fn configs()(
            seed in any::<u64>(),
            n in 1usize..40,
            freqs in proptest::collection::vec(0.01f64..5.0, 0..3),
            k in prop_oneof![
                Just(KMode::Default),
                finite().prop_map(|value| KMode::Constant { value }),
                proptest::collection::vec(finite(), 1..4).prop_map(|values| KMode::Explicit { values }),
                proptest::collection::vec((-5.0f64..-0.1, -2.0f64..2.0), 1..3)
                    .prop_map(|p| KMode::PolePlacement { poles: p.into_iter().map(|(a, b)| [a, b]).collect() }),
            ],
            level in finite(),
            window in 0.5f64..2000.0,
            standard in any::<bool>(),
            snr in prop_oneof![Just(None), (0.0f64..60.0).prop_map(Some), Just(Some(f64::INFINITY))],
            h in 1e-4f64..0.5,
            t_final in proptest::option::of(1.0f64..100.0),
            x0 in proptest::option::of(proptest::collection::vec(finite(), 0..4)),
            bound in any::<bool>(),
        ) -> ExperimentConfig {
            let schedule = if standard {
                ScheduleSpec::Standard { window, amplitudes: ScheduleAmplitudes { level_high: level, ..Default::default() } }
            } else {
                ScheduleSpec::Segments {
                    segments: vec![
                        Segment { start: 0.0, end: window, kind: SegmentKind::Constant { level } },
                        Segment { start: window, end: 2.0 * window, kind: SegmentKind::ZohNoise { variance: 4.0, sample_period: 1.0, seed } },
                    ],
                }
            };
            ExperimentConfig {
                name: format!("cfg-{n}"),
                seed,
                system: if n % 2 == 0 {
                    SystemSource::Surrogate { params: BeamParams { n: 2 * n, ..Default::default() } }
                } else {
                    SystemSource::MatrixMarket { a: "a.mtx".into(), b: "dir/b.mtx".into(), c: "/abs/c.mtx".into() }
                },
                generator: GeneratorSpec { dc: true, frequencies: freqs },
                g: if n % 3 == 0 { GMode::Explicit { values: vec![level, 1.0] } } else { GMode::Lyapunov { q_scale: window } },
                k,
                schedule,
                noise: snr.map(|snr_db| NoiseConfig { snr_db, sample_period: 1.0 }),
                integration: IntegrationSpec { h, t_final },
                initial: InitialState { x0, xi0: None },
                certification: CertificationSpec { margin: h, q_scale: 1.0 },
                output: OutputSpec { dir: "out/x".into(), full_state: !bound, bound, fit_method: if bound { FitMethod::LeastSquares } else { FitMethod::Minimax } },
            }
        }
    }

    proptest! {
        #[test]
        fn toml_round_trip(cfg in configs()) {
            let text = cfg.to_toml().unwrap();
            let back: ExperimentConfig = toml::from_str(&text).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
