use serde::{Deserialize, Serialize};

use super::noise::GaussianStream;
use crate::error::{Error, Result};

/// One term `amplitude · sin(frequency · t + phase)` in absolute time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineComponent {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

impl SineComponent {
    fn eval(&self, t: f64) -> f64 {
        self.amplitude * (self.frequency * t + self.phase).sin()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentKind {
    Constant {
        level: f64,
    },
    Sine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    Multisine {
        #[serde(default)]
        offset: f64,
        components: Vec<SineComponent>,
    },
    /// Linear from `from` at the window start to `to` at the window end.
    Ramp {
        from: f64,
        to: f64,
    },
    /// Zero-mean Gaussian samples held for `sample_period` seconds.
    ZohNoise {
        variance: f64,
        sample_period: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    #[serde(flatten)]
    pub kind: SegmentKind,
}

/// Piecewise input on contiguous windows `[start, end)` starting at 0; the
/// last window is closed.
#[derive(Debug, Clone)]
pub struct InputSchedule {
    segments: Vec<Segment>,
    samples: Vec<Vec<f64>>,
}

impl InputSchedule {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidInput("input schedule has no segments".into()));
        }
        if segments[0].start != 0.0 {
            return Err(Error::InvalidInput(format!(
                "input schedule must start at 0, starts at {}",
                segments[0].start
            )));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.start.is_finite() && seg.end.is_finite() && seg.end > seg.start) {
                return Err(Error::InvalidInput(format!(
                    "segment {i} has an empty or non-finite window [{}, {})",
                    seg.start, seg.end
                )));
            }
            if i > 0 && segments[i - 1].end != seg.start {
                return Err(Error::InvalidInput(format!(
                    "segments {} and {i} are not contiguous ({} != {})",
                    i - 1,
                    segments[i - 1].end,
                    seg.start
                )));
            }
            let finite = match &seg.kind {
                SegmentKind::Constant { level } => level.is_finite(),
                SegmentKind::Sine {
                    amplitude,
                    frequency,
                    phase,
                } => amplitude.is_finite() && frequency.is_finite() && phase.is_finite(),
                SegmentKind::Multisine { offset, components } => {
                    offset.is_finite()
                        && components
                            .iter()
                            .all(|c| c.amplitude.is_finite() && c.frequency.is_finite() && c.phase.is_finite())
                }
                SegmentKind::Ramp { from, to } => from.is_finite() && to.is_finite(),
                SegmentKind::ZohNoise {
                    variance,
                    sample_period,
                    ..
                } => {
                    if !(*sample_period > 0.0 && sample_period.is_finite()) {
                        return Err(Error::InvalidInput(format!(
                            "segment {i}: noise sample period must be positive, got {sample_period}"
                        )));
                    }
                    *variance >= 0.0 && variance.is_finite()
                }
            };
            if !finite {
                return Err(Error::InvalidInput(format!("segment {i} has invalid parameters")));
            }
        }
        let samples = segments
            .iter()
            .map(|seg| match seg.kind {
                SegmentKind::ZohNoise {
                    variance,
                    sample_period,
                    seed,
                } => {
                    let count = ((seg.end - seg.start) / sample_period).ceil() as usize + 1;
                    let sd = variance.sqrt();
                    let mut stream = GaussianStream::new(seed);
                    (0..count).map(|_| sd * stream.sample()).collect()
                }
                _ => Vec::new(),
            })
            .collect();
        Ok(Self { segments, samples })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    /// Segment boundaries, including 0 and the final end.
    pub fn boundaries(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.segments.iter().map(|s| s.end))
            .collect()
    }

    /// Index of the segment containing `t` (right-continuous).
    pub fn segment_index(&self, t: f64) -> usize {
        self.locate(t, false)
    }

    fn locate(&self, t: f64, left: bool) -> usize {
        let idx = if left {
            self.segments.partition_point(|s| s.end < t)
        } else {
            self.segments.partition_point(|s| s.end <= t)
        };
        idx.min(self.segments.len() - 1)
    }

    /// `u(t)`, right-continuous at breakpoints.
    pub fn eval(&self, t: f64) -> f64 {
        self.eval_at(t, false)
    }

    /// Left limit `u(t⁻)`, used at the end of an integration step.
    pub fn eval_left(&self, t: f64) -> f64 {
        self.eval_at(t, true)
    }

    fn eval_at(&self, t: f64, left: bool) -> f64 {
        let i = self.locate(t, left);
        let seg = &self.segments[i];
        match &seg.kind {
            SegmentKind::Constant { level } => *level,
            SegmentKind::Sine {
                amplitude,
                frequency,
                phase,
            } => amplitude * (frequency * t + phase).sin(),
            SegmentKind::Multisine { offset, components } => offset + components.iter().map(|c| c.eval(t)).sum::<f64>(),
            SegmentKind::Ramp { from, to } => from + (to - from) * (t - seg.start) / (seg.end - seg.start),
            SegmentKind::ZohNoise { sample_period, .. } => {
                let table = &self.samples[i];
                let x = (t - seg.start) / sample_period;
                let j = if left {
                    x.ceil() as isize - 1
                } else {
                    x.floor() as isize
                };
                table[j.clamp(0, table.len() as isize - 1) as usize]
            }
        }
    }
}

/// Amplitudes and timing of the seven-window benchmark schedule. The
/// amplitudes are nominal defaults, not calibrated values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StandardScheduleConfig {
    pub level_high: f64,
    pub level_low: f64,
    pub sine_amplitude: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub ramp_peak: f64,
    pub noise_variance: f64,
    pub noise_period: f64,
    pub noise_seed: u64,
}

impl Default for StandardScheduleConfig {
    fn default() -> Self {
        Self {
            level_high: 1.0,
            level_low: -1.0,
            sine_amplitude: 1.0,
            omega1: 0.104,
            omega2: 0.569,
            ramp_peak: 2.0,
            noise_variance: 4.0,
            noise_period: 1.0,
            noise_seed: 0,
        }
    }
}

/// Seven windows of length `T` over `[0, 7T]`: `+level`, `−level`,
/// `sin(ω1 t)`, `sin(ω1 t) + sin(ω2 t)`, ramp up, ramp down, ZOH noise.
pub fn standard_schedule(t_window: f64, cfg: &StandardScheduleConfig) -> Result<InputSchedule> {
    if !(t_window > 0.0 && t_window.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "window length must be positive, got {t_window}"
        )));
    }
    let a = cfg.sine_amplitude;
    let kinds = [
        SegmentKind::Constant { level: cfg.level_high },
        SegmentKind::Constant { level: cfg.level_low },
        SegmentKind::Sine {
            amplitude: a,
            frequency: cfg.omega1,
            phase: 0.0,
        },
        SegmentKind::Multisine {
            offset: 0.0,
            components: vec![
                SineComponent {
                    amplitude: a,
                    frequency: cfg.omega1,
                    phase: 0.0,
                },
                SineComponent {
                    amplitude: a,
                    frequency: cfg.omega2,
                    phase: 0.0,
                },
            ],
        },
        SegmentKind::Ramp {
            from: 0.0,
            to: cfg.ramp_peak,
        },
        SegmentKind::Ramp {
            from: cfg.ramp_peak,
            to: 0.0,
        },
        SegmentKind::ZohNoise {
            variance: cfg.noise_variance,
            sample_period: cfg.noise_period,
            seed: cfg.noise_seed,
        },
    ];
    let segments = kinds
        .into_iter()
        .enumerate()
        .map(|(i, kind)| Segment {
            start: i as f64 * t_window,
            end: (i + 1) as f64 * t_window,
            kind,
        })
        .collect();
    InputSchedule::new(segments)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(start: f64, end: f64, level: f64) -> Segment {
        Segment {
            start,
            end,
            kind: SegmentKind::Constant { level },
        }
    }

    #[test]
    fn standard_layout() {
        let s = standard_schedule(1000.0, &StandardScheduleConfig::default()).unwrap();
        assert_eq!(
            s.boundaries(),
            vec![0.0, 1000.0, 2000.0, 3000.0, 4000.0, 5000.0, 6000.0, 7000.0]
        );
        match s.segments()[6].kind {
            SegmentKind::ZohNoise {
                variance,
                sample_period,
                ..
            } => {
                assert_eq!((variance, sample_period), (4.0, 1.0));
            }
            ref k => panic!("unexpected {k:?}"),
        }
        assert_eq!(s.eval(2500.0), (0.104f64 * 2500.0).sin());
        assert_eq!(s.eval(500.0), 1.0);
        assert_eq!(s.eval(1000.0), -1.0);
        assert_eq!(s.eval_left(1000.0), 1.0);
        assert!((s.eval(4500.0) - 1.0).abs() < 1e-15);
        assert!((s.eval_left(5000.0) - 2.0).abs() < 1e-15);
        assert!((s.eval(5000.0) - 2.0).abs() < 1e-15);

        let small = standard_schedule(10.0, &StandardScheduleConfig::default()).unwrap();
        assert_eq!(small.boundaries().len(), 8);
        assert_eq!(small.end(), 70.0);
    }

    #[test]
    fn zoh_noise_holds_samples() {
        let s = InputSchedule::new(vec![Segment {
            start: 0.0,
            end: 10.0,
            kind: SegmentKind::ZohNoise {
                variance: 4.0,
                sample_period: 1.0,
                seed: 3,
            },
        }])
        .unwrap();
        assert_eq!(s.eval(2.0), s.eval(2.999));
        assert_eq!(s.eval_left(3.0), s.eval(2.5));
        assert_ne!(s.eval(3.0), s.eval(2.5));
        assert_eq!(s.eval_left(10.0), s.eval(9.5));
    }

    #[test]
    fn rejects_bad_windows() {
        assert!(InputSchedule::new(vec![]).is_err());
        assert!(InputSchedule::new(vec![constant(1.0, 2.0, 0.0)]).is_err());
        assert!(InputSchedule::new(vec![constant(0.0, 1.0, 0.0), constant(1.5, 2.0, 0.0)]).is_err());
        assert!(InputSchedule::new(vec![constant(0.0, 0.0, 0.0)]).is_err());
        let bad = Segment {
            start: 0.0,
            end: 1.0,
            kind: SegmentKind::ZohNoise {
                variance: 1.0,
                sample_period: 0.0,
                seed: 0,
            },
        };
        assert!(InputSchedule::new(vec![bad]).is_err());
        assert!(standard_schedule(0.0, &StandardScheduleConfig::default()).is_err());
    }
}
