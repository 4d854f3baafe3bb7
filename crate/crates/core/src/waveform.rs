//! Periodic arterial pressure source.
//!
//! A waveform is a base shape (two-harmonic analytic profile or tabulated
//! samples, periodically extended) affinely rescaled so that its extrema
//! over one period hit the systolic/diastolic anchors exactly.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Base shape before rescaling to the SP/DP anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WaveShape {
    /// `cos(2*pi*t/T + phase1) + amp2 * cos(4*pi*t/T + phase2)`.
    TwoHarmonic {
        amp2: f64,
        phase1: f64,
        phase2: f64,
    },
    /// (t, value) samples over one period, linearly interpolated and
    /// periodically extended.
    Tabulated { samples: Vec<(f64, f64)> },
    /// Time-independent pressure (degenerate, anchors equal).
    Constant,
}

impl WaveShape {
    /// Default systolic-looking profile: sharp primary peak near 0.2 T with
    /// a secondary bump in late systole.
    pub fn default_two_harmonic() -> WaveShape {
        WaveShape::TwoHarmonic {
            amp2: 0.3,
            phase1: -0.4 * std::f64::consts::PI,
            phase2: -0.8 * std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    period: f64,
    sp: f64,
    dp: f64,
    shape: WaveShape,
    base_min: f64,
    base_max: f64,
    peak_offset: f64,
}

impl Waveform {
    /// Two-harmonic waveform with the default shape.
    pub fn two_harmonic(period: f64, sp: f64, dp: f64) -> Result<Waveform> {
        Waveform::from_shape(WaveShape::default_two_harmonic(), period, sp, dp)
    }

    /// Builds a waveform from an explicit shape and anchors. Invariants:
    /// period > 0 and sp > dp (except for `Constant`).
    pub fn from_shape(shape: WaveShape, period: f64, sp: f64, dp: f64) -> Result<Waveform> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "waveform period must be positive, got {period}"
            )));
        }
        if let WaveShape::Constant = shape {
            return Ok(Waveform {
                period,
                sp,
                dp: sp,
                shape,
                base_min: 0.0,
                base_max: 1.0,
                peak_offset: 0.0,
            });
        }
        if !(sp > dp) {
            return Err(CoreError::UnphysiologicalPulse(format!(
                "systolic anchor must exceed diastolic anchor (sp={sp}, dp={dp})"
            )));
        }
        if let WaveShape::Tabulated { samples } = &shape {
            if samples.len() < 2 {
                return Err(CoreError::InvalidParameter(
                    "tabulated waveform needs at least two samples".into(),
                ));
            }
            let mut prev = f64::NEG_INFINITY;
            for &(t, v) in samples {
                if !t.is_finite() || !v.is_finite() {
                    return Err(CoreError::InvalidParameter(
                        "tabulated waveform has non-finite samples".into(),
                    ));
                }
                if t <= prev {
                    return Err(CoreError::InvalidParameter(
                        "tabulated waveform times must be strictly increasing".into(),
                    ));
                }
                if t < 0.0 || t > period {
                    return Err(CoreError::InvalidParameter(format!(
                        "tabulated waveform time {t} outside [0, {period}]"
                    )));
                }
                prev = t;
            }
        }

        let mut wf = Waveform {
            period,
            sp,
            dp,
            shape,
            base_min: 0.0,
            base_max: 1.0,
            peak_offset: 0.0,
        };
        let (min, max, argmax) = wf.scan_base_extrema();
        if !(max > min) {
            return Err(CoreError::InvalidParameter(
                "waveform shape is constant; use the constant kind instead".into(),
            ));
        }
        wf.base_min = min;
        wf.base_max = max;
        wf.peak_offset = argmax;
        Ok(wf)
    }

    /// Tabulated waveform rescaled to the anchors.
    pub fn tabulated(samples: Vec<(f64, f64)>, period: f64, sp: f64, dp: f64) -> Result<Waveform> {
        Waveform::from_shape(WaveShape::Tabulated { samples }, period, sp, dp)
    }

    /// Time-independent source.
    pub fn constant(pressure: f64) -> Waveform {
        Waveform::from_shape(WaveShape::Constant, 1.0, pressure, pressure)
            .expect("constant shape is always valid")
    }

    fn base_value(&self, t: f64) -> f64 {
        let tau = t.rem_euclid(self.period);
        match &self.shape {
            WaveShape::Constant => 0.5,
            WaveShape::TwoHarmonic {
                amp2,
                phase1,
                phase2,
            } => {
                let theta = TAU * tau / self.period;
                (theta + phase1).cos() + amp2 * (2.0 * theta + phase2).cos()
            }
            WaveShape::Tabulated { samples } => {
                // Wrap-around linear interpolation between the last and
                // (first + period) samples.
                let (first, last) = (samples[0], *samples.last().unwrap());
                let (t0, v0, t1, v1) = if tau < first.0 {
                    (last.0 - self.period, last.1, first.0, first.1)
                } else if tau >= last.0 {
                    (last.0, last.1, first.0 + self.period, first.1)
                } else {
                    let i = samples.partition_point(|&(ts, _)| ts <= tau) - 1;
                    (samples[i].0, samples[i].1, samples[i + 1].0, samples[i + 1].1)
                };
                if t1 == t0 {
                    v0
                } else {
                    v0 + (v1 - v0) * (tau - t0) / (t1 - t0)
                }
            }
        }
    }

    fn scan_base_extrema(&self) -> (f64, f64, f64) {
        match &self.shape {
            WaveShape::Constant => (0.0, 1.0, 0.0),
            WaveShape::Tabulated { samples } => {
                // Piecewise-linear extrema sit on the samples themselves.
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                let mut argmax = 0.0;
                for &(t, v) in samples {
                    if v > max {
                        max = v;
                        argmax = t;
                    }
                    min = min.min(v);
                }
                (min, max, argmax)
            }
            WaveShape::TwoHarmonic { .. } => {
                // Dense scan plus golden-section refinement of the peak.
                let n = 4096;
                let mut min = f64::INFINITY;
                let mut max = f64::NEG_INFINITY;
                let mut argmax = 0.0;
                for i in 0..n {
                    let t = self.period * i as f64 / n as f64;
                    let v = self.base_value(t);
                    if v > max {
                        max = v;
                        argmax = t;
                    }
                    min = min.min(v);
                }
                let h = self.period / n as f64;
                let (mut lo, mut hi) = (argmax - h, argmax + h);
                let inv_phi = 0.618_033_988_749_894_9_f64;
                for _ in 0..80 {
                    let a = hi - inv_phi * (hi - lo);
                    let b = lo + inv_phi * (hi - lo);
                    if self.base_value(a) < self.base_value(b) {
                        lo = a;
                    } else {
                        hi = b;
                    }
                }
                argmax = 0.5 * (lo + hi);
                max = max.max(self.base_value(argmax));
                (min, max, argmax.rem_euclid(self.period))
            }
        }
    }

    /// Pressure (mmHg) at time `t`, periodically extended.
    pub fn pressure(&self, t: f64) -> f64 {
        if let WaveShape::Constant = self.shape {
            return self.sp;
        }
        let b = self.base_value(t);
        self.dp + (self.sp - self.dp) * (b - self.base_min) / (self.base_max - self.base_min)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn systolic(&self) -> f64 {
        self.sp
    }

    pub fn diastolic(&self) -> f64 {
        self.dp
    }

    /// Offset within one cycle at which the source pressure peaks.
    pub fn peak_offset(&self) -> f64 {
        self.peak_offset
    }
}
