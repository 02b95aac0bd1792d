//! Uniformly sampled waveforms and the operations defined on them: Nyquist
//! pulse synthesis, pulse-train replication, numerical differentiation and
//! the error and spectral metrics used to judge a pre-compensated link.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::{Error, Result};

/// A real waveform on the uniform grid `start_time_s + n / sample_rate_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    sample_rate_hz: f64,
    start_time_s: f64,
    samples: Vec<f64>,
}

impl SampledSignal {
    pub fn new(sample_rate_hz: f64, start_time_s: f64, samples: Vec<f64>) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(
                "sample_rate_hz",
                format!("must be finite and positive, got {sample_rate_hz}"),
            ));
        }
        if !start_time_s.is_finite() {
            return Err(Error::invalid("start_time_s", "must be finite"));
        }
        if let Some(n) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {n} is {}", samples[n])));
        }
        Ok(Self {
            sample_rate_hz,
            start_time_s,
            samples,
        })
    }

    /// Samples `f(t)` on `len` grid points starting at `start_time_s`.
    pub fn from_fn(
        sample_rate_hz: f64,
        start_time_s: f64,
        len: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let samples = (0..len)
            .map(|n| f(start_time_s + n as f64 / sample_rate_hz))
            .collect();
        Self::new(sample_rate_hz, start_time_s, samples)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn start_time_s(&self) -> f64 {
        self.start_time_s
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_interval_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn time_at(&self, n: usize) -> f64 {
        self.start_time_s + n as f64 / self.sample_rate_hz
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// New signal on the same grid with replaced samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(self.sample_rate_hz, self.start_time_s, samples)
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        self.with_samples(self.samples.iter().map(|v| k * v).collect())
    }

    /// Pads with `before` and `after` zeros, moving the time origin so every
    /// original sample keeps its time stamp.
    pub fn zero_padded(&self, before: usize, after: usize) -> Self {
        let mut samples = vec![0.0; before];
        samples.extend_from_slice(&self.samples);
        samples.resize(samples.len() + after, 0.0);
        Self {
            sample_rate_hz: self.sample_rate_hz,
            start_time_s: self.start_time_s - before as f64 / self.sample_rate_hz,
            samples,
        }
    }

    /// True when both signals share length, rate and time origin.
    pub fn same_grid(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self.sample_rate_hz == other.sample_rate_hz
            && (self.start_time_s - other.start_time_s).abs() * self.sample_rate_hz < 1e-6
    }

    fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "({} samples @ {} Hz from {} s) vs ({} samples @ {} Hz from {} s)",
                self.len(),
                self.sample_rate_hz,
                self.start_time_s,
                other.len(),
                other.sample_rate_hz,
                other.start_time_s
            )))
        }
    }
}

/// Raised-cosine Nyquist pulse parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NyquistPulseSpec {
    /// Spacing between zero crossings, seconds.
    pub ts_s: f64,
    /// Roll-off factor in `[0, 1]`.
    pub beta: f64,
    /// The pulse is truncated to `|t| <= span_zero_crossings * ts_s`.
    pub span_zero_crossings: u32,
}

/// Default truncation: eight zero crossings on either side of the peak.
pub const DEFAULT_SPAN_ZERO_CROSSINGS: u32 = 8;

impl NyquistPulseSpec {
    pub fn new(ts_s: f64, beta: f64, span_zero_crossings: u32) -> Result<Self> {
        let spec = Self {
            ts_s,
            beta,
            span_zero_crossings,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ts_s.is_finite() && self.ts_s > 0.0) {
            return Err(Error::invalid(
                "ts_s",
                format!("must be positive, got {}", self.ts_s),
            ));
        }
        if !(self.beta.is_finite() && (0.0..=1.0).contains(&self.beta)) {
            return Err(Error::invalid(
                "beta",
                format!("must lie in [0, 1], got {}", self.beta),
            ));
        }
        if self.span_zero_crossings == 0 {
            return Err(Error::invalid("span_zero_crossings", "must be at least 1"));
        }
        Ok(())
    }

    /// Value of the untruncated pulse at time `t` (seconds).
    ///
    /// The 0/0 points at `t = 0` and `|t| = ts / (2 beta)` evaluate to their
    /// analytic limits.
    pub fn evaluate(&self, t: f64) -> f64 {
        if t.abs() < 1e-18 {
            return 1.0;
        }
        let x = t / self.ts_s;
        let den = 1.0 - (2.0 * self.beta * x).powi(2);
        if den.abs() < 1e-9 {
            return self.singular_limit();
        }
        sinc(x) * (PI * self.beta * x).cos() / den
    }

    /// `lim h(t)` as `|t| -> ts / (2 beta)`; equals `(pi/4) sinc(1/(2 beta))`.
    pub fn singular_limit(&self) -> f64 {
        PI / 4.0 * sinc(1.0 / (2.0 * self.beta))
    }
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Samples the truncated Nyquist pulse on a grid symmetric about `t = 0`.
pub fn nyquist_pulse(spec: &NyquistPulseSpec, sample_rate_hz: f64) -> Result<SampledSignal> {
    spec.validate()?;
    if !(sample_rate_hz.is_finite() && sample_rate_hz * spec.ts_s >= 10.0 * (1.0 - 1e-12)) {
        return Err(Error::invalid(
            "sample_rate_hz",
            format!(
                "need at least 10 samples per zero-crossing interval ({:e} Hz), got {sample_rate_hz:e}",
                10.0 / spec.ts_s
            ),
        ));
    }
    // Half-width in samples; the small slack keeps exact multiples on the grid.
    let half = (spec.span_zero_crossings as f64 * spec.ts_s * sample_rate_hz * (1.0 + 1e-12))
        .floor() as i64;
    let samples = (-half..=half)
        .map(|n| spec.evaluate(n as f64 / sample_rate_hz))
        .collect();
    SampledSignal::new(sample_rate_hz, -half as f64 / sample_rate_hz, samples)
}

/// Repetition of a pulse at a fixed period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTrainSpec {
    pub period_s: f64,
    pub num_periods: u32,
}

impl PulseTrainSpec {
    pub fn new(period_s: f64, num_periods: u32) -> Result<Self> {
        let spec = Self {
            period_s,
            num_periods,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period_s.is_finite() && self.period_s > 0.0) {
            return Err(Error::invalid(
                "period_s",
                format!("must be positive, got {}", self.period_s),
            ));
        }
        if self.num_periods == 0 {
            return Err(Error::invalid("num_periods", "must be at least 1"));
        }
        Ok(())
    }

    /// Period expressed in samples, or an error if it is not an integer.
    pub fn period_samples(&self, sample_rate_hz: f64) -> Result<usize> {
        let exact = self.period_s * sample_rate_hz;
        let rounded = exact.round();
        if rounded < 1.0 || (exact - rounded).abs() > 1e-6 * rounded.max(1.0) {
            return Err(Error::PeriodOffGrid {
                period_s: self.period_s,
                sample_rate_hz,
            });
        }
        Ok(rounded as usize)
    }
}

/// Convolves a finite pulse with a Dirac comb of `num_periods` teeth.
///
/// Realized as shift-and-sum: copy `k` starts `k * period` samples after the
/// first. The result keeps the pulse's time origin and is
/// `(num_periods - 1) * period + pulse.len()` samples long.
pub fn dirac_comb_convolve(pulse: &SampledSignal, train: &PulseTrainSpec) -> Result<SampledSignal> {
    train.validate()?;
    let step = train.period_samples(pulse.sample_rate_hz())?;
    let copies = train.num_periods as usize;
    let mut out = vec![0.0; (copies - 1) * step + pulse.len()];
    for k in 0..copies {
        let offset = k * step;
        for (o, p) in out[offset..offset + pulse.len()]
            .iter_mut()
            .zip(pulse.samples())
        {
            *o += p;
        }
    }
    pulse.with_samples(out)
}

/// Central-difference derivative; one-sided differences at the two ends.
pub fn derivative(s: &SampledSignal) -> Result<SampledSignal> {
    let x = s.samples();
    let n = x.len();
    if n < 3 {
        return Err(Error::TooShort { needed: 3, got: n });
    }
    let rate = s.sample_rate_hz();
    let mut d = Vec::with_capacity(n);
    d.push((x[1] - x[0]) * rate);
    d.extend(x.windows(3).map(|w| (w[2] - w[0]) * rate / 2.0));
    d.push((x[n - 1] - x[n - 2]) * rate);
    s.with_samples(d)
}

/// `max |actual - ideal| / max |ideal|`.
pub fn residual_ratio(actual: &SampledSignal, ideal: &SampledSignal) -> Result<f64> {
    actual.check_same_grid(ideal)?;
    let peak = ideal.max_abs();
    if peak == 0.0 {
        return Err(Error::invalid("ideal", "signal is identically zero"));
    }
    let worst = actual
        .samples()
        .iter()
        .zip(ideal.samples())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(worst / peak)
}

/// Floor applied to empty bins so the dB scale stays finite.
const SPECTRUM_FLOOR_DB: f64 = -400.0;

/// Magnitude of the `num_bins`-point DFT of the zero-padded signal, as
/// `(frequency_hz, magnitude_db)` pairs for bins `0..=num_bins / 2`, in dB
/// relative to the strongest bin.
pub fn magnitude_spectrum(s: &SampledSignal, num_bins: usize) -> Result<Vec<(f64, f64)>> {
    if s.is_empty() {
        return Err(Error::TooShort { needed: 1, got: 0 });
    }
    if num_bins < s.len() {
        return Err(Error::invalid(
            "num_bins",
            format!(
                "must be at least the signal length {}, got {num_bins}",
                s.len()
            ),
        ));
    }
    let mut buf: Vec<Complex<f64>> = s.samples().iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(num_bins, Complex::new(0.0, 0.0));
    FftPlanner::new()
        .plan_fft_forward(num_bins)
        .process(&mut buf);

    let mags: Vec<f64> = buf[..=num_bins / 2].iter().map(|c| c.norm()).collect();
    let peak = mags.iter().cloned().fold(0.0_f64, f64::max);
    let bin_hz = s.sample_rate_hz() / num_bins as f64;
    Ok(mags
        .iter()
        .enumerate()
        .map(|(k, &m)| (k as f64 * bin_hz, to_db(m, peak)))
        .collect())
}

pub(crate) fn to_db(magnitude: f64, reference: f64) -> f64 {
    if reference == 0.0 || magnitude == 0.0 {
        return SPECTRUM_FLOOR_DB;
    }
    (20.0 * (magnitude / reference).log10()).max(SPECTRUM_FLOOR_DB)
}
