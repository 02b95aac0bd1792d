//! Trainable FIR pre-compensator.
//!
//! The forward path for taps `c` and unit-peak reference `r` is
//!
//! ```text
//! x(n)  = g r(n)                         tap-input drive
//! d(n)  = channel(g (c * r))(n)          drive reaching the device
//! z(n)  = T(d(n))                        actual device output
//! z*(n) = T(x(n))                        ideal output, transparent channel
//! ```
//!
//! Conventional mode applies batch LMS on the device-output error:
//!
//! ```text
//! c_i <- c_i - (mu / N) sum_n (z(n) - z*(n)) x(n - (i - center))
//! ```
//!
//! which silently assumes `T` is increasing. Improved mode swaps the tap
//! inputs for the drive's time derivative and keeps the error signed, so the
//! error acts as a per-sample step whose size decays as the fit improves:
//!
//! ```text
//! c_i <- c_i + (mu0 / N) sum_n e(n) x'(n - (i - center)),   e = z* - z
//! ```
//!
//! Sums run over the interior samples `[K, len - K)`, `K` the tap count, so
//! zero-padding transients at the ends do not bias the update.

use crate::channel::{convolve_centered, FftConvolver, FirFilter};
use crate::device::DeviceModel;
use crate::signal::{derivative, residual_ratio, SampledSignal};
use crate::{Error, Result};

/// Channels at least this long are applied through an FFT.
const FFT_CHANNEL_MIN_TAPS: usize = 65;

/// Centered, non-causal FIR pre-compensator with taps `c_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Equalizer {
    taps: Vec<f64>,
}

impl Equalizer {
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.len().is_multiple_of(2) {
            return Err(Error::invalid(
                "taps",
                format!("equalizer length must be odd, got {}", taps.len()),
            ));
        }
        if let Some(k) = taps.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("equalizer tap {k}")));
        }
        Ok(Self { taps })
    }

    /// Center tap 1, all others 0.
    pub fn identity(num_taps: usize) -> Result<Self> {
        let mut taps = vec![0.0; num_taps];
        if let Some(c) = taps.get_mut(num_taps / 2) {
            *c = 1.0;
        }
        Self::new(taps)
    }

    pub fn zeros(num_taps: usize) -> Result<Self> {
        Self::new(vec![0.0; num_taps])
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn center_index(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    pub fn max_abs_tap(&self) -> f64 {
        self.taps.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// `out[n] = sum_i c_i r[n - (i - center)]`, zero-padded edges.
    pub fn apply(&self, r: &SampledSignal) -> Result<SampledSignal> {
        if r.len() < self.len() {
            return Err(Error::TooShort {
                needed: self.len(),
                got: r.len(),
            });
        }
        r.with_samples(convolve_centered(&self.taps, r.samples()))
    }
}

/// Linear channel between the equalizer and the device.
#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    Identity,
    Fir(FirFilter),
}

/// A complete problem instance: reference, channel, device and drive scaling.
pub struct Scenario {
    reference: SampledSignal,
    channel: Channel,
    device: DeviceModel,
    drive_gain_volts: f64,
    // Derived once; every iteration reuses them.
    drive: Vec<f64>,
    drive_derivative: Vec<f64>,
    ideal: SampledSignal,
    convolver: Option<FftConvolver>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario")
            .field("reference_len", &self.reference.len())
            .field("channel", &self.channel)
            .field("device", &self.device)
            .field("drive_gain_volts", &self.drive_gain_volts)
            .finish()
    }
}

impl Scenario {
    pub fn new(
        reference: SampledSignal,
        channel: Channel,
        device: DeviceModel,
        drive_gain_volts: f64,
    ) -> Result<Self> {
        if reference.is_empty() {
            return Err(Error::TooShort { needed: 1, got: 0 });
        }
        if !(drive_gain_volts.is_finite() && drive_gain_volts > 0.0) {
            return Err(Error::invalid(
                "drive_gain_volts",
                "must be finite and positive",
            ));
        }
        device.validate()?;
        let convolver = match &channel {
            Channel::Fir(f) if f.len() > reference.len() => {
                return Err(Error::TooShort {
                    needed: f.len(),
                    got: reference.len(),
                })
            }
            Channel::Fir(f) if f.len() >= FFT_CHANNEL_MIN_TAPS => {
                Some(FftConvolver::new(f, reference.len())?)
            }
            _ => None,
        };
        let drive_signal = reference.scaled(drive_gain_volts)?;
        let drive_derivative = if reference.len() >= 3 {
            derivative(&drive_signal)?.into_samples()
        } else {
            vec![0.0; reference.len()]
        };
        let ideal = device.apply(&drive_signal)?.signal;
        Ok(Self {
            drive: drive_signal.into_samples(),
            drive_derivative,
            ideal,
            reference,
            channel,
            device,
            drive_gain_volts,
            convolver,
        })
    }

    pub fn reference(&self) -> &SampledSignal {
        &self.reference
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn device(&self) -> &DeviceModel {
        &self.device
    }

    pub fn drive_gain_volts(&self) -> f64 {
        self.drive_gain_volts
    }

    /// Ideal device output `z* = T(g r)`.
    pub fn ideal(&self) -> &SampledSignal {
        &self.ideal
    }

    /// Tap-input drive `x = g r`.
    pub fn drive(&self) -> &[f64] {
        &self.drive
    }

    /// Derivative tap inputs `x'`, in volts per second.
    pub fn drive_derivative(&self) -> &[f64] {
        &self.drive_derivative
    }

    /// Soft operating-region check. For an MZM the nominal drive must stay
    /// within `V_pi / 2` of the bias; other devices never warn.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let DeviceModel::Mzm(m) = self.device {
            let swing = self.drive_gain_volts * self.reference.max_abs();
            if swing > 0.5 * m.v_pi_volts * (1.0 + 1e-9) {
                out.push(format!(
                    "nominal drive swing {swing} V exceeds V_pi/2 = {} V around the bias",
                    0.5 * m.v_pi_volts
                ));
            }
        }
        out
    }

    fn apply_channel(&self, x: &[f64]) -> Vec<f64> {
        match (&self.channel, &self.convolver) {
            (_, Some(conv)) => conv.apply(x),
            (Channel::Fir(f), None) => convolve_centered(f.taps(), x),
            (Channel::Identity, None) => x.to_vec(),
        }
    }

    /// Half-open range of samples entering the error sums for `num_taps` taps.
    pub fn interior(&self, num_taps: usize) -> Result<std::ops::Range<usize>> {
        let len = self.reference.len();
        if len <= 2 * num_taps {
            return Err(Error::TooShort {
                needed: 2 * num_taps + 1,
                got: len,
            });
        }
        Ok(num_taps..len - num_taps)
    }
}

/// Signals produced by one pass through the link.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPath {
    /// Actual device output `z`.
    pub actual: SampledSignal,
    /// Ideal device output `z*`.
    pub ideal: SampledSignal,
    /// Drive reaching the device after the channel, `d`.
    pub device_drive: SampledSignal,
    /// Samples of `d` outside the MZM operating region.
    pub out_of_region: usize,
}

pub fn forward_path(eq: &Equalizer, sc: &Scenario) -> Result<ForwardPath> {
    let shaped = eq.apply(&sc.reference)?;
    let pre: Vec<f64> = shaped
        .samples()
        .iter()
        .map(|v| sc.drive_gain_volts * v)
        .collect();
    if pre.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("pre-compensated drive".into()));
    }
    let device_drive = sc.reference.with_samples(sc.apply_channel(&pre))?;
    let out = sc.device.apply(&device_drive)?;
    Ok(ForwardPath {
        actual: out.signal,
        ideal: sc.ideal.clone(),
        device_drive,
        out_of_region: out.out_of_region,
    })
}

/// Actual device output for the given taps.
pub fn trial_signal(eq: &Equalizer, sc: &Scenario) -> Result<SampledSignal> {
    Ok(forward_path(eq, sc)?.actual)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    Conventional,
    Improved,
}

/// How the improved rule turns the signed error into a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSource {
    /// Each sample's signed error `e(n)` scales its own contribution.
    PerSample,
    /// One scalar per iteration, the mean signed error over the interior.
    IterationMean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub mode: TrainMode,
    pub mu0: f64,
    pub max_iterations: usize,
    pub target_ratio: f64,
    pub divergence_factor: f64,
    pub step_source: StepSource,
}

impl TrainConfig {
    pub fn new(mode: TrainMode, mu0: f64) -> Self {
        Self {
            mode,
            mu0,
            max_iterations: 5000,
            target_ratio: 1e-3,
            divergence_factor: 100.0,
            step_source: StepSource::PerSample,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu0.is_finite() && self.mu0 > 0.0) {
            return Err(Error::invalid("mu0", "must be finite and positive"));
        }
        if !(self.target_ratio.is_finite() && self.target_ratio > 0.0) {
            return Err(Error::invalid(
                "target_ratio",
                "must be finite and positive",
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        if !(self.divergence_factor.is_finite() && self.divergence_factor > 1.0) {
            return Err(Error::invalid("divergence_factor", "must exceed 1"));
        }
        Ok(())
    }
}

/// `sum_{n in interior} err[n] * input[n - s]` for every tap shift `s`.
fn tap_correlation(
    err: &[f64],
    input: &[f64],
    interior: std::ops::Range<usize>,
    num_taps: usize,
) -> Vec<f64> {
    let center = (num_taps - 1) / 2;
    let e = &err[interior.clone()];
    (0..num_taps)
        .map(|i| {
            // Input index n - (i - center) for n starting at interior.start.
            let first = interior.start + center - i;
            e.iter()
                .zip(&input[first..first + e.len()])
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

fn apply_delta(eq: &Equalizer, delta: &[f64]) -> Result<Equalizer> {
    let taps: Vec<f64> = eq.taps.iter().zip(delta).map(|(c, d)| c + d).collect();
    if taps.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("tap update".into()));
    }
    Ok(Equalizer { taps })
}

fn update(eq: &Equalizer, sc: &Scenario, cfg: &TrainConfig, fp: &ForwardPath) -> Result<Equalizer> {
    let interior = sc.interior(eq.len())?;
    let n = interior.len() as f64;
    // e = z* - z; conventional LMS descends along -(z - z*) x = e x.
    let err: Vec<f64> = fp
        .ideal
        .samples()
        .iter()
        .zip(fp.actual.samples())
        .map(|(ideal, actual)| ideal - actual)
        .collect();
    let delta: Vec<f64> = match (cfg.mode, cfg.step_source) {
        (TrainMode::Conventional, _) => tap_correlation(&err, &sc.drive, interior, eq.len())
            .into_iter()
            .map(|s| cfg.mu0 / n * s)
            .collect(),
        (TrainMode::Improved, StepSource::PerSample) => {
            tap_correlation(&err, &sc.drive_derivative, interior, eq.len())
                .into_iter()
                .map(|s| cfg.mu0 / n * s)
                .collect()
        }
        (TrainMode::Improved, StepSource::IterationMean) => {
            let mean = err[interior.clone()].iter().sum::<f64>() / n;
            let ones = vec![1.0; err.len()];
            tap_correlation(&ones, &sc.drive_derivative, interior, eq.len())
                .into_iter()
                .map(|s| cfg.mu0 * mean / n * s)
                .collect()
        }
    };
    apply_delta(eq, &delta)
}

fn expect_mode(cfg: &TrainConfig, mode: TrainMode) -> Result<()> {
    if cfg.mode != mode {
        return Err(Error::invalid(
            "mode",
            format!("expected {mode:?} mode, got {:?}", cfg.mode),
        ));
    }
    Ok(())
}

/// One batch pass of conventional LMS.
pub fn conventional_lms_iteration(
    eq: &Equalizer,
    sc: &Scenario,
    cfg: &TrainConfig,
) -> Result<Equalizer> {
    expect_mode(cfg, TrainMode::Conventional)?;
    let fp = forward_path(eq, sc)?;
    update(eq, sc, cfg, &fp)
}

/// One batch pass of the derivative-input, signed-step rule.
pub fn improved_lms_iteration(
    eq: &Equalizer,
    sc: &Scenario,
    cfg: &TrainConfig,
) -> Result<Equalizer> {
    expect_mode(cfg, TrainMode::Improved)?;
    let fp = forward_path(eq, sc)?;
    update(eq, sc, cfg, &fp)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// Number of updates applied before this record was taken.
    pub iteration: usize,
    pub residual_ratio: f64,
    /// Mean of `z* - z` over the interior.
    pub mean_signed_error: f64,
    /// Mean of `|z* - z|` over the interior.
    pub mean_abs_error: f64,
    pub max_abs_tap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    MaxIterations,
    Diverged,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Converged => "converged",
            Verdict::MaxIterations => "max_iterations",
            Verdict::Diverged => "diverged",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub records: Vec<IterationRecord>,
    pub final_taps: Equalizer,
    pub verdict: Verdict,
    /// Trial signals captured at the requested iterations, in iteration order.
    pub snapshots: Vec<(usize, SampledSignal)>,
}

impl TrainingReport {
    pub fn final_ratio(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.residual_ratio)
    }

    /// Updates applied before the last record.
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iteration)
    }
}

fn record(
    iteration: usize,
    eq: &Equalizer,
    sc: &Scenario,
    fp: &ForwardPath,
) -> Result<IterationRecord> {
    let interior = sc.interior(eq.len())?;
    let n = interior.len() as f64;
    let (signed, abs) = fp.ideal.samples()[interior.clone()]
        .iter()
        .zip(&fp.actual.samples()[interior])
        .fold((0.0, 0.0), |(s, a), (ideal, actual)| {
            let e = ideal - actual;
            (s + e, a + e.abs())
        });
    Ok(IterationRecord {
        iteration,
        residual_ratio: residual_ratio(&fp.actual, &fp.ideal)?,
        mean_signed_error: signed / n,
        mean_abs_error: abs / n,
        max_abs_tap: eq.max_abs_tap(),
    })
}

pub fn train(sc: &Scenario, cfg: &TrainConfig, init: &Equalizer) -> Result<TrainingReport> {
    train_with_snapshots(sc, cfg, init, &[])
}

/// Runs the training loop, capturing the trial signal at each iteration in
/// `snapshot_iterations` that is reached.
///
/// Stops when the residual ratio reaches the target (converged), after
/// `max_iterations` updates, or when the ratio exceeds `divergence_factor`
/// times its initial value or any value turns non-finite (diverged).
pub fn train_with_snapshots(
    sc: &Scenario,
    cfg: &TrainConfig,
    init: &Equalizer,
    snapshot_iterations: &[usize],
) -> Result<TrainingReport> {
    cfg.validate()?;
    sc.interior(init.len())?;
    let mut eq = Equalizer::new(init.taps.clone())?;
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let mut initial_ratio = None;

    let verdict = loop {
        let iteration = records.len();
        let fp = match forward_path(&eq, sc) {
            Ok(fp) => fp,
            Err(Error::NonFinite(_)) => break Verdict::Diverged,
            Err(e) => return Err(e),
        };
        let rec = record(iteration, &eq, sc, &fp)?;
        records.push(rec);
        if snapshot_iterations.contains(&iteration) {
            snapshots.push((iteration, fp.actual.clone()));
        }

        let ratio = rec.residual_ratio;
        let start = *initial_ratio.get_or_insert(ratio);
        if !ratio.is_finite() || !rec.mean_signed_error.is_finite() {
            break Verdict::Diverged;
        }
        if ratio <= cfg.target_ratio {
            break Verdict::Converged;
        }
        if ratio > cfg.divergence_factor * start {
            break Verdict::Diverged;
        }
        if iteration >= cfg.max_iterations {
            break Verdict::MaxIterations;
        }
        eq = match update(&eq, sc, cfg, &fp) {
            Ok(next) => next,
            Err(Error::NonFinite(_)) => break Verdict::Diverged,
            Err(e) => return Err(e),
        };
    };
    Ok(TrainingReport {
        records,
        final_taps: eq,
        verdict,
        snapshots,
    })
}

/// Per-sample comparison of the drive correction a sample needs with the
/// direction conventional LMS would push it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignSample {
    pub time_s: f64,
    /// `x(n) = g r(n)`.
    pub ideal_drive: f64,
    /// `d(n)`, the drive reaching the device.
    pub actual_drive: f64,
    /// Sign of `x - d`: +1 when the drive must rise.
    pub required_sign: i8,
    /// Sign of `z* - z`: conventional LMS raises the drive when positive.
    pub conventional_sign: i8,
    pub agreement: bool,
}

impl SignSample {
    /// Sample where the ideal drive sits in a negative lobe.
    pub fn in_negative_lobe(&self) -> bool {
        self.ideal_drive < 0.0
    }
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Sign diagnosis over the interior samples for the given taps.
pub fn sign_analysis(eq: &Equalizer, sc: &Scenario) -> Result<Vec<SignSample>> {
    let fp = forward_path(eq, sc)?;
    let interior = sc.interior(eq.len())?;
    Ok(interior
        .map(|n| {
            let ideal_drive = sc.drive[n];
            let actual_drive = fp.device_drive.samples()[n];
            let required_sign = sign_of(ideal_drive - actual_drive);
            let conventional_sign = sign_of(fp.ideal.samples()[n] - fp.actual.samples()[n]);
            SignSample {
                time_s: sc.reference.time_at(n),
                ideal_drive,
                actual_drive,
                required_sign,
                conventional_sign,
                agreement: required_sign as i32 * conventional_sign as i32 >= 0,
            }
        })
        .collect())
}

/// Fraction of negative-lobe samples whose conventional sign disagrees with
/// the required correction; `None` when no sample lies in a negative lobe.
pub fn negative_lobe_disagreement(samples: &[SignSample]) -> Option<f64> {
    let lobe: Vec<_> = samples.iter().filter(|s| s.in_negative_lobe()).collect();
    if lobe.is_empty() {
        return None;
    }
    Some(lobe.iter().filter(|s| !s.agreement).count() as f64 / lobe.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::MzmModel;

    fn bump_reference(len: usize) -> SampledSignal {
        SampledSignal::from_fn(1.0, 0.0, len, |t| {
            let u = (t - len as f64 / 2.0) / 6.0;
            (-u * u).exp() - 0.1 * (-(u - 1.5) * (u - 1.5)).exp()
        })
        .unwrap()
    }

    fn smoother() -> Channel {
        Channel::Fir(FirFilter::new(vec![0.1, 0.2, 0.4, 0.2, 0.1]).unwrap())
    }

    #[test]
    fn equalizer_shape_rules() {
        assert!(Equalizer::new(vec![1.0, 0.0]).is_err());
        assert!(Equalizer::new(vec![f64::NAN]).is_err());
        assert_eq!(
            Equalizer::identity(5).unwrap().taps(),
            &[0.0, 0.0, 1.0, 0.0, 0.0]
        );
        assert_eq!(Equalizer::identity(5).unwrap().center_index(), 2);
    }

    #[test]
    fn identity_and_zero_equalizers() {
        let r = bump_reference(40);
        assert_eq!(Equalizer::identity(7).unwrap().apply(&r).unwrap(), r);
        let z = Equalizer::zeros(7).unwrap().apply(&r).unwrap();
        assert!(z.samples().iter().all(|&v| v == 0.0));
        assert!(Equalizer::identity(41).unwrap().apply(&r).is_err());
    }

    #[test]
    fn equalizer_direction_convention() {
        // c_0 multiplies r[n + center]: a tap left of center advances the input.
        let eq = Equalizer::new(vec![1.0, 0.0, 0.0]).unwrap();
        let r = SampledSignal::new(1.0, 0.0, vec![0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(eq.apply(&r).unwrap().samples(), &[0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn symmetric_smoother_preserves_ramp_interior() {
        let r = SampledSignal::from_fn(1.0, 0.0, 30, |t| 0.3 * t - 2.0).unwrap();
        let out = Equalizer::new(vec![0.5, 0.0, 0.5])
            .unwrap()
            .apply(&r)
            .unwrap();
        for n in 1..29 {
            assert!((out.samples()[n] - r.samples()[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn transparent_chain_matches_ideal() {
        let dev = DeviceModel::Mzm(MzmModel::at_peak(1.0).unwrap());
        let sc = Scenario::new(bump_reference(64), Channel::Identity, dev, 0.5).unwrap();
        let fp = forward_path(&Equalizer::identity(5).unwrap(), &sc).unwrap();
        assert_eq!(fp.actual, fp.ideal);
        assert!(sc.warnings().is_empty());
    }

    #[test]
    fn zero_taps_hold_mzm_at_peak() {
        let dev = DeviceModel::Mzm(MzmModel::at_peak(1.0).unwrap());
        let sc = Scenario::new(bump_reference(64), smoother(), dev, 0.5).unwrap();
        let z = trial_signal(&Equalizer::zeros(5).unwrap(), &sc).unwrap();
        assert!(z.samples().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn large_drive_gain_warns() {
        let dev = DeviceModel::Mzm(MzmModel::at_peak(1.0).unwrap());
        let sc = Scenario::new(bump_reference(64), Channel::Identity, dev, 0.9).unwrap();
        assert_eq!(sc.warnings().len(), 1);
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let sc = Scenario::new(bump_reference(64), smoother(), DeviceModel::Linear, 1.0).unwrap();
        let eq = Equalizer::identity(5).unwrap();
        let cfg = TrainConfig::new(TrainMode::Improved, 0.1);
        assert!(conventional_lms_iteration(&eq, &sc, &cfg).is_err());
        let cfg = TrainConfig::new(TrainMode::Conventional, 0.1);
        assert!(improved_lms_iteration(&eq, &sc, &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrainConfig::new(TrainMode::Improved, 0.1);
        assert!(cfg.validate().is_ok());
        cfg.divergence_factor = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::new(TrainMode::Improved, 0.0);
        assert!(cfg.validate().is_err());
        cfg.mu0 = 1.0;
        cfg.max_iterations = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn converged_at_start_yields_one_record() {
        let sc = Scenario::new(
            bump_reference(64),
            Channel::Identity,
            DeviceModel::Linear,
            1.0,
        )
        .unwrap();
        let rep = train(
            &sc,
            &TrainConfig::new(TrainMode::Conventional, 0.1),
            &Equalizer::identity(5).unwrap(),
        )
        .unwrap();
        assert_eq!(rep.verdict, Verdict::Converged);
        assert_eq!(rep.records.len(), 1);
        assert_eq!(rep.final_ratio(), 0.0);
    }

    #[test]
    fn runaway_step_is_reported_as_divergence() {
        let sc = Scenario::new(bump_reference(64), smoother(), DeviceModel::Linear, 1.0).unwrap();
        let mut cfg = TrainConfig::new(TrainMode::Conventional, 1e6);
        cfg.max_iterations = 50;
        let rep = train(&sc, &cfg, &Equalizer::identity(5).unwrap()).unwrap();
        assert_eq!(rep.verdict, Verdict::Diverged);
    }

    #[test]
    fn budget_exhaustion_is_max_iterations() {
        let sc = Scenario::new(bump_reference(64), smoother(), DeviceModel::Linear, 1.0).unwrap();
        let mut cfg = TrainConfig::new(TrainMode::Conventional, 1e-3);
        cfg.max_iterations = 3;
        let rep =
            train_with_snapshots(&sc, &cfg, &Equalizer::identity(5).unwrap(), &[0, 2, 9]).unwrap();
        assert_eq!(rep.verdict, Verdict::MaxIterations);
        assert_eq!(rep.records.len(), 4);
        assert_eq!(rep.iterations(), 3);
        let taken: Vec<usize> = rep.snapshots.iter().map(|(k, _)| *k).collect();
        assert_eq!(taken, vec![0, 2]);
    }

    #[test]
    fn interior_needs_room() {
        let sc = Scenario::new(
            bump_reference(10),
            Channel::Identity,
            DeviceModel::Linear,
            1.0,
        )
        .unwrap();
        assert!(sc.interior(5).is_err());
        assert_eq!(sc.interior(3).unwrap(), 3..7);
    }

    #[test]
    fn tap_correlation_matches_definition() {
        let err: Vec<f64> = (0..12).map(|n| (n as f64 * 0.7).sin()).collect();
        let inp: Vec<f64> = (0..12).map(|n| (n as f64 * 0.3).cos()).collect();
        let got = tap_correlation(&err, &inp, 3..9, 5);
        for (i, g) in got.iter().enumerate() {
            let shift = i as isize - 2;
            let want: f64 = (3..9)
                .map(|n| err[n] * inp[(n as isize - shift) as usize])
                .sum();
            assert!((g - want).abs() < 1e-14);
        }
    }

    #[test]
    fn sign_analysis_on_linear_plant_always_agrees() {
        let sc = Scenario::new(bump_reference(80), smoother(), DeviceModel::Linear, 1.0).unwrap();
        let rows = sign_analysis(&Equalizer::identity(5).unwrap(), &sc).unwrap();
        assert!(rows.iter().all(|s| s.agreement));
    }
}
