//! Experiment configuration: a built-in profile overlaid with a TOML file.

use std::path::PathBuf;

use nlcomp_core::channel::LowpassSpec;
use nlcomp_core::device::{DeviceModel, LorentzianModel, MzmModel};
use nlcomp_core::precomp::{StepSource, TrainConfig, TrainMode};
use nlcomp_core::signal::{NyquistPulseSpec, PulseTrainSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Desk,
    Paper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sample_rate_hz: f64,
    /// Volts per unit of reference amplitude. Defaults per device when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive_gain_volts: Option<f64>,
    pub pulse: PulseSection,
    pub train: TrainSection,
    pub channel: ChannelSection,
    pub device: DeviceSection,
    pub trainer: TrainerSection,
    pub outputs: OutputSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSection {
    pub ts_s: f64,
    pub beta: f64,
    pub span_zero_crossings: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub period_s: f64,
    pub num_periods: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelSection {
    Lowpass {
        passband_edge_hz: f64,
        stopband_edge_hz: f64,
        stopband_atten_db: f64,
    },
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DeviceSection {
    Mzm { v_pi_volts: f64, bias_volts: f64 },
    Lorentzian { center_volts: f64, hwhm_volts: f64 },
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Conventional,
    Improved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSourceName {
    PerSample,
    IterationMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainerSection {
    pub mode: ModeName,
    /// Overrides the per-mode default step when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    pub num_taps: usize,
    pub max_iterations: usize,
    pub target_ratio: f64,
    pub divergence_factor: f64,
    pub step_source: StepSourceName,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub snapshot_iterations: Vec<usize>,
    /// Lower bound on FFT length; raised to a power of two covering the signal.
    pub spectrum_bins: usize,
    pub response_points: usize,
    pub device_curve_start_volts: f64,
    pub device_curve_stop_volts: f64,
    pub device_curve_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Mu0,
    NumTaps,
    DriveGain,
}

impl SweepParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParameter::Mu0 => "mu0",
            SweepParameter::NumTaps => "num_taps",
            SweepParameter::DriveGain => "drive_gain",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    /// Defaults per parameter (and per mode for `mu0`) when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

/// Default step for conventional LMS.
pub const CONVENTIONAL_MU0: f64 = 1e-2;
/// Default step for the derivative-input rule. The tap inputs are in volts
/// per second, so useful steps sit many decades below the conventional one.
pub const IMPROVED_MU0: f64 = 1e-12;

impl ExperimentConfig {
    pub fn profile(profile: Profile) -> Self {
        let (rate, periods, taps) = match profile {
            Profile::Desk => (2e12, 6, 65),
            Profile::Paper => (10e12, 10, 129),
        };
        ExperimentConfig {
            sample_rate_hz: rate,
            drive_gain_volts: None,
            pulse: PulseSection {
                ts_s: 25e-12,
                beta: 0.5,
                span_zero_crossings: 8,
            },
            train: TrainSection {
                period_s: 100e-12,
                num_periods: periods,
            },
            channel: ChannelSection::Lowpass {
                passband_edge_hz: 1e9,
                stopband_edge_hz: 5e9,
                stopband_atten_db: 80.0,
            },
            device: DeviceSection::Mzm {
                v_pi_volts: 1.0,
                bias_volts: 1.0,
            },
            trainer: TrainerSection {
                mode: ModeName::Improved,
                mu0: None,
                num_taps: taps,
                max_iterations: 5000,
                target_ratio: 1e-3,
                divergence_factor: 100.0,
                step_source: StepSourceName::PerSample,
            },
            outputs: OutputSection {
                dir: None,
                snapshot_iterations: vec![100, 101, 102, 103, 104, 105],
                spectrum_bins: 1 << 16,
                response_points: 4096,
                device_curve_start_volts: -1.0,
                device_curve_stop_volts: 1.0,
                device_curve_points: 401,
            },
            sweep: SweepSection {
                parameter: SweepParameter::Mu0,
                values: None,
            },
        }
    }

    /// Overlays `text` on the chosen profile. A file may set a top-level
    /// `profile` key; an explicit `cli_profile` wins over it.
    pub fn load(text: &str, cli_profile: Option<Profile>) -> Result<Self, CliError> {
        let mut overlay: toml::Table =
            toml::from_str(text).map_err(|e| CliError::Config(format!("parse error: {e}")))?;
        let file_profile = match overlay.remove("profile") {
            None => None,
            Some(v) => Some(
                Profile::deserialize(v).map_err(|e| CliError::Config(format!("profile: {e}")))?,
            ),
        };
        let profile = cli_profile.or(file_profile).unwrap_or(Profile::Desk);
        let mut base = toml::Table::try_from(Self::profile(profile))
            .map_err(|e| CliError::Config(e.to_string()))?;
        merge(&mut base, overlay);
        let cfg: ExperimentConfig = toml::Value::Table(base)
            .try_into()
            .map_err(|e| CliError::Config(format!("{e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn pulse_spec(&self) -> NyquistPulseSpec {
        NyquistPulseSpec {
            ts_s: self.pulse.ts_s,
            beta: self.pulse.beta,
            span_zero_crossings: self.pulse.span_zero_crossings,
        }
    }

    pub fn train_spec(&self) -> PulseTrainSpec {
        PulseTrainSpec {
            period_s: self.train.period_s,
            num_periods: self.train.num_periods,
        }
    }

    pub fn lowpass_spec(&self) -> Option<LowpassSpec> {
        match self.channel {
            ChannelSection::Lowpass {
                passband_edge_hz,
                stopband_edge_hz,
                stopband_atten_db,
            } => Some(LowpassSpec {
                passband_edge_hz,
                stopband_edge_hz,
                stopband_atten_db,
                sample_rate_hz: self.sample_rate_hz,
            }),
            ChannelSection::Identity => None,
        }
    }

    pub fn device_model(&self) -> DeviceModel {
        match self.device {
            DeviceSection::Mzm {
                v_pi_volts,
                bias_volts,
            } => DeviceModel::Mzm(MzmModel {
                v_pi_volts,
                bias_volts,
            }),
            DeviceSection::Lorentzian {
                center_volts,
                hwhm_volts,
            } => DeviceModel::Lorentzian(LorentzianModel {
                center_volts,
                hwhm_volts,
            }),
            DeviceSection::Linear => DeviceModel::Linear,
        }
    }

    /// Configured gain, else V_pi/2 for the MZM, the half width for the
    /// Lorentzian and 1 V for the linear plant.
    pub fn drive_gain(&self) -> f64 {
        self.drive_gain_volts.unwrap_or(match self.device {
            DeviceSection::Mzm { v_pi_volts, .. } => v_pi_volts / 2.0,
            DeviceSection::Lorentzian { hwhm_volts, .. } => hwhm_volts,
            DeviceSection::Linear => 1.0,
        })
    }

    pub fn mu0(&self) -> f64 {
        self.trainer.mu0.unwrap_or(match self.trainer.mode {
            ModeName::Conventional => CONVENTIONAL_MU0,
            ModeName::Improved => IMPROVED_MU0,
        })
    }

    /// Explicit sweep values, else five decades around the mode's scale for
    /// `mu0`, a tap ladder, or fractions of the drive gain.
    pub fn sweep_values(&self) -> Vec<f64> {
        if let Some(v) = &self.sweep.values {
            return v.clone();
        }
        match self.sweep.parameter {
            SweepParameter::Mu0 => {
                let top = match self.trainer.mode {
                    ModeName::Conventional => 1.0,
                    ModeName::Improved => 1e-11,
                };
                (0..5).map(|k| top * 10f64.powi(k - 4)).collect()
            }
            SweepParameter::NumTaps => vec![1.0, 9.0, 17.0, 33.0, 65.0],
            SweepParameter::DriveGain => {
                let g = self.drive_gain();
                [0.25, 0.5, 0.75, 1.0].iter().map(|f| f * g).collect()
            }
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            mode: match self.trainer.mode {
                ModeName::Conventional => TrainMode::Conventional,
                ModeName::Improved => TrainMode::Improved,
            },
            mu0: self.mu0(),
            max_iterations: self.trainer.max_iterations,
            target_ratio: self.trainer.target_ratio,
            divergence_factor: self.trainer.divergence_factor,
            step_source: match self.trainer.step_source {
                StepSourceName::PerSample => StepSource::PerSample,
                StepSourceName::IterationMean => StepSource::IterationMean,
            },
        }
    }

    /// Cross-field checks run before any output is produced.
    pub fn validate(&self) -> Result<(), CliError> {
        let cfg = |e: nlcomp_core::Error| CliError::Config(e.to_string());
        let rate = self.sample_rate_hz;
        if !(rate.is_finite() && rate > 0.0) {
            return Err(CliError::Config(
                "sample_rate_hz must be finite and positive".into(),
            ));
        }
        let pulse = self.pulse_spec();
        pulse.validate().map_err(cfg)?;
        let nyquist_rate = (1.0 + pulse.beta) / pulse.ts_s;
        if rate < nyquist_rate {
            return Err(CliError::Config(format!(
                "sample_rate_hz {rate:e} is below the pulse Nyquist rate {nyquist_rate:e}"
            )));
        }
        if rate * pulse.ts_s < 10.0 {
            return Err(CliError::Config(format!(
                "need at least 10 samples per symbol, got {}",
                rate * pulse.ts_s
            )));
        }
        self.train_spec().period_samples(rate).map_err(cfg)?;
        if let Some(spec) = self.lowpass_spec() {
            spec.validate().map_err(cfg)?;
        }
        self.device_model().validate().map_err(cfg)?;
        let gain = self.drive_gain();
        if !(gain.is_finite() && gain > 0.0) {
            return Err(CliError::Config(
                "drive_gain_volts must be finite and positive".into(),
            ));
        }
        if let Some(mu) = self.trainer.mu0 {
            if !(mu.is_finite() && mu > 0.0) {
                return Err(CliError::Config(
                    "trainer.mu0 must be finite and positive".into(),
                ));
            }
        }
        self.train_config().validate().map_err(cfg)?;
        if self.trainer.num_taps.is_multiple_of(2) {
            return Err(CliError::Config(format!(
                "trainer.num_taps must be odd, got {}",
                self.trainer.num_taps
            )));
        }
        let o = &self.outputs;
        if o.response_points < 2 || o.device_curve_points < 2 {
            return Err(CliError::Config(
                "outputs point counts must be at least 2".into(),
            ));
        }
        if o.device_curve_start_volts >= o.device_curve_stop_volts
            || o.device_curve_start_volts.is_nan()
            || o.device_curve_stop_volts.is_nan()
        {
            return Err(CliError::Config("device curve range is empty".into()));
        }
        if let Some(v) = &self.sweep.values {
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Config(
                    "sweep.values must be non-empty and finite".into(),
                ));
            }
        }
        Ok(())
    }

    /// Soft checks: reported, never fatal.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let DeviceSection::Mzm { v_pi_volts, .. } = self.device {
            let swing = self.drive_gain();
            if swing > v_pi_volts / 2.0 * (1.0 + 1e-9) {
                out.push(format!(
                    "drive swing {swing} V exceeds V_pi/2 = {} V; the MZM leaves its operating region",
                    v_pi_volts / 2.0
                ));
            }
        }
        out
    }
}

/// Recursive table merge. A section whose `kind` changes is replaced whole,
/// so fields of the old variant do not leak into the new one.
fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                let kind_changed = o.get("kind").is_some_and(|k| b.get("kind") != Some(k));
                if kind_changed {
                    *b = o;
                } else {
                    merge(b, o);
                }
            }
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_desk_profile() {
        let cfg = ExperimentConfig::load("", None).unwrap();
        assert_eq!(cfg, ExperimentConfig::profile(Profile::Desk));
    }

    #[test]
    fn profiles_differ_in_scale() {
        let paper = ExperimentConfig::load("", Some(Profile::Paper)).unwrap();
        assert_eq!(paper.sample_rate_hz, 10e12);
        assert_eq!(paper.train.num_periods, 10);
        assert_eq!(paper.trainer.num_taps, 129);
        let via_file = ExperimentConfig::load("profile = \"paper\"", None).unwrap();
        assert_eq!(paper, via_file);
        let cli_wins = ExperimentConfig::load("profile = \"paper\"", Some(Profile::Desk)).unwrap();
        assert_eq!(cli_wins.sample_rate_hz, 2e12);
    }

    #[test]
    fn overrides_merge_into_sections() {
        let cfg =
            ExperimentConfig::load("[pulse]\nbeta = 0.25\n[trainer]\nmu0 = 0.5", None).unwrap();
        assert_eq!(cfg.pulse.beta, 0.25);
        assert_eq!(cfg.pulse.ts_s, 25e-12);
        assert_eq!(cfg.mu0(), 0.5);
    }

    #[test]
    fn switching_kind_replaces_section() {
        let cfg = ExperimentConfig::load("[channel]\nkind = \"identity\"\n[device]\nkind = \"lorentzian\"\ncenter_volts = 0.0\nhwhm_volts = 0.5", None).unwrap();
        assert_eq!(cfg.channel, ChannelSection::Identity);
        assert_eq!(cfg.drive_gain(), 0.5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::load("[pulse]\nbetta = 0.3", None).is_err());
        assert!(ExperimentConfig::load("colour = 1", None).is_err());
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::profile(Profile::Paper);
        cfg.trainer.mu0 = Some(3e-13);
        cfg.drive_gain_volts = Some(0.4);
        cfg.outputs.dir = Some("runs/a".into());
        cfg.sweep.values = Some(vec![1.0, 2.5e-3]);
        let text = cfg.to_toml();
        assert_eq!(ExperimentConfig::load(&text, None).unwrap(), cfg);
    }

    #[test]
    fn validation_failures() {
        for text in [
            "[pulse]\nbeta = 1.5",
            "[train]\nperiod_s = 100.3e-12",
            "sample_rate_hz = 5e10",
            "[trainer]\nnum_taps = 64",
            "[trainer]\nmu0 = -1.0",
            "[channel]\nstopband_edge_hz = 0.5e9",
            "[device]\nv_pi_volts = 0.0",
        ] {
            assert!(
                matches!(ExperimentConfig::load(text, None), Err(CliError::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn default_sweep_grids() {
        let mut cfg = ExperimentConfig::profile(Profile::Desk);
        assert_eq!(cfg.sweep_values().len(), 5);
        assert!((cfg.sweep_values()[4] - 1e-11).abs() < 1e-25);
        cfg.trainer.mode = ModeName::Conventional;
        assert!((cfg.sweep_values()[0] - 1e-4).abs() < 1e-18);
        cfg.sweep.parameter = SweepParameter::DriveGain;
        assert_eq!(cfg.sweep_values().last(), Some(&0.5));
    }

    #[test]
    fn overdriven_mzm_warns() {
        let cfg = ExperimentConfig::load("drive_gain_volts = 0.8", None).unwrap();
        assert_eq!(cfg.warnings().len(), 1);
        assert!(ExperimentConfig::profile(Profile::Desk)
            .warnings()
            .is_empty());
    }
}
