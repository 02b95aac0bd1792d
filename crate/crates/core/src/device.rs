//! Memoryless nonlinear devices driven by the pre-compensated signal.
//!
//! Both physical models are even about a symmetry point, so their transfers
//! are non-monotonic across a drive swing that straddles it while their
//! derivatives are odd there.

use std::f64::consts::PI;

use crate::signal::SampledSignal;
use crate::{Error, Result};

/// Mach-Zehnder modulator power transfer `sin^2(pi (v + bias) / (2 V_pi))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MzmModel {
    pub v_pi_volts: f64,
    pub bias_volts: f64,
}

impl MzmModel {
    pub fn new(v_pi_volts: f64, bias_volts: f64) -> Result<Self> {
        let m = Self {
            v_pi_volts,
            bias_volts,
        };
        m.validate()?;
        Ok(m)
    }

    /// Biased at the transmission peak, `bias = V_pi`.
    pub fn at_peak(v_pi_volts: f64) -> Result<Self> {
        Self::new(v_pi_volts, v_pi_volts)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_pi_volts.is_finite() && self.v_pi_volts > 0.0) {
            return Err(Error::invalid("v_pi_volts", "must be finite and positive"));
        }
        if !self.bias_volts.is_finite() {
            return Err(Error::invalid("bias_volts", "must be finite"));
        }
        Ok(())
    }

    pub fn transfer(&self, v_drive: f64) -> f64 {
        let phase = PI * (v_drive + self.bias_volts) / (2.0 * self.v_pi_volts);
        phase.sin().powi(2)
    }

    pub fn transfer_derivative(&self, v_drive: f64) -> f64 {
        PI / (2.0 * self.v_pi_volts) * (PI * (v_drive + self.bias_volts) / self.v_pi_volts).sin()
    }

    /// Whether the total input lies in the pulse-compression region
    /// `(V_pi / 2, 3 V_pi / 2)`.
    pub fn in_operating_region(&self, v_drive: f64) -> bool {
        let u = v_drive + self.bias_volts;
        u > 0.5 * self.v_pi_volts && u < 1.5 * self.v_pi_volts
    }
}

/// Lorentzian line shape `1 / (1 + ((v - center) / hwhm)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianModel {
    pub center_volts: f64,
    pub hwhm_volts: f64,
}

impl LorentzianModel {
    pub fn new(center_volts: f64, hwhm_volts: f64) -> Result<Self> {
        let m = Self {
            center_volts,
            hwhm_volts,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hwhm_volts.is_finite() && self.hwhm_volts > 0.0) {
            return Err(Error::invalid("hwhm_volts", "must be finite and positive"));
        }
        if !self.center_volts.is_finite() {
            return Err(Error::invalid("center_volts", "must be finite"));
        }
        Ok(())
    }

    pub fn transfer(&self, v: f64) -> f64 {
        let x = (v - self.center_volts) / self.hwhm_volts;
        1.0 / (1.0 + x * x)
    }

    pub fn transfer_derivative(&self, v: f64) -> f64 {
        let d = v - self.center_volts;
        let x = d / self.hwhm_volts;
        let q = 1.0 + x * x;
        -2.0 * d / (self.hwhm_volts * self.hwhm_volts) / (q * q)
    }
}

/// The plant seen by the trainer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeviceModel {
    Mzm(MzmModel),
    Lorentzian(LorentzianModel),
    /// Identity map on voltage; the monotonic control case.
    Linear,
}

impl DeviceModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            DeviceModel::Mzm(m) => m.validate(),
            DeviceModel::Lorentzian(m) => m.validate(),
            DeviceModel::Linear => Ok(()),
        }
    }

    pub fn transfer(&self, v: f64) -> f64 {
        match self {
            DeviceModel::Mzm(m) => m.transfer(v),
            DeviceModel::Lorentzian(m) => m.transfer(v),
            DeviceModel::Linear => v,
        }
    }

    pub fn transfer_derivative(&self, v: f64) -> f64 {
        match self {
            DeviceModel::Mzm(m) => m.transfer_derivative(v),
            DeviceModel::Lorentzian(m) => m.transfer_derivative(v),
            DeviceModel::Linear => 1.0,
        }
    }

    /// Drive voltage about which the transfer is even, if any.
    pub fn symmetry_point(&self) -> Option<f64> {
        match self {
            DeviceModel::Mzm(m) => Some(m.v_pi_volts - m.bias_volts),
            DeviceModel::Lorentzian(m) => Some(m.center_volts),
            DeviceModel::Linear => None,
        }
    }

    /// Pointwise application; see [`DeviceOutput`].
    pub fn apply(&self, s: &SampledSignal) -> Result<DeviceOutput> {
        let samples: Vec<f64> = s.samples().iter().map(|&v| self.transfer(v)).collect();
        let out_of_region = match self {
            DeviceModel::Mzm(m) => s
                .samples()
                .iter()
                .filter(|&&v| !m.in_operating_region(v))
                .count(),
            _ => 0,
        };
        Ok(DeviceOutput {
            signal: s.with_samples(samples)?,
            out_of_region,
        })
    }

    /// `(input, transfer, derivative)` rows over `points` evenly spaced drives.
    pub fn sweep(&self, start_volts: f64, stop_volts: f64, points: usize) -> Vec<(f64, f64, f64)> {
        let step = if points > 1 {
            (stop_volts - start_volts) / (points - 1) as f64
        } else {
            0.0
        };
        (0..points)
            .map(|k| {
                let v = start_volts + k as f64 * step;
                (v, self.transfer(v), self.transfer_derivative(v))
            })
            .collect()
    }
}

/// Device output plus the number of samples whose total MZM input fell
/// outside `(V_pi / 2, 3 V_pi / 2)`. Out-of-region samples are counted, never
/// clipped; the count is always zero for non-MZM devices.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceOutput {
    pub signal: SampledSignal,
    pub out_of_region: usize,
}
