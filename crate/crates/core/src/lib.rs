//! Pre-compensation of signals driven through non-monotonic device transfer
//! functions.
//!
//! The crate models a simple electro-optic link: a Nyquist pulse train is
//! pre-distorted by a centered FIR equalizer, band-limited by a low-pass
//! channel and then driven into a memoryless nonlinear device (a
//! Mach-Zehnder modulator power transfer or a Lorentzian). The equalizer taps
//! are trained either with conventional batch LMS or with the improved rule
//! that feeds time derivatives of the drive into the tap inputs and lets the
//! signed device-output error act as a per-sample adaptive step.
//!
//! Modules:
//! - [`signal`]: sampled waveforms, pulse synthesis, differentiation, metrics.
//! - [`channel`]: Kaiser-windowed low-pass design and zero-phase FIR filtering.
//! - [`device`]: MZM and Lorentzian transfers with analytic derivatives.
//! - [`precomp`]: the equalizer, the forward path and both training rules.
//! - [`csv`]: the plain-text CSV layouts every artifact is written in.

pub mod channel;
pub mod csv;
pub mod device;
mod error;
pub mod precomp;
pub mod signal;

pub use error::{Error, Result};
