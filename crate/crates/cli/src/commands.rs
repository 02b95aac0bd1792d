//! The five subcommands. Each validates first, so a bad config writes nothing.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use nlcomp_core::channel::design_lowpass;
use nlcomp_core::csv::{self as out, real};
use nlcomp_core::precomp::{
    negative_lobe_disagreement, sign_analysis, train_with_snapshots, Channel, Equalizer,
    IterationRecord, Scenario, TrainingReport,
};
use nlcomp_core::signal::{dirac_comb_convolve, magnitude_spectrum, nyquist_pulse, SampledSignal};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ModeName, SweepParameter, CONVENTIONAL_MU0, IMPROVED_MU0};
use crate::{CliError, RunSummary};

pub const SWEEP_HEADER: &str = "value,verdict,final_ratio,iterations";
pub const COMPARE_HEADER: &str = "iteration,conventional_residual_ratio,conventional_mean_signed_error,improved_residual_ratio,improved_mean_signed_error";
pub const SIGN_HEADER: &str =
    "time_s,ideal_drive,actual_drive,required_sign,conventional_sign,agreement";

fn core_err(e: nlcomp_core::Error) -> CliError {
    CliError::Config(e.to_string())
}

/// Collects the files a command writes so the summary lists exactly those.
struct OutDir {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let io_err = |e: io::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
        body(&mut w).and_then(|_| w.flush()).map_err(io_err)?;
        self.files.push(path);
        Ok(())
    }
}

fn summary(
    command: &str,
    cfg: &ExperimentConfig,
    start: Instant,
    files: Vec<PathBuf>,
) -> RunSummary {
    RunSummary {
        command: command.to_string(),
        verdict: None,
        final_residual_ratio: None,
        iterations: None,
        wall_clock_s: start.elapsed().as_secs_f64(),
        warnings: cfg.warnings(),
        files,
        notes: BTreeMap::new(),
    }
}

/// The isolated pulse and the pulse train it generates.
pub fn pulse_and_train(cfg: &ExperimentConfig) -> Result<(SampledSignal, SampledSignal), CliError> {
    let pulse = nyquist_pulse(&cfg.pulse_spec(), cfg.sample_rate_hz).map_err(core_err)?;
    let train = dirac_comb_convolve(&pulse, &cfg.train_spec()).map_err(core_err)?;
    Ok((pulse, train))
}

pub fn design_channel(cfg: &ExperimentConfig) -> Result<Channel, CliError> {
    match cfg.lowpass_spec() {
        None => Ok(Channel::Identity),
        Some(spec) => Ok(Channel::Fir(design_lowpass(&spec).map_err(core_err)?)),
    }
}

/// Builds the training scenario around an already designed channel. The
/// train is zero-padded on both sides by the channel plus equalizer length.
pub fn build_scenario(cfg: &ExperimentConfig, channel: Channel) -> Result<Scenario, CliError> {
    let (_, train) = pulse_and_train(cfg)?;
    let channel_len = match &channel {
        Channel::Identity => 0,
        Channel::Fir(f) => f.len(),
    };
    let pad = channel_len + cfg.trainer.num_taps;
    let reference = train.zero_padded(pad, pad);
    Scenario::new(reference, channel, cfg.device_model(), cfg.drive_gain()).map_err(core_err)
}

fn run_training(
    sc: &Scenario,
    cfg: &ExperimentConfig,
    snapshots: &[usize],
) -> Result<TrainingReport, CliError> {
    let init = Equalizer::identity(cfg.trainer.num_taps).map_err(core_err)?;
    train_with_snapshots(sc, &cfg.train_config(), &init, snapshots).map_err(core_err)
}

fn fill_verdict(s: &mut RunSummary, report: &TrainingReport) {
    s.verdict = Some(report.verdict.as_str().to_string());
    s.final_residual_ratio = Some(report.final_ratio());
    s.iterations = Some(report.iterations());
}

pub fn cmd_pulse(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    cfg.validate()?;
    let (pulse, train) = pulse_and_train(cfg)?;
    let bins = cfg
        .outputs
        .spectrum_bins
        .max(train.len().next_power_of_two());
    let pulse_spec = magnitude_spectrum(&pulse, bins).map_err(core_err)?;
    let train_spec = magnitude_spectrum(&train, bins).map_err(core_err)?;

    let mut o = OutDir::create(dir)?;
    o.write("pulse.csv", |w| out::write_signal(w, &pulse))?;
    o.write("pulse_train.csv", |w| out::write_signal(w, &train))?;
    o.write("pulse_spectrum.csv", |w| {
        out::write_response(w, &pulse_spec)
    })?;
    o.write("train_spectrum.csv", |w| {
        out::write_response(w, &train_spec)
    })?;
    Ok(summary("pulse", cfg, start, o.files))
}

pub fn cmd_filter(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    cfg.validate()?;
    let Some(spec) = cfg.lowpass_spec() else {
        return Err(CliError::Config(
            "the filter command needs channel.kind = \"lowpass\"; an identity channel has no design".into(),
        ));
    };
    let filter = design_lowpass(&spec).map_err(core_err)?;
    let n = cfg.outputs.response_points;
    let nyquist = cfg.sample_rate_hz / 2.0;
    let freqs: Vec<f64> = (0..n)
        .map(|k| nyquist * k as f64 / (n - 1) as f64)
        .collect();
    let db = filter
        .frequency_response(&freqs, cfg.sample_rate_hz)
        .map_err(core_err)?;
    let rows: Vec<(f64, f64)> = freqs.into_iter().zip(db).collect();

    let mut o = OutDir::create(dir)?;
    o.write("filter_taps.csv", |w| out::write_taps(w, filter.taps()))?;
    o.write("filter_response.csv", |w| out::write_response(w, &rows))?;
    let mut s = summary("filter", cfg, start, o.files);
    s.notes.insert("num_taps".into(), filter.len() as f64);
    Ok(s)
}

pub fn cmd_train(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    cfg.validate()?;
    let sc = build_scenario(cfg, design_channel(cfg)?)?;
    let report = run_training(&sc, cfg, &cfg.outputs.snapshot_iterations)?;
    let actual = nlcomp_core::precomp::trial_signal(&report.final_taps, &sc).map_err(core_err)?;
    let residual = actual
        .with_samples(
            actual
                .samples()
                .iter()
                .zip(sc.ideal().samples())
                .map(|(a, i)| a - i)
                .collect(),
        )
        .map_err(core_err)?;
    let o_ = &cfg.outputs;
    let curve = sc.device().sweep(
        o_.device_curve_start_volts,
        o_.device_curve_stop_volts,
        o_.device_curve_points,
    );

    let mut o = OutDir::create(dir)?;
    o.write("convergence.csv", |w| {
        out::write_convergence(w, &report.records)
    })?;
    o.write("final_taps.csv", |w| {
        out::write_taps(w, report.final_taps.taps())
    })?;
    o.write("ideal.csv", |w| out::write_signal(w, sc.ideal()))?;
    o.write("actual.csv", |w| out::write_signal(w, &actual))?;
    o.write("residual.csv", |w| out::write_signal(w, &residual))?;
    o.write("device_curve.csv", |w| out::write_device_curve(w, &curve))?;
    for (iteration, signal) in &report.snapshots {
        o.write(&format!("trial_{iteration:05}.csv"), |w| {
            out::write_signal(w, signal)
        })?;
    }
    let mut s = summary("train", cfg, start, o.files);
    fill_verdict(&mut s, &report);
    Ok(s)
}

/// Step for `mode`: the configured `mu0` applies to the configured mode,
/// the other mode uses its default.
fn mu0_for(cfg: &ExperimentConfig, mode: ModeName) -> f64 {
    if mode == cfg.trainer.mode {
        cfg.mu0()
    } else {
        match mode {
            ModeName::Conventional => CONVENTIONAL_MU0,
            ModeName::Improved => IMPROVED_MU0,
        }
    }
}

fn with_mode(cfg: &ExperimentConfig, mode: ModeName) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.trainer.mu0 = Some(mu0_for(cfg, mode));
    c.trainer.mode = mode;
    c
}

fn write_compare<W: Write>(
    w: &mut W,
    conv: &[IterationRecord],
    imp: &[IterationRecord],
) -> io::Result<()> {
    writeln!(w, "{COMPARE_HEADER}")?;
    let cells = |r: Option<&IterationRecord>| match r {
        Some(r) => format!("{},{}", real(r.residual_ratio), real(r.mean_signed_error)),
        None => ",".to_string(),
    };
    for k in 0..conv.len().max(imp.len()) {
        writeln!(w, "{k},{},{}", cells(conv.get(k)), cells(imp.get(k)))?;
    }
    Ok(())
}

/// Runs both modes from the same identity seed. The exit status follows the
/// improved run; the sign analysis is taken at the seed state.
pub fn cmd_compare(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    cfg.validate()?;
    let sc = build_scenario(cfg, design_channel(cfg)?)?;
    let conv_cfg = with_mode(cfg, ModeName::Conventional);
    let imp_cfg = with_mode(cfg, ModeName::Improved);
    let (conv, imp) = rayon::join(
        || run_training(&sc, &conv_cfg, &[]),
        || run_training(&sc, &imp_cfg, &[]),
    );
    let (conv, imp) = (conv?, imp?);
    let seed = Equalizer::identity(cfg.trainer.num_taps).map_err(core_err)?;
    let signs = sign_analysis(&seed, &sc).map_err(core_err)?;

    let mut o = OutDir::create(dir)?;
    o.write("compare_convergence.csv", |w| {
        write_compare(w, &conv.records, &imp.records)
    })?;
    o.write("sign_analysis.csv", |w| {
        writeln!(w, "{SIGN_HEADER}")?;
        for s in &signs {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                real(s.time_s),
                real(s.ideal_drive),
                real(s.actual_drive),
                s.required_sign,
                s.conventional_sign,
                u8::from(s.agreement)
            )?;
        }
        Ok(())
    })?;
    o.write("conventional_taps.csv", |w| {
        out::write_taps(w, conv.final_taps.taps())
    })?;
    o.write("improved_taps.csv", |w| {
        out::write_taps(w, imp.final_taps.taps())
    })?;

    let mut s = summary("compare", cfg, start, o.files);
    fill_verdict(&mut s, &imp);
    s.notes
        .insert("conventional_final_ratio".into(), conv.final_ratio());
    s.notes
        .insert("conventional_iterations".into(), conv.iterations() as f64);
    s.notes
        .insert("improved_final_ratio".into(), imp.final_ratio());
    if let Some(f) = negative_lobe_disagreement(&signs) {
        s.notes.insert("negative_lobe_disagreement".into(), f);
    }
    Ok(s)
}

/// One sweep row: the verdict, or `error` with the reason dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: Result<(String, f64, usize), String>,
}

fn sweep_one(
    cfg: &ExperimentConfig,
    channel: &Channel,
    value: f64,
) -> Result<(String, f64, usize), String> {
    let mut c = cfg.clone();
    match cfg.sweep.parameter {
        SweepParameter::Mu0 => c.trainer.mu0 = Some(value),
        SweepParameter::DriveGain => c.drive_gain_volts = Some(value),
        SweepParameter::NumTaps => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(format!("num_taps must be a positive integer, got {value}"));
            }
            c.trainer.num_taps = value as usize;
        }
    }
    c.validate().map_err(|e| e.to_string())?;
    let sc = build_scenario(&c, channel.clone()).map_err(|e| e.to_string())?;
    let report = run_training(&sc, &c, &[]).map_err(|e| e.to_string())?;
    Ok((
        report.verdict.as_str().to_string(),
        report.final_ratio(),
        report.iterations(),
    ))
}

pub fn sweep_rows(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>, CliError> {
    cfg.validate()?;
    let channel = design_channel(cfg)?;
    Ok(cfg
        .sweep_values()
        .par_iter()
        .map(|&value| SweepRow {
            value,
            outcome: sweep_one(cfg, &channel, value),
        })
        .collect())
}

pub fn cmd_sweep(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let rows = sweep_rows(cfg)?;
    let mut o = OutDir::create(dir)?;
    o.write("sweep.csv", |w| {
        writeln!(w, "{SWEEP_HEADER}")?;
        for r in &rows {
            match &r.outcome {
                Ok((verdict, ratio, iterations)) => writeln!(
                    w,
                    "{},{verdict},{},{iterations}",
                    real(r.value),
                    real(*ratio)
                )?,
                Err(_) => writeln!(w, "{},error,,", real(r.value))?,
            }
        }
        Ok(())
    })?;
    let mut s = summary("sweep", cfg, start, o.files);
    for r in &rows {
        if let Err(e) = &r.outcome {
            s.warnings.push(format!(
                "{} = {}: {e}",
                cfg.sweep.parameter.as_str(),
                r.value
            ));
        }
    }
    s.notes.insert(
        "converged_rows".into(),
        rows.iter()
            .filter(|r| matches!(&r.outcome, Ok((v, _, _)) if v == "converged"))
            .count() as f64,
    );
    Ok(s)
}
