use std::f64::consts::PI;

use nlcomp_core::channel::{design_lowpass, kaiser_beta, FftConvolver, FirFilter, LowpassSpec};
use nlcomp_core::signal::SampledSignal;
use proptest::prelude::*;

const RATE: f64 = 10e12;

fn ten_thz_spec() -> LowpassSpec {
    LowpassSpec {
        passband_edge_hz: 1e9,
        stopband_edge_hz: 5e9,
        stopband_atten_db: 80.0,
        sample_rate_hz: RATE,
    }
}

/// Independent evaluation of |H(f)| in the cosine form of a type I filter.
fn cosine_form_magnitude(taps: &[f64], f: f64, rate: f64) -> f64 {
    let m = taps.len() / 2;
    let w = 2.0 * PI * f / rate;
    (taps[m]
        + 2.0
            * (1..=m)
                .map(|k| taps[m + k] * (w * k as f64).cos())
                .sum::<f64>())
    .abs()
}

#[test]
fn kaiser_shape_for_80_db() {
    assert!((kaiser_beta(80.0) - 7.857).abs() < 5e-4);
}

#[test]
fn dense_stopband_check_at_ten_thz() {
    let spec = ten_thz_spec();
    let f = design_lowpass(&spec).unwrap();
    let points = 4096;
    let freqs: Vec<f64> = (0..points)
        .map(|k| 5e9 + (RATE / 2.0 - 5e9) * k as f64 / (points - 1) as f64)
        .collect();
    let response = f.frequency_response(&freqs, RATE).unwrap();
    for (fr, db) in freqs.iter().zip(&response) {
        assert!(*db <= -80.0, "{db} dB at {fr} Hz");
        let independent = 20.0 * cosine_form_magnitude(f.taps(), *fr, RATE).log10();
        assert!(independent <= -80.0 + 1e-6, "{independent} dB at {fr} Hz");
    }
}

#[test]
fn passband_within_half_db() {
    let spec = ten_thz_spec();
    let f = design_lowpass(&spec).unwrap();
    let freqs: Vec<f64> = (0..=512).map(|k| 1e9 * k as f64 / 512.0).collect();
    for db in f.frequency_response(&freqs, RATE).unwrap() {
        assert!(db.abs() <= 0.5, "{db}");
    }
    assert!((f.taps().iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

fn desk_filter() -> FirFilter {
    design_lowpass(&LowpassSpec {
        passband_edge_hz: 1e9,
        stopband_edge_hz: 5e9,
        stopband_atten_db: 80.0,
        sample_rate_hz: 2e12,
    })
    .unwrap()
}

#[test]
fn ten_gigahertz_tone_is_suppressed() {
    let f = desk_filter();
    let rate = 2e12;
    let n = 4 * f.len();
    let tone = SampledSignal::from_fn(rate, 0.0, n, |t| (2.0 * PI * 10e9 * t).sin()).unwrap();
    let out = f.apply(&tone).unwrap();
    let interior = &out.samples()[f.len()..n - f.len()];
    let peak = interior.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let measured = cosine_form_magnitude(f.taps(), 10e9, rate);
    assert!(peak <= 1e-4, "peak {peak}");
    assert!(
        (peak - measured).abs() <= 0.05 * measured + 1e-12,
        "{peak} vs response {measured}"
    );
}

#[test]
fn constant_passes_unchanged_on_interior() {
    let f = desk_filter();
    let n = 3 * f.len();
    let s = SampledSignal::new(2e12, 0.0, vec![0.75; n]).unwrap();
    let out = f.apply(&s).unwrap();
    for v in &out.samples()[f.len()..n - f.len()] {
        assert!((v - 0.75).abs() < 1e-12);
    }
}

#[test]
fn symmetric_filter_has_zero_net_delay() {
    let f = desk_filter();
    let n = 4 * f.len();
    let s = SampledSignal::from_fn(2e12, 0.0, n, |t| {
        let u = (t - n as f64 / 4e12) / 300e-12;
        (-u * u).exp()
    })
    .unwrap();
    let out = f.apply(&s).unwrap();
    let xcorr = |lag: isize| -> f64 {
        (0..n as isize)
            .filter_map(|k| {
                let j = k + lag;
                (0..n as isize)
                    .contains(&j)
                    .then(|| s.samples()[k as usize] * out.samples()[j as usize])
            })
            .sum()
    };
    let best = (-20..=20)
        .max_by(|a, b| xcorr(*a).total_cmp(&xcorr(*b)))
        .unwrap();
    assert_eq!(best, 0);
}

#[test]
fn response_is_linear_phase() {
    let f = desk_filter();
    let m = f.group_delay_samples() as f64;
    for k in 0..200 {
        let freq = 1e7 + 2e10 * k as f64 / 200.0;
        let w = 2.0 * PI * freq / 2e12;
        let (re, im) = f
            .taps()
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(re, im), (n, c)| {
                (re + c * (w * n as f64).cos(), im - c * (w * n as f64).sin())
            });
        if 20.0 * re.hypot(im).log10() <= -60.0 {
            continue;
        }
        // Undo the linear phase -w m; what is left must be real.
        let (s, c) = (w * m).sin_cos();
        let rot_im = im * c + re * s;
        let rot_re = re * c - im * s;
        let residual_phase = rot_im.atan2(rot_re.abs());
        assert!(
            residual_phase.abs() < 1e-6,
            "{residual_phase} rad at {freq} Hz"
        );
    }
}

#[test]
fn response_edges_and_dc() {
    let f = desk_filter();
    let r = f.frequency_response(&[0.0, 5e9, 1e12], 2e12).unwrap();
    assert!(r[0].abs() < 1e-9);
    assert!(r[1] <= -80.0);
    assert!(f.frequency_response(&[1.1e12], 2e12).is_err());
}

#[test]
fn fft_convolver_agrees_with_direct_on_long_filter() {
    let f = desk_filter();
    let n = f.len() + 1000;
    let x: Vec<f64> = (0..n)
        .map(|k| ((k * 37) % 101) as f64 / 50.0 - 1.0)
        .collect();
    let s = SampledSignal::new(2e12, 0.0, x.clone()).unwrap();
    let direct = f.apply(&s).unwrap();
    let fast = FftConvolver::new(&f, n).unwrap().apply(&x);
    for (a, b) in direct.samples().iter().zip(&fast) {
        assert!((a - b).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn apply_is_shift_invariant(samples in prop::collection::vec(-1.0f64..1.0, 60), shift in 1usize..10) {
        let f = FirFilter::new(vec![0.05, -0.1, 0.2, 0.7, 0.2, -0.1, 0.05]).unwrap();
        let mut padded = samples.clone();
        padded.resize(80, 0.0);
        let s = SampledSignal::new(1.0, 0.0, padded.clone()).unwrap();
        let mut shifted = vec![0.0; shift];
        shifted.extend_from_slice(&padded[..80 - shift]);
        let s2 = SampledSignal::new(1.0, 0.0, shifted).unwrap();
        let (a, b) = (f.apply(&s).unwrap(), f.apply(&s2).unwrap());
        for n in 10..70 - shift {
            prop_assert!((a.samples()[n] - b.samples()[n + shift]).abs() < 1e-15);
        }
    }

    #[test]
    fn apply_is_linear(x in prop::collection::vec(-1.0f64..1.0, 30), y in prop::collection::vec(-1.0f64..1.0, 30), k in -4.0f64..4.0) {
        let f = FirFilter::new(vec![0.25, 0.5, 0.25]).unwrap();
        let sx = SampledSignal::new(1.0, 0.0, x.clone()).unwrap();
        let sy = SampledSignal::new(1.0, 0.0, y.clone()).unwrap();
        let mix = sx.with_samples(x.iter().zip(&y).map(|(a, b)| a + k * b).collect()).unwrap();
        let (fx, fy, fm) = (f.apply(&sx).unwrap(), f.apply(&sy).unwrap(), f.apply(&mix).unwrap());
        for n in 0..30 {
            prop_assert!((fm.samples()[n] - fx.samples()[n] - k * fy.samples()[n]).abs() < 1e-12);
        }
    }
}
