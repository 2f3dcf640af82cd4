//! Welding-current trace synthesis, ingestion and windowing.
//!
//! The three operating regimes are synthesized from their physical
//! signatures: a harmonic-locked 50 Hz carrier (stable), band-limited noise
//! bursts over the carrier (transient ignition), and double-sideband
//! amplitude modulation with exponentially growing depth (extinction).
//! Synthesis is fully deterministic given `RegimeParams::seed`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::ArcError;
use crate::seed;
use crate::Result;

/// Default sample rate in Hz.
pub const DEFAULT_SAMPLE_RATE: f64 = 10_000.0;
/// Default analysis window length in samples.
pub const DEFAULT_WINDOW_LEN: usize = 4096;
/// Default hop in samples (92% window overlap).
pub const DEFAULT_HOP: usize = 328;

/// One of the three arc operating regimes.
///
/// The declaration order is the fixed class order used for tie-breaking
/// throughout classification and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeLabel {
    /// Ignition: broadband bursts, abrupt amplitude variation.
    Transient,
    /// Thermal equilibrium: quasi-periodic, harmonic-locked.
    Stable,
    /// Arc degradation: sideband growth, energy leakage.
    Extinction,
}

impl RegimeLabel {
    /// All labels in the fixed class order.
    pub const ALL: [RegimeLabel; 3] = [
        RegimeLabel::Transient,
        RegimeLabel::Stable,
        RegimeLabel::Extinction,
    ];

    /// Index within the fixed class order.
    pub fn index(self) -> usize {
        match self {
            RegimeLabel::Transient => 0,
            RegimeLabel::Stable => 1,
            RegimeLabel::Extinction => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeLabel::Transient => "transient",
            RegimeLabel::Stable => "stable",
            RegimeLabel::Extinction => "extinction",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "transient" => Ok(RegimeLabel::Transient),
            "stable" => Ok(RegimeLabel::Stable),
            "extinction" => Ok(RegimeLabel::Extinction),
            other => Err(ArcError::InvalidParam(format!(
                "unknown regime label {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A uniformly sampled current waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    /// Current samples in amperes.
    pub samples: Vec<f64>,
    /// Sample rate in Hz.
    pub sample_rate: f64,
    /// Optional per-window labels as `(window_index, label)` pairs.
    pub labels: Option<Vec<(usize, RegimeLabel)>>,
}

impl SignalTrace {
    /// Build a trace, checking the type invariants.
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if sample_rate.is_nan() || sample_rate <= 0.0 {
            return Err(ArcError::InvalidParam(format!(
                "sample_rate must be > 0, got {sample_rate}"
            )));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(ArcError::InvalidParam(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
            labels: None,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

/// Knobs for the regime synthesizer.
///
/// `burst_*` fields apply to the transient regime, `sideband_mod_hz`,
/// `instability_lambda` and `modulation_depth0` to extinction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegimeParams {
    /// Carrier amplitude in amperes.
    pub base_amplitude: f64,
    /// Mains fundamental in Hz.
    pub fundamental_hz: f64,
    /// Second-harmonic amplitude as a fraction of the fundamental.
    pub harmonic2_ratio: f64,
    /// Additive Gaussian noise sigma in amperes.
    pub noise_sigma: f64,
    /// Burst band `(low, high)` in Hz for the transient regime.
    pub burst_band: (f64, f64),
    /// Burst amplitude as a multiple of `base_amplitude`.
    pub burst_gain: f64,
    /// AM modulation frequency in Hz for the extinction regime.
    pub sideband_mod_hz: f64,
    /// Exponential growth rate of the modulation depth, 1/s.
    pub instability_lambda: f64,
    /// Initial modulation depth m0; depth follows m0*exp(lambda*t), clamped at 1.
    pub modulation_depth0: f64,
    /// Trace duration in seconds.
    pub duration_s: f64,
    /// PRNG seed; identical seeds give identical traces on every platform.
    pub seed: u64,
    /// Optional symmetric clip level in amperes (sensor dynamic range).
    pub clip_amps: Option<f64>,
}

impl Default for RegimeParams {
    fn default() -> Self {
        Self {
            base_amplitude: 100.0,
            fundamental_hz: 50.0,
            harmonic2_ratio: 0.1,
            noise_sigma: 2.0,
            burst_band: (100.0, 500.0),
            burst_gain: 2.5,
            sideband_mod_hz: 5.0,
            instability_lambda: 2.5,
            modulation_depth0: 0.15,
            duration_s: 1.984,
            seed: 0,
            clip_amps: None,
        }
    }
}

impl RegimeParams {
    fn validate(&self, sample_rate: f64) -> Result<()> {
        let finite = [
            self.base_amplitude,
            self.fundamental_hz,
            self.harmonic2_ratio,
            self.noise_sigma,
            self.burst_band.0,
            self.burst_band.1,
            self.burst_gain,
            self.sideband_mod_hz,
            self.instability_lambda,
            self.modulation_depth0,
            self.duration_s,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(ArcError::InvalidParam("non-finite regime parameter".into()));
        }
        if self.base_amplitude < 0.0 || self.noise_sigma < 0.0 || self.burst_gain < 0.0 {
            return Err(ArcError::InvalidParam("amplitudes must be >= 0".into()));
        }
        if self.duration_s <= 0.0 {
            return Err(ArcError::InvalidParam("duration_s must be > 0".into()));
        }
        let nyquist = sample_rate / 2.0;
        if self.burst_band.0 >= self.burst_band.1 || self.burst_band.1 > nyquist {
            return Err(ArcError::InvalidParam(format!(
                "burst_band {:?} must be increasing and below Nyquist {nyquist}",
                self.burst_band
            )));
        }
        Ok(())
    }
}

/// One fixed-length analysis window of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    /// Window samples.
    pub samples: Vec<f64>,
    /// Offset of the first sample within the source trace.
    pub start_index: usize,
    /// Regime label, when known.
    pub label: Option<RegimeLabel>,
}

/// Synthesize one regime phase at the default 10 kHz sample rate.
///
/// Identical `(regime, params)` including the seed produce bit-identical
/// traces. The carrier phase is fixed (not seeded) so that noise-free stable
/// traces are pure deterministic sinusoids.
pub fn generate_phase(regime: RegimeLabel, params: &RegimeParams) -> Result<SignalTrace> {
    generate_phase_at(regime, params, DEFAULT_SAMPLE_RATE)
}

/// Synthesize one regime phase at an explicit sample rate.
pub fn generate_phase_at(
    regime: RegimeLabel,
    params: &RegimeParams,
    sample_rate: f64,
) -> Result<SignalTrace> {
    if sample_rate.is_nan() || sample_rate <= 0.0 {
        return Err(ArcError::InvalidParam("sample_rate must be > 0".into()));
    }
    params.validate(sample_rate)?;
    let n = (params.duration_s * sample_rate).round() as usize;
    if n == 0 {
        return Err(ArcError::InvalidParam("duration too short".into()));
    }
    let mut rng = seed::rng(params.seed);
    let dt = 1.0 / sample_rate;
    let w0 = 2.0 * PI * params.fundamental_hz;
    let w2 = 2.0 * w0;
    let a = params.base_amplitude;
    let h2 = params.harmonic2_ratio * a;

    let mut x = vec![0.0f64; n];
    match regime {
        RegimeLabel::Stable => {
            for (i, v) in x.iter_mut().enumerate() {
                let t = i as f64 * dt;
                *v = a * (w0 * t).sin() + h2 * (w2 * t).sin();
            }
            add_noise(&mut x, params.noise_sigma, &mut rng);
        }
        RegimeLabel::Transient => {
            for (i, v) in x.iter_mut().enumerate() {
                let t = i as f64 * dt;
                *v = a * (w0 * t).sin() + h2 * (w2 * t).sin();
            }
            add_noise(&mut x, params.noise_sigma, &mut rng);
            add_bursts(&mut x, params, sample_rate, &mut rng);
        }
        RegimeLabel::Extinction => {
            // Modulation depth and noise floor both grow with m(t); an
            // unstable arc is noisier as well as sideband-rich.
            let lam = params.instability_lambda;
            let m0 = params.modulation_depth0;
            let wm = 2.0 * PI * params.sideband_mod_hz;
            for (i, v) in x.iter_mut().enumerate() {
                let t = i as f64 * dt;
                let m = (m0 * (lam * t).exp()).min(1.0);
                *v = a * (1.0 + m * (wm * t).sin()) * (w0 * t).sin() + h2 * (w2 * t).sin();
            }
            if params.noise_sigma > 0.0 {
                for (i, v) in x.iter_mut().enumerate() {
                    let t = i as f64 * dt;
                    let m = (m0 * (lam * t).exp()).min(1.0);
                    let g: f64 = rng.sample(StandardNormal);
                    *v += g * params.noise_sigma * (1.0 + 3.0 * m);
                }
            }
        }
    }

    if let Some(clip) = params.clip_amps {
        for v in &mut x {
            *v = v.clamp(-clip, clip);
        }
    }
    SignalTrace::new(x, sample_rate)
}

fn add_noise(x: &mut [f64], sigma: f64, rng: &mut impl Rng) {
    if sigma > 0.0 {
        for v in x.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *v += g * sigma;
        }
    }
}

/// Overlay 3-8 raised-cosine noise bursts per second, band-limited to
/// `params.burst_band` by a windowed-sinc FIR filter.
fn add_bursts(x: &mut [f64], params: &RegimeParams, sample_rate: f64, rng: &mut impl Rng) {
    let n = x.len();
    let fir = bandpass_fir(params.burst_band.0, params.burst_band.1, sample_rate, 201);
    let per_second: u64 = rng.gen_range(3..=8);
    let count = ((per_second as f64 * params.duration_s).ceil() as usize).max(1);
    for _ in 0..count {
        let blen = ((rng.gen_range(0.04..0.12) * sample_rate) as usize).min(n);
        if blen < 8 {
            continue;
        }
        let onset = rng.gen_range(0..=(n - blen));
        let log_amp: f64 = rng.sample(StandardNormal);
        let amp = params.burst_gain * params.base_amplitude * (0.6 * log_amp).exp();
        // white noise, filtered, then shaped by a raised-cosine envelope
        let pad = fir.len() / 2;
        let white: Vec<f64> = (0..blen + 2 * pad)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        for i in 0..blen {
            let mut acc = 0.0;
            for (j, &h) in fir.iter().enumerate() {
                acc += h * white[i + j];
            }
            let env = 0.5 * (1.0 - (2.0 * PI * i as f64 / (blen - 1) as f64).cos());
            x[onset + i] += amp * acc * env;
        }
    }
}

/// Windowed-sinc bandpass FIR, Hann-tapered, odd tap count.
fn bandpass_fir(f1: f64, f2: f64, sample_rate: f64, taps: usize) -> Vec<f64> {
    debug_assert!(taps % 2 == 1);
    let mid = (taps - 1) as f64 / 2.0;
    (0..taps)
        .map(|i| {
            let k = i as f64 - mid;
            let ideal = if k == 0.0 {
                2.0 * (f2 - f1) / sample_rate
            } else {
                ((2.0 * PI * f2 / sample_rate * k).sin() - (2.0 * PI * f1 / sample_rate * k).sin())
                    / (PI * k)
            };
            let w = 0.5 * (1.0 - (2.0 * PI * i as f64 / (taps - 1) as f64).cos());
            ideal * w
        })
        .collect()
}

/// Number of full windows for a trace of `n` samples.
pub fn window_count(n: usize, window_len: usize, hop: usize) -> usize {
    if n < window_len || hop == 0 {
        0
    } else {
        (n - window_len) / hop + 1
    }
}

/// Slice a trace into overlapping fixed-length frames.
///
/// Frame count is `floor((N - window_len)/hop) + 1`; a trailing partial
/// window is discarded. Labels attached to the trace are propagated by
/// window index.
pub fn segment(trace: &SignalTrace, window_len: usize, hop: usize) -> Result<Vec<Frame>> {
    if window_len == 0 || hop == 0 {
        return Err(ArcError::InvalidParam(
            "window_len and hop must be >= 1".into(),
        ));
    }
    if trace.len() < window_len {
        return Err(ArcError::EmptyInput(format!(
            "trace of {} samples is shorter than window_len {}",
            trace.len(),
            window_len
        )));
    }
    let count = window_count(trace.len(), window_len, hop);
    if let Some(labels) = &trace.labels {
        if let Some(&(bad, _)) = labels.iter().find(|(i, _)| *i >= count) {
            return Err(ArcError::InvalidParam(format!(
                "label window_index {bad} >= window count {count}"
            )));
        }
    }
    let mut frames = Vec::with_capacity(count);
    for w in 0..count {
        let start = w * hop;
        let label = trace
            .labels
            .as_ref()
            .and_then(|ls| ls.iter().find(|(i, _)| *i == w).map(|(_, l)| *l));
        frames.push(Frame {
            samples: trace.samples[start..start + window_len].to_vec(),
            start_index: start,
            label,
        });
    }
    Ok(frames)
}

/// Assign a label to each window of a concatenated trace by majority sample
/// ownership over the labelled source ranges.
///
/// `ranges` are `(start_sample, end_sample_exclusive, label)` and must cover
/// the trace.
pub fn label_windows_by_ownership(
    n_samples: usize,
    window_len: usize,
    hop: usize,
    ranges: &[(usize, usize, RegimeLabel)],
) -> Vec<(usize, RegimeLabel)> {
    let count = window_count(n_samples, window_len, hop);
    (0..count)
        .map(|w| {
            let lo = w * hop;
            let hi = lo + window_len;
            let mut best = (0usize, RegimeLabel::Transient);
            for &(a, b, label) in ranges {
                let overlap = hi.min(b).saturating_sub(lo.max(a));
                if overlap > best.0 {
                    best = (overlap, label);
                }
            }
            (w, best.1)
        })
        .collect()
}

/// Supported on-disk trace formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Wav,
}

/// Load a trace from disk.
///
/// CSV must be either two columns `time_s,current_a` (timestamps uniform to
/// within 1 ppm; the rate is inferred) or a single `current_a` column, in
/// which case `sample_rate` must be supplied. WAV must be mono PCM16 or
/// float32; the rate comes from the header.
pub fn load_trace(
    path: impl AsRef<Path>,
    format: TraceFormat,
    sample_rate: Option<f64>,
) -> Result<SignalTrace> {
    match format {
        TraceFormat::Csv => load_csv(path.as_ref(), sample_rate),
        TraceFormat::Wav => load_wav(path.as_ref()),
    }
}

fn load_csv(path: &Path, sample_rate: Option<f64>) -> Result<SignalTrace> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(ArcError::EmptyInput("empty CSV file".into())),
    };
    let cols: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let two_col = match cols.as_slice() {
        ["time_s", "current_a"] => true,
        ["current_a"] => false,
        _ => {
            return Err(ArcError::Format(format!(
                "expected header `time_s,current_a` or `current_a`, got {header:?}"
            )))
        }
    };

    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2; // header is line 1
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        if two_col {
            let t: f64 = parse_field(parts.next(), lineno, "time_s")?;
            let c: f64 = parse_field(parts.next(), lineno, "current_a")?;
            times.push(t);
            samples.push(c);
        } else {
            let c: f64 = parse_field(parts.next(), lineno, "current_a")?;
            samples.push(c);
        }
        if parts.next().is_some() {
            return Err(ArcError::Parse {
                line: lineno,
                msg: "too many columns".into(),
            });
        }
    }
    if samples.is_empty() {
        return Err(ArcError::EmptyInput("CSV contains no samples".into()));
    }

    let rate = if two_col {
        infer_rate(&times)?
    } else {
        sample_rate.ok_or_else(|| ArcError::Format("sample rate required".into()))?
    };
    SignalTrace::new(samples, rate)
}

fn parse_field(field: Option<&str>, line: usize, name: &str) -> Result<f64> {
    let raw = field.ok_or_else(|| ArcError::Parse {
        line,
        msg: format!("missing column {name}"),
    })?;
    raw.trim().parse::<f64>().map_err(|e| ArcError::Parse {
        line,
        msg: format!("bad {name} value {raw:?}: {e}"),
    })
}

/// Infer the sample rate from timestamps, requiring uniformity within 1 ppm.
fn infer_rate(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(ArcError::Format(
            "need at least 2 rows to infer sample rate".into(),
        ));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if dt.is_nan() || dt <= 0.0 {
        return Err(ArcError::Format("timestamps must be increasing".into()));
    }
    let tol = dt * 1e-6;
    for (i, pair) in times.windows(2).enumerate() {
        let step = pair[1] - pair[0];
        if (step - dt).abs() > tol {
            return Err(ArcError::Format(format!(
                "non-uniform timestamps near row {}: step {step} vs mean {dt}",
                i + 2
            )));
        }
    }
    Ok(1.0 / dt)
}

fn load_wav(path: &Path) -> Result<SignalTrace> {
    let mut reader =
        hound::WavReader::open(path).map_err(|e| ArcError::Format(format!("wav: {e}")))?;
    let sp = reader.spec();
    if sp.channels != 1 {
        return Err(ArcError::Format(format!(
            "expected mono WAV, got {} channels",
            sp.channels
        )));
    }
    let samples: Vec<f64> = match (sp.sample_format, sp.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| ArcError::Format(format!("wav: {e}")))?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| ArcError::Format(format!("wav: {e}")))?,
        (fmt, bits) => {
            return Err(ArcError::Format(format!(
                "unsupported WAV encoding {fmt:?}/{bits}-bit; need PCM16 or float32 mono"
            )))
        }
    };
    SignalTrace::new(samples, sp.sample_rate as f64)
}

/// Write a trace as `time_s,current_a` CSV with LF endings.
///
/// Floats are written in shortest round-trip form, so `load_trace` returns
/// bitwise-equal samples.
pub fn save_trace_csv(trace: &SignalTrace, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(b"time_s,current_a\n")?;
    let dt = 1.0 / trace.sample_rate;
    for (i, &v) in trace.samples.iter().enumerate() {
        writeln!(out, "{},{}", i as f64 * dt, v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pure_tone_params() -> RegimeParams {
        RegimeParams {
            base_amplitude: 100.0,
            harmonic2_ratio: 0.0,
            noise_sigma: 0.0,
            duration_s: 1.0,
            seed: 1,
            ..RegimeParams::default()
        }
    }

    #[test]
    fn stable_pure_tone_rms_is_a_over_sqrt2() {
        // full periods at any seed: RMS = A/sqrt(2)
        for s in [1, 99] {
            let mut p = pure_tone_params();
            p.seed = s;
            let tr = generate_phase(RegimeLabel::Stable, &p).unwrap();
            let rms = (tr.samples.iter().map(|x| x * x).sum::<f64>() / tr.len() as f64).sqrt();
            assert_relative_eq!(rms, 100.0 / 2f64.sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn identical_seed_identical_trace() {
        let p = RegimeParams {
            seed: 42,
            ..RegimeParams::default()
        };
        for regime in RegimeLabel::ALL {
            let a = generate_phase(regime, &p).unwrap();
            let b = generate_phase(regime, &p).unwrap();
            assert_eq!(a.samples, b.samples, "{regime}");
        }
        let p2 = RegimeParams {
            seed: 43,
            ..RegimeParams::default()
        };
        let a = generate_phase(RegimeLabel::Transient, &p).unwrap();
        let b = generate_phase(RegimeLabel::Transient, &p2).unwrap();
        assert_ne!(a.samples, b.samples);
    }

    #[test]
    fn burst_band_above_nyquist_rejected() {
        let p = RegimeParams {
            burst_band: (100.0, 6000.0),
            ..RegimeParams::default()
        };
        assert!(generate_phase(RegimeLabel::Transient, &p).is_err());
    }

    #[test]
    fn non_finite_params_rejected() {
        let p = RegimeParams {
            noise_sigma: f64::NAN,
            ..RegimeParams::default()
        };
        assert!(generate_phase(RegimeLabel::Stable, &p).is_err());
    }

    #[test]
    fn clip_bounds_amplitudes() {
        let p = RegimeParams {
            clip_amps: Some(500.0),
            burst_gain: 20.0,
            seed: 7,
            ..RegimeParams::default()
        };
        let tr = generate_phase(RegimeLabel::Transient, &p).unwrap();
        let max = tr.samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(max <= 500.0);
    }

    #[test]
    fn segment_counts_match_formula() {
        let tr = SignalTrace::new(vec![0.0; 200], 10_000.0).unwrap();
        assert_eq!(segment(&tr, 200, 16).unwrap().len(), 1);

        let tr = SignalTrace::new(vec![0.0; 1000], 10_000.0).unwrap();
        let frames = segment(&tr, 200, 16).unwrap();
        assert_eq!(frames.len(), 51); // floor((1000-200)/16)+1
                                      // enumeration cross-check
        let mut n = 0;
        let mut start = 0;
        while start + 200 <= 1000 {
            n += 1;
            start += 16;
        }
        assert_eq!(frames.len(), n);
        assert_eq!(frames[1].start_index, 16);

        let tr = SignalTrace::new(vec![0.0; 199], 10_000.0).unwrap();
        assert!(matches!(
            segment(&tr, 200, 16),
            Err(ArcError::EmptyInput(_))
        ));
    }

    #[test]
    fn segment_propagates_labels() {
        let mut tr = SignalTrace::new(vec![0.0; 1000], 10_000.0).unwrap();
        tr.labels = Some(vec![
            (0, RegimeLabel::Stable),
            (50, RegimeLabel::Extinction),
        ]);
        let frames = segment(&tr, 200, 16).unwrap();
        assert_eq!(frames[0].label, Some(RegimeLabel::Stable));
        assert_eq!(frames[50].label, Some(RegimeLabel::Extinction));
        assert_eq!(frames[1].label, None);

        tr.labels = Some(vec![(51, RegimeLabel::Stable)]);
        assert!(segment(&tr, 200, 16).is_err());
    }

    #[test]
    fn ownership_labels_use_majority() {
        // windows of 100 with hop 100 over two 150-sample ranges
        let ranges = [
            (0usize, 150usize, RegimeLabel::Stable),
            (150, 300, RegimeLabel::Extinction),
        ];
        let labels = label_windows_by_ownership(300, 100, 100, &ranges);
        assert_eq!(
            labels,
            vec![
                (0, RegimeLabel::Stable),
                (1, RegimeLabel::Stable), // 100..150 stable vs 150..200 extinction: tie -> keeps larger overlap first
                (2, RegimeLabel::Extinction),
            ]
        );
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let p = RegimeParams {
            seed: 5,
            duration_s: 0.05,
            ..RegimeParams::default()
        };
        let tr = generate_phase(RegimeLabel::Transient, &p).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        save_trace_csv(&tr, &path).unwrap();
        let back = load_trace(&path, TraceFormat::Csv, None).unwrap();
        assert_eq!(back.samples, tr.samples);
        assert_relative_eq!(back.sample_rate, tr.sample_rate, max_relative = 1e-9);
    }

    #[test]
    fn csv_two_column_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let mut body = String::from("time_s,current_a\n");
        for i in 0..10_000 {
            body.push_str(&format!("{},{}\n", i as f64 / 10_000.0, i as f64));
        }
        std::fs::write(&path, body).unwrap();
        let tr = load_trace(&path, TraceFormat::Csv, None).unwrap();
        assert_eq!(tr.len(), 10_000);
        assert_relative_eq!(tr.sample_rate, 10_000.0, max_relative = 1e-9);
    }

    #[test]
    fn csv_single_column_needs_rate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        std::fs::write(&path, "current_a\n1.0\n2.0\n").unwrap();
        let err = load_trace(&path, TraceFormat::Csv, None).unwrap_err();
        assert!(err.to_string().contains("sample rate required"), "{err}");
        let ok = load_trace(&path, TraceFormat::Csv, Some(100.0)).unwrap();
        assert_eq!(ok.samples, vec![1.0, 2.0]);
    }

    #[test]
    fn csv_malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "time_s,current_a\n0.0,1.0\n0.1,oops\n").unwrap();
        match load_trace(&path, TraceFormat::Csv, None) {
            Err(ArcError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_non_uniform_timestamps_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("skew.csv");
        std::fs::write(&path, "time_s,current_a\n0.0,1.0\n0.1,1.0\n0.3,1.0\n").unwrap();
        assert!(matches!(
            load_trace(&path, TraceFormat::Csv, None),
            Err(ArcError::Format(_))
        ));
    }

    #[test]
    fn wav_round_trip_pcm16_and_f32() {
        let dir = tempfile::tempdir().unwrap();
        for (name, float) in [("a.wav", false), ("b.wav", true)] {
            let path = dir.path().join(name);
            let spec = hound::WavSpec {
                channels: 1,
                sample_rate: 10_000,
                bits_per_sample: if float { 32 } else { 16 },
                sample_format: if float {
                    hound::SampleFormat::Float
                } else {
                    hound::SampleFormat::Int
                },
            };
            let mut writer = hound::WavWriter::create(&path, spec).unwrap();
            for i in 0..100i32 {
                if float {
                    writer.write_sample(i as f32 / 100.0).unwrap();
                } else {
                    writer.write_sample(i as i16).unwrap();
                }
            }
            writer.finalize().unwrap();
            let tr = load_trace(&path, TraceFormat::Wav, None).unwrap();
            assert_eq!(tr.len(), 100);
            assert_relative_eq!(tr.sample_rate, 10_000.0);
        }
    }
}
