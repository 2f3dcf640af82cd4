//! Windowed spectral analysis: Hann window, zero-padded FFT, one-sided PSD,
//! band-energy and peak-power operators.
//!
//! The PSD follows the Welch convention: the windowed frame is zero-padded to
//! `nfft`, transformed, converted to one-sided power with doubling of
//! interior bins, and normalized by `fs * sum(w^2)` so that
//! `sum(P) * delta_f` equals the windowed-signal mean power
//! `sum((x*w)^2) / sum(w^2)` exactly (Parseval).

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use crate::error::ArcError;
use crate::signal::Frame;
use crate::Result;

/// Default FFT size (zero-padded).
pub const DEFAULT_NFFT: usize = 4096;

/// Precomputed window weights with cached gains.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowWeights {
    /// Per-sample weights in `[0, 1]`, symmetric.
    pub weights: Vec<f64>,
    /// Coherent gain `sum(w) / L`.
    pub coherent_gain: f64,
    /// Energy gain `sum(w^2) / L`.
    pub energy_gain: f64,
}

impl WindowWeights {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `sum(w^2)`, the PSD normalization term.
    pub fn sum_sq(&self) -> f64 {
        self.energy_gain * self.weights.len() as f64
    }
}

/// Symmetric Hann window: `w[n] = 0.5 * (1 - cos(2*pi*n/(L-1)))`.
pub fn hann_window(length: usize) -> Result<WindowWeights> {
    if length < 2 {
        return Err(ArcError::InvalidParam(format!(
            "window length must be >= 2, got {length}"
        )));
    }
    let denom = (length - 1) as f64;
    let weights: Vec<f64> = (0..length)
        .map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / denom).cos()))
        .collect();
    let sum: f64 = weights.iter().sum();
    let sum_sq: f64 = weights.iter().map(|w| w * w).sum();
    Ok(WindowWeights {
        coherent_gain: sum / length as f64,
        energy_gain: sum_sq / length as f64,
        weights,
    })
}

/// One window's one-sided power spectral density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdFrame {
    /// Power values in A^2/Hz, `nfft/2 + 1` bins from DC to Nyquist.
    pub power: Vec<f64>,
    /// Bin spacing `fs / nfft` in Hz.
    pub bin_hz: f64,
    /// Window-center time in seconds.
    pub frame_time_s: f64,
}

impl PsdFrame {
    pub fn bins(&self) -> usize {
        self.power.len()
    }

    /// Nyquist frequency implied by the bin grid.
    pub fn nyquist_hz(&self) -> f64 {
        (self.bins() - 1) as f64 * self.bin_hz
    }

    /// Center frequency of bin `k`.
    pub fn bin_center_hz(&self, k: usize) -> f64 {
        k as f64 * self.bin_hz
    }

    /// Total power `sum(P) * delta_f` in A^2.
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.bin_hz
    }
}

/// Reusable spectral pipeline: window, FFT plan and geometry.
///
/// Stateless with respect to frames; shareable read-only across threads.
pub struct SpectralPipeline {
    window: WindowWeights,
    nfft: usize,
    sample_rate: f64,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl SpectralPipeline {
    /// Build a pipeline for frames of `window_len` samples.
    pub fn new(window_len: usize, nfft: usize, sample_rate: f64) -> Result<Self> {
        if !nfft.is_power_of_two() {
            return Err(ArcError::InvalidParam(format!(
                "nfft must be a power of two, got {nfft}"
            )));
        }
        if nfft < window_len {
            return Err(ArcError::InvalidParam(format!(
                "nfft {nfft} < window length {window_len}"
            )));
        }
        if sample_rate.is_nan() || sample_rate <= 0.0 {
            return Err(ArcError::InvalidParam("sample_rate must be > 0".into()));
        }
        let window = hann_window(window_len)?;
        let fft = FftPlanner::new().plan_fft_forward(nfft);
        Ok(Self {
            window,
            nfft,
            sample_rate,
            fft,
        })
    }

    pub fn window(&self) -> &WindowWeights {
        &self.window
    }

    pub fn nfft(&self) -> usize {
        self.nfft
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate / self.nfft as f64
    }

    /// Compute the one-sided PSD of one frame.
    pub fn psd_frame(&self, frame: &Frame) -> Result<PsdFrame> {
        psd_frame(
            frame,
            &self.window,
            self.nfft,
            self.sample_rate,
            self.fft.as_ref(),
        )
    }
}

/// Windowed, zero-padded, one-sided PSD of a frame (Welch normalization).
pub fn psd_frame(
    frame: &Frame,
    window: &WindowWeights,
    nfft: usize,
    sample_rate: f64,
    fft: &dyn rustfft::Fft<f64>,
) -> Result<PsdFrame> {
    let len = frame.samples.len();
    if window.len() != len {
        return Err(ArcError::DimensionMismatch {
            expected: window.len(),
            got: len,
        });
    }
    if nfft < len {
        return Err(ArcError::InvalidParam(format!(
            "nfft {nfft} < frame length {len}"
        )));
    }
    if let Some(i) = frame.samples.iter().position(|x| !x.is_finite()) {
        return Err(ArcError::InvalidParam(format!(
            "non-finite sample at frame offset {i}"
        )));
    }

    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(nfft);
    for (x, w) in frame.samples.iter().zip(&window.weights) {
        buf.push(Complex::new(x * w, 0.0));
    }
    buf.resize(nfft, Complex::new(0.0, 0.0));
    fft.process(&mut buf);

    let half = nfft / 2;
    let norm = 1.0 / (sample_rate * window.sum_sq());
    let mut power = Vec::with_capacity(half + 1);
    for (k, c) in buf.iter().take(half + 1).enumerate() {
        let mut p = c.norm_sqr() * norm;
        if k != 0 && k != half {
            p *= 2.0;
        }
        power.push(p);
    }
    let center = frame.start_index as f64 + len as f64 / 2.0;
    Ok(PsdFrame {
        power,
        bin_hz: sample_rate / nfft as f64,
        frame_time_s: center / sample_rate,
    })
}

/// Energy in `[f1, f2]`: sum of bins whose centers lie in the band, times
/// the bin width. Units A^2.
pub fn band_energy(psd: &PsdFrame, f1: f64, f2: f64) -> Result<f64> {
    if f1.is_nan()
        || f2.is_nan()
        || f1 < 0.0
        || f2 <= f1
        || f2 > psd.nyquist_hz() + psd.bin_hz * 0.5
    {
        return Err(ArcError::InvalidParam(format!(
            "band [{f1}, {f2}] must satisfy 0 <= f1 < f2 <= Nyquist"
        )));
    }
    let lo = (f1 / psd.bin_hz).ceil() as usize;
    let hi = (f2 / psd.bin_hz).floor() as usize;
    let hi = hi.min(psd.bins() - 1);
    if lo > hi {
        return Ok(0.0);
    }
    Ok(psd.power[lo..=hi].iter().sum::<f64>() * psd.bin_hz)
}

/// Maximum PSD value over the bins within `f0 +/- bin_hz` (up to three
/// candidates). Returns `(power, bin_index)`.
pub fn peak_power_at(psd: &PsdFrame, f0: f64) -> Result<(f64, usize)> {
    if f0.is_nan() || !(0.0..=psd.nyquist_hz()).contains(&f0) {
        return Err(ArcError::InvalidParam(format!(
            "f0 {f0} outside [0, Nyquist]"
        )));
    }
    let lo = ((f0 - psd.bin_hz) / psd.bin_hz).ceil().max(0.0) as usize;
    let hi = (((f0 + psd.bin_hz) / psd.bin_hz).floor() as usize).min(psd.bins() - 1);
    let mut best = (psd.power[lo], lo);
    for k in lo..=hi {
        if psd.power[k] > best.0 {
            best = (psd.power[k], k);
        }
    }
    Ok(best)
}

/// Export a spectrogram as a CSV matrix (rows = frames, columns = bins) with
/// a JSON sidecar describing the grid.
pub fn export_spectrogram(
    frames: &[PsdFrame],
    hop_s: f64,
    nfft: usize,
    csv_path: impl AsRef<Path>,
    sidecar_path: impl AsRef<Path>,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(csv_path)?);
    for frame in frames {
        let row: Vec<String> = frame.power.iter().map(|p| p.to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    let bin_hz = frames.first().map(|f| f.bin_hz).unwrap_or(0.0);
    let sidecar = serde_json::json!({
        "bin_hz": bin_hz,
        "hop_s": hop_s,
        "nfft": nfft,
        "frames": frames.len(),
    });
    std::fs::write(sidecar_path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}
