//! Spectral and time-domain descriptors and the ten-dimensional feature
//! vector consumed by the classifiers.
//!
//! Ratio descriptors (ASI, THD, HER, normalized band powers) are
//! dimensionless and invariant both to the PSD normalization convention and
//! to amplitude scaling of the input frame. Degenerate spectra (fundamental
//! power below epsilon) raise `DegenerateSpectrum` rather than returning
//! silent zeros.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::ArcError;
use crate::signal::{Frame, RegimeLabel};
use crate::tfr::{band_energy, peak_power_at, PsdFrame, SpectralPipeline};
use crate::Result;

/// Fundamental frequency of the mains carrier in Hz.
pub const FUNDAMENTAL_HZ: f64 = 50.0;
/// Half-width of the fundamental/harmonic analysis bands in Hz.
pub const BAND_HALF_WIDTH_HZ: f64 = 5.0;
/// Relative floor under which a spectrum counts as degenerate.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// Feature names in vector order, matching the CSV header.
pub const FEATURE_NAMES: [&str; 10] = [
    "asi", "thd_arc", "h_s", "p50_n", "p100_n", "her", "rms", "cf", "k", "zcr",
];

/// Band geometry for the spectral descriptors: the fundamental center and
/// the half-width shared by the fundamental and second-harmonic bands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureBands {
    pub fundamental_hz: f64,
    pub half_width_hz: f64,
}

impl Default for FeatureBands {
    fn default() -> Self {
        Self {
            fundamental_hz: FUNDAMENTAL_HZ,
            half_width_hz: BAND_HALF_WIDTH_HZ,
        }
    }
}

/// The ten descriptors in fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// Arc stability index: 45-55 Hz band energy over fundamental peak power
    /// times bin width.
    pub asi: f64,
    /// Harmonic distortion: sqrt of summed harmonic-to-fundamental peak
    /// power ratios, n >= 2.
    pub thd_arc: f64,
    /// Shannon entropy of the normalized PSD, in nats.
    pub h_s: f64,
    /// Fundamental band power over total power.
    pub p50_n: f64,
    /// Second-harmonic band power over total power.
    pub p100_n: f64,
    /// Harmonic energy ratio: 100 Hz band over 50 Hz band.
    pub her: f64,
    /// Root mean square amplitude in amperes.
    pub rms: f64,
    /// Crest factor: peak absolute amplitude over RMS.
    pub cf: f64,
    /// Pearson (non-excess) kurtosis.
    pub k: f64,
    /// Zero-crossing fraction in [0, 1].
    pub zcr: f64,
}

impl FeatureVector {
    /// Values as an array in the fixed feature order.
    pub fn as_array(&self) -> [f64; 10] {
        [
            self.asi,
            self.thd_arc,
            self.h_s,
            self.p50_n,
            self.p100_n,
            self.her,
            self.rms,
            self.cf,
            self.k,
            self.zcr,
        ]
    }

    pub fn from_array(v: [f64; 10]) -> Self {
        Self {
            asi: v[0],
            thd_arc: v[1],
            h_s: v[2],
            p50_n: v[3],
            p100_n: v[4],
            her: v[5],
            rms: v[6],
            cf: v[7],
            k: v[8],
            zcr: v[9],
        }
    }
}

/// Per-frame descriptor traces for index tracking.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DescriptorSeries {
    /// Window-center times in seconds, strictly increasing by the hop.
    pub times_s: Vec<f64>,
    pub asi: Vec<f64>,
    pub thd_arc: Vec<f64>,
    pub h_s: Vec<f64>,
}

impl DescriptorSeries {
    pub fn push(&mut self, time_s: f64, asi: f64, thd: f64, h_s: f64) {
        self.times_s.push(time_s);
        self.asi.push(asi);
        self.thd_arc.push(thd);
        self.h_s.push(h_s);
    }

    pub fn len(&self) -> usize {
        self.times_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times_s.is_empty()
    }
}

fn degeneracy_floor(psd: &PsdFrame) -> f64 {
    DEGENERACY_EPS * psd.total_power()
}

/// Arc stability index.
///
/// `band_energy(45, 55) / (peak_power_at(50) * bin_hz)`; the bin-width factor
/// makes the ratio dimensionless (band-bins-to-peak-bin power ratio). Equals
/// 1 when all band energy sits in the peak bin.
pub fn asi(psd: &PsdFrame) -> Result<f64> {
    asi_with(psd, &FeatureBands::default())
}

/// [`asi`] over explicit band geometry.
pub fn asi_with(psd: &PsdFrame, bands: &FeatureBands) -> Result<f64> {
    let f0 = bands.fundamental_hz;
    let (peak, _) = peak_power_at(psd, f0)?;
    let floor = degeneracy_floor(psd) / psd.bin_hz;
    if peak <= floor || peak == 0.0 {
        return Err(ArcError::DegenerateSpectrum(format!(
            "fundamental peak {peak} at {f0} Hz below epsilon"
        )));
    }
    let band = band_energy(psd, f0 - bands.half_width_hz, f0 + bands.half_width_hz)?;
    Ok(band / (peak * psd.bin_hz))
}

/// Harmonic distortion of the arc current.
///
/// `sqrt( sum_{n=2}^{N} P(n*f0) / P(f0) )` with `P` the peak power near each
/// harmonic; the square root of the power ratio keeps the descriptor
/// dimensionless and scale-invariant. `n_max = 0` means every harmonic below
/// Nyquist; harmonics above Nyquist are truncated.
pub fn thd_arc(psd: &PsdFrame, f0: f64, n_max: usize) -> Result<f64> {
    let (fund, _) = peak_power_at(psd, f0)?;
    let floor = degeneracy_floor(psd) / psd.bin_hz;
    if fund <= floor || fund == 0.0 {
        return Err(ArcError::DegenerateSpectrum(format!(
            "fundamental peak {fund} at {f0} Hz below epsilon"
        )));
    }
    let nyquist = psd.nyquist_hz();
    let highest = (nyquist / f0).floor() as usize;
    let n_max = if n_max == 0 {
        highest
    } else {
        n_max.min(highest)
    };
    if n_max < 2 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for n in 2..=n_max {
        let (p, _) = peak_power_at(psd, n as f64 * f0)?;
        sum += p;
    }
    Ok((sum / fund).sqrt())
}

/// Shannon entropy of the normalized PSD, `-sum p ln p` in nats, with
/// `0 ln 0 := 0`.
pub fn spectral_entropy(psd: &PsdFrame) -> Result<f64> {
    let total: f64 = psd.power.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(ArcError::DegenerateSpectrum("zero total power".into()));
    }
    let mut h = 0.0;
    for &p in &psd.power {
        if p > 0.0 {
            let q = p / total;
            h -= q * q.ln();
        }
    }
    Ok(h)
}

/// Harmonic energy ratio: band energy around 100 Hz over band energy around
/// 50 Hz, half-width `epsilon_hz`.
pub fn her(psd: &PsdFrame, epsilon_hz: f64) -> Result<f64> {
    her_with(
        psd,
        &FeatureBands {
            fundamental_hz: FUNDAMENTAL_HZ,
            half_width_hz: epsilon_hz,
        },
    )
}

/// [`her`] over explicit band geometry.
pub fn her_with(psd: &PsdFrame, bands: &FeatureBands) -> Result<f64> {
    let (f0, eps) = (bands.fundamental_hz, bands.half_width_hz);
    let num = band_energy(psd, 2.0 * f0 - eps, 2.0 * f0 + eps)?;
    let denom = band_energy(psd, f0 - eps, f0 + eps)?;
    if denom <= degeneracy_floor(psd) || denom == 0.0 {
        return Err(ArcError::DegenerateSpectrum(
            "fundamental band energy below epsilon".into(),
        ));
    }
    Ok(num / denom)
}

/// Sideband power deviation: population variance of the PSD values across
/// the 45-55 Hz bins. Computed and exportable but not part of the
/// ten-feature vector.
pub fn spd(psd: &PsdFrame) -> Result<f64> {
    let lo = ((FUNDAMENTAL_HZ - BAND_HALF_WIDTH_HZ) / psd.bin_hz).ceil() as usize;
    let hi = ((FUNDAMENTAL_HZ + BAND_HALF_WIDTH_HZ) / psd.bin_hz).floor() as usize;
    let hi = hi.min(psd.bins() - 1);
    if hi < lo + 1 {
        return Err(ArcError::InvalidParam(
            "sideband band contains fewer than 2 bins".into(),
        ));
    }
    let vals = &psd.power[lo..=hi];
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    Ok(vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n)
}

/// Time-domain descriptors of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeFeatures {
    pub rms: f64,
    pub cf: f64,
    pub k: f64,
    pub zcr: f64,
    /// True when the frame is constant, making CF and kurtosis undefined;
    /// both are emitted as 0 in that case.
    pub degenerate: bool,
}

/// RMS, crest factor, Pearson kurtosis and zero-crossing fraction.
pub fn time_features(frame: &Frame) -> Result<TimeFeatures> {
    let x = &frame.samples;
    if x.is_empty() {
        return Err(ArcError::EmptyInput("empty frame".into()));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(ArcError::InvalidParam(format!(
            "non-finite sample at frame offset {i}"
        )));
    }
    let n = x.len() as f64;
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let zcr = if x.len() < 2 {
        0.0
    } else {
        x.windows(2).filter(|p| p[0] * p[1] < 0.0).count() as f64 / (n - 1.0)
    };
    if m2 == 0.0 {
        // constant frame: CF and kurtosis undefined
        return Ok(TimeFeatures {
            rms,
            cf: 0.0,
            k: 0.0,
            zcr,
            degenerate: true,
        });
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(TimeFeatures {
        rms,
        cf: peak / rms,
        k: m4 / (m2 * m2),
        zcr,
        degenerate: false,
    })
}

/// Assemble the ten-feature vector from a frame and its PSD.
///
/// The PSD must come from this frame through the configured pipeline; the
/// result is a pure function of the two.
pub fn feature_vector(frame: &Frame, psd: &PsdFrame) -> Result<FeatureVector> {
    feature_vector_with(frame, psd, &FeatureBands::default())
}

/// [`feature_vector`] over explicit band geometry.
pub fn feature_vector_with(
    frame: &Frame,
    psd: &PsdFrame,
    bands: &FeatureBands,
) -> Result<FeatureVector> {
    let total = psd.total_power();
    if total.is_nan() || total <= 0.0 {
        return Err(ArcError::DegenerateSpectrum("zero total power".into()));
    }
    let (f0, eps) = (bands.fundamental_hz, bands.half_width_hz);
    let tf = time_features(frame)?;
    let asi_v = asi_with(psd, bands)?;
    let thd_v = thd_arc(psd, f0, 0)?;
    let h_s = spectral_entropy(psd)?;
    let p50 = band_energy(psd, f0 - eps, f0 + eps)? / total;
    let p100 = band_energy(psd, 2.0 * f0 - eps, 2.0 * f0 + eps)? / total;
    let her_v = her_with(psd, bands)?;
    Ok(FeatureVector {
        asi: asi_v,
        thd_arc: thd_v,
        h_s,
        p50_n: p50,
        p100_n: p100,
        her: her_v,
        rms: tf.rms,
        cf: tf.cf,
        k: tf.k,
        zcr: tf.zcr,
    })
}

/// Forward first difference of the entropy series divided by the hop
/// duration; length is `frames - 1`.
pub fn entropy_rate(series: &DescriptorSeries) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(ArcError::EmptyInput(
            "entropy rate needs at least 2 frames".into(),
        ));
    }
    Ok(series
        .h_s
        .windows(2)
        .zip(series.times_s.windows(2))
        .map(|(h, t)| (h[1] - h[0]) / (t[1] - t[0]))
        .collect())
}

/// One row of the feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub frame: usize,
    pub features: FeatureVector,
    pub label: Option<RegimeLabel>,
}

/// Run the full extraction over a set of frames.
pub fn extract_features(pipeline: &SpectralPipeline, frames: &[Frame]) -> Result<Vec<FeatureRow>> {
    extract_features_with(pipeline, frames, &FeatureBands::default())
}

/// [`extract_features`] over explicit band geometry.
pub fn extract_features_with(
    pipeline: &SpectralPipeline,
    frames: &[Frame],
    bands: &FeatureBands,
) -> Result<Vec<FeatureRow>> {
    frames
        .iter()
        .enumerate()
        .map(|(i, frame)| {
            let psd = pipeline.psd_frame(frame)?;
            Ok(FeatureRow {
                frame: i,
                features: feature_vector_with(frame, &psd, bands)?,
                label: frame.label,
            })
        })
        .collect()
}

/// Write the feature table in the interchange format:
/// `frame,asi,thd_arc,h_s,p50_n,p100_n,her,rms,cf,k,zcr,label`.
pub fn write_feature_csv(rows: &[FeatureRow], path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "frame,{},label", FEATURE_NAMES.join(","))?;
    for row in rows {
        let vals: Vec<String> = row.features.as_array().iter().map(f64::to_string).collect();
        let label = row.label.map(|l| l.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{}", row.frame, vals.join(","), label)?;
    }
    Ok(())
}

/// Read a feature table written by [`write_feature_csv`].
pub fn read_feature_csv(path: impl AsRef<Path>) -> Result<Vec<FeatureRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;
    let expected = format!("frame,{},label", FEATURE_NAMES.join(","));
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != expected {
        return Err(ArcError::Format(format!(
            "feature CSV header mismatch: expected {expected:?}, got {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ArcError::Parse {
            line: i + 2,
            msg: e.to_string(),
        })?;
        let parse = |j: usize| -> Result<f64> {
            record[j].parse().map_err(|e| ArcError::Parse {
                line: i + 2,
                msg: format!("column {j}: {e}"),
            })
        };
        let frame: usize = record[0].parse().map_err(|e| ArcError::Parse {
            line: i + 2,
            msg: format!("frame index: {e}"),
        })?;
        let mut vals = [0.0; 10];
        for (j, v) in vals.iter_mut().enumerate() {
            *v = parse(j + 1)?;
        }
        let label = match record[11].trim() {
            "" => None,
            s => Some(RegimeLabel::parse(s)?),
        };
        rows.push(FeatureRow {
            frame,
            features: FeatureVector::from_array(vals),
            label,
        });
    }
    Ok(rows)
}
