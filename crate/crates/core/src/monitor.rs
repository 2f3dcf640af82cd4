//! Streaming early-warning monitor: per-hop feature extraction,
//! classification and the warning disjunction over a live sample stream.
//!
//! `step` consumes arbitrary chunks; events are emitted exactly at hop
//! boundaries, so any chunking of the same stream yields the identical
//! event sequence. A window with no measurable power cannot be classified
//! and is treated as unsafe: the event carries a degenerate flag and a
//! forced warning.

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::time::Instant;

use crate::classify::TrainedModel;
use crate::error::ArcError;
use crate::features::{self, DescriptorSeries, FeatureBands};
use crate::signal::{Frame, RegimeLabel};
use crate::tfr::SpectralPipeline;
use crate::Result;

/// Monitor settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonitorConfig {
    pub window_len: usize,
    pub hop: usize,
    pub nfft: usize,
    pub sample_rate: f64,
    /// ASI threshold delta for the warning disjunction.
    pub asi_threshold: f64,
    /// Events during warmup are emitted with warnings suppressed.
    pub warmup_windows: usize,
    /// Band geometry for the per-window descriptors.
    pub bands: FeatureBands,
    /// Optional EWMA smoothing factor for the entropy-rate estimate;
    /// `None` uses the raw trailing one-hop difference.
    pub ewma_alpha: Option<f64>,
    /// Consecutive windows the warning condition must hold before firing;
    /// 0 means instantaneous.
    pub debounce_windows: usize,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            window_len: crate::signal::DEFAULT_WINDOW_LEN,
            hop: crate::signal::DEFAULT_HOP,
            nfft: crate::tfr::DEFAULT_NFFT,
            sample_rate: crate::signal::DEFAULT_SAMPLE_RATE,
            asi_threshold: 2.5,
            warmup_windows: 3,
            bands: FeatureBands::default(),
            ewma_alpha: None,
            debounce_windows: 0,
        }
    }
}

impl MonitorConfig {
    fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.hop == 0 {
            return Err(ArcError::InvalidParam(
                "window_len and hop must be >= 1".into(),
            ));
        }
        if self.asi_threshold.is_nan() || self.asi_threshold <= 0.0 {
            return Err(ArcError::InvalidParam("asi_threshold must be > 0".into()));
        }
        if let Some(alpha) = self.ewma_alpha {
            if alpha.is_nan() || alpha <= 0.0 || alpha > 1.0 {
                return Err(ArcError::InvalidParam(
                    "ewma_alpha must lie in (0, 1]".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Why a warning fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningReason {
    Classifier,
    AsiThreshold,
    Both,
    None,
}

/// One emitted monitoring event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorEvent {
    /// Window-center time in stream seconds.
    pub frame_time_s: f64,
    /// Predicted regime; absent for degenerate windows.
    pub label: Option<RegimeLabel>,
    /// Per-class scores in the model's class order; absent when degenerate.
    pub scores: Option<Vec<f64>>,
    pub asi: Option<f64>,
    pub thd_arc: Option<f64>,
    pub h_s: Option<f64>,
    /// Trailing one-hop entropy rate; absent until two windows exist.
    pub dh_s_dt: Option<f64>,
    pub warning: bool,
    pub reason: WarningReason,
    pub degenerate: bool,
}

/// Streaming state: ring buffer of the newest `window_len` samples plus the
/// counters the rate estimate needs. Externally owned; one producer calls
/// `step` sequentially.
pub struct MonitorState {
    config: MonitorConfig,
    model: TrainedModel,
    pipeline: SpectralPipeline,
    buffer: VecDeque<f64>,
    samples_seen: usize,
    windows_emitted: usize,
    last_h_s: Option<f64>,
    consecutive_hits: usize,
}

impl MonitorState {
    pub fn new(config: MonitorConfig, model: TrainedModel) -> Result<Self> {
        config.validate()?;
        let pipeline = SpectralPipeline::new(config.window_len, config.nfft, config.sample_rate)?;
        Ok(Self {
            config,
            model,
            pipeline,
            buffer: VecDeque::new(),
            samples_seen: 0,
            windows_emitted: 0,
            last_h_s: None,
            consecutive_hits: 0,
        })
    }

    pub fn config(&self) -> &MonitorConfig {
        &self.config
    }

    /// Feed a chunk; returns one event per hop boundary crossed.
    ///
    /// Equivalent to feeding the samples one at a time: events depend only
    /// on the stream content, never on the chunking.
    pub fn step(&mut self, chunk: &[f64]) -> Result<Vec<MonitorEvent>> {
        if let Some(i) = chunk.iter().position(|x| !x.is_finite()) {
            return Err(ArcError::InvalidParam(format!(
                "non-finite sample at chunk offset {i}"
            )));
        }
        let mut events = Vec::new();
        for &sample in chunk {
            self.buffer.push_back(sample);
            if self.buffer.len() > self.config.window_len {
                self.buffer.pop_front();
            }
            self.samples_seen += 1;
            if self.samples_seen >= self.config.window_len
                && (self.samples_seen - self.config.window_len).is_multiple_of(self.config.hop)
            {
                events.push(self.emit()?);
            }
        }
        Ok(events)
    }

    fn emit(&mut self) -> Result<MonitorEvent> {
        let start_index = self.samples_seen - self.config.window_len;
        let frame = Frame {
            samples: self.buffer.iter().copied().collect(),
            start_index,
            label: None,
        };
        let warmup = self.windows_emitted < self.config.warmup_windows;
        self.windows_emitted += 1;

        let psd = self.pipeline.psd_frame(&frame)?;
        let event = match features::feature_vector_with(&frame, &psd, &self.config.bands) {
            Err(ArcError::DegenerateSpectrum(_)) => {
                self.last_h_s = None;
                self.consecutive_hits = 0;
                MonitorEvent {
                    frame_time_s: psd.frame_time_s,
                    label: None,
                    scores: None,
                    asi: None,
                    thd_arc: None,
                    h_s: None,
                    dh_s_dt: None,
                    // an unmeasurable arc is treated as unsafe
                    warning: !warmup,
                    reason: WarningReason::None,
                    degenerate: true,
                }
            }
            Err(other) => return Err(other),
            Ok(fv) => {
                let (label, scores) = self.model.predict(&fv.as_array())?;
                let hop_s = self.config.hop as f64 / self.config.sample_rate;
                // entropy tracked raw or through the flag-gated EWMA smoother
                let tracked = match (self.config.ewma_alpha, self.last_h_s) {
                    (Some(alpha), Some(prev)) => alpha * fv.h_s + (1.0 - alpha) * prev,
                    _ => fv.h_s,
                };
                let dh = self.last_h_s.map(|prev| (tracked - prev) / hop_s);
                self.last_h_s = Some(tracked);

                let by_class = label == RegimeLabel::Extinction;
                let by_asi = fv.asi > self.config.asi_threshold;
                let reason = match (by_class, by_asi) {
                    (true, true) => WarningReason::Both,
                    (true, false) => WarningReason::Classifier,
                    (false, true) => WarningReason::AsiThreshold,
                    (false, false) => WarningReason::None,
                };
                if by_class || by_asi {
                    self.consecutive_hits += 1;
                } else {
                    self.consecutive_hits = 0;
                }
                let debounced = self.consecutive_hits > self.config.debounce_windows;
                MonitorEvent {
                    frame_time_s: psd.frame_time_s,
                    label: Some(label),
                    scores: Some(scores),
                    asi: Some(fv.asi),
                    thd_arc: Some(fv.thd_arc),
                    h_s: Some(fv.h_s),
                    dh_s_dt: dh,
                    warning: !warmup && (by_class || by_asi) && debounced,
                    reason,
                    degenerate: false,
                }
            }
        };
        Ok(event)
    }
}

/// Run a whole trace through a fresh monitor; also reports the median
/// per-event processing time in seconds.
pub fn run_stream(
    config: MonitorConfig,
    model: TrainedModel,
    samples: &[f64],
    chunk_size: usize,
) -> Result<(Vec<MonitorEvent>, f64)> {
    let mut state = MonitorState::new(config, model)?;
    let mut events = Vec::new();
    let mut timings = Vec::new();
    for chunk in samples.chunks(chunk_size.max(1)) {
        let t0 = Instant::now();
        let emitted = state.step(chunk)?;
        let dt = t0.elapsed().as_secs_f64();
        if !emitted.is_empty() {
            timings.push(dt / emitted.len() as f64);
        }
        events.extend(emitted);
    }
    timings.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = timings.get(timings.len() / 2).copied().unwrap_or(0.0);
    Ok((events, median))
}

/// Descriptor series extracted from an event stream (skipping degenerate
/// windows), for index-tracking exports.
pub fn descriptor_series(events: &[MonitorEvent]) -> DescriptorSeries {
    let mut series = DescriptorSeries::default();
    for e in events {
        if let (Some(asi), Some(thd), Some(h_s)) = (e.asi, e.thd_arc, e.h_s) {
            series.push(e.frame_time_s, asi, thd, h_s);
        }
    }
    series
}
