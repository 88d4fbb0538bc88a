//! Per-utterance speech attributes: F0 statistics, active regions, speaking
//! duration and rate, and active-region power.

mod pyin;
mod syllables;
mod vad;

use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use pyin::{estimate_f0_track, estimate_f0_track_with, F0Track, PyinConfig};
pub use syllables::count_syllables;
pub use vad::{detect_active_regions, detect_active_regions_with, VadConfig};

use crate::audio::{self, SAMPLE_RATE};
use crate::corpus::UtteranceRecord;
use crate::error::{Error, Result};
use crate::mixer;

/// Pauses up to this long count towards speaking duration.
pub const MAX_NATURAL_PAUSE_S: f64 = 0.6;

/// Minimum voiced frames for pitch statistics.
pub const MIN_VOICED_FRAMES: usize = 5;

/// Half-open `[start, end)` interval in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Self {
        Interval { start, end }
    }

    pub fn len(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn shifted(&self, by: f64) -> Interval {
        Interval::new(self.start + by, self.end + by)
    }

    /// Sample indices covered at `sr`, clipped to `len` samples.
    pub fn sample_range(&self, sr: u32, len: usize) -> Range<usize> {
        let lo = ((self.start * sr as f64).round().max(0.0) as usize).min(len);
        let hi = ((self.end * sr as f64).round().max(0.0) as usize).min(len);
        lo..hi.max(lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchStats {
    pub mean_f0_hz: f64,
    pub f0_span_octaves: f64,
}

/// Linear-interpolated percentile of an ascending slice.
pub(crate) fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean voiced F0 and span `log2(P95 / P5)` in octaves.
pub fn compute_pitch_stats(track: &F0Track) -> Result<PitchStats> {
    let mut voiced = track.voiced_values();
    if voiced.len() < MIN_VOICED_FRAMES {
        return Err(Error::Unvoiced(voiced.len()));
    }
    voiced.sort_by(f64::total_cmp);
    let mean = voiced.iter().sum::<f64>() / voiced.len() as f64;
    let span = (percentile(&voiced, 95.0) / percentile(&voiced, 5.0)).log2();
    Ok(PitchStats {
        mean_f0_hz: mean,
        f0_span_octaves: span.max(0.0),
    })
}

/// Total region length plus every inter-region pause of at most 0.6 s.
pub fn speaking_duration(regions: &[Interval]) -> Result<f64> {
    if regions.is_empty() {
        return Err(Error::NoSpeech);
    }
    let mut total: f64 = regions.iter().map(Interval::len).sum();
    for w in regions.windows(2) {
        let gap = w[1].start - w[0].end;
        if gap <= MAX_NATURAL_PAUSE_S + 1e-9 {
            total += gap;
        }
    }
    Ok(total)
}

pub fn speaking_rate(syllables: usize, duration_s: f64) -> Result<f64> {
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::invalid(format!("speaking duration {duration_s} s")));
    }
    if syllables == 0 {
        return Err(Error::invalid("zero syllables"));
    }
    Ok(syllables as f64 / duration_s)
}

/// `10 log10` of the mean squared sample over the active regions only.
/// Returns `-inf` for all-zero regions.
pub fn active_power_db(samples: &[f32], regions: &[Interval], sr: u32) -> Result<f64> {
    if regions.is_empty() {
        return Err(Error::NoSpeech);
    }
    let mut sum = 0.0f64;
    let mut n = 0usize;
    for r in regions {
        for &s in &samples[r.sample_range(sr, samples.len())] {
            sum += (s as f64) * (s as f64);
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::invalid("active regions cover no samples"));
    }
    Ok(10.0 * (sum / n as f64).log10())
}

/// Measured attributes of one trimmed, capped utterance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeProfile {
    pub utterance_id: String,
    pub mean_f0_hz: Option<f64>,
    pub f0_span_octaves: Option<f64>,
    /// Relative to the start of the trimmed audio.
    pub active_regions: Vec<Interval>,
    pub speaking_duration_s: f64,
    pub syllable_count: Option<usize>,
    pub speaking_rate_sps: Option<f64>,
    pub active_power_db: f64,
    /// Length of the trimmed, capped audio.
    pub duration_s: f64,
    /// Where the trimmed audio starts in the source file, and its length,
    /// in 16 kHz samples.
    pub trim_start_sample: usize,
    pub trim_len_samples: usize,
}

impl AttributeProfile {
    /// Cuts the analysed window out of the full source audio.
    pub fn trimmed<'a>(&self, samples: &'a [f32]) -> Result<&'a [f32]> {
        samples
            .get(self.trim_start_sample..self.trim_start_sample + self.trim_len_samples)
            .ok_or_else(|| {
                Error::Mismatch(format!(
                    "{}: source has {} samples, profile expects {}..{}",
                    self.utterance_id,
                    samples.len(),
                    self.trim_start_sample,
                    self.trim_start_sample + self.trim_len_samples
                ))
            })
    }
}

/// A profile plus the trimmed, capped samples it was measured on.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub profile: AttributeProfile,
    pub samples: Vec<f32>,
}

/// Trims and caps `samples` (16 kHz) and measures every attribute.
///
/// Speaking rate divides the transcription's syllables by the speaking
/// duration of the whole trimmed utterance, since the transcription covers
/// all of it; every other attribute describes the capped audio.
pub fn analyze(record: &UtteranceRecord, samples: &[f32]) -> Result<Analysis> {
    let regions = detect_active_regions(samples, SAMPLE_RATE);
    if regions.is_empty() {
        return Err(Error::NoSpeech);
    }
    let full_offset = regions[0].start;
    let trim_start_sample = regions[0].sample_range(SAMPLE_RATE, samples.len()).start;
    let full_regions: Vec<Interval> = regions.iter().map(|r| r.shifted(-full_offset)).collect();
    let full_duration = speaking_duration(&full_regions)?;

    let (trimmed, regions) = mixer::trim_and_cap(samples, &regions, SAMPLE_RATE)?;
    let speaking_duration_s = speaking_duration(&regions)?;

    let pitch = estimate_f0_track(&trimmed, SAMPLE_RATE).and_then(|t| compute_pitch_stats(&t));
    if let Err(e) = &pitch {
        log::debug!("{}: pitch unavailable: {e}", record.id);
    }
    let pitch = pitch.ok();

    let syllable_count = record
        .transcription
        .as_deref()
        .and_then(|t| count_syllables(t, record.language).ok());
    let speaking_rate_sps = match syllable_count {
        Some(n) => Some(speaking_rate(n, full_duration)?),
        None => None,
    };
    let power = active_power_db(&trimmed, &regions, SAMPLE_RATE)?;
    let profile = AttributeProfile {
        utterance_id: record.id.clone(),
        mean_f0_hz: pitch.map(|p| p.mean_f0_hz),
        f0_span_octaves: pitch.map(|p| p.f0_span_octaves),
        active_regions: regions,
        speaking_duration_s,
        syllable_count,
        speaking_rate_sps,
        active_power_db: power,
        duration_s: trimmed.len() as f64 / SAMPLE_RATE as f64,
        trim_start_sample,
        trim_len_samples: trimmed.len(),
    };
    Ok(Analysis {
        profile,
        samples: trimmed,
    })
}

pub fn analyze_file(record: &UtteranceRecord) -> Result<Analysis> {
    let samples = audio::read_mono(&record.audio_path)?;
    analyze(record, &samples)
}
