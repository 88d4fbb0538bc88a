//! Energy-based voice activity detection with hysteresis.

use super::Interval;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VadConfig {
    pub frame_s: f64,
    pub hop_s: f64,
    /// Opening threshold relative to the loudest frame (dB).
    pub open_db: f64,
    /// Closing threshold relative to the loudest frame (dB).
    pub close_db: f64,
    pub min_gap_s: f64,
    pub min_island_s: f64,
    /// Absolute level below which the whole signal counts as silent.
    pub floor_db: f64,
}

impl Default for VadConfig {
    fn default() -> Self {
        VadConfig {
            frame_s: 0.02,
            hop_s: 0.01,
            open_db: -35.0,
            close_db: -40.0,
            min_gap_s: 0.05,
            min_island_s: 0.05,
            floor_db: -100.0,
        }
    }
}

pub fn detect_active_regions(samples: &[f32], sr: u32) -> Vec<Interval> {
    detect_active_regions_with(samples, sr, &VadConfig::default())
}

pub fn detect_active_regions_with(samples: &[f32], sr: u32, cfg: &VadConfig) -> Vec<Interval> {
    if samples.is_empty() {
        return Vec::new();
    }
    let sr_f = sr as f64;
    let hop = ((cfg.hop_s * sr_f).round() as usize).max(1);
    let half_win = ((cfg.frame_s * sr_f).round() as usize / 2).max(1);
    let total_s = samples.len() as f64 / sr_f;
    let n_frames = samples.len().div_ceil(hop);

    // frame i is centred on sample i * hop
    let levels: Vec<f64> = (0..n_frames)
        .map(|i| {
            let c = i * hop;
            let lo = c.saturating_sub(half_win);
            let hi = (c + half_win).min(samples.len());
            let ms = samples[lo..hi].iter().map(|&s| (s as f64).powi(2)).sum::<f64>()
                / (2 * half_win) as f64;
            10.0 * (ms + 1e-20).log10()
        })
        .collect();
    let peak = levels.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if peak < cfg.floor_db {
        return Vec::new();
    }
    let open = peak + cfg.open_db;
    let close = peak + cfg.close_db;

    let frame_span = |i: usize| {
        let c = i as f64 * hop as f64 / sr_f;
        let h = hop as f64 / sr_f / 2.0;
        ((c - h).max(0.0), (c + h).min(total_s))
    };

    let mut raw = Vec::new();
    let mut active: Option<f64> = None;
    for (i, &db) in levels.iter().enumerate() {
        match active {
            None if db >= open => active = Some(frame_span(i).0),
            Some(start) if db < close => {
                raw.push(Interval::new(start, frame_span(i).0));
                active = None;
            }
            _ => {}
        }
    }
    if let Some(start) = active {
        raw.push(Interval::new(start, total_s));
    }

    let mut merged: Vec<Interval> = Vec::new();
    for r in raw {
        match merged.last_mut() {
            Some(last) if r.start - last.end < cfg.min_gap_s => last.end = r.end,
            _ => merged.push(r),
        }
    }
    merged.retain(|r| r.len() >= cfg.min_island_s);
    merged
}
