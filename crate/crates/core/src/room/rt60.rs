//! Reverberation time from Schroeder backward integration.

use crate::error::{Error, Result};

const FIT_START_DB: f64 = -5.0;
const FIT_END_DB: f64 = -25.0;
/// A -25 dB crossing this close to the end of the signal comes from the
/// integration limit, not from decay.
const TAIL_GUARD: f64 = 0.95;

/// Energy decay curve in dB, normalized to 0 dB at the first sample.
/// Non-increasing by construction.
pub fn energy_decay_curve(rir: &[f32]) -> Vec<f64> {
    let mut acc = 0.0f64;
    let mut edc: Vec<f64> = rir
        .iter()
        .rev()
        .map(|&h| {
            acc += (h as f64) * (h as f64);
            acc
        })
        .collect();
    edc.reverse();
    let total = edc.first().copied().unwrap_or(0.0);
    edc.iter()
        .map(|&e| 10.0 * (e / total).log10())
        .collect()
}

/// RT60 from a least-squares line through the -5..-25 dB part of the energy
/// decay curve, extrapolated to 60 dB.
pub fn estimate_rt60(rir: &[f32], sr: u32) -> Result<f64> {
    if rir.len() < 2 || rir.iter().all(|&h| h == 0.0) {
        return Err(Error::DecayRange("impulse response is empty or silent".into()));
    }
    let edc = energy_decay_curve(rir);
    let start = edc
        .iter()
        .position(|&d| d <= FIT_START_DB)
        .ok_or_else(|| Error::DecayRange("never decays by 5 dB".into()))?;
    let end = edc
        .iter()
        .position(|&d| d <= FIT_END_DB)
        .ok_or_else(|| Error::DecayRange("never decays by 25 dB".into()))?;
    if end as f64 >= TAIL_GUARD * rir.len() as f64 {
        return Err(Error::DecayRange(
            "25 dB decay only reached at the end of the signal".into(),
        ));
    }
    if end <= start + 1 {
        return Err(Error::DecayRange("decay range too short to fit".into()));
    }
    let n = (end - start + 1) as f64;
    let ts = (start..=end).map(|i| i as f64 / sr as f64);
    let mean_t = ts.clone().sum::<f64>() / n;
    let mean_d = edc[start..=end].iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, &d) in ts.zip(&edc[start..=end]) {
        sxy += (t - mean_t) * (d - mean_d);
        sxx += (t - mean_t) * (t - mean_t);
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::DecayRange("non-negative decay slope".into()));
    }
    Ok(-60.0 / slope)
}
