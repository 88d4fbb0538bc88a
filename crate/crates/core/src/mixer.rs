//! Two-speaker mixture assembly.

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::attributes::{active_power_db, Interval};
use crate::error::{Error, Result};

/// Utterances are truncated to this length, and two long utterances are laid
/// out to span exactly this long.
pub const MAX_MIX_S: f64 = 6.0;
/// Below this length the shorter utterance is nested inside the longer one.
pub const SHORT_UTTERANCE_S: f64 = 3.0;
pub const SIR_RANGE_DB: (f64, f64) = (-6.0, 6.0);
pub const PEAK_LIMIT: f32 = 0.99;

/// Cuts leading and trailing silence, then truncates to [`MAX_MIX_S`].
/// Regions are shifted onto the new timeline and clipped to it.
pub fn trim_and_cap(samples: &[f32], regions: &[Interval], sr: u32) -> Result<(Vec<f32>, Vec<Interval>)> {
    let (first, last) = match (regions.first(), regions.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::NoSpeech),
    };
    let range = Interval::new(first.start, last.end).sample_range(sr, samples.len());
    let cap = (MAX_MIX_S * sr as f64).round() as usize;
    let end = range.end.min(range.start + cap);
    let out = samples[range.start..end].to_vec();
    let offset = range.start as f64 / sr as f64;
    let len_s = out.len() as f64 / sr as f64;
    let shifted = regions
        .iter()
        .map(|r| {
            let s = r.shifted(-offset);
            Interval::new(s.start.max(0.0), s.end.min(len_s))
        })
        .filter(|r| !r.is_empty())
        .collect();
    Ok((out, shifted))
}

/// Start offsets of both utterances on the mixture timeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub offsets_s: [f64; 2],
    pub overlap_s: f64,
    pub mixture_len_s: f64,
}

pub fn overlap_of(offsets: [f64; 2], durations: [f64; 2]) -> f64 {
    let end = (offsets[0] + durations[0]).min(offsets[1] + durations[1]);
    let start = offsets[0].max(offsets[1]);
    (end - start).max(0.0)
}

/// Lays out two utterances of `d1` and `d2` seconds.
///
/// If either is shorter than 3 s, the shorter one sits at a uniformly random
/// offset inside the longer one (the longer one starts at 0). Otherwise the
/// first starts at 0 and the second at `6 - d2`, so the mixture spans exactly
/// 6 s and the overlap is `d1 + d2 - 6`. Random offsets are rounded to the
/// `sr` sample grid.
pub fn plan_overlap<R: Rng>(d1: f64, d2: f64, sr: u32, rng: &mut R) -> Result<Placement> {
    for d in [d1, d2] {
        if !(d > 0.0) || d > MAX_MIX_S + 1e-9 {
            return Err(Error::invalid(format!(
                "utterance duration {d} s outside (0, {MAX_MIX_S}]"
            )));
        }
    }
    let offsets = if d1.min(d2) < SHORT_UTTERANCE_S {
        let slack = (d1 - d2).abs();
        let u = if slack > 0.0 {
            rng.random_range(0.0..=slack)
        } else {
            0.0
        };
        let u = ((u * sr as f64).round() / sr as f64).min(slack);
        if d2 <= d1 {
            [0.0, u]
        } else {
            [u, 0.0]
        }
    } else {
        [0.0, MAX_MIX_S - d2]
    };
    let durations = [d1, d2];
    Ok(Placement {
        offsets_s: offsets,
        overlap_s: overlap_of(offsets, durations),
        mixture_len_s: (offsets[0] + d1).max(offsets[1] + d2),
    })
}

/// Everything needed to reproduce one mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixturePlan {
    pub id: String,
    pub source_ids: [String; 2],
    pub durations_s: [f64; 2],
    pub offsets_s: [f64; 2],
    pub overlap_s: f64,
    pub mixture_len_s: f64,
    /// Target-to-interference ratio over active regions.
    pub sir_db: f64,
    /// 1 or 2.
    pub target_idx: u8,
    pub rir_pair_id: String,
    pub seed: u64,
}

impl MixturePlan {
    pub fn source_index(&self, id: &str) -> Option<usize> {
        self.source_ids.iter().position(|s| s == id)
    }

    /// 0-based index of the target source.
    pub fn target(&self) -> usize {
        usize::from(self.target_idx) - 1
    }

    /// SIR as seen from source `idx` (0-based).
    pub fn sir_for(&self, idx: usize) -> f64 {
        if idx == self.target() {
            self.sir_db
        } else {
            -self.sir_db
        }
    }
}

fn next_fft_len(n: usize) -> usize {
    n.next_power_of_two()
}

/// Full linear convolution via FFT (length `a.len() + b.len() - 1`).
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let n = next_fft_len(out_len);
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fa.resize(n, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fb.resize(n, Complex::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / n as f64;
    fa[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Convolves a signal with a room impulse response.
pub fn apply_rir(samples: &[f32], rir: &[f32]) -> Result<Vec<f32>> {
    if rir.is_empty() {
        return Err(Error::invalid("empty impulse response"));
    }
    if samples.is_empty() {
        return Err(Error::invalid("empty signal"));
    }
    let a: Vec<f64> = samples.iter().map(|&x| x as f64).collect();
    let b: Vec<f64> = rir.iter().map(|&x| x as f64).collect();
    Ok(convolve(&a, &b).into_iter().map(|v| v as f32).collect())
}

/// Gain on the interference that realizes `sir_db` between the active-region
/// powers of the two (reverberant) signals.
pub fn scale_to_sir(
    target_rev: &[f32],
    interf_rev: &[f32],
    target_regions: &[Interval],
    interf_regions: &[Interval],
    sir_db: f64,
    sr: u32,
) -> Result<f64> {
    let pt = active_power_db(target_rev, target_regions, sr)?;
    let pi = active_power_db(interf_rev, interf_regions, sr)?;
    if !pi.is_finite() {
        return Err(Error::SilentInterference);
    }
    if !pt.is_finite() {
        return Err(Error::invalid("silent target"));
    }
    Ok(10f64.powf((pt - pi - sir_db) / 20.0))
}

/// Rendered mixture and supervision signals, all the same length.
#[derive(Debug, Clone)]
pub struct MixtureAudio {
    pub mixture: Vec<f32>,
    pub target_rev: Vec<f32>,
    pub target_clean: Vec<f32>,
    /// Gain applied to the reverberant interference before summing.
    pub interf_gain: f64,
    /// Joint scale applied by the clipping guard (1.0 if none).
    pub normalization_gain: f64,
    /// Active regions of target and interference on the output timeline.
    pub target_regions: Vec<Interval>,
    pub interf_regions: Vec<Interval>,
}

fn place(samples: &[f32], offset: usize, len: usize) -> Vec<f32> {
    let mut out = vec![0.0; len];
    out[offset..offset + samples.len()].copy_from_slice(samples);
    out
}

/// Pads both sources onto the mixture timeline, reverberates them, scales the
/// interference to the planned SIR and sums.
///
/// `sources`, `regions` and `rirs` are indexed like `plan.source_ids`; regions
/// are relative to each trimmed source.
pub fn assemble_mixture(
    plan: &MixturePlan,
    sources: [&[f32]; 2],
    regions: [&[Interval]; 2],
    rirs: [&[f32]; 2],
    sr: u32,
) -> Result<MixtureAudio> {
    let sr_f = sr as f64;
    let mut offsets = [0usize; 2];
    for i in 0..2 {
        let expect = (plan.durations_s[i] * sr_f).round() as usize;
        if sources[i].len() != expect {
            return Err(Error::Mismatch(format!(
                "source {} has {} samples, plan expects {expect}",
                plan.source_ids[i],
                sources[i].len()
            )));
        }
        offsets[i] = (plan.offsets_s[i] * sr_f).round() as usize;
    }
    let padded_len = (0..2).map(|i| offsets[i] + sources[i].len()).max().unwrap();
    let mut rev = [
        apply_rir(&place(sources[0], offsets[0], padded_len), rirs[0])?,
        apply_rir(&place(sources[1], offsets[1], padded_len), rirs[1])?,
    ];
    let total = rev[0].len().max(rev[1].len());
    for r in rev.iter_mut() {
        r.resize(total, 0.0);
    }
    let shifted = |i: usize| -> Vec<Interval> {
        let o = offsets[i] as f64 / sr_f;
        regions[i].iter().map(|r| r.shifted(o)).collect()
    };
    let t = plan.target();
    let n = 1 - t;
    let target_regions = shifted(t);
    let interf_regions = shifted(n);
    let g = scale_to_sir(&rev[t], &rev[n], &target_regions, &interf_regions, plan.sir_db, sr)?;
    let mut target_clean = place(sources[t], offsets[t], padded_len);
    target_clean.resize(total, 0.0);
    let [r0, r1] = rev;
    let (target_rev, interf_rev) = if t == 0 { (r0, r1) } else { (r1, r0) };
    let mut out = mix_with_gain(&target_rev, &interf_rev, g)?;
    out.target_clean = target_clean;
    out.target_regions = target_regions;
    out.interf_regions = interf_regions;
    limit_peak(&mut out);
    Ok(out)
}

/// `target_rev + g * interf_rev` without the clipping guard.
pub fn mix_with_gain(target_rev: &[f32], interf_rev: &[f32], g: f64) -> Result<MixtureAudio> {
    if target_rev.len() != interf_rev.len() {
        return Err(Error::Mismatch(format!(
            "length mismatch {} vs {}",
            target_rev.len(),
            interf_rev.len()
        )));
    }
    let mixture = target_rev
        .iter()
        .zip(interf_rev)
        .map(|(&t, &i)| (t as f64 + g * i as f64) as f32)
        .collect();
    Ok(MixtureAudio {
        mixture,
        target_rev: target_rev.to_vec(),
        target_clean: Vec::new(),
        interf_gain: g,
        normalization_gain: 1.0,
        target_regions: Vec::new(),
        interf_regions: Vec::new(),
    })
}

/// Scales all signals jointly so the mixture peak is at most [`PEAK_LIMIT`].
pub fn limit_peak(audio: &mut MixtureAudio) {
    let peak = crate::audio::peak(&audio.mixture);
    if peak > PEAK_LIMIT {
        let s = PEAK_LIMIT / peak;
        for v in audio
            .mixture
            .iter_mut()
            .chain(audio.target_rev.iter_mut())
            .chain(audio.target_clean.iter_mut())
        {
            *v *= s;
        }
        audio.normalization_gain *= s as f64;
    }
}
