//! Probabilistic YIN fundamental-frequency tracking.
//!
//! Per frame, the cumulative-mean-normalized difference function is scanned
//! for troughs. A beta(2, 18) prior over YIN thresholds plus a Boltzmann prior
//! over trough rank turns the troughs into pitch-candidate probabilities.
//! A hidden Markov model with one voiced and one unvoiced state per pitch bin
//! is then Viterbi-decoded. Defaults follow librosa's `pyin`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PyinConfig {
    pub fmin: f64,
    pub fmax: f64,
    pub frame_length: usize,
    pub win_length: usize,
    pub hop_length: usize,
    /// Pitch-bin resolution in semitones.
    pub resolution: f64,
    /// Octaves per second.
    pub max_transition_rate: f64,
    pub switch_prob: f64,
    pub no_trough_prob: f64,
    pub boltzmann_parameter: f64,
    pub n_thresholds: usize,
}

impl Default for PyinConfig {
    fn default() -> Self {
        PyinConfig {
            fmin: 60.0,
            fmax: 450.0,
            frame_length: 1024,
            win_length: 512,
            hop_length: 160,
            resolution: 0.1,
            max_transition_rate: 35.92,
            switch_prob: 0.01,
            no_trough_prob: 0.01,
            boltzmann_parameter: 2.0,
            n_thresholds: 100,
        }
    }
}

/// Per-frame F0 (Hz, `NaN` where unvoiced) and voicing decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Track {
    pub frame_hop_s: f64,
    pub values: Vec<f64>,
    pub voicing: Vec<bool>,
}

impl F0Track {
    pub fn voiced_values(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.voicing)
            .filter_map(|(&f, &v)| v.then_some(f))
            .collect()
    }

    pub fn n_voiced(&self) -> usize {
        self.voicing.iter().filter(|&&v| v).count()
    }
}

/// Beta(2, 18) CDF. For integer shape parameters the regularized incomplete
/// beta function is a binomial tail sum.
fn beta_2_18_cdf(x: f64) -> f64 {
    const A: u32 = 2;
    const N: u32 = 2 + 18 - 1;
    let mut total = 0.0;
    for j in A..=N {
        total += binomial(N, j) * x.powi(j as i32) * (1.0 - x).powi((N - j) as i32);
    }
    total.clamp(0.0, 1.0)
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Truncated geometric (Boltzmann) pmf over `0..n`.
fn boltzmann_pmf(k: usize, lambda: f64, n: usize) -> f64 {
    (1.0 - (-lambda).exp()) / (1.0 - (-lambda * n as f64).exp()) * (-lambda * k as f64).exp()
}

struct Layout {
    min_period: usize,
    max_period: usize,
    n_bins: usize,
    bins_per_semitone: f64,
    half_width: usize,
}

impl PyinConfig {
    fn layout(&self, sr: u32) -> Result<Layout> {
        let sr_f = sr as f64;
        if !(self.fmin > 0.0 && self.fmin < self.fmax && self.fmax < sr_f / 2.0) {
            return Err(Error::invalid(format!(
                "pitch range {}..{} Hz invalid at {sr} Hz",
                self.fmin, self.fmax
            )));
        }
        if self.win_length >= self.frame_length || self.hop_length == 0 {
            return Err(Error::invalid("frame/window/hop lengths inconsistent"));
        }
        let min_period = (sr_f / self.fmax).floor() as usize;
        let max_period = ((sr_f / self.fmin).ceil() as usize).min(self.frame_length - self.win_length - 1);
        if min_period + 2 > max_period {
            return Err(Error::invalid("frame too short for the pitch range"));
        }
        let bins_per_semitone = (1.0 / self.resolution).ceil();
        let n_bins = (12.0 * bins_per_semitone * (self.fmax / self.fmin).log2()).floor() as usize + 1;
        let max_semitones =
            (self.max_transition_rate * 12.0 * self.hop_length as f64 / sr_f).round() as usize;
        let width = max_semitones * bins_per_semitone as usize + 1;
        Ok(Layout {
            min_period,
            max_period,
            n_bins,
            bins_per_semitone,
            half_width: width / 2,
        })
    }
}

/// Cumulative-mean-normalized difference for periods `min_period..=max_period`.
fn cmnd(frame: &[f64], win: usize, min_period: usize, max_period: usize) -> Vec<f64> {
    let mut energy_prefix = Vec::with_capacity(frame.len() + 1);
    energy_prefix.push(0.0);
    for &x in frame {
        let last = *energy_prefix.last().unwrap();
        energy_prefix.push(last + x * x);
    }
    let energy = |start: usize| {
        let e = energy_prefix[start + win] - energy_prefix[start];
        if e.abs() < 1e-6 {
            0.0
        } else {
            e
        }
    };
    let e0 = energy(0);
    let mut diff = vec![0.0; max_period + 1];
    for (tau, d) in diff.iter_mut().enumerate().skip(1) {
        let mut acf = 0.0;
        for j in 0..win {
            acf += frame[j] * frame[j + tau];
        }
        if acf.abs() < 1e-6 {
            acf = 0.0;
        }
        *d = e0 + energy(tau) - 2.0 * acf;
    }
    let mut out = Vec::with_capacity(max_period - min_period + 1);
    let mut running = 0.0;
    for (tau, &d) in diff.iter().enumerate().skip(1) {
        running += d;
        if tau >= min_period {
            let mean = running / tau as f64;
            out.push(d / (mean + f64::MIN_POSITIVE));
        }
    }
    out
}

fn parabolic_shifts(y: &[f64]) -> Vec<f64> {
    let mut shifts = vec![0.0; y.len()];
    for i in 1..y.len().saturating_sub(1) {
        let a = y[i + 1] + y[i - 1] - 2.0 * y[i];
        let b = (y[i + 1] - y[i - 1]) / 2.0;
        if b.abs() < a.abs() {
            shifts[i] = -b / a;
        }
    }
    shifts
}

fn troughs(y: &[f64]) -> Vec<usize> {
    let n = y.len();
    let mut out = Vec::new();
    if n >= 2 && y[0] < y[1] {
        out.push(0);
    }
    for i in 1..n {
        let next = if i + 1 < n { y[i + 1] } else { y[i] };
        if y[i] < y[i - 1] && y[i] <= next {
            out.push(i);
        }
    }
    out
}

/// Tracks F0 over `samples` with the default configuration.
pub fn estimate_f0_track(samples: &[f32], sr: u32) -> Result<F0Track> {
    estimate_f0_track_with(samples, sr, &PyinConfig::default())
}

pub fn estimate_f0_track_with(samples: &[f32], sr: u32, cfg: &PyinConfig) -> Result<F0Track> {
    if samples.is_empty() {
        return Err(Error::invalid("empty waveform"));
    }
    let lay = cfg.layout(sr)?;
    let nb = lay.n_bins;

    // centered framing with zero padding
    let pad = cfg.frame_length / 2;
    let mut padded = vec![0.0f64; samples.len() + 2 * pad];
    for (p, &s) in padded[pad..].iter_mut().zip(samples) {
        *p = s as f64;
    }
    let n_frames = 1 + (padded.len() - cfg.frame_length) / cfg.hop_length;

    let thresholds: Vec<f64> = (0..=cfg.n_thresholds)
        .map(|i| i as f64 / cfg.n_thresholds as f64)
        .collect();
    let beta_probs: Vec<f64> = thresholds
        .windows(2)
        .map(|w| beta_2_18_cdf(w[1]) - beta_2_18_cdf(w[0]))
        .collect();

    // observation likelihoods, voiced bins only; unvoiced derived below
    let mut voiced_obs = vec![vec![0.0f64; nb]; n_frames];
    for (t, obs) in voiced_obs.iter_mut().enumerate() {
        let start = t * cfg.hop_length;
        let frame = &padded[start..start + cfg.frame_length];
        let y = cmnd(frame, cfg.win_length, lay.min_period, lay.max_period);
        let idx = troughs(&y);
        if idx.is_empty() {
            continue;
        }
        let shifts = parabolic_shifts(&y);
        let heights: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
        let mut probs = vec![0.0; idx.len()];
        for (k, &bp) in beta_probs.iter().enumerate() {
            let th = thresholds[k + 1];
            let n_below = heights.iter().filter(|&&h| h < th).count();
            let mut pos = 0;
            for (p, &h) in probs.iter_mut().zip(&heights) {
                if h < th {
                    *p += boltzmann_pmf(pos, cfg.boltzmann_parameter, n_below) * bp;
                    pos += 1;
                }
            }
        }
        let global_min = heights
            .iter()
            .enumerate()
            .fold(0, |best, (i, &h)| if h < heights[best] { i } else { best });
        let n_above: usize = thresholds[1..]
            .iter()
            .filter(|&&th| heights[global_min] >= th)
            .count();
        probs[global_min] += cfg.no_trough_prob * beta_probs[..n_above].iter().sum::<f64>();

        for (j, &i) in idx.iter().enumerate() {
            if probs[j] <= 0.0 {
                continue;
            }
            let period = (lay.min_period + i) as f64 + shifts[i];
            let f0 = sr as f64 / period;
            let bin = (12.0 * lay.bins_per_semitone * (f0 / cfg.fmin).log2()).round();
            let bin = bin.clamp(0.0, (nb - 1) as f64) as usize;
            obs[bin] += probs[j];
        }
    }

    let states = viterbi(&voiced_obs, &lay, cfg.switch_prob);
    let mut values = Vec::with_capacity(n_frames);
    let mut voicing = Vec::with_capacity(n_frames);
    for s in states {
        if s < nb {
            voicing.push(true);
            values.push(cfg.fmin * 2f64.powf(s as f64 / (12.0 * lay.bins_per_semitone)));
        } else {
            voicing.push(false);
            values.push(f64::NAN);
        }
    }
    Ok(F0Track {
        frame_hop_s: cfg.hop_length as f64 / sr as f64,
        values,
        voicing,
    })
}

fn ln(p: f64) -> f64 {
    (p + f64::MIN_POSITIVE).ln()
}

/// Banded Viterbi over `2 * n_bins` states (voiced bins, then unvoiced bins).
fn viterbi(voiced_obs: &[Vec<f64>], lay: &Layout, switch_prob: f64) -> Vec<usize> {
    let nb = lay.n_bins;
    let ns = 2 * nb;
    let hw = lay.half_width as isize;
    let n_frames = voiced_obs.len();
    if n_frames == 0 {
        return Vec::new();
    }

    // triangular local transition, row-normalized after truncation at edges
    let weight = |k: isize| 1.0 - k.unsigned_abs() as f64 / (hw + 1) as f64;
    let row_norm: Vec<f64> = (0..nb as isize)
        .map(|i| {
            (-hw..=hw)
                .filter(|k| (0..nb as isize).contains(&(i + k)))
                .map(weight)
                .sum()
        })
        .collect();
    let log_local = |from: usize, to: usize| {
        let k = to as isize - from as isize;
        ln(weight(k) / row_norm[from])
    };
    let log_stay = ln(1.0 - switch_prob);
    let log_switch = ln(switch_prob);

    let emission = |t: usize| -> Vec<f64> {
        let vo = &voiced_obs[t];
        let vp: f64 = vo.iter().sum::<f64>().clamp(0.0, 1.0);
        let uo = ln((1.0 - vp) / nb as f64);
        vo.iter().map(|&p| ln(p)).chain(std::iter::repeat_n(uo, nb)).collect()
    };

    let mut value: Vec<f64> = emission(0)
        .into_iter()
        .map(|e| e + ln(1.0 / ns as f64))
        .collect();
    let mut back = vec![vec![0u32; ns]; n_frames];
    for t in 1..n_frames {
        let em = emission(t);
        let mut next = vec![f64::NEG_INFINITY; ns];
        for to in 0..ns {
            let (to_block, to_bin) = (to / nb, to % nb);
            let lo = (to_bin as isize - hw).max(0) as usize;
            let hi = ((to_bin as isize + hw) as usize).min(nb - 1);
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for from_block in 0..2 {
                let sw = if from_block == to_block { log_stay } else { log_switch };
                for from_bin in lo..=hi {
                    let from = from_block * nb + from_bin;
                    let v = value[from] + sw + log_local(from_bin, to_bin);
                    if v > best {
                        best = v;
                        arg = from;
                    }
                }
            }
            next[to] = best + em[to];
            back[t][to] = arg as u32;
        }
        value = next;
    }
    let mut state = value
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > value[best] { i } else { best });
    let mut path = vec![0; n_frames];
    for t in (0..n_frames).rev() {
        path[t] = state;
        if t > 0 {
            state = back[t][state] as usize;
        }
    }
    path
}
