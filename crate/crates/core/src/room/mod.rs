//! Room sampling, impulse-response simulation and reverberation checks.

mod ism;
mod rt60;

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use ism::image_source;
pub use rt60::{energy_decay_curve, estimate_rt60};

use crate::audio;
use crate::error::{Error, Result};
use crate::rng;

pub const SPEED_OF_SOUND: f64 = 343.0;
pub const MIC_HEIGHT_M: f64 = 1.5;
/// Extra response length beyond the requested RT60.
pub const TAIL_PADDING_S: f64 = 0.05;

pub const LENGTH_RANGE_M: (f64, f64) = (9.0, 11.0);
pub const WIDTH_RANGE_M: (f64, f64) = (9.0, 11.0);
pub const HEIGHT_RANGE_M: (f64, f64) = (2.6, 3.5);
pub const RT60_RANGE_S: (f64, f64) = (0.3, 0.6);
pub const HORIZONTAL_DIST_RANGE_M: (f64, f64) = (0.3, 1.5);
pub const SOURCE_HEIGHT_RANGE_M: (f64, f64) = (1.6, 1.9);
pub const WALL_CLEARANCE_M: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub length_m: f64,
    pub width_m: f64,
    pub height_m: f64,
    pub rt60_s: f64,
    pub mic_pos: [f64; 3],
    pub seed: u64,
}

impl RoomSpec {
    pub fn dims(&self) -> [f64; 3] {
        [self.length_m, self.width_m, self.height_m]
    }

    pub fn volume(&self) -> f64 {
        self.length_m * self.width_m * self.height_m
    }

    pub fn surface(&self) -> f64 {
        2.0 * (self.length_m * self.width_m
            + self.length_m * self.height_m
            + self.width_m * self.height_m)
    }

    /// Distance from `p` to the nearest wall, floor or ceiling.
    pub fn clearance(&self, p: [f64; 3]) -> f64 {
        self.dims()
            .iter()
            .zip(p)
            .map(|(&d, x)| x.min(d - x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        self.clearance(p) > 0.0
    }

    /// Uniform absorption coefficient from Sabine's formula.
    pub fn sabine_absorption(&self) -> Result<f64> {
        let alpha = 0.163 * self.volume() / (self.rt60_s * self.surface());
        if !(alpha > 0.0) || alpha >= 1.0 {
            return Err(Error::Unrealizable {
                alpha,
                room: format!(
                    "{:.2}x{:.2}x{:.2} m, RT60 {:.3} s",
                    self.length_m, self.width_m, self.height_m, self.rt60_s
                ),
            });
        }
        Ok(alpha)
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    rng.random_range(lo..=hi)
}

/// Uniform room dimensions and RT60; microphone at the horizontal centre.
pub fn sample_room<R: Rng>(rng: &mut R) -> RoomSpec {
    let length_m = uniform(rng, LENGTH_RANGE_M);
    let width_m = uniform(rng, WIDTH_RANGE_M);
    let height_m = uniform(rng, HEIGHT_RANGE_M);
    let rt60_s = uniform(rng, RT60_RANGE_S);
    RoomSpec {
        length_m,
        width_m,
        height_m,
        rt60_s,
        mic_pos: [length_m / 2.0, width_m / 2.0, MIC_HEIGHT_M],
        seed: 0,
    }
}

pub fn horizontal_distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn place_source<R: Rng>(room: &RoomSpec, rng: &mut R) -> [f64; 3] {
    loop {
        let r = uniform(rng, HORIZONTAL_DIST_RANGE_M);
        let az = rng.random_range(0.0..std::f64::consts::TAU);
        let z = uniform(rng, SOURCE_HEIGHT_RANGE_M);
        let p = [
            room.mic_pos[0] + r * az.cos(),
            room.mic_pos[1] + r * az.sin(),
            z,
        ];
        if room.clearance(p) >= WALL_CLEARANCE_M {
            return p;
        }
    }
}

/// Two speaker positions around the microphone.
pub fn place_sources<R: Rng>(room: &RoomSpec, rng: &mut R) -> [[f64; 3]; 2] {
    [place_source(room, rng), place_source(room, rng)]
}

pub fn rir_length(room: &RoomSpec, sr: u32) -> usize {
    ((room.rt60_s + TAIL_PADDING_S) * sr as f64).ceil() as usize
}

/// Time after which the image-source response hands over to the diffuse
/// tail (the usual early/late reflection boundary).
pub const DIFFUSE_ONSET_S: f64 = 0.05;
/// Length of the image-source stretch the tail level is matched to.
const LEVEL_MATCH_S: f64 = 0.02;

pub fn diffuse_onset(sr: u32) -> usize {
    (DIFFUSE_ONSET_S * sr as f64).round() as usize
}

/// Hybrid RIR: image sources with Sabine absorption on all six surfaces for
/// the early part, followed by exponentially decaying noise at the requested
/// RT60 from [`diffuse_onset`] on. The tail noise is seeded from the room seed
/// and source position, so the result is deterministic.
pub fn simulate_rir(room: &RoomSpec, src: [f64; 3], mic: [f64; 3], sr: u32) -> Result<Vec<f32>> {
    let alpha = room.sabine_absorption()?;
    check_positions(room, src, mic)?;
    let len = rir_length(room, sr);
    let onset = diffuse_onset(sr).min(len);
    let beta = (1.0 - alpha).sqrt();
    let mut h = image_source(room.dims(), src, mic, beta, len, onset, sr, SPEED_OF_SOUND);

    let win = ((LEVEL_MATCH_S * sr as f64) as usize).min(onset);
    let level = (h[onset - win..onset].iter().map(|v| v * v).sum::<f64>() / win as f64).sqrt();
    let tag = format!("{src:?}");
    let mut g = rng::stream(room.seed, "diffuse", &[&tag]);
    let amp = 3f64.sqrt();
    let decay = -3.0 * std::f64::consts::LN_10 / (room.rt60_s * sr as f64);
    for (k, v) in h.iter_mut().enumerate().skip(onset) {
        let env = level * (decay * (k - onset) as f64).exp();
        *v += env * g.random_range(-amp..amp);
    }
    Ok(h.into_iter().map(|v| v as f32).collect())
}

fn check_positions(room: &RoomSpec, src: [f64; 3], mic: [f64; 3]) -> Result<()> {
    if !room.contains(src) || !room.contains(mic) {
        return Err(Error::invalid("source or microphone outside the room"));
    }
    Ok(())
}

/// Pure image-source RIR over the full response length.
pub fn simulate_rir_with_absorption(
    room: &RoomSpec,
    src: [f64; 3],
    mic: [f64; 3],
    sr: u32,
    alpha: f64,
) -> Result<Vec<f32>> {
    check_positions(room, src, mic)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!("absorption {alpha} outside [0, 1]")));
    }
    let beta = (1.0 - alpha).sqrt();
    let len = rir_length(room, sr);
    let h = image_source(room.dims(), src, mic, beta, len, len, sr, SPEED_OF_SOUND);
    Ok(h.into_iter().map(|v| v as f32).collect())
}

/// Serializable description of a simulated RIR pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RirGeometry {
    pub id: String,
    pub room: RoomSpec,
    pub src_pos: [[f64; 3]; 2],
    /// 3-D source-to-microphone distances.
    pub dist: [f64; 2],
    pub horizontal_dist: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct RirPair {
    pub geometry: RirGeometry,
    pub rirs: [Vec<f32>; 2],
}

/// Samples a room and two sources from `seed` and simulates both RIRs.
pub fn generate_rir_pair(id: &str, seed: u64) -> Result<RirPair> {
    let mut g = rng::from_seed(seed);
    let mut room = sample_room(&mut g);
    room.seed = seed;
    let src_pos = place_sources(&room, &mut g);
    let mic = room.mic_pos;
    let rirs = [
        simulate_rir(&room, src_pos[0], mic, audio::SAMPLE_RATE)?,
        simulate_rir(&room, src_pos[1], mic, audio::SAMPLE_RATE)?,
    ];
    Ok(RirPair {
        geometry: RirGeometry {
            id: id.to_string(),
            room,
            src_pos,
            dist: [distance(src_pos[0], mic), distance(src_pos[1], mic)],
            horizontal_dist: [
                horizontal_distance(src_pos[0], mic),
                horizontal_distance(src_pos[1], mic),
            ],
        },
        rirs,
    })
}

/// Writes `<id>_1.wav` and `<id>_2.wav` under `dir`.
pub fn write_rir_pair(dir: &Path, pair: &RirPair) -> Result<()> {
    for (i, rir) in pair.rirs.iter().enumerate() {
        let p = dir.join(format!("{}_{}.wav", pair.geometry.id, i + 1));
        audio::write_f32(&p, rir, audio::SAMPLE_RATE)?;
    }
    Ok(())
}

pub fn read_rir_pair(dir: &Path, geometry: RirGeometry) -> Result<RirPair> {
    let read = |i: usize| audio::read_mono(&dir.join(format!("{}_{}.wav", geometry.id, i)));
    let rirs = [read(1)?, read(2)?];
    Ok(RirPair { geometry, rirs })
}
