//! Builders for hand-made and random cue inputs shared by the test targets.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use relcue::attributes::{AttributeProfile, Interval};
use relcue::corpus::{Gender, Language, UtteranceRecord};
use relcue::mixer::MixturePlan;
use relcue::room::{RirGeometry, RoomSpec};

pub fn record(id: &str) -> UtteranceRecord {
    UtteranceRecord {
        id: id.to_string(),
        audio_path: PathBuf::from(format!("{id}.wav")),
        speaker_id: format!("spk-{id}"),
        language: Language::En,
        gender: Gender::Female,
        age: Some(30),
        emotion: Some("neutral".into()),
        transcription: Some(format!("words of {id}")),
        corpus: "hand".into(),
        part: None,
        split: None,
    }
}

pub fn profile(id: &str) -> AttributeProfile {
    AttributeProfile {
        utterance_id: id.to_string(),
        mean_f0_hz: Some(200.0),
        f0_span_octaves: Some(1.0),
        active_regions: vec![Interval::new(0.0, 2.0)],
        speaking_duration_s: 2.0,
        syllable_count: Some(10),
        speaking_rate_sps: Some(5.0),
        active_power_db: -20.0,
        duration_s: 2.0,
        trim_start_sample: 0,
        trim_len_samples: 32_000,
    }
}

pub fn geometry(id: &str, dist: [f64; 2]) -> RirGeometry {
    RirGeometry {
        id: id.to_string(),
        room: RoomSpec {
            length_m: 10.0,
            width_m: 10.0,
            height_m: 3.0,
            rt60_s: 0.4,
            mic_pos: [5.0, 5.0, 1.5],
            seed: 0,
        },
        src_pos: [[5.0, 5.0 + dist[0], 1.5], [5.0, 5.0 + dist[1], 1.5]],
        dist,
        horizontal_dist: dist,
    }
}

/// Plan over sources "a" and "b" with "a" as target.
pub fn plan(offsets: [f64; 2], sir_db: f64) -> MixturePlan {
    MixturePlan {
        id: "m".into(),
        source_ids: ["a".into(), "b".into()],
        durations_s: [2.0, 2.0],
        offsets_s: offsets,
        overlap_s: 0.0,
        mixture_len_s: 0.0,
        sir_db,
        target_idx: 1,
        rir_pair_id: "rir".into(),
        seed: 0,
    }
}

/// Everything `build_cue_set` needs for one mixture of two random sources.
pub struct RandomPair {
    pub records: [UtteranceRecord; 2],
    pub profiles: [AttributeProfile; 2],
    pub plan: MixturePlan,
    pub geometry: RirGeometry,
}

const WORDS: [&str; 8] = ["river", "garden", "yellow", "window", "paper", "tiger", "silver", "market"];
const EMOTIONS: [&str; 5] = ["happy", "angry", "sad", "neutral", "Happy"];

fn maybe<R: Rng, T>(rng: &mut R, p: f64, f: impl FnOnce(&mut R) -> T) -> Option<T> {
    if rng.random_bool(p) {
        Some(f(rng))
    } else {
        None
    }
}

fn random_source<R: Rng>(rng: &mut R, id: &str) -> (UtteranceRecord, AttributeProfile) {
    let mut r = record(id);
    r.language = Language::ALL[rng.random_range(0..Language::ALL.len())];
    r.gender = if rng.random_bool(0.5) { Gender::Male } else { Gender::Female };
    r.age = maybe(rng, 0.6, |g| g.random_range(18..80));
    r.emotion = maybe(rng, 0.6, |g| EMOTIONS[g.random_range(0..EMOTIONS.len())].to_string());
    r.transcription = maybe(rng, 0.9, |g| {
        (0..g.random_range(1..4))
            .map(|_| WORDS[g.random_range(0..WORDS.len())])
            .collect::<Vec<_>>()
            .join(" ")
    });
    let mut p = profile(id);
    p.mean_f0_hz = maybe(rng, 0.9, |g| g.random_range(80.0..300.0));
    // Occasionally a zero span, which the pitch-range cue treats as unknown.
    p.f0_span_octaves = maybe(rng, 0.9, |g| if g.random_bool(0.05) { 0.0 } else { g.random_range(0.05..1.5) });
    p.speaking_duration_s = rng.random_range(0.5..6.0);
    p.speaking_rate_sps = maybe(rng, 0.8, |g| g.random_range(2.0..7.0));
    (r, p)
}

pub fn random_pair<R: Rng>(rng: &mut R) -> RandomPair {
    let (ra, pa) = random_source(rng, "a");
    let (rb, pb) = random_source(rng, "b");
    // Coarse grids make exact ties, and therefore boundary cases, common.
    let offsets = [
        f64::from(rng.random_range(0..40u32)) * 0.05,
        f64::from(rng.random_range(0..40u32)) * 0.05,
    ];
    let sir = f64::from(rng.random_range(-24..=24i32)) * 0.25;
    let mut plan = plan(offsets, sir);
    plan.target_idx = rng.random_range(1..=2);
    let dist = [rng.random_range(0.4..2.2), rng.random_range(0.4..2.2)];
    RandomPair {
        records: [ra, rb],
        profiles: [pa, pb],
        plan,
        geometry: geometry("rir", dist),
    }
}
