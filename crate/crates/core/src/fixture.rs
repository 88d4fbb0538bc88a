//! Small synthetic corpus for tests and desk-scale builds.
//!
//! Utterances are harmonic tone sequences, one voiced burst per syllable of
//! the transcription, with speaker-dependent pitch, pitch movement and rate.
//! Everything is derived from one seed, so the corpus is reproducible
//! without shipping audio.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::attributes::count_syllables;
use crate::audio::{self, SAMPLE_RATE};
use crate::corpus::{write_manifest, Gender, Language, UtteranceRecord};
use crate::error::{Error, Result};
use crate::rng;

const EN_WORDS: [&str; 30] = [
    "morning", "river", "yellow", "window", "garden", "simple", "travel", "silver", "paper", "market",
    "doctor", "happy", "music", "orange", "table", "quiet", "winter", "basket", "castle", "forest",
    "pencil", "rabbit", "summer", "tiger", "water", "letter", "monday", "planet", "rocket", "sunset",
];
const FR_WORDS: [&str; 20] = [
    "bonjour", "maison", "soleil", "jardin", "rivière", "fenêtre", "chanson", "voiture", "marché", "château",
    "montagne", "lumière", "forêt", "crayon", "papier", "matin", "hiver", "étoile", "nuage", "poisson",
];
const DE_WORDS: [&str; 20] = [
    "morgen", "garten", "fenster", "sonne", "wasser", "blume", "brücke", "wolke", "straße", "kirche",
    "sommer", "winter", "tasche", "vogel", "himmel", "apfel", "schule", "löwe", "kerze", "freund",
];
const ZH_CHARS: &str = "天地人山水火木金土日月星风云雨雪花草鸟鱼春夏秋冬东西南北大小多少高低长短";

const EMOTIONS: [&str; 4] = ["angry", "happy", "sad", "neutral"];

/// One synthetic corpus: language, annotations and size.
struct CorpusSpec {
    name: &'static str,
    language: Language,
    speakers: usize,
    per_speaker: usize,
    emotion: bool,
    age: bool,
}

const CORPORA: [CorpusSpec; 4] = [
    CorpusSpec {
        name: "fixture-emotion",
        language: Language::En,
        speakers: 6,
        per_speaker: 2,
        emotion: true,
        age: false,
    },
    CorpusSpec {
        name: "fixture-age",
        language: Language::Fr,
        speakers: 6,
        per_speaker: 2,
        emotion: false,
        age: true,
    },
    CorpusSpec {
        name: "fixture-zh",
        language: Language::Zh,
        speakers: 8,
        per_speaker: 1,
        emotion: false,
        age: false,
    },
    CorpusSpec {
        name: "fixture-de",
        language: Language::De,
        speakers: 8,
        per_speaker: 1,
        emotion: false,
        age: false,
    },
];

/// Number of utterances [`write_fixture_corpus`] produces.
pub fn fixture_size() -> usize {
    CORPORA.iter().map(|c| c.speakers * c.per_speaker).sum()
}

struct Voice {
    f0_hz: f64,
    /// Relative depth of the slow pitch movement.
    vibrato: f64,
    syllables_per_s: f64,
    amplitude: f64,
}

fn sentence<R: Rng>(language: Language, target_syllables: usize, rng: &mut R) -> Result<String> {
    if language == Language::Zh {
        let chars: Vec<char> = ZH_CHARS.chars().collect();
        return Ok((0..target_syllables)
            .map(|_| chars[rng.random_range(0..chars.len())])
            .collect());
    }
    let words: &[&str] = match language {
        Language::Fr => &FR_WORDS,
        Language::De => &DE_WORDS,
        _ => &EN_WORDS,
    };
    let mut out: Vec<&str> = Vec::new();
    while out.is_empty() || count_syllables(&out.join(" "), language)? < target_syllables {
        out.push(words[rng.random_range(0..words.len())]);
    }
    Ok(out.join(" "))
}

/// Voiced bursts, one per syllable, between short silences.
fn synthesize<R: Rng>(voice: &Voice, syllables: usize, rng: &mut R) -> Vec<f32> {
    let sr = SAMPLE_RATE as f64;
    let lead = rng.random_range(0.15..0.4);
    let trail = rng.random_range(0.15..0.4);
    let syllable_s = 1.0 / voice.syllables_per_s;
    let voiced_s = 0.8 * syllable_s;
    let speech_s = syllables as f64 * syllable_s;
    let total = ((lead + speech_s + trail) * sr) as usize;
    let ramp = 0.015;
    let mod_phase = rng.random_range(0.0..TAU);
    let mut phase = 0.0f64;
    let mut out = Vec::with_capacity(total);
    for i in 0..total {
        let t = i as f64 / sr;
        let ts = t - lead;
        let mut env = 0.0;
        if ts >= 0.0 && ts < speech_s {
            let within = ts % syllable_s;
            if within < voiced_s {
                let edge = within.min(voiced_s - within);
                env = if edge < ramp {
                    0.5 - 0.5 * (std::f64::consts::PI * edge / ramp).cos()
                } else {
                    1.0
                };
            }
        }
        let drift = 1.0 - 0.08 * (ts.max(0.0) / speech_s).min(1.0);
        let f0 = voice.f0_hz * drift * (1.0 + voice.vibrato * (TAU * 0.8 * t + mod_phase).sin());
        phase += TAU * f0 / sr;
        let mut v = 0.0;
        for k in 1..=8 {
            v += (k as f64 * phase).sin() / k as f64;
        }
        let noise = rng.random_range(-1e-4..1e-4);
        out.push((voice.amplitude * env * v / 2.0 + noise) as f32);
    }
    out
}

/// Writes four small corpora (emotion-labelled English, age-labelled
/// French, plain Chinese and plain German) under `dir`, one sub-directory and
/// manifest each. Returns the manifest paths.
pub fn write_fixture_corpus(dir: &Path, seed: u64) -> Result<Vec<PathBuf>> {
    let mut manifests = Vec::new();
    let mut texts = std::collections::HashSet::new();
    for spec in &CORPORA {
        let corpus_dir = dir.join(spec.name);
        std::fs::create_dir_all(&corpus_dir).map_err(|e| Error::io(&corpus_dir, e))?;
        let mut records = Vec::new();
        for s in 0..spec.speakers {
            let speaker = format!("{}-spk{s}", spec.name);
            let mut g = rng::stream(seed, "fixture", &[&speaker]);
            let gender = if s % 2 == 0 { Gender::Female } else { Gender::Male };
            let base_f0 = match gender {
                Gender::Female => g.random_range(175.0..250.0),
                Gender::Male => g.random_range(95.0..140.0),
            };
            let base_vibrato = g.random_range(0.02..0.12);
            let base_rate = g.random_range(3.0..5.5);
            let age = spec.age.then(|| g.random_range(18..75u32));
            for u in 0..spec.per_speaker {
                let id = format!("{speaker}-u{u}");
                let emotion = spec.emotion.then(|| EMOTIONS[(s + u) % EMOTIONS.len()]);
                let (pitch_mul, vib_mul, rate_mul) = match emotion {
                    Some("angry") => (1.15, 1.5, 1.15),
                    Some("happy") => (1.1, 1.3, 1.05),
                    Some("sad") => (0.9, 0.6, 0.8),
                    _ => (1.0, 1.0, 1.0),
                };
                let voice = Voice {
                    f0_hz: base_f0 * pitch_mul,
                    vibrato: base_vibrato * vib_mul,
                    syllables_per_s: base_rate * rate_mul,
                    amplitude: g.random_range(0.2..0.6),
                };
                let max_syllables = (5.2 * voice.syllables_per_s).floor() as usize;
                let text = loop {
                    let n = g.random_range(5..=max_syllables.max(6));
                    let t = sentence(spec.language, n, &mut g)?;
                    if count_syllables(&t, spec.language)? <= max_syllables && texts.insert(t.clone()) {
                        break t;
                    }
                };
                let syllables = count_syllables(&text, spec.language)?;
                let samples = synthesize(&voice, syllables, &mut g);
                let file = format!("{id}.wav");
                audio::write_i16(&corpus_dir.join(&file), &samples, SAMPLE_RATE)?;
                records.push(UtteranceRecord {
                    id,
                    audio_path: PathBuf::from(file),
                    speaker_id: speaker.clone(),
                    language: spec.language,
                    gender,
                    age,
                    emotion: emotion.map(str::to_string),
                    transcription: Some(text),
                    corpus: spec.name.to_string(),
                    part: None,
                    split: None,
                });
            }
        }
        let manifest = corpus_dir.join("manifest.jsonl");
        write_manifest(&manifest, &records)?;
        manifests.push(manifest);
    }
    Ok(manifests)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attributes::analyze_file;
    use crate::corpus::ingest_manifest;

    #[test]
    fn fixture_is_deterministic_and_analyzable() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ma = write_fixture_corpus(a.path(), 5).unwrap();
        let mb = write_fixture_corpus(b.path(), 5).unwrap();
        let mut n = 0;
        for (pa, pb) in ma.iter().zip(&mb) {
            let ra = ingest_manifest(pa).unwrap();
            let rb = ingest_manifest(pb).unwrap();
            assert_eq!(ra.len(), rb.len());
            for (x, y) in ra.iter().zip(&rb) {
                assert_eq!(x.transcription, y.transcription);
                assert_eq!(std::fs::read(&x.audio_path).unwrap(), std::fs::read(&y.audio_path).unwrap());
                let prof = analyze_file(x).unwrap().profile;
                assert!(prof.mean_f0_hz.is_some(), "{}", x.id);
                assert!(prof.duration_s <= 6.0);
                assert!(prof.speaking_rate_sps.is_some());
                n += 1;
            }
        }
        assert_eq!(n, fixture_size());
        assert_eq!(n, 40);
    }
}
