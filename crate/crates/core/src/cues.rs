//! Inter-speaker relative cues.
//!
//! Continuous attributes are compared against auditory thresholds and land in
//! one of two directional groups or "similar". Discrete attributes are either
//! "same" or carry the target's value. All labels take the target's
//! perspective.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::attributes::AttributeProfile;
use crate::corpus::{normalize_text, UtteranceRecord};
use crate::error::{Error, Result};
use crate::mixer::MixturePlan;
use crate::room::RirGeometry;

/// Auditory thresholds. Relative thresholds are fractions of the smaller value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub speaking_rate_rel: f64,
    pub speaking_duration_rel: f64,
    pub pitch_level_hz: f64,
    pub pitch_range_rel: f64,
    pub distance_m: f64,
    pub age_years: f64,
    pub loudness_db: f64,
    pub temporal_order_s: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            speaking_rate_rel: 0.15,
            speaking_duration_rel: 0.15,
            pitch_level_hz: 5.0,
            pitch_range_rel: 0.25,
            distance_m: 0.5,
            age_years: 10.0,
            loudness_db: 3.0,
            temporal_order_s: 0.1,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.speaking_rate_rel,
            self.speaking_duration_rel,
            self.pitch_level_hz,
            self.pitch_range_rel,
            self.distance_m,
            self.age_years,
            self.loudness_db,
            self.temporal_order_s,
        ];
        if all.iter().all(|t| t.is_finite() && *t > 0.0) {
            Ok(())
        } else {
            Err(Error::Config("thresholds must be finite and > 0".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueKind {
    Language,
    Gender,
    Transcription,
    Emotion,
    TemporalOrder,
    Age,
    SpeakingRate,
    SpeakingDuration,
    PitchLevel,
    PitchRange,
    Loudness,
    Distance,
}

impl CueKind {
    pub const ALL: [CueKind; 12] = [
        CueKind::Language,
        CueKind::Gender,
        CueKind::Transcription,
        CueKind::Emotion,
        CueKind::TemporalOrder,
        CueKind::Age,
        CueKind::SpeakingRate,
        CueKind::SpeakingDuration,
        CueKind::PitchLevel,
        CueKind::PitchRange,
        CueKind::Loudness,
        CueKind::Distance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CueKind::Language => "language",
            CueKind::Gender => "gender",
            CueKind::Transcription => "transcription",
            CueKind::Emotion => "emotion",
            CueKind::TemporalOrder => "temporal_order",
            CueKind::Age => "age",
            CueKind::SpeakingRate => "speaking_rate",
            CueKind::SpeakingDuration => "speaking_duration",
            CueKind::PitchLevel => "pitch_level",
            CueKind::PitchRange => "pitch_range",
            CueKind::Loudness => "loudness",
            CueKind::Distance => "distance",
        }
    }

    pub fn parse(s: &str) -> Result<CueKind> {
        CueKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownCue(s.to_string()))
    }
}

impl fmt::Display for CueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One cue label. Serialized as a lowercase word, or the raw value for
/// discrete cues that differ.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum CueLabel {
    Same,
    Similar,
    Unknown,
    First,
    Second,
    Older,
    Younger,
    Faster,
    Slower,
    Longer,
    Shorter,
    Higher,
    Lower,
    Wider,
    Narrower,
    Louder,
    Quieter,
    Farther,
    Nearer,
    Male,
    Female,
    Value(String),
}

const WORDS: [(CueLabel, &str); 21] = [
    (CueLabel::Same, "same"),
    (CueLabel::Similar, "similar"),
    (CueLabel::Unknown, "unknown"),
    (CueLabel::First, "first"),
    (CueLabel::Second, "second"),
    (CueLabel::Older, "older"),
    (CueLabel::Younger, "younger"),
    (CueLabel::Faster, "faster"),
    (CueLabel::Slower, "slower"),
    (CueLabel::Longer, "longer"),
    (CueLabel::Shorter, "shorter"),
    (CueLabel::Higher, "higher"),
    (CueLabel::Lower, "lower"),
    (CueLabel::Wider, "wider"),
    (CueLabel::Narrower, "narrower"),
    (CueLabel::Louder, "louder"),
    (CueLabel::Quieter, "quieter"),
    (CueLabel::Farther, "farther"),
    (CueLabel::Nearer, "nearer"),
    (CueLabel::Male, "male"),
    (CueLabel::Female, "female"),
];

impl CueLabel {
    pub fn as_str(&self) -> &str {
        match self {
            CueLabel::Value(v) => v,
            other => WORDS.iter().find(|(l, _)| l == other).map(|(_, w)| *w).unwrap(),
        }
    }

    /// "same", "similar" and "unknown" never identify a speaker.
    pub fn is_eligible(&self) -> bool {
        !matches!(self, CueLabel::Same | CueLabel::Similar | CueLabel::Unknown)
    }

    /// The label seen from the other speaker's side, for directional labels.
    pub fn opposite(&self) -> Option<CueLabel> {
        use CueLabel::*;
        Some(match self {
            First => Second,
            Second => First,
            Older => Younger,
            Younger => Older,
            Faster => Slower,
            Slower => Faster,
            Longer => Shorter,
            Shorter => Longer,
            Higher => Lower,
            Lower => Higher,
            Wider => Narrower,
            Narrower => Wider,
            Louder => Quieter,
            Quieter => Louder,
            Farther => Nearer,
            Nearer => Farther,
            Male => Female,
            Female => Male,
            _ => return None,
        })
    }
}

impl From<CueLabel> for String {
    fn from(l: CueLabel) -> String {
        l.as_str().to_string()
    }
}

impl From<String> for CueLabel {
    fn from(s: String) -> CueLabel {
        WORDS
            .iter()
            .find(|(_, w)| *w == s)
            .map(|(l, _)| l.clone())
            .unwrap_or(CueLabel::Value(s))
    }
}

impl fmt::Display for CueLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The twelve relative-cue labels of one (target, interference) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeCueSet {
    pub language: CueLabel,
    pub gender: CueLabel,
    pub transcription: CueLabel,
    pub emotion: CueLabel,
    pub temporal_order: CueLabel,
    pub age: CueLabel,
    pub speaking_rate: CueLabel,
    pub speaking_duration: CueLabel,
    pub pitch_level: CueLabel,
    pub pitch_range: CueLabel,
    pub loudness: CueLabel,
    pub distance: CueLabel,
}

impl RelativeCueSet {
    pub fn get(&self, kind: CueKind) -> &CueLabel {
        match kind {
            CueKind::Language => &self.language,
            CueKind::Gender => &self.gender,
            CueKind::Transcription => &self.transcription,
            CueKind::Emotion => &self.emotion,
            CueKind::TemporalOrder => &self.temporal_order,
            CueKind::Age => &self.age,
            CueKind::SpeakingRate => &self.speaking_rate,
            CueKind::SpeakingDuration => &self.speaking_duration,
            CueKind::PitchLevel => &self.pitch_level,
            CueKind::PitchRange => &self.pitch_range,
            CueKind::Loudness => &self.loudness,
            CueKind::Distance => &self.distance,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (CueKind, &CueLabel)> {
        CueKind::ALL.into_iter().map(move |k| (k, self.get(k)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Absolute,
    Relative,
}

/// Thresholded three-way comparison. The difference must strictly exceed
/// `threshold`; relative mode divides by the smaller value.
pub fn classify_continuous(
    target: f64,
    interf: f64,
    threshold: f64,
    mode: Mode,
    labels: (CueLabel, CueLabel),
) -> Result<CueLabel> {
    if !target.is_finite() || !interf.is_finite() {
        return Err(Error::invalid(format!("non-finite cue values {target}, {interf}")));
    }
    let diff = (target - interf).abs();
    let measure = match mode {
        Mode::Absolute => diff,
        Mode::Relative => {
            if target <= 0.0 || interf <= 0.0 {
                return Err(Error::invalid(format!(
                    "relative comparison needs positive values, got {target}, {interf}"
                )));
            }
            diff / target.min(interf)
        }
    };
    Ok(if measure > threshold {
        if target > interf {
            labels.0
        } else {
            labels.1
        }
    } else {
        CueLabel::Similar
    })
}

/// Case-insensitive equality; on mismatch the target's value.
pub fn classify_discrete(target: &str, interf: &str) -> CueLabel {
    if target.trim().to_lowercase() == interf.trim().to_lowercase() {
        CueLabel::Same
    } else {
        CueLabel::Value(target.trim().to_string())
    }
}

/// Maps corpus-specific emotion labels onto one inventory of adjectives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmotionMap(pub BTreeMap<String, String>);

impl Default for EmotionMap {
    fn default() -> Self {
        let pairs = [
            ("anger", "angry"),
            ("angry", "angry"),
            ("happiness", "happy"),
            ("happy", "happy"),
            ("joy", "happy"),
            ("sadness", "sad"),
            ("sad", "sad"),
            ("surprise", "surprised"),
            ("surprised", "surprised"),
            ("fear", "fearful"),
            ("fearful", "fearful"),
            ("disgust", "disgusted"),
            ("disgusted", "disgusted"),
            ("neutral", "neutral"),
            ("calm", "calm"),
            ("boredom", "bored"),
            ("bored", "bored"),
        ];
        EmotionMap(
            pairs
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        )
    }
}

impl EmotionMap {
    pub fn normalize(&self, label: &str) -> String {
        let key = label.trim().to_lowercase();
        self.0.get(&key).cloned().unwrap_or(key)
    }
}

/// One side of a pair: annotations plus measurements.
#[derive(Debug, Clone, Copy)]
pub struct CueSubject<'a> {
    pub record: &'a UtteranceRecord,
    pub profile: &'a AttributeProfile,
}

fn both<T: Copy>(a: Option<T>, b: Option<T>) -> Option<(T, T)> {
    a.zip(b)
}

/// Derives all twelve labels for `target` against `interf` in mixture `plan`.
pub fn build_cue_set(
    target: CueSubject<'_>,
    interf: CueSubject<'_>,
    plan: &MixturePlan,
    geometry: &RirGeometry,
    th: &Thresholds,
    emotions: &EmotionMap,
) -> Result<RelativeCueSet> {
    if plan.rir_pair_id != geometry.id {
        return Err(Error::Mismatch(format!(
            "plan {} uses RIR pair {}, got {}",
            plan.id, plan.rir_pair_id, geometry.id
        )));
    }
    let ti = plan
        .source_index(&target.record.id)
        .ok_or_else(|| Error::Mismatch(format!("{} not in plan {}", target.record.id, plan.id)))?;
    let ii = 1 - ti;
    if plan.source_ids[ii] != interf.record.id {
        return Err(Error::Mismatch(format!(
            "{} not in plan {}",
            interf.record.id, plan.id
        )));
    }
    let (tr, ir) = (target.record, interf.record);
    let (tp, ip) = (target.profile, interf.profile);
    use CueLabel::*;
    use Mode::*;

    let language = classify_discrete(tr.language.code(), ir.language.code());
    let gender = if tr.gender == ir.gender {
        Same
    } else {
        CueLabel::from(tr.gender.as_str().to_string())
    };
    let transcription = match (&tr.transcription, &ir.transcription) {
        (Some(a), Some(b)) => {
            if normalize_text(a) == normalize_text(b) {
                Same
            } else {
                Value(a.trim().to_string())
            }
        }
        _ => Unknown,
    };
    let emotion = match (&tr.emotion, &ir.emotion) {
        (Some(a), Some(b)) => classify_discrete(&emotions.normalize(a), &emotions.normalize(b)),
        _ => Unknown,
    };
    let temporal_order = classify_continuous(
        plan.offsets_s[ti],
        plan.offsets_s[ii],
        th.temporal_order_s,
        Absolute,
        (Second, First),
    )?;
    let age = match both(tr.age, ir.age) {
        Some((a, b)) => classify_continuous(a as f64, b as f64, th.age_years, Absolute, (Older, Younger))?,
        None => Unknown,
    };
    let speaking_rate = match both(tp.speaking_rate_sps, ip.speaking_rate_sps) {
        Some((a, b)) => classify_continuous(a, b, th.speaking_rate_rel, Relative, (Faster, Slower))?,
        None => Unknown,
    };
    let speaking_duration = classify_continuous(
        tp.speaking_duration_s,
        ip.speaking_duration_s,
        th.speaking_duration_rel,
        Relative,
        (Longer, Shorter),
    )?;
    let pitch_level = match both(tp.mean_f0_hz, ip.mean_f0_hz) {
        Some((a, b)) => classify_continuous(a, b, th.pitch_level_hz, Absolute, (Higher, Lower))?,
        None => Unknown,
    };
    let pitch_range = match both(tp.f0_span_octaves, ip.f0_span_octaves) {
        Some((a, b)) if a > 0.0 && b > 0.0 => {
            classify_continuous(a, b, th.pitch_range_rel, Relative, (Wider, Narrower))?
        }
        _ => Unknown,
    };
    let loudness = classify_continuous(
        plan.sir_for(ti),
        0.0,
        th.loudness_db,
        Absolute,
        (Louder, Quieter),
    )?;
    let distance = classify_continuous(
        geometry.dist[ti],
        geometry.dist[ii],
        th.distance_m,
        Absolute,
        (Farther, Nearer),
    )?;
    Ok(RelativeCueSet {
        language,
        gender,
        transcription,
        emotion,
        temporal_order,
        age,
        speaking_rate,
        speaking_duration,
        pitch_level,
        pitch_range,
        loudness,
        distance,
    })
}

/// True when `ab` and `ba` (the same pair seen from each side) agree:
/// directional labels flip, neutral labels match, discrete values both differ.
pub fn swap_consistent(ab: &CueLabel, ba: &CueLabel) -> bool {
    match (ab, ba) {
        (CueLabel::Value(_), CueLabel::Value(_)) => true,
        (a, b) if a.opposite().is_some() => a.opposite().as_ref() == Some(b),
        (a, b) => a == b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use CueLabel::*;

    #[test]
    fn continuous_examples() {
        assert_eq!(
            classify_continuous(210.0, 200.0, 5.0, Mode::Absolute, (Higher, Lower)).unwrap(),
            Higher
        );
        assert_eq!(
            classify_continuous(4.0, 4.5, 0.15, Mode::Relative, (Faster, Slower)).unwrap(),
            Similar
        );
        assert_eq!(
            classify_continuous(40.0, 30.0, 10.0, Mode::Absolute, (Older, Younger)).unwrap(),
            Similar
        );
        assert!(classify_continuous(f64::NAN, 1.0, 1.0, Mode::Absolute, (Higher, Lower)).is_err());
        assert!(classify_continuous(0.0, 1.0, 0.1, Mode::Relative, (Higher, Lower)).is_err());
    }

    #[test]
    fn discrete_examples() {
        assert_eq!(classify_discrete("en", "fr"), Value("en".into()));
        assert_eq!(classify_discrete("female", "Female"), Same);
        assert_eq!(classify_discrete("happy", "angry"), Value("happy".into()));
    }

    #[test]
    fn label_serialization() {
        let j = serde_json::to_string(&vec![Faster, Value("fr".into()), Same]).unwrap();
        assert_eq!(j, r#"["faster","fr","same"]"#);
        let back: Vec<CueLabel> = serde_json::from_str(&j).unwrap();
        assert_eq!(back, vec![Faster, Value("fr".into()), Same]);
    }

    #[test]
    fn emotion_normalization() {
        let m = EmotionMap::default();
        assert_eq!(m.normalize(" Anger "), "angry");
        assert_eq!(m.normalize("Elated"), "elated");
    }

    #[test]
    fn thresholds_validate() {
        assert!(Thresholds::default().validate().is_ok());
        let bad = Thresholds {
            distance_m: 0.0,
            ..Thresholds::default()
        };
        assert!(bad.validate().is_err());
    }
}
