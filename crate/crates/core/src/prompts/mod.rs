//! Natural-language extraction prompts built from relative cues.

mod grammar;
mod rephrase;

use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use grammar::{tokenize, Grammar, Token, EXCLUDED_WORDS, TEMPLATE_GRAMMAR};
pub use rephrase::{attach_external, cue_keywords, rephrase_external, validate_variation, RephraseConfig};

use crate::corpus::Language;
use crate::cues::{CueKind, CueLabel, RelativeCueSet};
use crate::error::{Error, Result};

/// Recorded in dataset summaries so prompts can be traced to the table that
/// produced them.
pub const PHRASEBOOK_VERSION: &str = "phrasebook-1";
/// Paraphrase families rendered per cue subset.
pub const VARIATIONS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verb {
    Extract,
    Isolate,
    Separate,
}

impl Verb {
    pub const ALL: [Verb; 3] = [Verb::Extract, Verb::Isolate, Verb::Separate];

    pub fn as_str(self) -> &'static str {
        match self {
            Verb::Extract => "extract",
            Verb::Isolate => "isolate",
            Verb::Separate => "separate",
        }
    }

    fn capitalized(self) -> &'static str {
        match self {
            Verb::Extract => "Extract",
            Verb::Isolate => "Isolate",
            Verb::Separate => "Separate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Imperative,
    Question,
}

impl Form {
    pub fn as_str(self) -> &'static str {
        match self {
            Form::Imperative => "imperative",
            Form::Question => "question",
        }
    }
}

/// Why a cue subset was rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Individual,
    Random,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CueItem {
    pub kind: CueKind,
    pub label: CueLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub mixture_id: String,
    pub cue_subset: Vec<CueItem>,
    pub roles: Vec<Role>,
    pub verb: Verb,
    pub form: Form,
    pub variation_idx: u8,
    pub text: String,
    /// Accepted paraphrase from the external rephrasing endpoint, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_text: Option<String>,
}

/// Cues usable in a prompt: everything except same, similar and unknown.
pub fn eligible_cues(cues: &RelativeCueSet) -> Vec<CueItem> {
    cues.iter()
        .filter(|(_, l)| l.is_eligible())
        .map(|(kind, label)| {
            let payload = match kind {
                CueKind::Language => Some(
                    Language::from_str(label.as_str())
                        .map(|l| l.name().to_string())
                        .unwrap_or_else(|_| label.as_str().to_string()),
                ),
                CueKind::Transcription | CueKind::Emotion => Some(label.as_str().to_string()),
                _ => None,
            };
            CueItem {
                kind,
                label: label.clone(),
                payload,
            }
        })
        .collect()
}

enum Phrase {
    /// Pre-noun modifier of "speaker" (gender, emotion).
    Adjective(String),
    /// Post-noun modifier of "speaker" (temporal order, language, words).
    Post(String),
    /// Attribute noun phrase joined with a connective.
    Attribute(String),
}

fn emotion_word(s: &str) -> String {
    let w: String = s
        .trim()
        .to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_lowercase() { c } else { '-' })
        .collect();
    let w = w.trim_matches('-').to_string();
    if w.is_empty() || EXCLUDED_WORDS.contains(&w.as_str()) {
        "emotional".to_string()
    } else {
        w
    }
}

fn phrase(kind: CueKind, label: &CueLabel, payload: Option<&str>) -> Result<Phrase> {
    use CueLabel::*;
    if !label.is_eligible() {
        return Err(Error::invalid(format!("label '{label}' is not usable in a prompt")));
    }
    let mismatch = || Error::invalid(format!("label '{label}' does not fit cue '{kind}'"));
    let attr = |s: &str| Ok(Phrase::Attribute(s.to_string()));
    match kind {
        CueKind::Gender => match label {
            Male | Female => Ok(Phrase::Adjective(label.as_str().to_string())),
            _ => Err(mismatch()),
        },
        CueKind::Emotion => Ok(Phrase::Adjective(emotion_word(payload.unwrap_or(label.as_str())))),
        CueKind::TemporalOrder => match label {
            First | Second => Ok(Phrase::Post(format!("who speaks {label}"))),
            _ => Err(mismatch()),
        },
        CueKind::Language => {
            let raw = payload.unwrap_or(label.as_str());
            let lang = Language::from_str(raw)
                .or_else(|_| {
                    Language::ALL
                        .into_iter()
                        .find(|l| l.name().eq_ignore_ascii_case(raw))
                        .ok_or_else(|| Error::invalid(format!("unsupported language '{raw}'")))
                })?;
            Ok(Phrase::Post(format!("speaking {}", lang.name())))
        }
        CueKind::Transcription => {
            let text = payload.unwrap_or(label.as_str()).trim().replace('"', "'");
            Ok(Phrase::Post(format!("who says \"{text}\"")))
        }
        CueKind::Age => match label {
            Older => attr("an older age"),
            Younger => attr("a younger age"),
            _ => Err(mismatch()),
        },
        CueKind::SpeakingRate => match label {
            Faster | Slower => attr(&format!("a {label} speaking rate")),
            _ => Err(mismatch()),
        },
        CueKind::SpeakingDuration => match label {
            Longer | Shorter => attr(&format!("a {label} speaking duration")),
            _ => Err(mismatch()),
        },
        CueKind::PitchLevel => match label {
            Higher | Lower => attr(&format!("a {label} pitch level")),
            _ => Err(mismatch()),
        },
        CueKind::PitchRange => match label {
            Wider | Narrower => attr(&format!("a {label} pitch range")),
            _ => Err(mismatch()),
        },
        CueKind::Loudness => match label {
            Louder | Quieter => attr(&format!("a {label} voice")),
            _ => Err(mismatch()),
        },
        CueKind::Distance => match label {
            Farther | Nearer => attr(&format!("a {label} distance to the microphone")),
            _ => Err(mismatch()),
        },
    }
}

/// Noun phrase for one cue, e.g. "the female speaker" or "a faster speaking
/// rate".
pub fn cue_phrase(kind: CueKind, label: &CueLabel, payload: Option<&str>) -> Result<String> {
    Ok(match phrase(kind, label, payload)? {
        Phrase::Adjective(a) => format!("the {a} speaker"),
        Phrase::Post(p) => format!("the speaker {p}"),
        Phrase::Attribute(a) => a,
    })
}

/// "a", "a and b", "a, b and c".
fn join_list(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

const CONNECTIVES: [&str; VARIATIONS] = [
    "characterized by",
    "with",
    "that has",
    "featuring",
    "distinguished by",
];

/// Renders one prompt. Speaker-denoting cues (gender, emotion, temporal
/// order, language, transcription) form the head noun phrase; the remaining
/// attributes follow the family's connective.
pub fn render_template(verb: Verb, items: &[CueItem], form: Form, variation_idx: usize) -> Result<String> {
    if items.is_empty() {
        return Err(Error::invalid("no cues to render"));
    }
    if variation_idx >= VARIATIONS {
        return Err(Error::invalid(format!("variation {variation_idx} out of range")));
    }
    let mut emotion = None;
    let mut gender = None;
    let mut posts: Vec<(usize, String)> = Vec::new();
    let mut attrs = Vec::new();
    for it in items {
        match phrase(it.kind, &it.label, it.payload.as_deref())? {
            Phrase::Adjective(a) if it.kind == CueKind::Gender => gender = Some(a),
            Phrase::Adjective(a) => emotion = Some(a),
            Phrase::Post(p) => {
                let order = match it.kind {
                    CueKind::TemporalOrder => 0,
                    CueKind::Language => 1,
                    _ => 2,
                };
                posts.push((order, p));
            }
            Phrase::Attribute(a) => attrs.push(a),
        }
    }
    posts.sort_by_key(|(o, _)| *o);
    let posts: Vec<String> = posts.into_iter().map(|(_, p)| p).collect();

    let adjectives: Vec<String> = emotion.into_iter().chain(gender).collect();
    let mut np = String::from("the ");
    for a in &adjectives {
        np.push_str(a);
        np.push(' ');
    }
    np.push_str("speaker");
    if !posts.is_empty() {
        np.push(' ');
        np.push_str(&join_list(&posts));
    }
    if !attrs.is_empty() {
        np = format!("{np} {} {}", CONNECTIVES[variation_idx], join_list(&attrs));
    }

    let v = verb.as_str();
    Ok(match (variation_idx, form) {
        (0, Form::Imperative) => format!("Please {v} {np}."),
        (0, Form::Question) => format!("Can you {v} {np}?"),
        (1, Form::Imperative) => format!("I need you to {v} {np}."),
        (1, Form::Question) => format!("Could you {v} {np}?"),
        (2, Form::Imperative) => format!("{} {np} from the mixture.", verb.capitalized()),
        (2, Form::Question) => format!("Would you {v} {np} from the mixture?"),
        (3, Form::Imperative) => format!("Kindly {v} the voice of {np}."),
        (3, Form::Question) => format!("Is it possible to {v} the voice of {np}?"),
        (4, Form::Imperative) => format!("Your task is to {v} {np}."),
        _ => format!("Can you help me {v} {np}?"),
    })
}

fn render_all<R: Rng>(
    mixture_id: &str,
    subset: Vec<CueItem>,
    role: Role,
    rng: &mut R,
    out: &mut Vec<PromptSpec>,
) -> Result<()> {
    for variation in 0..VARIATIONS {
        let verb = Verb::ALL[rng.random_range(0..Verb::ALL.len())];
        let form = if rng.random_bool(0.5) {
            Form::Imperative
        } else {
            Form::Question
        };
        let text = render_template(verb, &subset, form, variation)?;
        out.push(PromptSpec {
            mixture_id: mixture_id.to_string(),
            cue_subset: subset.clone(),
            roles: vec![role],
            verb,
            form,
            variation_idx: variation as u8,
            text,
            external_text: None,
        });
    }
    Ok(())
}

/// Every prompt before deduplication: one subset per eligible cue, one random
/// non-empty subset and the full set, each in all paraphrase families.
pub fn generate_raw_bundle<R: Rng>(mixture_id: &str, cues: &RelativeCueSet, rng: &mut R) -> Result<Vec<PromptSpec>> {
    let eligible = eligible_cues(cues);
    if eligible.is_empty() {
        return Err(Error::Indistinguishable);
    }
    let mut out = Vec::with_capacity((eligible.len() + 2) * VARIATIONS);
    for it in &eligible {
        render_all(mixture_id, vec![it.clone()], Role::Individual, rng, &mut out)?;
    }
    let mask: u32 = rng.random_range(1..(1u32 << eligible.len()));
    let random: Vec<CueItem> = eligible
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, it)| it.clone())
        .collect();
    render_all(mixture_id, random, Role::Random, rng, &mut out)?;
    render_all(mixture_id, eligible, Role::All, rng, &mut out)?;
    Ok(out)
}

/// Merges prompts with the same cue subset and family, keeping the first and
/// recording every role it serves.
pub fn dedup_bundle(raw: Vec<PromptSpec>) -> Vec<PromptSpec> {
    let mut out: Vec<PromptSpec> = Vec::with_capacity(raw.len());
    for p in raw {
        let kinds: Vec<CueKind> = p.cue_subset.iter().map(|c| c.kind).collect();
        let existing = out.iter_mut().find(|q| {
            q.variation_idx == p.variation_idx
                && q.cue_subset.iter().map(|c| c.kind).eq(kinds.iter().copied())
        });
        match existing {
            Some(q) => {
                for r in p.roles {
                    if !q.roles.contains(&r) {
                        q.roles.push(r);
                    }
                }
            }
            None => out.push(p),
        }
    }
    out
}

pub fn generate_bundle<R: Rng>(mixture_id: &str, cues: &RelativeCueSet, rng: &mut R) -> Result<Vec<PromptSpec>> {
    Ok(dedup_bundle(generate_raw_bundle(mixture_id, cues, rng)?))
}

/// Problems with a stored prompt: ineligible labels, text that does not match
/// its own cues, or text outside the grammar for its form and family.
pub fn check_prompt(p: &PromptSpec) -> Vec<String> {
    let mut problems = Vec::new();
    if p.cue_subset.is_empty() {
        problems.push("empty cue subset".to_string());
    }
    for c in &p.cue_subset {
        if !c.label.is_eligible() {
            problems.push(format!("ineligible label '{}' for {}", c.label, c.kind));
        }
    }
    match render_template(p.verb, &p.cue_subset, p.form, p.variation_idx as usize) {
        Ok(t) if t == p.text => {}
        Ok(_) => problems.push("text does not match its cue subset".to_string()),
        Err(e) => problems.push(format!("cannot render cue subset: {e}")),
    }
    let start = format!("{}_{}", p.form.as_str(), p.variation_idx);
    match Grammar::builtin().recognizes(&start, &p.text) {
        Ok(true) => {}
        Ok(false) => problems.push(format!("text outside grammar rule {start}")),
        Err(e) => problems.push(e.to_string()),
    }
    problems
}
