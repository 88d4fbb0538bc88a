//! Optional paraphrasing through an external HTTP endpoint.
//!
//! Accepted paraphrases are stored next to the built-in text; the built-in
//! text is kept whenever the endpoint is unavailable or a response fails
//! keyword validation.

use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CueItem, PromptSpec};
use crate::cues::CueKind;
use crate::error::{Error, Result};

pub const URL_ENV: &str = "RELCUE_REPHRASE_URL";
pub const TOKEN_ENV: &str = "RELCUE_REPHRASE_TOKEN";
pub const CACHE_ENV: &str = "RELCUE_REPHRASE_CACHE";

/// Verbs that change the task from extraction to detection.
const BANNED_WORDS: [&str; 2] = ["identify", "locate"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RephraseConfig {
    pub url: String,
    #[serde(default, skip_serializing)]
    pub token: Option<String>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
}

fn default_in_flight() -> usize {
    4
}

fn default_retries() -> u32 {
    2
}

fn default_timeout() -> u64 {
    30
}

impl RephraseConfig {
    pub fn new(url: impl Into<String>) -> Self {
        RephraseConfig {
            url: url.into(),
            token: None,
            cache_dir: None,
            max_in_flight: default_in_flight(),
            retries: default_retries(),
            timeout_s: default_timeout(),
        }
    }

    /// Reads the endpoint from the environment; `None` if no URL is set.
    pub fn from_env() -> Option<Self> {
        let url = std::env::var(URL_ENV).ok().filter(|u| !u.trim().is_empty())?;
        let mut cfg = RephraseConfig::new(url);
        cfg.token = std::env::var(TOKEN_ENV).ok();
        cfg.cache_dir = std::env::var(CACHE_ENV).ok().map(PathBuf::from);
        Some(cfg)
    }
}

#[derive(Serialize)]
struct Request<'a> {
    prompt: &'a str,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct Response {
    variations: Vec<String>,
}

/// Keyword groups a paraphrase must keep; each group needs one hit.
pub fn cue_keywords(item: &CueItem) -> Vec<Vec<String>> {
    let main = item
        .payload
        .clone()
        .unwrap_or_else(|| item.label.as_str().to_string());
    let mut groups = vec![vec![main.to_lowercase()]];
    let topic: &[&str] = match item.kind {
        CueKind::PitchLevel | CueKind::PitchRange => &["pitch"],
        CueKind::SpeakingRate => &["rate", "speed", "pace"],
        _ => &[],
    };
    if !topic.is_empty() {
        groups.push(topic.iter().map(|s| s.to_string()).collect());
    }
    groups
}

fn has_word(text: &str, word: &str) -> bool {
    text.split(|c: char| !c.is_alphanumeric())
        .any(|w| w == word)
}

/// Whole-word match for single ASCII words ("male" must not match "female"),
/// substring match otherwise.
fn mentions(text: &str, keyword: &str) -> bool {
    if keyword.chars().all(|c| c.is_ascii_alphanumeric()) {
        has_word(text, keyword)
    } else {
        text.contains(keyword)
    }
}

/// True if `text` keeps the action verb and every cue keyword and avoids
/// detection verbs.
pub fn validate_variation(text: &str, spec: &PromptSpec) -> bool {
    let lower = text.to_lowercase();
    if BANNED_WORDS.iter().any(|w| has_word(&lower, w)) {
        return false;
    }
    if !has_word(&lower, spec.verb.as_str()) {
        return false;
    }
    spec.cue_subset.iter().all(|item| {
        cue_keywords(item)
            .iter()
            .all(|group| group.iter().any(|k| mentions(&lower, k)))
    })
}

fn cache_key(prompt: &str, n: usize) -> String {
    let mut h = Sha256::new();
    h.update(prompt.as_bytes());
    h.update([0]);
    h.update(n.to_le_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn fetch(cfg: &RephraseConfig, prompt: &str, n: usize) -> Result<Vec<String>> {
    let cache_path = cfg
        .cache_dir
        .as_ref()
        .map(|d| d.join(format!("{}.json", cache_key(prompt, n))));
    if let Some(p) = &cache_path {
        if let Ok(bytes) = fs::read(p) {
            if let Ok(r) = serde_json::from_slice::<Response>(&bytes) {
                return Ok(r.variations);
            }
        }
    }
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(cfg.timeout_s)))
        .build()
        .into();
    let mut last_err = String::new();
    for attempt in 0..=cfg.retries {
        let mut req = agent.post(&cfg.url);
        if let Some(t) = &cfg.token {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        match req.send_json(&Request { prompt, n }) {
            Ok(resp) => match resp.into_body().read_json::<Response>() {
                Ok(r) => {
                    if let Some(p) = &cache_path {
                        let write = fs::create_dir_all(p.parent().unwrap())
                            .and_then(|_| fs::write(p, serde_json::to_vec(&r).unwrap_or_default()));
                        if let Err(e) = write {
                            log::warn!("could not cache rephrase response: {e}");
                        }
                    }
                    return Ok(r.variations);
                }
                Err(e) => last_err = format!("malformed response: {e}"),
            },
            Err(e) => last_err = e.to_string(),
        }
        log::debug!("rephrase attempt {} failed: {last_err}", attempt + 1);
    }
    Err(Error::Rephrase(last_err))
}

/// Paraphrases of `group[0].text`, one per prompt in `group` (all renderings
/// of one cue subset). Slot `i` is `None` when the endpoint failed or the
/// returned variation did not pass [`validate_variation`] for `group[i]`.
pub fn rephrase_external(cfg: &RephraseConfig, group: &[PromptSpec]) -> Vec<Option<String>> {
    let Some(first) = group.first() else {
        return Vec::new();
    };
    match fetch(cfg, &first.text, group.len()) {
        Ok(vars) => group
            .iter()
            .enumerate()
            .map(|(i, spec)| match vars.get(i) {
                Some(v) if validate_variation(v, spec) => Some(v.trim().to_string()),
                Some(v) => {
                    log::warn!("rejected paraphrase '{v}'; using built-in text");
                    None
                }
                None => {
                    log::warn!("endpoint returned {} of {} variations", vars.len(), group.len());
                    None
                }
            })
            .collect(),
        Err(e) => {
            log::warn!("rephrase endpoint unavailable ({e}); using built-in variations");
            vec![None; group.len()]
        }
    }
}

/// Fills `external_text` for every prompt, grouping consecutive prompts with
/// the same cue subset and issuing at most `max_in_flight` requests at once.
pub fn attach_external(cfg: &RephraseConfig, prompts: &mut [PromptSpec]) -> Result<()> {
    let mut groups: Vec<&mut [PromptSpec]> = Vec::new();
    let mut rest = prompts;
    while !rest.is_empty() {
        let kinds: Vec<CueKind> = rest[0].cue_subset.iter().map(|c| c.kind).collect();
        let n = rest
            .iter()
            .take_while(|p| {
                p.mixture_id == rest[0].mixture_id
                    && p.cue_subset.iter().map(|c| c.kind).eq(kinds.iter().copied())
            })
            .count();
        let (head, tail) = rest.split_at_mut(n);
        groups.push(head);
        rest = tail;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.max_in_flight.max(1))
        .build()
        .map_err(|e| Error::Config(format!("rephrase pool: {e}")))?;
    pool.install(|| {
        groups.par_iter_mut().for_each(|g| {
            let out = rephrase_external(cfg, g);
            for (p, v) in g.iter_mut().zip(out) {
                p.external_text = v;
            }
        })
    });
    Ok(())
}
