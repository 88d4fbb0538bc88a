//! Source-corpus ingestion, speaker/content-disjoint splitting, sub-pools and
//! pair sampling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::audio;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Zh,
    En,
    Fr,
    De,
    Es,
}

impl Language {
    pub const ALL: [Language; 5] = [
        Language::Zh,
        Language::En,
        Language::Fr,
        Language::De,
        Language::Es,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Language::Zh => "zh",
            Language::En => "en",
            Language::Fr => "fr",
            Language::De => "de",
            Language::Es => "es",
        }
    }

    /// English name used in prompts.
    pub fn name(self) -> &'static str {
        match self {
            Language::Zh => "Chinese",
            Language::En => "English",
            Language::Fr => "French",
            Language::De => "German",
            Language::Es => "Spanish",
        }
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zh" => Ok(Language::Zh),
            "en" => Ok(Language::En),
            "fr" => Ok(Language::Fr),
            "de" => Ok(Language::De),
            "es" => Ok(Language::Es),
            other => Err(Error::invalid(format!("unsupported language '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
        }
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "male" | "m" => Ok(Gender::Male),
            "female" | "f" => Ok(Gender::Female),
            other => Err(Error::invalid(format!("unsupported gender '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Part1,
    Part2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!("unknown split '{other}'"))),
        }
    }
}

/// One source utterance and its annotations.
///
/// `part` and `split` are empty in raw corpus manifests and filled in by
/// [`split_corpus`] and [`assign_splits`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub id: String,
    pub audio_path: PathBuf,
    pub speaker_id: String,
    pub language: Language,
    pub gender: Gender,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcription: Option<String>,
    pub corpus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<Part>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

impl UtteranceRecord {
    pub fn normalized_transcription(&self) -> Option<String> {
        self.transcription
            .as_deref()
            .map(normalize_text)
            .filter(|t| !t.is_empty())
    }
}

/// Lowercases, strips punctuation and collapses whitespace.
pub fn normalize_text(text: &str) -> String {
    let cleaned: String = text
        .to_lowercase()
        .chars()
        .map(|c| if c.is_whitespace() { ' ' } else { c })
        .filter(|c| c.is_alphanumeric() || *c == ' ')
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

const REQUIRED_FIELDS: [&str; 6] = [
    "id",
    "audio_path",
    "speaker_id",
    "language",
    "gender",
    "corpus",
];

fn parse_line(
    line: &str,
    base_dir: &Path,
    check_audio: bool,
) -> std::result::Result<UtteranceRecord, String> {
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let obj = value
        .as_object()
        .ok_or_else(|| "record is not a JSON object".to_string())?;
    for field in REQUIRED_FIELDS {
        match obj.get(field) {
            None | Some(serde_json::Value::Null) => {
                return Err(format!("missing required field '{field}'"))
            }
            _ => {}
        }
    }
    if let Some(lang) = obj.get("language").and_then(|v| v.as_str()) {
        lang.parse::<Language>().map_err(|e| e.to_string())?;
    }
    let mut record: UtteranceRecord =
        serde_json::from_value(value.clone()).map_err(|e| e.to_string())?;
    if let Some(age) = record.age {
        if age == 0 || age >= 120 {
            return Err(format!("age {age} outside (0, 120)"));
        }
    }
    if record.audio_path.is_relative() {
        record.audio_path = base_dir.join(&record.audio_path);
    }
    if check_audio {
        audio::probe(&record.audio_path).map_err(|e| e.to_string())?;
    }
    Ok(record)
}

/// Reads a JSON Lines corpus manifest. Relative audio paths resolve against the
/// manifest's directory; every audio file must be a readable mono WAV.
pub fn ingest_manifest(path: &Path) -> Result<Vec<UtteranceRecord>> {
    read_manifest(path, true)
}

/// Like [`ingest_manifest`] but skips the audio check.
pub fn read_manifest(path: &Path, check_audio: bool) -> Result<Vec<UtteranceRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let base_dir = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_line(&line, base_dir, check_audio).map_err(|msg| Error::Manifest {
            path: path.to_path_buf(),
            line: idx + 1,
            msg,
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, records: &[UtteranceRecord]) -> Result<()> {
    write_jsonl(path, records)
}

pub(crate) fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for item in items {
        serde_json::to_writer(&mut f, item)?;
        f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            line: idx + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Result of splitting one corpus.
#[derive(Debug, Clone, Default)]
pub struct SplitOutcome {
    pub part1: Vec<UtteranceRecord>,
    pub part2: Vec<UtteranceRecord>,
    /// Records whose transcription was claimed by the other half. Keeping them
    /// would break either speaker or content disjointness.
    pub dropped: Vec<UtteranceRecord>,
}

/// Splits one corpus into two speaker- and content-disjoint halves.
///
/// Speakers are shuffled and halved (part1 takes the extra speaker when the
/// count is odd). A normalized transcription found in both halves stays with
/// the half holding more of its occurrences (ties broken by `rng`); the other
/// half's copies are moved to `dropped`.
pub fn split_corpus<R: Rng>(records: &[UtteranceRecord], rng: &mut R) -> Result<SplitOutcome> {
    if records.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let speakers: BTreeSet<&str> = records.iter().map(|r| r.speaker_id.as_str()).collect();
    if speakers.len() < 2 {
        return Err(Error::SingleSpeaker(records[0].corpus.clone()));
    }
    let mut speakers: Vec<&str> = speakers.into_iter().collect();
    speakers.shuffle(rng);
    let n1 = speakers.len().div_ceil(2);
    let first: BTreeSet<&str> = speakers[..n1].iter().copied().collect();

    let mut counts: BTreeMap<String, [usize; 2]> = BTreeMap::new();
    for r in records {
        if let Some(t) = r.normalized_transcription() {
            let side = usize::from(!first.contains(r.speaker_id.as_str()));
            counts.entry(t).or_default()[side] += 1;
        }
    }
    // transcription -> the half allowed to keep it
    let mut owner: BTreeMap<String, usize> = BTreeMap::new();
    for (t, c) in counts {
        if c[0] > 0 && c[1] > 0 {
            let keep = match c[0].cmp(&c[1]) {
                std::cmp::Ordering::Greater => 0,
                std::cmp::Ordering::Less => 1,
                std::cmp::Ordering::Equal => rng.random_range(0..2),
            };
            owner.insert(t, keep);
        }
    }

    let mut out = SplitOutcome::default();
    for r in records {
        let side = usize::from(!first.contains(r.speaker_id.as_str()));
        let keep = r
            .normalized_transcription()
            .and_then(|t| owner.get(&t).copied())
            .is_none_or(|o| o == side);
        let mut r = r.clone();
        if !keep {
            out.dropped.push(r);
            continue;
        }
        if side == 0 {
            r.part = Some(Part::Part1);
            out.part1.push(r);
        } else {
            r.part = Some(Part::Part2);
            out.part2.push(r);
        }
    }
    Ok(out)
}

/// Splits every corpus in `records` independently, each from its own
/// seeded stream, and returns the concatenated outcome.
pub fn split_all(records: &[UtteranceRecord], seed: u64) -> Result<SplitOutcome> {
    let mut by_corpus: BTreeMap<&str, Vec<UtteranceRecord>> = BTreeMap::new();
    for r in records {
        by_corpus.entry(r.corpus.as_str()).or_default().push(r.clone());
    }
    let mut out = SplitOutcome::default();
    for (corpus, recs) in by_corpus {
        let mut g = rng::stream(seed, "split", &[corpus]);
        let s = split_corpus(&recs, &mut g)?;
        out.part1.extend(s.part1);
        out.part2.extend(s.part2);
        out.dropped.extend(s.dropped);
    }
    Ok(out)
}

/// Speaker fractions held out for validation and test within every
/// (corpus, part) group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            val: 0.15,
            test: 0.15,
        }
    }
}

/// Assigns train/val/test by speaker inside every (corpus, part) group.
///
/// Validation and test each take `ceil(frac * n)` speakers; if that would
/// leave training empty they shrink (test first) until one training speaker
/// remains.
pub fn assign_splits(records: &mut [UtteranceRecord], fracs: SplitFractions, seed: u64) -> Result<()> {
    if !(0.0..1.0).contains(&fracs.val) || !(0.0..1.0).contains(&fracs.test) {
        return Err(Error::Config("split fractions must lie in [0, 1)".into()));
    }
    let mut groups: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    for r in records.iter() {
        let part = r
            .part
            .ok_or_else(|| Error::invalid(format!("record {} has no part", r.id)))?;
        groups
            .entry((r.corpus.clone(), format!("{part:?}")))
            .or_default()
            .insert(r.speaker_id.clone());
    }
    let mut assignment: BTreeMap<(String, String), Split> = BTreeMap::new();
    for ((corpus, part), speakers) in groups {
        let mut speakers: Vec<String> = speakers.into_iter().collect();
        let mut g = rng::stream(seed, "assign", &[&corpus, &part]);
        speakers.shuffle(&mut g);
        let n = speakers.len();
        let mut n_val = (fracs.val * n as f64).ceil() as usize;
        let mut n_test = (fracs.test * n as f64).ceil() as usize;
        while n_val + n_test >= n && n_val + n_test > 0 {
            if n_test >= n_val && n_test > 0 {
                n_test -= 1;
            } else {
                n_val -= 1;
            }
        }
        for (i, s) in speakers.into_iter().enumerate() {
            let split = if i < n_val {
                Split::Val
            } else if i < n_val + n_test {
                Split::Test
            } else {
                Split::Train
            };
            assignment.insert((corpus.clone(), s), split);
        }
    }
    for r in records.iter_mut() {
        r.split = assignment
            .get(&(r.corpus.clone(), r.speaker_id.clone()))
            .copied();
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolKind {
    Emotion,
    Age,
    Plain,
}

impl PoolKind {
    pub const ALL: [PoolKind; 3] = [PoolKind::Emotion, PoolKind::Age, PoolKind::Plain];

    pub fn as_str(self) -> &'static str {
        match self {
            PoolKind::Emotion => "emotion",
            PoolKind::Age => "age",
            PoolKind::Plain => "plain",
        }
    }

    /// Pool a record belongs to; emotion wins over age.
    pub fn of(record: &UtteranceRecord) -> PoolKind {
        if record.emotion.is_some() {
            PoolKind::Emotion
        } else if record.age.is_some() {
            PoolKind::Age
        } else {
            PoolKind::Plain
        }
    }
}

/// Side A (from part1) and side B (from part2) of one sub-pool, bucketed by
/// split.
#[derive(Debug, Clone, Default)]
pub struct PoolPair {
    side_a: [Vec<UtteranceRecord>; 3],
    side_b: [Vec<UtteranceRecord>; 3],
}

impl PoolPair {
    fn push(&mut self, r: UtteranceRecord) -> Result<()> {
        let split = r
            .split
            .ok_or_else(|| Error::invalid(format!("record {} has no split", r.id)))?;
        match r.part {
            Some(Part::Part1) => self.side_a[split.index()].push(r),
            Some(Part::Part2) => self.side_b[split.index()].push(r),
            None => return Err(Error::invalid(format!("record {} has no part", r.id))),
        }
        Ok(())
    }

    pub fn side_a(&self, split: Split) -> &[UtteranceRecord] {
        &self.side_a[split.index()]
    }

    pub fn side_b(&self, split: Split) -> &[UtteranceRecord] {
        &self.side_b[split.index()]
    }

    pub fn len(&self) -> usize {
        self.side_a.iter().chain(&self.side_b).map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn records(&self) -> impl Iterator<Item = &UtteranceRecord> {
        self.side_a.iter().chain(&self.side_b).flatten()
    }

    /// True when the two sides share neither a speaker nor a normalized
    /// transcription.
    pub fn sides_disjoint(&self) -> bool {
        let a = self.side_a.iter().flatten();
        let b = self.side_b.iter().flatten();
        let sa: BTreeSet<&str> = a.clone().map(|r| r.speaker_id.as_str()).collect();
        let ta: BTreeSet<String> = a.filter_map(|r| r.normalized_transcription()).collect();
        b.clone().all(|r| !sa.contains(r.speaker_id.as_str()))
            && b.filter_map(|r| r.normalized_transcription())
                .all(|t| !ta.contains(&t))
    }
}

#[derive(Debug, Clone, Default)]
pub struct SubPools {
    pub emotion: PoolPair,
    pub age: PoolPair,
    pub plain: PoolPair,
}

impl SubPools {
    pub fn get(&self, kind: PoolKind) -> &PoolPair {
        match kind {
            PoolKind::Emotion => &self.emotion,
            PoolKind::Age => &self.age,
            PoolKind::Plain => &self.plain,
        }
    }

    fn get_mut(&mut self, kind: PoolKind) -> &mut PoolPair {
        match kind {
            PoolKind::Emotion => &mut self.emotion,
            PoolKind::Age => &mut self.age,
            PoolKind::Plain => &mut self.plain,
        }
    }
}

/// Partitions split records into the emotion, age and plain sub-pools.
pub fn build_subpools(records: &[UtteranceRecord]) -> Result<SubPools> {
    let mut pools = SubPools::default();
    for r in records {
        pools.get_mut(PoolKind::of(r)).push(r.clone())?;
    }
    Ok(pools)
}

/// Draws one utterance from each side of `pool` for `split`, never two from
/// the same speaker.
pub fn sample_pair<R: Rng>(
    pool: &PoolPair,
    kind: PoolKind,
    split: Split,
    rng: &mut R,
) -> Result<(UtteranceRecord, UtteranceRecord)> {
    let a = pool.side_a(split);
    let b = pool.side_b(split);
    let empty = |side| Error::EmptyPool {
        pool: kind.as_str().into(),
        side,
        split: split.to_string(),
    };
    if a.is_empty() {
        return Err(empty('A'));
    }
    if b.is_empty() {
        return Err(empty('B'));
    }
    let first = &a[rng.random_range(0..a.len())];
    let candidates: Vec<&UtteranceRecord> = b
        .iter()
        .filter(|r| r.speaker_id != first.speaker_id)
        .collect();
    if candidates.is_empty() {
        return Err(empty('B'));
    }
    let second = candidates[rng.random_range(0..candidates.len())];
    Ok((first.clone(), second.clone()))
}
