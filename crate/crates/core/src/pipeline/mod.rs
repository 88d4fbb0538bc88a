//! End-to-end dataset build: ingest, attributes, RIRs, mixing and prompts.
//!
//! Output layout under the output directory:
//!
//! ```text
//! config.toml                     effective configuration
//! utterances.jsonl                split and part assignment of every utterance
//! attributes.jsonl                one attribute profile per usable utterance
//! rirs/<split>/geometry.jsonl     RIR pair geometry, audio in <id>_{1,2}.wav
//! mixtures/<split>/manifest.jsonl one MixtureRecord per mixture
//! mixtures/<split>/<id>_{mix,target,target_clean}.wav
//! summary.json                    counts, label histograms, SIR statistics
//! ```

mod config;
mod validate;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{allocate, BuildConfig, PoolFractions, SplitCounts};
pub use validate::{validate_dataset, ValidationReport, Violation, SIR_TOLERANCE_DB};

use crate::attributes::{active_power_db, analyze_file, AttributeProfile, Interval};
use crate::audio::{self, SAMPLE_RATE};
use crate::corpus::{
    assign_splits, build_subpools, ingest_manifest, read_jsonl, sample_pair, split_all, write_jsonl,
    PoolKind, Split, SubPools, UtteranceRecord,
};
use crate::cues::{build_cue_set, CueKind, CueLabel, CueSubject, RelativeCueSet};
use crate::error::{Error, Result};
use crate::mixer::{assemble_mixture, plan_overlap, MixturePlan, SIR_RANGE_DB};
use crate::prompts::{attach_external, generate_bundle, PromptSpec, PHRASEBOOK_VERSION};
use crate::rng;
use crate::room::{generate_rir_pair, read_rir_pair, write_rir_pair, RirGeometry, RirPair};

pub const CONFIG_FILE: &str = "config.toml";
pub const UTTERANCES_FILE: &str = "utterances.jsonl";
pub const ATTRIBUTES_FILE: &str = "attributes.jsonl";
pub const RIR_DIR: &str = "rirs";
pub const GEOMETRY_FILE: &str = "geometry.jsonl";
pub const MIXTURE_DIR: &str = "mixtures";
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";

/// Audio files of one mixture, relative to its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixturePaths {
    pub mixture: String,
    pub target_reverberant: String,
    pub target_clean: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureRecord {
    pub plan: MixturePlan,
    pub pool: PoolKind,
    /// Resample attempt that produced this mixture (0 = first draw).
    pub attempt: u32,
    pub cues: RelativeCueSet,
    pub prompts: Vec<PromptSpec>,
    pub paths: MixturePaths,
    pub interf_gain: f64,
    pub normalization_gain: f64,
    /// SIR re-measured on the written mixture.
    pub achieved_sir_db: f64,
    pub target_regions: Vec<Interval>,
    pub interf_regions: Vec<Interval>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SirStats {
    pub count: usize,
    pub planned_mean_db: f64,
    pub achieved_mean_db: f64,
    pub max_abs_error_db: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub mixtures: usize,
    pub pools: BTreeMap<String, usize>,
    pub prompts: usize,
    pub resampled_slots: usize,
    pub sir: SirStats,
    /// cue kind -> label -> count; differing transcriptions count as "differs".
    pub cue_labels: BTreeMap<String, BTreeMap<String, usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildSummary {
    pub phrasebook: String,
    pub master_seed: u64,
    pub utterances: usize,
    /// Utterances dropped to keep split halves transcription-disjoint.
    pub dropped_for_shared_text: Vec<String>,
    /// Utterances without detectable speech.
    pub skipped_no_speech: Vec<String>,
    pub splits: BTreeMap<String, SplitSummary>,
}

pub fn thread_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        b = b.num_threads(j);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Stage outputs a build or `mix` run works from.
#[derive(Debug, Clone)]
pub struct PreparedCorpus {
    pub records: Vec<UtteranceRecord>,
    pub dropped: Vec<String>,
}

/// Reads every manifest, splits each corpus into speaker- and
/// content-disjoint halves and assigns train/val/test by speaker.
pub fn prepare_corpus(cfg: &BuildConfig) -> Result<PreparedCorpus> {
    if cfg.manifests.is_empty() {
        return Err(Error::Config("no corpus manifests configured".into()));
    }
    let mut records = Vec::new();
    for m in &cfg.manifests {
        records.extend(ingest_manifest(m)?);
    }
    let mut seen = std::collections::HashSet::new();
    for r in &records {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::invalid(format!("duplicate utterance id '{}'", r.id)));
        }
    }
    let outcome = split_all(&records, cfg.master_seed)?;
    let mut records: Vec<UtteranceRecord> = outcome.part1.into_iter().chain(outcome.part2).collect();
    assign_splits(&mut records, cfg.split_fractions, cfg.master_seed)?;
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let mut dropped: Vec<String> = outcome.dropped.into_iter().map(|r| r.id).collect();
    dropped.sort();
    for id in &dropped {
        log::warn!("{id}: dropped, its transcription belongs to the other split half");
    }
    Ok(PreparedCorpus { records, dropped })
}

/// Measures every utterance. Utterances without speech are skipped and
/// returned by id; any other failure aborts.
pub fn analyze_corpus(
    records: &[UtteranceRecord],
    pool: &rayon::ThreadPool,
) -> Result<(Vec<UtteranceRecord>, Vec<AttributeProfile>, Vec<String>)> {
    let results: Vec<Result<Option<AttributeProfile>>> = pool.install(|| {
        records
            .par_iter()
            .map(|r| match analyze_file(r) {
                Ok(a) => Ok(Some(a.profile)),
                Err(Error::NoSpeech) => Ok(None),
                Err(e) => Err(e),
            })
            .collect()
    });
    let mut kept = Vec::new();
    let mut profiles = Vec::new();
    let mut skipped = Vec::new();
    for (r, res) in records.iter().zip(results) {
        match res? {
            Some(p) => {
                kept.push(r.clone());
                profiles.push(p);
            }
            None => {
                log::warn!("{}: no speech detected, skipped", r.id);
                skipped.push(r.id.clone());
            }
        }
    }
    Ok((kept, profiles, skipped))
}

pub fn rir_id(split: Split, k: usize) -> String {
    format!("{split}-rir{k:05}")
}

/// RIR pair `k` of `split`, a pure function of the master seed.
pub fn rir_pair(master_seed: u64, split: Split, k: usize) -> Result<RirPair> {
    let seed = rng::derive_seed(master_seed, "rooms", &[split.as_str(), &k.to_string()]);
    generate_rir_pair(&rir_id(split, k), seed)
}

pub fn generate_rirs(master_seed: u64, split: Split, count: usize, pool: &rayon::ThreadPool) -> Result<Vec<RirPair>> {
    pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|k| rir_pair(master_seed, split, k))
            .collect()
    })
}

pub fn write_rir_bank(dir: &Path, pairs: &[RirPair]) -> Result<()> {
    create_dir(dir)?;
    for p in pairs {
        write_rir_pair(dir, p)?;
    }
    let geometry: Vec<&RirGeometry> = pairs.iter().map(|p| &p.geometry).collect();
    write_jsonl(&dir.join(GEOMETRY_FILE), &geometry)
}

pub fn read_rir_bank(dir: &Path) -> Result<Vec<RirPair>> {
    let geometry: Vec<RirGeometry> = read_jsonl(&dir.join(GEOMETRY_FILE))?;
    geometry.into_iter().map(|g| read_rir_pair(dir, g)).collect()
}

/// Everything the mixing stage reads.
pub struct MixInputs {
    pub records: Vec<UtteranceRecord>,
    pub profiles: Vec<AttributeProfile>,
    pub rirs: BTreeMap<Split, Vec<RirPair>>,
}

struct MixContext<'a> {
    cfg: &'a BuildConfig,
    pools: SubPools,
    profiles: HashMap<&'a str, &'a AttributeProfile>,
    records: HashMap<&'a str, &'a UtteranceRecord>,
    rirs: &'a BTreeMap<Split, Vec<RirPair>>,
}

fn slot_seed(master: u64, split: Split, slot: usize) -> u64 {
    rng::derive_seed(master, "slot", &[split.as_str(), &slot.to_string()])
}

fn mixture_id(split: Split, slot: usize) -> String {
    format!("{split}-{slot:06}")
}

fn pool_of_slot(counts: [usize; 3], slot: usize) -> PoolKind {
    if slot < counts[0] {
        PoolKind::Emotion
    } else if slot < counts[0] + counts[1] {
        PoolKind::Age
    } else {
        PoolKind::Plain
    }
}

/// Active-region SIR of `mixture - target` against `target`.
pub fn measure_sir(
    mixture: &[f32],
    target: &[f32],
    target_regions: &[Interval],
    interf_regions: &[Interval],
) -> Result<f64> {
    if mixture.len() != target.len() {
        return Err(Error::Mismatch(format!(
            "mixture has {} samples, target {}",
            mixture.len(),
            target.len()
        )));
    }
    let interf: Vec<f32> = mixture.iter().zip(target).map(|(m, t)| m - t).collect();
    Ok(active_power_db(target, target_regions, SAMPLE_RATE)? - active_power_db(&interf, interf_regions, SAMPLE_RATE)?)
}

/// Cue labels for the plan's target against its interference.
pub fn derive_cues(
    plan: &MixturePlan,
    records: [&UtteranceRecord; 2],
    profiles: [&AttributeProfile; 2],
    geometry: &RirGeometry,
    cfg: &BuildConfig,
) -> Result<RelativeCueSet> {
    let t = plan.target();
    let subject = |i: usize| CueSubject {
        record: records[i],
        profile: profiles[i],
    };
    build_cue_set(subject(t), subject(1 - t), plan, geometry, &cfg.thresholds, &cfg.emotions)
}

impl MixContext<'_> {
    fn lookup(&self, id: &str) -> Result<(&UtteranceRecord, &AttributeProfile)> {
        match (self.records.get(id), self.profiles.get(id)) {
            (Some(r), Some(p)) => Ok((r, p)),
            _ => Err(Error::Mismatch(format!("no attributes for utterance {id}"))),
        }
    }

    fn make_mixture(&self, split: Split, slot: usize, kind: PoolKind, out_dir: &Path) -> Result<MixtureRecord> {
        let cfg = self.cfg;
        let seed = slot_seed(cfg.master_seed, split, slot);
        let id = mixture_id(split, slot);
        let bank = &self.rirs[&split];
        for attempt in 0..=cfg.retries as u32 {
            let a = attempt.to_string();
            let mut g = rng::stream(seed, "pairs", &[&a]);
            let (s1, s2) = sample_pair(self.pools.get(kind), kind, split, &mut g)?;
            let target_idx: u8 = if g.random_bool(0.5) { 1 } else { 2 };
            let rir = &bank[g.random_range(0..bank.len())];
            let (r1, p1) = self.lookup(&s1.id)?;
            let (r2, p2) = self.lookup(&s2.id)?;
            let durations = [
                p1.trim_len_samples as f64 / SAMPLE_RATE as f64,
                p2.trim_len_samples as f64 / SAMPLE_RATE as f64,
            ];
            let placement = plan_overlap(
                durations[0],
                durations[1],
                SAMPLE_RATE,
                &mut rng::stream(seed, "offsets", &[&a]),
            )?;
            let sir_db = rng::stream(seed, "sir", &[&a]).random_range(SIR_RANGE_DB.0..=SIR_RANGE_DB.1);
            let plan = MixturePlan {
                id: id.clone(),
                source_ids: [s1.id.clone(), s2.id.clone()],
                durations_s: durations,
                offsets_s: placement.offsets_s,
                overlap_s: placement.overlap_s,
                mixture_len_s: placement.mixture_len_s,
                sir_db,
                target_idx,
                rir_pair_id: rir.geometry.id.clone(),
                seed,
            };
            let cues = derive_cues(&plan, [r1, r2], [p1, p2], &rir.geometry, cfg)?;
            let mut prompts = match generate_bundle(&id, &cues, &mut rng::stream(seed, "prompts", &[&a])) {
                Ok(p) => p,
                Err(Error::Indistinguishable) => {
                    log::debug!("{id}: attempt {attempt} indistinguishable, resampling");
                    continue;
                }
                Err(e) => return Err(e),
            };
            if let Some(rc) = &cfg.rephrase {
                attach_external(rc, &mut prompts)?;
            }

            let src1 = audio::read_mono(&r1.audio_path)?;
            let src2 = audio::read_mono(&r2.audio_path)?;
            let mixed = assemble_mixture(
                &plan,
                [p1.trimmed(&src1)?, p2.trimmed(&src2)?],
                [&p1.active_regions, &p2.active_regions],
                [&rir.rirs[0], &rir.rirs[1]],
                SAMPLE_RATE,
            )?;
            let achieved_sir_db = measure_sir(
                &mixed.mixture,
                &mixed.target_rev,
                &mixed.target_regions,
                &mixed.interf_regions,
            )?;
            let paths = MixturePaths {
                mixture: format!("{id}_mix.wav"),
                target_reverberant: format!("{id}_target.wav"),
                target_clean: format!("{id}_target_clean.wav"),
            };
            audio::write_f32(&out_dir.join(&paths.mixture), &mixed.mixture, SAMPLE_RATE)?;
            audio::write_f32(&out_dir.join(&paths.target_reverberant), &mixed.target_rev, SAMPLE_RATE)?;
            audio::write_f32(&out_dir.join(&paths.target_clean), &mixed.target_clean, SAMPLE_RATE)?;
            return Ok(MixtureRecord {
                plan,
                pool: kind,
                attempt,
                cues,
                prompts,
                paths,
                interf_gain: mixed.interf_gain,
                normalization_gain: mixed.normalization_gain,
                achieved_sir_db,
                target_regions: mixed.target_regions,
                interf_regions: mixed.interf_regions,
            });
        }
        Err(Error::Config(format!(
            "{id}: no distinguishable pair after {} resamples",
            cfg.retries
        )))
    }
}

/// Checks that every sub-pool with a non-zero count can supply pairs.
pub fn check_pools(cfg: &BuildConfig, pools: &SubPools) -> Result<()> {
    for split in Split::ALL {
        let counts = cfg.pool_counts(split);
        for (kind, n) in PoolKind::ALL.into_iter().zip(counts) {
            if n == 0 {
                continue;
            }
            let pool = pools.get(kind);
            for (side, recs) in [('A', pool.side_a(split)), ('B', pool.side_b(split))] {
                if recs.is_empty() {
                    return Err(Error::EmptyPool {
                        pool: kind.as_str().into(),
                        side,
                        split: split.to_string(),
                    });
                }
            }
        }
    }
    Ok(())
}

fn label_bucket(kind: CueKind, label: &CueLabel) -> String {
    match (kind, label) {
        (CueKind::Transcription, CueLabel::Value(_)) => "differs".into(),
        _ => label.as_str().to_string(),
    }
}

fn summarize_split(records: &[MixtureRecord]) -> SplitSummary {
    let mut s = SplitSummary {
        mixtures: records.len(),
        ..Default::default()
    };
    let (mut planned, mut achieved) = (0.0, 0.0);
    for r in records {
        *s.pools.entry(r.pool.as_str().to_string()).or_default() += 1;
        s.prompts += r.prompts.len();
        if r.attempt > 0 {
            s.resampled_slots += 1;
        }
        planned += r.plan.sir_db;
        achieved += r.achieved_sir_db;
        s.sir.max_abs_error_db = s.sir.max_abs_error_db.max((r.achieved_sir_db - r.plan.sir_db).abs());
        for (kind, label) in r.cues.iter() {
            *s.cue_labels
                .entry(kind.as_str().to_string())
                .or_default()
                .entry(label_bucket(kind, label))
                .or_default() += 1;
        }
    }
    if !records.is_empty() {
        s.sir.count = records.len();
        s.sir.planned_mean_db = planned / records.len() as f64;
        s.sir.achieved_mean_db = achieved / records.len() as f64;
    }
    s
}

/// Renders every mixture of every split and writes manifests and audio.
pub fn mix_dataset(
    cfg: &BuildConfig,
    inputs: &MixInputs,
    pool: &rayon::ThreadPool,
) -> Result<BTreeMap<Split, Vec<MixtureRecord>>> {
    let ctx = MixContext {
        cfg,
        pools: build_subpools(&inputs.records)?,
        profiles: inputs
            .profiles
            .iter()
            .map(|p| (p.utterance_id.as_str(), p))
            .collect(),
        records: inputs.records.iter().map(|r| (r.id.as_str(), r)).collect(),
        rirs: &inputs.rirs,
    };
    check_pools(cfg, &ctx.pools)?;
    let mut out = BTreeMap::new();
    for split in Split::ALL {
        let n = cfg.mixtures.get(split);
        if n == 0 {
            continue;
        }
        if inputs.rirs.get(&split).is_none_or(|b| b.is_empty()) {
            return Err(Error::Config(format!("no RIR pairs for split {split}")));
        }
        let dir = cfg.output_dir.join(MIXTURE_DIR).join(split.as_str());
        create_dir(&dir)?;
        let counts = cfg.pool_counts(split);
        let records: Vec<MixtureRecord> = pool.install(|| {
            (0..n)
                .into_par_iter()
                .map(|slot| ctx.make_mixture(split, slot, pool_of_slot(counts, slot), &dir))
                .collect::<Result<Vec<_>>>()
        })?;
        write_jsonl(&dir.join(MANIFEST_FILE), &records)?;
        log::info!("{split}: {} mixtures", records.len());
        out.insert(split, records);
    }
    Ok(out)
}

/// Reads the stage outputs of an earlier build from `cfg.output_dir`.
pub fn load_mix_inputs(cfg: &BuildConfig) -> Result<MixInputs> {
    let dir = &cfg.output_dir;
    let records: Vec<UtteranceRecord> = read_jsonl(&dir.join(UTTERANCES_FILE))?;
    let profiles: Vec<AttributeProfile> = read_jsonl(&dir.join(ATTRIBUTES_FILE))?;
    let have: std::collections::HashSet<&str> = profiles.iter().map(|p| p.utterance_id.as_str()).collect();
    let records = records.into_iter().filter(|r| have.contains(r.id.as_str())).collect();
    let mut rirs = BTreeMap::new();
    for split in Split::ALL {
        let d = dir.join(RIR_DIR).join(split.as_str());
        if d.join(GEOMETRY_FILE).exists() {
            rirs.insert(split, read_rir_bank(&d)?);
        }
    }
    Ok(MixInputs {
        records,
        profiles,
        rirs,
    })
}

fn summary_for(
    cfg: &BuildConfig,
    utterances: usize,
    dropped: Vec<String>,
    skipped: Vec<String>,
    mixtures: &BTreeMap<Split, Vec<MixtureRecord>>,
) -> BuildSummary {
    BuildSummary {
        phrasebook: PHRASEBOOK_VERSION.to_string(),
        master_seed: cfg.master_seed,
        utterances,
        dropped_for_shared_text: dropped,
        skipped_no_speech: skipped,
        splits: mixtures
            .iter()
            .map(|(s, r)| (s.to_string(), summarize_split(r)))
            .collect(),
    }
}

fn write_config(cfg: &BuildConfig) -> Result<()> {
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let path = dir.join(CONFIG_FILE);
    std::fs::write(&path, cfg.to_toml()?).map_err(|e| Error::io(&path, e))
}

/// Ingest stage: writes the effective config and `utterances.jsonl`.
/// Returns the prepared records and the utterances dropped for shared text.
pub fn run_ingest(cfg: &BuildConfig) -> Result<PreparedCorpus> {
    cfg.validate()?;
    write_config(cfg)?;
    let prepared = prepare_corpus(cfg)?;
    write_jsonl(&cfg.output_dir.join(UTTERANCES_FILE), &prepared.records)?;
    Ok(prepared)
}

/// Attribute stage: measures every ingested utterance into
/// `attributes.jsonl` and checks that the configured sub-pools can be filled.
/// Returns the number of profiles and the ids skipped for lack of speech.
pub fn run_attributes(cfg: &BuildConfig, pool: &rayon::ThreadPool) -> Result<(usize, Vec<String>)> {
    let records: Vec<UtteranceRecord> = read_jsonl(&cfg.output_dir.join(UTTERANCES_FILE))?;
    let (kept, profiles, skipped) = analyze_corpus(&records, pool)?;
    write_jsonl(&cfg.output_dir.join(ATTRIBUTES_FILE), &profiles)?;
    check_pools(cfg, &build_subpools(&kept)?)?;
    Ok((profiles.len(), skipped))
}

/// RIR stage: simulates `count` pairs for `split` into `rirs/<split>/`.
pub fn run_rirs(cfg: &BuildConfig, split: Split, count: usize, pool: &rayon::ThreadPool) -> Result<()> {
    let bank = generate_rirs(cfg.master_seed, split, count, pool)?;
    write_rir_bank(&cfg.output_dir.join(RIR_DIR).join(split.as_str()), &bank)
}

/// Runs every stage and writes the full dataset to `cfg.output_dir`.
pub fn build_dataset(cfg: &BuildConfig) -> Result<BuildSummary> {
    let pool = thread_pool(cfg.jobs)?;
    let prepared = run_ingest(cfg)?;
    let (_, skipped) = run_attributes(cfg, &pool)?;
    for split in Split::ALL {
        let count = cfg.rir_pairs.get(split);
        if count > 0 {
            run_rirs(cfg, split, count, &pool)?;
        }
    }
    let inputs = load_mix_inputs(cfg)?;
    let mixtures = mix_dataset(cfg, &inputs, &pool)?;
    let summary = summary_for(cfg, inputs.records.len(), prepared.dropped, skipped, &mixtures);
    write_json(&cfg.output_dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

/// Re-renders only the mixing stage from the stage files of an earlier build.
pub fn remix_dataset(cfg: &BuildConfig) -> Result<BuildSummary> {
    cfg.validate()?;
    let pool = thread_pool(cfg.jobs)?;
    let inputs = load_mix_inputs(cfg)?;
    let mixtures = mix_dataset(cfg, &inputs, &pool)?;
    let previous: BuildSummary = read_json(&cfg.output_dir.join(SUMMARY_FILE)).unwrap_or_default();
    let summary = summary_for(
        cfg,
        inputs.records.len(),
        previous.dropped_for_shared_text,
        previous.skipped_no_speech,
        &mixtures,
    );
    write_json(&cfg.output_dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

/// Regenerates the prompt bundles of every manifest under `out_dir` from the
/// stored cues, optionally attaching external paraphrases.
pub fn regenerate_prompts(out_dir: &Path, rephrase: Option<&crate::prompts::RephraseConfig>) -> Result<usize> {
    let mut n = 0;
    for split in Split::ALL {
        let path = out_dir.join(MIXTURE_DIR).join(split.as_str()).join(MANIFEST_FILE);
        if !path.exists() {
            continue;
        }
        let mut records: Vec<MixtureRecord> = read_jsonl(&path)?;
        for r in records.iter_mut() {
            let a = r.attempt.to_string();
            r.prompts = generate_bundle(&r.plan.id, &r.cues, &mut rng::stream(r.plan.seed, "prompts", &[&a]))?;
            if let Some(rc) = rephrase {
                attach_external(rc, &mut r.prompts)?;
            }
            n += r.prompts.len();
        }
        write_jsonl(&path, &records)?;
    }
    Ok(n)
}

/// Reads the manifest of one split.
pub fn read_split_manifest(out_dir: &Path, split: Split) -> Result<Vec<MixtureRecord>> {
    read_jsonl(&out_dir.join(MIXTURE_DIR).join(split.as_str()).join(MANIFEST_FILE))
}

pub fn split_dir(out_dir: &Path, split: Split) -> PathBuf {
    out_dir.join(MIXTURE_DIR).join(split.as_str())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_pools_follow_counts() {
        let c = [2, 1, 3];
        let kinds: Vec<PoolKind> = (0..6).map(|s| pool_of_slot(c, s)).collect();
        assert_eq!(
            kinds,
            vec![
                PoolKind::Emotion,
                PoolKind::Emotion,
                PoolKind::Age,
                PoolKind::Plain,
                PoolKind::Plain,
                PoolKind::Plain
            ]
        );
    }

    #[test]
    fn rir_pairs_are_seed_functions() {
        let a = rir_pair(3, Split::Val, 2).unwrap();
        let b = rir_pair(3, Split::Val, 2).unwrap();
        assert_eq!(a.rirs, b.rirs);
        assert_eq!(a.geometry.id, "val-rir00002");
        let c = rir_pair(3, Split::Test, 2).unwrap();
        assert_ne!(a.geometry.room, c.geometry.room);
    }

    #[test]
    fn sir_measurement_matches_gain() {
        let t: Vec<f32> = (0..16_000).map(|i| (i as f32 * 0.05).sin() * 0.3).collect();
        let n: Vec<f32> = (0..16_000).map(|i| (i as f32 * 0.031).cos() * 0.3).collect();
        let g = 10f64.powf(-4.0 / 20.0);
        let m: Vec<f32> = t.iter().zip(&n).map(|(a, b)| a + (g as f32) * b).collect();
        let r = [Interval::new(0.0, 1.0)];
        let sir = measure_sir(&m, &t, &r, &r).unwrap();
        let p = |x: &[f32]| x.iter().map(|v| (*v as f64).powi(2)).sum::<f64>();
        let expect = 10.0 * (p(&t) / (g * g * p(&n))).log10();
        assert!((sir - expect).abs() < 1e-3, "{sir} vs {expect}");
        assert!(measure_sir(&m[..10], &t, &r, &r).is_err());
    }
}
