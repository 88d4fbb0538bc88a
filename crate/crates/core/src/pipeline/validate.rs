//! Self-consistency checks over a built dataset.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;

use super::{
    derive_cues, measure_sir, read_split_manifest, split_dir, BuildConfig, MixtureRecord, ATTRIBUTES_FILE,
    CONFIG_FILE, GEOMETRY_FILE, MANIFEST_FILE, RIR_DIR, UTTERANCES_FILE,
};
use crate::attributes::AttributeProfile;
use crate::audio::{self, SAMPLE_RATE};
use crate::corpus::{read_jsonl, Split, UtteranceRecord};
use crate::error::{Error, Result};
use crate::mixer::{overlap_of, MAX_MIX_S, SIR_RANGE_DB};
use crate::prompts::check_prompt;
use crate::room::RirGeometry;

/// Largest accepted gap between planned and re-measured SIR.
pub const SIR_TOLERANCE_DB: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub mixture_id: String,
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub mixtures_checked: usize,
    pub prompts_checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    fn flag(&mut self, id: &str, check: &str, detail: impl Into<String>) {
        self.violations.push(Violation {
            mixture_id: id.to_string(),
            check: check.to_string(),
            detail: detail.into(),
        });
    }
}

struct Stores {
    cfg: BuildConfig,
    records: HashMap<String, UtteranceRecord>,
    profiles: HashMap<String, AttributeProfile>,
    geometry: HashMap<String, RirGeometry>,
}

fn load_stores(out_dir: &Path) -> Result<Stores> {
    let cfg_path = out_dir.join(CONFIG_FILE);
    let text = std::fs::read_to_string(&cfg_path).map_err(|e| Error::io(&cfg_path, e))?;
    let cfg = BuildConfig::from_toml_str(&text)?;
    let records: Vec<UtteranceRecord> = read_jsonl(&out_dir.join(UTTERANCES_FILE))?;
    let profiles: Vec<AttributeProfile> = read_jsonl(&out_dir.join(ATTRIBUTES_FILE))?;
    let mut geometry = HashMap::new();
    for split in Split::ALL {
        let p = out_dir.join(RIR_DIR).join(split.as_str()).join(GEOMETRY_FILE);
        if p.exists() {
            for g in read_jsonl::<RirGeometry>(&p)? {
                geometry.insert(g.id.clone(), g);
            }
        }
    }
    Ok(Stores {
        cfg,
        records: records.into_iter().map(|r| (r.id.clone(), r)).collect(),
        profiles: profiles.into_iter().map(|p| (p.utterance_id.clone(), p)).collect(),
        geometry,
    })
}

fn check_plan(report: &mut ValidationReport, r: &MixtureRecord, stores: &Stores) {
    let p = &r.plan;
    let id = p.id.as_str();
    let overlap = overlap_of(p.offsets_s, p.durations_s);
    if (overlap - p.overlap_s).abs() > 1e-9 {
        report.flag(id, "plan", format!("overlap {} but offsets imply {overlap}", p.overlap_s));
    }
    let len = (p.offsets_s[0] + p.durations_s[0]).max(p.offsets_s[1] + p.durations_s[1]);
    if (len - p.mixture_len_s).abs() > 1e-9 || p.mixture_len_s > MAX_MIX_S + 1e-9 {
        report.flag(id, "plan", format!("mixture length {} (offsets imply {len})", p.mixture_len_s));
    }
    if p.offsets_s.iter().any(|&o| o < 0.0) || p.offsets_s[0].min(p.offsets_s[1]) != 0.0 {
        report.flag(id, "plan", format!("offsets {:?} must be >= 0 with one at 0", p.offsets_s));
    }
    if !(SIR_RANGE_DB.0..=SIR_RANGE_DB.1).contains(&p.sir_db) {
        report.flag(id, "plan", format!("SIR {} outside {:?}", p.sir_db, SIR_RANGE_DB));
    }
    if !matches!(p.target_idx, 1 | 2) {
        report.flag(id, "plan", format!("target index {}", p.target_idx));
    }
    for (i, sid) in p.source_ids.iter().enumerate() {
        if let Some(prof) = stores.profiles.get(sid) {
            let d = prof.trim_len_samples as f64 / SAMPLE_RATE as f64;
            if (d - p.durations_s[i]).abs() > 1e-9 {
                report.flag(id, "plan", format!("{sid} lasts {d} s, plan says {}", p.durations_s[i]));
            }
        }
    }
}

fn check_cues(report: &mut ValidationReport, r: &MixtureRecord, stores: &Stores) {
    let p = &r.plan;
    let id = p.id.as_str();
    let lookup = |sid: &str| stores.records.get(sid).zip(stores.profiles.get(sid));
    let (Some((r1, p1)), Some((r2, p2))) = (lookup(&p.source_ids[0]), lookup(&p.source_ids[1])) else {
        report.flag(id, "cues", format!("unknown source utterances {:?}", p.source_ids));
        return;
    };
    let Some(geometry) = stores.geometry.get(&p.rir_pair_id) else {
        report.flag(id, "cues", format!("unknown RIR pair {}", p.rir_pair_id));
        return;
    };
    match derive_cues(p, [r1, r2], [p1, p2], geometry, &stores.cfg) {
        Ok(cues) => {
            for ((kind, stored), (_, fresh)) in r.cues.iter().zip(cues.iter()) {
                if stored.as_str() != fresh.as_str() {
                    report.flag(id, "cues", format!("{kind}: stored '{stored}', derived '{fresh}'"));
                }
            }
        }
        Err(e) => report.flag(id, "cues", e.to_string()),
    }
}

fn check_prompts(report: &mut ValidationReport, r: &MixtureRecord) {
    let id = r.plan.id.as_str();
    if r.prompts.is_empty() {
        report.flag(id, "prompts", "no prompts");
    }
    for (i, p) in r.prompts.iter().enumerate() {
        report.prompts_checked += 1;
        if p.mixture_id != id {
            report.flag(id, "prompts", format!("prompt {i} belongs to {}", p.mixture_id));
        }
        for problem in check_prompt(p) {
            report.flag(id, "prompts", format!("prompt {i}: {problem}"));
        }
        for c in &p.cue_subset {
            let stored = r.cues.get(c.kind);
            if stored.as_str() != c.label.as_str() {
                report.flag(
                    id,
                    "prompts",
                    format!("prompt {i} uses {} = '{}', mixture has '{stored}'", c.kind, c.label),
                );
            }
        }
    }
}

fn check_audio(report: &mut ValidationReport, r: &MixtureRecord, dir: &Path) {
    let id = r.plan.id.as_str();
    let mut missing = false;
    for rel in [&r.paths.mixture, &r.paths.target_reverberant, &r.paths.target_clean] {
        if !dir.join(rel).is_file() {
            report.flag(id, "missing_path", dir.join(rel).display().to_string());
            missing = true;
        }
    }
    if missing {
        return;
    }
    let read = |rel: &str| audio::read_mono(&dir.join(rel));
    let (mix, target, clean) = match (read(&r.paths.mixture), read(&r.paths.target_reverberant), read(&r.paths.target_clean)) {
        (Ok(m), Ok(t), Ok(c)) => (m, t, c),
        (m, t, c) => {
            for e in [m.err(), t.err(), c.err()].into_iter().flatten() {
                report.flag(id, "audio", e.to_string());
            }
            return;
        }
    };
    if mix.len() != target.len() || mix.len() != clean.len() {
        report.flag(
            id,
            "audio",
            format!("lengths differ: mix {}, target {}, clean {}", mix.len(), target.len(), clean.len()),
        );
        return;
    }
    if audio::peak(&mix) > 1.0 {
        report.flag(id, "audio", format!("mixture peak {} clips", audio::peak(&mix)));
    }
    match measure_sir(&mix, &target, &r.target_regions, &r.interf_regions) {
        Ok(sir) if (sir - r.plan.sir_db).abs() <= SIR_TOLERANCE_DB => {}
        Ok(sir) => report.flag(id, "sir", format!("planned {:.3} dB, measured {sir:.3} dB", r.plan.sir_db)),
        Err(e) => report.flag(id, "sir", e.to_string()),
    }
}

/// Re-measures SIR from the written audio, re-derives every cue label from
/// the stored attributes, re-checks plans and re-parses every prompt.
pub fn validate_dataset(out_dir: &Path) -> Result<ValidationReport> {
    let stores = load_stores(out_dir)?;
    let mut report = ValidationReport::default();
    for split in Split::ALL {
        let dir = split_dir(out_dir, split);
        let expected = stores.cfg.mixtures.get(split);
        if !dir.join(MANIFEST_FILE).exists() {
            if expected > 0 {
                report.flag(split.as_str(), "manifest", format!("{} missing", dir.join(MANIFEST_FILE).display()));
            }
            continue;
        }
        let records = read_split_manifest(out_dir, split)?;
        if records.len() != expected {
            report.flag(
                split.as_str(),
                "manifest",
                format!("{} mixtures, config asks for {expected}", records.len()),
            );
        }
        for r in &records {
            report.mixtures_checked += 1;
            check_plan(&mut report, r, &stores);
            check_cues(&mut report, r, &stores);
            check_prompts(&mut report, r);
            check_audio(&mut report, r, &dir);
        }
    }
    Ok(report)
}
