//! Build configuration and integer count allocation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{PoolKind, Split, SplitFractions};
use crate::cues::{EmotionMap, Thresholds};
use crate::error::{Error, Result};
use crate::prompts::RephraseConfig;

/// One count per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

/// Share of each split drawn from the emotion and age sub-pools; the plain
/// pool takes the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolFractions {
    pub emotion: f64,
    pub age: f64,
}

impl Default for PoolFractions {
    fn default() -> Self {
        PoolFractions {
            emotion: 0.2,
            age: 0.1,
        }
    }
}

impl PoolFractions {
    pub fn plain(&self) -> f64 {
        1.0 - self.emotion - self.age
    }

    pub fn get(&self, kind: PoolKind) -> f64 {
        match kind {
            PoolKind::Emotion => self.emotion,
            PoolKind::Age => self.age,
            PoolKind::Plain => self.plain(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |f: f64| f.is_finite() && (0.0..=1.0).contains(&f);
        if !ok(self.emotion) || !ok(self.age) || self.emotion + self.age > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "pool fractions emotion={} age={} must lie in [0, 1] and sum to at most 1",
                self.emotion, self.age
            )));
        }
        Ok(())
    }
}

/// Splits `total` by `fractions`: floor every share, then hand the remaining
/// units one each to the largest fractional parts (earlier entries win ties).
pub fn allocate(total: usize, fractions: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|f| f * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| (e + 1e-9).floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - counts[a] as f64;
        let fb = exact[b] - counts[b] as f64;
        fb.partial_cmp(&fa).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub master_seed: u64,
    /// Corpus manifests (JSON Lines) to ingest.
    pub manifests: Vec<PathBuf>,
    pub mixtures: SplitCounts,
    pub pool_fractions: PoolFractions,
    pub rir_pairs: SplitCounts,
    pub split_fractions: SplitFractions,
    pub thresholds: Thresholds,
    pub emotions: EmotionMap,
    /// Resamples allowed per mixture slot when a pair is indistinguishable.
    pub retries: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rephrase: Option<RephraseConfig>,
    /// Not part of the dataset identity, so never written back out.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    #[serde(skip_serializing)]
    pub jobs: Option<usize>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            master_seed: 0,
            manifests: Vec::new(),
            mixtures: SplitCounts {
                train: 100_000,
                val: 10_000,
                test: 10_000,
            },
            pool_fractions: PoolFractions::default(),
            rir_pairs: SplitCounts {
                train: 10_000,
                val: 1_000,
                test: 1_000,
            },
            split_fractions: SplitFractions::default(),
            thresholds: Thresholds::default(),
            emotions: EmotionMap::default(),
            retries: 10,
            rephrase: None,
            output_dir: PathBuf::from("out"),
            jobs: None,
        }
    }
}

impl BuildConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: BuildConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads a TOML config; relative manifest paths resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for m in cfg.manifests.iter_mut() {
            if m.is_relative() {
                *m = base.join(&*m);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.pool_fractions.validate()?;
        self.thresholds.validate()?;
        for split in Split::ALL {
            if self.mixtures.get(split) > 0 && self.rir_pairs.get(split) == 0 {
                return Err(Error::Config(format!(
                    "split {split} needs mixtures but has no RIR pairs"
                )));
            }
        }
        // TOML integers are signed 64-bit.
        if self.master_seed > i64::MAX as u64 {
            return Err(Error::Config(format!("master_seed must be at most {}", i64::MAX)));
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// Mixtures per sub-pool for `split`, in [`PoolKind::ALL`] order.
    pub fn pool_counts(&self, split: Split) -> [usize; 3] {
        let f: Vec<f64> = PoolKind::ALL.iter().map(|&k| self.pool_fractions.get(k)).collect();
        let c = allocate(self.mixtures.get(split), &f);
        [c[0], c[1], c[2]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn desk_proportions() {
        let mut cfg = BuildConfig::default();
        cfg.mixtures = SplitCounts {
            train: 100,
            val: 10,
            test: 10,
        };
        assert_eq!(cfg.pool_counts(Split::Train), [20, 10, 70]);
        assert_eq!(cfg.pool_counts(Split::Val), [2, 1, 7]);
        assert_eq!(BuildConfig::default().pool_counts(Split::Train), [20_000, 10_000, 70_000]);
    }

    #[test]
    fn remainder_goes_to_largest_fraction() {
        assert_eq!(allocate(7, &[0.2, 0.1, 0.7]), vec![1, 1, 5]);
        assert_eq!(allocate(3, &[0.2, 0.1, 0.7]), vec![1, 0, 2]);
        assert_eq!(allocate(1, &[0.5, 0.5, 0.0]), vec![1, 0, 0]);
        assert_eq!(allocate(0, &[0.2, 0.1, 0.7]), vec![0, 0, 0]);
    }

    proptest! {
        #[test]
        fn allocation_sums_to_total(total in 0usize..100_000, e in 0.0f64..0.5, a in 0.0f64..0.5) {
            let c = allocate(total, &[e, a, 1.0 - e - a]);
            prop_assert_eq!(c.iter().sum::<usize>(), total);
            for (ci, f) in c.iter().zip([e, a, 1.0 - e - a]) {
                prop_assert!((*ci as f64 - f * total as f64).abs() < 1.0 + 1e-6);
            }
        }
    }

    #[test]
    fn toml_round_trip_and_validation() {
        let cfg = BuildConfig::from_toml_str(
            "master_seed = 7\n[mixtures]\ntrain = 10\nval = 2\ntest = 2\n[rir_pairs]\ntrain = 3\nval = 1\ntest = 1\n",
        )
        .unwrap();
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.thresholds, Thresholds::default());
        let again = BuildConfig::from_toml_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again.mixtures, cfg.mixtures);
        assert!(BuildConfig::from_toml_str("bogus = 1").is_err());
        assert!(BuildConfig::from_toml_str("[pool_fractions]\nemotion = 0.8\nage = 0.5\n").is_err());
        assert!(BuildConfig::from_toml_str("[thresholds]\npitch_level_hz = -1.0\n").is_err());
        assert!(BuildConfig::from_toml_str("[rir_pairs]\ntrain = 0\nval = 1\ntest = 1\n").is_err());
        let mut big = BuildConfig::default();
        big.master_seed = u64::MAX;
        assert!(big.validate().is_err());
    }
}
