//! Run configuration: defaults, a flat `key=value` file, then flag overrides.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use surreal_ensemble::{DedupPolicy, GenParams, SplitKind};

/// Which artifacts a command writes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Emit {
    pub ensemble: bool,
    pub stats: bool,
    pub dist: bool,
}

impl Emit {
    pub fn parse(list: &str) -> Result<Self> {
        let mut emit = Emit { ensemble: false, stats: false, dist: false };
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "ensemble" => emit.ensemble = true,
                "stats" => emit.stats = true,
                "dist" => emit.dist = true,
                other => bail!("unknown emit target `{other}` (expected ensemble, stats, dist)"),
            }
        }
        Ok(emit)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Base parameters; `params.seed` is the seed of run 0.
    pub params: GenParams,
    /// Split kinds to run; `generate` uses only the first.
    pub splits: Vec<SplitKind>,
    pub runs: usize,
    /// Run `i` uses seed `seed + i * seed_stride`.
    pub seed_stride: u64,
    pub out_dir: PathBuf,
    pub retain_clades: bool,
    pub emit: Emit,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: GenParams::default(),
            splits: vec![SplitKind::Uniform],
            runs: 1,
            seed_stride: 1,
            out_dir: PathBuf::from("out"),
            retain_clades: false,
            emit: Emit { ensemble: true, stats: true, dist: false },
        }
    }
}

impl ExperimentConfig {
    pub fn run_seed(&self, run: usize) -> u64 {
        self.params.seed.wrapping_add((run as u64).wrapping_mul(self.seed_stride))
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            bail!("runs must be at least 1");
        }
        if self.splits.is_empty() {
            bail!("at least one split kind is required");
        }
        self.params.validate()?;
        Ok(())
    }

    /// Applies one `key=value` setting. Keys match the long flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.params;
        let ctx = || format!("bad value `{value}` for `{key}`");
        match key {
            "n" => p.n = value.parse().with_context(ctx)?,
            "m" => p.m = value.parse().with_context(ctx)?,
            "g0-max" | "g0_max" => p.g0_max = value.parse().with_context(ctx)?,
            "alpha" => p.alpha = value.parse().with_context(ctx)?,
            "lambda" => p.lambda = value.parse().with_context(ctx)?,
            "seed" => p.seed = value.parse().with_context(ctx)?,
            "dedup" => p.dedup = value.parse::<DedupPolicy>()?,
            "split" => self.splits = parse_splits(value)?,
            "runs" => self.runs = value.parse().with_context(ctx)?,
            "seed-stride" | "seed_stride" => self.seed_stride = value.parse().with_context(ctx)?,
            "out" => self.out_dir = PathBuf::from(value),
            "retain-clades" | "retain_clades" => self.retain_clades = value.parse().with_context(ctx)?,
            "emit" => self.emit = Emit::parse(value)?,
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Applies every setting of a flat config file.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for (key, value) in parse_key_values(&text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }
}

pub fn parse_splits(value: &str) -> Result<Vec<SplitKind>> {
    if value == "both" {
        return Ok(vec![SplitKind::Uniform, SplitKind::Binomial]);
    }
    value
        .split(',')
        .map(|s| s.trim().parse::<SplitKind>().map_err(Into::into))
        .collect()
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got `{raw}`", i + 1);
        };
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}
