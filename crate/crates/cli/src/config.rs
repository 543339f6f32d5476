//! Command options, the `key=value` config file, and their resolution.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use sqcka_core::keyrate::BoundMode;

/// Keys accepted in a config file; they mirror the long flags.
pub const CONFIG_KEYS: [&str; 13] = [
    "n",
    "q",
    "qtilde",
    "q_step",
    "mode",
    "rounds",
    "seed",
    "ctrl_count",
    "cc_fraction",
    "attack_file",
    "out",
    "confidence",
    "attack",
];

/// Grid step for sweeps and figures.
pub const DEFAULT_STEP: f64 = 0.005;
pub const DEFAULT_ROUNDS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_CC_FRACTION: f64 = 0.1;
pub const DEFAULT_CONFIDENCE: f64 = 0.99;

#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// `key=value` file; command-line flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of Bobs, or a comma-separated list for sweeps
    #[arg(long)]
    pub n: Option<String>,
    /// Forward depolarization: a value, `start:stop` or `start:stop:step`
    #[arg(long)]
    pub q: Option<String>,
    /// Backward depolarization, same syntax as --q
    #[arg(long)]
    pub qtilde: Option<String>,
    /// Step used by ranges without their own step
    #[arg(long = "q-step")]
    pub q_step: Option<String>,
    /// paper_literal, theorem_exact, general_table, or a comma-separated list
    #[arg(long)]
    pub mode: Option<String>,
    /// Number of protocol rounds
    #[arg(long)]
    pub rounds: Option<String>,
    /// Seed for the round RNG and the pre-shared schedule key
    #[arg(long)]
    pub seed: Option<String>,
    /// Number of CTRL rounds (default ⌈√rounds⌉)
    #[arg(long = "ctrl-count")]
    pub ctrl_count: Option<String>,
    /// Fraction of SIFT rounds disclosed for estimation
    #[arg(long = "cc-fraction")]
    pub cc_fraction: Option<String>,
    /// Attack table file (replaces the built-in depolarizing attack)
    #[arg(long = "attack-file")]
    pub attack_file: Option<PathBuf>,
    /// Built-in attack: depolarizing or identity
    #[arg(long)]
    pub attack: Option<String>,
    /// Output file or directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Confidence level for estimate radii
    #[arg(long)]
    pub confidence: Option<String>,
}

/// Options merged with the config file; flags win.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    base: PathBuf,
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("config line {}: expected key=value", i + 1))?;
        let k = k.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&k.as_str()) {
            bail!("config line {}: unknown key `{k}`", i + 1);
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

impl Settings {
    pub fn resolve(opts: &Options) -> Result<Self> {
        let (mut values, base) = match &opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                (parse_config_text(&text)?, base)
            }
            None => (BTreeMap::new(), PathBuf::new()),
        };
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        };
        set("n", opts.n.clone());
        set("q", opts.q.clone());
        set("qtilde", opts.qtilde.clone());
        set("q_step", opts.q_step.clone());
        set("mode", opts.mode.clone());
        set("rounds", opts.rounds.clone());
        set("seed", opts.seed.clone());
        set("ctrl_count", opts.ctrl_count.clone());
        set("cc_fraction", opts.cc_fraction.clone());
        set("attack", opts.attack.clone());
        set("confidence", opts.confidence.clone());
        let mut s = Self { values, base };
        // Paths given on the command line are taken as-is; config paths are
        // relative to the config file.
        for (key, flag) in [("attack_file", &opts.attack_file), ("out", &opts.out)] {
            match flag {
                Some(p) => {
                    s.values.insert(key.to_string(), p.display().to_string());
                }
                None => {
                    if let Some(v) = s.values.get(key) {
                        let p = s.base.join(v);
                        s.values.insert(key.to_string(), p.display().to_string());
                    }
                }
            }
        }
        Ok(s)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow!("bad value `{v}` for {key}: {e}")))
            .transpose()
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(PathBuf::from)
    }

    pub fn step(&self) -> Result<f64> {
        let step = self.parse::<f64>("q_step")?.unwrap_or(DEFAULT_STEP);
        if !(step > 0.0) {
            bail!("q-step must be positive");
        }
        Ok(step)
    }

    pub fn n_list(&self, default: &[usize]) -> Result<Vec<usize>> {
        match self.get("n") {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|e| anyhow!("bad value `{x}` for n: {e}")))
                .collect(),
        }
    }

    pub fn single_n(&self, default: usize) -> Result<usize> {
        let ns = self.n_list(&[default])?;
        match ns[..] {
            [n] => Ok(n),
            _ => bail!("expected a single value for n"),
        }
    }

    pub fn range(&self, key: &str, default: &str) -> Result<Range> {
        Range::parse(self.get(key).unwrap_or(default), self.step()?)
    }

    pub fn single_value(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.parse::<f64>(key)?.unwrap_or(default);
        if !(0.0..=1.0).contains(&v) {
            bail!("{key} = {v} outside [0, 1]");
        }
        Ok(v)
    }

    pub fn modes(&self, default: &[BoundMode]) -> Result<Vec<BoundMode>> {
        match self.get("mode") {
            None | Some("both") => Ok(default.to_vec()),
            Some(v) => v.split(',').map(|m| m.trim().parse::<BoundMode>().map_err(|e| anyhow!("{e}"))).collect(),
        }
    }

    pub fn run_config(&self) -> Result<RunConfig> {
        let rounds = self.parse::<usize>("rounds")?.unwrap_or(DEFAULT_ROUNDS);
        let cc_fraction = self.parse::<f64>("cc_fraction")?.unwrap_or(DEFAULT_CC_FRACTION);
        if !(0.0..1.0).contains(&cc_fraction) {
            bail!("cc-fraction must lie in [0, 1)");
        }
        let confidence = self.parse::<f64>("confidence")?.unwrap_or(DEFAULT_CONFIDENCE);
        if !(confidence > 0.0 && confidence < 1.0) {
            bail!("confidence must lie in (0, 1)");
        }
        let attack = match (self.path("attack_file"), self.get("attack")) {
            (Some(path), _) => AttackSource::TableFile(path),
            (None, None | Some("depolarizing")) => AttackSource::Depolarizing {
                q: self.single_value("q", 0.0)?,
                q_tilde: self.single_value("qtilde", 0.0)?,
            },
            (None, Some("identity")) => AttackSource::Identity,
            (None, Some(other)) => bail!("unknown attack `{other}`"),
        };
        Ok(RunConfig {
            n: self.single_n(2)?,
            seed: self.parse::<u64>("seed")?.unwrap_or(DEFAULT_SEED),
            rounds,
            ctrl_count: self.parse::<usize>("ctrl_count")?,
            cc_fraction,
            confidence,
            attack,
            out: self.path("out"),
        })
    }
}

/// Closed grid `start, start+step, …, ≤ stop`; empty when `start > stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn parse(s: &str, default_step: f64) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(':')
            .map(|x| x.trim().parse::<f64>().map_err(|e| anyhow!("bad range `{s}`: {e}")))
            .collect::<Result<_>>()?;
        let (start, stop, step) = match parts[..] {
            [x] => (x, x, default_step),
            [a, b] => (a, b, default_step),
            [a, b, c] => (a, b, c),
            _ => bail!("bad range `{s}`"),
        };
        if !(step > 0.0) {
            bail!("range step must be positive");
        }
        if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&stop) {
            bail!("range `{s}` leaves [0, 1]");
        }
        Ok(Self { start, stop, step })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.start > self.stop {
            return Vec::new();
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| round12(self.start + i as f64 * self.step).min(self.stop)).collect()
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackSource {
    Depolarizing { q: f64, q_tilde: f64 },
    Identity,
    TableFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub seed: u64,
    pub rounds: usize,
    /// `None` means `⌈√rounds⌉`.
    pub ctrl_count: Option<usize>,
    pub cc_fraction: f64,
    pub confidence: f64,
    pub attack: AttackSource,
    pub out: Option<PathBuf>,
}
