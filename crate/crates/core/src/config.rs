//! Run configuration, its flat key-value file format, and the per-run random stream.
//!
//! Configuration files are TOML documents with flat keys named after the
//! [`RunConfig`] fields. Values are layered as `defaults < file < flags`:
//! every layer is a [`RunConfigPatch`] applied on top of the previous one.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Random stream owned by a single run.
pub type RunRng = ChaCha8Rng;

/// Largest accepted seed; config files store seeds as signed 64-bit integers.
pub const MAX_SEED: u64 = i64::MAX as u64;

/// Creates the random stream for a run. Identical seeds give identical streams
/// on every platform.
pub fn make_rng(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent auxiliary stream for problem setup (e.g. generating a pool)
/// that must not overlap the run stream of the same seed.
pub fn make_setup_rng(seed: u64) -> RunRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $key:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $key)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $key),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($key => Ok($name::$variant),)+
                    other => Err(Error::InvalidConfig(format!(
                        "unknown {} `{}` (expected one of: {})",
                        stringify!($name),
                        other,
                        [$($key),+].join(", ")
                    ))),
                }
            }
        }
    };
}

keyword_enum! {
    /// Where unlabeled points come from.
    Scenario {
        Sampling => "sampling",
        Pool => "pool",
    }
}

keyword_enum! {
    /// Surface used to choose queries.
    Classifier {
        LabelPropagation => "label_propagation",
        LabelSpreading => "label_spreading",
        NadarayaWatsonControl => "nadaraya_watson_control",
        RandomSearch => "random_search",
    }
}

keyword_enum! {
    /// Distribution of unlabeled points in the sampling scenario.
    SamplerKind {
        TruncatedNormal => "truncated_normal",
        Uniform => "uniform",
        Halton => "halton",
        Sobol => "sobol",
    }
}

/// Kernel width handling: a fixed value, or learned every iteration by entropy minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaMode {
    Fixed(f64),
    Learned,
}

impl fmt::Display for BetaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaMode::Fixed(v) => write!(f, "{v}"),
            BetaMode::Learned => f.write_str("learned"),
        }
    }
}

impl FromStr for BetaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "learned" {
            return Ok(BetaMode::Learned);
        }
        s.parse::<f64>()
            .map(BetaMode::Fixed)
            .map_err(|_| Error::InvalidConfig(format!("beta must be `learned` or a number, got `{s}`")))
    }
}

impl Serialize for BetaMode {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            BetaMode::Fixed(v) => serializer.serialize_f64(*v),
            BetaMode::Learned => serializer.serialize_str("learned"),
        }
    }
}

impl<'de> Deserialize<'de> for BetaMode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Ok(BetaMode::Fixed(v)),
            Raw::Text(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

/// Everything that determines a run, apart from the objective and the pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Fraction of observations labeled as Class 1.
    pub zeta: f64,
    pub scenario: Scenario,
    pub classifier: Classifier,
    /// Unlabeled points drawn per iteration in the sampling scenario.
    pub n_unlabeled: usize,
    /// Size of the random pool subset used as unlabeled data; whole pool when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool_subset: Option<usize>,
    /// Clamping factor of label spreading.
    pub alpha: f64,
    pub beta: BetaMode,
    /// Maximum propagation sweeps.
    pub max_prop_iters: usize,
    /// Propagation stops once the max-abs change of the label matrix is below this.
    pub tol: f64,
    pub n_starts: usize,
    /// Number of acquisition iterations after the initial design.
    pub iterations: usize,
    pub n_init: usize,
    pub seed: u64,
    pub sampler: SamplerKind,
    /// Per-axis standard deviation of the truncated normal sampler.
    pub sampler_std: f64,
    /// Values within this distance of the best are treated as ties.
    pub tie_tol: f64,
    /// Measure wall-clock durations. Off by default so traces are byte-reproducible.
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            zeta: 0.33,
            scenario: Scenario::Sampling,
            classifier: Classifier::LabelPropagation,
            n_unlabeled: 100,
            pool_subset: None,
            alpha: 0.2,
            beta: BetaMode::Learned,
            max_prop_iters: 1000,
            tol: 1e-6,
            n_starts: 1000,
            iterations: 100,
            n_init: 5,
            seed: 0,
            sampler: SamplerKind::TruncatedNormal,
            sampler_std: 1.0,
            tie_tol: 1e-9,
            record_timing: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return bad(format!("zeta must lie in (0, 1), got {}", self.zeta));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if let BetaMode::Fixed(b) = self.beta {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("beta must be positive and finite, got {b}"));
            }
        }
        if self.max_prop_iters == 0 {
            return bad("max_prop_iters must be positive".into());
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.n_starts == 0 {
            return bad("n_starts must be positive".into());
        }
        if self.n_init == 0 {
            return bad("n_init must be positive".into());
        }
        if self.pool_subset == Some(0) {
            return bad("pool_subset must be positive".into());
        }
        if !(self.sampler_std > 0.0 && self.sampler_std.is_finite()) {
            return bad(format!("sampler_std must be positive, got {}", self.sampler_std));
        }
        if !(self.tie_tol >= 0.0) {
            return bad(format!("tie_tol must be nonnegative, got {}", self.tie_tol));
        }
        if self.seed > MAX_SEED {
            return bad(format!("seed must be at most {MAX_SEED}, got {}", self.seed));
        }
        Ok(())
    }

    /// Fails only for seeds above [`MAX_SEED`], which TOML integers cannot hold.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(format!("cannot serialize config: {e}")))
    }

    /// Parses a complete or partial config file on top of the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let patch = RunConfigPatch::from_toml_str(text)?;
        let mut config = RunConfig::default();
        patch.apply_to(&mut config);
        config.validate()?;
        Ok(config)
    }

    /// Whether the queries come from the semi-supervised surface.
    pub fn uses_propagation(&self) -> bool {
        matches!(
            self.classifier,
            Classifier::LabelPropagation | Classifier::LabelSpreading | Classifier::NadarayaWatsonControl
        )
    }
}

/// Partial configuration; absent keys leave the underlying value alone.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigPatch {
    pub zeta: Option<f64>,
    pub scenario: Option<Scenario>,
    pub classifier: Option<Classifier>,
    pub n_unlabeled: Option<usize>,
    pub pool_subset: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<BetaMode>,
    pub max_prop_iters: Option<usize>,
    pub tol: Option<f64>,
    pub n_starts: Option<usize>,
    pub iterations: Option<usize>,
    pub n_init: Option<usize>,
    pub seed: Option<u64>,
    pub sampler: Option<SamplerKind>,
    pub sampler_std: Option<f64>,
    pub tie_tol: Option<f64>,
    pub record_timing: Option<bool>,
}

impl RunConfigPatch {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn apply_to(&self, config: &mut RunConfig) {
        macro_rules! take {
            ($($field:ident),+) => {
                $(if let Some(v) = self.$field { config.$field = v; })+
            };
        }
        take!(
            zeta, scenario, classifier, n_unlabeled, alpha, beta, max_prop_iters, tol, n_starts,
            iterations, n_init, seed, sampler, sampler_std, tie_tol, record_timing
        );
        if self.pool_subset.is_some() {
            config.pool_subset = self.pool_subset;
        }
    }
}
