//! Sectioned `key = value` configuration.
//!
//! ```text
//! # comment
//! [engine]
//! k = 50
//! mode = exact
//! ```
//!
//! Every key has a default; unknown keys are rejected by name.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use tbd_core::analysis::curves::CurveConfig;
use tbd_core::analysis::edge_stats::ScaleEstimator;
use tbd_core::detector::{DetectConfig, DetectionLimit};
use tbd_core::edge::{EdgeObsConfig, NormalizeMode, StatsConfig, StatsMode, ViterbiModelConfig};
use tbd_core::engine::{EngineConfig, EngineMode};
use tbd_core::io::SequenceFormat;
use tbd_core::observation::Frame;
use tbd_core::pipeline::{PipelineConfig, SpaceConfig};
use tbd_core::space::{Metric, SpaceKind};
use tbd_core::synth::{sigma_for_snr, Background, SceneSpec, TargetSpec};
use tbd_core::{Error, Result};

/// Known keys and their defaults, in output order.
const DEFAULTS: &[(&str, &str)] = &[
    ("run.seed", "0"),
    ("io.out", "out"),
    ("io.input", ""),
    ("io.format", "auto"),
    ("io.dump_fields", "false"),
    ("scene.height", "128"),
    ("scene.width", "128"),
    ("scene.frames", "300"),
    ("scene.background", "100"),
    ("scene.targets", "1"),
    ("scene.target_size", "2"),
    ("scene.amplitude", "20"),
    ("scene.snr", "1.5"),
    ("scene.v1", "2"),
    ("scene.metric", "chebyshev"),
    ("space.kind", "position"),
    ("space.v1", "2"),
    ("space.a1", "2"),
    ("space.metric", "chebyshev"),
    ("edge.constructor", "npi"),
    ("edge.r", "1"),
    ("edge.b", "1e-5"),
    ("edge.epsilon", "0.04"),
    ("edge.lambda", "3"),
    ("edge.literal_max", "false"),
    ("edge.normalize", "signed"),
    ("edge.stats.mode", "per-edge"),
    ("edge.stats.decay", "0.99"),
    ("edge.stats.warmup", "10"),
    ("edge.viterbi.amplitude", "1"),
    ("edge.viterbi.sigma", "1"),
    ("edge.viterbi.background", "0"),
    ("edge.viterbi.size", "2"),
    ("engine.k", "50"),
    ("engine.mode", "exact"),
    ("engine.refresh", "auto"),
    ("engine.backpointers", "false"),
    ("engine.track_drift", "false"),
    ("detect.alpha", "0.8"),
    ("detect.limit", "auto-2sigma"),
    ("detect.smoothing", "1"),
    ("analysis.k", "5,10,15,20,30,40"),
    ("analysis.n", "2"),
    ("analysis.trials", "200"),
    ("analysis.fp_samples", "200"),
    ("analysis.height", "128"),
    ("analysis.width", "128"),
    ("analysis.amplitude", "20"),
    ("analysis.snr", "1.5"),
    ("analysis.background", "100"),
    ("analysis.warmup", "60"),
    ("analysis.stats_scenes", "20"),
    ("analysis.stats_frames", "120"),
    ("analysis.stats_per_frame", "200"),
    ("analysis.estimator", "gaussian"),
    ("analysis.safety", "1.1"),
    ("analysis.margin_n", "1,2"),
    ("eval.detections", ""),
    ("eval.truth", ""),
    ("eval.methods", ""),
    ("eval.m", "0,20,40"),
];

#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn known(key: &str) -> bool {
    DEFAULTS.iter().any(|(k, _)| *k == key)
}

impl Config {
    pub fn defaults() -> Self {
        Self {
            values: DEFAULTS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::defaults();
        cfg.merge_text(&text, &path.display().to_string())?;
        Ok(cfg)
    }

    pub fn merge_text(&mut self, text: &str, origin: &str) -> Result<()> {
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{origin}:{}: expected 'key = value', got '{line}'",
                    n + 1
                )));
            };
            let key = key.trim();
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            self.set(&full, value.trim())
                .map_err(|e| Error::Config(format!("{origin}:{}: {}", n + 1, strip(e))))?;
        }
        Ok(())
    }

    /// Sets one key, rejecting unknown names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !known(key) {
            return Err(Error::Config(format!("unknown key '{key}'")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got '{pair}'")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("no default for {key}"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key);
        raw.parse().map_err(|e: T::Err| {
            Error::Config(format!("{key} = '{raw}': {}", strip_str(&e.to_string())))
        })
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(key);
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e: T::Err| Error::Config(format!("{key} = '{raw}': {e}")))
            })
            .collect()
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        let raw = self.raw(key);
        (!raw.is_empty()).then(|| PathBuf::from(raw))
    }

    /// Every key with its resolved value, grouped by section.
    pub fn resolved(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for (key, _) in DEFAULTS {
            let (section, name) = key.split_once('.').unwrap();
            if section != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                let _ = writeln!(out, "[{section}]");
                current = section;
            }
            let _ = writeln!(out, "{name} = {}", self.values[*key]);
        }
        out
    }

    /// The `[scene]` section plus the seed, the part that determines a
    /// synthetic scene.
    pub fn scene_text(&self) -> String {
        let mut out = format!("seed = {}\n", self.raw("run.seed"));
        for (key, _) in DEFAULTS.iter().filter(|(k, _)| k.starts_with("scene.")) {
            let _ = writeln!(out, "{key} = {}", self.values[*key]);
        }
        out
    }

    pub fn seed(&self) -> Result<u64> {
        self.get("run.seed")
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("io.out"))
    }

    pub fn format(&self) -> Result<SequenceFormat> {
        self.get("io.format")
    }

    pub fn scene(&self) -> Result<SceneSpec> {
        let amplitude: f64 = self.get("scene.amplitude")?;
        let size = self.get("scene.target_size")?;
        let count: usize = self.get("scene.targets")?;
        let raw_bg = self.raw("scene.background");
        let background = match raw_bg.parse::<f64>() {
            Ok(v) => Background::Constant(v),
            Err(_) => Background::Image(read_background(Path::new(raw_bg))?),
        };
        Ok(SceneSpec {
            height: self.get("scene.height")?,
            width: self.get("scene.width")?,
            frames: self.get("scene.frames")?,
            background,
            targets: (0..count)
                .map(|_| TargetSpec {
                    size,
                    amplitude,
                    start: None,
                    motion_seed: None,
                })
                .collect(),
            sigma: sigma_for_snr(amplitude, self.get_snr("scene.snr")?),
            v1: self.get("scene.v1")?,
            metric: self.get::<Metric>("scene.metric")?,
            seed: self.seed()?,
        })
    }

    fn get_snr(&self, key: &str) -> Result<f64> {
        let snr: f64 = match self.raw(key) {
            "inf" | "none" => f64::INFINITY,
            _ => self.get(key)?,
        };
        if !(snr > 0.0) {
            return Err(Error::Config(format!("{key} must be positive, got {snr}")));
        }
        Ok(snr)
    }

    pub fn edge(&self) -> Result<EdgeObsConfig> {
        let lambda = match self.raw("edge.lambda") {
            "none" | "" => None,
            _ => Some(self.get("edge.lambda")?),
        };
        let cfg = EdgeObsConfig {
            constructor: self.raw("edge.constructor").to_string(),
            r: self.get("edge.r")?,
            b: self.get("edge.b")?,
            epsilon: self.get("edge.epsilon")?,
            lambda,
            literal_max: self.get("edge.literal_max")?,
            normalize: self.get::<NormalizeMode>("edge.normalize")?,
            stats: StatsConfig {
                mode: self.get::<StatsMode>("edge.stats.mode")?,
                decay: self.get("edge.stats.decay")?,
                warmup: self.get("edge.stats.warmup")?,
            },
            viterbi: ViterbiModelConfig {
                amplitude: self.get("edge.viterbi.amplitude")?,
                sigma: self.get("edge.viterbi.sigma")?,
                background: self.get("edge.viterbi.background")?,
                size: self.get("edge.viterbi.size")?,
            },
        };
        cfg.validate()?;
        if !tbd_core::edge::constructors().contains(&cfg.constructor) {
            return Err(Error::Config(format!(
                "edge.constructor: unknown '{}' (available: {})",
                cfg.constructor,
                tbd_core::edge::constructors().names().join(", ")
            )));
        }
        Ok(cfg)
    }

    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let refresh = match self.raw("engine.refresh") {
            "auto" | "" => None,
            _ => Some(self.get("engine.refresh")?),
        };
        let cfg = PipelineConfig {
            space: SpaceConfig {
                kind: self.get::<SpaceKind>("space.kind")?,
                v1: self.get("space.v1")?,
                a1: self.get("space.a1")?,
                metric: self.get::<Metric>("space.metric")?,
            },
            edge: self.edge()?,
            engine: EngineConfig {
                k: self.get("engine.k")?,
                mode: self.get::<EngineMode>("engine.mode")?,
                refresh,
                backpointers: self.get("engine.backpointers")?,
            },
            detect: DetectConfig {
                alpha: self.get("detect.alpha")?,
                limit: self.get::<DetectionLimit>("detect.limit")?,
                smoothing: self.get("detect.smoothing")?,
            },
            track_drift: self.get("engine.track_drift")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn curves(&self) -> Result<CurveConfig> {
        let mut edge = self.edge()?;
        edge.stats.warmup = self.get("analysis.warmup")?;
        let pipeline = self.pipeline()?;
        let cfg = CurveConfig {
            height: self.get("analysis.height")?,
            width: self.get("analysis.width")?,
            target_size: self.get("scene.target_size")?,
            amplitude: self.get("analysis.amplitude")?,
            snr: self.get_snr("analysis.snr")?,
            background: self.get("analysis.background")?,
            v1: pipeline.space.v1,
            edge,
            alpha: pipeline.detect.alpha,
            limit: pipeline.detect.limit,
            ks: self.list("analysis.k")?,
            n: self.get("analysis.n")?,
            trials: self.get("analysis.trials")?,
            fp_samples: self.get("analysis.fp_samples")?,
            seed: self.seed()?,
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn estimator(&self) -> Result<ScaleEstimator> {
        match self.raw("analysis.estimator") {
            "gaussian" => Ok(ScaleEstimator::GaussianProxy),
            "moments" => Ok(ScaleEstimator::Moments),
            other => Err(Error::Config(format!(
                "analysis.estimator: unknown '{other}' (available: gaussian, moments)"
            ))),
        }
    }
}

fn read_background(path: &Path) -> Result<Frame> {
    if !path.exists() {
        return Err(Error::Config(format!(
            "scene.background: '{}' is neither a number nor an existing image",
            path.display()
        )));
    }
    tbd_core::io::read_pgm(path)
}

fn strip(e: Error) -> String {
    strip_str(&e.to_string())
}

fn strip_str(s: &str) -> String {
    s.strip_prefix("configuration error: ")
        .unwrap_or(s)
        .to_string()
}
