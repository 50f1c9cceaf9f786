//! Experiment plans and the line-oriented plan file.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::construction::Constructor;
use crate::error::InvalidArgument;
use crate::guidance::{GuidanceConfig, Preset, RemarkPolicy, SelectorKind};
use crate::instance::Instance;
use crate::lns::RepairKind;

#[derive(Debug, Clone)]
pub enum InstanceSource {
    Path(PathBuf),
    Loaded(Arc<Instance>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VariantKind {
    Baseline,
    Guided {
        selector: SelectorKind,
        /// Supplies `t` and `p` by instance size unless overridden.
        preset: Preset,
        threshold: Option<f64>,
        aspiration: Option<f64>,
        remark_policy: RemarkPolicy,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub name: String,
    pub kind: VariantKind,
}

impl Variant {
    pub fn baseline() -> Self {
        Self {
            name: "baseline".into(),
            kind: VariantKind::Baseline,
        }
    }

    pub fn guided(name: impl Into<String>, selector: SelectorKind, preset: Preset) -> Self {
        Self {
            name: name.into(),
            kind: VariantKind::Guided {
                selector,
                preset,
                threshold: None,
                aspiration: None,
                remark_policy: RemarkPolicy::Once,
            },
        }
    }

    /// Guidance settings for an instance with `n` customers; `None` for the
    /// baseline.
    pub fn guidance_config(&self, n: usize) -> Option<GuidanceConfig> {
        match &self.kind {
            VariantKind::Baseline => None,
            VariantKind::Guided {
                selector,
                preset,
                threshold,
                aspiration,
                remark_policy,
            } => {
                let mut cfg = GuidanceConfig::from_preset(*preset, n, selector.clone());
                if let Some(t) = threshold {
                    cfg.threshold = *t;
                }
                if let Some(p) = aspiration {
                    cfg.aspiration = *p;
                }
                cfg.remark_policy = *remark_policy;
                Some(cfg)
            }
        }
    }

    /// Parses `NAME [key=value ...]`. `baseline` alone is the unguided
    /// variant; anything else is guided. Keys: `selector` (gnn, heuristic,
    /// null), `weights`, `quantile`, `preset`, `threshold`, `aspiration`,
    /// `remark`.
    pub fn parse(spec: &str) -> Result<Self, InvalidArgument> {
        let mut parts = spec.split_whitespace();
        let name = parts
            .next()
            .ok_or_else(|| InvalidArgument("empty variant".into()))?
            .to_string();
        let opts: Vec<(&str, &str)> = parts
            .map(|p| {
                p.split_once('=')
                    .ok_or_else(|| InvalidArgument(format!("variant option {p} is not key=value")))
            })
            .collect::<Result<_, _>>()?;
        if name == "baseline" && opts.is_empty() {
            return Ok(Self::baseline());
        }
        let mut selector_name = None;
        let mut weights = None;
        let mut quantile = 0.5;
        let mut preset = Preset::HgsX;
        let mut threshold = None;
        let mut aspiration = None;
        let mut remark_policy = RemarkPolicy::Once;
        let float = |k: &str, v: &str| {
            v.parse::<f64>()
                .map_err(|_| InvalidArgument(format!("{k}: bad number {v}")))
        };
        for (k, v) in opts {
            match k {
                "selector" => selector_name = Some(v.to_ascii_lowercase()),
                "weights" => weights = Some(PathBuf::from(v)),
                "quantile" => quantile = float(k, v)?,
                "preset" => preset = v.parse().map_err(|e| InvalidArgument(format!("{e}")))?,
                "threshold" => threshold = Some(float(k, v)?),
                "aspiration" => aspiration = Some(float(k, v)?),
                "remark" => remark_policy = v.parse().map_err(|e| InvalidArgument(format!("{e}")))?,
                _ => return Err(InvalidArgument(format!("unknown variant option {k}"))),
            }
        }
        let selector = match (selector_name.as_deref(), weights) {
            (Some("null"), _) => SelectorKind::Null,
            (Some("heuristic"), _) => SelectorKind::Heuristic { quantile },
            (Some("gnn") | None, Some(weights)) => SelectorKind::Gnn { weights },
            (Some("gnn"), None) => return Err(InvalidArgument("gnn selector needs weights=FILE".into())),
            (None, None) => SelectorKind::Heuristic { quantile },
            (Some(other), _) => return Err(InvalidArgument(format!("unknown selector {other}"))),
        };
        Ok(Self {
            name,
            kind: VariantKind::Guided {
                selector,
                preset,
                threshold,
                aspiration,
                remark_policy,
            },
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub instances: Vec<InstanceSource>,
    pub variants: Vec<Variant>,
    pub runs: u32,
    pub iterations: u64,
    pub time_limit: Option<Duration>,
    pub constructor: Constructor,
    pub repair: RepairKind,
    /// Upper bound on concurrent runs; 0 uses every core.
    pub workers: usize,
    /// Extra `name<TAB>cost` table merged over the bundled one.
    pub bks_file: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            instances: Vec::new(),
            variants: vec![Variant::baseline()],
            runs: 5,
            iterations: 100_000,
            time_limit: None,
            constructor: Constructor::ClarkeWright,
            repair: RepairKind::Greedy,
            workers: 0,
            bks_file: None,
            out_dir: None,
        }
    }
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), InvalidArgument> {
        if self.runs == 0 {
            return Err(InvalidArgument("runs must be at least 1".into()));
        }
        if self.variants.is_empty() {
            return Err(InvalidArgument("at least one variant is required".into()));
        }
        let mut names: Vec<&str> = self.variants.iter().map(|v| v.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(InvalidArgument("variant names must be unique".into()));
        }
        for v in &self.variants {
            if let Some(cfg) = v.guidance_config(1) {
                cfg.validate()
                    .map_err(|e| InvalidArgument(format!("variant {}: {e}", v.name)))?;
            }
        }
        Ok(())
    }

    /// Seed of run `r` (1-based): `r - 1`.
    pub fn seed_of(run: u32) -> u64 {
        u64::from(run) - 1
    }

    /// Reads a plan file. Relative paths resolve against the file's directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self, InvalidArgument> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| InvalidArgument(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses `key = value` lines; `#` starts a comment. Keys: `instances`
    /// (directory or glob, repeatable), `variant` (repeatable, see
    /// [`Variant::parse`]), `runs`, `iterations`, `time_limit` (seconds),
    /// `constructor`, `repair` (greedy, regret2), `workers`, `bks`, `out`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, InvalidArgument> {
        let mut plan = Self {
            variants: Vec::new(),
            ..Self::default()
        };
        let resolve = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| InvalidArgument(format!("plan line {}: {m}", no + 1));
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let (k, v) = (k.trim(), v.trim());
            let num = |v: &str| v.parse::<u64>().map_err(|_| err(format!("bad integer {v}")));
            match k {
                "instances" => {
                    let pattern = resolve(v);
                    let found = expand_instances(&pattern.to_string_lossy()).map_err(|e| err(e.0))?;
                    plan.instances.extend(found.into_iter().map(InstanceSource::Path));
                }
                "variant" => plan.variants.push(Variant::parse(v).map_err(|e| err(e.0))?),
                "runs" => plan.runs = num(v)? as u32,
                "iterations" => plan.iterations = num(v)?,
                "time_limit" => {
                    let s: f64 = v.parse().map_err(|_| err(format!("bad seconds {v}")))?;
                    if !(s.is_finite() && s > 0.0) {
                        return Err(err(format!("time limit {s} must be positive")));
                    }
                    plan.time_limit = Some(Duration::from_secs_f64(s));
                }
                "constructor" => plan.constructor = v.parse().map_err(|e: InvalidArgument| err(e.0))?,
                "repair" => {
                    plan.repair = match v {
                        "greedy" => RepairKind::Greedy,
                        "regret2" | "regret" => RepairKind::Regret2,
                        _ => return Err(err(format!("unknown repair {v}"))),
                    }
                }
                "workers" => plan.workers = num(v)? as usize,
                "bks" => plan.bks_file = Some(resolve(v)),
                "out" => plan.out_dir = Some(resolve(v)),
                _ => return Err(err(format!("unknown key {k}"))),
            }
        }
        if plan.variants.is_empty() {
            plan.variants.push(Variant::baseline());
        }
        plan.validate()?;
        Ok(plan)
    }
}

/// A directory yields its `*.vrp` files; anything else is a glob pattern.
/// Results are sorted.
pub fn expand_instances(pattern: &str) -> Result<Vec<PathBuf>, InvalidArgument> {
    let p = Path::new(pattern);
    let pattern = if p.is_dir() {
        p.join("*.vrp").to_string_lossy().into_owned()
    } else {
        pattern.to_string()
    };
    let mut out: Vec<PathBuf> = glob::glob(&pattern)
        .map_err(|e| InvalidArgument(format!("bad pattern {pattern}: {e}")))?
        .filter_map(Result::ok)
        .filter(|p| p.is_file())
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(InvalidArgument(format!("no instances match {pattern}")));
    }
    Ok(out)
}

impl FromStr for Variant {
    type Err = InvalidArgument;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::parse(s)
    }
}
