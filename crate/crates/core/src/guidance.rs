//! Mark lifecycle inside the LNS: when to run the selector and which
//! customers a destroy call may touch.

use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::GuidanceError;
use crate::instance::{Instance, NodeId};
use crate::selector::{
    build_graph_with, decode_marks, forward, heuristic_selector, load_weights, GraphOptions, MarkSet, MarkSource,
    SelectorModel, SparseGraph,
};
use crate::solution::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum RemarkPolicy {
    #[default]
    Once,
    EveryK(u64),
    OnNewBest,
}

impl FromStr for RemarkPolicy {
    type Err = GuidanceError;

    /// `once`, `new-best`, or `every:K`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "once" => Ok(Self::Once),
            "new-best" | "on-new-best" => Ok(Self::OnNewBest),
            other => match other.strip_prefix("every:").map(str::parse::<u64>) {
                Some(Ok(0)) => Err(GuidanceError::ZeroPeriod),
                Some(Ok(k)) => Ok(Self::EveryK(k)),
                _ => Err(GuidanceError::UnknownPreset(format!("remark policy {s}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SelectorKind {
    Gnn { weights: PathBuf },
    Heuristic { quantile: f64 },
    Null,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    /// Edge probability threshold `t` for the network selector.
    pub threshold: f64,
    /// Aspiration parameter `p`: a marked customer may be removed when a
    /// uniform draw exceeds it.
    pub aspiration: f64,
    pub remark_policy: RemarkPolicy,
    pub selector: SelectorKind,
    /// Graph neighbour count.
    pub k: usize,
    pub solution_edges_only: bool,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            threshold: 0.8,
            aspiration: 0.65,
            remark_policy: RemarkPolicy::Once,
            selector: SelectorKind::Null,
            k: crate::selector::graph::DEFAULT_GRAPH_K,
            solution_edges_only: false,
        }
    }
}

/// Bundled `(t, p)` settings by baseline family and benchmark set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    HgsX,
    FiloX,
    FiloB,
}

impl Preset {
    /// `(threshold, aspiration)` for an instance with `n` customers.
    pub fn params(self, n: usize) -> (f64, f64) {
        match (self, n < 300) {
            (Preset::HgsX, true) => (0.8, 0.65),
            (Preset::HgsX, false) => (0.8, 0.70),
            (Preset::FiloX, true) => (0.9, 0.60),
            (Preset::FiloX, false) => (0.85, 0.65),
            (Preset::FiloB, _) => (0.85, 0.60),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::HgsX => "hgs-x",
            Preset::FiloX => "filo-x",
            Preset::FiloB => "filo-b",
        }
    }
}

impl FromStr for Preset {
    type Err = GuidanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "hgs-x" | "hgs" => Ok(Preset::HgsX),
            "filo-x" | "filo" => Ok(Preset::FiloX),
            "filo-b" => Ok(Preset::FiloB),
            _ => Err(GuidanceError::UnknownPreset(s.to_string())),
        }
    }
}

impl GuidanceConfig {
    pub fn from_preset(preset: Preset, n: usize, selector: SelectorKind) -> Self {
        let (threshold, aspiration) = preset.params(n);
        Self {
            threshold,
            aspiration,
            selector,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GuidanceError> {
        if !(0.0..=1.0).contains(&self.aspiration) {
            return Err(GuidanceError::Aspiration(self.aspiration));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(GuidanceError::Threshold(self.threshold));
        }
        if self.remark_policy == RemarkPolicy::EveryK(0) {
            return Err(GuidanceError::ZeroPeriod);
        }
        if let SelectorKind::Heuristic { quantile } = self.selector {
            if !(0.0..=1.0).contains(&quantile) {
                return Err(GuidanceError::Threshold(quantile));
            }
        }
        Ok(())
    }
}

/// Once: only at iteration 0. EveryK: multiples of k. OnNewBest: whenever
/// the previous iteration found a new best.
pub fn should_remark(policy: RemarkPolicy, iteration: u64, new_best: bool) -> bool {
    match policy {
        RemarkPolicy::Once => iteration == 0,
        RemarkPolicy::EveryK(k) => k > 0 && iteration % k == 0,
        RemarkPolicy::OnNewBest => new_best,
    }
}

/// Unmarked customers are always allowed and consume no randomness. A
/// marked one is allowed iff a fresh `R ~ U[0,1)` satisfies `R > p`.
pub fn allowed<R: Rng + ?Sized>(marks: &MarkSet, p: f64, node: NodeId, rng: &mut R) -> bool {
    !marks.is_marked(node) || rng.gen::<f64>() > p
}

/// Network marks for `sol`: graph, forward pass, decoding at `t`.
pub fn gnn_marks(
    model: &SelectorModel<f32>,
    inst: &Instance,
    sol: &Solution,
    t: f64,
    opts: &GraphOptions,
) -> Result<MarkSet, GuidanceError> {
    let g: SparseGraph<f32> = build_graph_with(inst, sol, opts);
    let probs = forward(model, &g)?.probs;
    let marks = decode_marks(probs.as_slice().expect("contiguous"), &g, t)?;
    Ok(MarkSet::from_nodes(
        inst.num_nodes(),
        marks.marked().iter().copied(),
        Some(t),
        MarkSource::Gnn,
    ))
}

/// Validated configuration plus a loaded model when the selector needs
/// one. Read-only after construction and shareable between runs.
#[derive(Debug, Clone)]
pub struct Guidance {
    config: GuidanceConfig,
    model: Option<Arc<SelectorModel<f32>>>,
}

impl Guidance {
    /// Loads weights for network selectors.
    pub fn new(config: GuidanceConfig) -> Result<Self, GuidanceError> {
        config.validate()?;
        let model = match &config.selector {
            SelectorKind::Gnn { weights } => Some(Arc::new(load_weights(weights)?)),
            _ => None,
        };
        Ok(Self { config, model })
    }

    /// Network guidance with an already loaded model.
    pub fn with_model(config: GuidanceConfig, model: Arc<SelectorModel<f32>>) -> Result<Self, GuidanceError> {
        config.validate()?;
        model.validate()?;
        Ok(Self {
            config,
            model: Some(model),
        })
    }

    pub fn null() -> Self {
        Self {
            config: GuidanceConfig::default(),
            model: None,
        }
    }

    pub fn config(&self) -> &GuidanceConfig {
        &self.config
    }

    pub fn model(&self) -> Option<&SelectorModel<f32>> {
        self.model.as_deref()
    }

    pub fn should_remark(&self, iteration: u64, new_best: bool) -> bool {
        should_remark(self.config.remark_policy, iteration, new_best)
    }

    pub fn graph_options(&self) -> GraphOptions {
        GraphOptions {
            k: self.config.k,
            solution_edges_only: self.config.solution_edges_only,
            ..GraphOptions::default()
        }
    }

    /// Marks for `current` under the configured selector.
    pub fn mark(&self, inst: &Instance, current: &Solution) -> MarkSet {
        match (&self.config.selector, &self.model) {
            (SelectorKind::Heuristic { quantile }, _) => {
                heuristic_selector(inst, current, *quantile).expect("quantile validated")
            }
            (SelectorKind::Gnn { .. }, Some(model)) => {
                gnn_marks(model, inst, current, self.config.threshold, &self.graph_options())
                    .expect("validated model on a generated graph")
            }
            _ => MarkSet::empty(inst.num_nodes(), MarkSource::Null),
        }
    }
}
