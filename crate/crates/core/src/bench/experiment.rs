//! Running plans and aggregating results.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bks::BksRegistry;
use crate::error::InvalidArgument;
use crate::guidance::{Guidance, SelectorKind};
use crate::instance::{Cost, DepotMode, Instance};
use crate::lns::{run_lns, LnsConfig};
use crate::selector::{load_weights, SelectorModel};
use crate::solution::{gap, validate, Solution};

use super::plan::{ExperimentPlan, InstanceSource};

/// One solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub variant: String,
    pub run: u32,
    pub seed: u64,
    pub cost: Cost,
    pub gap: Option<f64>,
    pub time_s: f64,
    pub customers: usize,
    pub depot_mode: Option<DepotMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub instance: String,
    pub variant: Option<String>,
    pub message: String,
}

/// Aggregate over the runs of one (instance, variant) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub instance: String,
    pub variant: String,
    pub customers: usize,
    pub depot_mode: Option<DepotMode>,
    pub runs: usize,
    pub avg_cost: f64,
    pub best_cost: Cost,
    pub avg_gap: Option<f64>,
    pub best_gap: Option<f64>,
    pub avg_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub records: Vec<RunRecord>,
    pub cells: Vec<CellSummary>,
    pub failures: Vec<Failure>,
}

/// Size bands for grouped summaries, by customer count.
pub fn size_band(n: usize) -> &'static str {
    match n {
        0..=99 => "1-99",
        100..=200 => "100-200",
        201..=500 => "201-500",
        501..=750 => "501-750",
        751..=1000 => "751-1000",
        _ => ">1000",
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

impl ResultTable {
    /// Aggregates records, keeping the first-seen order of instances and
    /// variants. Records are sorted by that order and then run index.
    pub fn from_records(mut records: Vec<RunRecord>, failures: Vec<Failure>) -> Self {
        let mut inst_order: Vec<String> = Vec::new();
        let mut var_order: Vec<String> = Vec::new();
        for r in &records {
            if !inst_order.contains(&r.instance) {
                inst_order.push(r.instance.clone());
            }
            if !var_order.contains(&r.variant) {
                var_order.push(r.variant.clone());
            }
        }
        let pos = |v: &Vec<String>, s: &str| v.iter().position(|x| x == s).expect("collected above");
        records.sort_by_key(|r| (pos(&inst_order, &r.instance), pos(&var_order, &r.variant), r.run));

        let mut groups: BTreeMap<(usize, usize), Vec<&RunRecord>> = BTreeMap::new();
        for r in &records {
            groups
                .entry((pos(&inst_order, &r.instance), pos(&var_order, &r.variant)))
                .or_default()
                .push(r);
        }
        let cells = groups
            .into_values()
            .map(|rs| {
                let gaps: Option<Vec<f64>> = rs.iter().map(|r| r.gap).collect();
                CellSummary {
                    instance: rs[0].instance.clone(),
                    variant: rs[0].variant.clone(),
                    customers: rs[0].customers,
                    depot_mode: rs[0].depot_mode,
                    runs: rs.len(),
                    avg_cost: mean(rs.iter().map(|r| r.cost as f64)),
                    best_cost: rs.iter().map(|r| r.cost).min().expect("non-empty group"),
                    avg_gap: gaps.as_ref().map(|g| mean(g.iter().copied())),
                    best_gap: gaps.as_ref().map(|g| g.iter().copied().fold(f64::INFINITY, f64::min)),
                    avg_time_s: mean(rs.iter().map(|r| r.time_s)),
                }
            })
            .collect();
        Self {
            records,
            cells,
            failures,
        }
    }

    pub fn variants(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.variant.as_str()) {
                out.push(&c.variant);
            }
        }
        out
    }

    pub fn instances(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.instance.as_str()) {
                out.push(&c.instance);
            }
        }
        out
    }

    pub fn cell(&self, instance: &str, variant: &str) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.instance == instance && c.variant == variant)
    }

    /// Whether every cell carries a gap.
    pub fn has_gaps(&self) -> bool {
        !self.cells.is_empty() && self.cells.iter().all(|c| c.avg_gap.is_some())
    }

    /// Per-instance score used for comparisons: the mean gap when every
    /// cell has one, otherwise the mean cost's excess in percent over the
    /// best cost any variant reached on that instance.
    pub fn score(&self, instance: &str, variant: &str) -> Option<f64> {
        let cell = self.cell(instance, variant)?;
        if self.has_gaps() {
            return cell.avg_gap;
        }
        let reference = self
            .cells
            .iter()
            .filter(|c| c.instance == instance)
            .map(|c| c.best_cost)
            .min()? as f64;
        gap(cell.avg_cost, reference).ok()
    }

    /// `(baseline score, variant score)` for instances present in both.
    pub fn paired_scores(&self, baseline: &str, variant: &str) -> Vec<(f64, f64)> {
        self.instances()
            .into_iter()
            .filter_map(|i| Some((self.score(i, baseline)?, self.score(i, variant)?)))
            .collect()
    }

    /// Mean score per variant over the instances selected by `keep`.
    pub fn grouped_scores(&self, keep: impl Fn(&CellSummary) -> bool) -> Vec<(String, f64, usize)> {
        self.variants()
            .into_iter()
            .filter_map(|v| {
                let scores: Vec<f64> = self
                    .cells
                    .iter()
                    .filter(|c| c.variant == v && keep(c))
                    .filter_map(|c| self.score(&c.instance, v))
                    .collect();
                (!scores.is_empty()).then(|| (v.to_string(), mean(scores.iter().copied()), scores.len()))
            })
            .collect()
    }
}

struct Prepared {
    inst: Arc<Instance>,
    start: Solution,
    build_s: f64,
}

/// Runs every (instance, variant, run) combination. Seeds follow
/// [`ExperimentPlan::seed_of`]; runs execute in parallel up to the worker
/// cap. Failures are recorded in the table, not raised.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ResultTable, InvalidArgument> {
    plan.validate()?;
    let mut bks = BksRegistry::bundled();
    if let Some(path) = &plan.bks_file {
        let text = std::fs::read_to_string(path).map_err(|e| InvalidArgument(format!("{}: {e}", path.display())))?;
        bks.extend(BksRegistry::parse(&text).map_err(|e| InvalidArgument(e.to_string()))?);
    }
    let mut failures = Vec::new();

    let mut models: Vec<Option<Arc<SelectorModel<f32>>>> = Vec::new();
    let mut usable = Vec::new();
    for v in &plan.variants {
        let mut model = None;
        let mut ok = true;
        if let Some(cfg) = v.guidance_config(1) {
            if let SelectorKind::Gnn { weights } = &cfg.selector {
                match load_weights::<f32>(weights) {
                    Ok(m) => model = Some(Arc::new(m)),
                    Err(e) => {
                        ok = false;
                        failures.push(Failure {
                            instance: "*".into(),
                            variant: Some(v.name.clone()),
                            message: format!("{}: {e}", weights.display()),
                        });
                    }
                }
            }
        }
        models.push(model);
        usable.push(ok);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| InvalidArgument(format!("thread pool: {e}")))?;

    let prepared: Vec<Result<Prepared, Failure>> = pool.install(|| {
        plan.instances
            .par_iter()
            .map(|src| {
                let inst = match src {
                    InstanceSource::Loaded(i) => Arc::clone(i),
                    InstanceSource::Path(p) => Instance::read(p).map(Arc::new).map_err(|e| Failure {
                        instance: p.display().to_string(),
                        variant: None,
                        message: e.to_string(),
                    })?,
                };
                let t = Instant::now();
                let start = plan.constructor.build(&inst);
                Ok(Prepared {
                    build_s: t.elapsed().as_secs_f64(),
                    inst,
                    start,
                })
            })
            .collect()
    });
    let mut ready = Vec::new();
    for p in prepared {
        match p {
            Ok(p) => ready.push(p),
            Err(f) => failures.push(f),
        }
    }

    let tasks: Vec<(usize, usize, u32)> = (0..ready.len())
        .flat_map(|i| (0..plan.variants.len()).map(move |v| (i, v)))
        .filter(|&(_, v)| usable[v])
        .flat_map(|(i, v)| (1..=plan.runs).map(move |r| (i, v, r)))
        .collect();

    let outcomes: Vec<Result<RunRecord, Failure>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, v, run)| {
                let p = &ready[i];
                let variant = &plan.variants[v];
                let fail = |message: String| Failure {
                    instance: p.inst.name().to_string(),
                    variant: Some(variant.name.clone()),
                    message,
                };
                let guidance = match variant.guidance_config(p.inst.num_customers()) {
                    None => None,
                    Some(cfg) => Some(
                        match &models[v] {
                            Some(m) => Guidance::with_model(cfg, Arc::clone(m)),
                            None => Guidance::new(cfg),
                        }
                        .map_err(|e| fail(e.to_string()))?,
                    ),
                };
                let seed = ExperimentPlan::seed_of(run);
                let cfg = LnsConfig {
                    max_iterations: plan.iterations,
                    time_limit: plan.time_limit,
                    repair: plan.repair,
                    seed,
                    ..LnsConfig::default()
                };
                let (best, trace) = run_lns(&p.inst, &p.start, &cfg, guidance.as_ref());
                let violations = validate(&p.inst, &best);
                if !violations.is_empty() {
                    return Err(fail(format!("infeasible result: {violations:?}")));
                }
                Ok(RunRecord {
                    instance: p.inst.name().to_string(),
                    variant: variant.name.clone(),
                    run,
                    seed,
                    cost: best.cost(),
                    gap: bks
                        .get(p.inst.name())
                        .and_then(|b| gap(best.cost() as f64, b as f64).ok()),
                    time_s: p.build_s + trace.elapsed.as_secs_f64(),
                    customers: p.inst.num_customers(),
                    depot_mode: p.inst.depot_mode(),
                })
            })
            .collect()
    });

    let mut records = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        match o {
            Ok(r) => records.push(r),
            Err(f) => failures.push(f),
        }
    }
    Ok(ResultTable::from_records(records, failures))
}
