use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use marklns::bench::{
    compare, compare_all, emit_report, expand_instances, read_results_csv, run_experiment, ExperimentPlan,
    InstanceSource, ResultTable, Variant, VariantKind, WilcoxonResult,
};
use marklns::guidance::{gnn_marks, Preset, RemarkPolicy};
use marklns::selector::{build_graph_with, forward, heuristic_selector, load_weights, MarkSet, SparseGraph};
use marklns::solution::{gap, SolutionReport};
use marklns::{
    generate_instance, run_lns, BksRegistry, Constructor, DepotMode, GeneratorSpec, Guidance, Instance, LnsConfig,
    SelectorKind,
};

#[derive(Parser)]
#[command(
    name = "marklns",
    version,
    about = "CVRP large neighbourhood search with a learned node selector"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance.
    Solve(SolveArgs),
    /// Run an experiment plan.
    Bench(BenchArgs),
    /// Wilcoxon test between two variants of existing results.csv files.
    Stats(StatsArgs),
    /// Print the marks a selector assigns to an instance.
    InspectMarks(InspectArgs),
    /// Write a random instance in CVRPLIB format.
    Generate(GenerateArgs),
}

#[derive(Args, Clone)]
struct GuideArgs {
    /// Guidance preset: hgs-x, filo-x or filo-b.
    #[arg(long, default_value = "hgs-x")]
    preset: String,
    /// Selector weight file; implies the network selector.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// gnn, heuristic or null. Defaults to gnn with --weights, else heuristic.
    #[arg(long)]
    selector: Option<String>,
    /// Edge fraction marked by the heuristic selector.
    #[arg(long, default_value_t = 0.5)]
    quantile: f64,
    /// Edge probability threshold t (overrides the preset).
    #[arg(long)]
    threshold: Option<f64>,
    /// Aspiration probability p (overrides the preset).
    #[arg(long)]
    aspiration: Option<f64>,
    /// once, new-best or every:K.
    #[arg(long, default_value = "once")]
    remark: String,
}

impl GuideArgs {
    fn variant(&self, name: &str) -> Result<Variant> {
        let selector = match (self.selector.as_deref(), &self.weights) {
            (Some("null"), _) => SelectorKind::Null,
            (Some("heuristic"), _) | (None, None) => SelectorKind::Heuristic {
                quantile: self.quantile,
            },
            (Some("gnn") | None, Some(w)) => SelectorKind::Gnn { weights: w.clone() },
            (Some("gnn"), None) => bail!("--selector gnn needs --weights"),
            (Some(other), _) => bail!("unknown selector {other}"),
        };
        Ok(Variant {
            name: name.into(),
            kind: VariantKind::Guided {
                selector,
                preset: self.preset.parse::<Preset>()?,
                threshold: self.threshold,
                aspiration: self.aspiration,
                remark_policy: self.remark.parse::<RemarkPolicy>()?,
            },
        })
    }
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    /// baseline or guided.
    #[arg(long, default_value = "baseline")]
    variant: String,
    #[command(flatten)]
    guide: GuideArgs,
    #[arg(long, default_value_t = 100_000)]
    iterations: u64,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// clarke-wright or nearest-neighbor.
    #[arg(long, default_value = "clarke-wright")]
    constructor: String,
    /// Directory for solution.sol, solution.json and trace.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Plan file with key = value lines; flags below override it.
    plan: Option<PathBuf>,
    /// Instance directory or glob; repeatable.
    #[arg(long)]
    instances: Vec<String>,
    /// baseline, guided, or a full spec such as "g2 selector=heuristic quantile=0.3"; repeatable.
    #[arg(long)]
    variant: Vec<String>,
    #[command(flatten)]
    guide: GuideArgs,
    #[arg(long)]
    runs: Option<u32>,
    #[arg(long)]
    iterations: Option<u64>,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    constructor: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Extra best-known-cost table.
    #[arg(long)]
    bks: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// One or more results.csv files.
    #[arg(required = true)]
    results: Vec<PathBuf>,
    #[arg(long, default_value = "baseline")]
    baseline: String,
    #[arg(long, default_value = "guided")]
    variant: String,
    /// Write the test as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    instance: PathBuf,
    #[command(flatten)]
    guide: GuideArgs,
    #[arg(long, default_value = "clarke-wright")]
    constructor: String,
    /// Write per-edge probabilities (network selector) as CSV.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Write the mark set as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    customers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// central, edge or random.
    #[arg(long, default_value = "central")]
    depot: String,
    #[arg(long, default_value_t = 1)]
    demand_min: u64,
    #[arg(long, default_value_t = 10)]
    demand_max: u64,
    #[arg(long, default_value_t = 100)]
    capacity: u64,
    #[arg(long)]
    out: PathBuf,
}

fn seconds(s: Option<f64>) -> Result<Option<Duration>> {
    match s {
        None => Ok(None),
        Some(v) if v.is_finite() && v > 0.0 => Ok(Some(Duration::from_secs_f64(v))),
        Some(v) => bail!("time limit must be positive, got {v}"),
    }
}

fn read_instance(path: &Path) -> Result<Instance> {
    Instance::read(path).with_context(|| format!("reading {}", path.display()))
}

fn solve(a: SolveArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let constructor: Constructor = a.constructor.parse()?;
    let clock = Instant::now();
    let start = constructor.build(&inst);
    let guidance = match a.variant.as_str() {
        "baseline" => None,
        "guided" => {
            let cfg = a
                .guide
                .variant("guided")?
                .guidance_config(inst.num_customers())
                .expect("guided variant");
            Some(Guidance::new(cfg)?)
        }
        other => bail!("unknown variant {other}; use baseline or guided"),
    };
    let cfg = LnsConfig {
        max_iterations: a.iterations,
        time_limit: seconds(a.time_limit)?,
        seed: a.seed,
        ..LnsConfig::default()
    };
    let (best, trace) = run_lns(&inst, &start, &cfg, guidance.as_ref());
    let wall = clock.elapsed().as_secs_f64();

    let bks = BksRegistry::bundled().get(inst.name());
    let mut report = SolutionReport::new(&inst, &best);
    report.gap = bks.and_then(|b| gap(best.cost() as f64, b as f64).ok());
    report.seed = Some(a.seed);
    report.wall_time_s = Some(wall);

    println!("instance {}", inst.name());
    println!("start cost {}", start.cost());
    println!("best cost {}", best.cost());
    if let Some(g) = report.gap {
        println!("gap {g:.3}");
    }
    if let Some(m) = &trace.final_marks {
        println!("marked customers {}", m.len());
    }
    println!("routes {}", best.num_routes());
    println!("time {wall:.2}s");

    if let Some(dir) = a.out {
        std::fs::create_dir_all(&dir)?;
        best.write(dir.join("solution.sol"))?;
        std::fs::write(dir.join("solution.json"), serde_json::to_string_pretty(&report)?)?;
        std::fs::write(dir.join("trace.csv"), trace.to_csv())?;
    }
    Ok(())
}

fn bench(a: BenchArgs) -> Result<()> {
    let mut plan = match &a.plan {
        Some(p) => ExperimentPlan::read(p)?,
        None => ExperimentPlan::default(),
    };
    if !a.instances.is_empty() {
        plan.instances.clear();
        for pat in &a.instances {
            plan.instances
                .extend(expand_instances(pat)?.into_iter().map(InstanceSource::Path));
        }
    }
    if !a.variant.is_empty() {
        plan.variants = a
            .variant
            .iter()
            .map(|v| match v.as_str() {
                "guided" => a.guide.variant("guided"),
                spec => Ok(spec.parse::<Variant>()?),
            })
            .collect::<Result<_>>()?;
    }
    if let Some(r) = a.runs {
        plan.runs = r;
    }
    if let Some(i) = a.iterations {
        plan.iterations = i;
    }
    if a.time_limit.is_some() {
        plan.time_limit = seconds(a.time_limit)?;
    }
    if let Some(c) = &a.constructor {
        plan.constructor = c.parse()?;
    }
    if let Some(w) = a.workers {
        plan.workers = w;
    }
    if a.bks.is_some() {
        plan.bks_file = a.bks.clone();
    }
    if a.out.is_some() {
        plan.out_dir = a.out.clone();
    }
    if plan.instances.is_empty() {
        bail!("no instances given; use --instances or an instances line in the plan");
    }
    let out = plan.out_dir.clone().unwrap_or_else(|| PathBuf::from("bench-out"));
    let table = run_experiment(&plan)?;
    let tests = compare_all(&table, "baseline");
    let files = emit_report(&table, &tests, &out)?;
    print!("{}", std::fs::read_to_string(&files.summary_txt)?);
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    let mut records = Vec::new();
    for p in &a.results {
        records.extend(read_results_csv(p).with_context(|| format!("reading {}", p.display()))?);
    }
    let table = ResultTable::from_records(records, Vec::new());
    for v in [&a.baseline, &a.variant] {
        if !table.variants().contains(&v.as_str()) {
            bail!("variant {v} not found; have {:?}", table.variants());
        }
    }
    let test = compare(&table, &a.baseline, &a.variant);
    match &test.result {
        WilcoxonResult::Test(r) => println!(
            "{} vs {}: n = {}, W+ = {}, p = {:.5} ({:?}), {}",
            test.variant,
            test.baseline,
            r.n,
            r.w_plus,
            r.p_value,
            r.method,
            test.decision()
        ),
        WilcoxonResult::InsufficientData { nonzero } => {
            println!("{} non-zero differences: {}", nonzero, test.decision())
        }
    }
    if let Some(out) = a.out {
        std::fs::write(out, marklns::bench::report::stats_json(std::slice::from_ref(&test)))?;
    }
    Ok(())
}

fn inspect(a: InspectArgs) -> Result<()> {
    let inst = read_instance(&a.instance)?;
    let constructor: Constructor = a.constructor.parse()?;
    let s0 = constructor.build(&inst);
    let cfg = a
        .guide
        .variant("inspect")?
        .guidance_config(inst.num_customers())
        .expect("guided variant");
    cfg.validate()?;
    let marks: MarkSet = match &cfg.selector {
        SelectorKind::Gnn { weights } => {
            let model = Arc::new(load_weights::<f32>(weights)?);
            let guidance = Guidance::with_model(cfg.clone(), Arc::clone(&model))?;
            if let Some(path) = &a.edges {
                let g: SparseGraph<f32> = build_graph_with(&inst, &s0, &guidance.graph_options());
                let probs = forward(&model, &g)?.probs;
                let mut csv = String::from("from,to,kind,in_s0,prob\n");
                for e in 0..g.num_edges() {
                    csv.push_str(&format!(
                        "{},{},{:?},{},{}\n",
                        g.nodes[g.src[e]], g.nodes[g.dst[e]], g.edge_kind[e], g.s0_mask[e] as u8, probs[e]
                    ));
                }
                std::fs::write(path, csv)?;
            }
            gnn_marks(&model, &inst, &s0, cfg.threshold, &guidance.graph_options())?
        }
        SelectorKind::Heuristic { quantile } => heuristic_selector(&inst, &s0, *quantile)?,
        SelectorKind::Null => MarkSet::empty(inst.num_nodes(), marklns::selector::MarkSource::Null),
    };
    println!("instance {}", inst.name());
    println!("selector {:?}", marks.source());
    if let Some(t) = marks.threshold() {
        println!("threshold {t}");
    }
    println!("marked {} of {}", marks.len(), inst.num_customers());
    println!(
        "{}",
        marks
            .marked()
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    );
    if let Some(out) = a.out {
        std::fs::write(out, serde_json::to_string_pretty(&marks)?)?;
    }
    Ok(())
}

fn generate(a: GenerateArgs) -> Result<()> {
    let spec = GeneratorSpec {
        seed: a.seed,
        customers: a.customers,
        depot_mode: a.depot.parse::<DepotMode>()?,
        demand_min: a.demand_min,
        demand_max: a.demand_max,
        capacity: a.capacity,
    };
    let inst = generate_instance(&spec)?;
    std::fs::write(&a.out, inst.to_cvrplib())?;
    println!("{}", inst.name());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Stats(a) => stats(a),
        Command::InspectMarks(a) => inspect(a),
        Command::Generate(a) => generate(a),
    }
}
