//! Subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use sketchbench_core::agm::{self, random_workload, AgmProtocol};
use sketchbench_core::lbgraph::{self, Condition, Layout, LbGraphSpec};
use sketchbench_core::mincut;
use sketchbench_core::overlap::{self, InstanceFile, OverlapInstance};
use sketchbench_core::protocols;
use sketchbench_core::reduction::{
    self, build_context, ContextOptions, FamilySource, ReductionContext,
};
use sketchbench_core::setfam::{
    self, choose_partition, common_block, message_partitions, pigeonhole_floor_holds,
    sample_family, verify_record, PartitionContext, SetFamily, DEFAULT_EPSILON,
};
use sketchbench_core::{MultiGraph, SketchProtocol};

use crate::report::{Outcome, Tally};

pub struct RunContext {
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl RunContext {
    /// Artifact path `<stem><suffix>`, with the stem taken from `explicit`,
    /// else from `--out` without its extension, else `fallback`.
    fn artifact(&self, explicit: &Option<PathBuf>, fallback: &str, suffix: &str) -> PathBuf {
        let stem = explicit.clone().unwrap_or_else(|| match &self.out {
            Some(out) => out.with_extension(""),
            None => PathBuf::from(fallback),
        });
        let mut s = stem.into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(untagged)]
pub enum Command {
    /// Generate a random member of the lower-bound family.
    GenLb(GenLb),
    /// Check "k-edge connected iff C1" over many family members.
    VerifyLb(VerifyLb),
    /// Exact k-edge connectivity of a graph file.
    Kconn(Kconn),
    /// Compare AGM sketch decisions with the exact oracle.
    AgmRun(AgmRun),
    /// Sample a bounded-intersection set family.
    SampleFamily(SampleFamily),
    /// Find a partition of W and indistinguishable separated pairs.
    ChoosePartition(ChoosePartition),
    /// Run a unique-overlap protocol on one instance.
    OverlapSolve(OverlapSolve),
    /// Run a unique-overlap protocol on every valid instance.
    OverlapEnum(OverlapEnum),
    /// Search a unique-overlap protocol for a fooling pair of instances.
    OverlapAttack(OverlapAttack),
    /// Three-party simulation of a sketching protocol, end to end.
    Reduce(Reduce),
    /// Compare simulated and directly executed message lists.
    VerifyFidelity(VerifyFidelity),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenLb(_) => "gen-lb",
            Command::VerifyLb(_) => "verify-lb",
            Command::Kconn(_) => "kconn",
            Command::AgmRun(_) => "agm-run",
            Command::SampleFamily(_) => "sample-family",
            Command::ChoosePartition(_) => "choose-partition",
            Command::OverlapSolve(_) => "overlap-solve",
            Command::OverlapEnum(_) => "overlap-enum",
            Command::OverlapAttack(_) => "overlap-attack",
            Command::Reduce(_) => "reduce",
            Command::VerifyFidelity(_) => "verify-fidelity",
        }
    }

    pub fn parameters(&self) -> Result<Value> {
        Ok(serde_json::to_value(self)?)
    }

    pub fn execute(&self, ctx: &RunContext) -> Result<Outcome> {
        match self {
            Command::GenLb(a) => gen_lb(a, ctx),
            Command::VerifyLb(a) => verify_lb(a, ctx),
            Command::Kconn(a) => kconn(a),
            Command::AgmRun(a) => agm_run(a, ctx),
            Command::SampleFamily(a) => sample_family_cmd(a, ctx),
            Command::ChoosePartition(a) => choose_partition_cmd(a, ctx),
            Command::OverlapSolve(a) => overlap_solve(a),
            Command::OverlapEnum(a) => overlap_enum(a),
            Command::OverlapAttack(a) => overlap_attack(a),
            Command::Reduce(a) => reduce(a, ctx),
            Command::VerifyFidelity(a) => verify_fidelity(a),
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn sketch_protocol(name: &str, n: usize, k: usize) -> Result<Box<dyn SketchProtocol>> {
    protocols::by_name(name, n, k).ok_or_else(|| {
        anyhow!("unknown protocol {name:?}; expected full, constant, min-degree, parity or hash:<bits>")
    })
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionArg {
    C0,
    C1,
}

#[derive(Debug, Args, Serialize)]
pub struct GenLb {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Redraw until the instance has this condition.
    #[arg(long)]
    condition: Option<ConditionArg>,
    /// Path prefix for `<stem>.spec.json` and `<stem>.graph`.
    #[arg(long)]
    stem: Option<PathBuf>,
}

fn gen_lb(a: &GenLb, ctx: &RunContext) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let wanted = a.condition.map(|c| match c {
        ConditionArg::C0 => Condition::C0,
        ConditionArg::C1 => Condition::C1,
    });
    let mut spec = lbgraph::random_spec(a.n, a.k, &mut rng)?;
    let mut draws = 1;
    while wanted.is_some_and(|c| spec.condition() != c) {
        if draws == 10_000 {
            bail!("no instance with the requested condition after {draws} draws");
        }
        spec = lbgraph::random_spec(a.n, a.k, &mut rng)?;
        draws += 1;
    }
    let (graph, _) = spec.build()?;
    let holds = lbgraph::verify_lemma_lb(&spec)?;
    let fallback = format!("lb-n{}-k{}-s{}", a.n, a.k, ctx.seed);
    let spec_path = ctx.artifact(&a.stem, &fallback, ".spec.json");
    let graph_path = ctx.artifact(&a.stem, &fallback, ".graph");
    write_json(&spec_path, &spec)?;
    fs::write(&graph_path, graph.to_text()).with_context(|| format!("writing {}", graph_path.display()))?;
    let mut o = Outcome::new(json!({
        "condition": format!("{:?}", spec.condition()),
        "sigma": spec.sigma,
        "edges": graph.edge_multiset_size(),
        "draws": draws,
    }))?;
    o.check("equivalence", Tally::single(holds))
        .artifact(spec_path)
        .artifact(graph_path);
    Ok(o)
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// Every split of W times every σ-neighborhood.
    Exhaustive,
    /// Independent random members.
    Random,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyLb {
    #[arg(long, required_unless_present = "spec")]
    n: Option<usize>,
    #[arg(long, required_unless_present = "spec")]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "random")]
    sweep: SweepKind,
    #[arg(long, default_value_t = 500)]
    samples: usize,
    /// Check a single spec file instead of sweeping.
    #[arg(long, conflicts_with_all = ["n", "k"])]
    spec: Option<PathBuf>,
}

fn verify_lb(a: &VerifyLb, ctx: &RunContext) -> Result<Outcome> {
    let specs: Vec<LbGraphSpec> = match (&a.spec, a.n, a.k) {
        (Some(path), _, _) => vec![read_json(path)?],
        (None, Some(n), Some(k)) => match a.sweep {
            SweepKind::Exhaustive => lbgraph::exhaustive_specs(n, k, ctx.seed)?,
            SweepKind::Random => lbgraph::random_specs(n, k, a.samples, ctx.seed)?,
        },
        _ => bail!("--n and --k are required without --spec"),
    };
    let sweep = lbgraph::sweep_equivalence(&specs)?;
    let mut o = Outcome::new(&sweep)?;
    o.check("equivalence", Tally::of(sweep.held, sweep.checked));
    if let Some(p) = &a.spec {
        o.input(p);
    }
    Ok(o)
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Connected,
    NotConnected,
}

#[derive(Debug, Args, Serialize)]
pub struct Kconn {
    /// Graph in the `n <count>` / `u v m` text format.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    k: u64,
    /// Assert the outcome.
    #[arg(long, value_enum)]
    expect: Option<Expectation>,
}

fn read_graph(path: &Path) -> Result<MultiGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    MultiGraph::from_text(&text).with_context(|| format!("parsing {}", path.display()))
}

fn kconn(a: &Kconn) -> Result<Outcome> {
    let g = read_graph(&a.graph)?;
    let cut = mincut::global_min_cut(&g)?;
    let connected = cut.value >= a.k;
    let mut o = Outcome::new(json!({
        "n": g.node_count(),
        "min_cut": cut.value,
        "side": cut.side,
        "k_edge_connected": connected,
    }))?;
    o.input(&a.graph);
    if let Some(e) = a.expect {
        o.check(
            "expectation",
            Tally::single(connected == matches!(e, Expectation::Connected)),
        );
    }
    Ok(o)
}

#[derive(Debug, Args, Serialize)]
pub struct AgmRun {
    /// Number of random workload graphs.
    #[arg(long, default_value_t = 200)]
    graphs: usize,
    #[arg(long, default_value_t = 64)]
    max_n: usize,
    /// `k` is drawn uniformly from `1..=max_k` per graph.
    #[arg(long, default_value_t = 3)]
    max_k: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Minimum fraction of decisions that must match the oracle.
    #[arg(long, default_value_t = 0.95)]
    min_agreement: f64,
    /// Run on one graph file instead (requires --k).
    #[arg(long, requires = "k")]
    graph: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
}

fn agm_run(a: &AgmRun, ctx: &RunContext) -> Result<Outcome> {
    if !(a.delta > 0.0 && a.delta < 0.5) {
        bail!("--delta must lie in (0, 0.5)");
    }
    let graphs: Vec<(MultiGraph, usize)> = match &a.graph {
        Some(path) => vec![(read_graph(path)?, a.k.expect("clap enforces --k"))],
        None => {
            if a.max_n < 4 || a.max_k < 1 {
                bail!("need --max-n >= 4 and --max-k >= 1");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            (0..a.graphs)
                .map(|_| {
                    let k = rand::Rng::gen_range(&mut rng, 1..=a.max_k);
                    (random_workload(&mut rng, a.max_n, k), k)
                })
                .collect()
        }
    };
    let r = agm::agreement(&graphs, a.delta, ctx.seed)?;
    let max_budget = graphs
        .iter()
        .map(|(g, k)| AgmProtocol::new(g.node_count(), *k, a.delta).config.budget_bits())
        .max()
        .unwrap_or(0);
    let mut o = Outcome::new(json!({
        "runs": r.runs,
        "agreed": r.agreed,
        "agreement_rate": r.rate(),
        "oracle_connected": r.oracle_connected,
        "max_sketch_bits": r.max_sketch_bits,
        "max_budget_bits": max_budget,
    }))?;
    o.check("agreement-rate", Tally::single(r.rate() >= a.min_agreement))
        .check("budget", Tally::of(r.within_budget, r.runs));
    if let Some(p) = &a.graph {
        o.input(p);
    }
    Ok(o)
}

#[derive(Debug, Args, Serialize)]
pub struct SampleFamily {
    /// Ground set is W of the layout on this many nodes.
    #[arg(long)]
    n: usize,
    /// Member size.
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long)]
    target: usize,
    #[arg(long, default_value_t = 100_000)]
    max_attempts: usize,
    /// Where to write the family JSON.
    #[arg(long)]
    family_out: Option<PathBuf>,
}

fn sample_family_cmd(a: &SampleFamily, ctx: &RunContext) -> Result<Outcome> {
    let layout = Layout::new(a.n)?;
    let w: Vec<usize> = layout.w_nodes().collect();
    let family = sample_family(&w, a.d, a.epsilon, a.target, ctx.seed, a.max_attempts)?;
    let ok = family.verify().is_ok();
    let path = ctx.artifact(&a.family_out, &format!("family-n{}-d{}", a.n, a.d), "");
    let path = if a.family_out.is_some() { path } else { path.with_extension("family.json") };
    write_json(&path, &family)?;
    let mut o = Outcome::new(json!({
        "members": family.len(),
        "intersection_bound": family.intersection_bound(),
        "max_pairwise_overlap": family.max_pairwise_overlap(),
    }))?;
    o.check("pairwise", Tally::single(ok)).artifact(path);
    Ok(o)
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    /// Every (2k-1)-subset of W.
    Complete,
    /// A bounded-intersection sample.
    Sampled,
}

#[derive(Debug, Args, Serialize)]
pub struct ChoosePartition {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Sketching protocol: full, constant, min-degree, parity, hash:<bits>.
    #[arg(long, default_value = "min-degree")]
    protocol: String,
    #[arg(long, default_value_t = 16)]
    trials: usize,
    #[arg(long, value_enum, default_value = "complete")]
    family: FamilyArg,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Target size of a sampled family.
    #[arg(long, default_value_t = 32)]
    target: usize,
    /// Where to write the partition context JSON.
    #[arg(long)]
    context_out: Option<PathBuf>,
}

fn choose_partition_cmd(a: &ChoosePartition, ctx: &RunContext) -> Result<Outcome> {
    let layout = Layout::new(a.n)?;
    let w: Vec<usize> = layout.w_nodes().collect();
    let d = 2 * a.k - 1;
    let family: SetFamily = match a.family {
        FamilyArg::Complete => SetFamily::complete(&w, d),
        FamilyArg::Sampled => sample_family(&w, d, a.epsilon, a.target, ctx.seed, 100_000)?,
    };
    let protocol = sketch_protocol(&a.protocol, a.n, a.k)?;
    let choice = match choose_partition(&protocol, &family, &layout, a.k, a.trials, ctx.seed) {
        Ok(c) => c,
        Err(setfam::SetFamError::NoGoodPartition { trials }) => {
            let mut o = Outcome::new(json!({ "good_nodes": 0, "trials": trials }))?;
            o.check("family", Tally::single(family.verify().is_ok()));
            return Ok(o);
        }
        Err(e) => return Err(e.into()),
    };
    let verified = choice
        .good
        .values()
        .filter(|r| verify_record(&protocol, r, &choice.a, &choice.b, &layout, a.k).is_ok())
        .count();
    let mut floor_ok = 0;
    for v in layout.v_nodes() {
        let parts = message_partitions(&protocol, v, &family, &choice.a, &choice.b, &layout, a.k)?;
        let common = common_block(&parts, &family, &choice.a, &choice.b);
        floor_ok += usize::from(pigeonhole_floor_holds(common.len(), family.len(), protocol.max_bits()));
    }
    let export = PartitionContext::new(a.n, a.k, protocol.name(), family.clone(), &choice);
    let path = ctx.artifact(&a.context_out, &format!("partition-n{}-k{}", a.n, a.k), "");
    let path = if a.context_out.is_some() { path } else { path.with_extension("partition.json") };
    write_json(&path, &export)?;
    let mut o = Outcome::new(json!({
        "good_nodes": choice.good.len(),
        "trial": choice.trial,
        "good_per_trial": choice.good_per_trial,
        "a": choice.a,
        "b": choice.b,
        "family_size": family.len(),
    }))?;
    o.check("family", Tally::single(family.verify().is_ok()))
        .check("records", Tally::of(verified, choice.good.len()))
        .check("pigeonhole", Tally::of(floor_ok, layout.v_count))
        .artifact(path);
    Ok(o)
}

#[derive(Debug, Args, Serialize)]
pub struct OverlapSolve {
    /// Instance JSON `{m, s, X, Y}`.
    #[arg(long)]
    instance: PathBuf,
    /// appb, full, or prefix:<keep>.
    #[arg(long, default_value = "appb")]
    protocol: String,
}

fn read_instance(path: &Path) -> Result<OverlapInstance> {
    let file: InstanceFile = read_json(path)?;
    Ok(file.validate()?)
}

fn overlap_solve(a: &OverlapSolve) -> Result<Outcome> {
    let inst = read_instance(&a.instance)?;
    let p = overlap::protocol_by_name(&a.protocol, inst.m(), inst.s)?;
    let got = overlap::run(p.as_ref(), &inst)?;
    let expected = inst.answer();
    let mut o = Outcome::new(json!({
        "sigma": inst.sigma,
        "answer": got,
        "expected": expected,
        "alice_message": p.alice_encode(&inst.x),
        "bob_message": p.bob_encode(&inst.y),
    }))?;
    o.check("correct", Tally::single(got == expected)).input(&a.instance);
    Ok(o)
}

#[derive(Debug, Args, Serialize)]
pub struct OverlapEnum {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value = "appb")]
    protocol: String,
    /// Also write every valid instance, one JSON object per line.
    #[arg(long)]
    instances_out: Option<PathBuf>,
}

fn overlap_enum(a: &OverlapEnum) -> Result<Outcome> {
    let p = overlap::protocol_by_name(&a.protocol, a.m, a.s)?;
    let r = overlap::sweep(p.as_ref(), a.m, a.s);
    let mut o = Outcome::new(&r)?;
    o.check("correct", Tally::of(r.correct, r.instances))
        .check("message-bits", Tally::single(r.max_message_bits <= p.max_bits()));
    if let Some(path) = &a.instances_out {
        let mut text = String::new();
        for inst in overlap::valid_instances(a.m, a.s) {
            text += &serde_json::to_string(&inst.to_file())?;
            text.push('\n');
        }
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        o.artifact(path.clone());
    }
    Ok(o)
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackExpectation {
    None,
    Found,
}

#[derive(Debug, Args, Serialize)]
pub struct OverlapAttack {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value = "appb")]
    protocol: String,
    /// Assert whether a counterexample exists.
    #[arg(long, value_enum)]
    expect: Option<AttackExpectation>,
}

fn overlap_attack(a: &OverlapAttack) -> Result<Outcome> {
    let p = overlap::protocol_by_name(&a.protocol, a.m, a.s)?;
    let ce = overlap::attack(p.as_ref(), a.m, a.s);
    let mut o = Outcome::new(json!({
        "summary": if ce.is_some() { "counterexample found" } else { "no counterexample" },
        "counterexample": ce,
    }))?;
    if let Some(ce) = &ce {
        o.check("replay", Tally::single(ce.replay(p.as_ref())));
    }
    if let Some(e) = a.expect {
        o.check(
            "expectation",
            Tally::single(ce.is_some() == matches!(e, AttackExpectation::Found)),
        );
    }
    Ok(o)
}

#[derive(Debug, Args, Serialize)]
pub struct Reduce {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    s: usize,
    #[arg(long)]
    k: usize,
    /// Sketching protocol: full, constant, min-degree, parity, hash:<bits>.
    #[arg(long, default_value = "min-degree")]
    protocol: String,
    #[arg(long, default_value_t = 16)]
    trials: usize,
    /// Impose fixed pairs instead of searching for them.
    #[arg(long)]
    forced: bool,
    /// Run one instance instead of all valid ones.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Where to write the reduction context JSON.
    #[arg(long)]
    context_out: Option<PathBuf>,
}

fn instances_for(path: &Option<PathBuf>, m: usize, s: usize) -> Result<Vec<OverlapInstance>> {
    match path {
        Some(p) => {
            let inst = read_instance(p)?;
            if inst.m() != m || inst.s != s {
                bail!("instance has (m, s) = ({}, {}), expected ({m}, {s})", inst.m(), inst.s);
            }
            Ok(vec![inst])
        }
        None => Ok(overlap::valid_instances(m, s)),
    }
}

fn reduce(a: &Reduce, ctx: &RunContext) -> Result<Outcome> {
    let n = reduction::reduction_n(a.m);
    let protocol = sketch_protocol(&a.protocol, n, a.k)?;
    let rctx = if a.forced {
        ReductionContext::forced(&protocol, a.m, a.s, a.k)?
    } else {
        let options = ContextOptions {
            family: FamilySource::Complete,
            trials: a.trials,
        };
        build_context(&protocol, a.m, a.s, a.k, ctx.seed, &options)?
    };
    let instances = instances_for(&a.instance, a.m, a.s)?;
    let sweep = reduction::sweep(&instances, &rctx, &protocol)?;
    let path = ctx.artifact(&a.context_out, &format!("reduction-m{}-s{}-k{}", a.m, a.s, a.k), "");
    let path = if a.context_out.is_some() { path } else { path.with_extension("context.json") };
    write_json(&path, &rctx)?;
    let mut o = Outcome::new(json!({
        "n": n,
        "forced": rctx.forced,
        "coordinates": rctx.coordinates,
        "sweep": sweep,
    }))?;
    o.check("fidelity", Tally::of(sweep.fidelity_ok, sweep.instances))
        .check("compat", Tally::of(sweep.compat_ok, sweep.instances))
        .check("communication", Tally::of(sweep.communication_ok, sweep.instances))
        .artifact(path);
    if let Some(p) = &a.instance {
        o.input(p);
    }
    Ok(o)
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyFidelity {
    /// Reduction context JSON written by `reduce`.
    #[arg(long)]
    context: PathBuf,
    /// Check one instance instead of all valid ones.
    #[arg(long)]
    instance: Option<PathBuf>,
}

fn verify_fidelity(a: &VerifyFidelity) -> Result<Outcome> {
    let rctx: ReductionContext = read_json(&a.context)?;
    let protocol = sketch_protocol(&rctx.partition.protocol, rctx.n, rctx.k)?;
    let instances = instances_for(&a.instance, rctx.m, rctx.s)?;
    let mut ok = 0;
    let mut first = None;
    for inst in &instances {
        let f = reduction::verify_fidelity(inst, &rctx, &protocol)?;
        if f.identical {
            ok += 1;
        } else if first.is_none() {
            first = Some(json!({
                "X": inst.x,
                "Y": inst.y,
                "node": f.first_mismatch,
            }));
        }
    }
    let mut o = Outcome::new(json!({
        "instances": instances.len(),
        "identical": ok,
        "forced": rctx.forced,
        "first_mismatch": first,
    }))?;
    o.check("fidelity", Tally::of(ok, instances.len())).input(&a.context);
    if let Some(p) = &a.instance {
        o.input(p);
    }
    Ok(o)
}
