//! Three-party simulation of a deterministic sketching protocol on a
//! unique-overlap instance.
//!
//! Coordinate `i` of the overlap instance is the `i`-th good node (by id) of
//! a chosen partition `W = A* ∪ B*`. Alice simulates the nodes of `A*`, Bob
//! those of `B*`, and Charlie everything else from the two supports and the
//! witness messages stored in the context. The messages the referee receives
//! are exactly those of the compatible lower-bound graph, which is
//! k-edge connected iff the instance answer is yes.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::lbgraph::{
    canonical_partition, isqrt, role_view, LbGraphError, LbGraphSpec, Layout, Restriction,
    DEFAULT_GAMMA,
};
use crate::mincut;
use crate::model::{
    encode_checked, execute, Advice, AdviceMap, Decision, ModelError, MultiGraph, NodeId,
    NodeView, SharedRandomness, SketchProtocol,
};
use crate::overlap::{unique_common, Answer, OverlapError, OverlapInstance, Property, TernaryVector};
use crate::setfam::{
    choose_partition, projection, role_message, sample_family, PartitionChoice,
    PartitionContext, PartitionRole, SeparatedPairRecord, SetFamError, SetFamily,
    WitnessMessages,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("only {found} good nodes, need {needed}")]
    NotEnoughGoodNodes { found: usize, needed: usize },
    #[error(transparent)]
    InvalidInstance(#[from] OverlapError),
    #[error("instance has (m, s) = ({m}, {s}), context was built for ({ctx_m}, {ctx_s})")]
    Coverage {
        m: usize,
        s: usize,
        ctx_m: usize,
        ctx_s: usize,
    },
    #[error(transparent)]
    SetFam(#[from] SetFamError),
    #[error(transparent)]
    LbGraph(#[from] LbGraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `2·⌈4m/3⌉`.
pub fn reduction_n(m: usize) -> usize {
    2 * (4 * m).div_ceil(3)
}

/// Candidate W-neighborhoods for the partition search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FamilySource {
    /// Every `(2k-1)`-subset of `W`.
    Complete,
    /// A bounded-intersection family drawn by [`sample_family`].
    Sampled {
        epsilon: f64,
        target: usize,
        max_attempts: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextOptions {
    pub family: FamilySource,
    pub trials: usize,
}

impl Default for ContextOptions {
    fn default() -> Self {
        Self {
            family: FamilySource::Complete,
            trials: 16,
        }
    }
}

/// Everything the three parties agree on before seeing the instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionContext {
    pub m: usize,
    pub s: usize,
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub family_source: Option<FamilySource>,
    /// Set when the pairs were imposed rather than found; their witness
    /// messages then need not be shared by both members of a pair.
    pub forced: bool,
    pub partition: PartitionContext,
    /// Node id of coordinate `i` at position `i - 1`.
    pub coordinates: Vec<NodeId>,
}

impl ReductionContext {
    pub fn layout(&self) -> Layout {
        Layout::new(self.n).expect("context was built on a valid layout")
    }

    pub fn a(&self) -> &BTreeSet<NodeId> {
        &self.partition.a
    }

    pub fn b(&self) -> &BTreeSet<NodeId> {
        &self.partition.b
    }

    /// Node simulating coordinate `i` (1-based).
    pub fn node_of(&self, i: usize) -> NodeId {
        self.coordinates[i - 1]
    }

    pub fn record(&self, i: usize) -> &SeparatedPairRecord {
        let node = self.node_of(i);
        let pos = self
            .partition
            .records
            .binary_search_by_key(&node, |r| r.node)
            .expect("every coordinate has a record");
        &self.partition.records[pos]
    }

    pub fn record_mut(&mut self, i: usize) -> &mut SeparatedPairRecord {
        let node = self.node_of(i);
        let pos = self
            .partition
            .records
            .binary_search_by_key(&node, |r| r.node)
            .expect("every coordinate has a record");
        &mut self.partition.records[pos]
    }

    /// Builds a context whose pairs are fixed up front: `A*, B*` split `W`
    /// in half, every node gets the same `S0` (first `k` of `A*`, first
    /// `k - 1` of `B*`) and `S1` (symmetric), and witness messages are the
    /// encodings of `S0`. Useful for protocols with no genuine pairs.
    pub fn forced<P: SketchProtocol + ?Sized>(
        protocol: &P,
        m: usize,
        s: usize,
        k: usize,
    ) -> Result<Self, ReductionError> {
        let n = reduction_n(m);
        let layout = check_parameters(m, s, k, n)?;
        let (a, b) = canonical_partition(&layout, layout.w_count / 2);
        if a.len() < k || b.len() < k {
            return Err(ReductionError::InvalidParameters(format!(
                "|W| = {} cannot be split into two sides of size >= {k}",
                layout.w_count
            )));
        }
        let first = |side: &BTreeSet<NodeId>, c: usize| side.iter().copied().take(c).collect::<Vec<_>>();
        let sorted = |mut v: Vec<NodeId>| {
            v.sort_unstable();
            v
        };
        let s0 = sorted([first(&a, k), first(&b, k - 1)].concat());
        let s1 = sorted([first(&a, k - 1), first(&b, k)].concat());
        let coordinates: Vec<NodeId> = layout.v_nodes().take(m).collect();
        let mut records = Vec::with_capacity(m);
        for &node in &coordinates {
            let msg = |role, set: &[NodeId]| role_message(protocol, &layout, node, role, set, k);
            let witness = WitnessMessages {
                sigma: msg(PartitionRole::Sigma, &s0)?,
                a_projection: msg(PartitionRole::AProjection, &projection(&s0, &a))?,
                b_projection: msg(PartitionRole::BProjection, &projection(&s0, &b))?,
            };
            records.push(SeparatedPairRecord {
                node,
                s0: s0.clone(),
                s1: s1.clone(),
                witness,
            });
        }
        let family = SetFamily {
            ground: layout.w_nodes().collect(),
            d: 2 * k - 1,
            epsilon: None,
            members: vec![s0.clone(), s1.clone()],
        };
        Ok(Self {
            m,
            s,
            k,
            n,
            seed: 0,
            family_source: None,
            forced: true,
            partition: PartitionContext {
                n,
                k,
                protocol: protocol.name(),
                a,
                b,
                family,
                records,
            },
            coordinates,
        })
    }
}

fn check_parameters(m: usize, s: usize, k: usize, n: usize) -> Result<Layout, ReductionError> {
    if m < 2 || s < 1 || s > m.div_ceil(2) {
        return Err(ReductionError::InvalidParameters(format!(
            "need m >= 2 and 1 <= s <= ⌈m/2⌉, got m = {m}, s = {s}"
        )));
    }
    let layout = Layout::new(n)?;
    if k < 2 || (k as f64) > DEFAULT_GAMMA * (n as f64).sqrt() + 1e-9 {
        return Err(ReductionError::InvalidParameters(format!(
            "k = {k} outside [2, {DEFAULT_GAMMA}·√{n}]"
        )));
    }
    if isqrt(n) < 2 * k {
        return Err(ReductionError::InvalidParameters(format!(
            "|W| = {} < 2k = {}",
            isqrt(n),
            2 * k
        )));
    }
    if layout.v_count < m {
        return Err(ReductionError::InvalidParameters(format!(
            "|V| = {} < m = {m}",
            layout.v_count
        )));
    }
    Ok(layout)
}

/// Chooses a partition, finds the pairs, and assigns the first `m` good
/// nodes to the coordinates.
pub fn build_context<P: SketchProtocol + ?Sized>(
    protocol: &P,
    m: usize,
    s: usize,
    k: usize,
    seed: u64,
    options: &ContextOptions,
) -> Result<ReductionContext, ReductionError> {
    let n = reduction_n(m);
    let layout = check_parameters(m, s, k, n)?;
    let w: Vec<NodeId> = layout.w_nodes().collect();
    let family = match &options.family {
        FamilySource::Complete => SetFamily::complete(&w, 2 * k - 1),
        FamilySource::Sampled {
            epsilon,
            target,
            max_attempts,
        } => sample_family(&w, 2 * k - 1, *epsilon, *target, seed, *max_attempts)?,
    };
    let choice: PartitionChoice =
        match choose_partition(protocol, &family, &layout, k, options.trials, seed) {
            Ok(c) => c,
            Err(SetFamError::NoGoodPartition { .. }) => {
                return Err(ReductionError::NotEnoughGoodNodes {
                    found: 0,
                    needed: m,
                })
            }
            Err(e) => return Err(e.into()),
        };
    if choice.good.len() < m {
        return Err(ReductionError::NotEnoughGoodNodes {
            found: choice.good.len(),
            needed: m,
        });
    }
    let coordinates: Vec<NodeId> = choice.good.keys().copied().take(m).collect();
    Ok(ReductionContext {
        m,
        s,
        k,
        n,
        seed,
        family_source: Some(options.family.clone()),
        forced: false,
        partition: PartitionContext::new(n, k, protocol.name(), family, &choice),
        coordinates,
    })
}

fn check_vector(v: &TernaryVector, ctx: &ReductionContext) -> Result<Vec<usize>, ReductionError> {
    let support = v.support();
    if v.len() != ctx.m || support.len() != ctx.s {
        return Err(ReductionError::Coverage {
            m: v.len(),
            s: support.len(),
            ctx_m: ctx.m,
            ctx_s: ctx.s,
        });
    }
    Ok(support)
}

/// W-neighborhood of coordinate `i` on one side, given that party's entry.
/// Alice: 0 → `S1`, 1 → `S0`. Bob: 0 → `S0`, 1 → `S1`.
fn side_neighbors(record: &SeparatedPairRecord, side: &BTreeSet<NodeId>, use_s1: bool) -> Vec<NodeId> {
    projection(if use_s1 { &record.s1 } else { &record.s0 }, side)
}

fn party_graph(
    ctx: &ReductionContext,
    v: &TernaryVector,
    side: &BTreeSet<NodeId>,
    hub: NodeId,
    use_s1_on: bool,
) -> MultiGraph {
    let mut g = MultiGraph::new(ctx.n);
    let add = |g: &mut MultiGraph, x, y| g.add_edge(x, y).expect("layout ids are valid");
    let members: Vec<NodeId> = side.iter().copied().collect();
    for (i, &x) in members.iter().enumerate() {
        for &y in &members[i + 1..] {
            add(&mut g, x, y);
        }
        add(&mut g, hub, x);
    }
    for i in v.support() {
        let entry = v.get(i).bit().expect("support entry");
        let node = ctx.node_of(i);
        for w in side_neighbors(ctx.record(i), side, entry == use_s1_on) {
            add(&mut g, node, w);
        }
    }
    g
}

fn encode_side<P: SketchProtocol + ?Sized>(
    protocol: &P,
    g: &MultiGraph,
    side: &BTreeSet<NodeId>,
    k: usize,
) -> Result<Vec<(NodeId, BitString)>, ReductionError> {
    side.iter()
        .map(|&w| {
            let view = NodeView::of(g, w, Advice::None, k)?;
            Ok((w, encode_checked(protocol, &view, &SharedRandomness::none())?))
        })
        .collect()
}

/// Alice's local graph: clique on `A*`, `u_A` joined to `A*`, and for each
/// `i ∈ supp(X)` the edges from `v_i` to `S1 ∩ A*` if `X_i = 0`, else to `S0 ∩ A*`.
pub fn alice_graph(x: &TernaryVector, ctx: &ReductionContext) -> MultiGraph {
    party_graph(ctx, x, ctx.a(), ctx.layout().u_a(), false)
}

/// Bob's local graph: clique on `B*`, `u_B` joined to `B*`, and for each
/// `j ∈ supp(Y)` the edges from `v_j` to `S0 ∩ B*` if `Y_j = 0`, else to `S1 ∩ B*`.
pub fn bob_graph(y: &TernaryVector, ctx: &ReductionContext) -> MultiGraph {
    party_graph(ctx, y, ctx.b(), ctx.layout().u_b(), true)
}

pub fn alice_messages<P: SketchProtocol + ?Sized>(
    x: &TernaryVector,
    ctx: &ReductionContext,
    protocol: &P,
) -> Result<Vec<(NodeId, BitString)>, ReductionError> {
    check_vector(x, ctx)?;
    encode_side(protocol, &alice_graph(x, ctx), ctx.a(), ctx.k)
}

pub fn bob_messages<P: SketchProtocol + ?Sized>(
    y: &TernaryVector,
    ctx: &ReductionContext,
    protocol: &P,
) -> Result<Vec<(NodeId, BitString)>, ReductionError> {
    check_vector(y, ctx)?;
    encode_side(protocol, &bob_graph(y, ctx), ctx.b(), ctx.k)
}

/// Charlie's share of the messages: `u_A`, `u_B`, and every V-node, from
/// the supports and the context alone.
pub fn charlie_messages<P: SketchProtocol + ?Sized>(
    supp_x: &[usize],
    supp_y: &[usize],
    ctx: &ReductionContext,
    protocol: &P,
) -> Result<Vec<(NodeId, BitString)>, ReductionError> {
    let sigma = unique_common(supp_x, supp_y).ok_or_else(|| OverlapError::InvalidInstance {
        property: Property::P2,
        detail: "supports do not meet in exactly one index".into(),
    })?;
    let layout = ctx.layout();
    let k = ctx.k;
    let none = SharedRandomness::none();
    let only_y: BTreeSet<NodeId> = supp_y
        .iter()
        .filter(|j| !supp_x.contains(j))
        .map(|&j| ctx.node_of(j))
        .collect();

    let mut out = Vec::with_capacity(layout.v_count + 2);
    let mut stored: BTreeMap<NodeId, BitString> = BTreeMap::new();
    stored.insert(ctx.node_of(sigma), ctx.record(sigma).witness.sigma.clone());
    for &i in supp_x.iter().filter(|&&i| i != sigma) {
        stored.insert(ctx.node_of(i), ctx.record(i).witness.a_projection.clone());
    }
    for &j in supp_y.iter().filter(|&&j| j != sigma) {
        stored.insert(ctx.node_of(j), ctx.record(j).witness.b_projection.clone());
    }
    for v in layout.v_nodes() {
        let msg = match stored.remove(&v) {
            Some(m) => m,
            None => encode_checked(protocol, &role_view(&layout, v, Advice::ARestricted, &[], k), &none)?,
        };
        out.push((v, msg));
    }

    let hub_view = |hub: NodeId, side: &BTreeSet<NodeId>, spokes: &mut dyn Iterator<Item = NodeId>| {
        let mut neighbors: BTreeMap<NodeId, u32> = side.iter().map(|&w| (w, 1)).collect();
        for v in spokes {
            neighbors.insert(v, k as u32);
        }
        NodeView {
            id: hub,
            neighbors,
            advice: Advice::None,
            n: ctx.n,
            k,
        }
    };
    let ua = hub_view(
        layout.u_a(),
        ctx.a(),
        &mut layout.v_nodes().filter(|v| !only_y.contains(v)),
    );
    let ub = hub_view(layout.u_b(), ctx.b(), &mut only_y.iter().copied());
    out.push((layout.u_a(), encode_checked(protocol, &ua, &none)?));
    out.push((layout.u_b(), encode_checked(protocol, &ub, &none)?));
    Ok(out)
}

/// Merges the three parties' messages into the referee's sorted list.
pub fn assemble(parts: [Vec<(NodeId, BitString)>; 3]) -> Vec<(NodeId, BitString)> {
    let mut all: Vec<_> = parts.into_iter().flatten().collect();
    all.sort_by_key(|(id, _)| *id);
    all
}

/// Charlie completes the message list and runs the referee; yes iff connected.
pub fn charlie_decide<P: SketchProtocol + ?Sized>(
    supp_x: &[usize],
    supp_y: &[usize],
    msgs_a: &[(NodeId, BitString)],
    msgs_b: &[(NodeId, BitString)],
    ctx: &ReductionContext,
    protocol: &P,
) -> Result<Answer, ReductionError> {
    let own = charlie_messages(supp_x, supp_y, ctx, protocol)?;
    let all = assemble([msgs_a.to_vec(), msgs_b.to_vec(), own]);
    let decision = protocol.decode(&all, &SharedRandomness::none())?;
    Ok(match decision {
        Decision::Connected => Answer::Yes,
        Decision::NotConnected => Answer::No,
    })
}

/// The three-party run end to end.
pub fn simulate<P: SketchProtocol + ?Sized>(
    instance: &OverlapInstance,
    ctx: &ReductionContext,
    protocol: &P,
) -> Result<Answer, ReductionError> {
    let ma = alice_messages(&instance.x, ctx, protocol)?;
    let mb = bob_messages(&instance.y, ctx, protocol)?;
    charlie_decide(&instance.x.support(), &instance.y.support(), &ma, &mb, ctx, protocol)
}

/// Lower-bound spec of the compatible graph.
pub fn compatible_spec(instance: &OverlapInstance, ctx: &ReductionContext) -> Result<LbGraphSpec, ReductionError> {
    check_vector(&instance.x, ctx)?;
    check_vector(&instance.y, ctx)?;
    let layout = ctx.layout();
    let sigma = instance.sigma;
    let mut restrictions = BTreeMap::new();
    let mut w_neighbors = BTreeMap::new();
    for v in layout.v_nodes() {
        restrictions.insert(v, Restriction::ARestricted);
    }
    let (sx, sy) = (instance.x.support(), instance.y.support());
    for &i in &sx {
        let x0 = instance.x.get(i).bit() == Some(false);
        let nb = side_neighbors(ctx.record(i), ctx.a(), x0);
        w_neighbors.insert(ctx.node_of(i), nb.into_iter().collect::<BTreeSet<_>>());
    }
    for &j in &sy {
        let y1 = instance.y.get(j).bit() == Some(true);
        let nb = side_neighbors(ctx.record(j), ctx.b(), y1);
        let node = ctx.node_of(j);
        w_neighbors.entry(node).or_insert_with(BTreeSet::new).extend(nb);
        if j != sigma {
            restrictions.insert(node, Restriction::BRestricted);
        }
    }
    restrictions.remove(&ctx.node_of(sigma));
    w_neighbors.retain(|_, nb: &mut BTreeSet<NodeId>| !nb.is_empty());
    Ok(LbGraphSpec {
        n: ctx.n,
        k: ctx.k,
        sigma: ctx.node_of(sigma),
        a: ctx.a().clone(),
        b: ctx.b().clone(),
        restrictions,
        w_neighbors,
        gamma: DEFAULT_GAMMA,
        allow_empty_b_restricted: true,
    })
}

pub fn build_compatible_graph(
    instance: &OverlapInstance,
    ctx: &ReductionContext,
) -> Result<(MultiGraph, AdviceMap), ReductionError> {
    Ok(compatible_spec(instance, ctx)?.build()?)
}

/// Result of comparing the simulated message list with direct execution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fidelity {
    pub identical: bool,
    /// Smallest node id whose messages differ.
    pub first_mismatch: Option<NodeId>,
}

pub fn verify_fidelity<P: SketchProtocol + ?Sized>(
    instance: &OverlapInstance,
    ctx: &ReductionContext,
    protocol: &P,
) -> Result<Fidelity, ReductionError> {
    let simulated = assemble([
        alice_messages(&instance.x, ctx, protocol)?,
        bob_messages(&instance.y, ctx, protocol)?,
        charlie_messages(&instance.x.support(), &instance.y.support(), ctx, protocol)?,
    ]);
    let (g, advice) = build_compatible_graph(instance, ctx)?;
    let direct = execute(protocol, &g, &advice, ctx.k, &SharedRandomness::none())?;
    let first_mismatch = simulated
        .iter()
        .zip(&direct.messages)
        .find(|(s, d)| s != d)
        .map(|(s, d)| s.0.min(d.0))
        .or_else(|| {
            (simulated.len() != direct.messages.len())
                .then(|| simulated.len().min(direct.messages.len()) + 1)
        });
    Ok(Fidelity {
        identical: first_mismatch.is_none(),
        first_mismatch,
    })
}

/// Bits Alice and Bob send for one instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Communication {
    pub alice_bits: usize,
    pub bob_bits: usize,
    pub w_count: usize,
    /// Longest single message among `W`.
    pub per_node_bits: usize,
    /// `⌊√n⌋ · L`.
    pub bound: usize,
}

impl Communication {
    pub fn total(&self) -> usize {
        self.alice_bits + self.bob_bits
    }

    pub fn within_bound(&self) -> bool {
        self.total() <= self.bound
    }
}

pub fn communication<P: SketchProtocol + ?Sized>(
    instance: &OverlapInstance,
    ctx: &ReductionContext,
    protocol: &P,
) -> Result<Communication, ReductionError> {
    let ma = alice_messages(&instance.x, ctx, protocol)?;
    let mb = bob_messages(&instance.y, ctx, protocol)?;
    let bits = |m: &[(NodeId, BitString)]| m.iter().map(|(_, b)| b.len()).sum::<usize>();
    let per_node = ma.iter().chain(&mb).map(|(_, b)| b.len()).max().unwrap_or(0);
    Ok(Communication {
        alice_bits: bits(&ma),
        bob_bits: bits(&mb),
        w_count: ma.len() + mb.len(),
        per_node_bits: per_node,
        bound: isqrt(ctx.n) * protocol.max_bits(),
    })
}

/// Aggregate over many instances.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionSweep {
    pub instances: usize,
    /// Simulation bit-identical to direct execution.
    pub fidelity_ok: usize,
    /// Oracle connectivity of the compatible graph matches the answer.
    pub compat_ok: usize,
    /// Charlie's answer matches the answer.
    pub charlie_correct: usize,
    /// `alice + bob = |W| · L` with every message of length `L ≤ max_bits`.
    pub communication_ok: usize,
    pub first_fidelity_failure: Option<(String, String, NodeId)>,
    pub first_wrong_answer: Option<(String, String)>,
}

pub fn sweep<P: SketchProtocol + ?Sized>(
    instances: &[OverlapInstance],
    ctx: &ReductionContext,
    protocol: &P,
) -> Result<ReductionSweep, ReductionError> {
    let rows: Vec<(bool, Option<NodeId>, bool, bool, bool)> = instances
        .par_iter()
        .map(|inst| {
            let fid = verify_fidelity(inst, ctx, protocol)?;
            let (g, _) = build_compatible_graph(inst, ctx)?;
            let conn = mincut::is_k_edge_connected(&g, ctx.k as u64)
                .map_err(|e| ReductionError::InvalidParameters(e.to_string()))?;
            let compat = conn == (inst.answer() == Answer::Yes);
            let correct = simulate(inst, ctx, protocol)? == inst.answer();
            let c = communication(inst, ctx, protocol)?;
            let comm = c.total() == c.w_count * c.per_node_bits
                && c.w_count == isqrt(ctx.n)
                && c.within_bound();
            Ok((fid.identical, fid.first_mismatch, compat, correct, comm))
        })
        .collect::<Result<_, ReductionError>>()?;
    let mut out = ReductionSweep {
        instances: instances.len(),
        ..Default::default()
    };
    for (inst, (fid, mismatch, compat, correct, comm)) in instances.iter().zip(rows) {
        out.fidelity_ok += usize::from(fid);
        out.compat_ok += usize::from(compat);
        out.charlie_correct += usize::from(correct);
        out.communication_ok += usize::from(comm);
        if !fid && out.first_fidelity_failure.is_none() {
            out.first_fidelity_failure = Some((
                inst.x.to_string(),
                inst.y.to_string(),
                mismatch.unwrap_or(0),
            ));
        }
        if !correct && out.first_wrong_answer.is_none() {
            out.first_wrong_answer = Some((inst.x.to_string(), inst.y.to_string()));
        }
    }
    Ok(out)
}
