//! Bounded-intersection set families and the extraction of indistinguishable
//! separated pairs from a deterministic sketching protocol.
//!
//! For a node `v_i` and a family `𝒮` of candidate W-neighborhoods, the
//! protocol induces three partitions: of `𝒮` by the message `v_i` sends as
//! σ, of the A-projections `{S ∩ A}` by the message it sends when
//! A-restricted, and of the B-projections likewise. Members of `𝒮` that
//! agree on all three messages are interchangeable for the referee; a pair
//! among them that straddles the C0/C1 boundary is what the three-party
//! simulation needs.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;
use crate::lbgraph::{random_partition, role_view, Layout};
use crate::model::{encode_checked, Advice, ModelError, NodeId, SharedRandomness, SketchProtocol};

pub const DEFAULT_EPSILON: f64 = 0.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SetFamError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("could only reach {best} of {target} members within {attempts} attempts")]
    FamilyTooSparse {
        best: usize,
        target: usize,
        attempts: usize,
    },
    #[error("family invariant violated: {0}")]
    Violation(String),
    #[error("message partitions require a deterministic protocol")]
    DeterminismRequired,
    #[error("no node had an indistinguishable separated pair in {trials} trials")]
    NoGoodPartition { trials: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A family of distinct `d`-subsets of `ground`, each stored sorted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetFamily {
    pub ground: Vec<NodeId>,
    pub d: usize,
    /// Overlap parameter; `None` for families built without an intersection bound.
    pub epsilon: Option<f64>,
    pub members: Vec<Vec<NodeId>>,
}

/// `⌊ε·d/2⌋`.
pub fn intersection_bound(epsilon: f64, d: usize) -> usize {
    (epsilon * d as f64 / 2.0 + 1e-9).floor() as usize
}

fn overlap(x: &[NodeId], y: &[NodeId]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

impl SetFamily {
    /// Every `d`-subset of `ground`, lexicographic. No intersection bound.
    pub fn complete(ground: &[NodeId], d: usize) -> Self {
        let mut g = ground.to_vec();
        g.sort_unstable();
        let members = g.iter().copied().combinations(d).collect();
        Self {
            ground: g,
            d,
            epsilon: None,
            members,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn intersection_bound(&self) -> Option<usize> {
        self.epsilon.map(|e| intersection_bound(e, self.d))
    }

    pub fn max_pairwise_overlap(&self) -> usize {
        self.members
            .iter()
            .tuple_combinations()
            .map(|(x, y)| overlap(x, y))
            .max()
            .unwrap_or(0)
    }

    /// Exhaustive check of every family invariant, including all pairs.
    pub fn verify(&self) -> Result<(), SetFamError> {
        let ground: BTreeSet<NodeId> = self.ground.iter().copied().collect();
        let mut seen = BTreeSet::new();
        for s in &self.members {
            if s.len() != self.d || !s.windows(2).all(|w| w[0] < w[1]) {
                return Err(SetFamError::Violation(format!(
                    "member {s:?} is not a sorted {}-set",
                    self.d
                )));
            }
            if !s.iter().all(|x| ground.contains(x)) {
                return Err(SetFamError::Violation(format!("member {s:?} leaves the ground set")));
            }
            if !seen.insert(s) {
                return Err(SetFamError::Violation(format!("duplicate member {s:?}")));
            }
        }
        if let Some(bound) = self.intersection_bound() {
            for (x, y) in self.members.iter().tuple_combinations() {
                if overlap(x, y) > bound {
                    return Err(SetFamError::Violation(format!(
                        "|{x:?} ∩ {y:?}| = {} exceeds {bound}",
                        overlap(x, y)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Draws uniform `d`-subsets of `ground` and keeps each one whose overlap
/// with every kept member is at most `⌊ε·d/2⌋`, until `target` members are
/// kept or `max_attempts` draws are spent. The result is verified pairwise.
pub fn sample_family(
    ground: &[NodeId],
    d: usize,
    epsilon: f64,
    target: usize,
    seed: u64,
    max_attempts: usize,
) -> Result<SetFamily, SetFamError> {
    if d == 0 || d > ground.len() {
        return Err(SetFamError::InvalidParameters(format!(
            "need 1 <= d <= |W| = {}, got d = {d}",
            ground.len()
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SetFamError::InvalidParameters(format!("ε = {epsilon} not in (0, 1)")));
    }
    if target < 2 {
        return Err(SetFamError::InvalidParameters("target size must be >= 2".into()));
    }
    let bound = intersection_bound(epsilon, d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = ground.to_vec();
    pool.sort_unstable();
    let mut members: Vec<Vec<NodeId>> = Vec::new();
    let mut attempts = 0;
    while members.len() < target && attempts < max_attempts {
        attempts += 1;
        let mut s: Vec<NodeId> = pool.choose_multiple(&mut rng, d).copied().collect();
        s.sort_unstable();
        if members.iter().all(|m| m != &s && overlap(m, &s) <= bound) {
            members.push(s);
        }
    }
    if members.len() < target {
        return Err(SetFamError::FamilyTooSparse {
            best: members.len(),
            target,
            attempts,
        });
    }
    let family = SetFamily {
        ground: pool,
        d,
        epsilon: Some(epsilon),
        members,
    };
    family.verify()?;
    Ok(family)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionRole {
    /// Full W-neighborhoods, node acting as σ.
    Sigma,
    /// A-projections, node A-restricted.
    AProjection,
    /// B-projections, node B-restricted.
    BProjection,
}

impl PartitionRole {
    pub fn advice(self) -> Advice {
        match self {
            PartitionRole::Sigma => Advice::Sigma,
            PartitionRole::AProjection => Advice::ARestricted,
            PartitionRole::BProjection => Advice::BRestricted,
        }
    }
}

/// Partition of a keyspace of W-subsets by the message they induce.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessagePartition {
    pub role: PartitionRole,
    assignment: BTreeMap<Vec<NodeId>, BitString>,
}

impl MessagePartition {
    pub fn message_of(&self, input: &[NodeId]) -> Option<&BitString> {
        self.assignment.get(input)
    }

    pub fn keyspace_len(&self) -> usize {
        self.assignment.len()
    }

    /// Blocks keyed by message, each listing its inputs in canonical order.
    pub fn blocks(&self) -> BTreeMap<BitString, Vec<Vec<NodeId>>> {
        let mut out: BTreeMap<BitString, Vec<Vec<NodeId>>> = BTreeMap::new();
        for (input, msg) in &self.assignment {
            out.entry(msg.clone()).or_default().push(input.clone());
        }
        out
    }

    pub fn block_count(&self) -> usize {
        self.assignment.values().collect::<BTreeSet<_>>().len()
    }
}

#[derive(Clone, Debug)]
pub struct NodePartitions {
    pub node: NodeId,
    pub sigma: MessagePartition,
    pub a: MessagePartition,
    pub b: MessagePartition,
}

pub fn projection(s: &[NodeId], side: &BTreeSet<NodeId>) -> Vec<NodeId> {
    s.iter().copied().filter(|w| side.contains(w)).collect()
}

/// Message `node` sends in `role` with W-neighborhood `w_set`.
pub fn role_message<P: SketchProtocol + ?Sized>(
    protocol: &P,
    layout: &Layout,
    node: NodeId,
    role: PartitionRole,
    w_set: &[NodeId],
    k: usize,
) -> Result<BitString, ModelError> {
    let view = role_view(layout, node, role.advice(), w_set, k);
    encode_checked(protocol, &view, &SharedRandomness::none())
}

/// The three message partitions node `node` induces over `family`.
pub fn message_partitions<P: SketchProtocol + ?Sized>(
    protocol: &P,
    node: NodeId,
    family: &SetFamily,
    a: &BTreeSet<NodeId>,
    b: &BTreeSet<NodeId>,
    layout: &Layout,
    k: usize,
) -> Result<NodePartitions, SetFamError> {
    if !protocol.is_deterministic() {
        return Err(SetFamError::DeterminismRequired);
    }
    let build = |role: PartitionRole, keys: BTreeSet<Vec<NodeId>>| {
        keys.into_iter()
            .map(|key| {
                role_message(protocol, layout, node, role, &key, k).map(|m| (key, m))
            })
            .collect::<Result<BTreeMap<_, _>, _>>()
            .map(|assignment| MessagePartition { role, assignment })
    };
    let sigma = build(PartitionRole::Sigma, family.members.iter().cloned().collect())?;
    let pa = build(
        PartitionRole::AProjection,
        family.members.iter().map(|s| projection(s, a)).collect(),
    )?;
    let pb = build(
        PartitionRole::BProjection,
        family.members.iter().map(|s| projection(s, b)).collect(),
    )?;
    Ok(NodePartitions {
        node,
        sigma,
        a: pa,
        b: pb,
    })
}

/// Message triple `(σ-role, A-role, B-role)` of a family member.
pub type MessageTriple = (BitString, BitString, BitString);

fn triple_of(parts: &NodePartitions, s: &[NodeId], a: &BTreeSet<NodeId>, b: &BTreeSet<NodeId>) -> MessageTriple {
    (
        parts.sigma.message_of(s).expect("member in keyspace").clone(),
        parts.a.message_of(&projection(s, a)).expect("projection in keyspace").clone(),
        parts.b.message_of(&projection(s, b)).expect("projection in keyspace").clone(),
    )
}

/// Members grouped by message triple (lifting the projection partitions back
/// to `𝒮`), largest group first, ties by smallest triple.
pub fn triple_groups(
    parts: &NodePartitions,
    family: &SetFamily,
    a: &BTreeSet<NodeId>,
    b: &BTreeSet<NodeId>,
) -> Vec<(MessageTriple, Vec<Vec<NodeId>>)> {
    let mut groups: BTreeMap<MessageTriple, Vec<Vec<NodeId>>> = BTreeMap::new();
    for s in &family.members {
        groups.entry(triple_of(parts, s, a, b)).or_default().push(s.clone());
    }
    let mut out: Vec<_> = groups
        .into_iter()
        .map(|(key, mut members)| {
            members.sort();
            (key, members)
        })
        .collect();
    // stable sort keeps ascending triple order among equal sizes
    out.sort_by(|x, y| y.1.len().cmp(&x.1.len()));
    out
}

/// Largest set of members sharing a block in all three partitions.
pub fn common_block(
    parts: &NodePartitions,
    family: &SetFamily,
    a: &BTreeSet<NodeId>,
    b: &BTreeSet<NodeId>,
) -> Vec<Vec<NodeId>> {
    triple_groups(parts, family, a, b)
        .into_iter()
        .next()
        .map(|(_, m)| m)
        .unwrap_or_default()
}

/// `|𝒯| · 2^{3L} >= |𝒮|`.
pub fn pigeonhole_floor_holds(common: usize, family: usize, max_bits: usize) -> bool {
    let shift = 3 * max_bits;
    if shift >= 100 {
        return common >= 1 || family == 0;
    }
    (common as u128) << shift >= family as u128
}

/// First `S0` (canonical order) with `|S0 ∩ A| >= k` and first `S1` with `|S1 ∩ A| <= k - 1`.
pub fn find_separated_pair(
    candidates: &[Vec<NodeId>],
    a: &BTreeSet<NodeId>,
    b: &BTreeSet<NodeId>,
    k: usize,
) -> Option<(Vec<NodeId>, Vec<NodeId>)> {
    let mut sorted: Vec<&Vec<NodeId>> = candidates.iter().collect();
    sorted.sort();
    let into = |s: &[NodeId], side: &BTreeSet<NodeId>| s.iter().filter(|w| side.contains(w)).count();
    let s0 = sorted
        .iter()
        .find(|s| into(s, a) >= k && into(s, b) < k)?;
    let s1 = sorted
        .iter()
        .find(|s| into(s, a) < k && into(s, b) >= k)?;
    debug_assert_ne!(projection(s0, a), projection(s1, a));
    debug_assert_ne!(projection(s0, b), projection(s1, b));
    Some(((*s0).clone(), (*s1).clone()))
}

/// The three messages a node sends for both members of its pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessMessages {
    pub sigma: BitString,
    pub a_projection: BitString,
    pub b_projection: BitString,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparatedPairRecord {
    pub node: NodeId,
    pub s0: Vec<NodeId>,
    pub s1: Vec<NodeId>,
    pub witness: WitnessMessages,
}

/// Which property of an indistinguishable separated pair failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairProperty {
    /// Same σ-role message.
    SameSigmaBlock,
    /// Distinct A-projections with the same A-role message.
    SameABlock,
    /// Distinct B-projections with the same B-role message.
    SameBBlock,
    /// `S0` forces C0 and `S1` forces C1.
    Separated,
    /// Stored witness messages differ from a fresh encoding.
    Witness,
}

/// Re-verifies every property of `record` by encoding from scratch.
pub fn verify_record<P: SketchProtocol + ?Sized>(
    protocol: &P,
    record: &SeparatedPairRecord,
    a: &BTreeSet<NodeId>,
    b: &BTreeSet<NodeId>,
    layout: &Layout,
    k: usize,
) -> Result<(), PairProperty> {
    let msg = |role, set: &[NodeId]| {
        role_message(protocol, layout, record.node, role, set, k).map_err(|_| PairProperty::Witness)
    };
    let (s0, s1) = (&record.s0, &record.s1);
    let into = |s: &[NodeId], side: &BTreeSet<NodeId>| s.iter().filter(|w| side.contains(w)).count();
    if !(s0.len() == 2 * k - 1
        && s1.len() == 2 * k - 1
        && into(s0, a) >= k
        && into(s0, b) < k
        && into(s1, a) < k
        && into(s1, b) >= k)
    {
        return Err(PairProperty::Separated);
    }
    let sig0 = msg(PartitionRole::Sigma, s0)?;
    if sig0 != msg(PartitionRole::Sigma, s1)? {
        return Err(PairProperty::SameSigmaBlock);
    }
    let (a0, a1) = (projection(s0, a), projection(s1, a));
    let ma = msg(PartitionRole::AProjection, &a0)?;
    if a0 == a1 || ma != msg(PartitionRole::AProjection, &a1)? {
        return Err(PairProperty::SameABlock);
    }
    let (b0, b1) = (projection(s0, b), projection(s1, b));
    let mb = msg(PartitionRole::BProjection, &b0)?;
    if b0 == b1 || mb != msg(PartitionRole::BProjection, &b1)? {
        return Err(PairProperty::SameBBlock);
    }
    let w = &record.witness;
    if w.sigma != sig0 || w.a_projection != ma || w.b_projection != mb {
        return Err(PairProperty::Witness);
    }
    Ok(())
}

/// Searches every message-triple group of `node` (largest first) for a
/// separated pair and returns the first one found.
pub fn find_pair_for_node<P: SketchProtocol + ?Sized>(
    protocol: &P,
    node: NodeId,
    family: &SetFamily,
    a: &BTreeSet<NodeId>,
    b: &BTreeSet<NodeId>,
    layout: &Layout,
    k: usize,
) -> Result<Option<SeparatedPairRecord>, SetFamError> {
    let parts = message_partitions(protocol, node, family, a, b, layout, k)?;
    for ((sigma, a_projection, b_projection), members) in triple_groups(&parts, family, a, b) {
        if let Some((s0, s1)) = find_separated_pair(&members, a, b, k) {
            return Ok(Some(SeparatedPairRecord {
                node,
                s0,
                s1,
                witness: WitnessMessages {
                    sigma,
                    a_projection,
                    b_projection,
                },
            }));
        }
    }
    Ok(None)
}

/// Outcome of the partition search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionChoice {
    pub a: BTreeSet<NodeId>,
    pub b: BTreeSet<NodeId>,
    /// Good nodes of the chosen partition with their pair records.
    pub good: BTreeMap<NodeId, SeparatedPairRecord>,
    /// Index of the trial that produced the chosen partition.
    pub trial: usize,
    /// `|V_good|` for every trial, in order.
    pub good_per_trial: Vec<usize>,
}

/// Evaluates every V-node for one fixed partition.
pub fn good_nodes<P: SketchProtocol + ?Sized>(
    protocol: &P,
    family: &SetFamily,
    a: &BTreeSet<NodeId>,
    b: &BTreeSet<NodeId>,
    layout: &Layout,
    k: usize,
) -> Result<BTreeMap<NodeId, SeparatedPairRecord>, SetFamError> {
    let nodes: Vec<NodeId> = layout.v_nodes().collect();
    let found: Vec<Option<SeparatedPairRecord>> = nodes
        .par_iter()
        .map(|&v| find_pair_for_node(protocol, v, family, a, b, layout, k))
        .collect::<Result<_, _>>()?;
    Ok(found.into_iter().flatten().map(|r| (r.node, r)).collect())
}

/// Tries `trials` uniform partitions of `W` and keeps the one with the most
/// good nodes (earliest trial on ties). Trial `t` draws from ChaCha8 stream `t`
/// of `seed`.
pub fn choose_partition<P: SketchProtocol + ?Sized>(
    protocol: &P,
    family: &SetFamily,
    layout: &Layout,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<PartitionChoice, SetFamError> {
    if !protocol.is_deterministic() {
        return Err(SetFamError::DeterminismRequired);
    }
    let w: Vec<NodeId> = layout.w_nodes().collect();
    if w.len() < 2 * k {
        return Err(SetFamError::InvalidParameters(format!(
            "|W| = {} < 2k = {}",
            w.len(),
            2 * k
        )));
    }
    let mut best: Option<PartitionChoice> = None;
    let mut per_trial = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let (a, b) = random_partition(&w, k, &mut rng).expect("|W| >= 2k checked");
        let good = good_nodes(protocol, family, &a, &b, layout, k)?;
        per_trial.push(good.len());
        if best.as_ref().map_or(true, |c| good.len() > c.good.len()) {
            best = Some(PartitionChoice {
                a,
                b,
                good,
                trial: t,
                good_per_trial: Vec::new(),
            });
        }
    }
    match best {
        Some(mut c) if !c.good.is_empty() => {
            c.good_per_trial = per_trial;
            Ok(c)
        }
        _ => Err(SetFamError::NoGoodPartition { trials }),
    }
}

/// JSON export of a chosen partition, its family, and the per-node records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionContext {
    pub n: usize,
    pub k: usize,
    pub protocol: String,
    pub a: BTreeSet<NodeId>,
    pub b: BTreeSet<NodeId>,
    pub family: SetFamily,
    pub records: Vec<SeparatedPairRecord>,
}

impl PartitionContext {
    pub fn new(n: usize, k: usize, protocol: String, family: SetFamily, choice: &PartitionChoice) -> Self {
        Self {
            n,
            k,
            protocol,
            a: choice.a.clone(),
            b: choice.b.clone(),
            family,
            records: choice.good.values().cloned().collect(),
        }
    }
}
