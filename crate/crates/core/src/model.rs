//! Multigraphs and the one-shot distributed sketching model.
//!
//! Every node sees only its 1-hop view (neighbor ids with multiplicities, its
//! role advice, and the global parameters) and emits a single message. The
//! referee sees the `(id, message)` list and nothing else.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitString;

/// Node identifier; graphs on `n` nodes use ids `1..=n`.
pub type NodeId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown node {id} (graph has {n} nodes)")]
    UnknownNode { id: NodeId, n: usize },
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("edge ({0}, {1}) has multiplicity zero")]
    ZeroMultiplicity(NodeId, NodeId),
    #[error("node {node} emitted {len} bits, protocol budget is {max_bits}")]
    EncodingOverflow {
        node: NodeId,
        len: usize,
        max_bits: usize,
    },
    #[error("referee could not decode: {0}")]
    Decode(String),
    #[error("graph file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Undirected multigraph on ids `1..=n`, stored as per-node adjacency maps of
/// multiplicities. Lookups are symmetric by construction.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MultiGraph {
    adj: Vec<BTreeMap<NodeId, u32>>,
}

impl MultiGraph {
    pub fn new(n: usize) -> Self {
        Self {
            adj: vec![BTreeMap::new(); n],
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        1..=self.adj.len()
    }

    fn check(&self, id: NodeId) -> Result<(), ModelError> {
        if id == 0 || id > self.adj.len() {
            Err(ModelError::UnknownNode {
                id,
                n: self.adj.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Adds `m` parallel copies of `{u, v}` on top of any existing ones.
    pub fn add_edges(&mut self, u: NodeId, v: NodeId, m: u32) -> Result<(), ModelError> {
        self.check(u)?;
        self.check(v)?;
        if u == v {
            return Err(ModelError::SelfLoop(u));
        }
        if m == 0 {
            return Err(ModelError::ZeroMultiplicity(u, v));
        }
        *self.adj[u - 1].entry(v).or_insert(0) += m;
        *self.adj[v - 1].entry(u).or_insert(0) += m;
        Ok(())
    }

    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<(), ModelError> {
        self.add_edges(u, v, 1)
    }

    /// Removes up to `m` copies of `{u, v}`; returns how many were removed.
    pub fn remove_edges(&mut self, u: NodeId, v: NodeId, m: u32) -> Result<u32, ModelError> {
        self.check(u)?;
        self.check(v)?;
        let cur = self.multiplicity(u, v);
        let removed = cur.min(m);
        if removed == cur {
            self.adj[u - 1].remove(&v);
            self.adj[v - 1].remove(&u);
        } else {
            *self.adj[u - 1].get_mut(&v).expect("present") -= removed;
            *self.adj[v - 1].get_mut(&u).expect("present") -= removed;
        }
        Ok(removed)
    }

    pub fn multiplicity(&self, u: NodeId, v: NodeId) -> u32 {
        self.adj
            .get(u.wrapping_sub(1))
            .and_then(|m| m.get(&v))
            .copied()
            .unwrap_or(0)
    }

    /// Neighbor multiset of `id`, ordered by neighbor id.
    pub fn neighborhood(&self, id: NodeId) -> Result<&BTreeMap<NodeId, u32>, ModelError> {
        self.check(id)?;
        Ok(&self.adj[id - 1])
    }

    /// Degree counting multiplicities.
    pub fn degree(&self, id: NodeId) -> u64 {
        self.adj
            .get(id.wrapping_sub(1))
            .map(|m| m.values().map(|&c| u64::from(c)).sum())
            .unwrap_or(0)
    }

    /// Edges as `(u, v, multiplicity)` with `u < v`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, u32)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, nb)| {
            let u = i + 1;
            nb.range(u + 1..).map(move |(&v, &m)| (u, v, m))
        })
    }

    pub fn edge_multiset_size(&self) -> u64 {
        self.edges().map(|(_, _, m)| u64::from(m)).sum()
    }

    /// Total multiplicity of edges with exactly one endpoint in `side`.
    pub fn crossing_weight(&self, side: &BTreeSet<NodeId>) -> u64 {
        side.iter()
            .filter_map(|&u| self.adj.get(u.wrapping_sub(1)))
            .flat_map(|nb| nb.iter())
            .filter(|(v, _)| !side.contains(v))
            .map(|(_, &m)| u64::from(m))
            .sum()
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let n = self.node_count();
        let mut seen = vec![false; n + 1];
        let mut out = Vec::new();
        for start in 1..=n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &v in self.adj[u - 1].keys() {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Serializes to the line format: `n <count>` then `u v m` per edge, `u < v`.
    pub fn to_text(&self) -> String {
        let mut s = format!("n {}\n", self.node_count());
        for (u, v, m) in self.edges() {
            writeln!(s, "{u} {v} {m}").expect("write to string");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (first_no, first) = lines.next().ok_or(ModelError::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        let mut head = first.split_whitespace();
        let n = match (head.next(), head.next(), head.next()) {
            (Some("n"), Some(c), None) => c.parse::<usize>().map_err(|e| ModelError::Parse {
                line: first_no + 1,
                msg: format!("bad node count: {e}"),
            })?,
            _ => {
                return Err(ModelError::Parse {
                    line: first_no + 1,
                    msg: "expected header `n <count>`".into(),
                })
            }
        };
        let mut g = MultiGraph::new(n);
        let mut prev: Option<(NodeId, NodeId)> = None;
        for (no, line) in lines {
            let parse_err = |msg: String| ModelError::Parse { line: no + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err("expected `u v m`".into()));
            }
            let num = |s: &str| {
                s.parse::<u64>()
                    .map_err(|e| parse_err(format!("bad number {s:?}: {e}")))
            };
            let (u, v, m) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);
            let (u, v) = (u as NodeId, v as NodeId);
            if u >= v {
                return Err(parse_err(format!("edge ({u}, {v}) must satisfy u < v")));
            }
            if prev.is_some_and(|p| p >= (u, v)) {
                return Err(parse_err("edges must be strictly ascending".into()));
            }
            let m = u32::try_from(m).map_err(|_| parse_err("multiplicity too large".into()))?;
            g.add_edges(u, v, m).map_err(|e| parse_err(e.to_string()))?;
            prev = Some((u, v));
        }
        Ok(g)
    }
}

/// Role information revealed to a node in addition to its neighborhood.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Advice {
    #[default]
    None,
    Sigma,
    ARestricted,
    BRestricted,
}

impl Advice {
    pub fn code(self) -> u64 {
        match self {
            Advice::None => 0,
            Advice::Sigma => 1,
            Advice::ARestricted => 2,
            Advice::BRestricted => 3,
        }
    }

    pub fn from_code(code: u64) -> Option<Self> {
        Some(match code {
            0 => Advice::None,
            1 => Advice::Sigma,
            2 => Advice::ARestricted,
            3 => Advice::BRestricted,
            _ => return None,
        })
    }
}

/// Advice per node; nodes absent from the map carry [`Advice::None`].
pub type AdviceMap = BTreeMap<NodeId, Advice>;

/// Everything a node knows when it computes its message.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NodeView {
    pub id: NodeId,
    pub neighbors: BTreeMap<NodeId, u32>,
    pub advice: Advice,
    pub n: usize,
    pub k: usize,
}

impl NodeView {
    pub fn of(
        graph: &MultiGraph,
        id: NodeId,
        advice: Advice,
        k: usize,
    ) -> Result<Self, ModelError> {
        Ok(Self {
            id,
            neighbors: graph.neighborhood(id)?.clone(),
            advice,
            n: graph.node_count(),
            k,
        })
    }

    pub fn degree(&self) -> u64 {
        self.neighbors.values().map(|&m| u64::from(m)).sum()
    }

    pub fn distinct_neighbors(&self) -> usize {
        self.neighbors.len()
    }
}

/// Seed-addressed public randomness shared by all nodes and the referee.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedRandomness {
    seed: Option<u64>,
}

impl SharedRandomness {
    /// The zero-length stream handed to deterministic protocols.
    pub fn none() -> Self {
        Self { seed: None }
    }

    pub fn seeded(seed: u64) -> Self {
        Self { seed: Some(seed) }
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn is_empty(&self) -> bool {
        self.seed.is_none()
    }

    /// Pseudorandom word at address `path`.
    ///
    /// # Panics
    /// Panics on the empty stream: a protocol that reads randomness must not
    /// be run deterministically.
    pub fn word(&self, path: &[u64]) -> u64 {
        let seed = self
            .seed
            .expect("protocol read from an empty randomness stream");
        path.iter()
            .fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Connected,
    NotConnected,
}

impl Decision {
    pub fn from_bool(connected: bool) -> Self {
        if connected {
            Decision::Connected
        } else {
            Decision::NotConnected
        }
    }

    pub fn is_connected(self) -> bool {
        self == Decision::Connected
    }
}

/// A one-shot sketching algorithm: a node encoder plus a referee decoder.
///
/// `decode` never receives the graph; it sees the sorted `(id, message)` list
/// and the shared randomness only.
pub trait SketchProtocol: Send + Sync {
    fn name(&self) -> String;

    fn max_bits(&self) -> usize;

    fn is_deterministic(&self) -> bool {
        true
    }

    fn encode(&self, view: &NodeView, randomness: &SharedRandomness) -> BitString;

    fn decode(
        &self,
        messages: &[(NodeId, BitString)],
        randomness: &SharedRandomness,
    ) -> Result<Decision, ModelError>;
}

impl<P: SketchProtocol + ?Sized> SketchProtocol for &P {
    fn name(&self) -> String {
        (**self).name()
    }
    fn max_bits(&self) -> usize {
        (**self).max_bits()
    }
    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
    fn encode(&self, view: &NodeView, randomness: &SharedRandomness) -> BitString {
        (**self).encode(view, randomness)
    }
    fn decode(
        &self,
        messages: &[(NodeId, BitString)],
        randomness: &SharedRandomness,
    ) -> Result<Decision, ModelError> {
        (**self).decode(messages, randomness)
    }
}

impl<P: SketchProtocol + ?Sized> SketchProtocol for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn max_bits(&self) -> usize {
        (**self).max_bits()
    }
    fn is_deterministic(&self) -> bool {
        (**self).is_deterministic()
    }
    fn encode(&self, view: &NodeView, randomness: &SharedRandomness) -> BitString {
        (**self).encode(view, randomness)
    }
    fn decode(
        &self,
        messages: &[(NodeId, BitString)],
        randomness: &SharedRandomness,
    ) -> Result<Decision, ModelError> {
        (**self).decode(messages, randomness)
    }
}

/// Encodes `view` and enforces the protocol's message budget.
pub fn encode_checked<P: SketchProtocol + ?Sized>(
    protocol: &P,
    view: &NodeView,
    randomness: &SharedRandomness,
) -> Result<BitString, ModelError> {
    let bits = protocol.encode(view, randomness);
    if bits.len() > protocol.max_bits() {
        return Err(ModelError::EncodingOverflow {
            node: view.id,
            len: bits.len(),
            max_bits: protocol.max_bits(),
        });
    }
    Ok(bits)
}

/// Runs every node's encoder (in parallel) and returns the messages sorted by id.
pub fn encode_all<P: SketchProtocol + ?Sized>(
    protocol: &P,
    graph: &MultiGraph,
    advice: &AdviceMap,
    k: usize,
    randomness: &SharedRandomness,
) -> Result<Vec<(NodeId, BitString)>, ModelError> {
    let ids: Vec<NodeId> = graph.nodes().collect();
    ids.par_iter()
        .map(|&id| {
            let a = advice.get(&id).copied().unwrap_or_default();
            let view = NodeView::of(graph, id, a, k)?;
            encode_checked(protocol, &view, randomness).map(|b| (id, b))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub messages: Vec<(NodeId, BitString)>,
    pub decision: Decision,
}

impl Transcript {
    pub fn total_bits(&self) -> usize {
        self.messages.iter().map(|(_, b)| b.len()).sum()
    }

    pub fn dump(&self, protocol: &str, randomness: &SharedRandomness) -> TranscriptDump {
        TranscriptDump {
            protocol: protocol.to_string(),
            seed: randomness.seed(),
            messages: self
                .messages
                .iter()
                .map(|(id, bits)| MessageRecord {
                    id: *id,
                    bits: bits.clone(),
                })
                .collect(),
            decision: self.decision,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageRecord {
    pub id: NodeId,
    pub bits: BitString,
}

/// JSON form of a transcript.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptDump {
    pub protocol: String,
    pub seed: Option<u64>,
    pub messages: Vec<MessageRecord>,
    pub decision: Decision,
}

/// Executes `protocol` on `graph`: one message per node, then the referee.
pub fn execute<P: SketchProtocol + ?Sized>(
    protocol: &P,
    graph: &MultiGraph,
    advice: &AdviceMap,
    k: usize,
    randomness: &SharedRandomness,
) -> Result<Transcript, ModelError> {
    let messages = encode_all(protocol, graph, advice, k, randomness)?;
    let decision = protocol.decode(&messages, randomness)?;
    Ok(Transcript { messages, decision })
}
