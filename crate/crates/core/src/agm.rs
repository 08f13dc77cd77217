//! Randomized linear sketches for k-edge connectivity.
//!
//! Each node sketches its signed incidence vector: edge `{u, v}` with `u < v`
//! and multiplicity `m` has index `(u - 1)·n + v` and value `+m` at `u`, `-m`
//! at `v`. Summing the sketches of a node set cancels internal edges, leaving
//! the cut. An ℓ₀ sampler (nested subsampling levels of 1-sparse recovery
//! cells over `GF(2^61 - 1)`) then returns one crossing edge.
//!
//! Layout per node: `k` forest stacks × `rounds` Borůvka rounds × `reps`
//! independent samplers × `levels` levels × 3 cells × 61 bits. The referee
//! peels `k` spanning forests, subtracting the edges of earlier forests from
//! later stacks, and decides on their union (a k-connectivity certificate).

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::bits::BitString;
use crate::mincut;
use crate::model::{
    splitmix64, Decision, ModelError, MultiGraph, NodeId, NodeView, SharedRandomness,
    SketchProtocol,
};

pub const PRIME: u64 = (1 << 61) - 1;
pub const CELL_BITS: usize = 61;
const CELLS_PER_LEVEL: usize = 3;
/// `CELL_BITS · CELLS_PER_LEVEL · 2`; see [`AgmConfig::budget_bits`].
pub const BUDGET_CONSTANT: usize = 366;

fn add_mod(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= PRIME {
        s - PRIME
    } else {
        s
    }
}

fn sub_mod(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + PRIME - b
    }
}

fn mul_mod(a: u64, b: u64) -> u64 {
    let p = u128::from(a) * u128::from(b);
    let lo = (p as u64) & PRIME;
    let hi = (p >> 61) as u64;
    add_mod(lo, hi % PRIME)
}

fn pow_mod(mut base: u64, mut exp: u64) -> u64 {
    let mut acc = 1;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base);
        }
        base = mul_mod(base, base);
        exp >>= 1;
    }
    acc
}

fn inv_mod(a: u64) -> u64 {
    pow_mod(a, PRIME - 2)
}

/// Field element for a signed integer.
pub fn field(v: i64) -> u64 {
    if v >= 0 {
        (v as u64) % PRIME
    } else {
        sub_mod(0, v.unsigned_abs() % PRIME)
    }
}

fn ceil_log2(x: usize) -> usize {
    (usize::BITS - x.saturating_sub(1).leading_zeros()) as usize
}

/// Sketch dimensions for a graph on `n` nodes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgmConfig {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
}

impl AgmConfig {
    pub fn new(n: usize, k: usize, delta: f64) -> Self {
        assert!(delta > 0.0 && delta < 0.5, "δ must lie in (0, 1/2)");
        assert!(k >= 1);
        Self { n, k, delta }
    }

    fn lg(&self) -> usize {
        ceil_log2(self.n.max(2))
    }

    pub fn rounds(&self) -> usize {
        self.lg() + 1
    }

    /// Indices go up to `n²`, so `2·lg + 2` levels reach 1-sparsity.
    pub fn levels(&self) -> usize {
        2 * self.lg() + 2
    }

    pub fn reps(&self) -> usize {
        ((1.0 / self.delta).log2().ceil() as usize).max(1)
    }

    pub fn samplers(&self) -> usize {
        self.k * self.rounds() * self.reps()
    }

    pub fn sketch_bits(&self) -> usize {
        self.samplers() * self.levels() * CELLS_PER_LEVEL * CELL_BITS
    }

    /// `366 · k · (⌈log₂ n⌉ + 1)³ · ⌈log₂(1/δ)⌉` bits: `O(k log³ n)` for fixed δ.
    pub fn budget_bits(&self) -> usize {
        BUDGET_CONSTANT * self.k * (self.lg() + 1).pow(3) * self.reps()
    }

    pub fn max_index(&self) -> u64 {
        (self.n as u64) * (self.n as u64)
    }

    pub fn edge_index(&self, u: NodeId, v: NodeId) -> u64 {
        let (u, v) = if u < v { (u, v) } else { (v, u) };
        (u as u64 - 1) * self.n as u64 + v as u64
    }

    pub fn edge_of(&self, idx: u64) -> Option<(NodeId, NodeId)> {
        if idx == 0 || idx > self.max_index() {
            return None;
        }
        let n = self.n as u64;
        let u = (idx - 1) / n + 1;
        let v = idx - (u - 1) * n;
        (u < v && v <= n).then_some((u as usize, v as usize))
    }

    fn sampler_index(&self, forest: usize, round: usize, rep: usize) -> usize {
        (forest * self.rounds() + round) * self.reps() + rep
    }
}

/// Hash parameters of one ℓ₀ sampler, derived from the shared randomness.
#[derive(Clone, Copy, Debug)]
pub struct SamplerParams {
    level_seed: u64,
    z: u64,
    levels: usize,
}

impl SamplerParams {
    pub fn derive(rnd: &SharedRandomness, levels: usize, path: [u64; 3]) -> Self {
        let level_seed = rnd.word(&[path[0], path[1], path[2], 0]);
        let z = rnd.word(&[path[0], path[1], path[2], 1]) % (PRIME - 2) + 2;
        Self {
            level_seed,
            z,
            levels,
        }
    }

    /// Deepest level containing `idx`; each level keeps about half of the previous one.
    pub fn level_of(&self, idx: u64) -> usize {
        (splitmix64(self.level_seed ^ idx).trailing_zeros() as usize).min(self.levels - 1)
    }
}

/// Linear ℓ₀-sampling sketch: per level, the cells
/// `(Σ x_i, Σ x_i·i, Σ x_i·z^i)` over the subsampled coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct L0Sketch {
    pub cells: Vec<[u64; 3]>,
}

impl L0Sketch {
    pub fn zero(levels: usize) -> Self {
        Self {
            cells: vec![[0; 3]; levels],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.cells.iter().all(|c| *c == [0; 3])
    }

    /// Adds `value` (a field element) at coordinate `idx`.
    pub fn update(&mut self, params: &SamplerParams, idx: u64, value: u64) {
        let fp = mul_mod(value, pow_mod(params.z, idx));
        let weighted = mul_mod(value, idx % PRIME);
        for cell in &mut self.cells[..=params.level_of(idx)] {
            cell[0] = add_mod(cell[0], value);
            cell[1] = add_mod(cell[1], weighted);
            cell[2] = add_mod(cell[2], fp);
        }
    }

    pub fn add_assign(&mut self, other: &L0Sketch) {
        for (c, o) in self.cells.iter_mut().zip(&other.cells) {
            for j in 0..3 {
                c[j] = add_mod(c[j], o[j]);
            }
        }
    }

    /// A nonzero coordinate `(idx, value)` if some level is verifiably 1-sparse.
    pub fn query(&self, params: &SamplerParams, max_index: u64) -> Option<(u64, u64)> {
        for (level, cell) in self.cells.iter().enumerate().rev() {
            let [a, b, c] = *cell;
            if a == 0 {
                continue;
            }
            let idx = mul_mod(b, inv_mod(a));
            if idx == 0 || idx > max_index {
                continue;
            }
            if mul_mod(a, pow_mod(params.z, idx)) == c && params.level_of(idx) >= level {
                return Some((idx, a));
            }
        }
        None
    }
}

/// All samplers of one node, indexed `[forest][round][rep]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeSketch {
    pub samplers: Vec<L0Sketch>,
}

struct SketchSetup {
    config: AgmConfig,
    params: Vec<SamplerParams>,
}

impl SketchSetup {
    fn new(config: AgmConfig, rnd: &SharedRandomness) -> Self {
        let mut params = Vec::with_capacity(config.samplers());
        for f in 0..config.k {
            for r in 0..config.rounds() {
                for t in 0..config.reps() {
                    params.push(SamplerParams::derive(
                        rnd,
                        config.levels(),
                        [f as u64, r as u64, t as u64],
                    ));
                }
            }
        }
        Self { config, params }
    }

    /// Adds `copies` of edge `{u, v}` as seen from `at` to the samplers of `forests`.
    fn apply_edge(
        &self,
        sketch: &mut NodeSketch,
        at: NodeId,
        other: NodeId,
        copies: i64,
        forests: std::ops::Range<usize>,
    ) {
        let idx = self.config.edge_index(at, other);
        let signed = if at < other { copies } else { -copies };
        let value = field(signed);
        let per_forest = self.config.rounds() * self.config.reps();
        for s in forests.start * per_forest..forests.end * per_forest {
            sketch.samplers[s].update(&self.params[s], idx, value);
        }
    }

    fn encode_view(&self, view: &NodeView) -> NodeSketch {
        let mut sketch = NodeSketch {
            samplers: vec![L0Sketch::zero(self.config.levels()); self.config.samplers()],
        };
        for (&other, &m) in &view.neighbors {
            self.apply_edge(&mut sketch, view.id, other, i64::from(m), 0..self.config.k);
        }
        sketch
    }
}

impl NodeSketch {
    pub fn to_bits(&self) -> BitString {
        let mut out = BitString::with_capacity(
            self.samplers.len() * self.samplers.first().map_or(0, |s| s.cells.len()) * 3 * CELL_BITS,
        );
        for s in &self.samplers {
            for cell in &s.cells {
                for &x in cell {
                    out.push_uint(x, CELL_BITS);
                }
            }
        }
        out
    }

    pub fn from_bits(bits: &BitString, config: &AgmConfig) -> Option<Self> {
        if bits.len() != config.sketch_bits() {
            return None;
        }
        let mut pos = 0;
        let mut samplers = Vec::with_capacity(config.samplers());
        for _ in 0..config.samplers() {
            let mut cells = Vec::with_capacity(config.levels());
            for _ in 0..config.levels() {
                let mut cell = [0u64; 3];
                for x in &mut cell {
                    *x = bits.read_uint(pos, CELL_BITS)?;
                    if *x >= PRIME {
                        return None;
                    }
                    pos += CELL_BITS;
                }
                cells.push(cell);
            }
            samplers.push(L0Sketch { cells });
        }
        Some(Self { samplers })
    }
}

/// Sketch of one node's view.
pub fn agm_encode(view: &NodeView, seeds: &SharedRandomness, k: usize, delta: f64) -> BitString {
    let config = AgmConfig::new(view.n, k, delta);
    SketchSetup::new(config, seeds).encode_view(view).to_bits()
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..=n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = x;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Queries the summed sketch of `members` for stack `forest`, round `round`;
/// returns a recovered edge with exactly one endpoint in `members`.
pub fn sample_crossing_edge(
    sketches: &[NodeSketch],
    config: &AgmConfig,
    rnd: &SharedRandomness,
    members: &[NodeId],
    forest: usize,
    round: usize,
) -> Option<(NodeId, NodeId)> {
    let setup = SketchSetup::new(*config, rnd);
    crossing_edge(&setup, sketches, members, forest, round)
}

fn crossing_edge(
    setup: &SketchSetup,
    sketches: &[NodeSketch],
    members: &[NodeId],
    forest: usize,
    round: usize,
) -> Option<(NodeId, NodeId)> {
    let config = &setup.config;
    for t in 0..config.reps() {
        let s = config.sampler_index(forest, round, t);
        let mut sum = L0Sketch::zero(config.levels());
        for &v in members {
            sum.add_assign(&sketches[v - 1].samplers[s]);
        }
        if let Some((idx, _)) = sum.query(&setup.params[s], config.max_index()) {
            if let Some((u, v)) = config.edge_of(idx) {
                let inside = |x: NodeId| members.binary_search(&x).is_ok();
                if inside(u) != inside(v) {
                    return Some((u, v));
                }
            }
        }
    }
    None
}

/// Peels `k` spanning forests out of the sketches and returns their union.
pub fn certificate(
    sketches: &[NodeSketch],
    config: &AgmConfig,
    rnd: &SharedRandomness,
) -> MultiGraph {
    let n = config.n;
    let setup = SketchSetup::new(*config, rnd);
    let mut cert = MultiGraph::new(n);
    let mut work = sketches.to_vec();
    for forest in 0..config.k {
        let mut uf = UnionFind::new(n);
        let mut merged = Vec::new();
        for round in 0..config.rounds() {
            let mut comps: std::collections::BTreeMap<usize, Vec<NodeId>> = Default::default();
            for v in 1..=n {
                comps.entry(uf.find(v)).or_default().push(v);
            }
            if comps.len() <= 1 {
                break;
            }
            let found: Vec<(NodeId, NodeId)> = comps
                .values()
                .collect::<Vec<_>>()
                .par_iter()
                .filter_map(|members| crossing_edge(&setup, &work, members, forest, round))
                .collect();
            for (u, v) in found {
                if uf.union(u, v) {
                    merged.push((u, v));
                }
            }
        }
        for &(u, v) in &merged {
            cert.add_edge(u, v).expect("recovered edge ids are in range");
            // remove one copy from every later stack
            setup.apply_edge(&mut work[u - 1], u, v, -1, forest + 1..config.k);
            setup.apply_edge(&mut work[v - 1], v, u, -1, forest + 1..config.k);
        }
    }
    cert
}

/// Referee decision from one sketch per node, ids `1..=n` in order.
pub fn agm_decide_kconn(
    messages: &[(NodeId, BitString)],
    seeds: &SharedRandomness,
    n: usize,
    k: usize,
    delta: f64,
) -> Result<Decision, ModelError> {
    if messages.len() != n {
        return Err(ModelError::Decode(format!(
            "expected {n} messages, got {}",
            messages.len()
        )));
    }
    let config = AgmConfig::new(n, k, delta);
    let sketches = messages
        .iter()
        .enumerate()
        .map(|(i, (id, bits))| {
            if *id != i + 1 {
                return Err(ModelError::Decode(format!("message {i} has id {id}")));
            }
            NodeSketch::from_bits(bits, &config)
                .ok_or_else(|| ModelError::Decode(format!("malformed sketch from node {id}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if n < 2 {
        return Ok(Decision::Connected);
    }
    let cert = certificate(&sketches, &config, seeds);
    let ok = mincut::is_k_edge_connected(&cert, k as u64)
        .map_err(|e| ModelError::Decode(e.to_string()))?;
    Ok(Decision::from_bool(ok))
}

/// The sketching protocol wrapper; randomized.
#[derive(Clone, Debug)]
pub struct AgmProtocol {
    pub config: AgmConfig,
}

impl AgmProtocol {
    pub fn new(n: usize, k: usize, delta: f64) -> Self {
        Self {
            config: AgmConfig::new(n, k, delta),
        }
    }
}

impl SketchProtocol for AgmProtocol {
    fn name(&self) -> String {
        format!("agm(k={}, δ={})", self.config.k, self.config.delta)
    }

    fn max_bits(&self) -> usize {
        self.config.sketch_bits()
    }

    fn is_deterministic(&self) -> bool {
        false
    }

    fn encode(&self, view: &NodeView, rnd: &SharedRandomness) -> BitString {
        SketchSetup::new(self.config, rnd).encode_view(view).to_bits()
    }

    fn decode(
        &self,
        messages: &[(NodeId, BitString)],
        rnd: &SharedRandomness,
    ) -> Result<Decision, ModelError> {
        agm_decide_kconn(messages, rnd, self.config.n, self.config.k, self.config.delta)
    }
}

/// Random multigraph on `4..=max_n` nodes whose minimum cut tends to sit
/// near `k`. Half the draws are two halves, each held together by a
/// `k`-fold Hamiltonian cycle, joined by `0..=k+1` random cross edges; the
/// rest are sparse random graphs with multiplicities in `1..=2`.
pub fn random_workload<R: Rng>(rng: &mut R, max_n: usize, k: usize) -> MultiGraph {
    let n = rng.gen_range(4..=max_n.max(4));
    let mut g = MultiGraph::new(n);
    let mut ids: Vec<NodeId> = (1..=n).collect();
    ids.shuffle(rng);
    if rng.gen_bool(0.5) {
        let split = rng.gen_range(2..=n - 2);
        let (left, right) = ids.split_at(split);
        for half in [left, right] {
            if half.len() == 2 {
                g.add_edges(half[0], half[1], k as u32).expect("valid ids");
                continue;
            }
            for i in 0..half.len() {
                g.add_edges(half[i], half[(i + 1) % half.len()], k.div_ceil(2) as u32)
                    .expect("valid ids");
            }
            for _ in 0..half.len() {
                let (x, y) = (*half.choose(rng).unwrap(), *half.choose(rng).unwrap());
                if x != y {
                    g.add_edge(x, y).expect("valid ids");
                }
            }
        }
        for _ in 0..rng.gen_range(0..=k + 1) {
            let (x, y) = (*left.choose(rng).unwrap(), *right.choose(rng).unwrap());
            g.add_edge(x, y).expect("valid ids");
        }
    } else {
        let p = rng.gen_range(0.05..0.5);
        for u in 1..=n {
            for v in u + 1..=n {
                if rng.gen_bool(p) {
                    g.add_edges(u, v, rng.gen_range(1..=2)).expect("valid ids");
                }
            }
        }
    }
    g
}

/// Tally of AGM decisions against the exact oracle.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AgreementReport {
    pub runs: usize,
    pub agreed: usize,
    pub oracle_connected: usize,
    pub within_budget: usize,
    pub max_sketch_bits: usize,
}

impl AgreementReport {
    pub fn rate(&self) -> f64 {
        if self.runs == 0 {
            1.0
        } else {
            self.agreed as f64 / self.runs as f64
        }
    }
}

/// Runs the protocol on `graphs` with `k` drawn per graph, each under its own
/// shared-randomness stream derived from `seed`.
pub fn agreement(graphs: &[(MultiGraph, usize)], delta: f64, seed: u64) -> Result<AgreementReport, ModelError> {
    let rows: Vec<(bool, bool, bool, usize)> = graphs
        .par_iter()
        .enumerate()
        .map(|(i, (g, k))| {
            let p = AgmProtocol::new(g.node_count(), *k, delta);
            let rnd = SharedRandomness::seeded(splitmix64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9)));
            let t = crate::model::execute(&p, g, &Default::default(), *k, &rnd)?;
            let truth = mincut::is_k_edge_connected(g, *k as u64)
                .map_err(|e| ModelError::Decode(e.to_string()))?;
            let bits = t.messages.iter().map(|(_, b)| b.len()).max().unwrap_or(0);
            Ok((
                t.decision.is_connected() == truth,
                truth,
                bits <= p.config.budget_bits(),
                bits,
            ))
        })
        .collect::<Result<_, ModelError>>()?;
    let mut r = AgreementReport {
        runs: rows.len(),
        ..Default::default()
    };
    for (agreed, truth, budget, bits) in rows {
        r.agreed += usize::from(agreed);
        r.oracle_connected += usize::from(truth);
        r.within_budget += usize::from(budget);
        r.max_sketch_bits = r.max_sketch_bits.max(bits);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{execute, AdviceMap};
    use proptest::prelude::*;

    #[test]
    fn field_arithmetic() {
        assert_eq!(mul_mod(PRIME - 1, PRIME - 1), 1);
        assert_eq!(mul_mod(inv_mod(12345), 12345), 1);
        assert_eq!(add_mod(field(-3), 3), 0);
        assert_eq!(pow_mod(3, 0), 1);
    }

    #[test]
    fn edge_index_round_trip() {
        let c = AgmConfig::new(10, 1, 0.1);
        for u in 1..=10 {
            for v in u + 1..=10 {
                assert_eq!(c.edge_of(c.edge_index(u, v)), Some((u, v)));
                assert_eq!(c.edge_index(v, u), c.edge_index(u, v));
            }
        }
        assert_eq!(c.edge_of(c.edge_index(3, 3)), None);
        assert_eq!(c.edge_of(0), None);
    }

    #[test]
    fn isolated_node_sketch_is_zero() {
        let view = NodeView {
            id: 2,
            neighbors: Default::default(),
            advice: Default::default(),
            n: 5,
            k: 2,
        };
        let bits = agm_encode(&view, &SharedRandomness::seeded(1), 2, 0.1);
        assert_eq!(bits.count_ones(), 0);
        assert_eq!(bits.len(), AgmConfig::new(5, 2, 0.1).sketch_bits());
    }

    #[test]
    fn encoding_is_deterministic_given_seed() {
        let mut g = MultiGraph::new(4);
        g.add_edges(1, 2, 3).unwrap();
        g.add_edge(2, 4).unwrap();
        let view = NodeView::of(&g, 2, Default::default(), 2).unwrap();
        let r = SharedRandomness::seeded(77);
        assert_eq!(agm_encode(&view, &r, 2, 0.1), agm_encode(&view, &r, 2, 0.1));
        assert_ne!(
            agm_encode(&view, &r, 2, 0.1),
            agm_encode(&view, &SharedRandomness::seeded(78), 2, 0.1)
        );
    }

    #[test]
    fn path_is_connected_and_triangles_are_not() {
        let p = AgmProtocol::new(6, 1, 0.05);
        let rnd = SharedRandomness::seeded(3);
        let mut path = MultiGraph::new(6);
        for i in 1..6 {
            path.add_edge(i, i + 1).unwrap();
        }
        let t = execute(&p, &path, &AdviceMap::new(), 1, &rnd).unwrap();
        assert_eq!(t.decision, Decision::Connected);

        let mut tri = MultiGraph::new(6);
        for (u, v) in [(1, 2), (2, 3), (1, 3), (4, 5), (5, 6), (4, 6)] {
            tri.add_edge(u, v).unwrap();
        }
        let t = execute(&p, &tri, &AdviceMap::new(), 1, &rnd).unwrap();
        assert_eq!(t.decision, Decision::NotConnected);
    }

    #[test]
    fn malformed_message_is_a_decode_error() {
        let rnd = SharedRandomness::seeded(3);
        let msgs = vec![(1, BitString::zeros(5)), (2, BitString::zeros(5))];
        assert!(matches!(
            agm_decide_kconn(&msgs, &rnd, 2, 1, 0.1),
            Err(ModelError::Decode(_))
        ));
        assert!(matches!(
            agm_decide_kconn(&msgs[..1], &rnd, 2, 1, 0.1),
            Err(ModelError::Decode(_))
        ));
    }

    #[test]
    fn budget_holds_up_to_two_to_the_sixteen() {
        for lg in 0..=16 {
            for n in [1usize << lg, (1usize << lg) + 1, (1usize << lg).saturating_sub(1).max(1)] {
                if n > 1 << 16 {
                    continue;
                }
                for k in 1..=16 {
                    for delta in [0.01, 0.05, 0.25] {
                        let c = AgmConfig::new(n, k, delta);
                        assert!(c.sketch_bits() <= c.budget_bits(), "n={n} k={k} δ={delta}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn sketches_are_linear(
            xs in proptest::collection::vec((1u64..400, -5i64..5), 0..12),
            ys in proptest::collection::vec((1u64..400, -5i64..5), 0..12),
            seed in any::<u64>(),
        ) {
            let params = SamplerParams::derive(&SharedRandomness::seeded(seed), 10, [0, 0, 0]);
            let sketch = |entries: &[(u64, i64)]| {
                let mut s = L0Sketch::zero(10);
                for &(i, v) in entries {
                    s.update(&params, i, field(v));
                }
                s
            };
            let mut sum = sketch(&xs);
            sum.add_assign(&sketch(&ys));
            let both: Vec<_> = xs.iter().chain(&ys).copied().collect();
            prop_assert_eq!(sum, sketch(&both));
        }

        #[test]
        fn one_sparse_vectors_are_recovered(idx in 1u64..10_000, v in 1i64..50, seed in any::<u64>()) {
            let params = SamplerParams::derive(&SharedRandomness::seeded(seed), 16, [1, 2, 3]);
            let mut s = L0Sketch::zero(16);
            s.update(&params, idx, field(-v));
            prop_assert_eq!(s.query(&params, 10_000), Some((idx, field(-v))));
        }
    }

    #[test]
    fn agreement_on_small_workloads() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let graphs: Vec<(MultiGraph, usize)> = (0..30)
            .map(|i| (random_workload(&mut rng, 20, 1 + i % 3), 1 + i % 3))
            .collect();
        let r = agreement(&graphs, 0.05, 4).unwrap();
        assert_eq!(r.within_budget, r.runs);
        assert!(r.agreed >= 28, "{r:?}");
        assert!(r.oracle_connected > 0 && r.oracle_connected < r.runs);
    }

    #[test]
    fn sampler_returns_crossing_edges() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut hits = 0;
        let trials = 200;
        for t in 0..trials {
            let g = random_workload(&mut rng, 24, 2);
            let n = g.node_count();
            let config = AgmConfig::new(n, 1, 0.05);
            let rnd = SharedRandomness::seeded(t);
            let setup = SketchSetup::new(config, &rnd);
            let sketches: Vec<NodeSketch> = (1..=n)
                .map(|v| setup.encode_view(&NodeView::of(&g, v, Default::default(), 1).unwrap()))
                .collect();
            let members: Vec<NodeId> = (1..=n / 2).collect();
            let side: std::collections::BTreeSet<NodeId> = members.iter().copied().collect();
            let cut = g.crossing_weight(&side);
            match sample_crossing_edge(&sketches, &config, &rnd, &members, 0, 0) {
                Some((u, v)) => {
                    assert!(side.contains(&u) != side.contains(&v));
                    assert!(g.multiplicity(u, v) > 0);
                    hits += 1;
                }
                None => {}
            }
            if cut == 0 {
                assert!(sample_crossing_edge(&sketches, &config, &rnd, &members, 0, 0).is_none());
            }
        }
        assert!(hits > 0);
    }
}
