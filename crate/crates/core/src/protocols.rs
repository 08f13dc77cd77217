//! Reference sketching protocols used to drive the pipelines.
//!
//! [`FullInformation`] is a correct (and expensive) k-edge-connectivity
//! algorithm. The others are short toy protocols: they are cheap enough for
//! indistinguishable separated pairs to exist at small scale, which is what
//! the lower-bound machinery needs to exercise.

use crate::bits::BitString;
use crate::mincut;
use crate::model::{
    splitmix64, Decision, ModelError, MultiGraph, NodeId, NodeView, SharedRandomness,
    SketchProtocol,
};

/// Width of one multiplicity field in a full-information message.
pub const MULTIPLICITY_BITS: usize = 16;

/// Sends the complete view: 2 advice bits, then one fixed-width multiplicity
/// field for every node id `1..=n`. The referee rebuilds the graph and runs
/// the exact min-cut oracle.
#[derive(Clone, Debug)]
pub struct FullInformation {
    pub n: usize,
    pub k: usize,
}

impl FullInformation {
    pub fn new(n: usize, k: usize) -> Self {
        Self { n, k }
    }
}

impl SketchProtocol for FullInformation {
    fn name(&self) -> String {
        "full".into()
    }

    fn max_bits(&self) -> usize {
        2 + self.n * MULTIPLICITY_BITS
    }

    fn encode(&self, view: &NodeView, _: &SharedRandomness) -> BitString {
        let mut out = BitString::with_capacity(self.max_bits());
        out.push_uint(view.advice.code(), 2);
        for v in 1..=self.n {
            let m = view.neighbors.get(&v).copied().unwrap_or(0);
            if u64::from(m) >> MULTIPLICITY_BITS != 0 {
                // unrepresentable; widen the field so the budget check trips
                out.push_uint(u64::from(m), 32);
            } else {
                out.push_uint(u64::from(m), MULTIPLICITY_BITS);
            }
        }
        out
    }

    fn decode(
        &self,
        messages: &[(NodeId, BitString)],
        _: &SharedRandomness,
    ) -> Result<Decision, ModelError> {
        let n = messages.len();
        if n < 2 {
            return Ok(Decision::Connected);
        }
        let mut g = MultiGraph::new(n);
        for (u, bits) in messages {
            if bits.len() != 2 + n * MULTIPLICITY_BITS {
                return Err(ModelError::Decode(format!(
                    "node {u}: expected {} bits, got {}",
                    2 + n * MULTIPLICITY_BITS,
                    bits.len()
                )));
            }
            for v in u + 1..=n {
                let m = bits
                    .read_uint(2 + (v - 1) * MULTIPLICITY_BITS, MULTIPLICITY_BITS)
                    .expect("length checked") as u32;
                if m > 0 {
                    g.add_edges(*u, v, m)?;
                }
            }
        }
        let connected = mincut::is_k_edge_connected(&g, self.k as u64)
            .map_err(|e| ModelError::Decode(e.to_string()))?;
        Ok(Decision::from_bool(connected))
    }
}

/// Every node sends the same fixed message; the referee always answers `decision`.
#[derive(Clone, Debug)]
pub struct Constant {
    pub message: BitString,
    pub decision: Decision,
}

impl Default for Constant {
    fn default() -> Self {
        Self {
            message: BitString::zeros(1),
            decision: Decision::Connected,
        }
    }
}

impl SketchProtocol for Constant {
    fn name(&self) -> String {
        "constant".into()
    }

    fn max_bits(&self) -> usize {
        self.message.len()
    }

    fn encode(&self, _: &NodeView, _: &SharedRandomness) -> BitString {
        self.message.clone()
    }

    fn decode(&self, _: &[(NodeId, BitString)], _: &SharedRandomness) -> Result<Decision, ModelError> {
        Ok(self.decision)
    }
}

/// Two bits: `[degree >= k][distinct neighbors >= k]`. The referee declares
/// the graph k-edge connected iff every node reports `11`. That is a necessary
/// condition only, so the protocol is wrong on graphs with a sparse cut.
#[derive(Clone, Debug)]
pub struct MinDegree {
    pub k: usize,
}

impl SketchProtocol for MinDegree {
    fn name(&self) -> String {
        "min-degree".into()
    }

    fn max_bits(&self) -> usize {
        2
    }

    fn encode(&self, view: &NodeView, _: &SharedRandomness) -> BitString {
        BitString::from_bits([
            view.degree() >= self.k as u64,
            view.distinct_neighbors() >= self.k,
        ])
    }

    fn decode(
        &self,
        messages: &[(NodeId, BitString)],
        _: &SharedRandomness,
    ) -> Result<Decision, ModelError> {
        for (id, bits) in messages {
            if bits.len() != 2 {
                return Err(ModelError::Decode(format!("node {id}: expected 2 bits")));
            }
        }
        Ok(Decision::from_bool(
            messages.iter().all(|(_, b)| b.count_ones() == 2),
        ))
    }
}

/// One bit: parity of the multiplicity-weighted sum of neighbor ids.
#[derive(Clone, Debug, Default)]
pub struct Parity;

impl SketchProtocol for Parity {
    fn name(&self) -> String {
        "parity".into()
    }

    fn max_bits(&self) -> usize {
        1
    }

    fn encode(&self, view: &NodeView, _: &SharedRandomness) -> BitString {
        let sum: u64 = view
            .neighbors
            .iter()
            .map(|(&v, &m)| v as u64 * u64::from(m))
            .sum();
        BitString::from_bits([sum % 2 == 1])
    }

    fn decode(
        &self,
        messages: &[(NodeId, BitString)],
        _: &SharedRandomness,
    ) -> Result<Decision, ModelError> {
        // handshake-style check: an even number of odd reports
        let odd = messages.iter().filter(|(_, b)| b.get(0) == Some(true)).count();
        Ok(Decision::from_bool(odd % 2 == 0))
    }
}

/// The first `bits` bits of a 64-bit digest of the full view.
#[derive(Clone, Debug)]
pub struct HashTruncation {
    pub bits: usize,
}

impl HashTruncation {
    pub fn new(bits: usize) -> Self {
        assert!(bits <= 64, "digest has 64 bits");
        Self { bits }
    }

    pub fn digest(view: &NodeView) -> u64 {
        let mut h = splitmix64(view.id as u64 ^ (view.advice.code() << 56));
        for (&v, &m) in &view.neighbors {
            h = splitmix64(h ^ ((v as u64) << 20) ^ u64::from(m));
        }
        h
    }
}

impl SketchProtocol for HashTruncation {
    fn name(&self) -> String {
        format!("hash:{}", self.bits)
    }

    fn max_bits(&self) -> usize {
        self.bits
    }

    fn encode(&self, view: &NodeView, _: &SharedRandomness) -> BitString {
        let mut out = BitString::with_capacity(self.bits);
        out.push_uint(Self::digest(view) >> (64 - self.bits.max(1)), self.bits);
        out
    }

    fn decode(
        &self,
        messages: &[(NodeId, BitString)],
        _: &SharedRandomness,
    ) -> Result<Decision, ModelError> {
        let ones: usize = messages.iter().map(|(_, b)| b.count_ones()).sum();
        Ok(Decision::from_bool(ones % 2 == 0))
    }
}

/// Builds the named protocol for a graph on `n` nodes and parameter `k`.
///
/// Names: `full`, `constant`, `min-degree`, `parity`, `hash:<bits>`.
pub fn by_name(name: &str, n: usize, k: usize) -> Option<Box<dyn SketchProtocol>> {
    Some(match name {
        "full" => Box::new(FullInformation::new(n, k)),
        "constant" => Box::new(Constant::default()),
        "min-degree" | "toy" => Box::new(MinDegree { k }),
        "parity" => Box::new(Parity),
        other => {
            let bits: usize = other.strip_prefix("hash:")?.parse().ok()?;
            if bits > 64 {
                return None;
            }
            Box::new(HashTruncation::new(bits))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{execute, AdviceMap};

    #[test]
    fn full_information_two_nodes_with_k_parallel_edges() {
        let mut g = MultiGraph::new(2);
        g.add_edges(1, 2, 2).unwrap();
        let p = FullInformation::new(2, 2);
        let t = execute(&p, &g, &AdviceMap::new(), 2, &SharedRandomness::none()).unwrap();
        assert_eq!(t.decision, Decision::Connected);
        assert!(t.messages.iter().all(|(_, b)| b.len() == p.max_bits()));

        let p3 = FullInformation::new(2, 3);
        let t3 = execute(&p3, &g, &AdviceMap::new(), 3, &SharedRandomness::none()).unwrap();
        assert_eq!(t3.decision, Decision::NotConnected);
    }

    #[test]
    fn single_node_graph_yields_one_message() {
        let g = MultiGraph::new(1);
        for p in [
            by_name("full", 1, 2).unwrap(),
            by_name("constant", 1, 2).unwrap(),
            by_name("min-degree", 1, 2).unwrap(),
        ] {
            let t = execute(&p, &g, &AdviceMap::new(), 2, &SharedRandomness::none()).unwrap();
            assert_eq!(t.messages.len(), 1);
        }
    }

    #[test]
    fn oversized_multiplicity_overflows_budget() {
        let mut g = MultiGraph::new(2);
        g.add_edges(1, 2, 1 << 16).unwrap();
        let p = FullInformation::new(2, 1);
        let err = execute(&p, &g, &AdviceMap::new(), 1, &SharedRandomness::none()).unwrap_err();
        assert!(matches!(err, ModelError::EncodingOverflow { node: 1, .. }));
    }

    #[test]
    fn hash_truncation_has_exact_width() {
        let mut g = MultiGraph::new(3);
        g.add_edge(1, 2).unwrap();
        for bits in [0, 1, 2, 7, 64] {
            let p = HashTruncation::new(bits);
            let t = execute(&p, &g, &AdviceMap::new(), 1, &SharedRandomness::none()).unwrap();
            assert!(t.messages.iter().all(|(_, b)| b.len() == bits));
        }
    }

    #[test]
    fn by_name_parses() {
        assert_eq!(by_name("hash:3", 4, 2).unwrap().max_bits(), 3);
        assert!(by_name("hash:99", 4, 2).is_none());
        assert!(by_name("nope", 4, 2).is_none());
    }
}
