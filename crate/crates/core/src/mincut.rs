//! Exact global minimum cut for multigraphs (Stoer-Wagner with integer weights).

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{MultiGraph, NodeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MinCutError {
    #[error("minimum cut needs at least two nodes, graph has {0}")]
    TooSmall(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutResult {
    /// Total multiplicity crossing the cut.
    pub value: u64,
    /// One shore of the cut; nonempty and proper.
    pub side: BTreeSet<NodeId>,
}

/// Global minimum cut. Disconnected graphs return value 0 with the component
/// of node 1 as the side.
pub fn global_min_cut(graph: &MultiGraph) -> Result<CutResult, MinCutError> {
    let n = graph.node_count();
    if n < 2 {
        return Err(MinCutError::TooSmall(n));
    }
    let comps = graph.components();
    if comps.len() > 1 {
        return Ok(CutResult {
            value: 0,
            side: comps[0].iter().copied().collect(),
        });
    }

    let mut w = vec![vec![0u64; n]; n];
    for (u, v, m) in graph.edges() {
        w[u - 1][v - 1] += u64::from(m);
        w[v - 1][u - 1] += u64::from(m);
    }
    // groups[i]: original nodes merged into super-node i
    let mut groups: Vec<Vec<NodeId>> = (1..=n).map(|v| vec![v]).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut best: Option<(u64, Vec<NodeId>)> = None;

    while active.len() > 1 {
        let mut in_a = vec![false; n];
        let mut key = vec![0u64; n];
        let mut prev = active[0];
        let mut last = active[0];
        for step in 0..active.len() {
            let pick = *active
                .iter()
                .filter(|&&v| !in_a[v])
                .max_by(|&&x, &&y| key[x].cmp(&key[y]).then(y.cmp(&x)))
                .expect("unvisited node");
            in_a[pick] = true;
            if step == active.len() - 1 {
                if best.as_ref().map_or(true, |(b, _)| key[pick] < *b) {
                    best = Some((key[pick], groups[pick].clone()));
                }
                last = pick;
            } else {
                prev = pick;
                for &v in &active {
                    if !in_a[v] {
                        key[v] += w[pick][v];
                    }
                }
            }
        }
        // merge `last` into `prev`
        let moved = std::mem::take(&mut groups[last]);
        groups[prev].extend(moved);
        for &v in &active {
            if v != last && v != prev {
                w[prev][v] += w[last][v];
                w[v][prev] = w[prev][v];
            }
        }
        active.retain(|&v| v != last);
    }

    let (value, side) = best.expect("n >= 2 yields at least one phase");
    Ok(CutResult {
        value,
        side: side.into_iter().collect(),
    })
}

pub fn is_k_edge_connected(graph: &MultiGraph, k: u64) -> Result<bool, MinCutError> {
    Ok(global_min_cut(graph)?.value >= k)
}
