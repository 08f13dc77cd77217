//! The lower-bound graph family on `V ∪ W ∪ {u_A, u_B}`.
//!
//! Canonical id layout for `n` nodes: `V = 1..=|V|`, then `W`, then
//! `u_A = n - 1` and `u_B = n`, with `|W| = ⌊√n⌋` and `|V| = n - |W| - 2`.
//! The `{A, B}` split of `W` is free; generators put `A` first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mincut::{self, MinCutError};
use crate::model::{Advice, AdviceMap, MultiGraph, NodeId, NodeView};

pub const DEFAULT_GAMMA: f64 = 0.5;

/// Which construction rule a spec violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rule {
    /// `|V| = n - ⌊√n⌋ - 2`, `|W| = ⌊√n⌋`, `|V| >= 1`.
    Sizes,
    /// `2 <= k <= γ√n`.
    KRange,
    /// `A ∪ B = W`, disjoint, each of size at least `k`.
    Partition,
    /// Every V-node other than σ carries exactly one restriction; σ is in V.
    Roles,
    /// A-restricted W-neighborhood must lie inside `A`.
    E3,
    /// B-restricted W-neighborhood must be a nonempty subset of `B`.
    E4,
    /// σ must have exactly `2k - 1` W-edges so exactly one of C0/C1 holds.
    Condition,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::Sizes => "sizes",
            Rule::KRange => "k-range",
            Rule::Partition => "partition",
            Rule::Roles => "roles",
            Rule::E3 => "E3",
            Rule::E4 => "E4",
            Rule::Condition => "C0/C1",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LbGraphError {
    #[error("spec violates {rule}: {detail}")]
    Spec { rule: Rule, detail: String },
    #[error(transparent)]
    MinCut(#[from] MinCutError),
}

fn spec_err(rule: Rule, detail: impl Into<String>) -> LbGraphError {
    LbGraphError::Spec {
        rule,
        detail: detail.into(),
    }
}

/// Integer square root.
pub fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub v_count: usize,
    pub w_count: usize,
}

impl Layout {
    pub fn new(n: usize) -> Result<Self, LbGraphError> {
        let w_count = isqrt(n);
        let v_count = n
            .checked_sub(w_count + 2)
            .filter(|&v| v >= 1)
            .ok_or_else(|| spec_err(Rule::Sizes, format!("n = {n} leaves no room for V")))?;
        Ok(Self {
            n,
            v_count,
            w_count,
        })
    }

    pub fn v_nodes(&self) -> std::ops::RangeInclusive<NodeId> {
        1..=self.v_count
    }

    pub fn w_nodes(&self) -> std::ops::RangeInclusive<NodeId> {
        self.v_count + 1..=self.v_count + self.w_count
    }

    pub fn is_v(&self, id: NodeId) -> bool {
        (1..=self.v_count).contains(&id)
    }

    pub fn is_w(&self, id: NodeId) -> bool {
        self.w_nodes().contains(&id)
    }

    pub fn u_a(&self) -> NodeId {
        self.n - 1
    }

    pub fn u_b(&self) -> NodeId {
        self.n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Restriction {
    ARestricted,
    BRestricted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    C0,
    C1,
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

/// Symbolic description of one member of the family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LbGraphSpec {
    pub n: usize,
    pub k: usize,
    /// Node id of v_σ (an element of `V`).
    pub sigma: NodeId,
    pub a: BTreeSet<NodeId>,
    pub b: BTreeSet<NodeId>,
    /// Role of every V-node except σ.
    pub restrictions: BTreeMap<NodeId, Restriction>,
    /// W-neighborhood per V-node; absent means empty.
    pub w_neighbors: BTreeMap<NodeId, BTreeSet<NodeId>>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Accept B-restricted nodes without W-edges. The three-party simulation
    /// produces these when `S_0 ∩ B` is empty; connectivity is unaffected.
    #[serde(default)]
    pub allow_empty_b_restricted: bool,
}

impl LbGraphSpec {
    pub fn layout(&self) -> Result<Layout, LbGraphError> {
        Layout::new(self.n)
    }

    pub fn sigma_neighbors(&self) -> BTreeSet<NodeId> {
        self.w_neighbors.get(&self.sigma).cloned().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<Layout, LbGraphError> {
        let layout = self.layout()?;
        let k = self.k;
        if k < 2 || (k as f64) > self.gamma * (self.n as f64).sqrt() + 1e-9 {
            return Err(spec_err(
                Rule::KRange,
                format!("need 2 <= k <= {}·√{}, got k = {k}", self.gamma, self.n),
            ));
        }
        if !self.a.is_disjoint(&self.b) {
            return Err(spec_err(Rule::Partition, "A and B overlap"));
        }
        let w: BTreeSet<NodeId> = layout.w_nodes().collect();
        let union: BTreeSet<NodeId> = self.a.union(&self.b).copied().collect();
        if union != w {
            return Err(spec_err(Rule::Partition, "A ∪ B must equal W"));
        }
        if self.a.len() < k || self.b.len() < k {
            return Err(spec_err(
                Rule::Partition,
                format!("|A| = {}, |B| = {}, both must be >= k = {k}", self.a.len(), self.b.len()),
            ));
        }
        if !layout.is_v(self.sigma) {
            return Err(spec_err(Rule::Roles, format!("σ = {} is not in V", self.sigma)));
        }
        if self.restrictions.contains_key(&self.sigma) {
            return Err(spec_err(Rule::Roles, "σ must not carry a restriction"));
        }
        for v in layout.v_nodes().filter(|&v| v != self.sigma) {
            if !self.restrictions.contains_key(&v) {
                return Err(spec_err(Rule::Roles, format!("node {v} has no role")));
            }
        }
        if let Some((&v, _)) = self.restrictions.iter().find(|(&v, _)| !layout.is_v(v)) {
            return Err(spec_err(Rule::Roles, format!("restriction on non-V node {v}")));
        }
        for (&v, nb) in &self.w_neighbors {
            if !layout.is_v(v) {
                return Err(spec_err(Rule::Roles, format!("W-neighborhood on non-V node {v}")));
            }
            if !nb.is_subset(&w) {
                return Err(spec_err(Rule::Roles, format!("node {v} has neighbors outside W")));
            }
            match self.restrictions.get(&v) {
                Some(Restriction::ARestricted) if !nb.is_subset(&self.a) => {
                    return Err(spec_err(Rule::E3, format!("A-restricted node {v} has edges into B")));
                }
                Some(Restriction::BRestricted) if !nb.is_subset(&self.b) => {
                    return Err(spec_err(Rule::E4, format!("B-restricted node {v} has edges into A")));
                }
                _ => {}
            }
        }
        if !self.allow_empty_b_restricted {
            for (&v, r) in &self.restrictions {
                if *r == Restriction::BRestricted
                    && self.w_neighbors.get(&v).map_or(true, |s| s.is_empty())
                {
                    return Err(spec_err(
                        Rule::E4,
                        format!("B-restricted node {v} needs at least one edge into B"),
                    ));
                }
            }
        }
        let sd = self.sigma_neighbors().len();
        if sd != 2 * k - 1 {
            return Err(spec_err(
                Rule::Condition,
                format!("σ has {sd} W-edges, expected 2k - 1 = {}", 2 * k - 1),
            ));
        }
        Ok(layout)
    }

    /// C1 iff σ has at least `k` edges into `B`.
    pub fn condition(&self) -> Condition {
        let into_b = self.sigma_neighbors().intersection(&self.b).count();
        if into_b >= self.k {
            Condition::C1
        } else {
            Condition::C0
        }
    }

    pub fn advice(&self) -> AdviceMap {
        let mut advice: AdviceMap = self
            .restrictions
            .iter()
            .map(|(&v, r)| {
                let a = match r {
                    Restriction::ARestricted => Advice::ARestricted,
                    Restriction::BRestricted => Advice::BRestricted,
                };
                (v, a)
            })
            .collect();
        advice.insert(self.sigma, Advice::Sigma);
        advice
    }

    /// Builds the multigraph and the V-node advice.
    pub fn build(&self) -> Result<(MultiGraph, AdviceMap), LbGraphError> {
        let layout = self.validate()?;
        let k = self.k as u32;
        let mut g = MultiGraph::new(self.n);
        let add = |g: &mut MultiGraph, u, v, m| g.add_edges(u, v, m).expect("layout ids are valid");
        for part in [&self.a, &self.b] {
            for (&x, &y) in part.iter().tuple_combinations() {
                add(&mut g, x, y, 1);
            }
        }
        for &w in &self.a {
            add(&mut g, layout.u_a(), w, 1);
        }
        for &w in &self.b {
            add(&mut g, layout.u_b(), w, 1);
        }
        for (&v, nb) in &self.w_neighbors {
            for &w in nb {
                add(&mut g, v, w, 1);
            }
        }
        for v in layout.v_nodes() {
            let hub = match self.restrictions.get(&v) {
                Some(Restriction::BRestricted) => layout.u_b(),
                _ => layout.u_a(),
            };
            add(&mut g, v, hub, k);
        }
        Ok((g, self.advice()))
    }
}

pub fn condition_of(spec: &LbGraphSpec) -> Condition {
    spec.condition()
}

pub fn build_lb_graph(spec: &LbGraphSpec) -> Result<(MultiGraph, AdviceMap), LbGraphError> {
    spec.build()
}

/// Oracle check of the equivalence "k-edge connected iff C1".
pub fn verify_lemma_lb(spec: &LbGraphSpec) -> Result<bool, LbGraphError> {
    let (g, _) = spec.build()?;
    let connected = mincut::is_k_edge_connected(&g, spec.k as u64)?;
    Ok(connected == (spec.condition() == Condition::C1))
}

/// View of a V-node in a given role with W-neighborhood `w_set`: each W
/// neighbor once plus `k` parallel edges to its hub (`u_B` for B-restricted,
/// `u_A` otherwise).
pub fn role_view(
    layout: &Layout,
    node: NodeId,
    role: Advice,
    w_set: &[NodeId],
    k: usize,
) -> NodeView {
    let hub = if role == Advice::BRestricted {
        layout.u_b()
    } else {
        layout.u_a()
    };
    let mut neighbors: BTreeMap<NodeId, u32> = w_set.iter().map(|&w| (w, 1)).collect();
    neighbors.insert(hub, k as u32);
    NodeView {
        id: node,
        neighbors,
        advice: role,
        n: layout.n,
        k,
    }
}

/// `A` = the first `a_size` ids of `W`, `B` = the rest.
pub fn canonical_partition(layout: &Layout, a_size: usize) -> (BTreeSet<NodeId>, BTreeSet<NodeId>) {
    let w: Vec<NodeId> = layout.w_nodes().collect();
    let (a, b) = w.split_at(a_size.min(w.len()));
    (a.iter().copied().collect(), b.iter().copied().collect())
}

/// Uniform split of `ground` into two sides, resampled until both have at least `k` elements.
pub fn random_partition<R: Rng>(
    ground: &[NodeId],
    k: usize,
    rng: &mut R,
) -> Option<(BTreeSet<NodeId>, BTreeSet<NodeId>)> {
    if ground.len() < 2 * k {
        return None;
    }
    loop {
        let (a, b): (Vec<NodeId>, Vec<NodeId>) = ground.iter().partition(|_| rng.gen_bool(0.5));
        if a.len() >= k && b.len() >= k {
            return Some((a.into_iter().collect(), b.into_iter().collect()));
        }
    }
}

/// Random member of the family with the given partition and σ-neighborhood.
pub fn random_spec_with<R: Rng>(
    n: usize,
    k: usize,
    a: BTreeSet<NodeId>,
    b: BTreeSet<NodeId>,
    sigma: NodeId,
    sigma_neighbors: BTreeSet<NodeId>,
    rng: &mut R,
) -> Result<LbGraphSpec, LbGraphError> {
    let layout = Layout::new(n)?;
    let a_vec: Vec<NodeId> = a.iter().copied().collect();
    let b_vec: Vec<NodeId> = b.iter().copied().collect();
    let mut restrictions = BTreeMap::new();
    let mut w_neighbors = BTreeMap::new();
    w_neighbors.insert(sigma, sigma_neighbors);
    for v in layout.v_nodes().filter(|&v| v != sigma) {
        if rng.gen_bool(0.5) {
            restrictions.insert(v, Restriction::ARestricted);
            let size = rng.gen_range(0..=a_vec.len());
            let nb: BTreeSet<NodeId> = a_vec.choose_multiple(rng, size).copied().collect();
            if !nb.is_empty() {
                w_neighbors.insert(v, nb);
            }
        } else {
            restrictions.insert(v, Restriction::BRestricted);
            let size = rng.gen_range(1..=b_vec.len());
            w_neighbors.insert(v, b_vec.choose_multiple(rng, size).copied().collect());
        }
    }
    let spec = LbGraphSpec {
        n,
        k,
        sigma,
        a,
        b,
        restrictions,
        w_neighbors,
        gamma: DEFAULT_GAMMA,
        allow_empty_b_restricted: false,
    };
    spec.validate()?;
    Ok(spec)
}

/// Fully random member: random partition, σ, σ-neighborhood, and roles.
pub fn random_spec<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<LbGraphSpec, LbGraphError> {
    let layout = Layout::new(n)?;
    let w: Vec<NodeId> = layout.w_nodes().collect();
    let (a, b) = random_partition(&w, k, rng)
        .ok_or_else(|| spec_err(Rule::Partition, format!("|W| = {} < 2k", w.len())))?;
    let sigma = rng.gen_range(1..=layout.v_count);
    let sn: BTreeSet<NodeId> = w.choose_multiple(rng, 2 * k - 1).copied().collect();
    random_spec_with(n, k, a, b, sigma, sn, rng)
}

/// All `(2k-1)`-subsets of `W`, in lexicographic order.
pub fn sigma_neighborhoods(layout: &Layout, k: usize) -> impl Iterator<Item = BTreeSet<NodeId>> {
    layout
        .w_nodes()
        .combinations(2 * k - 1)
        .map(|c| c.into_iter().collect())
}

/// Every split of `W` with both sides of size at least `k`, each paired with
/// every σ-neighborhood. σ is node 1; the remaining roles are drawn from `seed`.
pub fn exhaustive_specs(n: usize, k: usize, seed: u64) -> Result<Vec<LbGraphSpec>, LbGraphError> {
    let layout = Layout::new(n)?;
    let w: Vec<NodeId> = layout.w_nodes().collect();
    if w.len() >= 63 {
        return Err(spec_err(Rule::Sizes, format!("|W| = {} too large to enumerate", w.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for mask in 0u64..1 << w.len() {
        let (a, b): (Vec<NodeId>, Vec<NodeId>) =
            w.iter().enumerate().partition_map(|(i, &x)| {
                if mask >> i & 1 == 1 {
                    itertools::Either::Left(x)
                } else {
                    itertools::Either::Right(x)
                }
            });
        if a.len() < k || b.len() < k {
            continue;
        }
        let (a, b): (BTreeSet<NodeId>, BTreeSet<NodeId>) = (a.into_iter().collect(), b.into_iter().collect());
        for sn in sigma_neighborhoods(&layout, k) {
            out.push(random_spec_with(n, k, a.clone(), b.clone(), 1, sn, &mut rng)?);
        }
    }
    Ok(out)
}

/// `count` independent [`random_spec`] draws from `seed`.
pub fn random_specs(n: usize, k: usize, count: usize, seed: u64) -> Result<Vec<LbGraphSpec>, LbGraphError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_spec(n, k, &mut rng)).collect()
}

/// Outcome of checking "k-edge connected iff C1" over many specs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceSweep {
    pub checked: usize,
    pub held: usize,
    pub c1: usize,
    /// Index of the first spec where the equivalence failed.
    pub first_failure: Option<usize>,
}

pub fn sweep_equivalence(specs: &[LbGraphSpec]) -> Result<EquivalenceSweep, LbGraphError> {
    let results: Vec<bool> = specs.par_iter().map(verify_lemma_lb).collect::<Result<_, _>>()?;
    Ok(EquivalenceSweep {
        checked: specs.len(),
        held: results.iter().filter(|&&r| r).count(),
        c1: specs.iter().filter(|s| s.condition() == Condition::C1).count(),
        first_failure: results.iter().position(|&r| !r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[NodeId]) -> BTreeSet<NodeId> {
        ids.iter().copied().collect()
    }

    /// n = 49: |W| = 7 (ids 41..=47), |V| = 40, u_A = 48, u_B = 49.
    fn spec49(sigma_nb: &[NodeId]) -> LbGraphSpec {
        let layout = Layout::new(49).unwrap();
        let (a, b) = canonical_partition(&layout, 4);
        let mut restrictions = BTreeMap::new();
        let mut w_neighbors = BTreeMap::new();
        for v in layout.v_nodes().filter(|&v| v != 1) {
            if v % 2 == 0 {
                restrictions.insert(v, Restriction::ARestricted);
                if v % 4 == 0 {
                    w_neighbors.insert(v, set(&[41, 42]));
                }
            } else {
                restrictions.insert(v, Restriction::BRestricted);
                w_neighbors.insert(v, set(&[45 + v % 3]));
            }
        }
        w_neighbors.insert(1, set(sigma_nb));
        LbGraphSpec {
            n: 49,
            k: 3,
            sigma: 1,
            a,
            b,
            restrictions,
            w_neighbors,
            gamma: DEFAULT_GAMMA,
            allow_empty_b_restricted: false,
        }
    }

    #[test]
    fn layout_sizes() {
        let l = Layout::new(49).unwrap();
        assert_eq!((l.v_count, l.w_count, l.u_a(), l.u_b()), (40, 7, 48, 49));
        assert_eq!(l.w_nodes(), 41..=47);
        assert!(Layout::new(3).is_err());
        assert_eq!(isqrt(48), 6);
        assert_eq!(isqrt(49), 7);
    }

    #[test]
    fn c0_instance_is_not_k_connected() {
        // 3 edges into A = {41..44}, 2 into B = {45,46,47}
        let spec = spec49(&[41, 42, 43, 45, 46]);
        assert_eq!(spec.condition(), Condition::C0);
        let (g, _) = spec.build().unwrap();
        assert!(!mincut::is_k_edge_connected(&g, 3).unwrap());
        assert!(verify_lemma_lb(&spec).unwrap());
    }

    #[test]
    fn c1_instance_is_k_connected() {
        let spec = spec49(&[41, 42, 45, 46, 47]);
        assert_eq!(spec.condition(), Condition::C1);
        let (g, _) = spec.build().unwrap();
        assert!(mincut::is_k_edge_connected(&g, 3).unwrap());
        assert!(verify_lemma_lb(&spec).unwrap());
    }

    #[test]
    fn condition_examples() {
        assert_eq!(spec49(&[41, 42, 43, 45, 46]).condition(), Condition::C0);
        assert_eq!(spec49(&[41, 42, 45, 46, 47]).condition(), Condition::C1);
        // k = 2, |S∩A| = 2, |S∩B| = 1
        let layout = Layout::new(36).unwrap();
        let (a, b) = canonical_partition(&layout, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spec = random_spec_with(36, 2, a, b, 5, set(&[29, 30, 32]), &mut rng).unwrap();
        assert_eq!(spec.condition(), Condition::C0);
    }

    #[test]
    fn a_restricted_without_w_edges_is_valid() {
        let mut spec = spec49(&[41, 42, 45, 46, 47]);
        spec.w_neighbors.remove(&4);
        let (g, advice) = spec.build().unwrap();
        let nb = g.neighborhood(4).unwrap();
        assert_eq!(nb.len(), 1);
        assert_eq!(nb.get(&48), Some(&3));
        assert_eq!(advice[&4], Advice::ARestricted);
    }

    #[test]
    fn spec_errors_name_the_rule() {
        let rule_of = |s: &LbGraphSpec| match s.validate() {
            Err(LbGraphError::Spec { rule, .. }) => Some(rule),
            _ => None,
        };
        let base = spec49(&[41, 42, 45, 46, 47]);

        let mut s = base.clone();
        s.w_neighbors.insert(2, set(&[41, 45]));
        assert_eq!(rule_of(&s), Some(Rule::E3));

        let mut s = base.clone();
        s.w_neighbors.insert(3, set(&[41]));
        assert_eq!(rule_of(&s), Some(Rule::E4));

        let mut s = base.clone();
        s.w_neighbors.remove(&3);
        assert_eq!(rule_of(&s), Some(Rule::E4));
        s.allow_empty_b_restricted = true;
        assert_eq!(rule_of(&s), None);

        let mut s = base.clone();
        s.w_neighbors.insert(1, set(&[41, 42, 45, 46]));
        assert_eq!(rule_of(&s), Some(Rule::Condition));

        let mut s = base.clone();
        s.k = 4;
        assert_eq!(rule_of(&s), Some(Rule::KRange));

        let mut s = base.clone();
        let moved = *s.b.iter().next().unwrap();
        s.b.remove(&moved);
        assert_eq!(rule_of(&s), Some(Rule::Partition));

        let mut s = base.clone();
        s.restrictions.remove(&7);
        assert_eq!(rule_of(&s), Some(Rule::Roles));

        let mut s = base;
        s.n = 50;
        assert!(s.validate().is_err());
    }

    #[test]
    fn degree_accounting() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let spec = random_spec(64, 3, &mut rng).unwrap();
            let layout = spec.layout().unwrap();
            let (g, advice) = spec.build().unwrap();
            let k = spec.k as u64;
            let a_restricted = spec
                .restrictions
                .values()
                .filter(|r| **r == Restriction::ARestricted)
                .count() as u64;
            let b_restricted = spec.restrictions.len() as u64 - a_restricted;
            assert_eq!(g.degree(layout.u_a()), spec.a.len() as u64 + k * (a_restricted + 1));
            assert_eq!(g.degree(layout.u_b()), spec.b.len() as u64 + k * b_restricted);
            // roles are consistent with edges
            for v in layout.v_nodes() {
                let nb = g.neighborhood(v).unwrap();
                let into_a = nb.keys().filter(|w| spec.a.contains(w)).count();
                let into_b = nb.keys().filter(|w| spec.b.contains(w)).count();
                match advice[&v] {
                    Advice::Sigma => {
                        assert_eq!(into_a + into_b, 2 * spec.k - 1);
                        assert_eq!(nb.get(&layout.u_a()), Some(&3));
                    }
                    Advice::ARestricted => {
                        assert_eq!(into_b, 0);
                        assert_eq!(nb.get(&layout.u_a()), Some(&3));
                    }
                    Advice::BRestricted => {
                        assert_eq!(into_a, 0);
                        assert!(into_b >= 1);
                        assert_eq!(nb.get(&layout.u_b()), Some(&3));
                    }
                    Advice::None => panic!("V-node without role"),
                }
            }
        }
    }

    #[test]
    fn u_a_neighborhood_matches_rules() {
        let spec = spec49(&[41, 42, 45, 46, 47]);
        let layout = spec.layout().unwrap();
        let (g, _) = spec.build().unwrap();
        let nb = g.neighborhood(layout.u_a()).unwrap();
        for (&v, &m) in nb {
            if spec.a.contains(&v) {
                assert_eq!(m, 1);
            } else {
                assert!(layout.is_v(v));
                assert_eq!(m, 3);
                assert!(v == spec.sigma || spec.restrictions[&v] == Restriction::ARestricted);
            }
        }
        assert_eq!(nb.keys().filter(|v| spec.a.contains(v)).count(), 4);
    }

    #[test]
    fn small_exhaustive_sweep_holds() {
        let specs = exhaustive_specs(36, 2, 7).unwrap();
        // 50 splits of |W| = 6 with both sides >= 2, times C(6, 3) neighborhoods
        assert_eq!(specs.len(), 50 * 20);
        let r = sweep_equivalence(&specs).unwrap();
        assert_eq!(r.held, r.checked);
        assert!(r.c1 > 0 && r.c1 < r.checked);
        assert_eq!(r.first_failure, None);
    }
}
