//! The unique-overlap promise problem and one-way protocols for it.
//!
//! Alice holds `X`, Bob holds `Y`, both ternary vectors of length `m` with
//! exactly `s` non-`*` entries. A valid instance has exactly one index `σ`
//! where both are defined, and there they differ. Charlie, who knows only
//! the two supports and one message from each party, must say whether
//! `(X_σ, Y_σ) = (0, 1)`.
//!
//! [`BlockProtocol`] solves this with `s - 1` bits per party when `s > ⌈m/3⌉`:
//! each party drops one bit of its support, chosen so that the two dropped
//! positions never both land on `σ`. [`attack`] searches a protocol's
//! message collisions for two instances Charlie cannot tell apart.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bits::BitString;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Trit {
    Zero,
    One,
    Bot,
}

impl Trit {
    pub fn bit(self) -> Option<bool> {
        match self {
            Trit::Zero => Some(false),
            Trit::One => Some(true),
            Trit::Bot => None,
        }
    }

    pub fn from_bit(b: bool) -> Self {
        if b {
            Trit::One
        } else {
            Trit::Zero
        }
    }

    fn symbol(self) -> char {
        match self {
            Trit::Zero => '0',
            Trit::One => '1',
            Trit::Bot => '*',
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid ternary character {0:?}; expected '0', '1' or '*'")]
pub struct ParseTritError(pub char);

/// Ternary vector, indexed `1..=m`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TernaryVector(Vec<Trit>);

impl TernaryVector {
    pub fn bottom(m: usize) -> Self {
        Self(vec![Trit::Bot; m])
    }

    /// Vector defined exactly on `support` (ascending), whose entries are the
    /// bits of `value` read most-significant first.
    pub fn from_support(m: usize, support: &[usize], value: u64) -> Self {
        let mut v = Self::bottom(m);
        let s = support.len();
        for (j, &i) in support.iter().enumerate() {
            v.0[i - 1] = Trit::from_bit((value >> (s - 1 - j)) & 1 == 1);
        }
        v
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entry at 1-based index `i`.
    pub fn get(&self, i: usize) -> Trit {
        self.0[i - 1]
    }

    pub fn set(&mut self, i: usize, t: Trit) {
        self.0[i - 1] = t;
    }

    pub fn support(&self) -> Vec<usize> {
        (1..=self.len()).filter(|&i| self.get(i) != Trit::Bot).collect()
    }

    /// Defined entries in ascending index order.
    pub fn support_bits(&self) -> BitString {
        BitString::from_bits(self.0.iter().filter_map(|t| t.bit()))
    }
}

impl fmt::Display for TernaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.0 {
            write!(f, "{}", t.symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for TernaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TernaryVector({self})")
    }
}

impl FromStr for TernaryVector {
    type Err = ParseTritError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(Trit::Zero),
                '1' => Ok(Trit::One),
                '*' => Ok(Trit::Bot),
                other => Err(ParseTritError(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

impl Serialize for TernaryVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TernaryVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Property {
    /// Vector lengths equal `m`.
    Length,
    /// Both supports have size `s`.
    SupportSize,
    /// `s ≤ ⌈m/2⌉`.
    SupportBound,
    /// Exactly one index where the parties disagree.
    P1,
    /// No other index defined on both sides.
    P2,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Property::Length => "length",
            Property::SupportSize => "support-size",
            Property::SupportBound => "support-bound",
            Property::P1 => "P1",
            Property::P2 => "P2",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OverlapError {
    #[error("invalid instance ({property}): {detail}")]
    InvalidInstance { property: Property, detail: String },
    #[error("block construction needs s > ⌈m/3⌉ (m = {m}, s = {s})")]
    HypothesisViolated { m: usize, s: usize },
    #[error("both parties dropped the overlap index {sigma}")]
    BlockPropertyViolated { sigma: usize },
    #[error("malformed message: {0}")]
    Decode(String),
}

fn invalid(property: Property, detail: impl Into<String>) -> OverlapError {
    OverlapError::InvalidInstance {
        property,
        detail: detail.into(),
    }
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// The overlap index of two supports, if they share exactly one element.
pub fn unique_common(a: &[usize], b: &[usize]) -> Option<usize> {
    let mut common = a.iter().filter(|i| b.binary_search(i).is_ok());
    let first = *common.next()?;
    common.next().is_none().then_some(first)
}

/// Checks the promise and returns `σ`.
pub fn validate_instance(
    x: &TernaryVector,
    y: &TernaryVector,
    m: usize,
    s: usize,
) -> Result<usize, OverlapError> {
    if x.len() != m || y.len() != m {
        return Err(invalid(
            Property::Length,
            format!("lengths {} and {}, expected {m}", x.len(), y.len()),
        ));
    }
    let (sx, sy) = (x.support(), y.support());
    if sx.len() != s || sy.len() != s {
        return Err(invalid(
            Property::SupportSize,
            format!("support sizes {} and {}, expected {s}", sx.len(), sy.len()),
        ));
    }
    if s > ceil_div(m, 2) {
        return Err(invalid(
            Property::SupportBound,
            format!("s = {s} exceeds ⌈{m}/2⌉"),
        ));
    }
    let common: Vec<usize> = sx.iter().copied().filter(|i| sy.contains(i)).collect();
    match common.as_slice() {
        [] => Err(invalid(Property::P1, "supports are disjoint")),
        [sigma] => {
            if x.get(*sigma) == y.get(*sigma) {
                Err(invalid(
                    Property::P1,
                    format!("X and Y agree at the overlap index {sigma}"),
                ))
            } else {
                Ok(*sigma)
            }
        }
        more => Err(invalid(
            Property::P2,
            format!("supports share indices {more:?}"),
        )),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Yes,
    No,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "yes",
            Answer::No => "no",
        })
    }
}

/// A validated instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverlapInstance {
    pub x: TernaryVector,
    pub y: TernaryVector,
    pub s: usize,
    pub sigma: usize,
}

impl OverlapInstance {
    pub fn new(x: TernaryVector, y: TernaryVector, s: usize) -> Result<Self, OverlapError> {
        let sigma = validate_instance(&x, &y, x.len(), s)?;
        Ok(Self { x, y, s, sigma })
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }

    pub fn answer(&self) -> Answer {
        answer(self)
    }

    pub fn to_file(&self) -> InstanceFile {
        InstanceFile {
            m: self.m(),
            s: self.s,
            x: self.x.clone(),
            y: self.y.clone(),
        }
    }
}

pub fn answer(instance: &OverlapInstance) -> Answer {
    if instance.x.get(instance.sigma) == Trit::Zero {
        Answer::Yes
    } else {
        Answer::No
    }
}

/// On-disk instance format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub m: usize,
    pub s: usize,
    #[serde(rename = "X")]
    pub x: TernaryVector,
    #[serde(rename = "Y")]
    pub y: TernaryVector,
}

impl InstanceFile {
    pub fn validate(self) -> Result<OverlapInstance, OverlapError> {
        let sigma = validate_instance(&self.x, &self.y, self.m, self.s)?;
        Ok(OverlapInstance {
            x: self.x,
            y: self.y,
            s: self.s,
            sigma,
        })
    }
}

/// `[m]` cut into intervals `[1..3], [4..6], …` with a successor map `Φ`
/// that cycles inside each interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclePartition {
    pub m: usize,
}

impl CyclePartition {
    pub fn new(m: usize) -> Self {
        assert!(m >= 2, "Φ needs at least two indices");
        Self { m }
    }

    pub fn intervals(&self) -> Vec<Vec<usize>> {
        (1..=self.m)
            .chunks(3)
            .into_iter()
            .map(|c| c.collect())
            .collect()
    }

    pub fn interval_count(&self) -> usize {
        ceil_div(self.m, 3)
    }

    /// Successor of `b`; a length-1 tail interval maps to index 1.
    pub fn phi(&self, b: usize) -> usize {
        assert!((1..=self.m).contains(&b));
        let start = 3 * ((b - 1) / 3) + 1;
        match (self.m - start + 1).min(3) {
            3 => start + (b - start + 1) % 3,
            2 => 2 * start + 1 - b,
            _ => 1,
        }
    }
}

/// Assignment of every `s`-subset `I` of `[m]` to the smallest `i ∈ I` with
/// `Φ(i) ∈ I`. Two subsets meeting in one index are never assigned the same
/// index, because that would put both `i` and `Φ(i)` in their intersection.
#[derive(Clone, Debug)]
pub struct Blocks {
    pub m: usize,
    pub s: usize,
    pub partition: CyclePartition,
    pub assignment: BTreeMap<Vec<usize>, usize>,
}

impl Blocks {
    pub fn index_for(&self, support: &[usize]) -> Option<usize> {
        self.assignment.get(support).copied()
    }

    /// Number of subsets assigned to each index.
    pub fn block_sizes(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for &i in self.assignment.values() {
            *out.entry(i).or_default() += 1;
        }
        out
    }

    /// Exhaustively confirms that subsets meeting in exactly one index have
    /// different assigned indices; returns the first offending pair.
    pub fn check_single_overlap_property(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        let subsets: Vec<&Vec<usize>> = self.assignment.keys().collect();
        subsets.par_iter().find_map_first(|&a| {
            let ia = self.assignment[a];
            subsets.iter().find_map(|&b| {
                (unique_common(a, b).is_some() && self.assignment[b] == ia)
                    .then(|| (a.clone(), b.clone()))
            })
        })
    }
}

pub fn build_blocks(m: usize, s: usize) -> Result<Blocks, OverlapError> {
    if m < 2 || s <= ceil_div(m, 3) || s > m {
        return Err(OverlapError::HypothesisViolated { m, s });
    }
    let partition = CyclePartition::new(m);
    let mut assignment = BTreeMap::new();
    for subset in (1..=m).combinations(s) {
        let i = subset
            .iter()
            .copied()
            .find(|&i| subset.binary_search(&partition.phi(i)).is_ok())
            .expect("pigeonhole: some interval holds two indices of the subset");
        assignment.insert(subset, i);
    }
    Ok(Blocks {
        m,
        s,
        partition,
        assignment,
    })
}

/// Support bits of `v` with the bit at the assigned index removed.
pub fn appb_encode(v: &TernaryVector, blocks: &Blocks) -> BitString {
    let support = v.support();
    let i = blocks
        .index_for(&support)
        .expect("support size matches the block construction");
    let pos = support.binary_search(&i).expect("assigned index lies in the support");
    v.support_bits().without(pos)
}

/// Reads the entry at `sigma` from a message that dropped `dropped`.
fn read_kept(support: &[usize], dropped: usize, sigma: usize, msg: &BitString) -> Option<bool> {
    let rank = support.binary_search(&sigma).ok()?;
    let drop_rank = support.binary_search(&dropped).ok()?;
    msg.get(if rank > drop_rank { rank - 1 } else { rank })
}

pub fn appb_decode(
    supp_x: &[usize],
    supp_y: &[usize],
    msg_a: &BitString,
    msg_b: &BitString,
    blocks: &Blocks,
) -> Result<Answer, OverlapError> {
    let s = blocks.s;
    if msg_a.len() != s - 1 || msg_b.len() != s - 1 {
        return Err(OverlapError::Decode(format!(
            "expected {} bits from each party, got {} and {}",
            s - 1,
            msg_a.len(),
            msg_b.len()
        )));
    }
    let sigma = unique_common(supp_x, supp_y)
        .ok_or_else(|| invalid(Property::P2, "supports do not meet in exactly one index"))?;
    let missing = |supp: &[usize]| {
        blocks
            .index_for(supp)
            .ok_or_else(|| OverlapError::Decode(format!("support {supp:?} has no block")))
    };
    let (i_a, j_b) = (missing(supp_x)?, missing(supp_y)?);
    let x_sigma = if i_a != sigma {
        read_kept(supp_x, i_a, sigma, msg_a)
    } else if j_b != sigma {
        read_kept(supp_y, j_b, sigma, msg_b).map(|y| !y)
    } else {
        return Err(OverlapError::BlockPropertyViolated { sigma });
    }
    .expect("σ lies in both supports and the message length was checked");
    Ok(if x_sigma { Answer::No } else { Answer::Yes })
}

/// A simultaneous-message protocol: Alice and Bob each send one message that
/// depends only on their own vector; Charlie sees the supports and messages.
pub trait OneWayProtocol: Sync {
    fn name(&self) -> String;
    fn max_bits(&self) -> usize;
    fn alice_encode(&self, x: &TernaryVector) -> BitString;
    fn bob_encode(&self, y: &TernaryVector) -> BitString;
    fn charlie_decode(
        &self,
        supp_x: &[usize],
        supp_y: &[usize],
        msg_a: &BitString,
        msg_b: &BitString,
    ) -> Result<Answer, OverlapError>;
}

/// Runs the protocol on one instance.
pub fn run<P: OneWayProtocol + ?Sized>(
    p: &P,
    instance: &OverlapInstance,
) -> Result<Answer, OverlapError> {
    let (ma, mb) = (p.alice_encode(&instance.x), p.bob_encode(&instance.y));
    p.charlie_decode(&instance.x.support(), &instance.y.support(), &ma, &mb)
}

/// The `(s - 1)`-bit protocol built on [`Blocks`].
#[derive(Clone, Debug)]
pub struct BlockProtocol {
    pub blocks: Blocks,
}

impl BlockProtocol {
    pub fn new(m: usize, s: usize) -> Result<Self, OverlapError> {
        Ok(Self {
            blocks: build_blocks(m, s)?,
        })
    }
}

impl OneWayProtocol for BlockProtocol {
    fn name(&self) -> String {
        "appb".into()
    }

    fn max_bits(&self) -> usize {
        self.blocks.s - 1
    }

    fn alice_encode(&self, x: &TernaryVector) -> BitString {
        appb_encode(x, &self.blocks)
    }

    fn bob_encode(&self, y: &TernaryVector) -> BitString {
        appb_encode(y, &self.blocks)
    }

    fn charlie_decode(
        &self,
        supp_x: &[usize],
        supp_y: &[usize],
        msg_a: &BitString,
        msg_b: &BitString,
    ) -> Result<Answer, OverlapError> {
        appb_decode(supp_x, supp_y, msg_a, msg_b, &self.blocks)
    }
}

/// Each party sends the first `keep` support bits. Charlie reads `σ` from
/// whichever message still contains it and otherwise answers `no`.
#[derive(Clone, Debug)]
pub struct PrefixTruncation {
    pub keep: usize,
}

impl OneWayProtocol for PrefixTruncation {
    fn name(&self) -> String {
        format!("prefix:{}", self.keep)
    }

    fn max_bits(&self) -> usize {
        self.keep
    }

    fn alice_encode(&self, x: &TernaryVector) -> BitString {
        x.support_bits().truncated(self.keep)
    }

    fn bob_encode(&self, y: &TernaryVector) -> BitString {
        y.support_bits().truncated(self.keep)
    }

    fn charlie_decode(
        &self,
        supp_x: &[usize],
        supp_y: &[usize],
        msg_a: &BitString,
        msg_b: &BitString,
    ) -> Result<Answer, OverlapError> {
        let sigma = unique_common(supp_x, supp_y)
            .ok_or_else(|| invalid(Property::P2, "supports do not meet in exactly one index"))?;
        let rank = |supp: &[usize]| supp.binary_search(&sigma).expect("σ in support");
        let x_sigma = msg_a
            .get(rank(supp_x))
            .or_else(|| msg_b.get(rank(supp_y)).map(|y| !y));
        Ok(match x_sigma {
            Some(false) => Answer::Yes,
            _ => Answer::No,
        })
    }
}

/// Each party sends all `s` support bits.
#[derive(Clone, Debug)]
pub struct FullSupport {
    pub s: usize,
}

impl OneWayProtocol for FullSupport {
    fn name(&self) -> String {
        "full".into()
    }

    fn max_bits(&self) -> usize {
        self.s
    }

    fn alice_encode(&self, x: &TernaryVector) -> BitString {
        x.support_bits()
    }

    fn bob_encode(&self, y: &TernaryVector) -> BitString {
        y.support_bits()
    }

    fn charlie_decode(
        &self,
        supp_x: &[usize],
        supp_y: &[usize],
        msg_a: &BitString,
        _: &BitString,
    ) -> Result<Answer, OverlapError> {
        let sigma = unique_common(supp_x, supp_y)
            .ok_or_else(|| invalid(Property::P2, "supports do not meet in exactly one index"))?;
        let rank = supp_x.binary_search(&sigma).expect("σ in support");
        match msg_a.get(rank) {
            Some(false) => Ok(Answer::Yes),
            Some(true) => Ok(Answer::No),
            None => Err(OverlapError::Decode(format!("Alice sent {} bits", msg_a.len()))),
        }
    }
}

/// Builds a named protocol: `appb`, `full`, `prefix:<keep>`.
pub fn protocol_by_name(
    name: &str,
    m: usize,
    s: usize,
) -> Result<Box<dyn OneWayProtocol>, OverlapError> {
    Ok(match name {
        "appb" => Box::new(BlockProtocol::new(m, s)?),
        "full" => Box::new(FullSupport { s }),
        other => {
            let keep = other
                .strip_prefix("prefix:")
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| OverlapError::Decode(format!("unknown protocol {other:?}")))?;
            Box::new(PrefixTruncation { keep })
        }
    })
}

/// Ordered support pairs `(I, J)` of size `s` meeting in exactly one index.
pub fn support_pairs(m: usize, s: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let supports: Vec<Vec<usize>> = (1..=m).combinations(s).collect();
    let mut out = Vec::new();
    for a in &supports {
        for b in &supports {
            if unique_common(a, b).is_some() {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// All valid instances on the given support pair.
pub fn instances_on(m: usize, supp_x: &[usize], supp_y: &[usize]) -> Vec<OverlapInstance> {
    let s = supp_x.len();
    let sigma = unique_common(supp_x, supp_y).expect("supports meet in one index");
    let mut out = Vec::with_capacity(1 << (2 * s - 1));
    for a in 0..1u64 << s {
        let x = TernaryVector::from_support(m, supp_x, a);
        for b in 0..1u64 << s {
            let y = TernaryVector::from_support(m, supp_y, b);
            if x.get(sigma) != y.get(sigma) {
                out.push(OverlapInstance {
                    x: x.clone(),
                    y,
                    s,
                    sigma,
                });
            }
        }
    }
    out
}

/// Every valid instance at `(m, s)`, ordered by support pair then assignment.
pub fn valid_instances(m: usize, s: usize) -> Vec<OverlapInstance> {
    support_pairs(m, s)
        .iter()
        .flat_map(|(a, b)| instances_on(m, a, b))
        .collect()
}

/// Outcome of running a protocol on every valid instance.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub m: usize,
    pub s: usize,
    pub instances: usize,
    pub correct: usize,
    pub max_message_bits: usize,
    /// First failing instance, if any.
    pub first_failure: Option<InstanceFile>,
}

impl SweepReport {
    pub fn all_correct(&self) -> bool {
        self.correct == self.instances
    }
}

/// Exhaustive correctness sweep; decode errors count as wrong answers.
pub fn sweep<P: OneWayProtocol + ?Sized>(p: &P, m: usize, s: usize) -> SweepReport {
    let pairs = support_pairs(m, s);
    let parts: Vec<(usize, usize, usize, Option<InstanceFile>)> = pairs
        .par_iter()
        .map(|(a, b)| {
            let mut total = 0;
            let mut correct = 0;
            let mut bits = 0;
            let mut failure = None;
            for inst in instances_on(m, a, b) {
                total += 1;
                let (ma, mb) = (p.alice_encode(&inst.x), p.bob_encode(&inst.y));
                bits = bits.max(ma.len()).max(mb.len());
                match p.charlie_decode(a, b, &ma, &mb) {
                    Ok(ans) if ans == inst.answer() => correct += 1,
                    _ => {
                        failure.get_or_insert_with(|| inst.to_file());
                    }
                }
            }
            (total, correct, bits, failure)
        })
        .collect();
    let mut report = SweepReport {
        m,
        s,
        ..Default::default()
    };
    for (total, correct, bits, failure) in parts {
        report.instances += total;
        report.correct += correct;
        report.max_message_bits = report.max_message_bits.max(bits);
        if report.first_failure.is_none() {
            report.first_failure = failure;
        }
    }
    report
}

/// Two instances with identical supports and messages but opposite answers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub m: usize,
    pub s: usize,
    pub sigma: usize,
    /// `X_σ = 0`.
    pub x: TernaryVector,
    /// `X̂_σ = 1`, same message as `x`.
    pub x_hat: TernaryVector,
    /// `Y_σ = 1`.
    pub y: TernaryVector,
    /// `Ŷ_σ = 0`, same message as `y`.
    pub y_hat: TernaryVector,
    pub msg_alice: BitString,
    pub msg_bob: BitString,
    /// Charlie's output on `(x, y)`, whose answer is yes.
    pub output_yes_instance: Option<Answer>,
    /// Charlie's output on `(x_hat, y_hat)`, whose answer is no.
    pub output_no_instance: Option<Answer>,
}

impl Counterexample {
    pub fn yes_instance(&self) -> OverlapInstance {
        OverlapInstance {
            x: self.x.clone(),
            y: self.y.clone(),
            s: self.s,
            sigma: self.sigma,
        }
    }

    pub fn no_instance(&self) -> OverlapInstance {
        OverlapInstance {
            x: self.x_hat.clone(),
            y: self.y_hat.clone(),
            s: self.s,
            sigma: self.sigma,
        }
    }

    /// Reruns the protocol on both instances; true if at least one is answered wrongly.
    pub fn replay<P: OneWayProtocol + ?Sized>(&self, p: &P) -> bool {
        let yes = self.yes_instance();
        let no = self.no_instance();
        if validate_instance(&yes.x, &yes.y, self.m, self.s).is_err()
            || validate_instance(&no.x, &no.y, self.m, self.s).is_err()
            || p.alice_encode(&yes.x) != p.alice_encode(&no.x)
            || p.bob_encode(&yes.y) != p.bob_encode(&no.y)
        {
            return false;
        }
        run(p, &yes).ok() != Some(Answer::Yes) || run(p, &no).ok() != Some(Answer::No)
    }
}

/// For one support and one party: for each index, a pair of same-message
/// inputs whose entries there are `(0, 1)`.
fn flipped_witnesses(
    m: usize,
    support: &[usize],
    encode: impl Fn(&TernaryVector) -> BitString,
) -> BTreeMap<usize, (TernaryVector, TernaryVector)> {
    let s = support.len();
    let mut classes: BTreeMap<BitString, Vec<TernaryVector>> = BTreeMap::new();
    for a in 0..1u64 << s {
        let v = TernaryVector::from_support(m, support, a);
        classes.entry(encode(&v)).or_default().push(v);
    }
    let mut out = BTreeMap::new();
    for members in classes.values() {
        for &i in support {
            if out.contains_key(&i) {
                continue;
            }
            let zero = members.iter().find(|v| v.get(i) == Trit::Zero);
            let one = members.iter().find(|v| v.get(i) == Trit::One);
            if let (Some(z), Some(o)) = (zero, one) {
                out.insert(i, (z.clone(), o.clone()));
            }
        }
    }
    out
}

/// Searches for supports `I₁, I₂` with `I₁ ∩ I₂ = {σ}` where `σ` is flipped
/// for Alice on `I₁` and for Bob on `I₂`. Returns the first such pair in
/// lexicographic order whose replay shows a wrong answer.
pub fn attack<P: OneWayProtocol + ?Sized>(p: &P, m: usize, s: usize) -> Option<Counterexample> {
    let supports: Vec<Vec<usize>> = (1..=m).combinations(s).collect();
    let alice: Vec<_> = supports
        .par_iter()
        .map(|sup| flipped_witnesses(m, sup, |v| p.alice_encode(v)))
        .collect();
    let bob: Vec<_> = supports
        .par_iter()
        .map(|sup| flipped_witnesses(m, sup, |v| p.bob_encode(v)))
        .collect();
    (0..supports.len()).into_par_iter().find_map_first(|a| {
        if alice[a].is_empty() {
            return None;
        }
        (0..supports.len()).find_map(|b| {
            let sigma = unique_common(&supports[a], &supports[b])?;
            let (x, x_hat) = alice[a].get(&sigma)?;
            let (y_hat, y) = bob[b].get(&sigma)?;
            let mut ce = Counterexample {
                m,
                s,
                sigma,
                x: x.clone(),
                x_hat: x_hat.clone(),
                y: y.clone(),
                y_hat: y_hat.clone(),
                msg_alice: p.alice_encode(x),
                msg_bob: p.bob_encode(y),
                output_yes_instance: None,
                output_no_instance: None,
            };
            ce.output_yes_instance = run(p, &ce.yes_instance()).ok();
            ce.output_no_instance = run(p, &ce.no_instance()).ok();
            ce.replay(p).then_some(ce)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tv(s: &str) -> TernaryVector {
        s.parse().unwrap()
    }

    #[test]
    fn example_instance_has_sigma_five_and_answers_no() {
        // supp(X) = {1,2,5}, supp(Y) = {5,7,8}, X5 = 1, Y5 = 0
        let x = tv("01**1***");
        let y = tv("****0*10");
        assert_eq!(validate_instance(&x, &y, 8, 3), Ok(5));
        let inst = OverlapInstance::new(x, y, 3).unwrap();
        assert_eq!(inst.answer(), Answer::No);
    }

    #[test]
    fn invalid_instances_name_the_property() {
        let err = |x: &str, y: &str, m, s| match validate_instance(&tv(x), &tv(y), m, s) {
            Err(OverlapError::InvalidInstance { property, .. }) => property,
            other => panic!("unexpected {other:?}"),
        };
        assert_eq!(err("01**1***", "*1**0**1", 8, 3), Property::P2);
        assert_eq!(err("01**1***", "****1*10", 8, 3), Property::P1);
        assert_eq!(err("01**1***", "***1**10", 8, 3), Property::P1);
        assert_eq!(err("01**1**", "****0*10", 8, 3), Property::Length);
        assert_eq!(err("01**1***", "****0*1*", 8, 3), Property::SupportSize);
        assert_eq!(err("0111****", "****0111", 8, 4), Property::P1);
        assert_eq!(err("01110****", "****01111", 9, 5), Property::P1);
    }

    #[test]
    fn support_bound_is_enforced() {
        let x = tv("0111*");
        let y = tv("***01");
        assert!(matches!(
            validate_instance(&x, &y, 5, 4),
            Err(OverlapError::InvalidInstance {
                property: Property::SupportSize,
                ..
            })
        ));
        let x = tv("0111**");
        let y = tv("**1011");
        assert!(matches!(
            validate_instance(&x, &y, 6, 4),
            Err(OverlapError::InvalidInstance {
                property: Property::SupportBound,
                ..
            })
        ));
    }

    #[test]
    fn answer_is_yes_for_zero_one() {
        assert!(OverlapInstance::new(tv("01***"), tv("*1*0*"), 2).is_err());
        let inst = OverlapInstance::new(tv("00***"), tv("*1*0*"), 2).unwrap();
        assert_eq!(inst.sigma, 2);
        assert_eq!(inst.answer(), Answer::Yes);
    }

    #[test]
    fn phi_for_m_eight() {
        let c = CyclePartition::new(8);
        assert_eq!(c.intervals(), vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8]]);
        assert_eq!(
            (1..=8).map(|b| c.phi(b)).collect::<Vec<_>>(),
            vec![2, 3, 1, 5, 6, 4, 8, 7]
        );
        let c = CyclePartition::new(7);
        assert_eq!(c.phi(7), 1);
        for m in 2..20 {
            let c = CyclePartition::new(m);
            assert!((1..=m).all(|b| c.phi(b) != b));
        }
    }

    #[test]
    fn blocks_need_the_hypothesis() {
        assert_eq!(
            build_blocks(9, 3).unwrap_err(),
            OverlapError::HypothesisViolated { m: 9, s: 3 }
        );
        assert!(build_blocks(8, 3).is_err());
    }

    #[test]
    fn blocks_are_total_and_separating() {
        for (m, s) in [(9, 4), (7, 4), (8, 4), (5, 3)] {
            let b = build_blocks(m, s).unwrap();
            let total = (1..=m).combinations(s).count();
            assert_eq!(b.assignment.len(), total);
            for (subset, &i) in &b.assignment {
                assert!(subset.contains(&i) && subset.contains(&b.partition.phi(i)));
            }
            assert_eq!(b.check_single_overlap_property(), None, "m={m} s={s}");
        }
    }

    #[test]
    fn encode_drops_the_assigned_bit() {
        let blocks = build_blocks(9, 4).unwrap();
        // supp {1,2,3,4}: smallest i with Φ(i) inside is 1
        let v = tv("1011*****");
        assert_eq!(blocks.index_for(&[1, 2, 3, 4]), Some(1));
        assert_eq!(appb_encode(&v, &blocks).to_string(), "011");
        let z = tv("0000*****");
        assert_eq!(appb_encode(&z, &blocks).to_string(), "000");
    }

    #[test]
    fn each_message_has_exactly_two_preimages() {
        let blocks = build_blocks(9, 4).unwrap();
        let support = [2, 4, 5, 9];
        let mut counts: BTreeMap<BitString, usize> = BTreeMap::new();
        for a in 0..16 {
            let v = TernaryVector::from_support(9, &support, a);
            *counts.entry(appb_encode(&v, &blocks)).or_default() += 1;
        }
        assert_eq!(counts.len(), 8);
        assert!(counts.values().all(|&c| c == 2));
    }

    #[test]
    fn appb_is_correct_exhaustively() {
        for (m, s) in [(7, 4), (8, 4), (9, 4)] {
            let p = BlockProtocol::new(m, s).unwrap();
            let r = sweep(&p, m, s);
            assert!(r.all_correct(), "{r:?}");
            assert_eq!(r.max_message_bits, s - 1);
        }
    }

    #[test]
    fn swapping_roles_flips_the_answer() {
        let p = BlockProtocol::new(9, 4).unwrap();
        let inst = OverlapInstance::new(tv("0110*****"), tv("***1011**"), 4).unwrap();
        assert_eq!(inst.sigma, 4);
        let swapped = OverlapInstance::new(inst.y.clone(), inst.x.clone(), 4).unwrap();
        assert_eq!(run(&p, &inst), Ok(Answer::Yes));
        assert_eq!(run(&p, &swapped), Ok(Answer::No));
    }

    #[test]
    fn attack_finds_nothing_against_appb_or_full() {
        let p = BlockProtocol::new(9, 4).unwrap();
        assert_eq!(attack(&p, 9, 4), None);
        assert_eq!(attack(&FullSupport { s: 4 }, 9, 4), None);
    }

    #[test]
    fn attack_breaks_short_truncation() {
        let p = PrefixTruncation { keep: 2 };
        let ce = attack(&p, 9, 4).expect("truncation to s-2 bits is breakable");
        assert!(ce.replay(&p));
        assert_eq!(ce.output_yes_instance, ce.output_no_instance);
        assert_eq!(ce.yes_instance().answer(), Answer::Yes);
        assert_eq!(ce.no_instance().answer(), Answer::No);
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = OverlapInstance::new(tv("01**1***"), tv("****0*10"), 3).unwrap();
        let json = serde_json::to_string(&inst.to_file()).unwrap();
        assert_eq!(json, r#"{"m":8,"s":3,"X":"01**1***","Y":"****0*10"}"#);
        let back: InstanceFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.validate().unwrap(), inst);
    }

    #[test]
    fn instance_count_matches_formula() {
        // pairs · 2^s · 2^(s-1)
        let (m, s) = (6, 3);
        let pairs = 20 * 3 * 3;
        assert_eq!(valid_instances(m, s).len(), pairs * 8 * 4);
    }

    proptest! {
        #[test]
        fn ternary_text_round_trip(v in proptest::collection::vec(0u8..3, 0..40)) {
            let t = TernaryVector(v.iter().map(|&c| [Trit::Zero, Trit::One, Trit::Bot][c as usize]).collect());
            prop_assert_eq!(t.to_string().parse::<TernaryVector>().unwrap(), t);
        }
    }
}
