//! Simulated ground truth: defect sets, threshold queries, non-adaptive plans
//! and the response vectors they produce.
//!
//! Items are 1-based indices stored as `u32`, so universes up to `u32::MAX`
//! items are supported.

mod index;
mod response;
mod sample;
mod text;

use thiserror::Error;

pub use index::PlanIndex;
pub use response::ResponseVector;
pub use sample::{random_p_query, uniform_defect_set};

/// Largest universe for which dense bitmap queries are used.
pub const DENSE_MAX_UNIVERSE: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("universe mismatch: expected n={expected}, found n={found}")]
    UniverseMismatch { expected: u64, found: u64 },
    #[error("universe size must be in [1, {max}], got {n}", max = u32::MAX)]
    BadUniverse { n: u64 },
    #[error("item {item} outside [1, {n}]")]
    OutOfRange { item: u64, n: u64 },
    #[error("items must be strictly increasing (saw {prev} then {next})")]
    NotIncreasing { prev: u32, next: u32 },
    #[error("requested {size} items from a universe of {n}")]
    SizeExceedsUniverse { size: u64, n: u64 },
    #[error("threshold mismatch: expected {expected}, found {found}")]
    LambdaMismatch { expected: u32, found: u32 },
    #[error("threshold must be at least 1")]
    ZeroLambda,
    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),
    #[error("expected {expected} responses, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn check_universe(n: u64) -> Result<(), OracleError> {
    if n == 0 || n > u64::from(u32::MAX) {
        return Err(OracleError::BadUniverse { n });
    }
    Ok(())
}

fn check_sorted(n: u64, items: &[u32]) -> Result<(), OracleError> {
    for w in items.windows(2) {
        if w[0] >= w[1] {
            return Err(OracleError::NotIncreasing { prev: w[0], next: w[1] });
        }
    }
    if let Some(&first) = items.first() {
        if first == 0 {
            return Err(OracleError::OutOfRange { item: 0, n });
        }
    }
    if let Some(&last) = items.last() {
        if u64::from(last) > n {
            return Err(OracleError::OutOfRange { item: u64::from(last), n });
        }
    }
    Ok(())
}

fn sorted_unique(n: u64, items: impl IntoIterator<Item = u32>) -> Result<Vec<u32>, OracleError> {
    let mut v: Vec<u32> = items.into_iter().collect();
    v.sort_unstable();
    check_sorted(n, &v)?;
    Ok(v)
}

/// The planted set `B ⊆ [n]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DefectSet {
    n: u64,
    members: Vec<u32>,
}

impl DefectSet {
    /// `members` must be strictly increasing and lie in `[1, n]`.
    pub fn new(n: u64, members: Vec<u32>) -> Result<Self, OracleError> {
        check_universe(n)?;
        check_sorted(n, &members)?;
        Ok(Self { n, members })
    }

    /// Sorts the items first; duplicates are still an error.
    pub fn from_items(n: u64, items: impl IntoIterator<Item = u32>) -> Result<Self, OracleError> {
        check_universe(n)?;
        Ok(Self { n, members: sorted_unique(n, items)? })
    }

    pub fn universe_size(&self) -> u64 {
        self.n
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, item: u32) -> bool {
        self.members.binary_search(&item).is_ok()
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Sparse(Vec<u32>),
    /// Bit `i - 1` is item `i`.
    Dense { bits: Vec<u64>, size: usize },
}

/// A query set `W ⊆ [n]`.
///
/// Stored as a sorted index list or, when `|W| >= n/64` and `n` is at most
/// [`DENSE_MAX_UNIVERSE`], as a membership bitmap. Equality, hashing and
/// serialization only see the logical set.
#[derive(Debug, Clone)]
pub struct Query {
    n: u64,
    repr: Repr,
}

impl Query {
    /// `members` must be strictly increasing and lie in `[1, n]`.
    pub fn new(n: u64, members: Vec<u32>) -> Result<Self, OracleError> {
        check_universe(n)?;
        check_sorted(n, &members)?;
        Ok(Self::from_sorted_unchecked(n, members))
    }

    pub fn from_items(n: u64, items: impl IntoIterator<Item = u32>) -> Result<Self, OracleError> {
        check_universe(n)?;
        let v = sorted_unique(n, items)?;
        Ok(Self::from_sorted_unchecked(n, v))
    }

    pub fn empty(n: u64) -> Result<Self, OracleError> {
        Self::new(n, Vec::new())
    }

    pub fn full(n: u64) -> Result<Self, OracleError> {
        check_universe(n)?;
        Ok(Self::from_sorted_unchecked(n, (1..=n as u32).collect()))
    }

    pub(crate) fn from_sorted_unchecked(n: u64, members: Vec<u32>) -> Self {
        let dense = n <= DENSE_MAX_UNIVERSE && 64 * members.len() as u64 >= n;
        let repr = if dense {
            let mut bits = vec![0u64; n.div_ceil(64) as usize];
            for &i in &members {
                let b = (i - 1) as usize;
                bits[b / 64] |= 1 << (b % 64);
            }
            Repr::Dense { bits, size: members.len() }
        } else {
            Repr::Sparse(members)
        };
        Self { n, repr }
    }

    pub fn universe_size(&self) -> u64 {
        self.n
    }

    /// `k = |W|`.
    pub fn size(&self) -> usize {
        match &self.repr {
            Repr::Sparse(v) => v.len(),
            Repr::Dense { size, .. } => *size,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.size() == 0
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense { .. })
    }

    pub fn contains(&self, item: u32) -> bool {
        if item == 0 || u64::from(item) > self.n {
            return false;
        }
        match &self.repr {
            Repr::Sparse(v) => v.binary_search(&item).is_ok(),
            Repr::Dense { bits, .. } => {
                let b = (item - 1) as usize;
                bits[b / 64] >> (b % 64) & 1 == 1
            }
        }
    }

    /// Members in increasing order.
    pub fn iter(&self) -> Box<dyn Iterator<Item = u32> + '_> {
        match &self.repr {
            Repr::Sparse(v) => Box::new(v.iter().copied()),
            Repr::Dense { bits, .. } => Box::new(bits.iter().enumerate().flat_map(|(w, &word)| {
                let mut word = word;
                std::iter::from_fn(move || {
                    if word == 0 {
                        return None;
                    }
                    let b = word.trailing_zeros();
                    word &= word - 1;
                    Some(w as u32 * 64 + b + 1)
                })
            })),
        }
    }

    pub fn members(&self) -> Vec<u32> {
        self.iter().collect()
    }

    /// `min(|W ∩ B|, cap)`, stopping early once `cap` is reached.
    pub fn intersection_capped(&self, defects: &DefectSet, cap: usize) -> Result<usize, OracleError> {
        if self.n != defects.n {
            return Err(OracleError::UniverseMismatch { expected: self.n, found: defects.n });
        }
        let mut hits = 0;
        if hits >= cap {
            return Ok(hits);
        }
        match &self.repr {
            Repr::Dense { .. } => {
                for &b in &defects.members {
                    if self.contains(b) {
                        hits += 1;
                        if hits >= cap {
                            break;
                        }
                    }
                }
            }
            Repr::Sparse(w) => {
                let (small, large) = if w.len() <= defects.members.len() {
                    (w.as_slice(), defects.members.as_slice())
                } else {
                    (defects.members.as_slice(), w.as_slice())
                };
                let mut lo = 0;
                for &x in small {
                    match large[lo..].binary_search(&x) {
                        Ok(pos) => {
                            hits += 1;
                            if hits >= cap {
                                break;
                            }
                            lo += pos + 1;
                        }
                        Err(pos) => lo += pos,
                    }
                    if lo >= large.len() {
                        break;
                    }
                }
            }
        }
        Ok(hits)
    }

    /// Exact `|W ∩ B|`.
    pub fn intersection_size(&self, defects: &DefectSet) -> Result<usize, OracleError> {
        self.intersection_capped(defects, usize::MAX)
    }
}

impl PartialEq for Query {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.size() == other.size() && self.iter().eq(other.iter())
    }
}

impl Eq for Query {}

impl std::hash::Hash for Query {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.n.hash(state);
        for i in self.iter() {
            i.hash(state);
        }
    }
}

/// A non-adaptive tuple of queries sharing one threshold `λ`.
///
/// There is no way to modify a plan after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPlan {
    n: u64,
    lambda: u32,
    queries: Vec<Query>,
}

impl QueryPlan {
    pub fn new(n: u64, lambda: u32, queries: Vec<Query>) -> Result<Self, OracleError> {
        check_universe(n)?;
        if lambda == 0 {
            return Err(OracleError::ZeroLambda);
        }
        if let Some(q) = queries.iter().find(|q| q.n != n) {
            return Err(OracleError::UniverseMismatch { expected: n, found: q.n });
        }
        Ok(Self { n, lambda, queries })
    }

    pub fn universe_size(&self) -> u64 {
        self.n
    }

    pub fn lambda(&self) -> u32 {
        self.lambda
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Concatenates two plans over the same universe and threshold.
    pub fn concat(&self, other: &QueryPlan) -> Result<QueryPlan, OracleError> {
        if self.n != other.n {
            return Err(OracleError::UniverseMismatch { expected: self.n, found: other.n });
        }
        if self.lambda != other.lambda {
            return Err(OracleError::LambdaMismatch { expected: self.lambda, found: other.lambda });
        }
        let mut queries = self.queries.clone();
        queries.extend(other.queries.iter().cloned());
        Ok(QueryPlan { n: self.n, lambda: self.lambda, queries })
    }
}

/// `1` iff `|W ∩ B| >= λ`.
pub fn evaluate(query: &Query, defects: &DefectSet, lambda: u32) -> Result<bool, OracleError> {
    if lambda == 0 {
        return Err(OracleError::ZeroLambda);
    }
    let cap = lambda as usize;
    Ok(query.intersection_capped(defects, cap)? >= cap)
}

pub fn evaluate_plan(plan: &QueryPlan, defects: &DefectSet) -> Result<ResponseVector, OracleError> {
    if plan.n != defects.n {
        return Err(OracleError::UniverseMismatch { expected: plan.n, found: defects.n });
    }
    plan.queries
        .iter()
        .map(|q| evaluate(q, defects, plan.lambda))
        .collect()
}
