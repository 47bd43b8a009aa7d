use super::{DefectSet, OracleError, QueryPlan, ResponseVector};

/// Item-major transpose of a plan for evaluating it against many defect sets.
///
/// Row `i` is the bitset of queries containing item `i`. Evaluating `B` ORs
/// the rows of its members into `λ` saturating bit planes, where plane `j`
/// marks the queries already holding at least `j` defectives. Cost is
/// `O(|B| · λ · q / 64)` word operations and memory is `n · q / 8` bytes.
#[derive(Debug, Clone)]
pub struct PlanIndex {
    n: u64,
    lambda: u32,
    q: usize,
    words: usize,
    rows: Vec<u64>,
}

impl PlanIndex {
    /// Bytes needed to index a plan with `q` queries over `n` items.
    pub fn memory_bytes(n: u64, q: usize) -> u64 {
        n * q.div_ceil(64) as u64 * 8
    }

    pub fn new(plan: &QueryPlan) -> Self {
        let q = plan.len();
        let words = q.div_ceil(64);
        let n = plan.universe_size();
        let mut rows = vec![0u64; n as usize * words];
        for (j, query) in plan.queries().iter().enumerate() {
            let (w, bit) = (j / 64, 1u64 << (j % 64));
            for i in query.iter() {
                rows[(i as usize - 1) * words + w] |= bit;
            }
        }
        Self { n, lambda: plan.lambda(), q, words, rows }
    }

    pub fn len(&self) -> usize {
        self.q
    }

    pub fn is_empty(&self) -> bool {
        self.q == 0
    }

    pub fn evaluate(&self, defects: &DefectSet) -> Result<ResponseVector, OracleError> {
        if defects.universe_size() != self.n {
            return Err(OracleError::UniverseMismatch { expected: self.n, found: defects.universe_size() });
        }
        let lambda = self.lambda as usize;
        let mut planes = vec![vec![0u64; self.words]; lambda];
        for &item in defects.members() {
            let row = &self.rows[(item as usize - 1) * self.words..item as usize * self.words];
            for j in (1..lambda).rev() {
                let (lo, hi) = planes.split_at_mut(j);
                for ((h, &l), &r) in hi[0].iter_mut().zip(lo[j - 1].iter()).zip(row) {
                    *h |= l & r;
                }
            }
            for (p, &r) in planes[0].iter_mut().zip(row) {
                *p |= r;
            }
        }
        Ok(ResponseVector::from_words(planes.pop().unwrap_or_default(), self.q))
    }
}
