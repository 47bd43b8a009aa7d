use rand::Rng;
use rand_distr::{Distribution, Geometric};

use super::{check_universe, DefectSet, OracleError, Query};

/// A `p`-query: every item of `[n]` joins independently with probability `p`.
///
/// Gaps between consecutive members are drawn from a geometric law, so the
/// cost is proportional to the query size rather than to `n`.
pub fn random_p_query<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> Result<Query, OracleError> {
    check_universe(n)?;
    if !(0.0..=1.0).contains(&p) {
        return Err(OracleError::BadProbability(p));
    }
    if p == 0.0 {
        return Query::empty(n);
    }
    if p == 1.0 {
        return Query::full(n);
    }
    let skip = Geometric::new(p).map_err(|_| OracleError::BadProbability(p))?;
    let mut members = Vec::with_capacity(((n as f64) * p * 1.1) as usize + 8);
    // `pos` is the 1-based index of the next candidate item.
    let mut pos: u64 = 1;
    loop {
        pos = pos.saturating_add(skip.sample(rng));
        if pos > n {
            break;
        }
        members.push(pos as u32);
        pos += 1;
    }
    Ok(Query::from_sorted_unchecked(n, members))
}

/// A uniformly random subset of `[n]` of the given size.
///
/// Delegates to `rand::seq::index::sample`, which picks Floyd's algorithm,
/// rejection sampling or a partial shuffle depending on density; each is
/// exactly uniform.
pub fn uniform_defect_set<R: Rng + ?Sized>(n: u64, size: u64, rng: &mut R) -> Result<DefectSet, OracleError> {
    check_universe(n)?;
    if size > n {
        return Err(OracleError::SizeExceedsUniverse { size, n });
    }
    let mut members: Vec<u32> = rand::seq::index::sample(rng, n as usize, size as usize)
        .into_iter()
        .map(|i| i as u32 + 1)
        .collect();
    members.sort_unstable();
    Ok(DefectSet { n, members })
}
