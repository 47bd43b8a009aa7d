use rand::Rng;

use crate::oracle::{uniform_defect_set, DefectSet};

use super::{LabError, Parity, SizeClasses};

/// Uniform size from the parity's list, then a uniform set of that size.
pub fn sample_planted<R: Rng + ?Sized>(
    classes: &SizeClasses,
    parity: Parity,
    n: u64,
    rng: &mut R,
) -> Result<DefectSet, LabError> {
    classes.check_universe(n)?;
    let sizes = classes.sizes(parity);
    let s = sizes[rng.random_range(0..sizes.len())];
    Ok(uniform_defect_set(n, s, rng)?)
}

/// One draw of the coupling `(X, Y)` of `μ_even` and `μ_odd`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSample {
    pub j: usize,
    pub x: DefectSet,
    pub y: DefectSet,
}

/// `j` uniform on `[m]`, then independent uniform `X` of size `Lβ^{2j}` and
/// `Y` of size `Lβ^{2j−1}`.
pub fn sample_coupling<R: Rng + ?Sized>(
    classes: &SizeClasses,
    n: u64,
    rng: &mut R,
) -> Result<CouplingSample, LabError> {
    classes.check_universe(n)?;
    let j = rng.random_range(1..=classes.m);
    let (xs, ys) = classes.level_sizes(j)?;
    let x = uniform_defect_set(n, xs, rng)?;
    let y = uniform_defect_set(n, ys, rng)?;
    Ok(CouplingSample { j, x, y })
}
