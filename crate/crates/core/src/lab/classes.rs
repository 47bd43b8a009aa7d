use super::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

/// `β = ⌊α⌋ + 1`, `S_even = {Lβ², …, Lβ^{2m}}`, `S_odd = {Lβ, …, Lβ^{2m−1}}`
/// with `m` maximal subject to `Lβ^{2m} <= U`.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeClasses {
    pub alpha: f64,
    pub beta: u64,
    pub l: u64,
    pub u: u64,
    pub m: usize,
    pub even_sizes: Vec<u64>,
    pub odd_sizes: Vec<u64>,
}

impl SizeClasses {
    pub fn sizes(&self, parity: Parity) -> &[u64] {
        match parity {
            Parity::Even => &self.even_sizes,
            Parity::Odd => &self.odd_sizes,
        }
    }

    /// `(|X|, |Y|) = (Lβ^{2j}, Lβ^{2j−1})` for `j ∈ [1, m]`.
    pub fn level_sizes(&self, j: usize) -> Result<(u64, u64), LabError> {
        if j == 0 || j > self.m {
            return Err(LabError::LevelOutOfRange { j, m: self.m });
        }
        Ok((self.even_sizes[j - 1], self.odd_sizes[j - 1]))
    }

    pub fn largest(&self) -> u64 {
        *self.even_sizes.last().expect("m >= 1")
    }

    /// All `(s, parity)` in increasing order of `s`.
    pub fn all_sizes(&self) -> Vec<(u64, Parity)> {
        self.odd_sizes
            .iter()
            .zip(&self.even_sizes)
            .flat_map(|(&o, &e)| [(o, Parity::Odd), (e, Parity::Even)])
            .collect()
    }

    /// Whether the windows `[s, αs]` are pairwise disjoint.
    pub fn windows_disjoint(&self) -> bool {
        self.all_sizes().windows(2).all(|w| self.alpha * (w[0].0 as f64) < (w[1].0 as f64))
    }

    pub fn check_universe(&self, n: u64) -> Result<(), LabError> {
        if self.largest() > n {
            return Err(LabError::ClassExceedsUniverse { size: self.largest(), n });
        }
        Ok(())
    }
}

pub fn build_size_classes(alpha: f64, l: u64, u: u64) -> Result<SizeClasses, LabError> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(LabError::AlphaRange(alpha));
    }
    if l == 0 || l >= u {
        return Err(LabError::Bounds { l, u });
    }
    let beta = alpha.floor() as u64 + 1;
    let (b, l128) = (u128::from(beta), u128::from(l));
    if l128 * b * b > u128::from(u) {
        return Err(LabError::NoClasses { smallest_even: l128 * b * b, u });
    }
    let mut even_sizes = Vec::new();
    let mut odd_sizes = Vec::new();
    let mut odd = l128 * b;
    while odd * b <= u128::from(u) {
        odd_sizes.push(odd as u64);
        even_sizes.push((odd * b) as u64);
        odd *= b * b;
    }
    Ok(SizeClasses { alpha, beta, l, u, m: even_sizes.len(), even_sizes, odd_sizes })
}

/// Parity of the unique class size `s` with `D ∈ [s, αs]`; `Even` when no
/// window contains `D`.
pub fn estimator_as_distinguisher(d_hat: u64, classes: &SizeClasses) -> Parity {
    classes
        .all_sizes()
        .into_iter()
        .find(|&(s, _)| d_hat >= s && d_hat as f64 <= classes.alpha * s as f64)
        .map_or(Parity::Even, |(_, p)| p)
}
