use std::fmt;

/// A bit-packed response vector in `{0,1}^q`.
///
/// Bits beyond `len` in the last word are always zero, so derived equality,
/// ordering and hashing act on the logical vector.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResponseVector {
    words: Vec<u64>,
    len: usize,
}

impl ResponseVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self { words: vec![0; len.div_ceil(64)], len }
    }

    /// Builds from packed words, clearing any bits past `len`.
    pub fn from_words(mut words: Vec<u64>, len: usize) -> Self {
        words.resize(len.div_ceil(64), 0);
        if !len.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (len % 64)) - 1;
            }
        }
        Self { words, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "index {i} out of range for length {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        self.len += 1;
        if bit {
            self.set(self.len - 1, true);
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of ones among positions `range`.
    pub fn count_ones_in(&self, range: std::ops::Range<usize>) -> usize {
        assert!(range.end <= self.len);
        if range.start >= range.end {
            return 0;
        }
        let (s, e) = (range.start, range.end);
        let (sw, ew) = (s / 64, (e - 1) / 64);
        let lo_mask = !0u64 << (s % 64);
        let hi_mask = if e % 64 == 0 { !0u64 } else { (1u64 << (e % 64)) - 1 };
        if sw == ew {
            return (self.words[sw] & lo_mask & hi_mask).count_ones() as usize;
        }
        let mut total = (self.words[sw] & lo_mask).count_ones() as usize;
        total += self.words[sw + 1..ew].iter().map(|w| w.count_ones() as usize).sum::<usize>();
        total + (self.words[ew] & hi_mask).count_ones() as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn to_bits(&self) -> Vec<bool> {
        self.iter().collect()
    }
}

impl FromIterator<bool> for ResponseVector {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        let mut r = Self::new();
        for b in iter {
            r.push(b);
        }
        r
    }
}

/// Renders as a string of `0`/`1` characters.
impl fmt::Display for ResponseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_get_count() {
        let bits: Vec<bool> = (0..200).map(|i| i % 3 == 0 || i == 199).collect();
        let r: ResponseVector = bits.iter().copied().collect();
        assert_eq!(r.len(), 200);
        assert_eq!(r.to_bits(), bits);
        assert_eq!(r.count_ones(), bits.iter().filter(|&&b| b).count());
        for (s, e) in [(0, 0), (0, 200), (3, 64), (63, 65), (5, 190), (64, 128), (128, 200)] {
            let want = bits[s..e].iter().filter(|&&b| b).count();
            assert_eq!(r.count_ones_in(s..e), want, "{s}..{e}");
        }
    }

    #[test]
    fn trailing_bits_cleared() {
        let a = ResponseVector::from_words(vec![!0u64], 3);
        let b: ResponseVector = [true, true, true].into_iter().collect();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "111");
        assert_ne!(ResponseVector::zeros(3), ResponseVector::zeros(4));
    }
}
