//! Fixed-size bit set backed by `u64` words.

/// Dense bit set over `0..len`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitSet {
    words: Vec<u64>,
    len: usize,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet {
            words: vec![0u64; len.div_ceil(64)],
            len,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Number of words of backing storage (for space accounting).
    #[inline]
    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i >> 6] & (1u64 << (i & 63)) != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] |= 1u64 << (i & 63);
    }

    #[inline]
    pub fn clear_bit(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] &= !(1u64 << (i & 63));
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Smallest set index `>= from`, if any.
    pub fn next_set_bit(&self, from: usize) -> Option<usize> {
        if from >= self.len {
            return None;
        }
        let mut wi = from >> 6;
        let mut word = self.words[wi] & (!0u64 << (from & 63));
        loop {
            if word != 0 {
                let i = (wi << 6) + word.trailing_zeros() as usize;
                return if i < self.len { Some(i) } else { None };
            }
            wi += 1;
            if wi == self.words.len() {
                return None;
            }
            word = self.words[wi];
        }
    }

    /// Largest set index `<= from`, if any.
    pub fn prev_set_bit(&self, from: usize) -> Option<usize> {
        if self.len == 0 {
            return None;
        }
        let from = from.min(self.len - 1);
        let mut wi = from >> 6;
        let mut word = self.words[wi] & (!0u64 >> (63 - (from & 63)));
        loop {
            if word != 0 {
                return Some((wi << 6) + 63 - word.leading_zeros() as usize);
            }
            if wi == 0 {
                return None;
            }
            wi -= 1;
            word = self.words[wi];
        }
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(move |(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some((wi << 6) + b)
                }
            })
        })
    }

    pub fn union_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_scan() {
        let mut b = BitSet::new(200);
        for i in [0usize, 1, 63, 64, 65, 127, 199] {
            b.set(i);
        }
        assert!(b.get(64) && !b.get(66));
        assert_eq!(b.count_ones(), 7);
        assert_eq!(b.next_set_bit(2), Some(63));
        assert_eq!(b.next_set_bit(128), Some(199));
        assert_eq!(b.next_set_bit(200), None);
        assert_eq!(b.prev_set_bit(62), Some(1));
        assert_eq!(b.prev_set_bit(199), Some(199));
        let ones: Vec<_> = b.iter_ones().collect();
        assert_eq!(ones, vec![0, 1, 63, 64, 65, 127, 199]);
    }
}
