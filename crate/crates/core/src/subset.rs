//! Fixed-capacity bit set over ground-set positions.
//!
//! Every set the optimizers touch (DTR placements, per-state schedules,
//! enumeration candidates) is a subset of a ground set with at most
//! [`MAX_ELEMENTS`] members, so a copyable bitmask doubles as a cheap
//! memoization key.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const WORDS: usize = 4;

/// Largest ground set a [`Subset`] can index.
pub const MAX_ELEMENTS: usize = WORDS * 64;

#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Subset {
    words: [u64; WORDS],
}

impl Subset {
    pub const fn empty() -> Self {
        Self { words: [0; WORDS] }
    }

    /// `{0, 1, ..., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_ELEMENTS, "ground set of {n} exceeds {MAX_ELEMENTS}");
        let mut s = Self::empty();
        for (w, word) in s.words.iter_mut().enumerate() {
            let lo = w * 64;
            if n >= lo + 64 {
                *word = u64::MAX;
            } else if n > lo {
                *word = (1u64 << (n - lo)) - 1;
            }
        }
        s
    }

    pub fn singleton(x: usize) -> Self {
        let mut s = Self::empty();
        s.insert(x);
        s
    }

    #[inline]
    pub fn contains(&self, x: usize) -> bool {
        x < MAX_ELEMENTS && self.words[x / 64] & (1u64 << (x % 64)) != 0
    }

    #[inline]
    pub fn insert(&mut self, x: usize) -> bool {
        assert!(x < MAX_ELEMENTS, "element {x} exceeds {MAX_ELEMENTS}");
        let had = self.contains(x);
        self.words[x / 64] |= 1u64 << (x % 64);
        !had
    }

    #[inline]
    pub fn remove(&mut self, x: usize) -> bool {
        let had = self.contains(x);
        if had {
            self.words[x / 64] &= !(1u64 << (x % 64));
        }
        had
    }

    #[must_use]
    pub fn with(mut self, x: usize) -> Self {
        self.insert(x);
        self
    }

    #[must_use]
    pub fn without(mut self, x: usize) -> Self {
        self.remove(x);
        self
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[must_use]
    pub fn union(&self, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.words.iter_mut().zip(other.words) {
            *a |= b;
        }
        out
    }

    #[must_use]
    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.words.iter_mut().zip(other.words) {
            *a &= b;
        }
        out
    }

    #[must_use]
    pub fn difference(&self, other: &Self) -> Self {
        let mut out = *self;
        for (a, b) in out.words.iter_mut().zip(other.words) {
            *a &= !b;
        }
        out
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.words.iter().zip(other.words).all(|(a, b)| a & !b == 0)
    }

    /// Elements in ascending order.
    pub fn iter(&self) -> Iter {
        Iter {
            words: self.words,
            word: 0,
        }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Largest element, if any.
    pub fn max_element(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| i * 64 + 63 - w.leading_zeros() as usize)
    }

    /// Lexicographic comparison of the ascending element sequences, where a
    /// proper prefix sorts first (`{1} < {1,2} < {1,3} < {2}`).
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.iter().cmp(other.iter())
    }

    /// All subsets of `self` with at most `max_len` elements, in
    /// lexicographic order (the empty set first).
    pub fn subsets_up_to(&self, max_len: usize) -> Vec<Subset> {
        fn walk(elems: &[usize], start: usize, cur: Subset, left: usize, out: &mut Vec<Subset>) {
            out.push(cur);
            if left == 0 {
                return;
            }
            for i in start..elems.len() {
                walk(elems, i + 1, cur.with(elems[i]), left - 1, out);
            }
        }
        let elems = self.to_vec();
        let mut out = Vec::new();
        walk(&elems, 0, Subset::empty(), max_len, &mut out);
        out
    }

    /// All subsets of `self` with exactly `len` elements, in lexicographic order.
    pub fn subsets_of_len(&self, len: usize) -> Vec<Subset> {
        fn walk(elems: &[usize], start: usize, cur: Subset, left: usize, out: &mut Vec<Subset>) {
            if left == 0 {
                out.push(cur);
                return;
            }
            for i in start..elems.len() {
                if elems.len() - i < left {
                    break;
                }
                walk(elems, i + 1, cur.with(elems[i]), left - 1, out);
            }
        }
        let elems = self.to_vec();
        let mut out = Vec::new();
        walk(&elems, 0, Subset::empty(), len, &mut out);
        out
    }
}

impl FromIterator<usize> for Subset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = Subset::empty();
        for x in iter {
            s.insert(x);
        }
        s
    }
}

impl IntoIterator for &Subset {
    type Item = usize;
    type IntoIter = Iter;
    fn into_iter(self) -> Iter {
        self.iter()
    }
}

pub struct Iter {
    words: [u64; WORDS],
    word: usize,
}

impl Iterator for Iter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        while self.word < WORDS {
            let w = self.words[self.word];
            if w != 0 {
                let bit = w.trailing_zeros() as usize;
                self.words[self.word] &= w - 1;
                return Some(self.word * 64 + bit);
            }
            self.word += 1;
        }
        None
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for Subset {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for Subset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        if let Some(bad) = v.iter().find(|&&x| x >= MAX_ELEMENTS) {
            return Err(serde::de::Error::custom(format!(
                "element {bad} exceeds {MAX_ELEMENTS}"
            )));
        }
        Ok(v.into_iter().collect())
    }
}
