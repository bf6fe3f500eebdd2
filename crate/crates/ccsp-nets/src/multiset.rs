//! Finitely supported multisets, the algebra underlying markings, presets,
//! postsets and linkings.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// A multiset over `T`: a map from elements to positive counts.
///
/// The representation is normalized: no entry is ever stored with count 0,
/// so structural equality coincides with multiset equality. Iteration order
/// is the `Ord` order of `T`, which keeps every algorithm built on top of
/// this type deterministic.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Multiset<T: Ord>(BTreeMap<T, u64>);

/// Error returned by [`Multiset::checked_sub`] when the subtrahend is not
/// pointwise below the minuend.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("multiset difference underflow")]
pub struct Underflow;

impl<T: Ord> Multiset<T> {
    pub fn new() -> Self {
        Multiset(BTreeMap::new())
    }

    pub fn singleton(x: T) -> Self {
        let mut m = BTreeMap::new();
        m.insert(x, 1);
        Multiset(m)
    }

    /// Adds `n` copies of `x`.
    pub fn insert(&mut self, x: T, n: u64) {
        if n > 0 {
            *self.0.entry(x).or_insert(0) += n;
        }
    }

    pub fn count(&self, x: &T) -> u64 {
        self.0.get(x).copied().unwrap_or(0)
    }

    pub fn contains(&self, x: &T) -> bool {
        self.0.contains_key(x)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of distinct elements in the support.
    pub fn support_len(&self) -> usize {
        self.0.len()
    }

    /// Total count `|A|`, summed over the support.
    pub fn total(&self) -> u64 {
        self.0.values().sum()
    }

    /// `(element, count)` pairs in element order.
    pub fn iter(&self) -> impl Iterator<Item = (&T, u64)> {
        self.0.iter().map(|(x, &n)| (x, n))
    }

    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.0.keys()
    }

    /// True iff every count is at most 1, i.e. the multiset is a plain set.
    pub fn is_set(&self) -> bool {
        self.0.values().all(|&n| n <= 1)
    }

    /// Pointwise sum `A + B`.
    pub fn sum(&self, other: &Self) -> Self
    where
        T: Clone,
    {
        let mut out = self.clone();
        for (x, n) in other.iter() {
            out.insert(x.clone(), n);
        }
        out
    }

    /// Pointwise difference `A - B`, defined only when `B <= A`.
    pub fn checked_sub(&self, other: &Self) -> Result<Self, Underflow>
    where
        T: Clone,
    {
        if !other.leq(self) {
            return Err(Underflow);
        }
        let mut out = BTreeMap::new();
        for (x, n) in self.iter() {
            let m = n - other.count(x);
            if m > 0 {
                out.insert(x.clone(), m);
            }
        }
        Ok(Multiset(out))
    }

    /// Pointwise order `A <= B`.
    pub fn leq(&self, other: &Self) -> bool {
        self.iter().all(|(x, n)| n <= other.count(x))
    }

    /// Pointwise minimum `A ∩ B`.
    pub fn intersection(&self, other: &Self) -> Self
    where
        T: Clone,
    {
        let mut out = BTreeMap::new();
        for (x, n) in self.iter() {
            let m = n.min(other.count(x));
            if m > 0 {
                out.insert(x.clone(), m);
            }
        }
        Multiset(out)
    }

    /// Expands the multiset into one entry per copy, in element order.
    pub fn expand(&self) -> Vec<&T> {
        let mut out = Vec::new();
        for (x, n) in self.iter() {
            for _ in 0..n {
                out.push(x);
            }
        }
        out
    }

    /// All sub-multisets `c <= self`, in a deterministic order.
    pub fn sub_multisets(&self) -> Vec<Self>
    where
        T: Clone,
    {
        let entries: Vec<(&T, u64)> = self.iter().collect();
        let mut out = vec![Multiset::new()];
        for (x, n) in entries {
            let mut next = Vec::with_capacity(out.len() * (n as usize + 1));
            for c in &out {
                for k in 0..=n {
                    let mut c2 = c.clone();
                    c2.insert((*x).clone(), k);
                    next.push(c2);
                }
            }
            out = next;
        }
        out
    }

    pub fn map<U: Ord>(&self, mut f: impl FnMut(&T) -> U) -> Multiset<U> {
        let mut out = Multiset::new();
        for (x, n) in self.iter() {
            out.insert(f(x), n);
        }
        out
    }
}

impl<T: Ord + Clone> FromIterator<(T, u64)> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = (T, u64)>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for (x, n) in iter {
            m.insert(x, n);
        }
        m
    }
}

impl<T: Ord + Clone> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        iter.into_iter().map(|x| (x, 1)).collect()
    }
}

impl<T: Ord + fmt::Debug> fmt::Debug for Multiset<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.0.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ms(pairs: &[(&str, u64)]) -> Multiset<String> {
        pairs.iter().map(|(x, n)| (x.to_string(), *n)).collect()
    }

    #[test]
    fn sum_examples() {
        assert_eq!(ms(&[("s", 1)]).sum(&ms(&[("s", 1)])), ms(&[("s", 2)]));
        assert_eq!(ms(&[]).sum(&ms(&[("s", 3)])), ms(&[("s", 3)]));
        assert_eq!(
            ms(&[("s", 1), ("u", 2)]).sum(&ms(&[("u", 1), ("v", 1)])),
            ms(&[("s", 1), ("u", 3), ("v", 1)])
        );
    }

    #[test]
    fn diff_examples() {
        assert_eq!(
            ms(&[("s", 2), ("u", 1)]).checked_sub(&ms(&[("s", 1)])),
            Ok(ms(&[("s", 1), ("u", 1)]))
        );
        assert_eq!(ms(&[("s", 1)]).checked_sub(&ms(&[("s", 1)])), Ok(ms(&[])));
        assert_eq!(ms(&[("s", 1)]).checked_sub(&ms(&[("u", 1)])), Err(Underflow));
    }

    #[test]
    fn leq_examples() {
        assert!(ms(&[("s", 1)]).leq(&ms(&[("s", 2)])));
        assert!(ms(&[]).leq(&ms(&[("x", 7)])));
        assert!(!ms(&[("s", 1), ("u", 1)]).leq(&ms(&[("s", 3)])));
    }

    #[test]
    fn normalization_drops_zero_counts() {
        let mut m = ms(&[]);
        m.insert("x".to_string(), 0);
        assert!(m.is_empty());
        assert_eq!(m, Multiset::new());
    }

    #[test]
    fn sub_multisets_of_pair() {
        let m = ms(&[("a", 1), ("b", 1)]);
        let subs = m.sub_multisets();
        assert_eq!(subs.len(), 4);
        assert!(subs.contains(&ms(&[])));
        assert!(subs.contains(&m));
    }

    fn arb_ms() -> impl Strategy<Value = Multiset<u8>> {
        proptest::collection::btree_map(0u8..6, 1u64..4, 0..5)
            .prop_map(|m| m.into_iter().collect())
    }

    proptest! {
        #[test]
        fn sum_commutative(a in arb_ms(), b in arb_ms()) {
            prop_assert_eq!(a.sum(&b), b.sum(&a));
        }

        #[test]
        fn sum_associative(a in arb_ms(), b in arb_ms(), c in arb_ms()) {
            prop_assert_eq!(a.sum(&b).sum(&c), a.sum(&b.sum(&c)));
        }

        #[test]
        fn diff_inverts_sum(a in arb_ms(), b in arb_ms()) {
            prop_assert_eq!(a.sum(&b).checked_sub(&b), Ok(a));
        }

        #[test]
        fn total_is_additive(a in arb_ms(), b in arb_ms()) {
            prop_assert_eq!(a.sum(&b).total(), a.total() + b.total());
        }
    }
}
