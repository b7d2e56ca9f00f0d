//! Finite strict partial orders stored as dense bit matrices.
//!
//! Elements are the indices `0..n`. Row `i` of the matrix holds every `j`
//! with `i < j`; the full (transitively closed) relation is always stored,
//! so comparability queries are O(1) and closure is a sequence of word-wide
//! row ORs.
//!
//! Heights follow the edge-count convention throughout this crate: an
//! antichain has height 0 and an `n`-chain has height `n - 1`.

mod enumerate;
mod extensions;
mod iso;
mod matching;
mod semiorder;

use std::collections::VecDeque;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use enumerate::{enumerate_posets, enumerate_posets_by_extension, naturally_labelled_posets, poset_classes};
pub use extensions::{
    count_linear_extensions, sample_linear_extension, ExtensionTable, DEFAULT_STATE_BUDGET, MAX_EXTENSION_ELEMENTS,
};
pub(crate) use iso::binomial as binomial_u64;
pub use iso::{density, is_isomorphic, DensityEstimate, IsoClassTable, EXACT_DENSITY_LIMIT};
pub use semiorder::{contains_three_plus_one, contains_two_plus_two, is_semiorder};

/// Exact nonnegative integer used for linear-extension and poset counts.
pub type BigCount = BigUint;

const WORD: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PosetError {
    #[error("relation contains a directed cycle through element {0}")]
    Cycle(usize),
    #[error("element {index} out of range for poset of size {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("elements {0} and {1} are not comparable")]
    NotComparable(usize, usize),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("pattern poset has {0} elements; at most 6 are supported")]
    QTooLarge(usize),
    #[error("invalid poset: {0}")]
    Invalid(String),
}

/// A finite strict partial order on `0..n`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poset {
    n: usize,
    words: usize,
    lt: Vec<u64>,
}

impl std::fmt::Debug for Poset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Poset")
            .field("n", &self.n)
            .field("covers", &self.covering_pairs())
            .finish()
    }
}

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(WORD)
}

/// Iterates the set bits of a bit row.
pub(crate) fn ones(row: &[u64]) -> impl Iterator<Item = usize> + '_ {
    row.iter().enumerate().flat_map(|(w, &word)| {
        let mut bits = word;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * WORD + tz)
            }
        })
    })
}

impl Poset {
    /// The empty relation on `n` elements.
    pub fn antichain(n: usize) -> Self {
        let words = words_for(n);
        Poset {
            n,
            words,
            lt: vec![0; n * words],
        }
    }

    /// The chain `0 < 1 < ... < n-1`.
    pub fn chain(n: usize) -> Self {
        Self::from_order_fn(n, |i, j| i < j)
    }

    /// Builds the transitive closure of `pairs`, where `(i, j)` means `i < j`.
    pub fn from_relations(n: usize, pairs: &[(usize, usize)]) -> Result<Self, PosetError> {
        let mut adj = vec![Vec::new(); n];
        let mut indeg = vec![0usize; n];
        for &(i, j) in pairs {
            for index in [i, j] {
                if index >= n {
                    return Err(PosetError::IndexOutOfRange { index, n });
                }
            }
            if i == j {
                return Err(PosetError::Cycle(i));
            }
            adj[i].push(j);
            indeg[j] += 1;
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(i) = queue.pop_front() {
            topo.push(i);
            for &j in &adj[i] {
                indeg[j] -= 1;
                if indeg[j] == 0 {
                    queue.push_back(j);
                }
            }
        }
        if topo.len() < n {
            let stuck = (0..n).find(|&i| indeg[i] > 0).unwrap_or(0);
            return Err(PosetError::Cycle(stuck));
        }
        let mut p = Self::antichain(n);
        let words = p.words;
        for &i in topo.iter().rev() {
            let mut row = vec![0u64; words];
            for &j in &adj[i] {
                row[j / WORD] |= 1 << (j % WORD);
                let other = &p.lt[j * words..(j + 1) * words];
                for (r, o) in row.iter_mut().zip(other) {
                    *r |= o;
                }
            }
            p.lt[i * words..(i + 1) * words].copy_from_slice(&row);
        }
        Ok(p)
    }

    /// Builds a poset from a predicate that is already a strict partial order.
    ///
    /// The predicate is trusted; call [`Poset::validate`] when it is not.
    pub fn from_order_fn(n: usize, mut less: impl FnMut(usize, usize) -> bool) -> Self {
        let mut p = Self::antichain(n);
        for i in 0..n {
            for j in 0..n {
                if i != j && less(i, j) {
                    p.set(i, j);
                }
            }
        }
        p
    }

    /// Wraps flat, transitively closed above-rows of `words_for(n)` words each.
    pub(crate) fn from_above_rows(n: usize, lt: Vec<u64>) -> Self {
        let words = words_for(n);
        debug_assert_eq!(lt.len(), n * words);
        Poset { n, words, lt }
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize) {
        self.lt[i * self.words + j / WORD] |= 1 << (j % WORD);
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `true` iff `i < j`.
    #[inline]
    pub fn lt(&self, i: usize, j: usize) -> bool {
        self.lt[i * self.words + j / WORD] >> (j % WORD) & 1 == 1
    }

    #[inline]
    pub fn comparable(&self, i: usize, j: usize) -> bool {
        self.lt(i, j) || self.lt(j, i)
    }

    /// Bit row of the elements above `i`.
    #[inline]
    pub fn above_row(&self, i: usize) -> &[u64] {
        &self.lt[i * self.words..(i + 1) * self.words]
    }

    pub(crate) fn words(&self) -> usize {
        self.words
    }

    pub fn above(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        ones(self.above_row(i))
    }

    pub fn below(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&i| self.lt(i, j))
    }

    /// Bit rows of the elements below each element (the transposed relation).
    pub fn below_rows(&self) -> Vec<Vec<u64>> {
        let mut rows = vec![vec![0u64; self.words]; self.n];
        for i in 0..self.n {
            for j in self.above(i) {
                rows[j][i / WORD] |= 1 << (i % WORD);
            }
        }
        rows
    }

    pub fn up_count(&self, i: usize) -> usize {
        self.above_row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn down_count(&self, j: usize) -> usize {
        self.below(j).count()
    }

    /// Checks irreflexivity, antisymmetry and transitivity.
    pub fn validate(&self) -> Result<(), PosetError> {
        for i in 0..self.n {
            if self.lt(i, i) {
                return Err(PosetError::Invalid(format!("{i} < {i}")));
            }
            for j in self.above(i) {
                if self.lt(j, i) {
                    return Err(PosetError::Invalid(format!("{i} < {j} < {i}")));
                }
                let (ri, rj) = (self.above_row(i), self.above_row(j));
                if rj.iter().zip(ri).any(|(b, a)| b & !a != 0) {
                    return Err(PosetError::Invalid(format!("not transitive above {i} < {j}")));
                }
            }
        }
        Ok(())
    }

    /// All ordered pairs `(i, j)` with `i < j`.
    pub fn relations(&self) -> Vec<(usize, usize)> {
        (0..self.n).flat_map(|i| self.above(i).map(move |j| (i, j))).collect()
    }

    pub fn comparable_count(&self) -> usize {
        self.lt.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of unordered incomparable pairs, `i(P)`.
    pub fn incomparable_count(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2 - self.comparable_count()
    }

    /// Covering pairs `(i, j)`: `i < j` with nothing strictly between.
    pub fn covering_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            let ri = self.above_row(i);
            // j covers i iff no k above i lies below j, i.e. j is not in the
            // union of rows above the other successors of i.
            let mut shadow = vec![0u64; self.words];
            for k in self.above(i) {
                for (s, r) in shadow.iter_mut().zip(self.above_row(k)) {
                    *s |= r;
                }
            }
            for (w, (&a, &s)) in ri.iter().zip(&shadow).enumerate() {
                let mut bits = a & !s;
                while bits != 0 {
                    out.push((i, w * WORD + bits.trailing_zeros() as usize));
                    bits &= bits - 1;
                }
            }
        }
        out
    }

    /// Number of covering pairs, `c(P)`.
    pub fn cover_count(&self) -> usize {
        self.covering_pairs().len()
    }

    /// A topological order: elements with more successors come first.
    pub fn topological_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n).collect();
        let ups: Vec<usize> = (0..self.n).map(|i| self.up_count(i)).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(ups[i]), i));
        order
    }

    /// Length of the longest chain above each element (edge count).
    pub fn up_lengths(&self) -> Vec<usize> {
        let mut up = vec![0usize; self.n];
        for &i in self.topological_order().iter().rev() {
            up[i] = self.above(i).map(|j| up[j] + 1).max().unwrap_or(0);
        }
        up
    }

    /// Length of the longest chain, counted in edges (antichain → 0).
    pub fn height(&self) -> usize {
        self.up_lengths().into_iter().max().unwrap_or(0)
    }

    /// Size of a largest antichain, via a minimum chain cover (Dilworth).
    pub fn width(&self) -> usize {
        self.n - matching::max_matching(self)
    }

    /// Minimal elements.
    pub fn minimal(&self) -> Vec<usize> {
        let mut has_below = vec![false; self.n];
        for i in 0..self.n {
            for j in self.above(i) {
                has_below[j] = true;
            }
        }
        (0..self.n).filter(|&j| !has_below[j]).collect()
    }

    /// Maximal elements.
    pub fn maximal(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.up_count(i) == 0).collect()
    }

    /// Elements comparable to every other element.
    pub fn find_posts(&self) -> Vec<usize> {
        let mut comparable = vec![0usize; self.n];
        for i in 0..self.n {
            for j in self.above(i) {
                comparable[i] += 1;
                comparable[j] += 1;
            }
        }
        (0..self.n).filter(|&i| comparable[i] + 1 == self.n).collect()
    }

    /// The elements of the interval `[a, b]`, in increasing index order.
    pub fn interval_elements(&self, a: usize, b: usize) -> Result<Vec<usize>, PosetError> {
        for index in [a, b] {
            if index >= self.n {
                return Err(PosetError::IndexOutOfRange { index, n: self.n });
            }
        }
        if a == b {
            return Ok(vec![a]);
        }
        if !self.lt(a, b) {
            return Err(PosetError::NotComparable(a, b));
        }
        Ok((0..self.n)
            .filter(|&z| z == a || z == b || (self.lt(a, z) && self.lt(z, b)))
            .collect())
    }

    /// The induced subposet on `[a, b] = {z : a ≤ z ≤ b}`.
    pub fn interval(&self, a: usize, b: usize) -> Result<Poset, PosetError> {
        Ok(self.induced(&self.interval_elements(a, b)?))
    }

    /// The induced subposet on `elements`, relabelled `0..elements.len()` in the given order.
    pub fn induced(&self, elements: &[usize]) -> Poset {
        Poset::from_order_fn(elements.len(), |i, j| self.lt(elements[i], elements[j]))
    }

    /// `true` iff `elements` is closed downwards.
    pub fn is_down_set(&self, elements: &[usize]) -> bool {
        let mut member = vec![false; self.n];
        for &e in elements {
            member[e] = true;
        }
        elements.iter().all(|&e| self.below(e).all(|b| member[b]))
    }

    /// `true` iff the identity order `0, 1, ..., n-1` is a linear extension.
    pub fn is_naturally_labelled(&self) -> bool {
        (0..self.n).all(|i| self.below(i).all(|j| j < i))
    }

    /// `true` iff `order` is a permutation of `0..n` that respects the relation.
    pub fn is_linear_extension(&self, order: &[usize]) -> bool {
        if order.len() != self.n {
            return false;
        }
        let mut pos = vec![usize::MAX; self.n];
        for (k, &e) in order.iter().enumerate() {
            if e >= self.n || pos[e] != usize::MAX {
                return false;
            }
            pos[e] = k;
        }
        self.relations().into_iter().all(|(i, j)| pos[i] < pos[j])
    }

    /// Serializable form listing covering pairs only.
    pub fn to_json(&self) -> PosetJson {
        PosetJson {
            n: self.n,
            relations: self.covering_pairs().into_iter().map(|(i, j)| [i, j]).collect(),
        }
    }
}

/// On-disk poset format: `{"n": 4, "relations": [[0,1], ...]}` with covering pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosetJson {
    pub n: usize,
    pub relations: Vec<[usize; 2]>,
}

impl TryFrom<PosetJson> for Poset {
    type Error = PosetError;

    fn try_from(value: PosetJson) -> Result<Self, Self::Error> {
        let pairs: Vec<(usize, usize)> = value.relations.iter().map(|r| (r[0], r[1])).collect();
        Poset::from_relations(value.n, &pairs)
    }
}

impl Serialize for Poset {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Poset {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = PosetJson::deserialize(deserializer)?;
        Poset::try_from(raw).map_err(serde::de::Error::custom)
    }
}

/// A poset whose elements carry distinct real labels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledPoset {
    pub poset: Poset,
    pub labels: Vec<f64>,
}

impl LabelledPoset {
    pub fn new(poset: Poset, labels: Vec<f64>) -> Result<Self, PosetError> {
        if labels.len() != poset.len() {
            return Err(PosetError::Invalid(format!(
                "{} labels for {} elements",
                labels.len(),
                poset.len()
            )));
        }
        if labels.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(PosetError::Invalid("label outside [0, 1]".into()));
        }
        let mut sorted = labels.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(PosetError::Invalid("labels are not distinct".into()));
        }
        Ok(LabelledPoset { poset, labels })
    }
}
