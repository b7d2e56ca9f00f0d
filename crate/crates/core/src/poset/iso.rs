//! Isomorphism of small posets and induced-suborder densities.

use std::collections::HashMap;

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::{Poset, PosetError};

/// Largest number of subsets enumerated exactly by [`density`].
pub const EXACT_DENSITY_LIMIT: u64 = 1_000_000;

/// Largest pattern size accepted by [`density`].
pub const MAX_PATTERN: usize = 6;

/// Per-element invariant used to prune the isomorphism search.
fn signatures(p: &Poset) -> Vec<(usize, usize, usize)> {
    let up = p.up_lengths();
    (0..p.len()).map(|i| (p.up_count(i), p.down_count(i), up[i])).collect()
}

/// `true` iff an order-preserving bijection `p → q` exists.
///
/// Backtracking over elements with matching (up-set size, down-set size,
/// longest chain above) signatures. Intended for posets of at most ten
/// elements; it is exact for any size but can be slow on large symmetric inputs.
pub fn is_isomorphic(p: &Poset, q: &Poset) -> bool {
    let n = p.len();
    if n != q.len() || p.comparable_count() != q.comparable_count() {
        return false;
    }
    let sp = signatures(p);
    let sq = signatures(q);
    let mut a = sp.clone();
    let mut b = sq.clone();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return false;
    }
    // map most constrained elements first
    let mut order: Vec<usize> = (0..n).collect();
    let mut class_size: HashMap<(usize, usize, usize), usize> = HashMap::new();
    for s in &sp {
        *class_size.entry(*s).or_default() += 1;
    }
    order.sort_by_key(|&i| (class_size[&sp[i]], i));
    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    extend(p, q, &sp, &sq, &order, 0, &mut image, &mut used)
}

#[allow(clippy::too_many_arguments)]
fn extend(
    p: &Poset,
    q: &Poset,
    sp: &[(usize, usize, usize)],
    sq: &[(usize, usize, usize)],
    order: &[usize],
    depth: usize,
    image: &mut [usize],
    used: &mut [bool],
) -> bool {
    if depth == order.len() {
        return true;
    }
    let x = order[depth];
    for y in 0..q.len() {
        if used[y] || sq[y] != sp[x] {
            continue;
        }
        let consistent = order[..depth].iter().all(|&w| {
            let v = image[w];
            p.lt(w, x) == q.lt(v, y) && p.lt(x, w) == q.lt(y, v)
        });
        if !consistent {
            continue;
        }
        image[x] = y;
        used[y] = true;
        if extend(p, q, sp, sq, order, depth + 1, image, used) {
            return true;
        }
        used[y] = false;
        image[x] = usize::MAX;
    }
    false
}

/// Lookup table from the relation pattern of `k` ordered elements to the
/// isomorphism class of the poset they induce.
///
/// A pattern is the `k × k` bit matrix with bit `i * k + j` set when `i < j`.
#[derive(Debug, Clone)]
pub struct IsoClassTable {
    k: usize,
    class_of: Vec<u8>,
    representatives: Vec<Poset>,
}

const INVALID: u8 = u8::MAX;

impl IsoClassTable {
    /// Builds the table for `k ≤ 4` by brute force over all patterns.
    pub fn new(k: usize) -> Result<Self, PosetError> {
        if k == 0 || k > 4 {
            return Err(PosetError::TooLarge(format!(
                "class tables are built for 1 ≤ k ≤ 4, got {k}"
            )));
        }
        let bits = k * k;
        let mut class_of = vec![INVALID; 1 << bits];
        let mut representatives: Vec<Poset> = Vec::new();
        for pattern in 0u32..(1 << bits) {
            if (0..k).any(|i| pattern >> (i * k + i) & 1 == 1) {
                continue;
            }
            let p = Poset::from_order_fn(k, |i, j| pattern >> (i * k + j) & 1 == 1);
            if p.validate().is_err() {
                continue;
            }
            let id = match representatives.iter().position(|r| is_isomorphic(r, &p)) {
                Some(id) => id,
                None => {
                    representatives.push(p);
                    representatives.len() - 1
                }
            };
            class_of[pattern as usize] = id as u8;
        }
        Ok(IsoClassTable {
            k,
            class_of,
            representatives,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn class_count(&self) -> usize {
        self.representatives.len()
    }

    pub fn representatives(&self) -> &[Poset] {
        &self.representatives
    }

    /// Class id of the poset induced on `elements` (length `k`).
    #[inline]
    pub fn classify(&self, p: &Poset, elements: &[usize]) -> usize {
        debug_assert_eq!(elements.len(), self.k);
        let mut pattern = 0usize;
        for (a, &x) in elements.iter().enumerate() {
            for (b, &y) in elements.iter().enumerate() {
                if a != b && p.lt(x, y) {
                    pattern |= 1 << (a * self.k + b);
                }
            }
        }
        self.class_of[pattern] as usize
    }

    /// Class id of a whole `k`-element poset.
    pub fn classify_poset(&self, q: &Poset) -> Option<usize> {
        if q.len() != self.k {
            return None;
        }
        let elements: Vec<usize> = (0..self.k).collect();
        Some(self.classify(q, &elements))
    }

    /// Exact class densities of `p` over all `k`-subsets.
    pub fn exact_profile(&self, p: &Poset) -> Vec<f64> {
        let mut counts = vec![0u64; self.class_count()];
        let mut total = 0u64;
        for_each_subset(p.len(), self.k, |s| {
            counts[self.classify(p, s)] += 1;
            total += 1;
        });
        counts
            .into_iter()
            .map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
            .collect()
    }

    /// Class frequencies over `samples` uniform `k`-subsets of `p`.
    pub fn sampled_counts<R: Rng + ?Sized>(&self, p: &Poset, samples: usize, rng: &mut R) -> Vec<u64> {
        let mut counts = vec![0u64; self.class_count()];
        let mut buf = vec![0usize; self.k];
        for _ in 0..samples {
            for (slot, idx) in buf.iter_mut().zip(sample_indices(rng, p.len(), self.k)) {
                *slot = idx;
            }
            counts[self.classify(p, &buf)] += 1;
        }
        counts
    }
}

/// Calls `f` on every increasing `k`-subset of `0..n`.
pub(crate) fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // rightmost position that can still advance
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Estimate of an induced-suborder density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEstimate {
    pub mean: f64,
    pub stderr: f64,
    /// Whether every subset was enumerated.
    pub exact: bool,
    pub samples: u64,
}

/// Density `t(Q; P)`: the fraction of `|Q|`-element subsets of `P` that
/// induce a poset isomorphic to `Q`.
///
/// Subsets are unordered. When `C(|P|, |Q|)` is at most
/// [`EXACT_DENSITY_LIMIT`] every subset is enumerated and `stderr` is 0;
/// otherwise `samples` uniform subsets are drawn and `stderr` is the
/// binomial standard error.
pub fn density<R: Rng + ?Sized>(
    q: &Poset,
    p: &Poset,
    samples: usize,
    rng: &mut R,
) -> Result<DensityEstimate, PosetError> {
    let k = q.len();
    if k > MAX_PATTERN {
        return Err(PosetError::QTooLarge(k));
    }
    if k > p.len() || k == 0 {
        return Ok(DensityEstimate {
            mean: if k == 0 { 1.0 } else { 0.0 },
            stderr: 0.0,
            exact: true,
            samples: 0,
        });
    }
    let q_relations = q.comparable_count();
    let matches = |s: &[usize]| {
        let sub = p.induced(s);
        sub.comparable_count() == q_relations && is_isomorphic(&sub, q)
    };
    let subsets = binomial(p.len() as u64, k as u64);
    if subsets <= EXACT_DENSITY_LIMIT {
        let mut hits = 0u64;
        for_each_subset(p.len(), k, |s| {
            if matches(s) {
                hits += 1;
            }
        });
        return Ok(DensityEstimate {
            mean: hits as f64 / subsets as f64,
            stderr: 0.0,
            exact: true,
            samples: subsets,
        });
    }
    let samples = samples.max(1);
    let mut hits = 0u64;
    let mut buf: Vec<usize> = Vec::with_capacity(k);
    for _ in 0..samples {
        buf.clear();
        buf.extend(sample_indices(rng, p.len(), k));
        buf.sort_unstable();
        if matches(&buf) {
            hits += 1;
        }
    }
    let mean = hits as f64 / samples as f64;
    Ok(DensityEstimate {
        mean,
        stderr: (mean * (1.0 - mean) / samples as f64).sqrt(),
        exact: false,
        samples: samples as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::tests::{arb_poset, diamond};
    use proptest::prelude::*;
    use rand::SeedableRng;

    #[test]
    fn isomorphism_examples() {
        assert!(is_isomorphic(&Poset::chain(3), &Poset::chain(3)));
        assert!(!is_isomorphic(&Poset::chain(3), &Poset::antichain(3)));
        let d1 = diamond();
        let d2 = Poset::from_relations(4, &[(0, 2), (0, 1), (2, 3), (1, 3)]).unwrap();
        assert!(is_isomorphic(&d1, &d2));
        let relabelled = Poset::from_relations(4, &[(3, 0), (3, 2), (0, 1), (2, 1)]).unwrap();
        assert!(is_isomorphic(&d1, &relabelled));
        // N poset vs 2+2 plus an extra relation: same relation count, not isomorphic
        let n_poset = Poset::from_relations(4, &[(0, 2), (1, 2), (1, 3)]).unwrap();
        let other = Poset::from_relations(4, &[(0, 1), (2, 3), (0, 3)]).unwrap();
        assert!(is_isomorphic(&n_poset, &other));
        let vee = Poset::from_relations(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(!is_isomorphic(&n_poset, &vee));
    }

    #[test]
    fn class_tables_have_known_sizes() {
        let sizes: Vec<usize> = (1..=4).map(|k| IsoClassTable::new(k).unwrap().class_count()).collect();
        assert_eq!(sizes, vec![1, 2, 5, 16]);
        assert!(IsoClassTable::new(5).is_err());
    }

    #[test]
    fn density_examples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let two_chain = Poset::chain(2);
        let d = density(&two_chain, &Poset::chain(9), 10, &mut rng).unwrap();
        assert_eq!(d.mean, 1.0);
        let d = density(&two_chain, &Poset::antichain(9), 10, &mut rng).unwrap();
        assert_eq!(d.mean, 0.0);
        let d = density(&two_chain, &diamond(), 10, &mut rng).unwrap();
        assert!(d.exact);
        assert_eq!(d.mean, 5.0 / 6.0);
        assert_eq!(
            density(&Poset::chain(7), &diamond(), 10, &mut rng),
            Err(PosetError::QTooLarge(7))
        );
    }

    #[test]
    fn sampled_density_tracks_exact_value() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        // 200-chain plus nothing: sampled mode (C(200,3) > 10^6)
        let p = Poset::from_order_fn(200, |i, j| i < j && (i % 2 == j % 2));
        let q = Poset::chain(2);
        let sampled = density(&Poset::chain(3), &p, 20_000, &mut rng).unwrap();
        assert!(!sampled.exact);
        // exact value: all three in the same parity class
        let exact = 2.0 * binomial(100, 3) as f64 / binomial(200, 3) as f64;
        assert!((sampled.mean - exact).abs() < 4.0 * sampled.stderr);
        let pair = density(&q, &p, 0, &mut rng).unwrap();
        assert!(pair.exact);
    }

    #[test]
    fn subsets_enumerate_binomially() {
        for n in 0..8 {
            for k in 0..=n {
                let mut count = 0u64;
                for_each_subset(n, k, |s| {
                    assert!(s.windows(2).all(|w| w[0] < w[1]));
                    count += 1;
                });
                assert_eq!(count, binomial(n as u64, k as u64), "n={n} k={k}");
            }
        }
    }

    proptest! {
        #[test]
        fn exact_profiles_sum_to_one(p in arb_poset(8), k in 1usize..=4) {
            prop_assume!(p.len() >= k);
            let table = IsoClassTable::new(k).unwrap();
            let total: f64 = table.exact_profile(&p).iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn table_agrees_with_generic_density(p in arb_poset(8), k in 1usize..=4) {
            prop_assume!(p.len() >= k);
            let table = IsoClassTable::new(k).unwrap();
            let profile = table.exact_profile(&p);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
            for (id, q) in table.representatives().iter().enumerate() {
                let d = density(q, &p, 1, &mut rng).unwrap();
                prop_assert!((d.mean - profile[id]).abs() < 1e-12);
            }
        }

        #[test]
        fn relabelling_preserves_isomorphism(p in arb_poset(9), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..p.len()).collect();
            perm.shuffle(&mut rng);
            let q = p.induced(&perm);
            prop_assert!(is_isomorphic(&p, &q));
        }
    }
}
