//! Semiorder recognition through the two forbidden induced suborders.
//!
//! The forbidden posets are `2+2` (two disjoint 2-chains) and `3+1` (a
//! 3-chain plus an element incomparable to all of it).

use super::{Poset, WORD};

/// `true` iff `p` has an induced `2+2`.
///
/// `p` is `2+2`-free exactly when the strict down-sets of its elements are
/// totally ordered by inclusion.
pub fn contains_two_plus_two(p: &Poset) -> bool {
    let below = p.below_rows();
    for a in 0..p.len() {
        for b in a + 1..p.len() {
            let a_in_b = below[a].iter().zip(&below[b]).all(|(x, y)| x & !y == 0);
            let b_in_a = below[b].iter().zip(&below[a]).all(|(x, y)| x & !y == 0);
            if !a_in_b && !b_in_a {
                return true;
            }
        }
    }
    false
}

/// `true` iff `p` has an induced `3+1`.
///
/// For every incomparable pair `(y, w)` this looks for `x < y < z` with both
/// `x` and `z` incomparable to `w`.
pub fn contains_three_plus_one(p: &Poset) -> bool {
    let n = p.len();
    let words = p.words();
    let below = p.below_rows();
    let comparable: Vec<Vec<u64>> = (0..n)
        .map(|i| {
            let mut row: Vec<u64> = p.above_row(i).iter().zip(&below[i]).map(|(a, b)| a | b).collect();
            row[i / WORD] |= 1 << (i % WORD);
            row
        })
        .collect();
    for y in 0..n {
        for w in 0..n {
            if comparable[y][w / WORD] >> (w % WORD) & 1 == 1 {
                continue;
            }
            let has = |row: &[u64]| (0..words).any(|k| row[k] & !comparable[w][k] != 0);
            if has(&below[y]) && has(p.above_row(y)) {
                return true;
            }
        }
    }
    false
}

/// `true` iff `p` is a semiorder: it has neither `2+2` nor `3+1` as an induced suborder.
pub fn is_semiorder(p: &Poset) -> bool {
    !contains_two_plus_two(p) && !contains_three_plus_one(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::tests::arb_poset;
    use crate::poset::{is_isomorphic, naturally_labelled_posets};
    use proptest::prelude::*;

    fn two_plus_two() -> Poset {
        Poset::from_relations(4, &[(0, 1), (2, 3)]).unwrap()
    }

    fn three_plus_one() -> Poset {
        Poset::from_relations(4, &[(0, 1), (1, 2)]).unwrap()
    }

    /// Unit-interval representation search: a semiorder is a map `f` with
    /// `x < y ⇔ f(y) > f(x) + 1`. Encoded as difference constraints with an
    /// infinitesimal slack `ε` on the strict side; feasible iff the
    /// constraint graph has no negative cycle, with weights compared as
    /// `(integer part, ε part)` pairs.
    fn has_unit_interval_representation(p: &Poset) -> bool {
        let n = p.len();
        // edge u -> v with weight w encodes f(v) - f(u) <= w
        let mut edges: Vec<(usize, usize, (i64, i64))> = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if x == y {
                    continue;
                }
                if p.lt(x, y) {
                    // f(x) - f(y) <= -1 - ε
                    edges.push((y, x, (-1, -1)));
                } else if !p.lt(y, x) {
                    // |f(x) - f(y)| <= 1
                    edges.push((x, y, (1, 0)));
                }
            }
        }
        let add = |a: (i64, i64), b: (i64, i64)| (a.0 + b.0, a.1 + b.1);
        let mut dist = vec![(0i64, 0i64); n];
        for _ in 0..n {
            let mut changed = false;
            for &(u, v, w) in &edges {
                let cand = add(dist[u], w);
                if cand < dist[v] {
                    dist[v] = cand;
                    changed = true;
                }
            }
            if !changed {
                return true;
            }
        }
        edges.iter().all(|&(u, v, w)| add(dist[u], w) >= dist[v])
    }

    fn brute_forbidden(p: &Poset) -> bool {
        let (h, l) = (two_plus_two(), three_plus_one());
        let mut found = false;
        crate::poset::iso::for_each_subset(p.len(), 4, |s| {
            let sub = p.induced(s);
            if is_isomorphic(&sub, &h) || is_isomorphic(&sub, &l) {
                found = true;
            }
        });
        found
    }

    #[test]
    fn examples() {
        assert!(is_semiorder(&Poset::chain(6)));
        assert!(is_semiorder(&Poset::antichain(6)));
        assert!(!is_semiorder(&two_plus_two()));
        assert!(contains_two_plus_two(&two_plus_two()));
        assert!(!is_semiorder(&three_plus_one()));
        assert!(contains_three_plus_one(&three_plus_one()));
        assert!(!contains_two_plus_two(&three_plus_one()));
    }

    #[test]
    fn agrees_with_interval_representation_up_to_six() {
        for n in 1..=6 {
            for p in naturally_labelled_posets(n).unwrap() {
                assert_eq!(is_semiorder(&p), has_unit_interval_representation(&p), "{p:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn agrees_with_induced_subset_search(p in arb_poset(9)) {
            prop_assert_eq!(is_semiorder(&p), !brute_forbidden(&p));
        }
    }
}
