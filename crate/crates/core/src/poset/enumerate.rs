//! Exhaustive enumeration of small posets.

use std::collections::HashMap;

use num_bigint::BigUint;

use super::{is_isomorphic, BigCount, Poset, PosetError};

/// Number of labelled posets on `n ≤ 5` elements, by brute force over all
/// off-diagonal relation matrices.
pub fn enumerate_posets(n: usize) -> Result<BigCount, PosetError> {
    if n > 5 {
        return Err(PosetError::TooLarge(format!(
            "brute-force enumeration is limited to n ≤ 5, got {n}"
        )));
    }
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let mut count = 0u64;
    for mask in 0u32..(1 << cells.len()) {
        // rows[i] = elements above i
        let mut rows = [0u8; 5];
        for (bit, &(i, j)) in cells.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                rows[i] |= 1 << j;
            }
        }
        let antisymmetric = (0..n).all(|i| (0..n).all(|j| rows[i] >> j & 1 == 0 || rows[j] >> i & 1 == 0));
        if !antisymmetric {
            continue;
        }
        let transitive = (0..n).all(|i| {
            (0..n)
                .filter(|&j| rows[i] >> j & 1 == 1)
                .all(|j| rows[j] & !rows[i] == 0)
        });
        if transitive {
            count += 1;
        }
    }
    Ok(BigUint::from(count))
}

/// Number of labelled posets on `n ≤ 6` elements, grown one element at a
/// time: element `v` joins with a down-set `D` below it and an up-set `U`
/// above it, where every element of `D` is already below every element of `U`.
pub fn enumerate_posets_by_extension(n: usize) -> Result<BigCount, PosetError> {
    if n > 6 {
        return Err(PosetError::TooLarge(format!(
            "incremental enumeration is limited to n ≤ 6, got {n}"
        )));
    }
    // each poset as below-masks per element
    let mut level: Vec<Vec<u8>> = vec![Vec::new()];
    for v in 0..n {
        let mut next = Vec::new();
        for below in &level {
            let above: Vec<u8> = (0..v)
                .map(|i| (0..v).filter(|&j| below[j] >> i & 1 == 1).fold(0u8, |m, j| m | 1 << j))
                .collect();
            for d in 0u8..(1 << v) {
                // D down-closed
                if (0..v).any(|e| d >> e & 1 == 1 && below[e] & !d != 0) {
                    continue;
                }
                for u in 0u8..(1 << v) {
                    if u & d != 0 || (0..v).any(|e| u >> e & 1 == 1 && above[e] & !u != 0) {
                        continue;
                    }
                    // every element of D below every element of U
                    if (0..v).any(|e| u >> e & 1 == 1 && below[e] & d != d) {
                        continue;
                    }
                    let mut grown = below.clone();
                    for (e, mask) in grown.iter_mut().enumerate() {
                        if u >> e & 1 == 1 {
                            *mask |= 1 << v;
                        }
                    }
                    grown.push(d);
                    next.push(grown);
                }
            }
        }
        level = next;
    }
    Ok(BigUint::from(level.len()))
}

/// All posets on `0..n` (`n ≤ 7`) for which `0, 1, ..., n-1` is a linear extension.
pub fn naturally_labelled_posets(n: usize) -> Result<Vec<Poset>, PosetError> {
    if n > 7 {
        return Err(PosetError::TooLarge(format!(
            "naturally labelled enumeration is limited to n ≤ 7, got {n}"
        )));
    }
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    for mask in 0u32..(1 << cells.len()) {
        let less = |i: usize, j: usize| {
            i < j && {
                let bit = cells.iter().position(|&c| c == (i, j)).unwrap();
                mask >> bit & 1 == 1
            }
        };
        let transitive = cells
            .iter()
            .all(|&(i, j)| !less(i, j) || (j + 1..n).all(|k| !less(j, k) || less(i, k)));
        if transitive {
            out.push(Poset::from_order_fn(n, less));
        }
    }
    Ok(out)
}

/// One representative per isomorphism class of `n`-element posets (`n ≤ 6`).
pub fn poset_classes(n: usize) -> Result<Vec<Poset>, PosetError> {
    if n > 6 {
        return Err(PosetError::TooLarge(format!(
            "class enumeration is limited to n ≤ 6, got {n}"
        )));
    }
    let mut buckets: HashMap<(usize, Vec<usize>), Vec<Poset>> = HashMap::new();
    let mut reps = Vec::new();
    for p in naturally_labelled_posets(n)? {
        let mut profile: Vec<usize> = (0..n).map(|i| p.up_count(i) * 16 + p.down_count(i)).collect();
        profile.sort_unstable();
        let bucket = buckets.entry((p.comparable_count(), profile)).or_default();
        if !bucket.iter().any(|r| is_isomorphic(r, &p)) {
            bucket.push(p.clone());
            reps.push(p);
        }
    }
    Ok(reps)
}
