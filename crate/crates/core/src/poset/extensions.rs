//! Exact linear-extension counting and uniform sampling.
//!
//! The table maps each down-set `D` (as a bitmask) to the number of ways of
//! completing `D` to a linear extension of the whole poset. Counts live in
//! `u128`, which holds `34!`, so every poset within the element cap is exact.

use std::collections::HashMap;

use num_bigint::BigUint;
use rand::Rng;

use super::{BigCount, Poset, PosetError};

/// Largest poset the down-set DP accepts.
pub const MAX_EXTENSION_ELEMENTS: usize = 32;

/// Default cap on memoized down-sets.
pub const DEFAULT_STATE_BUDGET: usize = 1 << 24;

/// Memoized completion counts over the down-set lattice of one poset.
#[derive(Debug, Clone)]
pub struct ExtensionTable {
    n: usize,
    below: Vec<u32>,
    completions: HashMap<u32, u128>,
    budget: usize,
}

impl ExtensionTable {
    pub fn new(p: &Poset) -> Result<Self, PosetError> {
        Self::with_budget(p, DEFAULT_STATE_BUDGET)
    }

    pub fn with_budget(p: &Poset, budget: usize) -> Result<Self, PosetError> {
        let n = p.len();
        if n > MAX_EXTENSION_ELEMENTS {
            return Err(PosetError::TooLarge(format!(
                "{n} elements exceeds the down-set DP limit of {MAX_EXTENSION_ELEMENTS}"
            )));
        }
        let below = (0..n).map(|j| p.below(j).fold(0u32, |m, i| m | 1 << i)).collect();
        let mut table = ExtensionTable {
            n,
            below,
            completions: HashMap::new(),
            budget,
        };
        table.completions_from(0)?;
        Ok(table)
    }

    fn full(&self) -> u32 {
        if self.n == 32 {
            u32::MAX
        } else {
            (1u32 << self.n) - 1
        }
    }

    /// Elements that may be appended to the down-set `done`.
    fn available(&self, done: u32) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&m| done >> m & 1 == 0 && self.below[m] & !done == 0)
    }

    fn completions_from(&mut self, done: u32) -> Result<u128, PosetError> {
        if done == self.full() {
            return Ok(1);
        }
        if let Some(&c) = self.completions.get(&done) {
            return Ok(c);
        }
        let mut total = 0u128;
        let next: Vec<usize> = self.available(done).collect();
        for m in next {
            total += self.completions_from(done | 1 << m)?;
        }
        if self.completions.len() >= self.budget {
            return Err(PosetError::TooLarge(format!(
                "down-set lattice exceeds the budget of {} states",
                self.budget
            )));
        }
        self.completions.insert(done, total);
        Ok(total)
    }

    fn lookup(&self, done: u32) -> u128 {
        if done == self.full() {
            1
        } else {
            self.completions.get(&done).copied().unwrap_or(0)
        }
    }

    /// Number of linear extensions.
    pub fn count(&self) -> u128 {
        self.lookup(0)
    }

    pub fn count_big(&self) -> BigCount {
        BigUint::from(self.count())
    }

    /// Number of memoized down-sets.
    pub fn states(&self) -> usize {
        self.completions.len()
    }

    /// Number of linear extensions whose first elements are `prefix`, in order.
    /// Zero when `prefix` is not an ordered stem.
    pub fn prefix_count(&self, prefix: &[usize]) -> u128 {
        let mut done = 0u32;
        for &e in prefix {
            if e >= self.n || done >> e & 1 == 1 || self.below[e] & !done != 0 {
                return 0;
            }
            done |= 1 << e;
        }
        self.lookup(done)
    }

    /// Draws a uniformly random linear extension.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut done = 0u32;
        let mut order = Vec::with_capacity(self.n);
        while order.len() < self.n {
            let total = self.lookup(done);
            let mut r = rng.random_range(0..total);
            let mut chosen = None;
            for m in self.available(done) {
                let c = self.lookup(done | 1 << m);
                if r < c {
                    chosen = Some(m);
                    break;
                }
                r -= c;
            }
            let m = chosen.expect("completion counts are consistent");
            done |= 1 << m;
            order.push(m);
        }
        order
    }
}

/// Exact number of linear extensions, `e(P)`.
pub fn count_linear_extensions(p: &Poset) -> Result<BigCount, PosetError> {
    Ok(ExtensionTable::new(p)?.count_big())
}

/// A uniformly random linear extension of `p`.
pub fn sample_linear_extension<R: Rng + ?Sized>(p: &Poset, rng: &mut R) -> Result<Vec<usize>, PosetError> {
    Ok(ExtensionTable::new(p)?.sample(rng))
}
