//! Order-invariant measures on natural extensions.
//!
//! The ladder is the infinite poset `a_1, a_2, ...` with `a_j > a_i` exactly
//! when `j > i + 1`. Elements are indexed from 0 here, so index `i` is
//! `a_{i+1}`. Every down-set of the ladder is `{0..m}` or `{0..m} ∪ {m+1}`,
//! so at most two minimal elements remain at any stage.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poset::{ExtensionTable, LabelledPoset, Poset, PosetError};
use crate::rng::run_replicas;

/// `φ = (√5 − 1) / 2`, the root of `φ² = 1 − φ` in `(0, 1)`.
pub const PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InvarianceError {
    #[error("invalid stem: {0}")]
    InvalidStem(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Poset(#[from] PosetError),
}

/// An integer combination `a + bφ`, closed under multiplication via `φ² = 1 − φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GoldenInt {
    pub a: i64,
    pub b: i64,
}

impl GoldenInt {
    pub const ZERO: GoldenInt = GoldenInt { a: 0, b: 0 };
    pub const ONE: GoldenInt = GoldenInt { a: 1, b: 0 };
    pub const PHI: GoldenInt = GoldenInt { a: 0, b: 1 };
    pub const ONE_MINUS_PHI: GoldenInt = GoldenInt { a: 1, b: -1 };

    pub fn to_f64(self) -> f64 {
        self.a as f64 + self.b as f64 * PHI
    }
}

impl std::ops::Mul for GoldenInt {
    type Output = GoldenInt;

    fn mul(self, o: GoldenInt) -> GoldenInt {
        let bd = self.b * o.b;
        GoldenInt {
            a: self.a * o.a + bd,
            b: self.a * o.b + self.b * o.a - bd,
        }
    }
}

impl std::ops::Add for GoldenInt {
    type Output = GoldenInt;

    fn add(self, o: GoldenInt) -> GoldenInt {
        GoldenInt {
            a: self.a + o.a,
            b: self.b + o.b,
        }
    }
}

impl fmt::Display for GoldenInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}φ", self.a, self.b)
    }
}

/// The ladder truncated to its first `n` elements.
pub fn ladder_poset(n: usize) -> Poset {
    Poset::from_order_fn(n, |i, j| j > i + 1)
}

/// A sequence of distinct elements, written `a2,a1,a3` (1-based names).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct OrderedStem(pub Vec<usize>);

impl OrderedStem {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `true` iff every prefix is a down-set of `p` (elements must lie in `p`).
    pub fn is_stem_of(&self, p: &Poset) -> bool {
        let mut seen = vec![false; p.len()];
        for &e in &self.0 {
            if e >= p.len() || seen[e] || !p.below(e).all(|b| seen[b]) {
                return false;
            }
            seen[e] = true;
        }
        true
    }

    /// `true` iff every prefix is a down-set of the infinite ladder.
    pub fn is_ladder_stem(&self) -> bool {
        let top = self.0.iter().max().map_or(0, |m| m + 1);
        self.is_stem_of(&ladder_poset(top))
    }

    /// All ladder stems of length `k`.
    pub fn all_ladder_stems(k: usize) -> Vec<OrderedStem> {
        let p = ladder_poset(k + 1);
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(p: &Poset, k: usize, cur: &mut Vec<usize>, out: &mut Vec<OrderedStem>) {
            if cur.len() == k {
                out.push(OrderedStem(cur.clone()));
                return;
            }
            for e in 0..p.len() {
                if !cur.contains(&e) && p.below(e).all(|b| cur.contains(&b)) {
                    cur.push(e);
                    rec(p, k, cur, out);
                    cur.pop();
                }
            }
        }
        rec(&p, k, &mut cur, &mut out);
        out
    }

    fn sorted(&self) -> Vec<usize> {
        let mut s = self.0.clone();
        s.sort_unstable();
        s
    }

    /// `true` iff both stems use the same element set.
    pub fn same_set(&self, other: &OrderedStem) -> bool {
        self.sorted() == other.sorted()
    }
}

impl fmt::Display for OrderedStem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.0.iter().map(|i| format!("a{}", i + 1)).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for OrderedStem {
    type Err = InvarianceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let index: usize = part
                .strip_prefix('a')
                .and_then(|d| d.parse().ok())
                .filter(|&i| i >= 1)
                .ok_or_else(|| InvarianceError::InvalidStem(format!("bad element {part:?}")))?;
            if out.contains(&(index - 1)) {
                return Err(InvarianceError::InvalidStem(format!("{part} repeated")));
            }
            out.push(index - 1);
        }
        Ok(OrderedStem(out))
    }
}

impl TryFrom<String> for OrderedStem {
    type Error = InvarianceError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<OrderedStem> for String {
    fn from(s: OrderedStem) -> String {
        s.to_string()
    }
}

/// Sequential sampler for the order-invariant measure on the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoldenRatioProcess {
    pub phi: f64,
}

impl Default for GoldenRatioProcess {
    fn default() -> Self {
        GoldenRatioProcess { phi: PHI }
    }
}

/// Consumption state: `{0..next}` plus possibly `next + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct LadderState {
    next: usize,
    skipped: bool,
}

impl LadderState {
    /// Minimal elements of what is left, with the probability of each.
    fn choices(self) -> [(usize, GoldenInt); 2] {
        if self.skipped {
            [(self.next, GoldenInt::ONE), (usize::MAX, GoldenInt::ZERO)]
        } else {
            [(self.next, GoldenInt::PHI), (self.next + 1, GoldenInt::ONE_MINUS_PHI)]
        }
    }

    fn take(self, e: usize) -> LadderState {
        match (self.skipped, e == self.next) {
            // taking the lower element of {0..next} ∪ {next+1} closes the gap
            (true, true) => LadderState {
                next: self.next + 2,
                skipped: false,
            },
            (false, true) => LadderState {
                next: self.next + 1,
                skipped: false,
            },
            (false, false) => LadderState {
                next: self.next,
                skipped: true,
            },
            (true, false) => unreachable!("only one minimal element"),
        }
    }
}

impl GoldenRatioProcess {
    /// The first `n_steps` elements of a random natural extension of the ladder.
    pub fn sample<R: Rng + ?Sized>(&self, n_steps: usize, rng: &mut R) -> OrderedStem {
        let mut state = LadderState {
            next: 0,
            skipped: false,
        };
        let mut seq = Vec::with_capacity(n_steps);
        for _ in 0..n_steps {
            let e = if state.skipped || rng.random::<f64>() < self.phi {
                state.next
            } else {
                state.next + 1
            };
            seq.push(e);
            state = state.take(e);
        }
        OrderedStem(seq)
    }
}

/// `λ(1), ..., λ(n_steps)` from the golden-ratio process.
pub fn ladder_sampler<R: Rng + ?Sized>(n_steps: usize, rng: &mut R) -> Result<OrderedStem, InvarianceError> {
    if n_steps == 0 {
        return Err(InvarianceError::InvalidParameter("n_steps must be at least 1".into()));
    }
    Ok(GoldenRatioProcess::default().sample(n_steps, rng))
}

/// Exact `μ(E(stem))` under the golden-ratio process, as `a + bφ`.
pub fn ladder_stem_probability(stem: &OrderedStem) -> Result<GoldenInt, InvarianceError> {
    if !stem.is_ladder_stem() {
        return Err(InvarianceError::InvalidStem(stem.to_string()));
    }
    let mut state = LadderState {
        next: 0,
        skipped: false,
    };
    let mut prob = GoldenInt::ONE;
    for &e in &stem.0 {
        let (_, w) = state
            .choices()
            .into_iter()
            .find(|&(c, _)| c == e)
            .expect("valid stem element is minimal");
        prob = prob * w;
        state = state.take(e);
    }
    Ok(prob)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub replicas: usize,
}

/// Monte Carlo `μ(E(stem))` on replica streams derived from one draw of `rng`.
pub fn stem_probability_mc<R: Rng + ?Sized>(
    stem: &OrderedStem,
    replicas: usize,
    rng: &mut R,
) -> Result<Estimate, InvarianceError> {
    if !stem.is_ladder_stem() || stem.is_empty() {
        return Err(InvarianceError::InvalidStem(stem.to_string()));
    }
    if replicas == 0 {
        return Err(InvarianceError::InvalidParameter("replicas must be at least 1".into()));
    }
    let seed: u64 = rng.random();
    let process = GoldenRatioProcess::default();
    let hits: usize = chunked_count(seed, replicas, |r| process.sample(stem.len(), r) == *stem);
    let mean = hits as f64 / replicas as f64;
    Ok(Estimate {
        mean,
        stderr: (mean * (1.0 - mean) / replicas as f64).sqrt(),
        replicas,
    })
}

const CHUNK: usize = 4096;

/// Counts successes of `trial` over `replicas` draws, in fixed-size chunks
/// each with its own stream so the result is independent of the worker count.
pub(crate) fn chunked_count<F>(seed: u64, replicas: usize, trial: F) -> usize
where
    F: Fn(&mut crate::rng::ReplicaRng) -> bool + Sync + Send,
{
    let chunks = replicas.div_ceil(CHUNK);
    run_replicas(seed, chunks, |r, c| {
        let len = CHUNK.min(replicas - c * CHUNK);
        (0..len).filter(|_| trial(r)).count()
    })
    .into_iter()
    .sum()
}

/// `ν^P(E(stem))`: the fraction of linear extensions of `p` that begin with `stem`.
pub fn finite_uniform_stem_probability(p: &Poset, stem: &OrderedStem) -> Result<BigRational, InvarianceError> {
    if stem.0.iter().any(|&e| e >= p.len()) {
        return Err(InvarianceError::InvalidStem(format!(
            "{stem} leaves a {}-element poset",
            p.len()
        )));
    }
    let table = ExtensionTable::new(p)?;
    Ok(BigRational::new(
        BigInt::from(table.prefix_count(&stem.0)),
        BigInt::from(table.count()),
    ))
}

/// `ν^k(E(stem))(ω)` for the outcome whose arrival sequence is `arrival`:
/// the fraction of linear extensions `λ` of the order on the first `k`
/// arrivals for which the re-ordered outcome `λ^+[ω]` begins with `stem`.
pub fn nu_k(p: &Poset, arrival: &[usize], k: usize, stem: &OrderedStem) -> Result<BigRational, InvarianceError> {
    if k == 0 || k > arrival.len() {
        return Err(InvarianceError::InvalidParameter(format!(
            "k = {k} with {} arrivals",
            arrival.len()
        )));
    }
    if stem.len() > arrival.len() {
        return Err(InvarianceError::InvalidParameter(
            "stem longer than the observed arrivals".into(),
        ));
    }
    if !OrderedStem(arrival.to_vec()).is_stem_of(p) {
        return Err(InvarianceError::InvalidParameter(
            "arrival is not a natural extension prefix".into(),
        ));
    }
    let zero = || BigRational::from_integer(BigInt::from(0));
    // positions ≥ k are untouched by λ
    if stem.0.iter().enumerate().skip(k).any(|(i, &e)| arrival[i] != e) {
        return Ok(zero());
    }
    let head = &arrival[..k];
    let mut local = Vec::new();
    for &e in stem.0.iter().take(k) {
        match head.iter().position(|&h| h == e) {
            Some(i) => local.push(i),
            None => return Ok(zero()),
        }
    }
    let table = ExtensionTable::new(&p.induced(head))?;
    Ok(BigRational::new(
        BigInt::from(table.prefix_count(&local)),
        BigInt::from(table.count()),
    ))
}

/// One line of the finite DLR check: `E_μ[ν^k(E(stem))]` against `μ(E(stem))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DlrRow {
    pub k: usize,
    pub stem: OrderedStem,
    pub mu: f64,
    pub mean_nu: f64,
    pub stderr: f64,
}

/// Averages `ν^k(E)` over `replicas` golden-ratio outcomes, for every
/// `k ≤ max_k` and every ladder stem of length `1..=max_stem`, on the ladder
/// truncated to `n` elements.
///
/// `ν^k(E)` depends on the outcome only through its first
/// `max(max_k, max_stem)` arrivals, so the replicas are tallied by that
/// prefix and each distinct prefix is evaluated once.
pub fn dlr_check<R: Rng + ?Sized>(
    n: usize,
    max_k: usize,
    max_stem: usize,
    replicas: usize,
    rng: &mut R,
) -> Result<Vec<DlrRow>, InvarianceError> {
    let depth = max_k.max(max_stem);
    if depth == 0 || depth + 1 > n || replicas == 0 {
        return Err(InvarianceError::InvalidParameter(format!(
            "need 1 ≤ k, stem length and k + 1 ≤ n = {n}, replicas ≥ 1"
        )));
    }
    let seed: u64 = rng.random();
    let process = GoldenRatioProcess::default();
    let chunks = replicas.div_ceil(CHUNK);
    let tallies = run_replicas(seed, chunks, |r, c| {
        let mut counts: std::collections::HashMap<Vec<usize>, u64> = std::collections::HashMap::new();
        for _ in 0..CHUNK.min(replicas - c * CHUNK) {
            *counts.entry(process.sample(depth, r).0).or_default() += 1;
        }
        counts
    });
    let mut prefixes: std::collections::BTreeMap<Vec<usize>, u64> = std::collections::BTreeMap::new();
    for t in tallies {
        for (k, v) in t {
            *prefixes.entry(k).or_default() += v;
        }
    }
    let p = ladder_poset(n);
    let mut rows = Vec::new();
    for k in 1..=max_k {
        for len in 1..=max_stem {
            for stem in OrderedStem::all_ladder_stems(len) {
                let (mut s1, mut s2) = (0.0, 0.0);
                for (prefix, &count) in &prefixes {
                    let nu = nu_k(&p, prefix, k, &stem)?;
                    let v = num_traits::ToPrimitive::to_f64(&nu).expect("finite ratio");
                    s1 += v * count as f64;
                    s2 += v * v * count as f64;
                }
                let mean = s1 / replicas as f64;
                let var = (s2 / replicas as f64 - mean * mean).max(0.0);
                rows.push(DlrRow {
                    k,
                    mu: ladder_stem_probability(&stem)?.to_f64(),
                    stem,
                    mean_nu: mean,
                    stderr: (var / replicas as f64).sqrt(),
                });
            }
        }
    }
    Ok(rows)
}

/// An `n`-antichain with iid uniform labels, which are exchangeable.
pub fn exchangeable_antichain<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<LabelledPoset, InvarianceError> {
    if n == 0 {
        return Err(InvarianceError::InvalidParameter("n must be at least 1".into()));
    }
    let mut labels: Vec<f64> = Vec::with_capacity(n);
    while labels.len() < n {
        let l: f64 = rng.random();
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    Ok(LabelledPoset::new(Poset::antichain(n), labels)?)
}

/// Index of the rank permutation of `values` among all `k!` orderings
/// (lexicographic rank of the argsort).
pub fn rank_pattern(values: &[f64]) -> usize {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut rank = 0;
    let mut remaining: Vec<usize> = (0..values.len()).collect();
    for &o in &order {
        let pos = remaining.iter().position(|&r| r == o).expect("present");
        rank = rank * remaining.len() + pos;
        remaining.remove(pos);
    }
    rank
}

/// One square of the quadrant experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantRow {
    pub side: f64,
    pub points: usize,
    /// Probability that the minimal point nearest the origin is the bottom
    /// element of a uniform linear extension; `None` when the square holds
    /// more than the allowed number of points or no points at all.
    pub q: Option<f64>,
}

/// Exploratory `q_N(x)`: one unit-intensity Poisson process on
/// `[0, max side]²`, restricted to nested squares `[0, N]²`.
pub fn quadrant_bottom_probabilities<R: Rng + ?Sized>(
    sides: &[f64],
    max_points: usize,
    rng: &mut R,
) -> Result<Vec<QuadrantRow>, InvarianceError> {
    let top = sides.iter().copied().fold(0.0, f64::max);
    if top.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || max_points > crate::poset::MAX_EXTENSION_ELEMENTS {
        return Err(InvarianceError::InvalidParameter(
            "sides must be positive and max_points ≤ 32".into(),
        ));
    }
    use rand_distr::{Distribution, Poisson};
    let count = Poisson::new(top * top)
        .map_err(|e| InvarianceError::InvalidParameter(e.to_string()))?
        .sample(rng) as usize;
    let pts: Vec<(f64, f64)> = (0..count)
        .map(|_| (top * rng.random::<f64>(), top * rng.random::<f64>()))
        .collect();
    let mut rows = Vec::new();
    for &side in sides {
        let inside: Vec<(f64, f64)> = pts.iter().copied().filter(|p| p.0 <= side && p.1 <= side).collect();
        let q = if inside.is_empty() || inside.len() > max_points {
            None
        } else {
            let p = Poset::from_order_fn(inside.len(), |i, j| {
                inside[i].0 <= inside[j].0 && inside[i].1 <= inside[j].1
            });
            let x = p
                .minimal()
                .into_iter()
                .min_by(|&a, &b| {
                    let r = |i: usize| inside[i].0.hypot(inside[i].1);
                    r(a).total_cmp(&r(b))
                })
                .expect("nonempty poset has a minimal element");
            let table = ExtensionTable::new(&p)?;
            Some(table.prefix_count(&[x]) as f64 / table.count() as f64)
        };
        rows.push(QuadrantRow {
            side,
            points: inside.len(),
            q,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn stem(s: &str) -> OrderedStem {
        s.parse().unwrap()
    }

    #[test]
    fn phi_is_the_golden_root() {
        assert!((PHI * PHI + PHI - 1.0).abs() < 1e-15);
        assert!((PHI - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-16);
        assert_eq!(GoldenInt::PHI * GoldenInt::PHI, GoldenInt::ONE_MINUS_PHI);
    }

    #[test]
    fn ladder_shape() {
        let p = ladder_poset(6);
        assert!(p.lt(0, 2) && !p.lt(0, 1) && !p.lt(1, 0) && p.lt(1, 5));
        // at most two minimal elements after removing any down-set
        for mask in 0u32..1 << 6 {
            let set: Vec<usize> = (0..6).filter(|&e| mask >> e & 1 == 1).collect();
            if !p.is_down_set(&set) || set.len() == 6 {
                continue;
            }
            let rest: Vec<usize> = (0..6).filter(|&e| mask >> e & 1 == 0).collect();
            assert!(p.induced(&rest).minimal().len() <= 2);
        }
    }

    #[test]
    fn stem_parsing() {
        assert_eq!(stem("a2,a1,a3").0, vec![1, 0, 2]);
        assert_eq!(stem("a2,a1,a3").to_string(), "a2,a1,a3");
        assert!("a0".parse::<OrderedStem>().is_err());
        assert!("a1,a1".parse::<OrderedStem>().is_err());
        assert!("b1".parse::<OrderedStem>().is_err());
        assert!(stem("a2,a1").is_ladder_stem());
        assert!(!stem("a3").is_ladder_stem());
        assert_eq!(OrderedStem::all_ladder_stems(1).len(), 2);
        assert_eq!(OrderedStem::all_ladder_stems(3).len(), 5);
    }

    #[test]
    fn exact_stem_probabilities() {
        assert_eq!(ladder_stem_probability(&stem("a1")).unwrap(), GoldenInt::PHI);
        assert_eq!(
            ladder_stem_probability(&stem("a2,a1")).unwrap(),
            GoldenInt::ONE_MINUS_PHI
        );
        assert_eq!(
            ladder_stem_probability(&stem("a1,a2")).unwrap(),
            GoldenInt::ONE_MINUS_PHI
        );
        assert!(ladder_stem_probability(&stem("a3")).is_err());
        for k in 1..=6 {
            let stems = OrderedStem::all_ladder_stems(k);
            let total = stems
                .iter()
                .fold(GoldenInt::ZERO, |acc, s| acc + ladder_stem_probability(s).unwrap());
            assert_eq!(total, GoldenInt::ONE, "k = {k}");
            for s in &stems {
                for t in &stems {
                    if s.same_set(t) {
                        assert_eq!(ladder_stem_probability(s).unwrap(), ladder_stem_probability(t).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn sampler_matches_exact_law() {
        let mut r = rng(1);
        let e = stem_probability_mc(&stem("a1"), 100_000, &mut r).unwrap();
        assert!((e.mean - PHI).abs() < 4.0 * e.stderr);
        let e = stem_probability_mc(&stem("a2,a1"), 100_000, &mut r).unwrap();
        assert!((e.mean - (1.0 - PHI)).abs() < 4.0 * e.stderr);
        for _ in 0..100 {
            assert!(ladder_sampler(12, &mut r).unwrap().is_ladder_stem());
        }
        assert!(ladder_sampler(0, &mut r).is_err());
    }

    #[test]
    fn finite_uniform_examples() {
        let half = finite_uniform_stem_probability(&Poset::antichain(2), &OrderedStem(vec![0])).unwrap();
        assert_eq!(half, BigRational::new(1.into(), 2.into()));
        // e(ladder_n) are Fibonacci numbers
        let mut fib = (1u128, 2u128);
        for n in 2..=10 {
            assert_eq!(ExtensionTable::new(&ladder_poset(n)).unwrap().count(), fib.1);
            fib = (fib.1, fib.0 + fib.1);
        }
    }

    #[test]
    fn nu_k_examples() {
        let p = ladder_poset(6);
        let arrival = [1, 0, 2, 3];
        let one = BigRational::from_integer(1.into());
        let zero = BigRational::from_integer(0.into());
        // k = 1 is the indicator
        assert_eq!(nu_k(&p, &arrival, 1, &stem("a2")).unwrap(), one);
        assert_eq!(nu_k(&p, &arrival, 1, &stem("a1")).unwrap(), zero);
        // first two arrivals are incomparable: both orders are extensions
        assert_eq!(
            nu_k(&p, &arrival, 2, &stem("a1")).unwrap(),
            BigRational::new(1.into(), 2.into())
        );
        let chain = Poset::chain(4);
        assert_eq!(nu_k(&chain, &[0, 1, 2, 3], 3, &stem("a1,a2")).unwrap(), one);
        // partition of length-2 stems sums to 1 at fixed k
        let total = OrderedStem::all_ladder_stems(2)
            .iter()
            .map(|s| nu_k(&p, &arrival, 3, s).unwrap())
            .fold(zero.clone(), |a, b| a + b);
        assert_eq!(total, one);
    }

    #[test]
    fn dlr_identity_on_small_sample() {
        let mut r = rng(4);
        let rows = dlr_check(8, 3, 2, 50_000, &mut r).unwrap();
        assert_eq!(rows.len(), 3 * (2 + 3));
        for row in rows {
            assert!((row.mean_nu - row.mu).abs() <= 4.0 * row.stderr + 1e-12, "{row:?}");
        }
    }

    #[test]
    fn exchangeable_labels() {
        let mut r = rng(2);
        let a = exchangeable_antichain(10, &mut r).unwrap();
        assert_eq!(a.poset, Poset::antichain(10));
        assert_eq!(rank_pattern(&[0.1, 0.2, 0.3]), 0);
        assert_eq!(rank_pattern(&[0.3, 0.2, 0.1]), 5);
        let mut counts = [0u64; 24];
        for _ in 0..24_000 {
            counts[rank_pattern(&exchangeable_antichain(4, &mut r).unwrap().labels)] += 1;
        }
        let (_, p) = crate::stats::chi_square(&counts, &[1.0 / 24.0; 24]);
        assert!(p > 1e-3, "{p}");
    }

    #[test]
    fn quadrant_rows() {
        let mut r = rng(3);
        let rows = quadrant_bottom_probabilities(&[1.0, 2.0, 3.0, 4.0], 24, &mut r).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.windows(2).all(|w| w[0].points <= w[1].points));
        for row in rows {
            if let Some(q) = row.q {
                assert!(q > 0.0 && q <= 1.0);
            }
        }
    }
}
