//! Uniform and near-uniform random orders: intersections of random linear
//! orders, 3-layer posets, the labelled-poset count sum, and the semiorder
//! poson that limits tuned random graph orders.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::growth::random_graph_order;
use crate::poset::{IsoClassTable, Poset, PosetError};
use crate::rng::run_replicas;
use crate::sprinkle::height_2d_fast;
use crate::stats::summarize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UniformError {
    #[error("operation needs d = {expected}, got {got}")]
    WrongD { expected: usize, got: usize },
    #[error("no p in (0, 1) with the required tuning for c·n = {0}")]
    NoSolution(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Poset(#[from] PosetError),
}

/// `d` linear orders of `0..n`, each listed from bottom to top.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermutationPair {
    pub perms: Vec<Vec<usize>>,
}

impl PermutationPair {
    pub fn new(perms: Vec<Vec<usize>>) -> Result<Self, UniformError> {
        let n = perms.first().map_or(0, Vec::len);
        for p in &perms {
            let mut seen = vec![false; n];
            if p.len() != n || p.iter().any(|&x| x >= n || std::mem::replace(&mut seen[x], true)) {
                return Err(UniformError::InvalidParameter("not a permutation of 0..n".into()));
            }
        }
        Ok(PermutationPair { perms })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Self {
        let perms = (0..d)
            .map(|_| {
                let mut p: Vec<usize> = (0..n).collect();
                p.shuffle(rng);
                p
            })
            .collect();
        PermutationPair { perms }
    }

    pub fn n(&self) -> usize {
        self.perms.first().map_or(0, Vec::len)
    }

    pub fn d(&self) -> usize {
        self.perms.len()
    }

    /// `positions()[k][x]` is the position of `x` in order `k`.
    pub fn positions(&self) -> Vec<Vec<usize>> {
        self.perms
            .iter()
            .map(|p| {
                let mut pos = vec![0; p.len()];
                for (i, &x) in p.iter().enumerate() {
                    pos[x] = i;
                }
                pos
            })
            .collect()
    }

    /// The intersection: `x < y` when `x` precedes `y` in every order.
    pub fn order(&self) -> Poset {
        let pos = self.positions();
        Poset::from_order_fn(self.n(), |x, y| pos.iter().all(|p| p[x] < p[y]))
    }

    /// Height of the intersection, via patience sorting when `d = 2`.
    pub fn height(&self) -> usize {
        if self.d() == 2 {
            let pos = self.positions();
            let pts: Vec<(f64, f64)> = (0..self.n()).map(|x| (pos[0][x] as f64, pos[1][x] as f64)).collect();
            height_2d_fast(&pts)
        } else {
            self.order().height()
        }
    }
}

/// Intersection of `d` independent uniform linear orders of `0..n`.
pub fn random_kd_order<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Poset, UniformError> {
    if d < 2 || n == 0 {
        return Err(UniformError::InvalidParameter(format!(
            "need d ≥ 2 and n ≥ 1, got d = {d}, n = {n}"
        )));
    }
    Ok(PermutationPair::random(n, d, rng).order())
}

/// Pairs `(x, y)` adjacent in both orders and in opposite relative order,
/// given as `(x, y)` with `x` directly below `y` in the first order.
pub fn swappable_pair_list(pp: &PermutationPair) -> Result<Vec<(usize, usize)>, UniformError> {
    if pp.d() != 2 {
        return Err(UniformError::WrongD {
            expected: 2,
            got: pp.d(),
        });
    }
    let pos2 = &pp.positions()[1];
    Ok(pp.perms[0]
        .windows(2)
        .filter(|w| pos2[w[0]] == pos2[w[1]] + 1)
        .map(|w| (w[0], w[1]))
        .collect())
}

/// Number of pairs consecutive in both orders and incomparable in the intersection.
pub fn swappable_pairs(pp: &PermutationPair) -> Result<usize, UniformError> {
    Ok(swappable_pair_list(pp)?.len())
}

/// Layer sizes `(round(n/4), n − 2·round(n/4), round(n/4))`.
pub fn three_layer_sizes(n: usize) -> (usize, usize, usize) {
    let quarter = (n as f64 / 4.0).round() as usize;
    (quarter, n - 2 * quarter, quarter)
}

/// A random 3-layer poset: layers `A_1 = 0..a`, `A_2`, `A_3` of sizes
/// [`three_layer_sizes`]; each adjacent-layer pair is related with
/// probability 1/2 and `A_1` lies entirely below `A_3`.
pub fn three_layer_random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Poset, UniformError> {
    if n < 4 {
        return Err(UniformError::InvalidParameter(format!("n = {n}; at least 4 required")));
    }
    let (a, b, _) = three_layer_sizes(n);
    let layer = |x: usize| {
        if x < a {
            0
        } else if x < a + b {
            1
        } else {
            2
        }
    };
    let mut pairs = Vec::new();
    for x in 0..n {
        for y in 0..n {
            match layer(y) - layer(x) {
                1 if rng.random_bool(0.5) => pairs.push((x, y)),
                2 => pairs.push((x, y)),
                _ => {}
            }
        }
    }
    let p = Poset::from_relations(n, &pairs)?;
    p.validate()?;
    Ok(p)
}

/// A partition into `k` layers (possibly empty) with (i) every relation
/// going to a strictly higher layer and (ii) each layer entirely below the
/// layer two above it, if one exists.
///
/// Exact backtracking over elements in order of height, with each element's
/// layer confined to `[h + 1, k − d]` where `h` and `d` are the longest chains
/// below and above it.
pub fn k_layering(p: &Poset, k: usize) -> Option<Vec<usize>> {
    let n = p.len();
    if k == 0 {
        return (n == 0).then(Vec::new);
    }
    if n > 0 && p.height() + 1 > k {
        return None;
    }
    let down = down_lengths(p);
    let up = p.up_lengths();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&x| (down[x], x));
    let mut layer = vec![0usize; n];
    fn rec(p: &Poset, k: usize, order: &[usize], down: &[usize], up: &[usize], at: usize, layer: &mut [usize]) -> bool {
        if at == order.len() {
            return true;
        }
        let x = order[at];
        let lo = p.below(x).map(|y| layer[y] + 1).max().unwrap_or(1).max(down[x] + 1);
        let hi = k - up[x];
        for l in lo..=hi {
            let ok = order[..at]
                .iter()
                .all(|&y| (layer[y] + 2 != l || p.lt(y, x)) && (l + 2 != layer[y] || p.lt(x, y)));
            if ok {
                layer[x] = l;
                if rec(p, k, order, down, up, at + 1, layer) {
                    return true;
                }
            }
        }
        false
    }
    rec(p, k, &order, &down, &up, 0, &mut layer).then_some(layer)
}

fn down_lengths(p: &Poset) -> Vec<usize> {
    let mut down = vec![0usize; p.len()];
    for x in p.topological_order() {
        down[x] = p.below(x).map(|y| down[y] + 1).max().unwrap_or(0);
    }
    down
}

/// `true` iff `p` is a `k`-layer poset (see [`k_layering`]).
pub fn is_k_layer(p: &Poset, k: usize) -> bool {
    k >= 1 && k_layering(p, k).is_some()
}

/// `Σ_{s=0}^{n} C(n, s) 2^{(s+1)(n−s)}`, the leading term of the number of
/// labelled posets on `n` elements.
pub fn poset_count_estimate(n: usize) -> Result<BigUint, UniformError> {
    if n > 64 {
        return Err(UniformError::InvalidParameter(format!("n = {n}; at most 64")));
    }
    let mut total = BigUint::zero();
    let mut binom = BigUint::one();
    for s in 0..=n {
        total += &binom << ((s + 1) * (n - s));
        binom = binom * (n - s) / (s + 1);
    }
    Ok(total)
}

/// The step kernel `W(x, y) = 1` iff `y > x + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiorderPoson {
    pub c: f64,
}

impl SemiorderPoson {
    pub fn new(c: f64) -> Result<Self, UniformError> {
        if !(c > 0.0 && c < 1.0) {
            return Err(UniformError::InvalidParameter(format!("c = {c} is not in (0, 1)")));
        }
        Ok(SemiorderPoson { c })
    }

    pub fn w(&self, x: f64, y: f64) -> f64 {
        if y > x + self.c {
            1.0
        } else {
            0.0
        }
    }

    /// `t(2-chain; W) = P(|X − Y| > c) = (1 − c)²`.
    pub fn comparable_density(&self) -> f64 {
        (1.0 - self.c).powi(2)
    }
}

/// `n` iid uniform latent values with `x < y` iff `latent(y) > latent(x) + c`.
pub fn sample_from_poson<R: Rng + ?Sized>(w: &SemiorderPoson, n: usize, rng: &mut R) -> Result<Poset, UniformError> {
    if n == 0 {
        return Err(UniformError::InvalidParameter("n must be at least 1".into()));
    }
    let latent: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    Ok(Poset::from_order_fn(n, |i, j| w.w(latent[i], latent[j]) == 1.0))
}

/// `p` with `p⁻¹ ln p⁻¹ = c·n`, by bisection on `x = 1/p`.
///
/// Rejects `c·n < e`, which keeps `p ≤ 1/e`.
pub fn tune_rgo_p(n: usize, c: f64) -> Result<f64, UniformError> {
    let target = c * n as f64;
    if !target.is_finite() || target < std::f64::consts::E {
        return Err(UniformError::NoSolution(target));
    }
    let f = |x: f64| x * x.ln() - target;
    let (mut lo, mut hi) = (std::f64::consts::E, target.max(std::f64::consts::E) + 1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(1.0 / (0.5 * (lo + hi)))
}

/// One class of posets of size `k ≤ 4` in a density comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub class_id: String,
    pub size: usize,
    /// Covering pairs of a representative, e.g. `0<1;2<3`.
    pub representative_relations: String,
    pub t_rgo: f64,
    pub t_poson: f64,
    pub gap: f64,
    pub stderr: f64,
}

/// Densities of every poset class of size ≤ 4 in tuned random graph orders
/// alongside the semiorder poson.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityTable {
    pub n: usize,
    pub c: f64,
    pub p: f64,
    pub replicas: usize,
    pub samples: usize,
    pub rows: Vec<DensityRow>,
    /// Density of `2+2` in the graph orders, and its standard error.
    pub h_density: (f64, f64),
    /// Density of `3+1` in the graph orders, and its standard error.
    pub l_density: (f64, f64),
}

impl DensityTable {
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "class_id,representative_relations,t_rgo,t_poson,gap,stderr")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:?},{:?},{:?},{:?}",
                r.class_id, r.representative_relations, r.t_rgo, r.t_poson, r.gap, r.stderr
            )?;
        }
        Ok(())
    }
}

/// Class tables for sizes 1 to 4.
pub fn class_tables() -> Vec<IsoClassTable> {
    (1..=4).map(|k| IsoClassTable::new(k).expect("k ≤ 4")).collect()
}

pub fn relations_string(p: &Poset) -> String {
    p.covering_pairs()
        .iter()
        .map(|(a, b)| format!("{a}<{b}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Class ids of `2+2` and `3+1` in the size-4 table.
pub fn h_and_l_classes(table: &IsoClassTable) -> (usize, usize) {
    let h = Poset::from_relations(4, &[(0, 1), (2, 3)]).expect("valid");
    let l = Poset::from_relations(4, &[(0, 1), (1, 2)]).expect("valid");
    (
        table.classify_poset(&h).expect("size 4"),
        table.classify_poset(&l).expect("size 4"),
    )
}

/// Sampled class densities (per size) of a poset, `samples` subsets per size.
pub fn sampled_profile<R: Rng + ?Sized>(
    tables: &[IsoClassTable],
    p: &Poset,
    samples: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    tables
        .iter()
        .map(|t| {
            if t.k() > p.len() {
                return vec![0.0; t.class_count()];
            }
            t.sampled_counts(p, samples, rng)
                .into_iter()
                .map(|c| c as f64 / samples as f64)
                .collect()
        })
        .collect()
}

/// Poson densities from `samples` direct `k`-point samples per size.
pub fn poson_profile<R: Rng + ?Sized>(
    tables: &[IsoClassTable],
    w: &SemiorderPoson,
    samples: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    tables
        .iter()
        .map(|t| {
            let mut counts = vec![0f64; t.class_count()];
            for _ in 0..samples {
                let q = sample_from_poson(w, t.k(), rng).expect("k ≥ 1");
                counts[t.classify_poset(&q).expect("size k")] += 1.0;
            }
            counts.into_iter().map(|c| c / samples as f64).collect()
        })
        .collect()
}

/// Densities `t(Q; P_{n,p})` for all `|Q| ≤ 4`, with `p` tuned so that
/// `p⁻¹ ln p⁻¹ = c·n`, next to `t(Q; W)` for the step poson with the same `c`.
/// Replica streams come from one draw of `rng`; each replica samples
/// `samples` subsets of each size.
pub fn rgo_semiorder_limit_experiment<R: Rng + ?Sized>(
    n: usize,
    c: f64,
    replicas: usize,
    samples: usize,
    rng: &mut R,
) -> Result<DensityTable, UniformError> {
    let poson = SemiorderPoson::new(c)?;
    let p = tune_rgo_p(n, c)?;
    if replicas == 0 || samples == 0 {
        return Err(UniformError::InvalidParameter(
            "replicas and samples must be positive".into(),
        ));
    }
    let tables = class_tables();
    let seed: u64 = rng.random();
    let per_replica: Vec<Vec<Vec<f64>>> = run_replicas(seed, replicas, |r, _| {
        let g = random_graph_order(n, p, r).expect("tuned p lies in (0, 1)");
        sampled_profile(&tables, g.poset(), samples, r)
    });
    let poson_densities = poson_profile(&tables, &poson, samples.max(100_000), rng);
    let (h, l) = h_and_l_classes(&tables[3]);
    let mut rows = Vec::new();
    let mut h_density = (0.0, 0.0);
    let mut l_density = (0.0, 0.0);
    for (ti, table) in tables.iter().enumerate() {
        for (ci, rep) in table.representatives().iter().enumerate() {
            let values: Vec<f64> = per_replica.iter().map(|r| r[ti][ci]).collect();
            let s = summarize(&values);
            let stderr = if replicas > 1 { s.stderr } else { f64::NAN };
            if ti == 3 && ci == h {
                h_density = (s.mean, stderr);
            }
            if ti == 3 && ci == l {
                l_density = (s.mean, stderr);
            }
            rows.push(DensityRow {
                class_id: format!("k{}_{}", table.k(), ci),
                size: table.k(),
                representative_relations: relations_string(rep),
                t_rgo: s.mean,
                t_poson: poson_densities[ti][ci],
                gap: s.mean - poson_densities[ti][ci],
                stderr,
            });
        }
    }
    Ok(DensityTable {
        n,
        c,
        p,
        replicas,
        samples,
        rows,
        h_density,
        l_density,
    })
}
