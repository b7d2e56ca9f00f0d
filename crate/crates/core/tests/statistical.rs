//! Distributional checks against known laws, at fixed seeds.

use std::collections::HashMap;

use causet_core::growth::{grow, random_graph_order, transitive_percolation_params};
use causet_core::invariance::{finite_uniform_stem_probability, ladder_poset, OrderedStem, PHI};
use causet_core::poset::{ExtensionTable, Poset};
use causet_core::rng::run_replicas;
use causet_core::sprinkle::{map_m2_to_r2, sprinkle_region, Region, SprinkleMode};
use causet_core::stats::{chi_square, ks_two_sample, total_variation};
use causet_core::uniform::random_kd_order;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn two_dimensional_orders_match_sprinkled_squares_in_height() {
    let kd: Vec<f64> = run_replicas(11, 500, |r, _| random_kd_order(1000, 2, r).unwrap().height() as f64);
    let cube: Vec<f64> = run_replicas(12, 500, |r, _| {
        sprinkle_region(&Region::cube(2).unwrap(), 1000.0, SprinkleMode::Binomial, r)
            .unwrap()
            .height() as f64
    });
    let (d, p) = ks_two_sample(&kd, &cube);
    assert!(p > 1e-3, "KS statistic {d}, p = {p}");
}

#[test]
fn diamond_sprinkling_is_uniform_over_light_cone_quadrants() {
    let region = Region::unit_diamond(2).unwrap();
    let (lo, hi) = region.corners();
    let corner = |v: &[f64]| map_m2_to_r2(&causet_core::sprinkle::Event::new(v[0], v[1..].to_vec())).unwrap();
    let (a, b) = (corner(&lo), corner(&hi));
    let mid = ((a.0 + b.0) / 2.0, (a.1 + b.1) / 2.0);
    let mut cells = [0u64; 4];
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..20 {
        let s = sprinkle_region(&region, 1000.0, SprinkleMode::Poisson, &mut rng).unwrap();
        for i in 0..s.len() {
            let (u, v) = map_m2_to_r2(&s.event(i)).unwrap();
            cells[usize::from(u > mid.0) * 2 + usize::from(v > mid.1)] += 1;
        }
    }
    let (stat, p) = chi_square(&cells, &[0.25; 4]);
    assert!(p > 1e-3, "chi-square {stat}, p = {p}, cells {cells:?}");
}

#[test]
fn sampled_linear_extensions_are_uniform() {
    let posets = [
        Poset::antichain(4),
        Poset::from_relations(5, &[(0, 2), (1, 2), (1, 3), (3, 4)]).unwrap(),
        Poset::from_relations(5, &[(0, 1), (2, 3)]).unwrap(),
    ];
    const DRAWS: u64 = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for p in &posets {
        let table = ExtensionTable::new(p).unwrap();
        let e = table.count() as f64;
        let mut counts: HashMap<Vec<usize>, u64> = HashMap::new();
        for _ in 0..DRAWS {
            let ext = table.sample(&mut rng);
            assert!(p.is_linear_extension(&ext));
            *counts.entry(ext).or_default() += 1;
        }
        assert_eq!(counts.len() as f64, e);
        let prob = 1.0 / e;
        let sigma = (prob * (1.0 - prob) / DRAWS as f64).sqrt();
        for (ext, c) in counts {
            let z = (c as f64 / DRAWS as f64 - prob).abs() / sigma;
            assert!(z < 4.0, "{ext:?}: {z:.2}σ");
        }
    }
}

fn relation_key(p: &Poset) -> u32 {
    let mut key = 0;
    let mut bit = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            key |= u32::from(p.lt(i, j)) << bit;
            bit += 1;
        }
    }
    key
}

#[test]
fn percolation_growth_matches_random_graph_orders() {
    const N: usize = 4;
    const REPLICAS: usize = 100_000;
    let p = 0.35;
    let params = transitive_percolation_params(p).unwrap();
    let tally = |keys: Vec<u32>| {
        let mut h: HashMap<u32, f64> = HashMap::new();
        for k in keys {
            *h.entry(k).or_default() += 1.0 / REPLICAS as f64;
        }
        h
    };
    let a = tally(run_replicas(15, REPLICAS, |r, _| {
        relation_key(random_graph_order(N, p, r).unwrap().poset())
    }));
    let b = tally(run_replicas(16, REPLICAS, |r, _| {
        relation_key(grow(&params, N, r).unwrap().poset())
    }));
    let mut keys: Vec<u32> = a.keys().chain(b.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let pa: Vec<f64> = keys.iter().map(|k| a.get(k).copied().unwrap_or(0.0)).collect();
    let pb: Vec<f64> = keys.iter().map(|k| b.get(k).copied().unwrap_or(0.0)).collect();
    let tv = total_variation(&pa, &pb);
    assert!(tv < 0.02, "TV {tv}");
}

#[test]
fn finite_ladders_converge_monotonically_to_the_golden_value() {
    let stem: OrderedStem = "a2,a1".parse().unwrap();
    let target = 1.0 - PHI;
    let errors: Vec<f64> = (3..=20)
        .map(|n| {
            let v = finite_uniform_stem_probability(&ladder_poset(n), &stem).unwrap();
            (v.to_f64().unwrap() - target).abs()
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] <= w[0], "{errors:?}");
    }
    assert!(errors[errors.len() - 1] < 1e-6);
}
