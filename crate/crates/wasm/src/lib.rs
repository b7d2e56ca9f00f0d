//! Browser bindings for three interactive views: a sprinkled 2D region with
//! its longest chain, the height scaling curve, and finite ladders
//! converging to the golden-ratio measure.
//!
//! Each binding returns JSON; the logic lives in plain functions so it can
//! be tested natively.

use causet_core::invariance::{finite_uniform_stem_probability, ladder_poset, stem_probability_mc, OrderedStem, PHI};
use causet_core::rng::replica_rng;
use causet_core::sprinkle::{sprinkle_region, Region, SprinkleMode};
use causet_core::stats::summarize;
use num_traits::ToPrimitive;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest point count the page may request for one sprinkling.
pub const MAX_DEMO_POINTS: f64 = 20_000.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SprinkleView {
    pub model: String,
    /// `(t, x)` for diamonds and `(x1, x2)` for the square.
    pub points: Vec<[f64; 2]>,
    /// Indices into `points`, bottom to top.
    pub chain: Vec<usize>,
    pub bounds: [[f64; 2]; 2],
}

fn region(model: &str, d: usize) -> Result<Region, String> {
    match model {
        "cube" => Region::cube(d),
        "diamond" => Region::unit_diamond(d),
        other => return Err(format!("unknown model {other:?}")),
    }
    .map_err(|e| e.to_string())
}

pub fn sprinkle_view(model: &str, n: f64, seed: u64) -> Result<SprinkleView, String> {
    if !(1.0..=MAX_DEMO_POINTS).contains(&n) {
        return Err(format!("n must lie in [1, {MAX_DEMO_POINTS}]"));
    }
    let region = region(model, 2)?;
    let s = sprinkle_region(&region, n, SprinkleMode::Poisson, &mut replica_rng(seed, 0)).map_err(|e| e.to_string())?;
    let bb = region.bounding_box();
    Ok(SprinkleView {
        model: model.to_string(),
        points: (0..s.len()).map(|i| [s.point(i)[0], s.point(i)[1]]).collect(),
        chain: s.longest_chain(),
        bounds: [[bb[0].0, bb[0].1], [bb[1].0, bb[1].1]],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeightPoint {
    pub n: f64,
    pub mean_chain: f64,
    pub stderr: f64,
    /// Mean chain length divided by `n^(1/d)`.
    pub scaled: f64,
}

pub fn height_curve(
    model: &str,
    d: usize,
    sizes: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<Vec<HeightPoint>, String> {
    if replicas == 0 || replicas > 200 {
        return Err("replicas must lie in [1, 200]".into());
    }
    let region = region(model, d)?;
    sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            if !(1.0..=MAX_DEMO_POINTS).contains(&n) {
                return Err(format!("n must lie in [1, {MAX_DEMO_POINTS}]"));
            }
            let chains: Vec<f64> = (0..replicas)
                .map(|r| {
                    let mut rng = replica_rng(seed, (k * 1000 + r) as u64);
                    sprinkle_region(&region, n, SprinkleMode::Poisson, &mut rng)
                        .map(|s| s.longest_chain_len() as f64)
                        .map_err(|e| e.to_string())
                })
                .collect::<Result<_, _>>()?;
            let s = summarize(&chains);
            Ok(HeightPoint {
                n,
                mean_chain: s.mean,
                stderr: s.stderr,
                scaled: s.mean / n.powf(1.0 / d as f64),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderPoint {
    pub n: usize,
    /// Uniform-extension probability that `a2` precedes `a1` on the `n`-ladder.
    pub finite: f64,
    pub limit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderView {
    pub curve: Vec<LadderPoint>,
    pub monte_carlo: f64,
    pub monte_carlo_stderr: f64,
}

pub fn ladder_view(max_n: usize, replicas: usize, seed: u64) -> Result<LadderView, String> {
    if !(2..=30).contains(&max_n) || replicas == 0 || replicas > 2_000_000 {
        return Err("need 2 ≤ max_n ≤ 30 and 1 ≤ replicas ≤ 2e6".into());
    }
    let stem: OrderedStem = "a2,a1"
        .parse()
        .map_err(|e: causet_core::invariance::InvarianceError| e.to_string())?;
    let curve = (2..=max_n)
        .map(|n| {
            let v = finite_uniform_stem_probability(&ladder_poset(n), &stem).map_err(|e| e.to_string())?;
            Ok(LadderPoint {
                n,
                finite: v.to_f64().unwrap_or(f64::NAN),
                limit: 1.0 - PHI,
            })
        })
        .collect::<Result<_, String>>()?;
    let mc = stem_probability_mc(&stem, replicas, &mut replica_rng(seed, 0)).map_err(|e| e.to_string())?;
    Ok(LadderView {
        curve,
        monte_carlo: mc.mean,
        monte_carlo_stderr: mc.stderr,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.and_then(|v| serde_json::to_string(&v).map_err(|e| e.to_string()))
        .map_err(|e| JsValue::from_str(&e))
}

/// JSON [`SprinkleView`] for a 2D `"cube"` or `"diamond"`.
#[wasm_bindgen(js_name = sprinkle)]
pub fn sprinkle_js(model: &str, n: f64, seed: u64) -> Result<String, JsValue> {
    to_js(sprinkle_view(model, n, seed))
}

/// JSON list of [`HeightPoint`].
#[wasm_bindgen(js_name = heightCurve)]
pub fn height_curve_js(model: &str, d: usize, sizes: Vec<f64>, replicas: usize, seed: u64) -> Result<String, JsValue> {
    to_js(height_curve(model, d, &sizes, replicas, seed))
}

/// JSON [`LadderView`].
#[wasm_bindgen(js_name = ladderConvergence)]
pub fn ladder_js(max_n: usize, replicas: usize, seed: u64) -> Result<String, JsValue> {
    to_js(ladder_view(max_n, replicas, seed))
}
