//! Point processes in the unit cube and in Minkowski causal diamonds.
//!
//! Events use natural units (speed of light 1). An event in `M^d` has one
//! time coordinate and `d - 1` space coordinates; `a ≤ b` when the spatial
//! distance does not exceed the elapsed time. The light-cone boundary counts
//! as comparable.
//!
//! Cube points are stored with the same flat layout, `d` coordinates per
//! point, and are ordered coordinatewise.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poset::Poset;

/// Cap on the number of points whose full relation is materialized.
pub const MAX_INDUCED_POINTS: usize = 30_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SprinkleError {
    #[error("events have dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("events are not causally related")]
    NotTimelike,
    #[error("events are causally related")]
    NotSpacelike,
    #[error("boost velocity {0} is not in (-1, 1)")]
    InvalidBeta(f64),
    #[error("axis {axis} out of range for {space} space dimensions")]
    InvalidAxis { axis: usize, space: usize },
    #[error("interval has zero proper time or wrong orientation")]
    DegenerateInterval,
    #[error("operation needs dimension 2, got {0}")]
    WrongDimension(usize),
    #[error("need at least {needed} points, have {have}")]
    TooFewPoints { needed: usize, have: usize },
    #[error("{0} points exceeds the induced-order limit of {MAX_INDUCED_POINTS}")]
    TooManyPoints(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A point of `M^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub x: Vec<f64>,
}

impl Event {
    pub fn new(t: f64, x: Vec<f64>) -> Self {
        Event { t, x }
    }

    pub fn origin(d: usize) -> Self {
        Event::new(0.0, vec![0.0; d.saturating_sub(1)])
    }

    /// Spacetime dimension `d`.
    pub fn dim(&self) -> usize {
        self.x.len() + 1
    }

    fn from_coords(coords: &[f64]) -> Self {
        Event::new(coords[0], coords[1..].to_vec())
    }

    fn intervals(&self, other: &Event) -> Result<(f64, f64), SprinkleError> {
        if self.dim() != other.dim() {
            return Err(SprinkleError::DimensionMismatch(self.dim(), other.dim()));
        }
        let dt = other.t - self.t;
        let dx2: f64 = self.x.iter().zip(&other.x).map(|(a, b)| (b - a) * (b - a)).sum();
        Ok((dt, dx2))
    }
}

/// `a ≤ b` in the causal order.
pub fn causal_leq(a: &Event, b: &Event) -> Result<bool, SprinkleError> {
    let (dt, dx2) = a.intervals(b)?;
    Ok(dt >= 0.0 && dx2 <= dt * dt)
}

#[inline]
fn causal_leq_coords(a: &[f64], b: &[f64]) -> bool {
    let dt = b[0] - a[0];
    if dt < 0.0 {
        return false;
    }
    let mut dx2 = 0.0;
    for k in 1..a.len() {
        let d = b[k] - a[k];
        dx2 += d * d;
    }
    dx2 <= dt * dt
}

#[inline]
fn dominates_coords(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Proper time between causally related events.
pub fn proper_time(a: &Event, b: &Event) -> Result<f64, SprinkleError> {
    if !causal_leq(a, b)? {
        return Err(SprinkleError::NotTimelike);
    }
    let (dt, dx2) = a.intervals(b)?;
    Ok((dt * dt - dx2).max(0.0).sqrt())
}

/// Distance between causally unrelated events.
pub fn spacelike_distance(a: &Event, b: &Event) -> Result<f64, SprinkleError> {
    if causal_leq(a, b)? || causal_leq(b, a)? {
        return Err(SprinkleError::NotSpacelike);
    }
    let (dt, dx2) = a.intervals(b)?;
    Ok((dx2 - dt * dt).sqrt())
}

/// Boost with velocity `beta` along space axis `axis` (0-based).
pub fn lorentz_boost(e: &Event, beta: f64, axis: usize) -> Result<Event, SprinkleError> {
    if !(beta > -1.0 && beta < 1.0) {
        return Err(SprinkleError::InvalidBeta(beta));
    }
    if axis >= e.x.len() {
        return Err(SprinkleError::InvalidAxis { axis, space: e.x.len() });
    }
    let gamma = 1.0 / (1.0 - beta * beta).sqrt();
    let mut x = e.x.clone();
    x[axis] = gamma * (e.x[axis] - beta * e.t);
    Ok(Event::new(gamma * (e.t - beta * e.x[axis]), x))
}

/// The measure- and order-preserving map `M^2 → R^2`, `(t, x) ↦ ((t+x)/√2, (t−x)/√2)`.
pub fn map_m2_to_r2(e: &Event) -> Result<(f64, f64), SprinkleError> {
    if e.dim() != 2 {
        return Err(SprinkleError::WrongDimension(e.dim()));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok((s * (e.t + e.x[0]), s * (e.t - e.x[0])))
}

fn gamma_half_integer(twice: usize) -> f64 {
    // Γ(twice / 2) for positive integers `twice`
    let (mut value, mut arg) = if twice.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    while arg < twice as f64 / 2.0 - 1e-9 {
        value *= arg;
        arg += 1.0;
    }
    value
}

/// Volume of a causal diamond in `M^d` with proper time `tau`.
pub fn diamond_volume(d: usize, tau: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let c = pi.powf((d as f64 - 1.0) / 2.0) / (2f64.powi(d as i32 - 1) * d as f64 * gamma_half_integer(d + 1));
    c * tau.powi(d as i32)
}

/// Proper time of the diamond of unit volume in `M^d`.
pub fn unit_volume_proper_time(d: usize) -> f64 {
    (1.0 / diamond_volume(d, 1.0)).powf(1.0 / d as f64)
}

/// Region carrying the point process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// `[0,1]^d` with the coordinatewise order.
    Cube { d: usize },
    /// The causal interval `[a, b]` in `M^d`.
    Diamond { a: Event, b: Event },
}

impl Region {
    pub fn cube(d: usize) -> Result<Self, SprinkleError> {
        if d == 0 {
            return Err(SprinkleError::InvalidParameter("dimension must be ≥ 1".into()));
        }
        Ok(Region::Cube { d })
    }

    pub fn diamond(a: Event, b: Event) -> Result<Self, SprinkleError> {
        if a.dim() < 2 {
            return Err(SprinkleError::WrongDimension(a.dim()));
        }
        if !causal_leq(&a, &b)? || proper_time(&a, &b)? <= 0.0 {
            return Err(SprinkleError::DegenerateInterval);
        }
        Ok(Region::Diamond { a, b })
    }

    /// The unit-volume diamond from the origin up the time axis.
    pub fn unit_diamond(d: usize) -> Result<Self, SprinkleError> {
        if d < 2 {
            return Err(SprinkleError::WrongDimension(d));
        }
        let tau = unit_volume_proper_time(d);
        let mut b = Event::origin(d);
        b.t = tau;
        Region::diamond(Event::origin(d), b)
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Cube { d } => *d,
            Region::Diamond { a, .. } => a.dim(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Region::Cube { .. } => 1.0,
            Region::Diamond { a, b } => diamond_volume(a.dim(), proper_time(a, b).expect("validated diamond")),
        }
    }

    /// Bottom and top corners, as flat coordinates.
    pub fn corners(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Cube { d } => (vec![0.0; *d], vec![1.0; *d]),
            Region::Diamond { a, b } => {
                let flat = |e: &Event| std::iter::once(e.t).chain(e.x.iter().copied()).collect();
                (flat(a), flat(b))
            }
        }
    }

    /// The region's order on flat coordinates (non-strict).
    #[inline]
    pub fn precedes(&self, p: &[f64], q: &[f64]) -> bool {
        match self {
            Region::Cube { .. } => dominates_coords(p, q),
            Region::Diamond { .. } => causal_leq_coords(p, q),
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        let (lo, hi) = self.corners();
        match self {
            Region::Cube { .. } => p.iter().all(|v| (0.0..=1.0).contains(v)),
            Region::Diamond { .. } => causal_leq_coords(&lo, p) && causal_leq_coords(p, &hi),
        }
    }

    /// A coordinate-aligned box containing the region: `(lower, upper)` per coordinate.
    ///
    /// For a diamond the time range is `[t_a, t_b]` and each space axis is
    /// centred on the midpoint of `a` and `b` with half-width `(t_b - t_a) / 2`.
    /// This is the tightest box when `b - a` is purely timelike.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        match self {
            Region::Cube { d } => vec![(0.0, 1.0); *d],
            Region::Diamond { a, b } => {
                let dt = b.t - a.t;
                std::iter::once((a.t, b.t))
                    .chain(a.x.iter().zip(&b.x).map(|(p, q)| {
                        let mid = 0.5 * (p + q);
                        (mid - 0.5 * dt, mid + 0.5 * dt)
                    }))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SprinkleMode {
    /// `Poisson(n · volume)` points.
    Poisson,
    /// Exactly `round(n)` points.
    Binomial,
}

/// Points of a region with their induced order.
#[derive(Debug, Clone, PartialEq)]
pub struct SprinkledSet {
    pub region: Region,
    pub intensity: f64,
    coords: Vec<f64>,
}

impl SprinkledSet {
    /// Wraps existing points; every point must lie in the region.
    pub fn from_points(region: Region, intensity: f64, points: &[Vec<f64>]) -> Result<Self, SprinkleError> {
        let d = region.dim();
        let mut coords = Vec::with_capacity(points.len() * d);
        for p in points {
            if p.len() != d {
                return Err(SprinkleError::DimensionMismatch(d, p.len()));
            }
            if !region.contains(p) {
                return Err(SprinkleError::InvalidParameter("point outside region".into()));
            }
            coords.extend_from_slice(p);
        }
        Ok(SprinkledSet {
            region,
            intensity,
            coords,
        })
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Flat coordinates of point `i` (time first for diamonds).
    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn event(&self, i: usize) -> Event {
        Event::from_coords(self.point(i))
    }

    /// Strict induced order between distinct points.
    #[inline]
    pub fn precedes(&self, i: usize, j: usize) -> bool {
        i != j && self.region.precedes(self.point(i), self.point(j))
    }

    /// The induced order as a dense poset.
    pub fn order(&self) -> Result<Poset, SprinkleError> {
        if self.len() > MAX_INDUCED_POINTS {
            return Err(SprinkleError::TooManyPoints(self.len()));
        }
        Ok(Poset::from_order_fn(self.len(), |i, j| self.precedes(i, j)))
    }

    /// Point indices sorted into a linear extension of the induced order.
    fn extension_order(&self) -> Vec<usize> {
        let key: Vec<f64> = match self.region {
            Region::Cube { .. } => (0..self.len()).map(|i| self.point(i).iter().sum()).collect(),
            Region::Diamond { .. } => (0..self.len()).map(|i| self.point(i)[0]).collect(),
        };
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)));
        order
    }

    /// A longest chain, listed bottom to top.
    pub fn longest_chain(&self) -> Vec<usize> {
        if self.dim() == 2 && matches!(self.region, Region::Cube { .. }) {
            let pts: Vec<(f64, f64)> = (0..self.len()).map(|i| (self.point(i)[0], self.point(i)[1])).collect();
            return longest_chain_2d(&pts);
        }
        layered_longest_chain(&self.extension_order(), |p, q| self.precedes(p, q), true).1
    }

    /// Number of points on a longest chain (0 for an empty set).
    pub fn longest_chain_len(&self) -> usize {
        if self.dim() == 2 && matches!(self.region, Region::Cube { .. }) {
            let pts: Vec<(f64, f64)> = (0..self.len()).map(|i| (self.point(i)[0], self.point(i)[1])).collect();
            return lis_len(&pts);
        }
        layered_longest_chain(&self.extension_order(), |p, q| self.precedes(p, q), false).0
    }

    /// Height of the induced order (edge count).
    pub fn height(&self) -> usize {
        self.longest_chain_len().saturating_sub(1)
    }

    /// Fraction of unordered point pairs that are comparable.
    pub fn comparable_fraction(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let mut c = 0u64;
        for i in 0..n {
            for j in i + 1..n {
                if self.precedes(i, j) || self.precedes(j, i) {
                    c += 1;
                }
            }
        }
        c as f64 / (n * (n - 1) / 2) as f64
    }

    /// Writes `id,t,x1,...` rows (cube points use the same columns).
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let d = self.dim();
        let mut header = String::from("id,t");
        for k in 1..d {
            header.push_str(&format!(",x{k}"));
        }
        writeln!(out, "{header}")?;
        for i in 0..self.len() {
            let row: Vec<String> = self.point(i).iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "{i},{}", row.join(","))?;
        }
        Ok(())
    }
}

fn point_count<R: Rng + ?Sized>(mean: f64, mode: SprinkleMode, rng: &mut R) -> usize {
    match mode {
        SprinkleMode::Binomial => mean.round() as usize,
        SprinkleMode::Poisson => Poisson::new(mean).expect("positive mean").sample(rng) as usize,
    }
}

/// Sprinkles the unit cube `[0,1]^d` at intensity `n`.
pub fn sprinkle_cube<R: Rng + ?Sized>(
    d: usize,
    n: f64,
    mode: SprinkleMode,
    rng: &mut R,
) -> Result<SprinkledSet, SprinkleError> {
    let region = Region::cube(d)?;
    if !(n > 0.0 && n.is_finite()) {
        return Err(SprinkleError::InvalidParameter(format!("intensity {n}")));
    }
    let count = point_count(n, mode, rng);
    let coords = (0..count * d).map(|_| rng.random::<f64>()).collect();
    Ok(SprinkledSet {
        region,
        intensity: n,
        coords,
    })
}

/// Poisson process of intensity `n` restricted to the diamond `[a, b]`,
/// by rejection from its bounding box.
pub fn sprinkle_diamond<R: Rng + ?Sized>(
    a: &Event,
    b: &Event,
    n: f64,
    rng: &mut R,
) -> Result<SprinkledSet, SprinkleError> {
    let region = Region::diamond(a.clone(), b.clone())?;
    sprinkle_region(&region, n, SprinkleMode::Poisson, rng)
}

/// Sprinkles any region. In binomial mode exactly `round(n · volume)`
/// points are kept (rejection continues until that many are accepted).
pub fn sprinkle_region<R: Rng + ?Sized>(
    region: &Region,
    n: f64,
    mode: SprinkleMode,
    rng: &mut R,
) -> Result<SprinkledSet, SprinkleError> {
    if let Region::Cube { d } = region {
        return sprinkle_cube(*d, n, mode, rng);
    }
    if !(n > 0.0 && n.is_finite()) {
        return Err(SprinkleError::InvalidParameter(format!("intensity {n}")));
    }
    let bbox = region.bounding_box();
    let box_volume: f64 = bbox.iter().map(|(lo, hi)| hi - lo).product();
    let d = region.dim();
    let mut coords = Vec::new();
    let mut p = vec![0.0; d];
    let draw = |rng: &mut R, p: &mut Vec<f64>| {
        for (slot, (lo, hi)) in p.iter_mut().zip(&bbox) {
            *slot = lo + (hi - lo) * rng.random::<f64>();
        }
        region.contains(p)
    };
    match mode {
        SprinkleMode::Poisson => {
            let proposals = point_count(n * box_volume, mode, rng);
            for _ in 0..proposals {
                if draw(rng, &mut p) {
                    coords.extend_from_slice(&p);
                }
            }
        }
        SprinkleMode::Binomial => {
            let target = (n * region.volume()).round() as usize;
            while coords.len() < target * d {
                if draw(rng, &mut p) {
                    coords.extend_from_slice(&p);
                }
            }
        }
    }
    Ok(SprinkledSet {
        region: region.clone(),
        intensity: n,
        coords,
    })
}

/// Length (vertex count) of the longest chain, processing `order` (a linear
/// extension) and keeping one antichain per chain length.
///
/// If some point of level `L` lies below `q`, then so does some point of
/// every lower level, so the level of `q` is found by binary search.
fn layered_longest_chain(
    order: &[usize],
    less: impl Fn(usize, usize) -> bool,
    want_chain: bool,
) -> (usize, Vec<usize>) {
    let mut levels: Vec<Vec<usize>> = Vec::new();
    let mut parent: Vec<(usize, usize)> = Vec::new();
    let below_any = |level: &[usize], q: usize| level.iter().rev().copied().find(|&p| less(p, q));
    for &q in order {
        let (mut lo, mut hi) = (0usize, levels.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if below_any(&levels[mid], q).is_some() {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if want_chain {
            let prev = if lo == 0 {
                usize::MAX
            } else {
                below_any(&levels[lo - 1], q).expect("binary search invariant")
            };
            parent.push((q, prev));
        }
        if lo == levels.len() {
            levels.push(Vec::new());
        }
        levels[lo].push(q);
    }
    let len = levels.len();
    if !want_chain || len == 0 {
        return (len, Vec::new());
    }
    let parent: std::collections::HashMap<usize, usize> = parent.into_iter().collect();
    let mut chain = vec![levels[len - 1][0]];
    loop {
        let prev = parent[chain.last().unwrap()];
        if prev == usize::MAX {
            break;
        }
        chain.push(prev);
    }
    chain.reverse();
    (len, chain)
}

fn sorted_by_x(points: &[(f64, f64)]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a].0.total_cmp(&points[b].0).then(a.cmp(&b)));
    idx
}

/// Longest strictly increasing run of `y` after sorting by `x` (patience sorting).
fn lis_len(points: &[(f64, f64)]) -> usize {
    let mut tops: Vec<f64> = Vec::new();
    for i in sorted_by_x(points) {
        let y = points[i].1;
        let pos = tops.partition_point(|&t| t < y);
        if pos == tops.len() {
            tops.push(y);
        } else {
            tops[pos] = y;
        }
    }
    tops.len()
}

/// Height (edge count) of the coordinatewise order on points of the plane,
/// in `O(n log n)`.
pub fn height_2d_fast(points: &[(f64, f64)]) -> usize {
    lis_len(points).saturating_sub(1)
}

/// A longest chain in the plane's coordinatewise order, bottom to top.
pub fn longest_chain_2d(points: &[(f64, f64)]) -> Vec<usize> {
    let mut tops: Vec<usize> = Vec::new();
    let mut prev = vec![usize::MAX; points.len()];
    for i in sorted_by_x(points) {
        let y = points[i].1;
        let pos = tops.partition_point(|&t| points[t].1 < y);
        if pos > 0 {
            prev[i] = tops[pos - 1];
        }
        if pos == tops.len() {
            tops.push(i);
        } else {
            tops[pos] = i;
        }
    }
    let mut chain = Vec::new();
    let mut cur = tops.last().copied();
    while let Some(i) = cur {
        chain.push(i);
        cur = (prev[i] != usize::MAX).then_some(prev[i]);
    }
    chain.reverse();
    chain
}

/// Estimator of `2^{-d}`: the largest, over sprinkled points `c`, of
/// `min(#[a, c], #[c, b])` divided by the point count, where `a` and `b`
/// are the region's corners and both counts include `c`.
pub fn midpoint_dimension_stat(s: &SprinkledSet) -> Result<f64, SprinkleError> {
    const MIN_POINTS: usize = 100;
    let n = s.len();
    if n < MIN_POINTS {
        return Err(SprinkleError::TooFewPoints {
            needed: MIN_POINTS,
            have: n,
        });
    }
    let mut best = 0usize;
    for c in 0..n {
        let pc = s.point(c);
        let (mut below, mut above) = (0usize, 0usize);
        for z in 0..n {
            let pz = s.point(z);
            if s.region.precedes(pz, pc) {
                below += 1;
            }
            if s.region.precedes(pc, pz) {
                above += 1;
            }
        }
        best = best.max(below.min(above));
    }
    Ok(best as f64 / n as f64)
}

/// One row of a sprinkling experiment output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprinkleStat {
    pub model: String,
    pub d: usize,
    pub n: f64,
    pub seed: u64,
    pub statistic: String,
    pub value: f64,
    pub stderr: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn ev(t: f64, x: &[f64]) -> Event {
        Event::new(t, x.to_vec())
    }

    #[test]
    fn causal_order_examples() {
        let o = ev(0.0, &[0.0, 0.0, 0.0]);
        assert!(causal_leq(&o, &ev(1.0, &[0.0, 0.0, 0.0])).unwrap());
        assert!(!causal_leq(&o, &ev(1.0, &[2.0, 0.0, 0.0])).unwrap());
        assert!(causal_leq(&o, &ev(1.0, &[1.0, 0.0, 0.0])).unwrap());
        assert_eq!(
            causal_leq(&o, &ev(1.0, &[0.0])),
            Err(SprinkleError::DimensionMismatch(4, 2))
        );
    }

    #[test]
    fn proper_time_examples() {
        assert_eq!(proper_time(&ev(0.0, &[0.0]), &ev(1.0, &[0.0])).unwrap(), 1.0);
        let o = ev(0.0, &[0.0, 0.0, 0.0]);
        let tau = proper_time(&o, &ev(2.0, &[1.0, 0.0, 0.0])).unwrap();
        assert!((tau - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(proper_time(&o, &ev(1.0, &[1.0, 0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(
            proper_time(&o, &ev(1.0, &[2.0, 0.0, 0.0])),
            Err(SprinkleError::NotTimelike)
        );
    }

    #[test]
    fn spacelike_examples() {
        let o = ev(0.0, &[0.0, 0.0, 0.0]);
        assert_eq!(spacelike_distance(&o, &ev(0.0, &[1.0, 0.0, 0.0])).unwrap(), 1.0);
        let d = spacelike_distance(&o, &ev(0.5, &[1.0, 0.0, 0.0])).unwrap();
        assert!((d - 0.75f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            spacelike_distance(&o, &ev(2.0, &[1.0, 0.0, 0.0])),
            Err(SprinkleError::NotSpacelike)
        );
    }

    #[test]
    fn boosts() {
        let e = ev(0.7, &[0.2, -0.4]);
        assert_eq!(lorentz_boost(&e, 0.0, 0).unwrap(), e);
        assert_eq!(lorentz_boost(&e, 1.0, 0), Err(SprinkleError::InvalidBeta(1.0)));
        assert!(matches!(
            lorentz_boost(&e, 0.5, 2),
            Err(SprinkleError::InvalidAxis { .. })
        ));
        let b = lorentz_boost(&e, 0.6, 1).unwrap();
        assert_eq!(b.x[0], 0.2);
        let gamma = 1.25;
        assert!((b.t - gamma * (0.7 - 0.6 * -0.4)).abs() < 1e-15);
    }

    #[test]
    fn boosts_preserve_order_and_proper_time() {
        let mut r = rng(11);
        for _ in 0..2000 {
            let d = r.random_range(2..=4);
            let mk = |r: &mut rand_chacha::ChaCha8Rng| {
                Event::new(
                    r.random_range(-1.0..1.0),
                    (1..d).map(|_| r.random_range(-1.0..1.0)).collect(),
                )
            };
            let (a, b) = (mk(&mut r), mk(&mut r));
            let beta = r.random_range(-0.9..0.9);
            let axis = r.random_range(0..d - 1);
            let (ba, bb) = (
                lorentz_boost(&a, beta, axis).unwrap(),
                lorentz_boost(&b, beta, axis).unwrap(),
            );
            assert_eq!(causal_leq(&a, &b).unwrap(), causal_leq(&ba, &bb).unwrap());
            assert_eq!(causal_leq(&b, &a).unwrap(), causal_leq(&bb, &ba).unwrap());
            if causal_leq(&a, &b).unwrap() {
                let (t0, t1) = (proper_time(&a, &b).unwrap(), proper_time(&ba, &bb).unwrap());
                assert!((t0 - t1).abs() <= 1e-9 * t0.max(1e-3), "{t0} {t1}");
            }
        }
    }

    #[test]
    fn diamond_volumes() {
        assert!((diamond_volume(2, 1.0) - 0.5).abs() < 1e-15);
        assert!((diamond_volume(3, 1.0) - std::f64::consts::PI / 12.0).abs() < 1e-15);
        assert!((diamond_volume(4, 1.0) - std::f64::consts::PI / 24.0).abs() < 1e-15);
        for d in 2..=5 {
            assert!((Region::unit_diamond(d).unwrap().volume() - 1.0).abs() < 1e-12);
        }
        assert_eq!(
            Region::diamond(ev(0.0, &[0.0]), ev(1.0, &[1.0])),
            Err(SprinkleError::DegenerateInterval)
        );
    }

    #[test]
    fn m2_map_is_an_order_isomorphism() {
        assert_eq!(map_m2_to_r2(&ev(0.0, &[0.0])).unwrap(), (0.0, 0.0));
        assert_eq!(
            map_m2_to_r2(&ev(0.0, &[0.0, 0.0])),
            Err(SprinkleError::WrongDimension(3))
        );
        let mut r = rng(5);
        for _ in 0..5000 {
            let a = ev(r.random(), &[r.random_range(-1.0..1.0)]);
            let b = ev(r.random(), &[r.random_range(-1.0..1.0)]);
            let (u, v) = (map_m2_to_r2(&a).unwrap(), map_m2_to_r2(&b).unwrap());
            assert_eq!(causal_leq(&a, &b).unwrap(), u.0 <= v.0 && u.1 <= v.1);
        }
        // a rectangle in (t, x) maps to a rotated rectangle of equal area
        let corners = [ev(0.0, &[0.0]), ev(0.0, &[2.0]), ev(3.0, &[0.0])];
        let m: Vec<(f64, f64)> = corners.iter().map(|e| map_m2_to_r2(e).unwrap()).collect();
        let area = ((m[1].0 - m[0].0) * (m[2].1 - m[0].1) - (m[1].1 - m[0].1) * (m[2].0 - m[0].0)).abs();
        assert!((area - 6.0).abs() < 1e-12);
    }

    #[test]
    fn cube_examples() {
        let mut r = rng(1);
        let s = sprinkle_cube(2, 1.0, SprinkleMode::Binomial, &mut r).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.order().unwrap(), Poset::antichain(1));
        let line = sprinkle_cube(1, 50.0, SprinkleMode::Binomial, &mut r).unwrap();
        assert_eq!(line.order().unwrap().height(), 49);
        let pois = sprinkle_cube(3, 200.0, SprinkleMode::Poisson, &mut r).unwrap();
        assert!((0..pois.len()).all(|i| pois.region.contains(pois.point(i))));
    }

    #[test]
    fn diamond_points_lie_inside_and_respect_causality() {
        let mut r = rng(2);
        let a = ev(0.0, &[0.0, 0.0]);
        let b = ev(2.0, &[0.5, 0.0]);
        let s = sprinkle_diamond(&a, &b, 100.0, &mut r).unwrap();
        for i in 0..s.len() {
            let e = s.event(i);
            assert!(causal_leq(&a, &e).unwrap() && causal_leq(&e, &b).unwrap());
        }
        let order = s.order().unwrap();
        for i in 0..s.len() {
            for j in 0..s.len() {
                if i != j {
                    assert_eq!(order.lt(i, j), causal_leq(&s.event(i), &s.event(j)).unwrap());
                }
            }
        }
    }

    #[test]
    fn m2_diamond_maps_to_cube_order() {
        let mut r = rng(3);
        let region = Region::unit_diamond(2).unwrap();
        let s = sprinkle_region(&region, 300.0, SprinkleMode::Poisson, &mut r).unwrap();
        let mapped: Vec<(f64, f64)> = (0..s.len()).map(|i| map_m2_to_r2(&s.event(i)).unwrap()).collect();
        let cube_order = Poset::from_order_fn(s.len(), |i, j| mapped[i].0 <= mapped[j].0 && mapped[i].1 <= mapped[j].1);
        assert_eq!(s.order().unwrap(), cube_order);
    }

    #[test]
    fn binomial_diamond_has_exact_count() {
        let mut r = rng(4);
        let region = Region::unit_diamond(3).unwrap();
        let s = sprinkle_region(&region, 123.0, SprinkleMode::Binomial, &mut r).unwrap();
        assert_eq!(s.len(), 123);
    }

    #[test]
    fn fast_height_examples() {
        let diag: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, i as f64)).collect();
        assert_eq!(height_2d_fast(&diag), 9);
        let anti: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, -(i as f64))).collect();
        assert_eq!(height_2d_fast(&anti), 0);
        assert_eq!(height_2d_fast(&[]), 0);
        assert_eq!(longest_chain_2d(&diag), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn fast_and_layered_heights_agree_with_poset_height() {
        let mut r = rng(6);
        for _ in 0..5 {
            let s = sprinkle_cube(2, 2000.0, SprinkleMode::Binomial, &mut r).unwrap();
            let pts: Vec<(f64, f64)> = (0..s.len()).map(|i| (s.point(i)[0], s.point(i)[1])).collect();
            let generic = s.order().unwrap().height();
            assert_eq!(height_2d_fast(&pts), generic);
            let layered = layered_longest_chain(&s.extension_order(), |p, q| s.precedes(p, q), false).0;
            assert_eq!(layered - 1, generic);
        }
        for d in [3usize, 4] {
            let s = sprinkle_region(&Region::unit_diamond(d).unwrap(), 800.0, SprinkleMode::Poisson, &mut r).unwrap();
            assert_eq!(s.height(), s.order().unwrap().height());
            let c = sprinkle_cube(d, 800.0, SprinkleMode::Binomial, &mut r).unwrap();
            assert_eq!(c.height(), c.order().unwrap().height());
        }
    }

    #[test]
    fn longest_chains_are_chains() {
        let mut r = rng(7);
        for region in [
            Region::cube(2).unwrap(),
            Region::cube(3).unwrap(),
            Region::unit_diamond(4).unwrap(),
        ] {
            let s = sprinkle_region(&region, 500.0, SprinkleMode::Poisson, &mut r).unwrap();
            let chain = s.longest_chain();
            assert_eq!(chain.len(), s.longest_chain_len());
            assert!(chain.windows(2).all(|w| s.precedes(w[0], w[1])));
        }
    }

    #[test]
    fn induced_order_matches_pairwise_check() {
        let mut r = rng(8);
        for _ in 0..3 {
            let s = sprinkle_cube(3, 500.0, SprinkleMode::Binomial, &mut r).unwrap();
            let p = s.order().unwrap();
            assert!(p.validate().is_ok());
            for i in 0..s.len() {
                for j in 0..s.len() {
                    let brute = i != j && (0..3).all(|k| s.point(i)[k] <= s.point(j)[k]);
                    assert_eq!(p.lt(i, j), brute);
                }
            }
        }
        let big = sprinkle_cube(2, 30_001.0, SprinkleMode::Binomial, &mut r).unwrap();
        assert_eq!(big.order(), Err(SprinkleError::TooManyPoints(30_001)));
    }

    #[test]
    fn two_points_and_spacelike_hyperplane() {
        let region = Region::unit_diamond(3).unwrap();
        let tau = unit_volume_proper_time(3);
        let s = SprinkledSet::from_points(
            region.clone(),
            1.0,
            &[vec![0.1 * tau, 0.0, 0.0], vec![0.5 * tau, 0.1, 0.0]],
        )
        .unwrap();
        assert_eq!(s.order().unwrap(), Poset::chain(2));
        let flat: Vec<Vec<f64>> = (0..5).map(|k| vec![0.5 * tau, 0.05 * k as f64, 0.0]).collect();
        let s = SprinkledSet::from_points(region, 1.0, &flat).unwrap();
        assert_eq!(s.order().unwrap(), Poset::antichain(5));
    }

    #[test]
    fn midpoint_statistic_limits() {
        let mut r = rng(9);
        let line = sprinkle_cube(1, 1000.0, SprinkleMode::Binomial, &mut r).unwrap();
        assert!((midpoint_dimension_stat(&line).unwrap() - 0.5).abs() < 0.01);
        let few = sprinkle_cube(2, 50.0, SprinkleMode::Binomial, &mut r).unwrap();
        assert!(matches!(
            midpoint_dimension_stat(&few),
            Err(SprinkleError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn csv_has_documented_header() {
        let mut r = rng(10);
        let s = sprinkle_diamond(&ev(0.0, &[0.0, 0.0, 0.0]), &ev(1.0, &[0.0, 0.0, 0.0]), 50.0, &mut r).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("id,t,x1,x2,x3\n"));
        assert_eq!(text.lines().count(), s.len() + 1);
    }
}
