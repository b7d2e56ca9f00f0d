//! Classical sequential growth.
//!
//! At stage `m` a new element arrives and sits above the down-closure of a
//! random subset `S` of the `m` existing elements, with `P(S) = t_{|S|} / Z_m`
//! and `Z_m = Σ_k C(m, k) t_k`. Elements are numbered in arrival order, so
//! every generated poset is naturally labelled.
//!
//! Probabilities are computed in log-space. The verifiers are generic over
//! the scalar type so they also run in exact rational arithmetic.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed};
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::poset::{words_for, LabelledPoset, Poset, PosetError};
use crate::rng::run_replicas;
use crate::stats::{ln_binomial, log_sum_exp, summarize};

/// The only closed form accepted by [`CsgParams::ClosedForm`].
pub const CLOSED_FORM_EXPR: &str = "(t/log k)^k";

/// Largest poset handled by the path-enumerating verifiers.
pub const MAX_VERIFIER_SIZE: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrowthError {
    #[error("all weights t_0..t_{0} vanish")]
    DegenerateWeights(usize),
    #[error("percolation probability {0} is not in (0, 1)")]
    InvalidP(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("the identity order is not a linear extension")]
    NotNaturallyLabelled,
    #[error("invalid transition: {0}")]
    InvalidTransition(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Poset(#[from] PosetError),
}

/// Weight sequence `t_0, t_1, ...` of a growth model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawParams")]
pub enum CsgParams {
    /// A finite list, padded with zeros.
    Explicit { t: Vec<f64> },
    /// `t_k = (p / (1 - p))^k`.
    TransitivePercolation { p: f64 },
    /// `t_0 = 1` and `t_k = (t / ln(k + e))^k` for `k ≥ 1`. The shift by `e`
    /// keeps the logarithm positive at `k = 1`.
    ClosedForm { expr: String, t: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawParams {
    Explicit { t: Vec<f64> },
    TransitivePercolation { p: f64 },
    ClosedForm { expr: String, t: f64 },
}

impl TryFrom<RawParams> for CsgParams {
    type Error = GrowthError;

    fn try_from(raw: RawParams) -> Result<Self, GrowthError> {
        let params = match raw {
            RawParams::Explicit { t } => CsgParams::Explicit { t },
            RawParams::TransitivePercolation { p } => CsgParams::TransitivePercolation { p },
            RawParams::ClosedForm { expr, t } => CsgParams::ClosedForm { expr, t },
        };
        params.validate()?;
        Ok(params)
    }
}

impl CsgParams {
    pub fn explicit(t: Vec<f64>) -> Result<Self, GrowthError> {
        let params = CsgParams::Explicit { t };
        params.validate()?;
        Ok(params)
    }

    pub fn closed_form(t: f64) -> Result<Self, GrowthError> {
        let params = CsgParams::ClosedForm {
            expr: CLOSED_FORM_EXPR.into(),
            t,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), GrowthError> {
        match self {
            CsgParams::Explicit { t } => {
                if t.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(GrowthError::InvalidParams(
                        "weights must be finite and non-negative".into(),
                    ));
                }
                if t.first().is_none_or(|&t0| t0 <= 0.0) {
                    return Err(GrowthError::InvalidParams("t_0 must be positive".into()));
                }
            }
            CsgParams::TransitivePercolation { p } => {
                if !(*p > 0.0 && *p < 1.0) {
                    return Err(GrowthError::InvalidP(*p));
                }
            }
            CsgParams::ClosedForm { expr, t } => {
                if expr.replace(' ', "") != CLOSED_FORM_EXPR.replace(' ', "") {
                    return Err(GrowthError::InvalidParams(format!(
                        "unsupported closed form {expr:?}; expected {CLOSED_FORM_EXPR:?}"
                    )));
                }
                if !(*t > 0.0 && t.is_finite()) {
                    return Err(GrowthError::InvalidParams(format!("closed-form scale {t}")));
                }
            }
        }
        Ok(())
    }

    /// `ln t_k`, `-inf` when the weight is zero.
    pub fn ln_t(&self, k: usize) -> f64 {
        match self {
            CsgParams::Explicit { t } => t.get(k).map_or(f64::NEG_INFINITY, |v| v.ln()),
            CsgParams::TransitivePercolation { p } => k as f64 * (p / (1.0 - p)).ln(),
            CsgParams::ClosedForm { t, .. } => {
                if k == 0 {
                    0.0
                } else {
                    let kf = k as f64;
                    kf * (t.ln() - (kf + std::f64::consts::E).ln().ln())
                }
            }
        }
    }

    pub fn t(&self, k: usize) -> f64 {
        self.ln_t(k).exp()
    }

    /// Highest index with a nonzero weight, if finite.
    fn support(&self) -> Option<usize> {
        match self {
            CsgParams::Explicit { t } => t.iter().rposition(|&v| v > 0.0),
            _ => None,
        }
    }

    /// `ln Z_m = ln Σ_k C(m, k) t_k`.
    pub fn ln_normalizer(&self, m: usize) -> f64 {
        if let CsgParams::TransitivePercolation { p } = self {
            return -(m as f64) * (1.0 - p).ln();
        }
        let top = self.support().map_or(m, |s| s.min(m));
        let terms: Vec<f64> = (0..=top)
            .map(|k| ln_binomial(m as u64, k as u64) + self.ln_t(k))
            .collect();
        log_sum_exp(&terms)
    }

    /// `t_0, ..., t_upto` in the scalar type `T`. Percolation weights are
    /// formed from the ratio `p / (1 - p)` in `T` itself.
    pub fn weights<T: Scalar>(&self, upto: usize) -> Vec<T> {
        match self {
            CsgParams::TransitivePercolation { p } => {
                let p = T::from_f64(*p).expect("finite p");
                let ratio = p.clone() / (T::one() - p);
                let mut out = Vec::with_capacity(upto + 1);
                let mut w = T::one();
                for _ in 0..=upto {
                    out.push(w.clone());
                    w = w * ratio.clone();
                }
                out
            }
            CsgParams::Explicit { t } => (0..=upto)
                .map(|k| T::from_f64(t.get(k).copied().unwrap_or(0.0)).expect("finite weight"))
                .collect(),
            CsgParams::ClosedForm { .. } => (0..=upto)
                .map(|k| T::from_f64(self.t(k)).expect("finite weight"))
                .collect(),
        }
    }

    /// `p_m = E|S_m| / m`, the chance that a fixed existing element is selected at stage `m`.
    pub fn selection_fraction(&self, m: usize) -> f64 {
        if m == 0 {
            return 0.0;
        }
        let z = self.ln_normalizer(m);
        let top = self.support().map_or(m, |s| s.min(m));
        (1..=top)
            .map(|k| (k as f64 / m as f64) * (ln_binomial(m as u64, k as u64) + self.ln_t(k) - z).exp())
            .sum()
    }
}

/// `t_k = (p / (1 - p))^k`.
pub fn transitive_percolation_params(p: f64) -> Result<CsgParams, GrowthError> {
    let params = CsgParams::TransitivePercolation { p };
    params.validate()?;
    Ok(params)
}

/// Numeric type usable by the exact verifiers: `f64` or [`BigRational`].
pub trait Scalar: Clone + PartialOrd + Signed + FromPrimitive {}
impl<T: Clone + PartialOrd + Signed + FromPrimitive> Scalar for T {}

/// Exact rational from an `f64`.
pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite value")
}

/// Probability that `S_m` equals a given set of size `s`.
pub fn select_set_probability(m: usize, s: usize, params: &CsgParams) -> Result<f64, GrowthError> {
    if s > m {
        return Err(GrowthError::InvalidTransition(format!(
            "subset of size {s} from {m} elements"
        )));
    }
    let z = params.ln_normalizer(m);
    if z == f64::NEG_INFINITY {
        return Err(GrowthError::DegenerateWeights(m));
    }
    Ok((params.ln_t(s) - z).exp())
}

/// A transition from `q` in which the new element sits above the down-set `b`
/// and covers its maximal elements `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSpec {
    pub q: Poset,
    pub b: Vec<usize>,
    pub c: Vec<usize>,
}

impl TransitionSpec {
    pub fn new(q: Poset, b: Vec<usize>) -> Result<Self, GrowthError> {
        let mut seen = HashSet::new();
        for &e in &b {
            if e >= q.len() {
                return Err(PosetError::IndexOutOfRange { index: e, n: q.len() }.into());
            }
            if !seen.insert(e) {
                return Err(GrowthError::InvalidTransition(format!("element {e} repeated")));
            }
        }
        if !q.is_down_set(&b) {
            return Err(GrowthError::InvalidTransition("B is not a down-set".into()));
        }
        let c = b.iter().copied().filter(|&x| !b.iter().any(|&y| q.lt(x, y))).collect();
        Ok(TransitionSpec { q, b, c })
    }

    /// `(m, |B|, |C|)`, which determines the transition probability.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.q.len(), self.b.len(), self.c.len())
    }
}

/// `a = Σ_{ℓ=c}^{b} C(b-c, ℓ-c) t_ℓ` and `Z_m` in the scalar type.
fn transition_terms<T: Scalar>(m: usize, b: usize, c: usize, weights: &[T]) -> (T, T) {
    let binom =
        |n: usize, k: usize| T::from_u64(crate::poset::binomial_u64(n as u64, k as u64)).expect("binomial fits");
    let mut a = T::zero();
    for (l, w) in weights.iter().enumerate().take(b + 1).skip(c) {
        a = a + binom(b - c, l - c) * w.clone();
    }
    let mut z = T::zero();
    for (k, w) in weights.iter().enumerate().take(m + 1) {
        z = z + binom(m, k) * w.clone();
    }
    (a, z)
}

/// Probability of the transition with shape `(m, b, c)`, in `T`.
pub fn shape_probability_exact<T: Scalar>(m: usize, b: usize, c: usize, weights: &[T]) -> Result<T, GrowthError> {
    let (a, z) = transition_terms(m, b, c, weights);
    if z.is_zero() {
        return Err(GrowthError::DegenerateWeights(m));
    }
    Ok(a / z)
}

/// Probability of the transition with shape `(m, b, c)`, computed in log-space.
pub fn shape_probability(m: usize, b: usize, c: usize, params: &CsgParams) -> Result<f64, GrowthError> {
    let z = params.ln_normalizer(m);
    if z == f64::NEG_INFINITY {
        return Err(GrowthError::DegenerateWeights(m));
    }
    let terms: Vec<f64> = (c..=b)
        .map(|l| ln_binomial((b - c) as u64, (l - c) as u64) + params.ln_t(l))
        .collect();
    Ok((log_sum_exp(&terms) - z).exp())
}

pub fn transition_probability(ts: &TransitionSpec, params: &CsgParams) -> Result<f64, GrowthError> {
    let (m, b, c) = ts.shape();
    shape_probability(m, b, c, params)
}

pub fn transition_probability_exact<T: Scalar>(ts: &TransitionSpec, params: &CsgParams) -> Result<T, GrowthError> {
    let (m, b, c) = ts.shape();
    shape_probability_exact(m, b, c, &params.weights::<T>(m))
}

/// All down-sets of `q` (as sorted element lists), `q.len() ≤ 20`.
pub fn down_sets(q: &Poset) -> Result<Vec<Vec<usize>>, GrowthError> {
    let n = q.len();
    if n > 20 {
        return Err(GrowthError::TooLarge(format!("down-set listing for {n} elements")));
    }
    let below: Vec<u32> = (0..n).map(|j| q.below(j).fold(0u32, |m, i| m | 1 << i)).collect();
    Ok((0u32..1 << n)
        .filter(|&mask| (0..n).all(|e| mask >> e & 1 == 0 || below[e] & !mask == 0))
        .map(|mask| (0..n).filter(|&e| mask >> e & 1 == 1).collect())
        .collect())
}

fn linear_extensions(q: &Poset) -> Vec<Vec<usize>> {
    fn rec(q: &Poset, placed: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if placed.len() == q.len() {
            out.push(placed.clone());
            return;
        }
        for e in 0..q.len() {
            if !used[e] && q.below(e).all(|b| used[b]) {
                used[e] = true;
                placed.push(e);
                rec(q, placed, used, out);
                placed.pop();
                used[e] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(q, &mut Vec::new(), &mut vec![false; q.len()], &mut out);
    out
}

/// Probability of each generation path to `q`, one per linear extension, with
/// the first path being the identity. `rule(m, b, c)` gives the probability
/// of adding an element above a down-set of size `b` with `c` maximal
/// elements to an `m`-element state.
pub fn path_probabilities<T: Scalar>(
    q: &Poset,
    rule: impl Fn(usize, usize, usize) -> Result<T, GrowthError>,
) -> Result<Vec<T>, GrowthError> {
    if q.len() > MAX_VERIFIER_SIZE {
        return Err(GrowthError::TooLarge(format!(
            "{} elements; at most {MAX_VERIFIER_SIZE}",
            q.len()
        )));
    }
    if !q.is_naturally_labelled() {
        return Err(GrowthError::NotNaturallyLabelled);
    }
    let covers: Vec<usize> = (0..q.len())
        .map(|j| q.covering_pairs().iter().filter(|&&(_, y)| y == j).count())
        .collect();
    let mut out = Vec::new();
    for ext in linear_extensions(q) {
        let mut prob = T::one();
        for (m, &e) in ext.iter().enumerate() {
            prob = prob * rule(m, q.down_count(e), covers[e])?;
        }
        out.push(prob);
    }
    Ok(out)
}

/// Largest `|P(path) - P(identity path)| / P(identity path)` over all paths.
pub fn max_relative_deviation<T: Scalar>(paths: &[T]) -> T {
    let reference = paths[0].clone();
    let mut worst = T::zero();
    for p in paths {
        let dev = (p.clone() - reference.clone()).abs() / reference.clone();
        if dev > worst {
            worst = dev;
        }
    }
    worst
}

/// Deviation from general covariance under an arbitrary transition rule.
pub fn check_general_covariance_with<T: Scalar>(
    q: &Poset,
    rule: impl Fn(usize, usize, usize) -> Result<T, GrowthError>,
) -> Result<T, GrowthError> {
    Ok(max_relative_deviation(&path_probabilities(q, rule)?))
}

/// Deviation from general covariance of the growth model (0 means covariant).
pub fn check_general_covariance(q: &Poset, params: &CsgParams) -> Result<f64, GrowthError> {
    check_general_covariance_with(q, |m, b, c| shape_probability(m, b, c, params))
}

/// As [`check_general_covariance`] but in exact rational arithmetic.
pub fn check_general_covariance_exact(q: &Poset, params: &CsgParams) -> Result<BigRational, GrowthError> {
    let weights = params.weights::<BigRational>(q.len());
    check_general_covariance_with(q, |m, b, c| shape_probability_exact(m, b, c, &weights))
}

/// `|p(Q;S1) p(Q';S2) - p(Q;S2) p(Q';S1)|` with `Q'` the restriction of `Q` to `S1 ∪ S2`.
pub fn check_bell_causality(q: &Poset, s1: &[usize], s2: &[usize], params: &CsgParams) -> Result<f64, GrowthError> {
    bell_residual(q, s1, s2, |m, b, c| shape_probability(m, b, c, params))
}

/// Bell-causality residual under an arbitrary transition rule.
pub fn bell_residual<T: Scalar>(
    q: &Poset,
    s1: &[usize],
    s2: &[usize],
    rule: impl Fn(usize, usize, usize) -> Result<T, GrowthError>,
) -> Result<T, GrowthError> {
    let t1 = TransitionSpec::new(q.clone(), s1.to_vec())?;
    let t2 = TransitionSpec::new(q.clone(), s2.to_vec())?;
    let mut union: Vec<usize> = s1.iter().chain(s2).copied().collect();
    union.sort_unstable();
    union.dedup();
    let relabel = |s: &[usize]| -> Vec<usize> {
        s.iter()
            .map(|e| union.binary_search(e).expect("member of union"))
            .collect()
    };
    let sub = q.induced(&union);
    let u1 = TransitionSpec::new(sub.clone(), relabel(s1))?;
    let u2 = TransitionSpec::new(sub, relabel(s2))?;
    let p = |t: &TransitionSpec| {
        let (m, b, c) = t.shape();
        rule(m, b, c)
    };
    Ok((p(&t1)? * p(&u2)? - p(&t2)? * p(&u1)?).abs())
}

/// Transitive-percolation probability `p^{c(Q)} (1-p)^{i(Q)}` of the
/// naturally labelled poset `q`.
pub fn tp_labelled_probability(q: &Poset, p: f64) -> Result<f64, GrowthError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(GrowthError::InvalidP(p));
    }
    if !q.is_naturally_labelled() {
        return Err(GrowthError::NotNaturallyLabelled);
    }
    Ok(p.powi(q.cover_count() as i32) * (1.0 - p).powi(q.incomparable_count() as i32))
}

/// A grown poset together with the order in which its elements arrived.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthState {
    pub labelled: LabelledPoset,
    pub arrival: Vec<usize>,
}

impl GrowthState {
    pub fn empty() -> Self {
        GrowthState {
            labelled: LabelledPoset {
                poset: Poset::antichain(0),
                labels: Vec::new(),
            },
            arrival: Vec::new(),
        }
    }

    pub fn poset(&self) -> &Poset {
        &self.labelled.poset
    }

    pub fn len(&self) -> usize {
        self.arrival.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrival.is_empty()
    }

    /// Replays the arrivals and checks each element was maximal when it arrived.
    pub fn validate(&self) -> Result<(), GrowthError> {
        let p = self.poset();
        p.validate()?;
        if !p.is_linear_extension(&self.arrival) {
            return Err(PosetError::Invalid("arrival order is not a linear extension".into()).into());
        }
        LabelledPoset::new(p.clone(), self.labelled.labels.clone())?;
        Ok(())
    }
}

/// Incremental builder: element `v` is added above a given down-closed row.
struct Builder {
    n: usize,
    words: usize,
    below: Vec<u64>,
    above: Vec<u64>,
    labels: Vec<f64>,
    used: HashSet<u64>,
    len: usize,
}

impl Builder {
    fn new(capacity: usize) -> Self {
        let words = words_for(capacity);
        Builder {
            n: capacity,
            words,
            below: vec![0; capacity * words],
            above: vec![0; capacity * words],
            labels: Vec::with_capacity(capacity),
            used: HashSet::with_capacity(capacity),
            len: 0,
        }
    }

    fn from_state(state: &GrowthState, capacity: usize) -> Self {
        let mut b = Builder::new(capacity);
        let p = state.poset();
        for (i, j) in p.relations() {
            b.below[j * b.words + i / 64] |= 1 << (i % 64);
            b.above[i * b.words + j / 64] |= 1 << (j % 64);
        }
        b.labels = state.labelled.labels.clone();
        b.used = b.labels.iter().map(|l| l.to_bits()).collect();
        b.len = p.len();
        b
    }

    fn below_row(&self, i: usize) -> &[u64] {
        &self.below[i * self.words..(i + 1) * self.words]
    }

    /// Down-closure of `selected`.
    fn closure(&self, selected: impl IntoIterator<Item = usize>) -> Vec<u64> {
        let mut row = vec![0u64; self.words];
        for s in selected {
            row[s / 64] |= 1 << (s % 64);
            for (r, b) in row.iter_mut().zip(self.below_row(s)) {
                *r |= b;
            }
        }
        row
    }

    fn push<R: Rng + ?Sized>(&mut self, row: &[u64], rng: &mut R) {
        let v = self.len;
        self.below[v * self.words..(v + 1) * self.words].copy_from_slice(row);
        for i in crate::poset::ones(row) {
            self.above[i * self.words + v / 64] |= 1 << (v % 64);
        }
        loop {
            let label: f64 = rng.random();
            if self.used.insert(label.to_bits()) {
                self.labels.push(label);
                break;
            }
        }
        self.len += 1;
    }

    fn finish(self) -> GrowthState {
        let n = self.len;
        let poset = if n == self.n {
            Poset::from_above_rows(n, self.above)
        } else {
            let words = words_for(n);
            let mut lt = vec![0u64; n * words];
            for i in 0..n {
                lt[i * words..(i + 1) * words].copy_from_slice(&self.above[i * self.words..i * self.words + words]);
            }
            Poset::from_above_rows(n, lt)
        };
        GrowthState {
            labelled: LabelledPoset {
                poset,
                labels: self.labels,
            },
            arrival: (0..n).collect(),
        }
    }
}

/// Draws `|S| = k` with probability `C(m, k) t_k / Z_m`.
fn sample_subset_size<R: Rng + ?Sized>(m: usize, params: &CsgParams, rng: &mut R) -> Result<usize, GrowthError> {
    let z = params.ln_normalizer(m);
    if z == f64::NEG_INFINITY {
        return Err(GrowthError::DegenerateWeights(m));
    }
    let top = params.support().map_or(m, |s| s.min(m));
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for k in 0..=top {
        let w = (ln_binomial(m as u64, k as u64) + params.ln_t(k) - z).exp();
        if w > 0.0 {
            last = k;
        }
        acc += w;
        if u < acc {
            return Ok(k);
        }
    }
    Ok(last)
}

fn step_builder<R: Rng + ?Sized>(b: &mut Builder, params: &CsgParams, rng: &mut R) -> Result<(), GrowthError> {
    let m = b.len;
    let k = sample_subset_size(m, params, rng)?;
    let row = b.closure(sample_indices(rng, m, k));
    b.push(&row, rng);
    Ok(())
}

/// Adds one element to `state`.
pub fn csg_step<R: Rng + ?Sized>(
    state: &GrowthState,
    params: &CsgParams,
    rng: &mut R,
) -> Result<GrowthState, GrowthError> {
    params.validate()?;
    let mut b = Builder::from_state(state, state.len() + 1);
    step_builder(&mut b, params, rng)?;
    let mut next = b.finish();
    next.arrival = state.arrival.iter().copied().chain([state.len()]).collect();
    Ok(next)
}

/// `n` growth steps from the empty order.
pub fn grow<R: Rng + ?Sized>(params: &CsgParams, n: usize, rng: &mut R) -> Result<GrowthState, GrowthError> {
    params.validate()?;
    if n == 0 {
        return Err(GrowthError::InvalidParams("n must be at least 1".into()));
    }
    let mut b = Builder::new(n);
    for _ in 0..n {
        step_builder(&mut b, params, rng)?;
    }
    Ok(b.finish())
}

/// Random graph order: edges `i → j` (`i < j`) independently with probability
/// `p`, then transitive closure. Equal in law to transitive percolation.
pub fn random_graph_order<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<GrowthState, GrowthError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(GrowthError::InvalidP(p));
    }
    let words = words_for(n);
    let mut above = vec![0u64; n * words];
    for i in (0..n).rev() {
        let mut row = vec![0u64; words];
        for j in i + 1..n {
            // an edge to an element already above i changes nothing
            if row[j / 64] >> (j % 64) & 1 == 1 || !rng.random_bool(p) {
                continue;
            }
            row[j / 64] |= 1 << (j % 64);
            for (r, a) in row.iter_mut().zip(&above[j * words..(j + 1) * words]) {
                *r |= a;
            }
        }
        above[i * words..(i + 1) * words].copy_from_slice(&row);
    }
    let mut used = HashSet::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while labels.len() < n {
        let l: f64 = rng.random();
        if used.insert(l.to_bits()) {
            labels.push(l);
        }
    }
    Ok(GrowthState {
        labelled: LabelledPoset {
            poset: Poset::from_above_rows(n, above),
            labels,
        },
        arrival: (0..n).collect(),
    })
}

/// Random forest: the growth model with `t = (t0, t1, 0, ...)`.
pub fn random_forest<R: Rng + ?Sized>(n: usize, t0: f64, t1: f64, rng: &mut R) -> Result<GrowthState, GrowthError> {
    grow(&CsgParams::explicit(vec![t0, t1])?, n, rng)
}

/// How a random binary order picks the (up to) two elements below a newcomer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryPick {
    /// Two independent uniform picks; a repeat leaves one element.
    #[default]
    Independent,
    /// A uniform 2-subset (a single element when only one exists).
    Subset,
}

/// Random binary order: each newcomer is placed above the down-closure of
/// (up to) two uniformly chosen existing elements.
pub fn random_binary_order<R: Rng + ?Sized>(
    n: usize,
    pick: BinaryPick,
    rng: &mut R,
) -> Result<GrowthState, GrowthError> {
    if n == 0 {
        return Err(GrowthError::InvalidParams("n must be at least 1".into()));
    }
    let mut b = Builder::new(n);
    for m in 0..n {
        let chosen: Vec<usize> = match (m, pick) {
            (0, _) => Vec::new(),
            (_, BinaryPick::Independent) => vec![rng.random_range(0..m), rng.random_range(0..m)],
            (_, BinaryPick::Subset) => sample_indices(rng, m, m.min(2)).into_vec(),
        };
        let row = b.closure(chosen);
        b.push(&row, rng);
    }
    Ok(b.finish())
}

/// `2π e^{π²/6} p^{-1} e^{-π²/(3p)}`, the small-`p` asymptotic probability
/// that an element of a random graph order is a post.
pub fn post_probability_asymptotic(p: f64) -> f64 {
    let pi2 = std::f64::consts::PI.powi(2);
    2.0 * std::f64::consts::PI * (pi2 / 6.0).exp() / p * (-pi2 / (3.0 * p)).exp()
}

/// Elements of `p` with indices in `[n/4, 3n/4)` that are posts.
pub fn bulk_posts(p: &Poset) -> Vec<usize> {
    let n = p.len();
    p.find_posts()
        .into_iter()
        .filter(|&x| x >= n / 4 && x < 3 * n / 4)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostEstimate {
    pub frequency: f64,
    pub stderr: f64,
    pub replicas: usize,
    pub per_replica: Vec<f64>,
}

/// Fraction of bulk-window elements that are posts in random graph orders,
/// averaged over replicas. Replica streams are derived from one draw of `rng`.
pub fn post_frequency<R: Rng + ?Sized>(
    p: f64,
    n: usize,
    replicas: usize,
    rng: &mut R,
) -> Result<PostEstimate, GrowthError> {
    if n < 100 {
        return Err(GrowthError::InvalidParams(format!("n = {n}; at least 100 required")));
    }
    if replicas == 0 {
        return Err(GrowthError::InvalidParams("at least one replica required".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(GrowthError::InvalidP(p));
    }
    let seed: u64 = rng.random();
    let window = (3 * n / 4 - n / 4) as f64;
    let per_replica = run_replicas(seed, replicas, |r, _| {
        let g = random_graph_order(n, p, r).expect("validated p");
        bulk_posts(g.poset()).len() as f64 / window
    });
    let s = summarize(&per_replica);
    Ok(PostEstimate {
        frequency: s.mean,
        stderr: if replicas > 1 { s.stderr } else { f64::NAN },
        replicas,
        per_replica,
    })
}

/// Exact rational `p`, for tests that need percolation weights without rounding.
pub fn rational_p(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::{naturally_labelled_posets, IsoClassTable};
    use num_traits::{One, Zero};
    use rand::SeedableRng;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn params_validation_and_json() {
        assert!(CsgParams::explicit(vec![0.0, 1.0]).is_err());
        assert!(CsgParams::explicit(vec![1.0, -1.0]).is_err());
        assert_eq!(transitive_percolation_params(1.0), Err(GrowthError::InvalidP(1.0)));
        let p: CsgParams = serde_json::from_str(r#"{"kind":"transitive_percolation","p":0.3}"#).unwrap();
        assert_eq!(p, CsgParams::TransitivePercolation { p: 0.3 });
        let e: CsgParams = serde_json::from_str(r#"{"kind":"explicit","t":[1,2,1]}"#).unwrap();
        assert_eq!(e.t(5), 0.0);
        let c: CsgParams = serde_json::from_str(r#"{"kind":"closed_form","expr":"(t/log k)^k","t":3.0}"#).unwrap();
        assert_eq!(c.t(0), 1.0);
        assert!(close(c.t(2), (3.0 / (2.0 + std::f64::consts::E).ln()).powi(2), 1e-12));
        assert!(serde_json::from_str::<CsgParams>(r#"{"kind":"explicit","t":[0]}"#).is_err());
        assert!(serde_json::from_str::<CsgParams>(r#"{"kind":"closed_form","expr":"k!","t":3.0}"#).is_err());
        let back: CsgParams = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn percolation_weights() {
        let half = transitive_percolation_params(0.5).unwrap();
        assert!((0..10).all(|k| close(half.t(k), 1.0, 1e-15)));
        let third = transitive_percolation_params(1.0 / 3.0).unwrap();
        assert!((0..10).all(|k| close(third.t(k), 0.5f64.powi(k as i32), 1e-14)));
        let small = transitive_percolation_params(1e-4).unwrap();
        assert!(close(small.t(1) / small.t(0), 1e-4, 1e-7));
        let exact = CsgParams::TransitivePercolation { p: 0.25 }.weights::<BigRational>(3);
        assert_eq!(exact[3], rational_p(1, 27));
    }

    #[test]
    fn selection_probabilities() {
        let one = CsgParams::explicit(vec![1.0, 1.0]).unwrap();
        assert_eq!(select_set_probability(0, 0, &one).unwrap(), 1.0);
        assert!(close(select_set_probability(1, 0, &one).unwrap(), 0.5, 1e-15));
        assert!(close(select_set_probability(1, 1, &one).unwrap(), 0.5, 1e-15));
        let p = 0.3;
        let tp = transitive_percolation_params(p).unwrap();
        assert!(close(select_set_probability(2, 1, &tp).unwrap(), p * (1.0 - p), 1e-15));
        assert!(select_set_probability(1, 2, &one).is_err());
    }

    #[test]
    fn log_space_normalizer_survives_huge_weights() {
        let fast = CsgParams::closed_form(50.0).unwrap();
        let z = fast.ln_normalizer(3000);
        assert!(z.is_finite());
        let total: f64 = (0..=3000)
            .map(|k| (ln_binomial(3000, k) + fast.ln_t(k as usize) - z).exp())
            .sum();
        assert!(close(total, 1.0, 1e-9));
    }

    #[test]
    fn transition_examples() {
        let one = CsgParams::explicit(vec![1.0, 1.0]).unwrap();
        let t = TransitionSpec::new(Poset::antichain(1), vec![0]).unwrap();
        assert_eq!(t.c, vec![0]);
        assert!(close(transition_probability(&t, &one).unwrap(), 0.5, 1e-15));
        let params = CsgParams::explicit(vec![2.0, 1.0, 3.0]).unwrap();
        let iso = TransitionSpec::new(Poset::chain(3), vec![]).unwrap();
        let z: f64 = 2.0 + 3.0 * 1.0 + 3.0 * 3.0;
        assert!(close(transition_probability(&iso, &params).unwrap(), 2.0 / z, 1e-15));
        assert!(TransitionSpec::new(Poset::chain(3), vec![1]).is_err());
    }

    #[test]
    fn transition_probabilities_sum_to_one() {
        let params = [
            CsgParams::explicit(vec![1.0, 2.0, 1.0, 3.0]).unwrap(),
            transitive_percolation_params(0.37).unwrap(),
            CsgParams::closed_form(2.0).unwrap(),
            CsgParams::explicit(vec![0.5, 0.0, 4.0]).unwrap(),
        ];
        for m in 0..=5 {
            for q in naturally_labelled_posets(m).unwrap() {
                for params in &params {
                    let total: f64 = down_sets(&q)
                        .unwrap()
                        .into_iter()
                        .map(|b| transition_probability(&TransitionSpec::new(q.clone(), b).unwrap(), params).unwrap())
                        .sum();
                    assert!(close(total, 1.0, 1e-12), "{q:?} {total}");
                }
            }
        }
        // exactly one in rational arithmetic
        let exact_params = CsgParams::explicit(vec![1.0, 0.5, 2.0]).unwrap();
        for q in naturally_labelled_posets(4).unwrap() {
            let mut total = BigRational::zero();
            for b in down_sets(&q).unwrap() {
                total += transition_probability_exact::<BigRational>(
                    &TransitionSpec::new(q.clone(), b).unwrap(),
                    &exact_params,
                )
                .unwrap();
            }
            assert!(total.is_one());
        }
    }

    #[test]
    fn covariance_holds_and_perturbation_is_detected() {
        let params = CsgParams::explicit(vec![1.0, 2.0, 1.0, 3.0]).unwrap();
        assert_eq!(check_general_covariance(&Poset::chain(5), &params).unwrap(), 0.0);
        for n in 1..=4 {
            for q in naturally_labelled_posets(n).unwrap() {
                assert!(check_general_covariance(&q, &params).unwrap() < 1e-12);
                assert!(check_general_covariance_exact(&q, &params).unwrap().is_zero());
            }
        }
        let q = Poset::from_relations(3, &[(0, 2)]).unwrap();
        let eps = 0.01;
        let dev = check_general_covariance_with(&q, |m, b, c| {
            Ok(shape_probability(m, b, c, &params)? * (1.0 + eps * (m * c) as f64))
        })
        .unwrap();
        assert!(dev > 1e-3, "{dev}");
        assert_eq!(
            check_general_covariance(&Poset::from_relations(2, &[(1, 0)]).unwrap(), &params),
            Err(GrowthError::NotNaturallyLabelled)
        );
    }

    #[test]
    fn bell_causality_residuals_vanish() {
        let mut r = rng(3);
        let q = Poset::from_relations(4, &[(0, 2), (1, 2)]).unwrap();
        let tp = transitive_percolation_params(0.4).unwrap();
        assert_eq!(check_bell_causality(&q, &[0], &[0], &tp).unwrap(), 0.0);
        let generic = CsgParams::explicit(vec![1.0, 0.5, 2.0]).unwrap();
        for _ in 0..300 {
            let n = r.random_range(1..=6);
            let all = naturally_labelled_posets(n).unwrap();
            let q = &all[r.random_range(0..all.len())];
            let ds = down_sets(q).unwrap();
            let s1 = &ds[r.random_range(0..ds.len())];
            let s2 = &ds[r.random_range(0..ds.len())];
            for params in [&tp, &generic] {
                assert!(check_bell_causality(q, s1, s2, params).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn tp_likelihood_sums_to_one() {
        assert!(close(
            tp_labelled_probability(&Poset::chain(2), 0.3).unwrap(),
            0.3,
            1e-15
        ));
        assert!(close(
            tp_labelled_probability(&Poset::antichain(2), 0.3).unwrap(),
            0.7,
            1e-15
        ));
        for m in 1..=5 {
            let total: f64 = naturally_labelled_posets(m)
                .unwrap()
                .iter()
                .map(|q| tp_labelled_probability(q, 0.3).unwrap())
                .sum();
            assert!(close(total, 1.0, 1e-12), "m = {m}: {total}");
        }
    }

    #[test]
    fn growth_examples() {
        let mut r = rng(4);
        let single = grow(&CsgParams::explicit(vec![1.0]).unwrap(), 1, &mut r).unwrap();
        assert_eq!(single.len(), 1);
        let anti = grow(&CsgParams::explicit(vec![1.0]).unwrap(), 30, &mut r).unwrap();
        assert_eq!(anti.poset(), &Poset::antichain(30));
        let tp = grow(&transitive_percolation_params(0.2).unwrap(), 200, &mut r).unwrap();
        tp.validate().unwrap();
        let step = csg_step(&tp, &transitive_percolation_params(0.2).unwrap(), &mut r).unwrap();
        step.validate().unwrap();
        assert_eq!(step.poset().induced(&(0..200).collect::<Vec<_>>()), *tp.poset());
        assert!(step.poset().maximal().contains(&200));
    }

    #[test]
    fn percolation_marginal_selection_is_p() {
        // element 0 lies below the newcomer iff selected (it is minimal-only in an antichain)
        let p = 0.3;
        let params = transitive_percolation_params(p).unwrap();
        let mut r = rng(5);
        let base = grow(&CsgParams::explicit(vec![1.0]).unwrap(), 5, &mut r).unwrap();
        let trials = 40_000;
        let hits = (0..trials)
            .filter(|_| csg_step(&base, &params, &mut r).unwrap().poset().lt(0, 5))
            .count();
        let freq = hits as f64 / trials as f64;
        assert!(close(freq, p, 4.0 * (p * (1.0 - p) / trials as f64).sqrt()), "{freq}");
    }

    #[test]
    fn random_graph_order_limits_and_law() {
        let mut r = rng(6);
        assert_eq!(
            random_graph_order(20, 1.0 - 1e-12, &mut r).unwrap().poset(),
            &Poset::chain(20)
        );
        assert_eq!(
            random_graph_order(20, 1e-12, &mut r).unwrap().poset(),
            &Poset::antichain(20)
        );
        let g = random_graph_order(300, 0.05, &mut r).unwrap();
        g.validate().unwrap();
        // closure agrees with the generic constructor on the same sampled edges
        let table = IsoClassTable::new(4).unwrap();
        let reps = 20_000;
        let params = transitive_percolation_params(0.3).unwrap();
        let mut a = vec![0f64; table.class_count()];
        let mut b = vec![0f64; table.class_count()];
        for _ in 0..reps {
            a[table
                .classify_poset(random_graph_order(4, 0.3, &mut r).unwrap().poset())
                .unwrap()] += 1.0 / reps as f64;
            b[table.classify_poset(grow(&params, 4, &mut r).unwrap().poset()).unwrap()] += 1.0 / reps as f64;
        }
        assert!(crate::stats::total_variation(&a, &b) < 0.03);
    }

    #[test]
    fn forests_and_binary_orders_respect_cover_bounds() {
        let mut r = rng(7);
        for _ in 0..20 {
            let f = random_forest(60, 1.0, 1.0, &mut r).unwrap();
            f.validate().unwrap();
            let covers = f.poset().covering_pairs();
            assert!((0..60).all(|j| covers.iter().filter(|&&(_, y)| y == j).count() <= 1));
            for pick in [BinaryPick::Independent, BinaryPick::Subset] {
                let b = random_binary_order(60, pick, &mut r).unwrap();
                b.validate().unwrap();
                let covers = b.poset().covering_pairs();
                assert!((0..60).all(|j| covers.iter().filter(|&&(_, y)| y == j).count() <= 2));
            }
        }
        let trials = 20_000;
        let minimal = (0..trials)
            .filter(|_| random_forest(2, 1.0, 1.0, &mut r).unwrap().poset().down_count(1) == 0)
            .count() as f64
            / trials as f64;
        assert!(close(minimal, 0.5, 4.0 * (0.25 / trials as f64).sqrt()));
    }

    #[test]
    fn post_formula_and_bulk_window() {
        assert!(close(post_probability_asymptotic(0.5), 0.0904, 2e-4));
        let mut r = rng(8);
        let dense = post_frequency(0.9, 500, 4, &mut r).unwrap();
        assert!(dense.frequency > 0.3, "{dense:?}");
        let g = random_graph_order(400, 0.5, &mut r).unwrap();
        for x in bulk_posts(g.poset()) {
            assert!((0..400).all(|y| y == x || g.poset().comparable(x, y)));
        }
        assert!(post_frequency(0.5, 50, 1, &mut r).is_err());
    }

    #[test]
    fn selection_fraction_of_percolation_is_p() {
        let tp = transitive_percolation_params(0.2).unwrap();
        assert!((1..50).all(|m| close(tp.selection_fraction(m), 0.2, 1e-12)));
    }
}
