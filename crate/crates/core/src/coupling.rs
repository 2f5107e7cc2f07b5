//! Stein couplings and exchangeable pairs.
//!
//! A triple `(S, S', G)` is a Stein coupling when
//! `E[G f(S') - G f(S)] = E[(S - mu) f(S)]` for all admissible `f`. The
//! constructions shipped here are:
//!
//! - the local-dependence coupling `(S, S - sum_{j in A_I}(X_j - mu_j), -n (X_I - mu_I))`
//!   for a uniform index `I`,
//! - size-bias couplings `(S, S^s, mu)` where `S^s` follows the size-biased
//!   law `P(S^s = k) = k P(S = k) / mu`,
//! - coordinate-resampling exchangeable pairs for functions of independent
//!   inputs, and the Mineka coupling for integer marginals.
//!
//! Displacements are tracked exactly: a draw stores the integer content of
//! `S'` plus the real mean offset separately, so `D = S' - S` never loses
//! integer information to float subtraction (`G` may be any real).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::estimators::EstimateWithError;
use crate::numeric::{mean_and_se, pairwise_sum, pairwise_sum_by};
use crate::pmf::IntegerPmf;
use crate::rng::Stream;
use crate::{Error, Result};

/// Realization of the conditioning information `F` of a coupling draw.
///
/// Keys compare, hash, and serialize canonically (collections are sorted at
/// construction), so conditional binning is stable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextKey {
    /// Trivial conditioning.
    Unit,
    /// A bare integer label.
    Scalar(i64),
    /// Chosen index plus the input values on its neighborhood window.
    IndexWindow { index: u32, values: Vec<i64> },
    /// Erdos-Renyi size-bias record: vertex, first/second neighborhoods,
    /// edges incident to the first neighborhood, and the surgered edge
    /// indicators at the chosen vertex.
    ErRecord {
        vertex: u32,
        a_set: Vec<u32>,
        b_set: Vec<u32>,
        edges: Vec<(u32, u32, bool)>,
        surgered: Vec<(u32, bool)>,
    },
    /// Occupancy size-bias record: urn, its count, the relocation vector's
    /// nonzero entries, and the counts of the touched urns.
    OccupancyRecord {
        urn: u32,
        count: u32,
        relocated: Vec<(u32, u32)>,
        touched: Vec<(u32, u32)>,
    },
}

/// One realization `(s, s', g, context)` of a Stein coupling.
///
/// `s_prime_int` carries the integer content of `S'`; the exact real part
/// is `d_offset`, so `D = (s_prime_int - s) + d_offset`. Integer-valued
/// couplings (size bias) have `d_offset = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingDraw {
    pub s: i64,
    #[serde(rename = "sp")]
    pub s_prime_int: i64,
    pub g: f64,
    #[serde(rename = "doff", default, skip_serializing_if = "is_zero")]
    pub d_offset: f64,
    #[serde(rename = "ctx")]
    pub context: ContextKey,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl CouplingDraw {
    /// `D = S' - S`, exact.
    pub fn displacement(&self) -> f64 {
        (self.s_prime_int - self.s) as f64 + self.d_offset
    }

    pub fn s_prime(&self) -> f64 {
        self.s as f64 + self.displacement()
    }

    /// One JSON line of the columnar draw-batch format.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("draw serialization cannot fail")
    }
}

/// One realization of an exchangeable pair `(V, V')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExchangeablePairDraw {
    pub v: i64,
    pub v_prime: i64,
}

// ---------------------------------------------------------------------------
// Mineka coupling
// ---------------------------------------------------------------------------

/// Precomputed Mineka coupling for one integer marginal.
///
/// With `alpha_j = min(p_j, p_{j+1}) / 2`, the joint law puts
/// `P(X = j-1, X' = j) = P(X = j, X' = j-1) = alpha_{j-1}` and keeps the
/// rest on the diagonal; both coordinates are marginally the input law,
/// `|X - X'| <= 1`, and `P(X - X' = 1) = sum_j alpha_j = (1 - shiftTV)/2`.
#[derive(Debug, Clone)]
pub struct MinekaCoupling {
    marginal: IntegerPmf<f64>,
    // alpha[i] couples support point i with i+1
    alpha: Vec<f64>,
}

impl MinekaCoupling {
    pub fn new(marginal: &IntegerPmf<f64>) -> Self {
        let probs = marginal.probs();
        let alpha = (0..probs.len().saturating_sub(1))
            .map(|i| probs[i].min(probs[i + 1]) / 2.0)
            .collect();
        MinekaCoupling { marginal: marginal.clone(), alpha }
    }

    /// `P(X - X' = 1)`, exactly `(1 - shiftTV(marginal)) / 2`.
    pub fn unit_step_probability(&self) -> f64 {
        pairwise_sum(&self.alpha)
    }

    pub fn draw(&self, stream: &mut Stream) -> (i64, i64) {
        let x = self.marginal.sample(stream);
        let idx = (x - self.marginal.offset()) as usize;
        let px = self.marginal.get(x);
        let down = if idx > 0 { self.alpha[idx - 1] } else { 0.0 };
        let up = self.alpha.get(idx).copied().unwrap_or(0.0);
        let u = stream.uniform() * px;
        let x_prime = if u < down {
            x - 1
        } else if u < down + up {
            x + 1
        } else {
            x
        };
        (x, x_prime)
    }
}

/// Draw one Mineka-coupled pair with both coordinates distributed as
/// `marginal` and `|x - x'| <= 1`.
pub fn mineka_pair(marginal: &IntegerPmf<f64>, stream: &mut Stream) -> (i64, i64) {
    MinekaCoupling::new(marginal).draw(stream)
}

// ---------------------------------------------------------------------------
// Coordinate resampling
// ---------------------------------------------------------------------------

/// Exchangeable pair for `V = f(X_1, ..., X_n)` with independent inputs:
/// a uniform coordinate is redrawn from its own law (ties are kept —
/// rejecting them would break exchangeability).
pub fn coordinate_resample_pair(
    eval: impl Fn(&[i64]) -> i64,
    input_laws: &[IntegerPmf<f64>],
    stream: &mut Stream,
) -> ExchangeablePairDraw {
    assert!(!input_laws.is_empty(), "need at least one input");
    let mut xs: Vec<i64> = input_laws.iter().map(|law| law.sample(stream)).collect();
    let v = eval(&xs);
    let i = stream.index(xs.len());
    xs[i] = input_laws[i].sample(stream);
    let v_prime = eval(&xs);
    ExchangeablePairDraw { v, v_prime }
}

// ---------------------------------------------------------------------------
// Local dependence
// ---------------------------------------------------------------------------

/// A sum `S = sum X_i` of integer terms where `X_i` is independent of the
/// terms outside its neighborhood `A_i` (which must contain `i`).
pub trait LocalDependenceModel {
    /// Underlying randomness for one realization.
    type Inputs;

    fn num_terms(&self) -> usize;
    fn draw_inputs(&self, stream: &mut Stream) -> Self::Inputs;
    /// Full weighted enumeration of the input space, if feasible.
    fn enumerate_inputs(&self) -> Option<Vec<(f64, Self::Inputs)>>;
    fn term(&self, inputs: &Self::Inputs, i: usize) -> i64;
    fn term_mean(&self, i: usize) -> f64;
    fn neighborhood(&self, i: usize) -> Vec<usize>;
    fn context(&self, inputs: &Self::Inputs, i: usize) -> ContextKey;
}

fn local_dep_draw_at<M: LocalDependenceModel>(
    model: &M,
    inputs: &M::Inputs,
    i: usize,
) -> Result<CouplingDraw> {
    let n = model.num_terms();
    let hood = model.neighborhood(i);
    if !hood.contains(&i) {
        return Err(Error::InvalidParam(format!(
            "neighborhood A_{i} must contain {i}"
        )));
    }
    let s: i64 = (0..n).map(|j| model.term(inputs, j)).sum();
    let hood_sum: i64 = hood.iter().map(|&j| model.term(inputs, j)).sum();
    let hood_mean: f64 = pairwise_sum_by(&hood, |&j| model.term_mean(j));
    let g = -(n as f64) * (model.term(inputs, i) as f64 - model.term_mean(i));
    Ok(CouplingDraw {
        s,
        s_prime_int: s - hood_sum,
        g,
        d_offset: hood_mean,
        context: model.context(inputs, i),
    })
}

/// One draw of the local-dependence Stein coupling
/// `(S, S - sum_{A_I}(X_j - mu_j), -n (X_I - mu_I))`, `I` uniform.
pub fn local_dep_coupling_draw<M: LocalDependenceModel>(
    model: &M,
    stream: &mut Stream,
) -> Result<CouplingDraw> {
    let inputs = model.draw_inputs(stream);
    let i = stream.index(model.num_terms());
    local_dep_draw_at(model, &inputs, i)
}

/// Exhaustive weighted enumeration of the local-dependence coupling over
/// all inputs and all index choices.
pub fn local_dep_exhaustive<M: LocalDependenceModel>(model: &M) -> Result<Vec<(f64, CouplingDraw)>> {
    let inputs = model
        .enumerate_inputs()
        .ok_or_else(|| Error::DpBudgetExceeded("input space not enumerable".to_string()))?;
    let n = model.num_terms();
    let mut out = Vec::with_capacity(inputs.len() * n);
    for (w, x) in &inputs {
        for i in 0..n {
            out.push((w / n as f64, local_dep_draw_at(model, x, i)?));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Size bias
// ---------------------------------------------------------------------------

/// One realization of a size-bias construction.
#[derive(Debug, Clone)]
pub struct SizeBiasDraw {
    pub s: i64,
    pub s_biased: i64,
    pub context: ContextKey,
}

/// A model with a joint construction of `(S, S^s)` on one probability
/// space, `S^s` size-biased.
pub trait SizeBiasModel {
    /// Exact mean of `S` (this is the coupling's `G`).
    fn mean(&self) -> f64;
    fn draw(&self, stream: &mut Stream) -> SizeBiasDraw;
    /// Full weighted enumeration of the construction, if feasible.
    fn enumerate(&self) -> Option<Vec<(f64, SizeBiasDraw)>>;
}

fn size_bias_to_coupling(mu: f64, d: SizeBiasDraw) -> CouplingDraw {
    CouplingDraw {
        s: d.s,
        s_prime_int: d.s_biased,
        g: mu,
        d_offset: 0.0,
        context: d.context,
    }
}

/// One draw of the size-bias Stein coupling `(S, S^s, mu)`.
pub fn size_bias_coupling_draw<M: SizeBiasModel>(
    model: &M,
    stream: &mut Stream,
) -> Result<CouplingDraw> {
    let mu = model.mean();
    if !(mu > 0.0) {
        return Err(Error::ZeroMean);
    }
    Ok(size_bias_to_coupling(mu, model.draw(stream)))
}

/// Exhaustive weighted enumeration of the size-bias coupling.
pub fn size_bias_exhaustive<M: SizeBiasModel>(model: &M) -> Result<Vec<(f64, CouplingDraw)>> {
    let mu = model.mean();
    if !(mu > 0.0) {
        return Err(Error::ZeroMean);
    }
    let draws = model
        .enumerate()
        .ok_or_else(|| Error::DpBudgetExceeded("construction not enumerable".to_string()))?;
    Ok(draws
        .into_iter()
        .map(|(w, d)| (w, size_bias_to_coupling(mu, d)))
        .collect())
}

// ---------------------------------------------------------------------------
// Stein identity residual
// ---------------------------------------------------------------------------

/// Monte-Carlo estimate of the coupling residual
/// `E[G f(S') - G f(S)] - E[(S - mu) f(S)]`, which is 0 for a valid Stein
/// coupling and admissible `f`.
pub fn stein_identity_residual(
    draws: &[CouplingDraw],
    f: impl Fn(f64) -> f64,
    mu: f64,
) -> Result<EstimateWithError> {
    if draws.len() < 2 {
        return Err(Error::EmptyInput("need at least 2 draws for a residual estimate"));
    }
    let xs: Vec<f64> = draws
        .iter()
        .map(|d| residual_term(d, &f, mu))
        .collect();
    let (value, se) = mean_and_se(&xs);
    Ok(EstimateWithError { value, std_error: se, n_samples: draws.len() as u64, exact: false })
}

/// Exact residual over an exhaustive weighted enumeration.
pub fn stein_identity_residual_weighted(
    draws: &[(f64, CouplingDraw)],
    f: impl Fn(f64) -> f64,
    mu: f64,
) -> Result<EstimateWithError> {
    if draws.is_empty() {
        return Err(Error::EmptyInput("no draws"));
    }
    let value = pairwise_sum_by(draws, |(w, d)| w * residual_term(d, &f, mu));
    Ok(EstimateWithError::exact(value, draws.len() as u64))
}

fn residual_term(d: &CouplingDraw, f: &impl Fn(f64) -> f64, mu: f64) -> f64 {
    d.g * (f(d.s_prime()) - f(d.s as f64)) - (d.s as f64 - mu) * f(d.s as f64)
}

/// The test functions every shipped coupling is checked against:
/// constant, identity, square, and a capped identity.
pub fn residual_test_functions(cap: i64) -> Vec<(String, Box<dyn Fn(f64) -> f64 + Sync>)> {
    let capf = cap as f64;
    vec![
        ("1".to_string(), Box::new(|_s| 1.0) as Box<dyn Fn(f64) -> f64 + Sync>),
        ("s".to_string(), Box::new(|s| s)),
        ("s^2".to_string(), Box::new(|s| s * s)),
        (format!("min(s,{cap})"), Box::new(move |s| s.min(capf))),
    ]
}

/// Empirical exchangeability check: compares the joint frequencies of
/// `(v, v')` and `(v', v)` event by event; the worst standardized
/// discrepancy should stay within a few MC standard errors.
pub fn exchangeability_max_z(pairs: &[ExchangeablePairDraw]) -> f64 {
    let mut counts: BTreeMap<(i64, i64), (u64, u64)> = BTreeMap::new();
    for p in pairs {
        if p.v == p.v_prime {
            continue;
        }
        let key = (p.v.min(p.v_prime), p.v.max(p.v_prime));
        let e = counts.entry(key).or_insert((0, 0));
        if p.v < p.v_prime {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    let mut worst = 0.0f64;
    for (_, (a, b)) in counts {
        let (a, b) = (a as f64, b as f64);
        // Under exchangeability the count difference has variance ~ a + b.
        let z = (a - b).abs() / (a + b).sqrt();
        worst = worst.max(z);
    }
    worst
}

/// Verify that the empirical law of the size-biased coordinate matches
/// `k p(k) / mu` computed from an exact pmf. Returns the TV distance.
pub fn size_biased_law(exact: &IntegerPmf<f64>) -> Result<IntegerPmf<f64>> {
    let mu = exact.mean();
    if !(mu > 0.0) {
        return Err(Error::ZeroMean);
    }
    let probs: Vec<f64> = exact
        .support()
        .map(|(z, p)| z as f64 * p / mu)
        .collect();
    IntegerPmf::new(exact.offset(), probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::{binomial_pmf, shift_tv_exact};
    use crate::rng::{domain, Stream};

    fn uniform3() -> IntegerPmf<f64> {
        IntegerPmf::new(0, vec![1.0 / 3.0; 3]).unwrap()
    }

    #[test]
    fn mineka_point_mass_never_moves() {
        let point = IntegerPmf::point_mass(5);
        let c = MinekaCoupling::new(&point);
        assert_eq!(c.unit_step_probability(), 0.0);
        let mut s = Stream::new(1, domain::PAIR, 0);
        for _ in 0..100 {
            let (x, xp) = c.draw(&mut s);
            assert_eq!((x, xp), (5, 5));
        }
    }

    #[test]
    fn mineka_unit_step_identity() {
        // Bernoulli(1/2): sum of alphas = (1 - 1/2)/2 = 1/4.
        let bern = IntegerPmf::new(0, vec![0.5, 0.5]).unwrap();
        let c = MinekaCoupling::new(&bern);
        assert!((c.unit_step_probability() - 0.25).abs() < 1e-15);
        // uniform{0,1,2}: (1 - 1/3)/2 = 1/3
        let c = MinekaCoupling::new(&uniform3());
        assert!((c.unit_step_probability() - 1.0 / 3.0).abs() < 1e-15);
        // Matches the shift-TV identity on an asymmetric law too.
        let p = IntegerPmf::new(0, vec![0.2, 0.5, 0.3]).unwrap();
        let c = MinekaCoupling::new(&p);
        assert!(
            (c.unit_step_probability() - (1.0 - shift_tv_exact(&p)) / 2.0).abs() < 1e-15
        );
    }

    #[test]
    fn mineka_marginals_and_steps() {
        let marginal = uniform3();
        let c = MinekaCoupling::new(&marginal);
        let n = 1_000_000usize;
        let mut count_x = [0u64; 3];
        let mut count_xp = [0u64; 3];
        let mut ups = 0u64;
        for i in 0..n {
            let mut s = Stream::new(77, domain::PAIR, i as u64);
            let (x, xp) = c.draw(&mut s);
            assert!((x - xp).abs() <= 1);
            count_x[x as usize] += 1;
            count_xp[xp as usize] += 1;
            if x - xp == 1 {
                ups += 1;
            }
        }
        let se = ((1.0 / 3.0) * (2.0 / 3.0) / n as f64).sqrt();
        for k in 0..3 {
            assert!((count_x[k] as f64 / n as f64 - 1.0 / 3.0).abs() < 4.0 * se);
            assert!((count_xp[k] as f64 / n as f64 - 1.0 / 3.0).abs() < 4.0 * se);
        }
        assert!((ups as f64 / n as f64 - 1.0 / 3.0).abs() < 4.0 * se);
    }

    #[test]
    fn coordinate_resample_constant_and_sum() {
        let bern = binomial_pmf(1, 0.4f64).unwrap();
        let laws = vec![bern; 6];
        for i in 0..500u64 {
            let mut s = Stream::new(5, domain::PAIR, i);
            let pair = coordinate_resample_pair(|x| x.iter().sum(), &laws, &mut s);
            assert!((pair.v - pair.v_prime).abs() <= 1);
            let mut s2 = Stream::new(5, domain::PAIR, i);
            let c = coordinate_resample_pair(|_| 7, &laws, &mut s2);
            assert_eq!(c.v, c.v_prime);
        }
    }

    #[test]
    fn context_keys_order_and_serialize() {
        let a = ContextKey::IndexWindow { index: 1, values: vec![0, 1, 1, 0] };
        let b = ContextKey::IndexWindow { index: 2, values: vec![0, 0, 0, 0] };
        assert!(a < b);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, r#"{"index_window":{"index":1,"values":[0,1,1,0]}}"#);
    }

    #[test]
    fn draw_serialization_format() {
        let d = CouplingDraw {
            s: 3,
            s_prime_int: 2,
            g: 1.5,
            d_offset: 0.0,
            context: ContextKey::Scalar(4),
        };
        assert_eq!(d.to_json_line(), r#"{"s":3,"sp":2,"g":1.5,"ctx":{"scalar":4}}"#);
        let with_offset = CouplingDraw { d_offset: 0.75, ..d };
        assert!(with_offset.to_json_line().contains(r#""doff":0.75"#));
        assert!((with_offset.displacement() - (-0.25)).abs() < 1e-15);
    }

    #[test]
    fn residual_of_constant_f_is_zero_pointwise() {
        let draws: Vec<CouplingDraw> = (0..100)
            .map(|i| CouplingDraw {
                s: i % 5,
                s_prime_int: (i + 1) % 5,
                g: 2.0,
                d_offset: 0.25,
                context: ContextKey::Unit,
            })
            .collect();
        // f constant: G(f(S') - f(S)) = 0 and E(S - mu) f(S) uses the true mean.
        let mu = draws.iter().map(|d| d.s as f64).sum::<f64>() / draws.len() as f64;
        let weighted: Vec<(f64, CouplingDraw)> = draws
            .iter()
            .map(|d| (1.0 / draws.len() as f64, d.clone()))
            .collect();
        let r = stein_identity_residual_weighted(&weighted, |_| 1.0, mu).unwrap();
        assert!(r.value.abs() < 1e-14);
        assert!(r.exact);
    }
}
