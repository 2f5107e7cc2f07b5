//! Exact and Monte-Carlo estimators for bound ingredients.
//!
//! Conditioning on `S` is exact integer binning (no smoothing); the
//! plug-in bias of the between-bin variance is accepted, documented, and
//! clamped at zero. Standard errors come from a nonparametric bootstrap
//! with streams derived from the master seed, so estimates are
//! reproducible bit for bit for a fixed `(seed, N)` regardless of worker
//! count.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::coupling::{ContextKey, CouplingDraw, ExchangeablePairDraw};
use crate::numeric::{mean_and_se, pairwise_sum, pairwise_sum_by};
use crate::pmf::{tv, IntegerPmf};
use crate::rng::{domain, Stream};
use crate::{Error, Result};

/// Point estimate with its standard error and provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    #[serde(rename = "se")]
    pub std_error: f64,
    #[serde(rename = "n")]
    pub n_samples: u64,
    pub exact: bool,
}

impl EstimateWithError {
    pub fn exact(value: f64, n_samples: u64) -> Self {
        EstimateWithError { value, std_error: 0.0, n_samples, exact: true }
    }

    pub fn from_samples(xs: &[f64]) -> Self {
        let (value, std_error) = mean_and_se(xs);
        EstimateWithError { value, std_error, n_samples: xs.len() as u64, exact: false }
    }

    /// Linear map `c * x` (delta method: SE scales by `|c|`).
    pub fn scaled(self, c: f64) -> Self {
        EstimateWithError {
            value: c * self.value,
            std_error: c.abs() * self.std_error,
            ..self
        }
    }

    /// `sqrt(x)` with first-order delta-method SE `se / (2 sqrt(x))`.
    /// At a zero value the derivative is unbounded; the SE is then passed
    /// through the square root as a scale-matching fallback and the term
    /// should be flagged unstable by the caller.
    pub fn sqrt_delta(self) -> Self {
        let v = self.value.max(0.0);
        let root = v.sqrt();
        let se = if self.exact || self.std_error == 0.0 {
            0.0
        } else if root > 0.0 {
            self.std_error / (2.0 * root)
        } else {
            self.std_error.sqrt()
        };
        EstimateWithError { value: root, std_error: se, ..self }
    }
}

/// Bootstrap configuration; resample streams are keyed by
/// `(seed, BOOTSTRAP domain, resample index)`.
#[derive(Debug, Clone, Copy)]
pub struct BootstrapCfg {
    pub resamples: u32,
    pub seed: u64,
}

impl BootstrapCfg {
    pub fn new(seed: u64) -> Self {
        BootstrapCfg { resamples: 200, seed }
    }
}

/// Standard deviation of `statistic` over multinomial resamples of
/// `0..n`. The scratch index buffer is reused across replicates.
fn bootstrap_se(n: usize, cfg: &BootstrapCfg, statistic: impl Fn(&[usize]) -> f64) -> f64 {
    if cfg.resamples < 2 || n < 2 {
        return 0.0;
    }
    let mut values = Vec::with_capacity(cfg.resamples as usize);
    let mut idx = vec![0usize; n];
    for r in 0..cfg.resamples {
        let mut stream = Stream::new(cfg.seed, domain::BOOTSTRAP, r as u64);
        for slot in idx.iter_mut() {
            *slot = stream.index(n);
        }
        values.push(statistic(&idx));
    }
    let (_, se_of_mean) = mean_and_se(&values);
    // mean_and_se returns sd/sqrt(R); the bootstrap SE is the sd itself.
    se_of_mean * (values.len() as f64).sqrt()
}

// ---------------------------------------------------------------------------
// Conditional variance by exact integer binning
// ---------------------------------------------------------------------------

/// Compact re-labeling of integer bin keys for fast resampling.
struct Binned {
    labels: Vec<u32>,
    n_bins: usize,
}

fn bin_keys(keys: &[i64]) -> Binned {
    let mut seen: BTreeMap<i64, u32> = BTreeMap::new();
    for &k in keys {
        let next = seen.len() as u32;
        seen.entry(k).or_insert(next);
    }
    Binned {
        labels: keys.iter().map(|k| seen[k]).collect(),
        n_bins: seen.len(),
    }
}

/// Plug-in `Var(E(Y|S))` on re-labeled bins for a subset of rows.
fn between_bin_variance(labels: &[u32], ys: &[f64], n_bins: usize, rows: &[usize]) -> f64 {
    let mut count = vec![0u64; n_bins];
    let mut sum = vec![0.0f64; n_bins];
    for &r in rows {
        let b = labels[r] as usize;
        count[b] += 1;
        sum[b] += ys[r];
    }
    let n = rows.len() as f64;
    let grand = pairwise_sum(&sum) / n;
    let mut acc = 0.0;
    for b in 0..n_bins {
        if count[b] == 0 {
            continue;
        }
        let mean_b = sum[b] / count[b] as f64;
        let dev = mean_b - grand;
        acc += (count[b] as f64 / n) * dev * dev;
    }
    acc.max(0.0)
}

/// Plug-in estimate of `Var(E(Y|S))` with exact integer binning on `S`
/// and a bootstrap standard error.
pub fn conditional_variance_by_binning(
    pairs: &[(i64, f64)],
    cfg: &BootstrapCfg,
) -> Result<EstimateWithError> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("conditional variance needs samples"));
    }
    let keys: Vec<i64> = pairs.iter().map(|&(s, _)| s).collect();
    let ys: Vec<f64> = pairs.iter().map(|&(_, y)| y).collect();
    let binned = bin_keys(&keys);
    let all: Vec<usize> = (0..pairs.len()).collect();
    let value = between_bin_variance(&binned.labels, &ys, binned.n_bins, &all);
    let se = bootstrap_se(pairs.len(), cfg, |rows| {
        between_bin_variance(&binned.labels, &ys, binned.n_bins, rows)
    });
    Ok(EstimateWithError { value, std_error: se, n_samples: pairs.len() as u64, exact: false })
}

/// Exact `Var(E(Y|S))` over a weighted enumeration `(w, s, y)`.
pub fn conditional_variance_weighted(triples: &[(f64, i64, f64)]) -> Result<f64> {
    if triples.is_empty() {
        return Err(Error::EmptyInput("conditional variance needs mass points"));
    }
    let mut bins: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for &(w, s, y) in triples {
        let e = bins.entry(s).or_insert((0.0, 0.0));
        e.0 += w;
        e.1 += w * y;
    }
    let w_total: f64 = bins.values().map(|&(w, _)| w).sum();
    let grand: f64 = bins.values().map(|&(_, wy)| wy).sum::<f64>() / w_total;
    let mut acc = 0.0;
    for &(w, wy) in bins.values() {
        if w == 0.0 {
            continue;
        }
        let dev = wy / w - grand;
        acc += (w / w_total) * dev * dev;
    }
    Ok(acc.max(0.0))
}

// ---------------------------------------------------------------------------
// Shift-TV bound from an exchangeable pair
// ---------------------------------------------------------------------------

fn rollin_ross_point(
    labels: &[u32],
    ups: &[f64],
    downs: &[f64],
    n_bins: usize,
    rows: &[usize],
) -> Result<f64> {
    let p_up = rows.iter().map(|&r| ups[r]).sum::<f64>() / rows.len() as f64;
    if p_up <= 0.0 {
        return Err(Error::NoUnitSteps);
    }
    let var_up = between_bin_variance(labels, ups, n_bins, rows);
    let var_down = between_bin_variance(labels, downs, n_bins, rows);
    Ok((var_up.sqrt() + var_down.sqrt()) / p_up)
}

/// Plug-in evaluation of the exchangeable-pair smoothing bound
///
/// `d_TV(L(V), L(V+1)) <= [sqrt(Var E(1{V-V'=1}|V)) + sqrt(Var E(1{V-V'=-1}|V))] / P(V-V'=1)`
///
/// with binned conditional variances and a bootstrap SE.
pub fn rollin_ross_bound(
    pairs: &[ExchangeablePairDraw],
    cfg: &BootstrapCfg,
) -> Result<EstimateWithError> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("smoothing bound needs pair draws"));
    }
    let keys: Vec<i64> = pairs.iter().map(|p| p.v).collect();
    let ups: Vec<f64> = pairs.iter().map(|p| f64::from(p.v - p.v_prime == 1)).collect();
    let downs: Vec<f64> = pairs.iter().map(|p| f64::from(p.v - p.v_prime == -1)).collect();
    let binned = bin_keys(&keys);
    let all: Vec<usize> = (0..pairs.len()).collect();
    let value = rollin_ross_point(&binned.labels, &ups, &downs, binned.n_bins, &all)?;
    let se = bootstrap_se(pairs.len(), cfg, |rows| {
        rollin_ross_point(&binned.labels, &ups, &downs, binned.n_bins, rows).unwrap_or(f64::NAN)
    });
    Ok(EstimateWithError { value, std_error: se, n_samples: pairs.len() as u64, exact: false })
}

// ---------------------------------------------------------------------------
// Coupling moments
// ---------------------------------------------------------------------------

/// Absolute displacement moments `E|D|^k` for `k in {1,2,3,4,6}`.
#[derive(Debug, Clone, Copy)]
pub struct DisplacementMoments {
    pub k1: EstimateWithError,
    pub k2: EstimateWithError,
    pub k3: EstimateWithError,
    pub k4: EstimateWithError,
    pub k6: EstimateWithError,
}

/// Moment estimates of a coupling draw batch.
#[derive(Debug, Clone, Copy)]
pub struct CouplingMoments {
    pub e_abs_gd: EstimateWithError,
    pub e_abs_gd2: EstimateWithError,
    pub e_g2d4: EstimateWithError,
    pub abs_d: DisplacementMoments,
}

fn moment_rows(d: &CouplingDraw) -> [f64; 8] {
    let disp = d.displacement();
    let gd = d.g * disp;
    let a = disp.abs();
    [
        gd.abs(),
        (gd * disp).abs(),
        gd * gd * disp * disp,
        a,
        a * a,
        a * a * a,
        a * a * a * a,
        a.powi(6),
    ]
}

/// Sample means (with SEs) of `|GD|`, `|GD^2|`, `G^2 D^4` and `|D|^k`.
pub fn moment_estimates(draws: &[CouplingDraw]) -> Result<CouplingMoments> {
    if draws.is_empty() {
        return Err(Error::EmptyInput("moment estimates need draws"));
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(draws.len()); 8];
    for d in draws {
        for (c, v) in cols.iter_mut().zip(moment_rows(d)) {
            c.push(v);
        }
    }
    let e = |i: usize| EstimateWithError::from_samples(&cols[i]);
    Ok(CouplingMoments {
        e_abs_gd: e(0),
        e_abs_gd2: e(1),
        e_g2d4: e(2),
        abs_d: DisplacementMoments { k1: e(3), k2: e(4), k3: e(5), k4: e(6), k6: e(7) },
    })
}

/// Exact moments over a weighted enumeration.
pub fn moment_estimates_weighted(draws: &[(f64, CouplingDraw)]) -> Result<CouplingMoments> {
    if draws.is_empty() {
        return Err(Error::EmptyInput("moment estimates need draws"));
    }
    let n = draws.len() as u64;
    let col = |i: usize| {
        let total = pairwise_sum_by(draws, |(w, d)| w * moment_rows(d)[i]);
        EstimateWithError::exact(total, n)
    };
    Ok(CouplingMoments {
        e_abs_gd: col(0),
        e_abs_gd2: col(1),
        e_g2d4: col(2),
        abs_d: DisplacementMoments { k1: col(3), k2: col(4), k3: col(5), k4: col(6), k6: col(7) },
    })
}

// ---------------------------------------------------------------------------
// Empirical pmf and TV with confidence interval
// ---------------------------------------------------------------------------

/// Canonical frequency pmf of an integer sample.
pub fn empirical_pmf(samples: &[i64]) -> Result<IntegerPmf<f64>> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("empirical pmf needs samples"));
    }
    let lo = *samples.iter().min().unwrap();
    let hi = *samples.iter().max().unwrap();
    let mut counts = vec![0u64; (hi - lo + 1) as usize];
    for &s in samples {
        counts[(s - lo) as usize] += 1;
    }
    let n = samples.len() as f64;
    IntegerPmf::new(lo, counts.iter().map(|&c| c as f64 / n).collect())
}

/// Plug-in TV between the empirical law of `samples` and `reference`,
/// with bootstrap SE.
///
/// The plug-in TV is upward-biased at small `N` (on the order of
/// `sum_z sqrt(p(z)(1-p(z)) / (2 pi N))`); prefer exact pmfs when a model
/// provides them and treat this as the Monte-Carlo fallback.
pub fn tv_with_ci(
    samples: &[i64],
    reference: &IntegerPmf<f64>,
    cfg: &BootstrapCfg,
) -> Result<EstimateWithError> {
    if samples.is_empty() {
        return Err(Error::EmptyInput("tv estimate needs samples"));
    }
    let emp = empirical_pmf(samples)?;
    let value = tv(&emp, reference);
    let se = bootstrap_se(samples.len(), cfg, |rows| {
        let resampled: Vec<i64> = rows.iter().map(|&r| samples[r]).collect();
        tv(&empirical_pmf(&resampled).expect("nonempty"), reference)
    });
    Ok(EstimateWithError { value, std_error: se, n_samples: samples.len() as u64, exact: false })
}

// ---------------------------------------------------------------------------
// Conditional shift-TV term
// ---------------------------------------------------------------------------

/// Which polynomial of the draw multiplies the conditional shift-TV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftWeight {
    /// `|GD^2| + |GD|` (main coupling bound).
    GdTheorem,
    /// `|D|^3 + D^2` (exchangeable-pair corollary).
    PairCubic,
    /// `D^2 + |D|` (size-bias corollary).
    SizeBiasQuad,
}

impl ShiftWeight {
    pub fn apply(self, g: f64, d: f64) -> f64 {
        let ad = d.abs();
        match self {
            ShiftWeight::GdTheorem => (g * d * d).abs() + (g * d).abs(),
            ShiftWeight::PairCubic => ad * ad * ad + d * d,
            ShiftWeight::SizeBiasQuad => d * d + ad,
        }
    }
}

/// Sample mean of `weight(G, D) * shiftTV(context)` with its SE.
///
/// The evaluator is called once per distinct context (draws are grouped by
/// `ContextKey`); failures propagate.
pub fn conditional_shift_term(
    draws: &[CouplingDraw],
    weight: ShiftWeight,
    shift_tv_of_context: impl Fn(&ContextKey) -> Result<f64>,
) -> Result<EstimateWithError> {
    if draws.is_empty() {
        return Err(Error::EmptyInput("conditional shift term needs draws"));
    }
    let mut memo: HashMap<&ContextKey, f64> = HashMap::new();
    let mut xs = Vec::with_capacity(draws.len());
    for d in draws {
        let stv = match memo.get(&d.context) {
            Some(&v) => v,
            None => {
                let v = checked_stv(&shift_tv_of_context, &d.context)?;
                memo.insert(&d.context, v);
                v
            }
        };
        xs.push(weight.apply(d.g, d.displacement()) * stv);
    }
    let (value, se) = mean_and_se(&xs);
    Ok(EstimateWithError { value, std_error: se, n_samples: draws.len() as u64, exact: false })
}

/// Exact conditional shift term over a weighted enumeration.
pub fn conditional_shift_term_weighted(
    draws: &[(f64, CouplingDraw)],
    weight: ShiftWeight,
    shift_tv_of_context: impl Fn(&ContextKey) -> Result<f64>,
) -> Result<EstimateWithError> {
    if draws.is_empty() {
        return Err(Error::EmptyInput("conditional shift term needs draws"));
    }
    let mut memo: HashMap<&ContextKey, f64> = HashMap::new();
    let mut terms = Vec::with_capacity(draws.len());
    for (w, d) in draws {
        let stv = match memo.get(&d.context) {
            Some(&v) => v,
            None => {
                let v = checked_stv(&shift_tv_of_context, &d.context)?;
                memo.insert(&d.context, v);
                v
            }
        };
        terms.push(w * weight.apply(d.g, d.displacement()) * stv);
    }
    Ok(EstimateWithError::exact(pairwise_sum(&terms), draws.len() as u64))
}

fn checked_stv(
    f: &impl Fn(&ContextKey) -> Result<f64>,
    ctx: &ContextKey,
) -> Result<f64> {
    let v = f(ctx)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::ContextEval(format!(
            "conditional shift-TV {v} outside [0,1]"
        )));
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Assembled bound ingredients
// ---------------------------------------------------------------------------

/// Everything a bound evaluator may need, with corollary-specific extras
/// optional. All moment estimates are nonnegative by construction.
#[derive(Debug, Clone)]
pub struct BoundIngredients {
    pub mu: f64,
    pub sigma2: f64,
    /// `Var(E(GD|S))`.
    pub var_cond_gd: EstimateWithError,
    pub e_abs_gd: EstimateWithError,
    pub e_abs_gd2: EstimateWithError,
    pub e_g2d4: EstimateWithError,
    /// `E[(|GD^2| + |GD|) . shiftTV(S|F)]`.
    pub cond_shift_term: EstimateWithError,
    /// Approximate-linearity constant of an exchangeable pair.
    pub lambda: Option<f64>,
    /// `E R^2` of the linearity remainder.
    pub e_r2: Option<EstimateWithError>,
    /// `Var(E((S'-S)^2 | S))`.
    pub var_cond_d2: Option<EstimateWithError>,
    /// `Var(E(S^s - S | S))`.
    pub var_cond_d: Option<EstimateWithError>,
    /// `E|S'-S|^k`, `k in {1,2,3,4,6}`.
    pub abs_d: Option<DisplacementMoments>,
    /// `E[(|D|^3 + D^2) . shiftTV(S|F)]`.
    pub cond_shift_pair: Option<EstimateWithError>,
    /// `E[(D^2 + |D|) . shiftTV(S|F)]`.
    pub cond_shift_size_bias: Option<EstimateWithError>,
    /// Certified `|S - S'| <= 1`.
    pub unit_step: bool,
}

impl BoundIngredients {
    pub fn new(mu: f64, sigma2: f64) -> Self {
        let zero = EstimateWithError::exact(0.0, 0);
        BoundIngredients {
            mu,
            sigma2,
            var_cond_gd: zero,
            e_abs_gd: zero,
            e_abs_gd2: zero,
            e_g2d4: zero,
            cond_shift_term: zero,
            lambda: None,
            e_r2: None,
            var_cond_d2: None,
            var_cond_d: None,
            abs_d: None,
            cond_shift_pair: None,
            cond_shift_size_bias: None,
            unit_step: false,
        }
    }
}

/// Ingredients for the main bound from Monte-Carlo coupling draws.
pub fn ingredients_mc(
    draws: &[CouplingDraw],
    mu: f64,
    sigma2: f64,
    shift_tv_of_context: impl Fn(&ContextKey) -> Result<f64>,
    cfg: &BootstrapCfg,
) -> Result<BoundIngredients> {
    let gd_pairs: Vec<(i64, f64)> = draws.iter().map(|d| (d.s, d.g * d.displacement())).collect();
    let moments = moment_estimates(draws)?;
    let mut ing = BoundIngredients::new(mu, sigma2);
    ing.var_cond_gd = conditional_variance_by_binning(&gd_pairs, cfg)?;
    ing.e_abs_gd = moments.e_abs_gd;
    ing.e_abs_gd2 = moments.e_abs_gd2;
    ing.e_g2d4 = moments.e_g2d4;
    ing.abs_d = Some(moments.abs_d);
    ing.cond_shift_term =
        conditional_shift_term(draws, ShiftWeight::GdTheorem, &shift_tv_of_context)?;
    Ok(ing)
}

/// Ingredients for the main bound from an exhaustive weighted enumeration;
/// every estimate is exact.
pub fn ingredients_exhaustive(
    draws: &[(f64, CouplingDraw)],
    mu: f64,
    sigma2: f64,
    shift_tv_of_context: impl Fn(&ContextKey) -> Result<f64>,
) -> Result<BoundIngredients> {
    let gd_triples: Vec<(f64, i64, f64)> = draws
        .iter()
        .map(|(w, d)| (*w, d.s, d.g * d.displacement()))
        .collect();
    let moments = moment_estimates_weighted(draws)?;
    let n = draws.len() as u64;
    let mut ing = BoundIngredients::new(mu, sigma2);
    ing.var_cond_gd = EstimateWithError::exact(conditional_variance_weighted(&gd_triples)?, n);
    ing.e_abs_gd = moments.e_abs_gd;
    ing.e_abs_gd2 = moments.e_abs_gd2;
    ing.e_g2d4 = moments.e_g2d4;
    ing.abs_d = Some(moments.abs_d);
    ing.cond_shift_term =
        conditional_shift_term_weighted(draws, ShiftWeight::GdTheorem, &shift_tv_of_context)?;
    Ok(ing)
}

/// Size-bias extras (`Var E(D|S)`, `E[(D^2+|D|) shiftTV]`) added onto main
/// ingredients, from Monte-Carlo draws.
pub fn add_size_bias_extras_mc(
    ing: &mut BoundIngredients,
    draws: &[CouplingDraw],
    shift_tv_of_context: impl Fn(&ContextKey) -> Result<f64>,
    cfg: &BootstrapCfg,
) -> Result<()> {
    let d_pairs: Vec<(i64, f64)> = draws.iter().map(|d| (d.s, d.displacement())).collect();
    ing.var_cond_d = Some(conditional_variance_by_binning(&d_pairs, cfg)?);
    ing.cond_shift_size_bias = Some(conditional_shift_term(
        draws,
        ShiftWeight::SizeBiasQuad,
        shift_tv_of_context,
    )?);
    Ok(())
}

/// Size-bias extras from an exhaustive enumeration.
pub fn add_size_bias_extras_exhaustive(
    ing: &mut BoundIngredients,
    draws: &[(f64, CouplingDraw)],
    shift_tv_of_context: impl Fn(&ContextKey) -> Result<f64>,
) -> Result<()> {
    let d_triples: Vec<(f64, i64, f64)> = draws
        .iter()
        .map(|(w, d)| (*w, d.s, d.displacement()))
        .collect();
    ing.var_cond_d = Some(EstimateWithError::exact(
        conditional_variance_weighted(&d_triples)?,
        draws.len() as u64,
    ));
    ing.cond_shift_size_bias = Some(conditional_shift_term_weighted(
        draws,
        ShiftWeight::SizeBiasQuad,
        shift_tv_of_context,
    )?);
    Ok(())
}
