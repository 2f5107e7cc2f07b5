//! 2-runs in a cyclic sequence of i.i.d. Bernoulli variables.
//!
//! `S = sum_{i=1}^n X_i` with `X_i = zeta_i zeta_{i+1}`, indices one plus
//! their residues mod `n`. Exact moments are `mu = n p^2`,
//! `sigma^2 = n (p^2 + 2 p^3 - 3 p^4)`. The term neighborhoods are
//! `A_i = {i-1, i, i+1}` and `B_i = {i-2, ..., i+2}`, giving overlap count
//! `theta = 7`; the conditioning window for term `i` is
//! `(zeta_{i-1}, zeta_i, zeta_{i+1}, zeta_{i+2})`.
//!
//! Conditionally on a window, the remaining sum is a *path* chain
//! `V = a u_1 + sum u_{k-1} u_k + b u_m` with `m = n - 4` free bits and
//! boundary bits `a = zeta_{i+2}`, `b = zeta_{i-1}`; its pmf is a small
//! dynamic program, which makes the exact conditional shift-TV cheap at
//! any `n`.

use crate::bounds::LocalDepIngredients;
use crate::coupling::{ContextKey, ExchangeablePairDraw, LocalDependenceModel};
use crate::estimators::{rollin_ross_bound, BootstrapCfg, EstimateWithError};
use crate::models::{check_prob_open, CondMode};
use crate::pmf::{shift_tv_exact, IntegerPmf};
use crate::rng::{domain, Stream};
use crate::{Error, Result};

/// State budget for the cycle DP (two boundary cases of `n + 1` counts).
const DP_STATE_BUDGET: usize = 1 << 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoRunsParams {
    n: u32,
    p: f64,
}

impl TwoRunsParams {
    pub fn new(n: u32, p: f64) -> Result<Self> {
        if n < 7 {
            return Err(Error::InvalidParam(format!("2-runs requires n >= 7, got {n}")));
        }
        check_prob_open(p, "2-runs p")?;
        Ok(TwoRunsParams { n, p })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `(mu, sigma^2) = (n p^2, n (p^2 + 2 p^3 - 3 p^4))`.
    pub fn exact_moments(&self) -> (f64, f64) {
        let (n, p) = (self.n as f64, self.p);
        let p2 = p * p;
        (n * p2, n * (p2 + 2.0 * p2 * p - 3.0 * p2 * p2))
    }

    pub fn sample_sequence(&self, stream: &mut Stream) -> Vec<u8> {
        (0..self.n).map(|_| u8::from(stream.bernoulli(self.p))).collect()
    }

    pub fn count_runs(bits: &[u8]) -> i64 {
        let n = bits.len();
        (0..n).map(|i| (bits[i] * bits[(i + 1) % n]) as i64).sum()
    }

    pub fn sample_s(&self, stream: &mut Stream) -> i64 {
        Self::count_runs(&self.sample_sequence(stream))
    }

    /// Exact pmf of `S` by conditioning on the first bit and propagating
    /// `(previous bit, run count)` along the cycle.
    pub fn exact_pmf(&self) -> Result<IntegerPmf<f64>> {
        let n = self.n as usize;
        if 2 * (n + 1) > DP_STATE_BUDGET {
            return Err(Error::DpBudgetExceeded(format!(
                "2-runs DP needs {} states, budget {DP_STATE_BUDGET}",
                2 * (n + 1)
            )));
        }
        let p = self.p;
        let w = [1.0 - p, p];
        let mut probs = vec![0.0f64; n + 1];
        for first in 0..2usize {
            // dist[prev][k]
            let mut dist = vec![vec![0.0f64; n + 1]; 2];
            dist[first][0] = w[first];
            for _ in 1..n {
                let mut next = vec![vec![0.0f64; n + 1]; 2];
                for prev in 0..2 {
                    for k in 0..n {
                        let mass = dist[prev][k];
                        if mass == 0.0 {
                            continue;
                        }
                        for bit in 0..2 {
                            next[bit][k + prev * bit] += mass * w[bit];
                        }
                    }
                }
                dist = next;
            }
            // Close the cycle with the wraparound term zeta_n * zeta_1.
            for prev in 0..2 {
                for k in 0..=n - 1 {
                    let mass = dist[prev][k];
                    if mass != 0.0 {
                        probs[k + prev * first] += mass;
                    }
                }
            }
        }
        IntegerPmf::new(0, probs)
    }

    /// Analytic conditional shift-TV bound
    /// `sqrt(3(n-4)) / (2(n-6) p^2 (1-p)^2)`, before clamping.
    pub fn conditional_shift_tv_analytic_raw(&self) -> f64 {
        let (n, p) = (self.n as f64, self.p);
        let q = 1.0 - p;
        (3.0 * (n - 4.0)).sqrt() / (2.0 * (n - 6.0) * p * p * q * q)
    }

    /// Analytic conditional shift-TV bound, clamped to 1 (it is a TV).
    pub fn conditional_shift_tv_analytic(&self) -> f64 {
        self.conditional_shift_tv_analytic_raw().min(1.0)
    }

    /// Exact conditional shift-TV given the window
    /// `(zeta_{i-1}, zeta_i, zeta_{i+1}, zeta_{i+2})`: the shift-TV of the
    /// boundary-bit path chain on the other `n - 4` bits.
    pub fn conditional_shift_tv_exact(&self, window: [u8; 4]) -> f64 {
        let m = (self.n - 4) as usize;
        let chain = path_pmf(m, window[3], window[0], self.p);
        shift_tv_exact(&chain)
    }

    /// Nested conditional shift-TV: coordinate-resampling pair on the path
    /// chain, fed to the exchangeable-pair smoothing bound (clamped to 1).
    pub fn conditional_shift_tv_nested(
        &self,
        window: [u8; 4],
        inner_samples: u64,
        seed: u64,
    ) -> Result<f64> {
        let m = (self.n - 4) as usize;
        let (a, b) = (window[3], window[0]);
        let salt = u64::from_le_bytes([window[0], window[1], window[2], window[3], 0, 0, 0, 1]);
        let pairs: Vec<ExchangeablePairDraw> = (0..inner_samples)
            .map(|i| {
                let mut stream = Stream::new(seed, domain::NESTED, salt.wrapping_add(i << 8));
                path_resample_pair(m, a, b, self.p, &mut stream)
            })
            .collect();
        let bound = rollin_ross_bound(&pairs, &BootstrapCfg { resamples: 0, seed })?;
        Ok(bound.value.min(1.0))
    }

    fn window_of_context(ctx: &ContextKey) -> Result<[u8; 4]> {
        match ctx {
            ContextKey::IndexWindow { values, .. } if values.len() == 4 => {
                Ok([values[0] as u8, values[1] as u8, values[2] as u8, values[3] as u8])
            }
            other => Err(Error::ContextEval(format!("not a 2-runs window: {other:?}"))),
        }
    }

    /// Conditional shift-TV evaluator for a draw context in the given mode.
    pub fn conditional_shift_tv(
        &self,
        ctx: &ContextKey,
        mode: CondMode,
        inner_samples: u64,
        seed: u64,
    ) -> Result<f64> {
        match mode {
            CondMode::Analytic => Ok(self.conditional_shift_tv_analytic()),
            CondMode::Exact => Ok(self.conditional_shift_tv_exact(Self::window_of_context(ctx)?)),
            CondMode::Nested => {
                self.conditional_shift_tv_nested(Self::window_of_context(ctx)?, inner_samples, seed)
            }
        }
    }

    pub fn local_model(&self) -> TwoRunsLocal {
        TwoRunsLocal { params: *self }
    }

    /// Exact local-dependence ingredients. By rotation symmetry every index
    /// contributes the same window expectation, so each sum is `n` times a
    /// 16-term enumeration; the conditional term uses the shift-TV mode
    /// supplied.
    pub fn local_dep_ingredients(
        &self,
        stv_of_window: impl Fn([u8; 4]) -> Result<f64>,
    ) -> Result<LocalDepIngredients> {
        let (_, sigma2) = self.exact_moments();
        let sigma = sigma2.sqrt();
        let (n, p) = (self.n as f64, self.p);
        let p2 = p * p;
        let mut e_xi2_eta2 = 0.0;
        let mut e_abs_xi_eta2 = 0.0;
        let mut e_xi2_eta4 = 0.0;
        let mut windows = Vec::with_capacity(16);
        for bits in 0..16u8 {
            let w = [bits & 1, (bits >> 1) & 1, (bits >> 2) & 1, (bits >> 3) & 1];
            let weight: f64 = w
                .iter()
                .map(|&b| if b == 1 { p } else { 1.0 - p })
                .product();
            let x_prev = (w[0] * w[1]) as f64;
            let x_i = (w[1] * w[2]) as f64;
            let x_next = (w[2] * w[3]) as f64;
            // xi sigma and eta sigma, before normalization
            let xs = x_i - p2;
            let es = x_prev + x_i + x_next - 3.0 * p2;
            e_xi2_eta2 += weight * xs * xs * es * es;
            e_abs_xi_eta2 += weight * (xs * es * es).abs();
            e_xi2_eta4 += weight * xs * xs * es.powi(4);
            windows.push((w, weight, xs, es));
        }
        let s2 = sigma2;
        let sum_xi2_eta2 = n * e_xi2_eta2 / (s2 * s2);
        let sum_abs_xi_eta2 = n * e_abs_xi_eta2 / (s2 * sigma);
        let sum_xi2_eta4 = n * e_xi2_eta4 / (s2 * s2 * s2);
        // per-index scalar E|xi eta^2| entering the conditional weight
        let e_abs_xi_eta2_i = e_abs_xi_eta2 / (s2 * sigma);
        let mut cond = 0.0;
        for &(w, weight, xs, es) in &windows {
            let stv = stv_of_window(w)?;
            if !(0.0..=1.0).contains(&stv) {
                return Err(Error::ContextEval(format!("window shift-TV {stv} outside [0,1]")));
            }
            let abs_xi_eta = (xs * es).abs() / s2;
            cond += weight * (abs_xi_eta + sigma * e_abs_xi_eta2_i) * stv;
        }
        let cond_term = n * cond;
        Ok(LocalDepIngredients {
            n: self.n as usize,
            theta: 7,
            sigma,
            sum_xi2_eta2: EstimateWithError::exact(sum_xi2_eta2, 16),
            sum_abs_xi_eta2: EstimateWithError::exact(sum_abs_xi_eta2, 16),
            sum_xi2_eta4: EstimateWithError::exact(sum_xi2_eta4, 16),
            cond_term: EstimateWithError::exact(cond_term, 16),
        })
    }

    /// Full-cycle coordinate-resampling exchangeable pair for `S`.
    pub fn resample_pair(&self, stream: &mut Stream) -> ExchangeablePairDraw {
        let mut bits = self.sample_sequence(stream);
        let v = Self::count_runs(&bits);
        let i = stream.index(bits.len());
        bits[i] = u8::from(stream.bernoulli(self.p));
        ExchangeablePairDraw { v, v_prime: Self::count_runs(&bits) }
    }
}

/// Pmf of the path chain `V = a u_1 + sum_{k=2}^m u_{k-1} u_k + b u_m`
/// over `m` free Bernoulli(p) bits with frozen boundary bits `a`, `b`.
pub fn path_pmf(m: usize, a: u8, b: u8, p: f64) -> IntegerPmf<f64> {
    assert!(m >= 1);
    let w = [1.0 - p, p];
    let cap = m + 2;
    // dist[last bit][count]
    let mut dist = vec![vec![0.0f64; cap]; 2];
    for bit in 0..2usize {
        dist[bit][a as usize * bit] = w[bit];
    }
    for _ in 2..=m {
        let mut next = vec![vec![0.0f64; cap]; 2];
        for prev in 0..2 {
            for k in 0..cap {
                let mass = dist[prev][k];
                if mass == 0.0 {
                    continue;
                }
                for bit in 0..2 {
                    next[bit][k + prev * bit] += mass * w[bit];
                }
            }
        }
        dist = next;
    }
    let mut probs = vec![0.0f64; cap];
    for (last, row) in dist.iter().enumerate() {
        for (k, &mass) in row.iter().enumerate() {
            if mass != 0.0 {
                probs[k + b as usize * last] += mass;
            }
        }
    }
    IntegerPmf::new(0, probs).expect("path DP masses form a pmf")
}

/// Evaluate the path chain `V` on explicit bits.
pub fn path_value(bits: &[u8], a: u8, b: u8) -> i64 {
    let m = bits.len();
    let mut v = (a * bits[0]) as i64 + (b * bits[m - 1]) as i64;
    for k in 1..m {
        v += (bits[k - 1] * bits[k]) as i64;
    }
    v
}

/// Coordinate-resampling pair on the path chain.
pub fn path_resample_pair(
    m: usize,
    a: u8,
    b: u8,
    p: f64,
    stream: &mut Stream,
) -> ExchangeablePairDraw {
    let mut bits: Vec<u8> = (0..m).map(|_| u8::from(stream.bernoulli(p))).collect();
    let v = path_value(&bits, a, b);
    let i = stream.index(m);
    bits[i] = u8::from(stream.bernoulli(p));
    ExchangeablePairDraw { v, v_prime: path_value(&bits, a, b) }
}

/// The 2-runs local-dependence structure.
#[derive(Debug, Clone, Copy)]
pub struct TwoRunsLocal {
    params: TwoRunsParams,
}

impl TwoRunsLocal {
    fn wrap(&self, i: i64) -> usize {
        let n = self.params.n as i64;
        i.rem_euclid(n) as usize
    }
}

impl LocalDependenceModel for TwoRunsLocal {
    type Inputs = Vec<u8>;

    fn num_terms(&self) -> usize {
        self.params.n as usize
    }

    fn draw_inputs(&self, stream: &mut Stream) -> Vec<u8> {
        self.params.sample_sequence(stream)
    }

    fn enumerate_inputs(&self) -> Option<Vec<(f64, Vec<u8>)>> {
        let n = self.params.n as usize;
        if n > 24 {
            return None;
        }
        let p = self.params.p;
        let mut out = Vec::with_capacity(1 << n);
        for mask in 0u32..(1 << n) {
            let bits: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
            let ones = mask.count_ones() as i32;
            let weight = p.powi(ones) * (1.0 - p).powi(n as i32 - ones);
            out.push((weight, bits));
        }
        Some(out)
    }

    fn term(&self, inputs: &Vec<u8>, i: usize) -> i64 {
        let n = self.params.n as usize;
        (inputs[i] * inputs[(i + 1) % n]) as i64
    }

    fn term_mean(&self, _i: usize) -> f64 {
        self.params.p * self.params.p
    }

    fn neighborhood(&self, i: usize) -> Vec<usize> {
        let i = i as i64;
        vec![self.wrap(i - 1), self.wrap(i), self.wrap(i + 1)]
    }

    fn context(&self, inputs: &Vec<u8>, i: usize) -> ContextKey {
        let i = i as i64;
        let window: Vec<i64> = [i - 1, i, i + 1, i + 2]
            .iter()
            .map(|&j| inputs[self.wrap(j)] as i64)
            .collect();
        ContextKey::IndexWindow { index: self.wrap(i) as u32, values: window }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{local_dep_exhaustive, stein_identity_residual_weighted};
    use proptest::prelude::*;

    fn brute_force_pmf(n: usize, p: f64) -> IntegerPmf<f64> {
        let mut probs = vec![0.0f64; n + 1];
        for mask in 0u32..(1 << n) {
            let bits: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
            let ones = mask.count_ones() as i32;
            let w = p.powi(ones) * (1.0 - p).powi(n as i32 - ones);
            probs[TwoRunsParams::count_runs(&bits) as usize] += w;
        }
        IntegerPmf::new(0, probs).unwrap()
    }

    #[test]
    fn moments_match_brute_force() {
        let params = TwoRunsParams::new(8, 0.3).unwrap();
        let (mu, sigma2) = params.exact_moments();
        assert!((mu - 0.72).abs() < 1e-12);
        let bf = brute_force_pmf(8, 0.3);
        assert!((bf.mean() - mu).abs() < 1e-12);
        assert!((bf.variance() - sigma2).abs() < 1e-12, "{} vs {sigma2}", bf.variance());

        let half = TwoRunsParams::new(10, 0.5).unwrap();
        let (mu, sigma2) = half.exact_moments();
        assert!((mu - 2.5).abs() < 1e-15);
        assert!((sigma2 - 3.125).abs() < 1e-15);
        // positivity near the boundary of (0,1)
        let edge = TwoRunsParams::new(10, 0.99).unwrap();
        assert!(edge.exact_moments().1 > 0.0);
    }

    #[test]
    fn dp_pmf_matches_brute_force() {
        for &(n, p) in &[(7usize, 0.5f64), (10, 0.5), (12, 0.3)] {
            let params = TwoRunsParams::new(n as u32, p).unwrap();
            let dp = params.exact_pmf().unwrap();
            let bf = brute_force_pmf(n, p);
            assert_eq!(dp.min_z(), bf.min_z());
            assert_eq!(dp.max_z(), bf.max_z());
            for z in dp.min_z()..=dp.max_z() {
                assert!((dp.get(z) - bf.get(z)).abs() < 1e-12, "n={n} p={p} z={z}");
            }
            assert!(dp.max_z() <= n as i64);
        }
        let params = TwoRunsParams::new(10, 0.5).unwrap();
        assert!((params.exact_pmf().unwrap().mean() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn analytic_conditional_bound_values() {
        // Raw formula value at n=100, p=1/2: sqrt(288)/11.75; the clamped
        // value is 1 since a TV cannot exceed it.
        let params = TwoRunsParams::new(100, 0.5).unwrap();
        let raw = params.conditional_shift_tv_analytic_raw();
        assert!((raw - (288.0f64).sqrt() / 11.75).abs() < 1e-12);
        assert_eq!(params.conditional_shift_tv_analytic(), 1.0);

        // O(1/sqrt(n)) decay: quadrupling n halves the raw value.
        let big = TwoRunsParams::new(40_000, 0.5).unwrap();
        let bigger = TwoRunsParams::new(160_000, 0.5).unwrap();
        let ratio = bigger.conditional_shift_tv_analytic_raw()
            / big.conditional_shift_tv_analytic_raw();
        assert!((ratio - 0.5).abs() < 0.025, "ratio {ratio}");
        assert!(big.conditional_shift_tv_analytic() < 1.0);
    }

    #[test]
    fn exact_conditional_shift_tv_matches_window_enumeration() {
        // Conditional pmf of S given a window, by brute force over the
        // free bits, must have the same shift-TV as the path chain.
        let params = TwoRunsParams::new(9, 0.35).unwrap();
        let n = 9usize;
        let p = 0.35;
        for wbits in 0..16u8 {
            let w = [wbits & 1, (wbits >> 1) & 1, (wbits >> 2) & 1, (wbits >> 3) & 1];
            // window at positions (i-1, i, i+1, i+2) for i = 1
            let positions = [0usize, 1, 2, 3];
            let free: Vec<usize> = (0..n).filter(|j| !positions.contains(j)).collect();
            let mut probs = vec![0.0f64; n + 1];
            for mask in 0u32..(1 << free.len()) {
                let mut bits = vec![0u8; n];
                for (slot, &pos) in positions.iter().enumerate() {
                    bits[pos] = w[slot];
                }
                let mut ones = 0i32;
                for (b, &pos) in free.iter().enumerate() {
                    let v = ((mask >> b) & 1) as u8;
                    bits[pos] = v;
                    ones += v as i32;
                }
                let weight = p.powi(ones) * (1.0 - p).powi(free.len() as i32 - ones);
                probs[TwoRunsParams::count_runs(&bits) as usize] += weight;
            }
            let cond = IntegerPmf::new(0, probs).unwrap();
            let expected = shift_tv_exact(&cond);
            let got = params.conditional_shift_tv_exact(w);
            assert!((got - expected).abs() < 1e-12, "window {w:?}: {got} vs {expected}");
        }
    }

    #[test]
    fn coupling_reports_stated_neighborhoods() {
        let params = TwoRunsParams::new(8, 0.3).unwrap();
        let local = params.local_model();
        assert_eq!(local.neighborhood(0), vec![7, 0, 1]);
        assert_eq!(local.neighborhood(7), vec![6, 7, 0]);
        let ing = params.local_dep_ingredients(|_| Ok(1.0)).unwrap();
        assert_eq!(ing.theta, 7);
    }

    #[test]
    fn exhaustive_coupling_second_moment_is_variance() {
        // E[GD] over the exhaustive enumeration equals sigma^2.
        let params = TwoRunsParams::new(8, 0.3).unwrap();
        let draws = local_dep_exhaustive(&params.local_model()).unwrap();
        let e_gd: f64 = draws
            .iter()
            .map(|(w, d)| w * d.g * d.displacement())
            .sum();
        let (_, sigma2) = params.exact_moments();
        assert!((e_gd - sigma2).abs() < 1e-10, "{e_gd} vs {sigma2}");
    }

    #[test]
    fn exhaustive_stein_residuals_vanish() {
        let params = TwoRunsParams::new(8, 0.3).unwrap();
        let (mu, _) = params.exact_moments();
        let draws = local_dep_exhaustive(&params.local_model()).unwrap();
        for (_, f) in crate::coupling::residual_test_functions(3) {
            let r = stein_identity_residual_weighted(&draws, &*f, mu).unwrap();
            assert!(r.value.abs() < 1e-10, "residual {}", r.value);
        }
    }

    #[test]
    fn displacement_stays_in_neighborhood_range() {
        // |eta_i| <= 3/sigma means |D| <= 3 on every draw.
        let params = TwoRunsParams::new(20, 0.4).unwrap();
        let local = params.local_model();
        for i in 0..2_000u64 {
            let mut s = Stream::new(5, domain::COUPLING, i);
            let draw = crate::coupling::local_dep_coupling_draw(&local, &mut s).unwrap();
            assert!(draw.displacement().abs() <= 3.0 + 1e-12);
        }
    }

    proptest! {
        // Rotation invariance of the run count.
        #[test]
        fn run_count_rotation_invariant(mask in 0u32..(1 << 12), shift in 0usize..12) {
            let n = 12;
            let bits: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
            let rotated: Vec<u8> = (0..n).map(|i| bits[(i + shift) % n]).collect();
            prop_assert_eq!(
                TwoRunsParams::count_runs(&bits),
                TwoRunsParams::count_runs(&rotated)
            );
        }

        // The path-chain DP agrees with direct enumeration.
        #[test]
        fn path_pmf_matches_enumeration(m in 1usize..10, a in 0u8..2, b in 0u8..2, pp in 0.1f64..0.9) {
            let dp = path_pmf(m, a, b, pp);
            let mut probs = vec![0.0f64; m + 2];
            for mask in 0u32..(1 << m) {
                let bits: Vec<u8> = (0..m).map(|i| ((mask >> i) & 1) as u8).collect();
                let ones = mask.count_ones() as i32;
                let w = pp.powi(ones) * (1.0 - pp).powi(m as i32 - ones);
                probs[path_value(&bits, a, b) as usize] += w;
            }
            let direct = IntegerPmf::new(0, probs).unwrap();
            prop_assert_eq!(dp.min_z(), direct.min_z());
            for z in dp.min_z()..=dp.max_z() {
                prop_assert!((dp.get(z) - direct.get(z)).abs() < 1e-12);
            }
        }
    }
}
