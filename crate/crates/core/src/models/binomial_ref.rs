//! Binomial reference model: `S = sum of n Bernoulli(p)` with the
//! coordinate-resampling exchangeable pair.
//!
//! The pair satisfies the linearity condition exactly:
//! `E(S - S'|S) = (S - np)/n`, i.e. `lambda = 1/n` and `R = 0`, and
//! `|S - S'| <= 1` always, which makes it the exercise model for the
//! unit-step exchangeable-pair corollary.

use crate::coupling::ExchangeablePairDraw;
use crate::estimators::{BoundIngredients, EstimateWithError};
use crate::models::check_prob_open;
use crate::pmf::{binomial_pmf, IntegerPmf};
use crate::rng::Stream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomialRefParams {
    n: u32,
    p: f64,
}

/// Linearity certificate of the coordinate-resampling pair.
#[derive(Debug, Clone, Copy)]
pub struct LinearityCertificate {
    /// Always `1/n` for this pair.
    pub lambda: f64,
    /// Largest deviation of the enumerated `E(S-S'|S=s)` from
    /// `(s - np)/n`; `None` when `n` is too large to enumerate.
    pub max_residual: Option<f64>,
}

impl BinomialRefParams {
    pub fn new(n: u32, p: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParam("binomial reference requires n >= 1".to_string()));
        }
        check_prob_open(p, "binomial p")?;
        Ok(BinomialRefParams { n, p })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn exact_moments(&self) -> (f64, f64) {
        let (n, p) = (self.n as f64, self.p);
        (n * p, n * p * (1.0 - p))
    }

    pub fn exact_pmf(&self) -> IntegerPmf<f64> {
        binomial_pmf(self.n as u64, self.p).expect("p validated at construction")
    }

    pub fn sample_s(&self, stream: &mut Stream) -> i64 {
        (0..self.n).map(|_| i64::from(stream.bernoulli(self.p))).sum()
    }

    /// One coordinate-resampling pair draw: `|v - v'| <= 1` always.
    pub fn pair_draw(&self, stream: &mut Stream) -> ExchangeablePairDraw {
        let n = self.n as usize;
        let mut ones: i64 = 0;
        let mut bits = vec![false; n];
        for b in bits.iter_mut() {
            *b = stream.bernoulli(self.p);
            ones += i64::from(*b);
        }
        let i = stream.index(n);
        let new = stream.bernoulli(self.p);
        let v_prime = ones - i64::from(bits[i]) + i64::from(new);
        ExchangeablePairDraw { v: ones, v_prime }
    }

    /// Certify `E(S - S'|S) = (S - np)/n` by full enumeration over
    /// `(sequence, coordinate, resampled bit)` when `n <= 12`.
    pub fn linearity_certificate(&self) -> LinearityCertificate {
        let lambda = 1.0 / self.n as f64;
        if self.n > 12 {
            return LinearityCertificate { lambda, max_residual: None };
        }
        let n = self.n as usize;
        let p = self.p;
        let mut num = vec![0.0f64; n + 1]; // sum of w * (s - s')
        let mut den = vec![0.0f64; n + 1];
        for mask in 0u32..(1 << n) {
            let s = mask.count_ones() as i64;
            let w_seq = p.powi(s as i32) * (1.0 - p).powi(n as i32 - s as i32);
            for i in 0..n {
                let bit = ((mask >> i) & 1) as i64;
                for (new, w_new) in [(0i64, 1.0 - p), (1i64, p)] {
                    let s_prime = s - bit + new;
                    let w = w_seq / n as f64 * w_new;
                    num[s as usize] += w * (s - s_prime) as f64;
                    den[s as usize] += w;
                }
            }
        }
        let mu = self.n as f64 * p;
        let mut worst = 0.0f64;
        for s in 0..=n {
            if den[s] == 0.0 {
                continue;
            }
            let cond = num[s] / den[s];
            let linear = (s as f64 - mu) * lambda;
            worst = worst.max((cond - linear).abs());
        }
        LinearityCertificate { lambda, max_residual: Some(worst) }
    }

    /// Exact unit-step ingredients: `lambda = 1/n`, `R = 0`, and
    /// `Var(E((S'-S)^2|S))` from the enumeration identity
    /// `E((S'-S)^2 | S=s) = (1-p) s/n + p (n-s)/n` weighted by the exact
    /// binomial law.
    pub fn unit_step_ingredients(&self) -> BoundIngredients {
        let (mu, sigma2) = self.exact_moments();
        let n = self.n as f64;
        let pmf = self.exact_pmf();
        let cond: Vec<(f64, f64)> = pmf
            .support()
            .map(|(s, w)| {
                let s = s as f64;
                (w, (1.0 - self.p) * s / n + self.p * (n - s) / n)
            })
            .collect();
        let mean: f64 = cond.iter().map(|(w, v)| w * v).sum();
        let var: f64 = cond.iter().map(|(w, v)| w * (v - mean) * (v - mean)).sum();
        let mut ing = BoundIngredients::new(mu, sigma2);
        ing.lambda = Some(1.0 / n);
        ing.e_r2 = Some(EstimateWithError::exact(0.0, self.n as u64 + 1));
        ing.var_cond_d2 = Some(EstimateWithError::exact(var.max(0.0), self.n as u64 + 1));
        ing.unit_step = true;
        ing
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::domain;

    #[test]
    fn certificate_is_exact_for_small_n() {
        let params = BinomialRefParams::new(6, 0.3).unwrap();
        let cert = params.linearity_certificate();
        assert!((cert.lambda - 1.0 / 6.0).abs() < 1e-15);
        assert!(cert.max_residual.unwrap() < 1e-13);
        let big = BinomialRefParams::new(30, 0.5).unwrap();
        assert!(big.linearity_certificate().max_residual.is_none());
    }

    #[test]
    fn pair_draws_are_unit_step() {
        let params = BinomialRefParams::new(30, 0.5).unwrap();
        for i in 0..2_000u64 {
            let mut s = Stream::new(8, domain::PAIR, i);
            let pair = params.pair_draw(&mut s);
            assert!((pair.v - pair.v_prime).abs() <= 1);
        }
    }

    #[test]
    fn unit_step_ingredients_half_case_degenerates() {
        // p = 1/2: E((S'-S)^2|S) is constant, so its conditional variance
        // is exactly 0 and the remainder term is exactly 0.
        let params = BinomialRefParams::new(30, 0.5).unwrap();
        let ing = params.unit_step_ingredients();
        assert_eq!(ing.e_r2.unwrap().value, 0.0);
        assert!(ing.var_cond_d2.unwrap().value < 1e-30);
        assert_eq!(ing.lambda.unwrap(), 1.0 / 30.0);
        assert!(ing.unit_step);
    }

    #[test]
    fn unit_step_ingredients_match_closed_form() {
        // Var over S ~ Bin(n,p) of p + s(1-2p)/n = ((1-2p)/n)^2 np(1-p).
        let params = BinomialRefParams::new(12, 0.3).unwrap();
        let ing = params.unit_step_ingredients();
        let (n, p) = (12.0, 0.3);
        let expected = ((1.0 - 2.0 * p) / n).powi(2) * n * p * (1.0 - p);
        assert!((ing.var_cond_d2.unwrap().value - expected).abs() < 1e-15);
    }
}
