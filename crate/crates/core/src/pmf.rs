//! Finite-support integer probability mass functions and distances.
//!
//! [`IntegerPmf`] is the universal currency for exact computations: a
//! canonical pmf stores a support minimum (`offset`) and a dense run of
//! probabilities whose first and last entries are positive. Construction
//! trims leading/trailing zeros and validates mass; a mass violation is an
//! error, never silently repaired.

use serde::{Deserialize, Serialize};

use crate::normal::NormalParams;
use crate::numeric::pairwise_sum;
use crate::real::{cast, Real};
use crate::rng::Stream;
use crate::{Error, Result};

/// Finite-support pmf on the integers, in canonical trimmed form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegerPmf<R> {
    offset: i64,
    probs: Vec<R>,
}

impl<R: Real> IntegerPmf<R> {
    /// Canonical constructor: trims zero fringes, requires nonnegative
    /// finite entries summing to 1 within the mass tolerance.
    pub fn new(offset: i64, probs: Vec<R>) -> Result<Self> {
        let pmf = Self::new_sub_stochastic(offset, probs, Self::mass_tolerance())?;
        let total = pairwise_sum(&pmf.probs);
        let defect = (total - R::one()).abs();
        if defect > Self::mass_tolerance() {
            return Err(Error::InvalidPmf(format!(
                "mass {total} differs from 1 by {defect}, beyond tolerance"
            )));
        }
        Ok(pmf)
    }

    /// Constructor for deliberately sub-stochastic tables (truncated
    /// discretized normals): entries validated and trimmed, total mass
    /// allowed to fall short of 1 by up to `deficit`.
    pub(crate) fn new_sub_stochastic(offset: i64, probs: Vec<R>, deficit: R) -> Result<Self> {
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < R::zero() {
                return Err(Error::InvalidPmf(format!("entry {i} is {p}")));
            }
        }
        let lead = probs.iter().take_while(|&&p| p == R::zero()).count();
        if lead == probs.len() {
            return Err(Error::InvalidPmf("all entries are zero".to_string()));
        }
        let trail = probs.iter().rev().take_while(|&&p| p == R::zero()).count();
        let trimmed: Vec<R> = probs[lead..probs.len() - trail].to_vec();
        let total = pairwise_sum(&trimmed);
        if total > R::one() + Self::mass_tolerance() || total < R::one() - deficit - Self::mass_tolerance() {
            return Err(Error::InvalidPmf(format!(
                "mass {total} outside [1 - {deficit}, 1]"
            )));
        }
        Ok(IntegerPmf { offset: offset + lead as i64, probs: trimmed })
    }

    fn mass_tolerance() -> R {
        // 1e-9 per the canonical-form contract; widened only when the
        // scalar itself cannot resolve that (f32).
        cast::<R>(1e-9).max(R::epsilon() * cast(1e4))
    }

    pub fn point_mass(z: i64) -> Self {
        IntegerPmf { offset: z, probs: vec![R::one()] }
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn probs(&self) -> &[R] {
        &self.probs
    }

    pub fn min_z(&self) -> i64 {
        self.offset
    }

    pub fn max_z(&self) -> i64 {
        self.offset + self.probs.len() as i64 - 1
    }

    /// Mass at `z` (zero outside the stored support).
    pub fn get(&self, z: i64) -> R {
        if z < self.offset {
            return R::zero();
        }
        let idx = (z - self.offset) as usize;
        self.probs.get(idx).copied().unwrap_or_else(R::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = (i64, R)> + '_ {
        self.probs.iter().enumerate().map(|(i, &p)| (self.offset + i as i64, p))
    }

    pub fn mean(&self) -> R {
        let terms: Vec<R> = self
            .support()
            .map(|(z, p)| p * R::from_i64(z).unwrap())
            .collect();
        pairwise_sum(&terms)
    }

    pub fn variance(&self) -> R {
        let m = self.mean();
        let terms: Vec<R> = self
            .support()
            .map(|(z, p)| {
                let d = R::from_i64(z).unwrap() - m;
                p * d * d
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// The law of `X + k`.
    pub fn shift(&self, k: i64) -> Self {
        IntegerPmf { offset: self.offset + k, probs: self.probs.clone() }
    }

    /// Inverse-CDF sample using one uniform draw.
    pub fn sample(&self, stream: &mut Stream) -> i64 {
        let u = cast::<R>(stream.uniform());
        let mut acc = R::zero();
        for (z, p) in self.support() {
            acc += p;
            if u < acc {
                return z;
            }
        }
        self.max_z()
    }
}

impl<'de, R: Real + Deserialize<'de>> Deserialize<'de> for IntegerPmf<R> {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw<R> {
            offset: i64,
            probs: Vec<R>,
        }
        let raw = Raw::deserialize(deserializer)?;
        IntegerPmf::new(raw.offset, raw.probs).map_err(serde::de::Error::custom)
    }
}

/// Total variation distance `sup_A |P(X in A) - P(Y in A)| = (1/2) sum_z |p(z) - q(z)|`.
pub fn tv<R: Real>(p: &IntegerPmf<R>, q: &IntegerPmf<R>) -> R {
    let lo = p.min_z().min(q.min_z());
    let hi = p.max_z().max(q.max_z());
    let diffs: Vec<R> = (lo..=hi).map(|z| (p.get(z) - q.get(z)).abs()).collect();
    cast::<R>(0.5) * pairwise_sum(&diffs)
}

/// Shift-TV `d_TV(L(V), L(V+1)) = (1/2) sum_z |p(z) - p(z-1)|`, computed
/// through the same code path as [`tv`].
pub fn shift_tv_exact<R: Real>(p: &IntegerPmf<R>) -> R {
    tv(p, &p.shift(1))
}

/// Kolmogorov distance between an integer law and the continuous normal
/// `N(mu, sigma^2)`: `sup_x |F_p(x) - Phi((x - mu)/sigma)|`. Diagnostic.
///
/// The pmf's CDF is a step function, so the supremum over each interval
/// `[z, z+1)` is attained at one of its ends.
pub fn kolmogorov<R: Real>(p: &IntegerPmf<R>, params: &NormalParams<R>) -> R {
    let mut sup = R::zero();
    let mut cdf = R::zero();
    // z = min_z - 1 covers the region below the support.
    let lo = p.min_z() - 1;
    for z in lo..=p.max_z() {
        if z >= p.min_z() {
            cdf += p.get(z);
        }
        let at_left = (cdf - params.cdf(R::from_i64(z).unwrap())).abs();
        let at_right = (cdf - params.cdf(R::from_i64(z + 1).unwrap())).abs();
        sup = sup.max(at_left).max(at_right);
    }
    sup
}

/// Exact binomial pmf by the mode-centered multiplicative recurrence
/// (stable for any `n`, `p`, no factorial overflow).
pub fn binomial_pmf<R: Real>(n: u64, p: R) -> Result<IntegerPmf<R>> {
    if !(p >= R::zero() && p <= R::one()) || !p.is_finite() {
        return Err(Error::InvalidParam(format!("binomial p must lie in [0,1], got {p}")));
    }
    if p == R::zero() {
        return Ok(IntegerPmf::point_mass(0));
    }
    if p == R::one() {
        return Ok(IntegerPmf::point_mass(n as i64));
    }
    let nf = R::from_u64(n).unwrap();
    let q = R::one() - p;
    let mode = ((nf + R::one()) * p).floor().min(nf).to_i64().unwrap() as usize;
    let len = n as usize + 1;
    let mut w = vec![R::zero(); len];
    w[mode] = R::one();
    // p(k+1)/p(k) = (n-k)/(k+1) * p/q
    let ratio_up = p / q;
    for k in mode..n as usize {
        let f = (nf - R::from_usize(k).unwrap()) / R::from_usize(k + 1).unwrap() * ratio_up;
        w[k + 1] = w[k] * f;
    }
    let ratio_down = q / p;
    for k in (1..=mode).rev() {
        let f = R::from_usize(k).unwrap() / (nf - R::from_usize(k - 1).unwrap()) * ratio_down;
        w[k - 1] = w[k] * f;
    }
    let total = pairwise_sum(&w);
    for x in &mut w {
        *x /= total;
    }
    IntegerPmf::new(0, w)
}

/// Single binomial mass `P(Bin(n, p) = k)`.
pub fn binomial_pmf_at<R: Real>(n: u64, p: R, k: u64) -> Result<R> {
    if k > n {
        return Ok(R::zero());
    }
    Ok(binomial_pmf(n, p)?.get(k as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pmf(offset: i64, probs: &[f64]) -> IntegerPmf<f64> {
        IntegerPmf::new(offset, probs.to_vec()).unwrap()
    }

    #[test]
    fn construction_trims_and_validates() {
        let p = pmf(0, &[0.0, 0.5, 0.0, 0.5, 0.0]);
        assert_eq!(p.min_z(), 1);
        assert_eq!(p.max_z(), 3);
        assert_eq!(p.get(2), 0.0); // interior zero is kept
        assert!(IntegerPmf::new(0, vec![0.4, 0.4]).is_err());
        assert!(IntegerPmf::new(0, vec![0.5, 0.6]).is_err());
        assert!(IntegerPmf::new(0, vec![-0.1, 1.1]).is_err());
        assert!(IntegerPmf::new(0, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn tv_basic_values() {
        let p = pmf(0, &[0.5, 0.5]);
        assert_eq!(tv(&p, &p), 0.0);
        let q = pmf(1, &[0.5, 0.5]);
        assert!((tv(&p, &q) - 0.5).abs() < 1e-15);
        let far = pmf(10, &[1.0]);
        assert!((tv(&p, &far) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shift_tv_values() {
        assert_eq!(shift_tv_exact(&IntegerPmf::<f64>::point_mass(3)), 1.0);
        let uniform = pmf(0, &[0.1; 10]);
        assert!((shift_tv_exact(&uniform) - 0.1).abs() < 1e-15);
        let b = binomial_pmf(16, 0.5f64).unwrap();
        assert!((shift_tv_exact(&b) - 0.196_380_615_234_375).abs() < 1e-12);
    }

    #[test]
    fn binomial_against_direct_formula() {
        let b = binomial_pmf(16, 0.5f64).unwrap();
        // C(16,8)/2^16 = 12870/65536
        assert!((b.get(8) - 12870.0 / 65536.0).abs() < 1e-15);
        let b = binomial_pmf(10, 0.3f64).unwrap();
        let direct = 120.0 * 0.3f64.powi(3) * 0.7f64.powi(7); // C(10,3) p^3 q^7
        assert!((b.get(3) - direct).abs() < 1e-15);
        assert_eq!(binomial_pmf(5, 0.0f64).unwrap().max_z(), 0);
        assert_eq!(binomial_pmf(5, 1.0f64).unwrap().min_z(), 5);
    }

    #[test]
    fn kolmogorov_values() {
        use crate::normal::NormalParams;
        let point = IntegerPmf::<f64>::point_mass(0);
        let std = NormalParams::new(0.0, 1.0).unwrap();
        assert!((kolmogorov(&point, &std) - 0.5).abs() < 1e-12);

        let b = binomial_pmf(20, 0.5f64).unwrap();
        let n = NormalParams::new(10.0, 5.0).unwrap();
        let dk = kolmogorov(&b, &n);
        assert!(dk > 0.0 && dk <= 0.1, "dk={dk}");

        // Self-comparison of a discretized table: residual below the shift
        // granularity of the continuous CDF across one cell.
        let t = crate::normal::dnormal_pmf_table(&n, 1e-12).unwrap();
        let dk_self = kolmogorov(t.pmf(), &n);
        let one_cell = crate::normal::std_normal_cdf(0.5 / n.sigma())
            - crate::normal::std_normal_cdf(-0.5 / n.sigma());
        assert!(dk_self <= one_cell, "dk_self={dk_self} cell={one_cell}");
    }

    #[test]
    fn sampling_follows_masses() {
        let p = pmf(-1, &[0.25, 0.5, 0.25]);
        let mut s = Stream::new(11, crate::rng::domain::MODEL_SAMPLE, 0);
        let mut counts = [0u32; 3];
        for _ in 0..40_000 {
            counts[(p.sample(&mut s) + 1) as usize] += 1;
        }
        assert!((counts[1] as f64 / 40_000.0 - 0.5).abs() < 0.02);
    }

    #[test]
    fn serde_round_trip_and_validation() {
        let p = pmf(2, &[0.25, 0.75]);
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"offset":2,"probs":[0.25,0.75]}"#);
        let back: IntegerPmf<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let bad: std::result::Result<IntegerPmf<f64>, _> =
            serde_json::from_str(r#"{"offset":0,"probs":[0.3,0.3]}"#);
        assert!(bad.is_err());
    }

    proptest! {
        // tv is a metric: symmetry, identity, triangle inequality.
        #[test]
        fn tv_is_a_metric(
            wa in prop::collection::vec(0.0f64..1.0, 1..8),
            wb in prop::collection::vec(0.0f64..1.0, 1..8),
            wc in prop::collection::vec(0.0f64..1.0, 1..8),
            oa in -3i64..3, ob in -3i64..3, oc in -3i64..3,
        ) {
            let norm = |mut w: Vec<f64>, o: i64| {
                let s: f64 = w.iter().sum();
                if s == 0.0 { w[0] = 1.0; }
                let s: f64 = w.iter().sum();
                for x in w.iter_mut() { *x /= s; }
                IntegerPmf::new(o, w).unwrap()
            };
            let (pa, pb, pc) = (norm(wa, oa), norm(wb, ob), norm(wc, oc));
            prop_assert!((tv(&pa, &pb) - tv(&pb, &pa)).abs() < 1e-14);
            prop_assert!(tv(&pa, &pa) == 0.0);
            prop_assert!(tv(&pa, &pc) <= tv(&pa, &pb) + tv(&pb, &pc) + 1e-14);
            prop_assert!(tv(&pa, &pb) <= 1.0 + 1e-14);
        }

        // For a unimodal pmf the shift-TV telescopes to the modal mass.
        #[test]
        fn unimodal_shift_tv_is_modal_probability(n in 1u64..40, p in 0.05f64..0.95) {
            let b = binomial_pmf(n, p).unwrap();
            let modal = b.probs().iter().cloned().fold(0.0f64, f64::max);
            prop_assert!((shift_tv_exact(&b) - modal).abs() < 1e-12);
        }

        // shift_tv agrees with tv against the shifted law by construction.
        #[test]
        fn shift_tv_consistency(n in 1u64..30, p in 0.1f64..0.9) {
            let b = binomial_pmf(n, p).unwrap();
            prop_assert_eq!(shift_tv_exact(&b), tv(&b, &b.shift(1)));
        }
    }
}
