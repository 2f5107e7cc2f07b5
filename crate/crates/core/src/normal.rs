//! Normal CDF and the discretized normal distribution.
//!
//! The discretized normal `N^d(mu, sigma^2)` is supported on the integers
//! with mass at `z` equal to `P(z - 1/2 <= Z < z + 1/2)` for
//! `Z ~ N(mu, sigma^2)`.
//!
//! `Phi` is evaluated through Cody's rational Chebyshev approximations for
//! `erf`/`erfc` (the classical three-interval scheme with the split
//! exponential), giving absolute error well below `1e-12` in `f64`. Tail
//! masses are always formed from the complementary CDF on the decaying
//! side, so pmf values never suffer `1 - (1 - tiny)` cancellation.

use serde::{Deserialize, Serialize};

use crate::pmf::IntegerPmf;
use crate::real::{cast, Real};
use crate::{Error, Result};

const THRESH: f64 = 0.46875;
const INV_SQRT_PI: f64 = 0.564_189_583_547_756_28;

const A: [f64; 5] = [
    3.16112374387056560e0,
    1.13864154151050156e2,
    3.77485237685302021e2,
    3.20937758913846947e3,
    1.85777706184603153e-1,
];
const B: [f64; 4] = [
    2.36012909523441209e1,
    2.44024637934444173e2,
    1.28261652607737228e3,
    2.84423683343917062e3,
];
const C: [f64; 9] = [
    5.64188496988670089e-1,
    8.88314979438837594e0,
    6.61191906371416295e1,
    2.98635138197400131e2,
    8.81952221241769090e2,
    1.71204761263407058e3,
    2.05107837782607147e3,
    1.23033935479799725e3,
    2.15311535474403846e-8,
];
const D: [f64; 8] = [
    1.57449261107098347e1,
    1.17693950891312499e2,
    5.37181101862009858e2,
    1.62138957456669019e3,
    3.29079923573345963e3,
    4.36261909014324716e3,
    3.43936767414372164e3,
    1.23033935480374942e3,
];
const P: [f64; 6] = [
    3.05326634961232344e-1,
    3.60344899949804439e-1,
    1.25781726111229246e-1,
    1.60837851487422766e-2,
    6.58749161529837803e-4,
    1.63153871373020978e-2,
];
const Q: [f64; 5] = [
    2.56852019228982242e0,
    1.87295284992346047e0,
    5.27905102951428412e-1,
    6.05183413124413191e-2,
    2.33520497626869185e-3,
];

/// `erf` on `|x| <= 0.46875` (rational approximation in `x^2`).
fn erf_small<R: Real>(x: R) -> R {
    let z = x * x;
    let mut num = cast::<R>(A[4]) * z;
    let mut den = z;
    for i in 0..3 {
        num = (num + cast(A[i])) * z;
        den = (den + cast(B[i])) * z;
    }
    x * (num + cast(A[3])) / (den + cast(B[3]))
}

/// `exp(-y^2)` via the split `y^2 = ysq^2 + (y - ysq)(y + ysq)` with `ysq`
/// a multiple of 1/16, preserving relative accuracy for large `y`.
fn exp_neg_square<R: Real>(y: R) -> R {
    let sixteen = cast::<R>(16.0);
    let ysq = (y * sixteen).trunc() / sixteen;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

/// `erfc` on `0.46875 < y <= 4`.
fn erfc_mid<R: Real>(y: R) -> R {
    let mut num = cast::<R>(C[8]) * y;
    let mut den = y;
    for i in 0..7 {
        num = (num + cast(C[i])) * y;
        den = (den + cast(D[i])) * y;
    }
    exp_neg_square(y) * (num + cast(C[7])) / (den + cast(D[7]))
}

/// `erfc` on `y > 4`.
fn erfc_far<R: Real>(y: R) -> R {
    // erfc underflows past ~26.54 in f64; cut off before exp(-y^2) does.
    if y > cast(26.6) {
        return R::zero();
    }
    let z = R::one() / (y * y);
    let mut num = cast::<R>(P[5]) * z;
    let mut den = z;
    for i in 0..4 {
        num = (num + cast(P[i])) * z;
        den = (den + cast(Q[i])) * z;
    }
    let r = z * (num + cast(P[4])) / (den + cast(Q[4]));
    exp_neg_square(y) * (cast::<R>(INV_SQRT_PI) - r) / y
}

/// Error function.
pub fn erf<R: Real>(x: R) -> R {
    let y = x.abs();
    if y <= cast(THRESH) {
        erf_small(x)
    } else {
        let tail = if y <= cast(4.0) { erfc_mid(y) } else { erfc_far(y) };
        let mag = R::one() - tail;
        if x < R::zero() {
            -mag
        } else {
            mag
        }
    }
}

/// Complementary error function.
pub fn erfc<R: Real>(x: R) -> R {
    let y = x.abs();
    let tail = if y <= cast(THRESH) {
        R::one() - erf_small(x.abs())
    } else if y <= cast(4.0) {
        erfc_mid(y)
    } else {
        erfc_far(y)
    };
    if x < R::zero() {
        cast::<R>(2.0) - tail
    } else {
        tail
    }
}

/// Standard normal CDF `Phi(x)`, saturating to 0/1 in the far tails.
pub fn std_normal_cdf<R: Real>(x: R) -> R {
    let half = cast::<R>(0.5);
    half * erfc(-x / cast::<R>(std::f64::consts::SQRT_2))
}

/// Standard normal survival function `1 - Phi(x)`, evaluated without
/// cancellation.
pub fn std_normal_sf<R: Real>(x: R) -> R {
    let half = cast::<R>(0.5);
    half * erfc(x / cast::<R>(std::f64::consts::SQRT_2))
}

/// Standard normal density.
pub fn std_normal_pdf<R: Real>(x: R) -> R {
    let inv_sqrt_2pi = cast::<R>(0.398_942_280_401_432_7);
    inv_sqrt_2pi * (-x * x / cast::<R>(2.0)).exp()
}

/// Mean and variance of a normal law; `sigma2 > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams<R> {
    pub mu: R,
    pub sigma2: R,
}

impl<R: Real> NormalParams<R> {
    pub fn new(mu: R, sigma2: R) -> Result<Self> {
        if !mu.is_finite() || !sigma2.is_finite() || sigma2 <= R::zero() {
            return Err(Error::InvalidParam(format!(
                "normal requires finite mu and sigma2 > 0, got mu={mu}, sigma2={sigma2}"
            )));
        }
        Ok(NormalParams { mu, sigma2 })
    }

    pub fn sigma(&self) -> R {
        self.sigma2.sqrt()
    }

    /// CDF of `N(mu, sigma^2)` at `x`.
    pub fn cdf(&self, x: R) -> R {
        std_normal_cdf((x - self.mu) / self.sigma())
    }

    /// Survival function at `x`.
    pub fn sf(&self, x: R) -> R {
        std_normal_sf((x - self.mu) / self.sigma())
    }
}

/// Mass of `N^d(mu, sigma^2)` at integer `z`:
/// `Phi((z + 1/2 - mu)/sigma) - Phi((z - 1/2 - mu)/sigma)`.
///
/// The difference is taken between CDFs below the mean and between survival
/// functions above it, so both tails keep full relative accuracy. For
/// integer `mu` the value is exactly symmetric: `pmf(mu+k) == pmf(mu-k)`.
pub fn dnormal_pmf<R: Real>(params: &NormalParams<R>, z: i64) -> R {
    let sigma = params.sigma();
    let half = cast::<R>(0.5);
    let zr = R::from_i64(z).unwrap();
    let a = (zr - half - params.mu) / sigma;
    let b = (zr + half - params.mu) / sigma;
    let mass = if a + b <= R::zero() {
        std_normal_cdf(b) - std_normal_cdf(a)
    } else {
        std_normal_sf(a) - std_normal_sf(b)
    };
    mass.max(R::zero()).min(R::one())
}

/// A truncated table of `N^d(mu, sigma^2)` together with the mass omitted
/// by the truncation. The table is deliberately **not** renormalized; the
/// omitted mass is the additive slack any TV computation against the table
/// must budget for.
#[derive(Debug, Clone)]
pub struct DiscretizedTable<R> {
    pmf: IntegerPmf<R>,
    omitted: R,
}

impl<R: Real> DiscretizedTable<R> {
    pub fn pmf(&self) -> &IntegerPmf<R> {
        &self.pmf
    }

    pub fn omitted(&self) -> R {
        self.omitted
    }

    pub fn into_pmf(self) -> IntegerPmf<R> {
        self.pmf
    }
}

/// Tabulate `N^d(mu, sigma^2)` on a support `[floor(mu) - r, ceil(mu) + r]`
/// with `r` the smallest radius whose omitted tail mass is below `eps`.
///
/// The radius is capped at `max(12 sigma, 50)` integers; an `eps` not
/// reachable within the cap is an error.
pub fn dnormal_pmf_table<R: Real>(params: &NormalParams<R>, eps: R) -> Result<DiscretizedTable<R>> {
    if !(eps > R::zero() && eps < R::one()) {
        return Err(Error::InvalidParam(format!("eps must lie in (0,1), got {eps}")));
    }
    let sigma = params.sigma();
    let half = cast::<R>(0.5);
    let lo0 = params.mu.floor().to_i64().ok_or_else(|| {
        Error::InvalidParam("mu too large for integer support".to_string())
    })?;
    let hi0 = params.mu.ceil().to_i64().unwrap();

    let cap = (cast::<R>(12.0) * sigma)
        .ceil()
        .to_i64()
        .unwrap_or(i64::MAX)
        .max(50);
    let omitted_at = |r: i64| -> R {
        let lo = R::from_i64(lo0 - r).unwrap();
        let hi = R::from_i64(hi0 + r).unwrap();
        params.cdf(lo - half) + params.sf(hi + half)
    };
    if omitted_at(cap) >= eps {
        return Err(Error::EpsTooSmall {
            eps: eps.to_f64().unwrap_or(f64::NAN),
            radius: cap,
        });
    }
    // Smallest radius achieving the target, by bisection (omitted mass is
    // nonincreasing in r).
    let (mut lo_r, mut hi_r) = (0i64, cap);
    while lo_r < hi_r {
        let mid = lo_r + (hi_r - lo_r) / 2;
        if omitted_at(mid) < eps {
            hi_r = mid;
        } else {
            lo_r = mid + 1;
        }
    }
    let r = hi_r;

    let lo = lo0 - r;
    let hi = hi0 + r;
    let probs: Vec<R> = (lo..=hi).map(|z| dnormal_pmf(params, z)).collect();
    let pmf = IntegerPmf::new_sub_stochastic(lo, probs, eps)?;
    Ok(DiscretizedTable { pmf, omitted: omitted_at(r) })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from a 40-digit erf evaluation.
    #[test]
    fn cdf_reference_values() {
        assert!((std_normal_cdf(0.0f64) - 0.5).abs() < 1e-15);
        assert!((std_normal_cdf(0.5f64) - 0.691_462_461_274_013_1).abs() < 1e-13);
        assert!((std_normal_cdf(-1.75f64) - 0.040_059_156_863_817_09).abs() < 1e-13);
        assert!((std_normal_cdf(3.2f64) - 0.999_312_862_062_084_15).abs() < 1e-13);
        let tail = std_normal_cdf(-8.0f64);
        assert!((tail - 6.220_960_574_271_784e-16).abs() < 1e-27);
    }

    #[test]
    fn erf_reference_values() {
        assert!((erf(0.3f64) - 0.328_626_759_459_127_43).abs() < 1e-14);
        assert!((erf(1.0f64) - 0.842_700_792_949_714_87).abs() < 1e-14);
        assert!((erfc(2.5f64) - 4.069_520_174_449_589_4e-4).abs() < 1e-16);
        let far = erfc(6.0f64);
        assert!((far - 2.151_973_671_249_891_3e-17).abs() < 1e-29);
        let very_far = erfc(15.0f64);
        assert!((very_far - 7.212_994_172_451_207e-100).abs() < 1e-110);
    }

    #[test]
    fn cdf_saturates() {
        assert_eq!(std_normal_cdf(40.0f64), 1.0);
        assert_eq!(std_normal_cdf(-40.0f64), 0.0);
        assert!(std_normal_cdf(9.0f64) <= 1.0);
    }

    #[test]
    fn cdf_symmetry() {
        for &x in &[0.25f64, 1.0, 2.5, 7.0] {
            let s = std_normal_cdf(x) + std_normal_cdf(-x);
            assert!((s - 1.0).abs() < 1e-14, "x={x}: {s}");
        }
    }

    #[test]
    fn dnormal_reference_values() {
        let std = NormalParams::new(0.0f64, 1.0).unwrap();
        assert!((dnormal_pmf(&std, 0) - 0.382_924_922_548_026_2).abs() < 1e-13);
        assert!((dnormal_pmf(&std, 1) - 0.241_730_337_457_128_83).abs() < 1e-13);
        assert!((dnormal_pmf(&std, 3) - 5.977_036_246_740_61e-3).abs() < 1e-15);
        assert!(dnormal_pmf(&std, 10) < 1e-15);
        let p = NormalParams::new(3.0f64, 4.0).unwrap();
        assert!((dnormal_pmf(&p, 2) - 0.174_666_321_940_208_08).abs() < 1e-13);
    }

    #[test]
    fn dnormal_symmetry_around_integer_mean() {
        let p = NormalParams::new(3.0f64, 4.0).unwrap();
        for k in 0..12 {
            assert_eq!(
                dnormal_pmf(&p, 3 + k).to_bits(),
                dnormal_pmf(&p, 3 - k).to_bits(),
                "k={k}"
            );
        }
    }

    #[test]
    fn table_covers_requested_mass() {
        let p = NormalParams::new(0.0f64, 1.0).unwrap();
        let t = dnormal_pmf_table(&p, 1e-12).unwrap();
        let total: f64 = t.pmf().probs().iter().sum();
        assert!(total >= 1.0 - 1e-12);
        assert!(t.omitted() < 1e-12);

        let spread = NormalParams::new(2.5f64, 3.125).unwrap();
        let t = dnormal_pmf_table(&spread, 1e-12).unwrap();
        let total: f64 = t.pmf().probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_near_point_mass_for_tiny_sigma() {
        let p = NormalParams::new(0.0f64, 1e-4).unwrap();
        let t = dnormal_pmf_table(&p, 1e-12).unwrap();
        assert_eq!(t.pmf().min_z(), 0);
        assert_eq!(t.pmf().max_z(), 0);
        assert!((t.pmf().get(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_rejects_unreachable_eps() {
        let wide = NormalParams::new(0.0f64, 1.0e4).unwrap();
        let err = dnormal_pmf_table(&wide, 1e-40);
        assert!(matches!(err, Err(Error::EpsTooSmall { .. })));
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(NormalParams::new(0.0f64, 0.0).is_err());
        assert!(NormalParams::new(0.0f64, -1.0).is_err());
        assert!(NormalParams::new(f64::NAN, 1.0).is_err());
    }
}
