//! Diagnostic solver for the discretized-normal Stein equation.
//!
//! For a 0/1-valued test function `h` that is constant on every cell
//! `[z - 1/2, z + 1/2)`, the equation
//!
//! `sigma^2 f'(s) - (s - mu) f(s) = h(s) - E h(Z)`, `Z ~ N(mu, sigma^2)`
//!
//! has a bounded solution with `||f|| <= sqrt(pi/2)/sigma` and
//! `||f'|| <= 2/sigma^2`. The solver tabulates
//! `f(s) = F(s) / (sigma^2 phi(s))` where `F` integrates
//! `phi(w)(h(w) - Eh)` from the side of decaying Gaussian weight
//! (left of the mean from `-inf`, right of the mean from `+inf`), so the
//! exponential never overflows. Cell integrals are exact Gaussian masses;
//! only the partial cell at `s` needs a CDF difference.

use crate::normal::{dnormal_pmf_table, std_normal_pdf, NormalParams};
use crate::real::{cast, Real};
use crate::{Error, Result};

/// Tabulated Stein-equation solution with its sup norms and the norms'
/// theoretical caps.
#[derive(Debug, Clone)]
pub struct SteinSolution<R> {
    pub xs: Vec<R>,
    pub f: Vec<R>,
    pub f_prime: Vec<R>,
    pub sup_f: R,
    pub sup_f_prime: R,
    /// `sqrt(pi/2) / sigma`.
    pub f_norm_cap: R,
    /// `2 / sigma^2`.
    pub f_prime_norm_cap: R,
}

/// Solve the Stein equation for `h` on a grid of the given step over
/// `[mu - 8 sigma, mu + 8 sigma]`.
///
/// `h` must be 0/1-valued and constant on integer-centered half-open
/// cells; this is validated on the grid and is an error otherwise.
pub fn stein_solution<R: Real>(
    h: impl Fn(R) -> R,
    params: &NormalParams<R>,
    grid_step: R,
) -> Result<SteinSolution<R>> {
    if !(grid_step > R::zero()) || !grid_step.is_finite() {
        return Err(Error::InvalidParam(format!("grid step must be positive, got {grid_step}")));
    }
    let sigma = params.sigma();
    let sigma2 = params.sigma2;
    let half = cast::<R>(0.5);

    // Exact cell masses over a support wide enough that the omitted tail
    // is negligible against the diagnostic tolerance.
    let table = dnormal_pmf_table(params, cast(1e-14))?;
    let pmf = table.pmf().clone();
    let lo = pmf.min_z();
    let cell_of = |x: R| -> i64 {
        let z = (x + half).floor().to_i64().unwrap();
        z.clamp(lo, pmf.max_z())
    };

    // Validate h and read its cell values.
    let h_at_cell: Vec<R> = (lo..=pmf.max_z())
        .map(|z| h(R::from_i64(z).unwrap()))
        .collect();
    for (i, &v) in h_at_cell.iter().enumerate() {
        if v != R::zero() && v != R::one() {
            return Err(Error::StepFunction(format!(
                "h({}) = {v}, not 0/1-valued",
                lo + i as i64
            )));
        }
    }

    let e_h: R = {
        let terms: Vec<R> = h_at_cell
            .iter()
            .zip(pmf.probs())
            .map(|(&hv, &p)| hv * p)
            .collect();
        crate::numeric::pairwise_sum(&terms)
    };

    // Prefix/suffix sums of (h - Eh) * cell mass, inclusive of the cell.
    let centered: Vec<R> = h_at_cell
        .iter()
        .zip(pmf.probs())
        .map(|(&hv, &p)| (hv - e_h) * p)
        .collect();
    let mut prefix = vec![R::zero(); centered.len()];
    let mut acc = R::zero();
    for (i, &c) in centered.iter().enumerate() {
        acc += c;
        prefix[i] = acc;
    }
    let mut suffix = vec![R::zero(); centered.len()];
    acc = R::zero();
    for (i, &c) in centered.iter().enumerate().rev() {
        acc += c;
        suffix[i] = acc;
    }

    let span = cast::<R>(8.0) * sigma;
    let mut xs = Vec::new();
    let mut x = params.mu - span;
    while x <= params.mu + span {
        xs.push(x);
        x += grid_step;
    }

    let mut f = Vec::with_capacity(xs.len());
    let mut f_prime = Vec::with_capacity(xs.len());
    let mut sup_f = R::zero();
    let mut sup_fp = R::zero();
    for &x in &xs {
        let hx = h(x);
        let z = cell_of(x);
        let iz = (z - lo) as usize;
        if hx != h_at_cell[iz] {
            return Err(Error::StepFunction(format!(
                "h is not constant on the cell of {x}"
            )));
        }
        let h_dev = h_at_cell[iz] - e_h;
        let zr = R::from_i64(z).unwrap();
        let big_f = if x <= params.mu {
            // F(x) = sum over full cells below z, plus the partial cell.
            let below = if iz > 0 { prefix[iz - 1] } else { R::zero() };
            below + h_dev * (params.cdf(x) - params.cdf(zr - half))
        } else {
            // F(x) = -int_x^inf: full cells above z plus the partial cell.
            let above = if iz + 1 < centered.len() { suffix[iz + 1] } else { R::zero() };
            -(above + h_dev * (params.sf(x) - params.sf(zr + half)))
        };
        let density = std_normal_pdf((x - params.mu) / sigma) / sigma;
        let fx = big_f / (sigma2 * density);
        let fpx = ((x - params.mu) * fx + h_dev) / sigma2;
        sup_f = sup_f.max(fx.abs());
        sup_fp = sup_fp.max(fpx.abs());
        f.push(fx);
        f_prime.push(fpx);
    }

    Ok(SteinSolution {
        xs,
        f,
        f_prime,
        sup_f,
        sup_f_prime: sup_fp,
        f_norm_cap: cast::<R>((std::f64::consts::PI / 2.0).sqrt()) / sigma,
        f_prime_norm_cap: cast::<R>(2.0) / sigma2,
    })
}

/// Indicator of the even integers as a cell-constant step function.
pub fn even_indicator<R: Real>(x: R) -> R {
    let half = cast::<R>(0.5);
    let z = (x + half).floor().to_i64().unwrap_or(0);
    if z % 2 == 0 {
        R::one()
    } else {
        R::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_one_test_functions_give_zero_solution() {
        let p = NormalParams::new(0.0f64, 1.0).unwrap();
        let s = stein_solution(|_| 0.0, &p, 1e-2).unwrap();
        assert!(s.sup_f < 1e-12, "sup_f = {}", s.sup_f);
        let s = stein_solution(|_| 1.0, &p, 1e-2).unwrap();
        // Eh misses only the truncated tail mass.
        assert!(s.sup_f < 1e-10, "sup_f = {}", s.sup_f);
    }

    #[test]
    fn even_indicator_norms_within_caps() {
        let p = NormalParams::new(0.0f64, 4.0).unwrap();
        let s = stein_solution(even_indicator, &p, 1e-3).unwrap();
        assert!(s.sup_f <= s.f_norm_cap * (1.0 + 1e-6), "{} vs {}", s.sup_f, s.f_norm_cap);
        assert!(
            s.sup_f_prime <= s.f_prime_norm_cap * (1.0 + 1e-6),
            "{} vs {}",
            s.sup_f_prime,
            s.f_prime_norm_cap
        );
        assert!(s.sup_f > 0.0);
    }

    #[test]
    fn solution_satisfies_the_ode_via_central_differences() {
        let p = NormalParams::new(0.5f64, 2.25).unwrap();
        let s = stein_solution(even_indicator, &p, 1e-3).unwrap();
        // Derivative check away from the half-integer jump points.
        let step = 1e-3;
        let mut checked = 0;
        for i in 1..s.xs.len() - 1 {
            let x = s.xs[i];
            let frac = (x - x.floor()).abs();
            // keep clear of cell boundaries at .5
            if (frac - 0.5).abs() < 0.05 || frac < 0.05 || frac > 0.95 {
                continue;
            }
            let numeric = (s.f[i + 1] - s.f[i - 1]) / (2.0 * step);
            assert!(
                (numeric - s.f_prime[i]).abs() < 1e-4,
                "x={x}: numeric {numeric} vs analytic {}",
                s.f_prime[i]
            );
            checked += 1;
        }
        assert!(checked > 1000);
    }

    #[test]
    fn rejects_non_step_functions() {
        let p = NormalParams::new(0.0f64, 1.0).unwrap();
        assert!(matches!(
            stein_solution(|x: f64| x, &p, 1e-2),
            Err(Error::StepFunction(_))
        ));
        assert!(matches!(
            stein_solution(|x: f64| 0.5 + 0.0 * x, &p, 1e-2),
            Err(Error::StepFunction(_))
        ));
    }
}
