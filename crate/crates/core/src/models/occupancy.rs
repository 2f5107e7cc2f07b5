//! Uniform multinomial occupancy: `n` balls dropped uniformly into `m`
//! urns, `S` = number of urns holding exactly `d` balls.
//!
//! Exact moments:
//!
//! `mu = m C(n,d) m^{-d} (1 - 1/m)^{n-d}`
//! `sigma^2 = mu - mu^2 + m(m-1) C(n; d,d,n-2d) m^{-2d} (1 - 2/m)^{n-2d} I(n >= 2d)`
//!
//! both evaluated as products of binomial masses (`P(M_1 = d, M_2 = d) =
//! P(Bin(n,1/m) = d) P(Bin(n-d,1/(m-1)) = d)`), which also encodes the
//! `0^0 = 1` reading of the `(1-2/m)^{n-2d}` factor at `m = 2, n = 2d`.
//!
//! The size-bias construction conditions on the chosen urn's count
//! `M_n(I)`, redistributes `n - max(M_n(I), d)` balls over the other urns,
//! and relocates `|d - M_n(I)|` balls to bring urn `I` to exactly `d`;
//! `|S^s - S| <= |M_n(I) - d| + 1` on every draw. Conditionally on the
//! relocation record, the untouched urns form a smaller occupancy model
//! `(n_1, m_1)` whose shift-TV is evaluated exactly (DP) or by the nested
//! ball-move exchangeable pair.

use crate::coupling::{ContextKey, ExchangeablePairDraw, SizeBiasDraw, SizeBiasModel};
use crate::estimators::{rollin_ross_bound, BootstrapCfg};
use crate::pmf::{binomial_pmf, binomial_pmf_at, IntegerPmf};
use crate::rng::{domain, Stream};
use crate::{Error, Result};

/// Default side cap for the exact-pmf dynamic program.
const DP_SIDE_BUDGET: u32 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OccupancyParams {
    n: u32,
    m: u32,
    d: u32,
}

impl OccupancyParams {
    pub fn new(n: u32, m: u32, d: u32) -> Result<Self> {
        if !(n >= d && d >= 2) {
            return Err(Error::InvalidParam(format!(
                "occupancy requires n >= d >= 2, got n={n}, d={d}"
            )));
        }
        if m < 2 {
            return Err(Error::InvalidParam(format!("occupancy requires m >= 2, got m={m}")));
        }
        Ok(OccupancyParams { n, m, d })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    /// Exact `(mu, sigma^2)`.
    pub fn exact_moments(&self) -> (f64, f64) {
        let m = self.m as f64;
        let b1 = binomial_pmf_at(self.n as u64, 1.0 / m, self.d as u64)
            .expect("probability in range");
        let mu = m * b1;
        let b2 = binomial_pmf_at(
            (self.n - self.d) as u64,
            1.0 / (m - 1.0),
            self.d as u64,
        )
        .expect("probability in range");
        let pair = m * (m - 1.0) * b1 * b2;
        (mu, mu - mu * mu + pair)
    }

    /// Tally of `n` uniform ball placements.
    pub fn sample_counts(&self, stream: &mut Stream) -> Vec<u32> {
        let mut counts = vec![0u32; self.m as usize];
        for _ in 0..self.n {
            counts[stream.index(self.m as usize)] += 1;
        }
        counts
    }

    pub fn sample_s(&self, stream: &mut Stream) -> i64 {
        let d = self.d;
        self.sample_counts(stream).iter().filter(|&&c| c == d).count() as i64
    }

    /// Exact pmf of `S` by a DP over urns with state (balls used, urns at
    /// exactly `d`); urn `j` receives `Binomial(n - used, 1/(m - j))`
    /// balls given the counts so far.
    pub fn exact_pmf(&self) -> Result<IntegerPmf<f64>> {
        if self.n > DP_SIDE_BUDGET || self.m > DP_SIDE_BUDGET {
            return Err(Error::DpBudgetExceeded(format!(
                "occupancy DP limited to n, m <= {DP_SIDE_BUDGET}, got ({}, {})",
                self.n, self.m
            )));
        }
        occupancy_pmf_dims(self.n as u64, self.m, self.d)
    }

    pub fn size_bias_model(&self) -> OccupancySizeBias {
        OccupancySizeBias::new(*self)
    }

    /// Ball-move exchangeable pair on this model.
    pub fn ball_move_pair(&self, stream: &mut Stream) -> ExchangeablePairDraw {
        ball_move_pair(self.n as u64, self.m, self.d, stream)
    }

    /// The conditional sub-model `(n_1, m_1)` determined by a size-bias
    /// context: the untouched urns and the balls they hold.
    pub fn sub_model_of_context(&self, ctx: &ContextKey) -> Result<(u64, u32)> {
        match ctx {
            ContextKey::OccupancyRecord { count, relocated, touched, .. } => {
                let touched_balls: u64 = touched.iter().map(|&(_, c)| c as u64).sum();
                let n1 = (self.n as u64)
                    .saturating_sub(*count as u64)
                    .saturating_sub(touched_balls);
                let m1 = self.m - 1 - relocated.len() as u32;
                Ok((n1, m1))
            }
            other => Err(Error::ContextEval(format!("not an occupancy record: {other:?}"))),
        }
    }

    /// Exact conditional shift-TV: DP pmf of the `(n_1, m_1)` sub-model.
    /// Degenerate sub-models (fewer than 2 urns, no balls, or `n_1 < d`)
    /// have a constant conditional law, whose shift-TV is 1.
    pub fn conditional_shift_tv_exact(&self, ctx: &ContextKey) -> Result<f64> {
        let (n1, m1) = self.sub_model_of_context(ctx)?;
        if m1 < 2 || n1 < self.d as u64 {
            return Ok(1.0);
        }
        if n1 > DP_SIDE_BUDGET as u64 || m1 > DP_SIDE_BUDGET {
            return Err(Error::DpBudgetExceeded(format!(
                "conditional occupancy DP at ({n1}, {m1})"
            )));
        }
        let pmf = occupancy_pmf_dims(n1, m1, self.d)?;
        Ok(crate::pmf::shift_tv_exact(&pmf).min(1.0))
    }

    /// Nested conditional shift-TV: ball-move smoothing bound on the
    /// `(n_1, m_1)` sub-model, clamped to 1.
    pub fn conditional_shift_tv_nested(
        &self,
        ctx: &ContextKey,
        inner_samples: u64,
        seed: u64,
    ) -> Result<f64> {
        let (n1, m1) = self.sub_model_of_context(ctx)?;
        if m1 < 2 || n1 < self.d as u64 {
            return Ok(1.0);
        }
        let salt = (n1 << 20 | m1 as u64) << 24;
        let pairs: Vec<ExchangeablePairDraw> = (0..inner_samples)
            .map(|i| {
                let mut stream = Stream::new(seed, domain::NESTED, salt | i);
                ball_move_pair(n1, m1, self.d, &mut stream)
            })
            .collect();
        match rollin_ross_bound(&pairs, &BootstrapCfg { resamples: 0, seed }) {
            Ok(est) => Ok(est.value.min(1.0)),
            // No observed up-steps: the pair carries no smoothing
            // information, fall back to the trivial bound.
            Err(Error::NoUnitSteps) => Ok(1.0),
            Err(e) => Err(e),
        }
    }
}

/// Occupancy pmf for raw dimensions (sub-models may violate the
/// `n >= d` construction invariant; `d > n` is simply a point mass at 0).
pub(crate) fn occupancy_pmf_dims(n: u64, m: u32, d: u32) -> Result<IntegerPmf<f64>> {
    let n_us = n as usize;
    let m_us = m as usize;
    let d_us = d as usize;
    let cmax = if d_us == 0 { m_us + 1 } else { m_us.min(n_us / d_us) + 1 };
    // dist[balls used][urns at d]
    let mut dist = vec![vec![0.0f64; cmax + 1]; n_us + 1];
    dist[0][0] = 1.0;
    for j in 0..m_us {
        let urns_left = m_us - j;
        let mut next = vec![vec![0.0f64; cmax + 1]; n_us + 1];
        for used in 0..=n_us {
            if dist[used].iter().all(|&w| w == 0.0) {
                continue;
            }
            let left = n_us - used;
            if urns_left == 1 {
                let inc = usize::from(left == d_us);
                for c in 0..cmax {
                    let w = dist[used][c];
                    if w != 0.0 {
                        next[n_us][c + inc] += w;
                    }
                }
            } else {
                let row = binomial_pmf(left as u64, 1.0 / urns_left as f64)?;
                for k in 0..=left {
                    let pk = row.get(k as i64);
                    if pk == 0.0 {
                        continue;
                    }
                    let inc = usize::from(k == d_us);
                    for c in 0..cmax {
                        let w = dist[used][c];
                        if w != 0.0 {
                            next[used + k][c + inc] += w * pk;
                        }
                    }
                }
            }
        }
        dist = next;
    }
    IntegerPmf::new(0, dist[n_us][..cmax].to_vec())
}

/// One ball-move step on a fresh `Multinomial(n, m)` tally: a uniformly
/// chosen ball moves to a uniformly chosen urn, changing at most two urn
/// counts, so `|V - V'| <= 2`.
pub fn ball_move_pair(n: u64, m: u32, d: u32, stream: &mut Stream) -> ExchangeablePairDraw {
    let m_us = m as usize;
    let mut counts = vec![0u32; m_us];
    for _ in 0..n {
        counts[stream.index(m_us)] += 1;
    }
    let v = counts.iter().filter(|&&c| c == d).count() as i64;
    if n == 0 {
        return ExchangeablePairDraw { v, v_prime: v };
    }
    // Pick the ball: urn j with probability counts[j]/n.
    let ball = stream.below(n);
    let mut acc = 0u64;
    let mut from = 0usize;
    for (j, &c) in counts.iter().enumerate() {
        acc += c as u64;
        if ball < acc {
            from = j;
            break;
        }
    }
    let to = stream.index(m_us);
    let v_prime = if from == to {
        v
    } else {
        let delta = |c: u32, c2: u32| i64::from(c2 == d) - i64::from(c == d);
        v + delta(counts[from], counts[from] - 1) + delta(counts[to], counts[to] + 1)
    };
    ExchangeablePairDraw { v, v_prime }
}

/// The size-bias coupling construction.
#[derive(Debug, Clone)]
pub struct OccupancySizeBias {
    params: OccupancyParams,
    urn_count_law: IntegerPmf<f64>,
}

impl OccupancySizeBias {
    pub fn new(params: OccupancyParams) -> Self {
        let urn_count_law = binomial_pmf(params.n as u64, 1.0 / params.m as f64)
            .expect("valid binomial parameters");
        OccupancySizeBias { params, urn_count_law }
    }

    pub fn params(&self) -> &OccupancyParams {
        &self.params
    }

    fn assemble(
        &self,
        urn: u32,
        k: u32,
        others_main: &[u32],
        relocation: &[u32],
    ) -> SizeBiasDraw {
        let d = self.params.d;
        let below = k < d;
        let above = k > d;
        let mut s = i64::from(k == d);
        let mut s_biased = 1i64;
        let mut relocated = Vec::new();
        let mut touched = Vec::new();
        for (j, (&base, &r)) in others_main.iter().zip(relocation).enumerate() {
            let real = base + if below { r } else { 0 };
            let biased = base + if above { r } else { 0 };
            s += i64::from(real == d);
            s_biased += i64::from(biased == d);
            if r > 0 {
                let label = if (j as u32) < urn { j as u32 } else { j as u32 + 1 };
                relocated.push((label, r));
                touched.push((label, real));
            }
        }
        debug_assert!(
            (s_biased - s).abs() <= (k as i64 - d as i64).abs() + 1,
            "displacement bound violated: s={s} s^s={s_biased} k={k} d={d}"
        );
        SizeBiasDraw {
            s,
            s_biased,
            context: ContextKey::OccupancyRecord { urn, count: k, relocated, touched },
        }
    }
}

impl SizeBiasModel for OccupancySizeBias {
    fn mean(&self) -> f64 {
        self.params.exact_moments().0
    }

    fn draw(&self, stream: &mut Stream) -> SizeBiasDraw {
        let m = self.params.m as usize;
        let d = self.params.d;
        let urn = stream.index(m) as u32;
        let k = self.urn_count_law.sample(stream) as u32;
        let spread = |t: u32, stream: &mut Stream| {
            let mut counts = vec![0u32; m - 1];
            for _ in 0..t {
                counts[stream.index(m - 1)] += 1;
            }
            counts
        };
        let others_main = spread(self.params.n - k.max(d), stream);
        let relocation = spread(k.abs_diff(d), stream);
        self.assemble(urn, k, &others_main, &relocation)
    }

    fn enumerate(&self) -> Option<Vec<(f64, SizeBiasDraw)>> {
        let m = self.params.m as usize;
        let n = self.params.n;
        let d = self.params.d;
        // Rough feasibility: compositions grow as C(t + m - 2, m - 2).
        let comp_count = |t: u32| -> f64 {
            let k = m - 1;
            let mut c = 1.0f64;
            for i in 0..k.saturating_sub(1) {
                c *= (t as f64 + 1.0 + i as f64) / (1.0 + i as f64);
            }
            c
        };
        let worst = m as f64 * (n as f64 + 1.0) * comp_count(n) * comp_count(d.max(2));
        if worst > 2.0e6 {
            return None;
        }
        let mut out = Vec::new();
        for urn in 0..m as u32 {
            let w_urn = 1.0 / m as f64;
            for k in 0..=n {
                let w_k = self.urn_count_law.get(k as i64);
                if w_k == 0.0 {
                    continue;
                }
                let mains = compositions(n - k.max(d), m - 1);
                let relocations = compositions(k.abs_diff(d), m - 1);
                for (w_main, main) in &mains {
                    for (w_r, r) in &relocations {
                        out.push((
                            w_urn * w_k * w_main * w_r,
                            self.assemble(urn, k, main, r),
                        ));
                    }
                }
            }
        }
        Some(out)
    }
}

/// All ways to drop `t` unlabeled balls into `k` urns, with the
/// multinomial probability of each count vector.
fn compositions(t: u32, k: usize) -> Vec<(f64, Vec<u32>)> {
    fn factorial(x: u32) -> f64 {
        (1..=x as u64).map(|v| v as f64).product()
    }
    let mut out = Vec::new();
    let mut current = vec![0u32; k];
    fn rec(
        slot: usize,
        left: u32,
        k: usize,
        current: &mut Vec<u32>,
        out: &mut Vec<(f64, Vec<u32>)>,
        t: u32,
    ) {
        if slot == k - 1 {
            current[slot] = left;
            let mut coeff = factorial(t);
            for &c in current.iter() {
                coeff /= factorial(c);
            }
            let weight = coeff / (k as f64).powi(t as i32);
            out.push((weight, current.clone()));
            return;
        }
        for take in 0..=left {
            current[slot] = take;
            rec(slot + 1, left - take, k, current, out, t);
        }
    }
    rec(0, t, k, &mut current, &mut out, t);
    out
}
