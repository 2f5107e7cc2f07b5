//! Application models: 2-runs in a Bernoulli cycle, degree counts in the
//! Erdos-Renyi graph, uniform multinomial occupancy, and a binomial
//! reference model.
//!
//! Each model supplies exact moments, stream-keyed samplers, coupling
//! constructions, exact pmfs where a DP or enumeration is feasible, and a
//! conditional shift-TV evaluator in the modes it supports.

pub mod binomial_ref;
pub mod er_degree;
pub mod occupancy;
pub mod two_runs;

pub use binomial_ref::BinomialRefParams;
pub use er_degree::ErdosRenyiDegreeParams;
pub use occupancy::OccupancyParams;
pub use two_runs::TwoRunsParams;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How a model evaluates its conditional shift-TV term
/// `d_TV(L(S|F), L(S+1|F))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CondMode {
    /// Enumerate or DP the conditional pmf exactly.
    Exact,
    /// Closed-form bound (2-runs only).
    Analytic,
    /// Nested exchangeable-pair estimate on the conditional model.
    Nested,
}

/// Parameter record for any shipped model; the JSON wire format is
/// `{"model": "<name>", ...params}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    TwoRuns { n: u32, p: f64 },
    ErDegree { n: u32, theta: f64, d: u32 },
    Occupancy { n: u32, m: u32, d: u32 },
    BinomialRef { n: u32, p: f64 },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::TwoRuns { .. } => "two_runs",
            ModelSpec::ErDegree { .. } => "er_degree",
            ModelSpec::Occupancy { .. } => "occupancy",
            ModelSpec::BinomialRef { .. } => "binomial_ref",
        }
    }

    /// The leading size parameter `n`.
    pub fn size(&self) -> u32 {
        match *self {
            ModelSpec::TwoRuns { n, .. }
            | ModelSpec::ErDegree { n, .. }
            | ModelSpec::Occupancy { n, .. }
            | ModelSpec::BinomialRef { n, .. } => n,
        }
    }

    /// The same model rescaled to size `n`. Occupancy keeps its ball/urn
    /// ratio; the other models replace `n` directly.
    pub fn with_size(&self, n: u32) -> ModelSpec {
        match *self {
            ModelSpec::TwoRuns { p, .. } => ModelSpec::TwoRuns { n, p },
            ModelSpec::ErDegree { theta, d, .. } => ModelSpec::ErDegree { n, theta, d },
            ModelSpec::Occupancy { n: n0, m: m0, d } => {
                let m = ((n as f64 * m0 as f64 / n0 as f64).round() as u32).max(2);
                ModelSpec::Occupancy { n, m, d }
            }
            ModelSpec::BinomialRef { p, .. } => ModelSpec::BinomialRef { n, p },
        }
    }

    /// Validate all parameter invariants by constructing the typed record.
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::TwoRuns { n, p } => TwoRunsParams::new(n, p).map(drop),
            ModelSpec::ErDegree { n, theta, d } => {
                ErdosRenyiDegreeParams::new(n, theta, d).map(drop)
            }
            ModelSpec::Occupancy { n, m, d } => OccupancyParams::new(n, m, d).map(drop),
            ModelSpec::BinomialRef { n, p } => BinomialRefParams::new(n, p).map(drop),
        }
    }

    /// Parameters as a compact JSON object (without the tag).
    pub fn param_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("model serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("model");
        }
        serde_json::to_string(&v).expect("model serializes")
    }
}

pub(crate) fn check_prob_open(p: f64, what: &str) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) || !p.is_finite() {
        return Err(Error::InvalidParam(format!(
            "{what} must lie strictly inside (0,1), got {p}"
        )));
    }
    Ok(p)
}
