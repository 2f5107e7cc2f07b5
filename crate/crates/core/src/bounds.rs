//! Term-by-term evaluators for the total variation bounds.
//!
//! Each evaluator takes assembled ingredients and produces a
//! [`BoundReport`] whose total is the exact sum of its terms. Standard
//! errors propagate by the first-order delta method (linear maps and
//! square roots); a term whose SE exceeds half its value is flagged
//! unstable rather than silently trusted.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::estimators::{BoundIngredients, EstimateWithError};
use crate::pmf::{shift_tv_exact, IntegerPmf};
use crate::{Error, Result};

/// Which bound a report evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    #[serde(rename = "theorem-main")]
    TheoremMain,
    #[serde(rename = "local-dep")]
    LocalDep,
    #[serde(rename = "exch")]
    Exchangeable,
    #[serde(rename = "exch-unit")]
    ExchangeableUnit,
    #[serde(rename = "size-bias")]
    SizeBias,
    #[serde(rename = "indep-sum-shift")]
    IndepSumShift,
}

/// One labeled term of an evaluated bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundTerm {
    pub label: String,
    #[serde(flatten)]
    pub estimate: EstimateWithError,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unstable: bool,
}

impl BoundTerm {
    fn new(label: &str, estimate: EstimateWithError) -> Self {
        let unstable = !estimate.exact
            && estimate.std_error > 0.0
            && 2.0 * estimate.std_error > estimate.value;
        BoundTerm { label: label.to_string(), estimate, unstable }
    }
}

/// Per-term breakdown of an evaluated TV bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub which: BoundKind,
    pub terms: Vec<BoundTerm>,
    pub total: EstimateWithError,
}

impl BoundReport {
    fn assemble(which: BoundKind, terms: Vec<BoundTerm>) -> Self {
        let value = terms.iter().map(|t| t.estimate.value).sum();
        let se = terms
            .iter()
            .map(|t| t.estimate.std_error * t.estimate.std_error)
            .sum::<f64>()
            .sqrt();
        let exact = terms.iter().all(|t| t.estimate.exact);
        let n = terms.iter().map(|t| t.estimate.n_samples).max().unwrap_or(0);
        BoundReport {
            which,
            terms,
            total: EstimateWithError { value, std_error: se, n_samples: n, exact },
        }
    }

    pub fn term(&self, label: &str) -> Option<&EstimateWithError> {
        self.terms.iter().find(|t| t.label == label).map(|t| &t.estimate)
    }
}

fn require_sigma2(sigma2: f64) -> Result<f64> {
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParam(format!("sigma2 must be positive, got {sigma2}")));
    }
    Ok(sigma2)
}

/// Main coupling bound:
///
/// `2 sqrt(Var E(GD|S)) / sigma^2 + sqrt(pi/8) E|GD^2| / sigma^3
///  + sqrt(E G^2 D^4) / sigma^3 + E[(|GD^2|+|GD|) shiftTV(S|F)] / (2 sigma^2)`.
pub fn theorem_bound(ing: &BoundIngredients) -> Result<BoundReport> {
    let sigma2 = require_sigma2(ing.sigma2)?;
    let sigma3 = sigma2 * sigma2.sqrt();
    let t1 = ing.var_cond_gd.sqrt_delta().scaled(2.0 / sigma2);
    let t2 = ing.e_abs_gd2.scaled((PI / 8.0).sqrt() / sigma3);
    let t3 = ing.e_g2d4.sqrt_delta().scaled(1.0 / sigma3);
    let t4 = ing.cond_shift_term.scaled(0.5 / sigma2);
    Ok(BoundReport::assemble(
        BoundKind::TheoremMain,
        vec![
            BoundTerm::new("t1_cond_var", t1),
            BoundTerm::new("t2_gd2", t2),
            BoundTerm::new("t3_g2d4", t3),
            BoundTerm::new("t4_cond_shift", t4),
        ],
    ))
}

/// Ingredients of the local-dependence corollary, in the normalized
/// variables `xi_i = (X_i - mu_i)/sigma`, `eta_i = sum_{A_i}(X_j - mu_j)/sigma`.
#[derive(Debug, Clone)]
pub struct LocalDepIngredients {
    pub n: usize,
    /// Neighborhood-overlap count: `|{j : A_j meets B_i}| <= theta` for all `i`.
    pub theta: usize,
    pub sigma: f64,
    /// `sum_i E xi_i^2 eta_i^2`.
    pub sum_xi2_eta2: EstimateWithError,
    /// `sum_i E |xi_i eta_i^2|`.
    pub sum_abs_xi_eta2: EstimateWithError,
    /// `sum_i E xi_i^2 eta_i^4`.
    pub sum_xi2_eta4: EstimateWithError,
    /// `sum_i E[(|xi_i eta_i| + sigma E|xi_i eta_i^2|) shiftTV(S|F_i)]`.
    pub cond_term: EstimateWithError,
}

/// Local-dependence corollary:
///
/// `2 sqrt(theta sum E xi^2 eta^2) + sqrt(pi/8) sum E|xi eta^2|
///  + sqrt(n sum E xi^2 eta^4) + cond_term / 2`.
pub fn local_dependence_bound(ing: &LocalDepIngredients) -> Result<BoundReport> {
    if ing.theta < 1 {
        return Err(Error::InvalidParam("theta must be at least 1".to_string()));
    }
    if !(ing.sigma > 0.0) {
        return Err(Error::InvalidParam("sigma must be positive".to_string()));
    }
    let t1 = ing.sum_xi2_eta2.scaled(ing.theta as f64).sqrt_delta().scaled(2.0);
    let t2 = ing.sum_abs_xi_eta2.scaled((PI / 8.0).sqrt());
    let t3 = ing.sum_xi2_eta4.scaled(ing.n as f64).sqrt_delta();
    let t4 = ing.cond_term.scaled(0.5);
    Ok(BoundReport::assemble(
        BoundKind::LocalDep,
        vec![
            BoundTerm::new("t1_theta_xi2eta2", t1),
            BoundTerm::new("t2_xi_eta2", t2),
            BoundTerm::new("t3_n_xi2eta4", t3),
            BoundTerm::new("t4_cond_shift", t4),
        ],
    ))
}

fn require_lambda(ing: &BoundIngredients) -> Result<f64> {
    match ing.lambda {
        Some(l) if l > 0.0 => Ok(l),
        Some(l) => Err(Error::InvalidParam(format!("lambda must be positive, got {l}"))),
        None => Err(Error::MissingIngredient("lambda")),
    }
}

/// Exchangeable-pair corollary under the approximate linearity condition
/// `E(S - S'|S) = lambda (S - mu) + sigma E(R|S)`.
pub fn exchangeable_bound(ing: &BoundIngredients) -> Result<BoundReport> {
    let sigma2 = require_sigma2(ing.sigma2)?;
    let lambda = require_lambda(ing)?;
    let sigma3 = sigma2 * sigma2.sqrt();
    let e_r2 = ing.e_r2.ok_or(Error::MissingIngredient("e_r2"))?;
    let var_d2 = ing.var_cond_d2.ok_or(Error::MissingIngredient("var_cond_d2"))?;
    let abs_d = ing.abs_d.ok_or(Error::MissingIngredient("abs_d moments"))?;
    let cond = ing
        .cond_shift_pair
        .ok_or(Error::MissingIngredient("cond_shift_pair"))?;
    let t1 = e_r2.sqrt_delta().scaled(((PI / 2.0).sqrt() + 2.0) / lambda);
    let t2 = var_d2.sqrt_delta().scaled(1.0 / (lambda * sigma2));
    let t3 = abs_d.k3.scaled((PI / 8.0).sqrt() / (2.0 * lambda * sigma3));
    let t4 = abs_d.k6.sqrt_delta().scaled(1.0 / (2.0 * lambda * sigma3));
    let t5 = cond.scaled(1.0 / (4.0 * lambda * sigma2));
    Ok(BoundReport::assemble(
        BoundKind::Exchangeable,
        vec![
            BoundTerm::new("t1_linearity_r", t1),
            BoundTerm::new("t2_cond_var_d2", t2),
            BoundTerm::new("t3_d3", t3),
            BoundTerm::new("t4_d6", t4),
            BoundTerm::new("t5_cond_shift", t5),
        ],
    ))
}

/// Unit-step exchangeable-pair corollary (`|S - S'| <= 1`): the
/// conditional shift term collapses into the closed smoothing constant
/// `(sqrt(pi/8) + 1) / (2 lambda sigma^3)`.
pub fn unit_step_exchangeable_bound(ing: &BoundIngredients) -> Result<BoundReport> {
    if !ing.unit_step {
        return Err(Error::NotUnitStep);
    }
    let sigma2 = require_sigma2(ing.sigma2)?;
    let lambda = require_lambda(ing)?;
    let sigma3 = sigma2 * sigma2.sqrt();
    let e_r2 = ing.e_r2.ok_or(Error::MissingIngredient("e_r2"))?;
    let var_d2 = ing.var_cond_d2.ok_or(Error::MissingIngredient("var_cond_d2"))?;
    let t1 = e_r2.sqrt_delta().scaled(((PI / 2.0).sqrt() + 2.0) / lambda);
    let t2 = var_d2.sqrt_delta().scaled(1.0 / (lambda * sigma2));
    let t3 = EstimateWithError::exact(((PI / 8.0).sqrt() + 1.0) / (2.0 * lambda * sigma3), 0);
    Ok(BoundReport::assemble(
        BoundKind::ExchangeableUnit,
        vec![
            BoundTerm::new("t1_linearity_r", t1),
            BoundTerm::new("t2_cond_var_d2", t2),
            BoundTerm::new("t3_smoothing", t3),
        ],
    ))
}

/// Size-bias corollary for `(S, S^s, mu)`:
///
/// `2 mu sqrt(Var E(S^s - S|S)) / sigma^2 + sqrt(pi/8) mu E|S^s-S|^2 / sigma^3
///  + mu sqrt(E|S^s-S|^4) / sigma^3 + mu E[(|S^s-S|^2 + |S^s-S|) shiftTV] / (2 sigma^2)`.
pub fn size_bias_bound(ing: &BoundIngredients) -> Result<BoundReport> {
    let sigma2 = require_sigma2(ing.sigma2)?;
    if !(ing.mu > 0.0) {
        return Err(Error::ZeroMean);
    }
    let mu = ing.mu;
    let sigma3 = sigma2 * sigma2.sqrt();
    let var_d = ing.var_cond_d.ok_or(Error::MissingIngredient("var_cond_d"))?;
    let abs_d = ing.abs_d.ok_or(Error::MissingIngredient("abs_d moments"))?;
    let cond = ing
        .cond_shift_size_bias
        .ok_or(Error::MissingIngredient("cond_shift_size_bias"))?;
    let t1 = var_d.sqrt_delta().scaled(2.0 * mu / sigma2);
    let t2 = abs_d.k2.scaled((PI / 8.0).sqrt() * mu / sigma3);
    let t3 = abs_d.k4.sqrt_delta().scaled(mu / sigma3);
    let t4 = cond.scaled(mu / (2.0 * sigma2));
    Ok(BoundReport::assemble(
        BoundKind::SizeBias,
        vec![
            BoundTerm::new("t1_cond_var", t1),
            BoundTerm::new("t2_d2", t2),
            BoundTerm::new("t3_d4", t3),
            BoundTerm::new("t4_cond_shift", t4),
        ],
    ))
}

/// Shift-TV bound for a sum of independent integer variables:
/// `sqrt(8 / sum_i (1 - shiftTV(L(X_i))))`.
pub fn independent_sum_shift_bound(marginals: &[IntegerPmf<f64>]) -> Result<f64> {
    if marginals.is_empty() {
        return Err(Error::EmptyInput("need at least one marginal"));
    }
    let mass: f64 = marginals.iter().map(|m| 1.0 - shift_tv_exact(m)).sum();
    if mass <= 0.0 {
        return Err(Error::DegenerateShift);
    }
    Ok((8.0 / mass).sqrt())
}
