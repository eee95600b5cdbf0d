use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Helpers closer than this are weighted as if they were at this distance (m).
pub const DEFAULT_DISTANCE_FLOOR: f64 = 5.0;

/// Per-helper sensing importance, normalized to sum to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImportanceWeights(Vec<f64>);

impl ImportanceWeights {
    /// `w_i ∝ 1 / max(d_i, floor)`: closer helpers get larger weights.
    pub fn from_distances(distances: &[f64], floor: f64) -> Result<Self> {
        if !(floor > 0.0) {
            return Err(Error::Config(format!("distance floor must be > 0, got {floor}")));
        }
        if let Some(d) = distances.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::Domain(format!("helper distance must be finite and >= 0, got {d}")));
        }
        Self::normalized(distances.iter().map(|d| 1.0 / d.max(floor)).collect())
    }

    /// Normalize arbitrary positive weights.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        if raw.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Domain("importance weights must be finite and > 0".into()));
        }
        let total: f64 = raw.iter().sum();
        Ok(ImportanceWeights(raw.into_iter().map(|w| w / total).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Delay and distortion data for the reachable helpers.
///
/// Helper i sending a fraction `rho_i` of its `volumes[i]` bits over a path
/// with per-bit delay `tau_i` takes `rho_i * V_i * tau_i` seconds. Distortion
/// is `Σ w_i rho_i^(-gamma)` and must stay within `d_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayModel {
    pub gamma: f64,
    pub d_max: f64,
    pub rho_min: f64,
    pub volumes: Vec<f64>,
    pub path_delay_per_bit: Vec<f64>,
}

impl DelayModel {
    pub fn n(&self) -> usize {
        self.volumes.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(Error::Config(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.d_max.is_finite() && self.d_max > 0.0) {
            return Err(Error::Config(format!("d_max must be finite and > 0, got {}", self.d_max)));
        }
        if !(self.rho_min > 0.0 && self.rho_min < 1.0) {
            return Err(Error::Config(format!("rho_min must lie in (0, 1), got {}", self.rho_min)));
        }
        if self.volumes.len() != self.path_delay_per_bit.len() {
            return Err(Error::Format("volumes and path delays differ in length".into()));
        }
        if self.volumes.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Domain("helper volumes must be finite and > 0".into()));
        }
        if self.path_delay_per_bit.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Domain("per-bit path delays must be finite and > 0 (unreachable helper?)".into()));
        }
        Ok(())
    }

    /// Per-helper delay coefficients `V_i * tau_i` (seconds at rho = 1).
    pub fn costs(&self) -> Vec<f64> {
        self.volumes.iter().zip(&self.path_delay_per_bit).map(|(v, t)| v * t).collect()
    }

    pub fn distortion(&self, weights: &[f64], rho: &[f64]) -> f64 {
        weights.iter().zip(rho).map(|(w, r)| w * r.powf(-self.gamma)).sum()
    }

    fn check(&self, weights: &ImportanceWeights) -> Result<()> {
        self.validate()?;
        if weights.len() != self.n() {
            return Err(Error::Format(format!(
                "{} weights for {} helpers",
                weights.len(),
                self.n()
            )));
        }
        let min_budget: f64 = weights.as_slice().iter().sum();
        if self.d_max < min_budget {
            return Err(Error::Infeasible { budget: self.d_max, min_budget });
        }
        Ok(())
    }
}

/// Per-helper compression ratios and the resulting delays.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionPlan {
    pub rho: Vec<f64>,
    pub per_helper_delay: Vec<f64>,
    pub mean_delay: f64,
    pub total_distortion: f64,
    /// Budget multiplier of the analytic solution; `None` for iterative plans.
    pub multiplier: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl CompressionPlan {
    pub(crate) fn evaluate(model: &DelayModel, weights: &ImportanceWeights, rho: Vec<f64>) -> Self {
        let per_helper_delay: Vec<f64> = rho.iter().zip(model.costs()).map(|(r, c)| r * c).collect();
        let mean_delay = mean_of(&per_helper_delay);
        let total_distortion = model.distortion(weights.as_slice(), &rho);
        CompressionPlan {
            rho,
            per_helper_delay,
            mean_delay,
            total_distortion,
            multiplier: None,
            converged: true,
            iterations: 0,
        }
    }

    pub fn empty() -> Self {
        CompressionPlan {
            rho: vec![],
            per_helper_delay: vec![],
            mean_delay: 0.0,
            total_distortion: 0.0,
            multiplier: None,
            converged: true,
            iterations: 0,
        }
    }
}

fn mean_of(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// `(1/N) Σ rho_i V_i tau_i`.
pub fn mean_delay(rho: &[f64], model: &DelayModel) -> Result<f64> {
    if rho.len() != model.n() {
        return Err(Error::Format(format!("{} ratios for {} helpers", rho.len(), model.n())));
    }
    Ok(mean_of(&rho.iter().zip(model.costs()).map(|(r, c)| r * c).collect::<Vec<_>>()))
}

/// Box-clipped stationary point for multiplier `mu`:
/// `rho_i = clip((mu gamma w_i N / c_i)^(1/(gamma+1)), rho_min, 1)`.
fn stationary_rho(model: &DelayModel, weights: &[f64], costs: &[f64], mu: f64) -> Vec<f64> {
    let n = costs.len() as f64;
    let exponent = 1.0 / (model.gamma + 1.0);
    weights
        .iter()
        .zip(costs)
        .map(|(w, c)| (mu * model.gamma * w * n / c).powf(exponent).clamp(model.rho_min, 1.0))
        .collect()
}

/// Closed-form KKT solution of the ratio problem.
///
/// The budget multiplier is found by geometric bisection on the distortion
/// of the clipped stationary point, which is non-increasing in the
/// multiplier. The returned ratios come from the feasible end of the final
/// bracket.
pub fn optimal_ratios_analytic(model: &DelayModel, weights: &ImportanceWeights) -> Result<CompressionPlan> {
    model.check(weights)?;
    if model.n() == 0 {
        return Ok(CompressionPlan::empty());
    }
    let w = weights.as_slice();
    let costs = model.costs();
    let distortion = |mu: f64| model.distortion(w, &stationary_rho(model, w, &costs, mu));

    let mut plan = if model.distortion(w, &vec![model.rho_min; model.n()]) <= model.d_max {
        // budget inactive: compress as hard as the box allows
        let mut p = CompressionPlan::evaluate(model, weights, vec![model.rho_min; model.n()]);
        p.multiplier = Some(0.0);
        p
    } else {
        // natural scale of the multiplier: mu with rho_i = 1 for an average helper
        let scale = mean_of(&costs) / (model.gamma * mean_of(w) * costs.len() as f64);
        let mut hi = scale;
        while distortion(hi) > model.d_max {
            hi *= 2.0;
        }
        let mut lo = scale;
        while distortion(lo) <= model.d_max {
            lo *= 0.5;
        }
        let mut iterations = 0;
        while hi / lo - 1.0 > 1e-15 && iterations < 400 {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if distortion(mid) > model.d_max {
                lo = mid;
            } else {
                hi = mid;
            }
            iterations += 1;
        }
        let mut p = CompressionPlan::evaluate(model, weights, stationary_rho(model, w, &costs, hi));
        p.multiplier = Some(hi);
        p.iterations = iterations;
        p
    };
    plan.converged = true;
    Ok(plan)
}

/// Scaled KKT residual of `(rho, mu)`: the maximum of relative primal
/// infeasibility, relative stationarity violation per coordinate (sign
/// conditions at the box bounds) and relative complementary slackness.
pub fn kkt_residual(model: &DelayModel, weights: &ImportanceWeights, rho: &[f64], mu: f64) -> f64 {
    let w = weights.as_slice();
    let costs = model.costs();
    let n = costs.len() as f64;
    let g = model.distortion(w, rho);
    let mut r = ((g - model.d_max) / model.d_max).max(0.0);
    r = r.max((-mu).max(0.0));
    for i in 0..rho.len() {
        let marginal = costs[i] / n;
        let grad = marginal - mu * model.gamma * w[i] * rho[i].powf(-model.gamma - 1.0);
        let viol = if rho[i] <= model.rho_min {
            (-grad).max(0.0)
        } else if rho[i] >= 1.0 {
            grad.max(0.0)
        } else {
            grad.abs()
        };
        r = r.max(viol / marginal);
    }
    let objective: f64 = rho.iter().zip(&costs).map(|(p, c)| p * c).sum::<f64>() / n;
    r.max((mu * (model.d_max - g)).abs() / objective)
}
