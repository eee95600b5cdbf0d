use serde::{Deserialize, Serialize};

use super::model::{CompressionPlan, DelayModel, ImportanceWeights};
use crate::error::Result;

/// Projected gradient descent settings.
///
/// `step` is measured in ratio units along the normalized gradient, so it
/// does not depend on the magnitude of volumes or capacities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PgdOptions {
    pub step: f64,
    pub iters: usize,
    /// Stop when no ratio moves by more than this between iterates.
    pub tol: f64,
}

impl Default for PgdOptions {
    fn default() -> Self {
        PgdOptions { step: 10.0, iters: 500, tol: 1e-13 }
    }
}

/// Solve `x - a x^(-gamma-1) = y` for x, restricted to `[lo, 1]`.
/// The left side is strictly increasing in x, so the clipped root is unique.
fn clipped_root(y: f64, a: f64, gamma: f64, lo: f64) -> f64 {
    let h = |x: f64| x - a * x.powf(-gamma - 1.0) - y;
    if h(lo) >= 0.0 {
        return lo;
    }
    if h(1.0) <= 0.0 {
        return 1.0;
    }
    let (mut left, mut right) = (lo, 1.0);
    let mut x = 0.5 * (left + right);
    for _ in 0..200 {
        let hx = h(x);
        if hx == 0.0 {
            return x;
        }
        if hx > 0.0 {
            right = x;
        } else {
            left = x;
        }
        let dh = 1.0 + a * (gamma + 1.0) * x.powf(-gamma - 2.0);
        let mut next = x - hx / dh;
        if !(next > left && next < right) {
            next = 0.5 * (left + right);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x || right - left <= 4.0 * f64::EPSILON * right {
            return next;
        }
        x = next;
    }
    x
}

/// Euclidean projection of `y` onto `{rho ∈ [rho_min, 1]^n : Σ w rho^(-gamma) ≤ d_max}`.
///
/// The multiplier of the budget constraint is located by bracketed regula
/// falsi; for a fixed multiplier each coordinate is an independent monotone
/// root.
pub fn project_feasible(model: &DelayModel, weights: &[f64], y: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = y.iter().map(|v| v.clamp(model.rho_min, 1.0)).collect();
    if model.distortion(weights, &clipped) <= model.d_max {
        return clipped;
    }
    let at = |mu: f64| -> Vec<f64> {
        y.iter()
            .zip(weights)
            .map(|(&yi, &wi)| clipped_root(yi, mu * model.gamma * wi, model.gamma, model.rho_min))
            .collect()
    };
    let mut hi = 1e-6;
    while model.distortion(weights, &at(hi)) > model.d_max {
        hi *= 4.0;
    }
    let mut lo = hi / 4.0;
    while lo > 1e-300 && model.distortion(weights, &at(lo)) <= model.d_max {
        lo /= 4.0;
    }
    // Illinois regula falsi on ln(mu); the excess distortion is decreasing in mu.
    // Invariant: excess(a) > 0 (infeasible) and excess(b) <= 0 (feasible).
    let excess = |t: f64| model.distortion(weights, &at(t.exp())) - model.d_max;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let (mut fa, mut fb) = (excess(a), excess(b));
    let mut last = 0i8;
    for _ in 0..200 {
        if b - a <= 1e-15 * b.abs().max(1.0) || fb >= -1e-14 * model.d_max {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let fc = excess(c);
        if fc > 0.0 {
            a = c;
            fa = fc;
            if last == -1 {
                fb *= 0.5;
            }
            last = -1;
        } else {
            b = c;
            fb = fc;
            if last == 1 {
                fa *= 0.5;
            }
            last = 1;
        }
    }
    at(b.exp())
}

/// Minimize mean delay over the feasible ratio set by projected gradient
/// descent, starting from the uncompressed point. Returns the best iterate;
/// `converged` is false when `iters` ran out first.
pub fn optimize_delay(model: &DelayModel, weights: &ImportanceWeights, opts: &PgdOptions) -> Result<CompressionPlan> {
    // shares feasibility and dimension checks with the analytic solver
    super::model::optimal_ratios_analytic(model, weights).map(|_| ())?;
    if model.n() == 0 {
        return Ok(CompressionPlan::empty());
    }
    let w = weights.as_slice();
    let costs = model.costs();
    let norm = costs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let direction: Vec<f64> = costs.iter().map(|c| c / norm).collect();
    let objective = |x: &[f64]| x.iter().zip(&costs).map(|(a, b)| a * b).sum::<f64>();

    let mut x = project_feasible(model, w, &vec![1.0; model.n()]);
    let mut best = x.clone();
    let mut best_f = objective(&x);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.iters {
        iterations += 1;
        let y: Vec<f64> = x.iter().zip(&direction).map(|(a, d)| a - opts.step * d).collect();
        let next = project_feasible(model, w, &y);
        let moved = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = next;
        let f = objective(&x);
        if f < best_f {
            best_f = f;
            best.clone_from(&x);
        }
        if moved <= opts.tol {
            converged = true;
            break;
        }
    }
    let mut plan = CompressionPlan::evaluate(model, weights, best);
    plan.converged = converged;
    plan.iterations = iterations;
    Ok(plan)
}
