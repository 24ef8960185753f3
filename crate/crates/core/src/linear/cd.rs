use ndarray::{Array1, ArrayView1, ArrayView2};

use super::{FitDiagnostics, LinearConfig, LinearFamily, LinearModel};

/// `sign(z) · max(|z| − γ, 0)`.
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Exact minimizer of `a w² − 2ρ w + λα|w|` with `a = z + λ(1 − α)`.
fn coordinate_update(rho: f64, z: f64, l1: f64, l2: f64) -> f64 {
    let denom = z + l2;
    if denom <= 0.0 {
        0.0
    } else {
        soft_threshold(rho, 0.5 * l1) / denom
    }
}

/// Cyclic coordinate descent on the elastic-net objective. Each sweep
/// visits a penalized intercept (if any), then columns in ascending order.
pub(super) fn coordinate_descent(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    lambda: f64,
    alpha: f64,
    config: &LinearConfig,
) -> (LinearModel, FitDiagnostics) {
    let n = x.nrows();
    let d = x.ncols();
    let l1 = lambda * alpha;
    let l2 = lambda * (1.0 - alpha);
    // Column-major copy: every update walks one column. An unpenalized
    // intercept is profiled out by centering, b = ȳ − x̄ᵀw, which removes
    // the slow intercept/indicator-group direction from the sweeps.
    let centered = !config.penalize_bias;
    let col_means: Vec<f64> = (0..d)
        .map(|j| if centered { x.column(j).sum() / n as f64 } else { 0.0 })
        .collect();
    let y_mean = if centered { y.sum() / n as f64 } else { 0.0 };
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|j| x.column(j).iter().map(|v| v - col_means[j]).collect())
        .collect();
    let sq_norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();

    let mut w = vec![0.0; d];
    let mut bias = 0.0;
    let mut resid: Vec<f64> = y.iter().map(|t| t - y_mean).collect();

    let objective = |resid: &[f64], w: &[f64], bias: f64| {
        let sse: f64 = resid.iter().map(|r| r * r).sum();
        let (mut a1, mut a2) = w.iter().fold((0.0, 0.0), |(a, b), v| (a + v.abs(), b + v * v));
        if config.penalize_bias {
            a1 += bias.abs();
            a2 += bias * bias;
        }
        sse + l1 * a1 + l2 * a2
    };

    let mut history = Vec::new();
    let mut converged = false;
    let mut max_change = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        max_change = 0.0f64;

        if !centered {
            let rho = resid.iter().sum::<f64>() + n as f64 * bias;
            let delta = coordinate_update(rho, n as f64, l1, l2) - bias;
            if delta != 0.0 {
                resid.iter_mut().for_each(|r| *r -= delta);
                bias += delta;
                max_change = max_change.max(delta.abs());
            }
        }

        for j in 0..d {
            let col = &cols[j];
            let rho = col.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() + sq_norms[j] * w[j];
            let new = coordinate_update(rho, sq_norms[j], l1, l2);
            let delta = new - w[j];
            if delta != 0.0 {
                for (r, a) in resid.iter_mut().zip(col) {
                    *r -= a * delta;
                }
                w[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }

        history.push(objective(&resid, &w, bias));
        if max_change < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("coordinate descent stopped after {sweeps} sweeps with max change {max_change:e}");
    }
    if centered {
        bias = y_mean - col_means.iter().zip(&w).map(|(m, v)| m * v).sum::<f64>();
    }
    let model = LinearModel {
        family: LinearFamily::ElasticNet,
        weights: Array1::from(w),
        bias,
        lambda,
        alpha: None,
        penalize_bias: config.penalize_bias,
    };
    let diag = FitDiagnostics {
        iterations: sweeps,
        objective: history
            .last()
            .copied()
            .unwrap_or_else(|| objective(&resid, model.weights.as_slice().unwrap(), bias)),
        converged,
        max_change,
        objective_history: history,
        jitter: None,
    };
    (model, diag)
}
