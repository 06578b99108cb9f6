//! Gradient ascent with backtracking (Armijo) line search.
//!
//! Each iteration tries `x + t * g`, shrinking `t` until the objective rises by
//! at least `c * t * |g|^2`. After an accepted step the next trial step is the
//! Barzilai-Borwein estimate of the inverse curvature along that step, or the
//! previous step enlarged by the inverse shrink factor where the objective is
//! not concave along it.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub max_iterations: usize,
    /// Stop once the infinity norm of the gradient is at or below this.
    pub gradient_tolerance: f64,
    pub initial_step: f64,
    /// Step shrink factor, in (0, 1).
    pub backtracking_factor: f64,
    /// Armijo constant `c`.
    pub sufficient_increase: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            gradient_tolerance: 1e-5,
            initial_step: 1.0,
            backtracking_factor: 0.5,
            sufficient_increase: 1e-4,
        }
    }
}

impl OptimizeOptions {
    pub fn validate(&self) -> Result<()> {
        let ok = self.gradient_tolerance > 0.0
            && self.initial_step > 0.0
            && self.backtracking_factor > 0.0
            && self.backtracking_factor < 1.0
            && self.sufficient_increase > 0.0
            && self.max_iterations > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid optimizer options: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizeStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub status: OptimizeStatus,
    pub evaluations: usize,
    /// Objective after each accepted step, starting with the value at `x0`.
    pub trace: Vec<f64>,
}

/// Sum in ascending order, so the result does not depend on coordinate order.
fn ordered_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

fn inf_norm(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Barzilai-Borwein trial step `s.s / -s.y` from the last accepted move;
/// `None` where the objective is not locally concave along it.
fn next_step(x: &[f64], x_new: &[f64], g: &[f64], g_new: &[f64]) -> Option<f64> {
    let s: Vec<f64> = x_new.iter().zip(x).map(|(a, b)| a - b).collect();
    let ss = ordered_sum(s.iter().map(|si| si * si).collect());
    let sy = -ordered_sum(s.iter().zip(g_new.iter().zip(g)).map(|(si, (a, b))| si * (a - b)).collect());
    let t = ss / sy;
    (sy > 0.0 && t.is_finite() && t > 0.0).then_some(t)
}

/// Predicted first-order gain, relative to the objective, below which a
/// rejected step is attributed to rounding rather than curvature.
const NEGLIGIBLE_GAIN: f64 = 1e-12;

/// Maximizes a smooth objective given as `x -> (value, gradient)`.

pub fn maximize<F>(mut objective: F, x0: Vec<f64>, opts: &OptimizeOptions) -> Result<OptimizeResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    opts.validate()?;
    let (mut value, mut grad) = objective(&x0)?;
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::InvalidStart);
    }
    let mut x = x0;
    let mut evaluations = 1;
    let mut trace = vec![value];
    let mut step = opts.initial_step;
    let mut candidate = vec![0.0; x.len()];

    for iteration in 0..opts.max_iterations {
        let gnorm = inf_norm(&grad);
        if gnorm <= opts.gradient_tolerance {
            return Ok(OptimizeResult {
                x,
                value,
                iterations: iteration,
                gradient_norm: gnorm,
                status: OptimizeStatus::Converged,
                evaluations,
                trace,
            });
        }
        let gg = ordered_sum(grad.iter().map(|g| g * g).collect());
        loop {
            for ((c, xi), gi) in candidate.iter_mut().zip(&x).zip(&grad) {
                *c = xi + step * gi;
            }
            let (v, g) = objective(&candidate)?;
            evaluations += 1;
            let finite = v.is_finite() && g.iter().all(|x| x.is_finite());
            if finite && v >= value + opts.sufficient_increase * step * gg {
                step = next_step(&x, &candidate, &grad, &g).unwrap_or(step / opts.backtracking_factor);
                std::mem::swap(&mut x, &mut candidate);
                value = v;
                grad = g;
                trace.push(value);
                break;
            }
            let negligible = finite && step * gg <= NEGLIGIBLE_GAIN * value.abs();
            step *= opts.backtracking_factor;
            let moved = x
                .iter()
                .zip(&grad)
                .any(|(xi, gi)| xi + step * gi != *xi);
            if negligible || !moved {
                return Ok(OptimizeResult {
                    x,
                    value,
                    iterations: iteration,
                    gradient_norm: gnorm,
                    status: OptimizeStatus::LineSearchFailed,
                    evaluations,
                    trace,
                });
            }
        }
    }
    let gnorm = inf_norm(&grad);
    let status = if gnorm <= opts.gradient_tolerance {
        OptimizeStatus::Converged
    } else {
        OptimizeStatus::MaxIterations
    };
    Ok(OptimizeResult {
        x,
        value,
        iterations: opts.max_iterations,
        gradient_norm: gnorm,
        status,
        evaluations,
        trace,
    })
}
