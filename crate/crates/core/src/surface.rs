//! Mixture log-PL scans over the shared coupling of infinite-range components.
//!
//! For two components every grid point uses uniform mixing coefficients and
//! responsibilities recomputed from the pseudolikelihoods at that point.

use crate::error::{Error, Result};
use crate::mixture::{mixture_log_pl, responsibilities_pl, MixtureModel, Responsibilities};
use crate::spin_models::{ComponentParams, Dataset};

/// Inclusive evenly spaced grid `min:max:steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !min.is_finite() || !max.is_finite() || max < min || (steps == 1 && max != min) {
            return Err(Error::invalid(format!("invalid grid {min}:{max}:{steps}")));
        }
        Ok(Self { min, max, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let width = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| self.min + width * i as f64).collect()
    }

    pub fn resolution(&self) -> f64 {
        if self.steps < 2 {
            0.0
        } else {
            (self.max - self.min) / (self.steps - 1) as f64
        }
    }
}

impl std::str::FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, steps] = parts.as_slice() else {
            return Err(Error::invalid(format!("grid '{s}' is not min:max:steps")));
        };
        let parse = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("grid '{s}' has a non-numeric bound")))
        };
        let steps = steps
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::invalid(format!("grid '{s}' has an invalid step count")))?;
        Grid::new(parse(min)?, parse(max)?, steps)
    }
}

/// Mixture log-PL of infinite-range components with the given shared
/// couplings, uniform mixing coefficients and PL responsibilities.
pub fn ir_mixture_log_pl(data: &Dataset, beta: f64, couplings: &[f64]) -> Result<f64> {
    if data.q() != 2 {
        return Err(Error::invalid("infinite-range scans need binary data"));
    }
    let components = couplings
        .iter()
        .map(|&j| ComponentParams::infinite_range(data.n_sites(), beta, j))
        .collect::<Result<Vec<_>>>()?;
    let model = MixtureModel::uniform(components)?;
    let r = if model.k() == 1 {
        Responsibilities::ones(data.len())
    } else {
        responsibilities_pl(data, &model)?
    };
    Ok(mixture_log_pl(data, &model, &r)?.0)
}

/// `(J, log PL)` along a one-component grid.
pub fn ir_curve(data: &Dataset, beta: f64, grid: &Grid) -> Result<Vec<(f64, f64)>> {
    grid.points()
        .into_iter()
        .map(|j| Ok((j, ir_mixture_log_pl(data, beta, &[j])?)))
        .collect()
}

/// `(J1, J2, log PL)` over the product grid, `J1`-major.
pub fn ir_surface(data: &Dataset, beta: f64, grid1: &Grid, grid2: &Grid) -> Result<Vec<(f64, f64, f64)>> {
    let mut out = Vec::with_capacity(grid1.steps * grid2.steps);
    for j1 in grid1.points() {
        for j2 in grid2.points() {
            out.push((j1, j2, ir_mixture_log_pl(data, beta, &[j1, j2])?));
        }
    }
    Ok(out)
}

/// First point attaining the maximum objective.
pub fn argmax_by<T: Copy>(points: &[T], value: impl Fn(&T) -> f64) -> Option<T> {
    points
        .iter()
        .copied()
        .fold(None, |best: Option<T>, p| match best {
            Some(b) if value(&b) >= value(&p) => Some(b),
            _ => Some(p),
        })
}
