//! Mixture pseudolikelihood and the EM-like fitting loop.
//!
//! Responsibilities are estimated by substituting each component's
//! pseudolikelihood for its (intractable) likelihood:
//!
//! `gamma_bk = softmax_k(log pi_k + sum_n log p_k(s_bn | s_b,-n))`
//!
//! The monitored objective is the mixture log-PL built from flip ratios,
//!
//! `1/u_bn = sum_k gamma_bk * sum_{a != s_bn} phi_k(s_b with s_bn = a) / phi_k(s_b)`
//!
//! `log PL = (1/B) sum_b sum_n log(u_bn / (1 + u_bn))`
//!
//! and the M-step maximizes the decoupled surrogates
//! `sum_b gamma_bk log PL_k(s_b) - lambda |theta_k|^2` one component at a time.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, softplus};
use crate::optimizer::{maximize, OptimizeOptions, OptimizeResult, OptimizeStatus};
use crate::spin_models::{
    dataset_log_pl, log_flip_odds, weighted_log_pl_and_grad, ComponentParams, Dataset, TieMode,
};

const PI_TOLERANCE: f64 = 1e-9;
const ROW_TOLERANCE: f64 = 1e-10;

/// `K` components sharing `(N, q)` plus mixing coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pi: Vec<f64>,
    components: Vec<ComponentParams>,
}

impl MixtureModel {
    /// Validates `pi` (nonnegative, summing to one within 1e-9) and
    /// renormalizes it exactly.
    pub fn new(pi: Vec<f64>, components: Vec<ComponentParams>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidModel("mixture needs at least one component".into()));
        }
        if pi.len() != components.len() {
            return Err(Error::InvalidModel(format!(
                "{} mixing coefficients for {} components",
                pi.len(),
                components.len()
            )));
        }
        let (n, q) = (components[0].n_sites(), components[0].q());
        if components.iter().any(|c| c.n_sites() != n || c.q() != q) {
            return Err(Error::InvalidModel("components do not share (N, q)".into()));
        }
        let mut model = Self { pi, components };
        model.validate()?;
        let total: f64 = model.pi.iter().sum();
        model.pi.iter_mut().for_each(|p| *p /= total);
        Ok(model)
    }

    /// Mixture with uniform mixing coefficients.
    pub fn uniform(components: Vec<ComponentParams>) -> Result<Self> {
        let k = components.len().max(1);
        Self::new(vec![1.0 / k as f64; components.len()], components)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pi.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidModel(format!(
                "mixing coefficients must be nonnegative: {:?}",
                self.pi
            )));
        }
        let total: f64 = self.pi.iter().sum();
        if (total - 1.0).abs() > PI_TOLERANCE {
            return Err(Error::InvalidModel(format!(
                "mixing coefficients sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn components(&self) -> &[ComponentParams] {
        &self.components
    }

    pub fn component(&self, k: usize) -> &ComponentParams {
        &self.components[k]
    }

    pub fn n_sites(&self) -> usize {
        self.components[0].n_sites()
    }

    pub fn q(&self) -> usize {
        self.components[0].q()
    }

    /// Component `perm[k]` of `self` becomes component `k` of the result.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.k()];
        for &p in perm {
            if p >= self.k() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::invalid(format!("{perm:?} is not a permutation")));
            }
        }
        if perm.len() != self.k() {
            return Err(Error::invalid(format!("{perm:?} is not a permutation")));
        }
        Ok(Self {
            pi: perm.iter().map(|&p| self.pi[p]).collect(),
            components: perm.iter().map(|&p| self.components[p].clone()).collect(),
        })
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        if data.n_sites() != self.n_sites() || data.q() != self.q() {
            return Err(Error::invalid(format!(
                "dataset has (N={}, q={}) but mixture has (N={}, q={})",
                data.n_sites(),
                data.q(),
                self.n_sites(),
                self.q()
            )));
        }
        Ok(())
    }
}

/// Row-stochastic `B x K` matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    gamma: Vec<f64>,
    k: usize,
}

impl Responsibilities {
    pub fn new(gamma: Vec<f64>, k: usize) -> Result<Self> {
        if k == 0 || gamma.is_empty() || gamma.len() % k != 0 {
            return Err(Error::invalid(format!(
                "{} entries do not form rows of length {k}",
                gamma.len()
            )));
        }
        for (b, row) in gamma.chunks(k).enumerate() {
            if row.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
                return Err(Error::invalid(format!("row {b} has a negative or non-finite entry")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::invalid(format!("row {b} sums to {total}")));
            }
        }
        Ok(Self { gamma, k })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::invalid("rows have different lengths"));
        }
        Self::new(rows.concat(), k)
    }

    /// Hard one-hot assignment from labels in `[0, k)`.
    pub fn one_hot(labels: &[usize], k: usize) -> Result<Self> {
        let mut gamma = vec![0.0; labels.len() * k];
        for (b, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(Error::invalid(format!("label {l} out of range for K={k}")));
            }
            gamma[b * k + l] = 1.0;
        }
        Self::new(gamma, k)
    }

    /// Every row `(1)` for a single component.
    pub fn ones(b: usize) -> Self {
        Self {
            gamma: vec![1.0; b],
            k: 1,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_samples(&self) -> usize {
        self.gamma.len() / self.k
    }

    pub fn row(&self, b: usize) -> &[f64] {
        &self.gamma[b * self.k..(b + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.gamma.chunks(self.k)
    }

    pub fn get(&self, b: usize, k: usize) -> f64 {
        self.gamma[b * self.k + k]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows().map(|r| r[k]).collect()
    }

    /// `sum_b gamma_bk` for every component.
    pub fn effective_counts(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        for row in self.rows() {
            for (o, g) in out.iter_mut().zip(row) {
                *o += g;
            }
        }
        out
    }

    /// Most responsible component per sample (lowest index on ties).
    pub fn hard_labels(&self) -> Vec<usize> {
        self.rows()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (k, &g)| if g > best.1 { (k, g) } else { best })
                    .0
            })
            .collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.gamma
    }
}

/// `log(1/u_bn)` for every sample and site.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipRatioTable {
    log_inv_u: Vec<f64>,
    n: usize,
}

impl FlipRatioTable {
    pub fn n_samples(&self) -> usize {
        self.log_inv_u.len() / self.n
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    /// `1/u_bn`: the responsibility-weighted summed odds of leaving state `s_bn`.
    pub fn inv_u(&self, b: usize, n: usize) -> f64 {
        self.log_inv_u[b * self.n + n].exp()
    }

    pub fn log_inv_u(&self, b: usize, n: usize) -> f64 {
        self.log_inv_u[b * self.n + n]
    }
}

/// `B x K` matrix of component log-PL values, row-major.
pub fn component_log_pl_matrix(data: &Dataset, m: &MixtureModel) -> Result<Vec<f64>> {
    m.check_data(data)?;
    let per_component: Vec<Vec<f64>> = m
        .components()
        .par_iter()
        .map(|c| dataset_log_pl(data, c))
        .collect();
    let (b_count, k) = (data.len(), m.k());
    let mut out = vec![0.0; b_count * k];
    for (kk, col) in per_component.iter().enumerate() {
        for (b, v) in col.iter().enumerate() {
            out[b * k + kk] = *v;
        }
    }
    Ok(out)
}

fn responsibilities_from_log_pl(log_pl: &[f64], m: &MixtureModel) -> Result<Responsibilities> {
    let k = m.k();
    let log_pi: Vec<f64> = m.pi().iter().map(|p| p.ln()).collect();
    let mut gamma = vec![0.0; log_pl.len()];
    for (b, (row, out)) in log_pl.chunks(k).zip(gamma.chunks_mut(k)).enumerate() {
        for ((o, lp), lpi) in out.iter_mut().zip(row).zip(&log_pi) {
            *o = lpi + lp;
        }
        let lse = log_sum_exp(out);
        if !lse.is_finite() {
            return Err(Error::DegenerateSample { sample: b });
        }
        for o in out.iter_mut() {
            *o = (*o - lse).exp();
        }
    }
    Ok(Responsibilities { gamma, k })
}

/// E-step with pseudolikelihoods standing in for component likelihoods.
pub fn responsibilities_pl(data: &Dataset, m: &MixtureModel) -> Result<Responsibilities> {
    m.validate()?;
    let log_pl = component_log_pl_matrix(data, m)?;
    responsibilities_from_log_pl(&log_pl, m)
}

/// `pi_k = (1/B) sum_b gamma_bk`.
pub fn update_mixing(r: &Responsibilities) -> Vec<f64> {
    let b = r.n_samples() as f64;
    let counts = r.effective_counts();
    let mut pi: Vec<f64> = counts.iter().map(|c| c / b).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    pi
}

/// Mixture log-pseudolikelihood and its flip-ratio table.
pub fn mixture_log_pl(data: &Dataset, m: &MixtureModel, r: &Responsibilities) -> Result<(f64, FlipRatioTable)> {
    m.check_data(data)?;
    if r.n_samples() != data.len() || r.k() != m.k() {
        return Err(Error::invalid(format!(
            "responsibilities are {}x{} but data/mixture need {}x{}",
            r.n_samples(),
            r.k(),
            data.len(),
            m.k()
        )));
    }
    let (n, q, k) = (m.n_sites(), m.q(), m.k());
    let rows: Vec<Result<(f64, Vec<f64>)>> = data
        .samples()
        .par_iter()
        .enumerate()
        .map(|(b, s)| {
            let states = s.states();
            let gamma = r.row(b);
            let magnets: Vec<f64> = m.components().iter().map(|c| c.magnet_of(states)).collect();
            let mut energies = vec![0.0; q];
            let mut terms = vec![0.0; k];
            let mut table = vec![0.0; n];
            let classes = m
                .components()
                .iter()
                .map(|c| c.site_classes(states))
                .collect::<Option<Vec<_>>>()
                .and_then(|c| c.first().copied());
            let mut total = 0.0;
            for site in 0..n {
                let mult = classes.map_or(1.0, |c| c.multiplicity(site, states[site]));
                if mult == 0.0 {
                    continue;
                }
                let observed = usize::from(states[site]);
                for (kk, c) in m.components().iter().enumerate() {
                    if gamma[kk] == 0.0 {
                        terms[kk] = f64::NEG_INFINITY;
                        continue;
                    }
                    c.site_energies(states, magnets[kk], site, &mut energies);
                    let odds = log_flip_odds(&energies, observed);
                    if odds.is_nan() || odds == f64::INFINITY {
                        return Err(Error::NumericOverflow {
                            sample: b,
                            site,
                            component: kk,
                        });
                    }
                    terms[kk] = gamma[kk].ln() + odds;
                }
                let log_inv_u = log_sum_exp(&terms);
                if !log_inv_u.is_finite() {
                    let component = terms.iter().position(|t| !t.is_finite()).unwrap_or(0);
                    return Err(Error::NumericOverflow {
                        sample: b,
                        site,
                        component,
                    });
                }
                table[site] = log_inv_u;
                total -= mult * softplus(log_inv_u);
            }
            if let Some(c) = classes {
                for site in 0..n {
                    table[site] = table[c.representative(states[site])];
                }
            }
            Ok((total, table))
        })
        .collect();
    let mut log_inv_u = Vec::with_capacity(data.len() * n);
    let mut sum = 0.0;
    for row in rows {
        let (v, t) = row?;
        sum += v;
        log_inv_u.extend(t);
    }
    Ok((sum / data.len() as f64, FlipRatioTable { log_inv_u, n }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Inverse temperature of freshly created components.
    pub beta: f64,
    pub tie_mode: TieMode,
    /// L2 strength; `None` selects 0 for `q = 2` and 0.01 otherwise.
    pub regularization: Option<f64>,
    pub inner: OptimizeOptions,
    pub max_iterations: usize,
    /// Relative change of the mixture log-PL that counts as converged.
    pub tolerance: f64,
    /// Starting parameters; all-zero components when absent.
    pub initial_components: Option<Vec<ComponentParams>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            beta: 1.0,
            tie_mode: TieMode::Free,
            regularization: None,
            inner: OptimizeOptions::default(),
            max_iterations: 200,
            tolerance: 1e-6,
            initial_components: None,
        }
    }
}

impl FitOptions {
    pub fn lambda_for(&self, q: usize) -> f64 {
        self.regularization
            .unwrap_or(if q == 2 { 0.0 } else { 0.01 })
    }
}

/// Statistics of one component's inner optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerStats {
    pub iterations: usize,
    pub evaluations: usize,
    pub status: OptimizeStatus,
    pub gradient_norm: f64,
    pub objective_before: f64,
    pub objective_after: f64,
}

impl From<&OptimizeResult> for InnerStats {
    fn from(r: &OptimizeResult) -> Self {
        Self {
            iterations: r.iterations,
            evaluations: r.evaluations,
            status: r.status,
            gradient_norm: r.gradient_norm,
            objective_before: r.trace[0],
            objective_after: r.value,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitEvent {
    /// A component's effective count fell below one; its responsibility
    /// column was moved onto a single sample.
    Collapse {
        component: usize,
        effective_count: f64,
        reseeded_sample: usize,
    },
    /// The mixture log-PL fell by more than 1e-6 relative.
    ObjectiveDecrease { relative: f64 },
}

impl std::fmt::Display for FitEvent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitEvent::Collapse {
                component,
                effective_count,
                reseeded_sample,
            } => write!(
                f,
                "collapse(k={component};count={effective_count:.6};sample={reseeded_sample})"
            ),
            FitEvent::ObjectiveDecrease { relative } => write!(f, "decrease({relative:.3e})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mixture_log_pl: f64,
    pub pi: Vec<f64>,
    /// `sum_b gamma_bk` after this iteration's E-step.
    pub effective_counts: Vec<f64>,
    pub inner: Vec<InnerStats>,
    pub events: Vec<FitEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    /// Responsibilities from the last E-step.
    pub responsibilities: Responsibilities,
    pub elapsed: Duration,
}

impl FitReport {
    pub fn final_log_pl(&self) -> f64 {
        self.iterations.last().map_or(f64::NAN, |r| r.mixture_log_pl)
    }
}

/// One M-step: `pi <- update_mixing(r)` and, for every component, a warm-started
/// maximization of its weighted PL surrogate.
pub fn m_step(
    data: &Dataset,
    r: &Responsibilities,
    m: &MixtureModel,
    opts: &FitOptions,
) -> Result<(MixtureModel, Vec<InnerStats>)> {
    m.check_data(data)?;
    if r.n_samples() != data.len() || r.k() != m.k() {
        return Err(Error::invalid("responsibilities do not match data and mixture"));
    }
    let lambda = opts.lambda_for(m.q());
    let results: Vec<Result<(ComponentParams, InnerStats)>> = m
        .components()
        .par_iter()
        .enumerate()
        .map(|(k, comp)| {
            let weights = r.column(k);
            let x0 = comp.free_params().into_inner();
            let mut scratch = comp.clone();
            let result = maximize(
                |x| {
                    scratch.set_free(x)?;
                    let (v, g) = weighted_log_pl_and_grad(data, &weights, &scratch, lambda)?;
                    Ok((v, g.into_inner()))
                },
                x0,
                &opts.inner,
            )?;
            let mut updated = comp.clone();
            updated.set_free(&result.x)?;
            Ok((updated, InnerStats::from(&result)))
        })
        .collect();
    let mut components = Vec::with_capacity(m.k());
    let mut stats = Vec::with_capacity(m.k());
    for res in results {
        let (c, s) = res?;
        components.push(c);
        stats.push(s);
    }
    Ok((MixtureModel::new(update_mixing(r), components)?, stats))
}

/// Moves the responsibility of every component with effective count below one
/// onto the sample whose best component log-PL is lowest.
fn handle_collapse(r: &mut Responsibilities, log_pl: &[f64]) -> Vec<FitEvent> {
    let k = r.k;
    if k == 1 {
        return Vec::new();
    }
    let counts = r.effective_counts();
    let mut events = Vec::new();
    let mut taken: Vec<usize> = Vec::new();
    for (comp, &count) in counts.iter().enumerate() {
        if count >= 1.0 {
            continue;
        }
        let best: Vec<f64> = log_pl
            .chunks(k)
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let Some(sample) = (0..best.len())
            .filter(|b| !taken.contains(b))
            .min_by(|&a, &b| best[a].total_cmp(&best[b]).then(a.cmp(&b)))
        else {
            continue;
        };
        taken.push(sample);
        for (b, row) in r.gamma.chunks_mut(k).enumerate() {
            if b == sample {
                row.iter_mut().for_each(|g| *g = 0.0);
                row[comp] = 1.0;
                continue;
            }
            row[comp] = 0.0;
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|g| *g /= total);
            } else {
                let live = (0..k).filter(|&j| j != comp).count() as f64;
                for (j, g) in row.iter_mut().enumerate() {
                    *g = if j == comp { 0.0 } else { 1.0 / live };
                }
            }
        }
        events.push(FitEvent::Collapse {
            component: comp,
            effective_count: count,
            reseeded_sample: sample,
        });
    }
    events
}

/// Alternates M-steps and PL-based E-steps starting from `init`.
///
/// Stops when the relative change of the mixture log-PL drops below
/// `opts.tolerance` or after `opts.max_iterations` outer iterations.
pub fn fit(data: &Dataset, init: &Responsibilities, opts: &FitOptions) -> Result<(MixtureModel, FitReport)> {
    let start = Instant::now();
    let k = init.k();
    if init.n_samples() != data.len() {
        return Err(Error::invalid(format!(
            "initial responsibilities have {} rows for {} samples",
            init.n_samples(),
            data.len()
        )));
    }
    let components = match &opts.initial_components {
        Some(c) if c.len() == k => c.clone(),
        Some(c) => {
            return Err(Error::invalid(format!(
                "{} initial components for K={k}",
                c.len()
            )))
        }
        None => {
            let c = ComponentParams::zeros(data.n_sites(), data.q(), opts.beta, opts.tie_mode)?;
            vec![c; k]
        }
    };
    let mut model = MixtureModel::new(update_mixing(init), components)?;
    model.check_data(data)?;
    let mut gamma = init.clone();
    let mut records: Vec<IterationRecord> = Vec::new();
    let mut converged = false;
    let mut log_pl = component_log_pl_matrix(data, &model)?;

    for iteration in 1..=opts.max_iterations {
        let mut events = handle_collapse(&mut gamma, &log_pl);
        let (next, inner) = m_step(data, &gamma, &model, opts)?;
        model = next;
        log_pl = component_log_pl_matrix(data, &model)?;
        gamma = responsibilities_from_log_pl(&log_pl, &model)?;
        let (value, _) = mixture_log_pl(data, &model, &gamma)?;
        let mut done = false;
        if let Some(prev) = records.last().map(|r| r.mixture_log_pl) {
            let relative = (value - prev) / prev.abs().max(f64::MIN_POSITIVE);
            if relative < -1e-6 {
                events.push(FitEvent::ObjectiveDecrease { relative });
            }
            done = relative.abs() < opts.tolerance;
        }
        records.push(IterationRecord {
            iteration,
            mixture_log_pl: value,
            pi: model.pi().to_vec(),
            effective_counts: gamma.effective_counts(),
            inner,
            events,
        });
        if done {
            converged = true;
            break;
        }
    }
    Ok((
        model,
        FitReport {
            iterations: records,
            converged,
            responsibilities: gamma,
            elapsed: start.elapsed(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_models::{component_log_pl, SpinConfiguration};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(b: usize, n: usize, q: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Dataset::new(
            (0..b)
                .map(|_| SpinConfiguration::new((0..n).map(|_| rng.random_range(0..q as u8)).collect(), q).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn random_component(n: usize, q: usize, seed: u64) -> ComponentParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ComponentParams::zeros(n, q, 1.0, TieMode::Free).unwrap();
        let theta: Vec<f64> = (0..p.num_free()).map(|_| rng.random_range(-0.5..0.5)).collect();
        p.set_free(&theta).unwrap();
        p
    }

    #[test]
    fn mixture_validation() {
        let c = ComponentParams::zeros(3, 2, 1.0, TieMode::Free).unwrap();
        assert!(MixtureModel::new(vec![0.5, 0.6], vec![c.clone(), c.clone()]).is_err());
        assert!(MixtureModel::new(vec![-0.5, 1.5], vec![c.clone(), c.clone()]).is_err());
        assert!(MixtureModel::new(vec![1.0], vec![]).is_err());
        let other = ComponentParams::zeros(4, 2, 1.0, TieMode::Free).unwrap();
        assert!(MixtureModel::new(vec![0.5, 0.5], vec![c.clone(), other]).is_err());
        let m = MixtureModel::new(vec![0.1 + 0.2, 0.7], vec![c.clone(), c]).unwrap();
        assert!((m.pi().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn responsibilities_validation() {
        assert!(Responsibilities::from_rows(&[vec![0.5, 0.6]]).is_err());
        assert!(Responsibilities::from_rows(&[vec![-0.5, 1.5]]).is_err());
        assert!(Responsibilities::from_rows(&[vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(Responsibilities::one_hot(&[0, 2], 2).is_err());
        let r = Responsibilities::one_hot(&[1, 0], 2).unwrap();
        assert_eq!(r.hard_labels(), vec![1, 0]);
    }

    #[test]
    fn single_component_responsibilities_are_one() {
        let data = random_data(20, 5, 3, 1);
        let m = MixtureModel::uniform(vec![random_component(5, 3, 2)]).unwrap();
        let r = responsibilities_pl(&data, &m).unwrap();
        assert!(r.as_slice().iter().all(|&g| g == 1.0));
    }

    #[test]
    fn identical_components_return_prior() {
        let data = random_data(15, 6, 2, 3);
        let c = random_component(6, 2, 4);
        let m = MixtureModel::new(vec![0.3, 0.7], vec![c.clone(), c]).unwrap();
        let r = responsibilities_pl(&data, &m).unwrap();
        for row in r.rows() {
            assert!((row[0] - 0.3).abs() < 1e-12 && (row[1] - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weight_component_gets_zero_responsibility() {
        let data = random_data(10, 4, 2, 5);
        let m = MixtureModel::new(
            vec![1.0, 0.0],
            vec![random_component(4, 2, 6), random_component(4, 2, 7)],
        )
        .unwrap();
        let r = responsibilities_pl(&data, &m).unwrap();
        assert!(r.rows().all(|row| row == [1.0, 0.0]));
    }

    #[test]
    fn update_mixing_examples() {
        let r = Responsibilities::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(update_mixing(&r), vec![0.5, 0.5]);
        let r = Responsibilities::one_hot(&[0, 0, 0], 3).unwrap();
        assert_eq!(update_mixing(&r), vec![1.0, 0.0, 0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let raw: Vec<f64> = (0..4).map(|_| rng.random::<f64>()).collect();
                let t: f64 = raw.iter().sum();
                raw.iter().map(|x| x / t).collect()
            })
            .collect();
        let pi = update_mixing(&Responsibilities::from_rows(&rows).unwrap());
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_pl_reduces_to_component_pl() {
        for q in [2, 4] {
            let data = random_data(25, 6, q, 10 + q as u64);
            let c = random_component(6, q, 11);
            let m = MixtureModel::uniform(vec![c.clone()]).unwrap();
            let (v, table) = mixture_log_pl(&data, &m, &Responsibilities::ones(25)).unwrap();
            let mean: f64 = data.samples().iter().map(|s| component_log_pl(s, &c).unwrap()).sum::<f64>() / 25.0;
            assert!((v - mean).abs() < 1e-12);
            assert_eq!(table.n_samples(), 25);
        }
    }

    #[test]
    fn uniform_mixture_pl() {
        let data = random_data(8, 5, 2, 12);
        let z = ComponentParams::zeros(5, 2, 1.0, TieMode::Free).unwrap();
        let m = MixtureModel::uniform(vec![z.clone(), z]).unwrap();
        let r = responsibilities_pl(&data, &m).unwrap();
        let (v, table) = mixture_log_pl(&data, &m, &r).unwrap();
        assert!((v - 5.0 * 0.5f64.ln()).abs() < 1e-12);
        for b in 0..8 {
            for n in 0..5 {
                assert!((table.inv_u(b, n) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn overflow_is_reported_with_locus() {
        let data = random_data(3, 3, 2, 13);
        let huge = ComponentParams::ising(1.0, &[f64::MAX, 0.0, 0.0], |_, _| f64::MAX).unwrap();
        let m = MixtureModel::uniform(vec![huge]).unwrap();
        let err = mixture_log_pl(&data, &m, &Responsibilities::ones(3)).unwrap_err();
        assert!(matches!(err, Error::NumericOverflow { component: 0, .. }), "{err:?}");
    }

    #[test]
    fn label_permutation_symmetry() {
        let data = random_data(30, 6, 3, 14);
        let m = MixtureModel::new(vec![0.35, 0.65], vec![random_component(6, 3, 15), random_component(6, 3, 16)]).unwrap();
        let swapped = m.permuted(&[1, 0]).unwrap();
        let r1 = responsibilities_pl(&data, &m).unwrap();
        let r2 = responsibilities_pl(&data, &swapped).unwrap();
        let v1 = mixture_log_pl(&data, &m, &r1).unwrap().0;
        let v2 = mixture_log_pl(&data, &swapped, &r2).unwrap().0;
        assert_eq!(v1, v2);

        let m3 = MixtureModel::new(
            vec![0.2, 0.3, 0.5],
            vec![random_component(6, 3, 17), random_component(6, 3, 18), random_component(6, 3, 19)],
        )
        .unwrap();
        let p3 = m3.permuted(&[2, 0, 1]).unwrap();
        let v1 = mixture_log_pl(&data, &m3, &responsibilities_pl(&data, &m3).unwrap()).unwrap().0;
        let v2 = mixture_log_pl(&data, &p3, &responsibilities_pl(&data, &p3).unwrap()).unwrap().0;
        assert!((v1 - v2).abs() < 1e-12);
    }

    #[test]
    fn collapse_moves_column_to_worst_sample() {
        let mut r = Responsibilities::from_rows(&[vec![0.9, 0.1], vec![0.8, 0.2], vec![0.95, 0.05], vec![0.7, 0.3]]).unwrap();
        // best log-PL per sample: -1, -5, -2, -3 -> sample 1 is worst
        let log_pl = vec![-1.0, -4.0, -5.0, -6.0, -2.0, -3.0, -3.0, -9.0];
        let events = handle_collapse(&mut r, &log_pl);
        assert_eq!(events.len(), 1);
        assert!(matches!(events[0], FitEvent::Collapse { component: 1, reseeded_sample: 1, .. }));
        assert_eq!(r.row(1), &[0.0, 1.0]);
        assert_eq!(r.row(0), &[1.0, 0.0]);
        assert!((r.effective_counts()[1] - 1.0).abs() < 1e-12);
    }
}
