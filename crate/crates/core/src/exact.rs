//! Brute-force enumeration over all `q^N` configurations.
//!
//! Configurations are enumerated in lexicographic order of their states with
//! site 0 as the most significant digit, so state index `0` is all zeros and
//! index `q^N - 1` is all `q - 1`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixture::MixtureModel;
use crate::numeric::log_sum_exp;
use crate::spin_models::{ComponentParams, Dataset, GradientVector, SpinConfiguration};

/// Largest state space that will be enumerated.
pub const MAX_STATES: usize = 1 << 24;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSummary {
    pub log_z: f64,
    /// Probability of every configuration in enumeration order, when requested.
    pub state_probabilities: Option<Vec<f64>>,
}

/// Number of configurations, or a capacity error above [`MAX_STATES`].
pub fn state_count(n: usize, q: usize) -> Result<usize> {
    let states = (q as f64).powi(n as i32);
    if states > MAX_STATES as f64 {
        return Err(Error::Capacity {
            states,
            limit: MAX_STATES,
        });
    }
    Ok(q.pow(n as u32))
}

/// Configuration at position `index` of the enumeration order.
pub fn config_at(index: usize, n: usize, q: usize) -> SpinConfiguration {
    let mut states = vec![0u8; n];
    let mut rest = index;
    for site in (0..n).rev() {
        states[site] = (rest % q) as u8;
        rest /= q;
    }
    SpinConfiguration::new(states, q).expect("digits are below q")
}

/// Position of `s` in the enumeration order.
pub fn index_of(s: &SpinConfiguration) -> usize {
    s.states()
        .iter()
        .fold(0, |acc, &x| acc * s.q() + usize::from(x))
}

fn advance(states: &mut [u8], q: u8) {
    for x in states.iter_mut().rev() {
        *x += 1;
        if *x < q {
            return;
        }
        *x = 0;
    }
}

/// `log phi` of every configuration, in enumeration order.
pub fn all_log_potentials(p: &ComponentParams) -> Result<Vec<f64>> {
    let (n, q) = (p.n_sites(), p.q());
    let total = state_count(n, q)?;
    let mut out = vec![0.0; total];
    out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut states = config_at(c * CHUNK, n, q).states().to_vec();
        for slot in chunk.iter_mut() {
            *slot = p.log_potential_unchecked(&states);
            advance(&mut states, q as u8);
        }
    });
    Ok(out)
}

pub fn partition_function(p: &ComponentParams) -> Result<ExactSummary> {
    let log_z = log_sum_exp(&all_log_potentials(p)?);
    Ok(ExactSummary {
        log_z,
        state_probabilities: None,
    })
}

/// Partition function together with the full state distribution.
pub fn exact_distribution(p: &ComponentParams) -> Result<ExactSummary> {
    let mut probs = all_log_potentials(p)?;
    let log_z = log_sum_exp(&probs);
    for v in probs.iter_mut() {
        *v = (*v - log_z).exp();
    }
    Ok(ExactSummary {
        log_z,
        state_probabilities: Some(probs),
    })
}

/// Conditional `p(s_n = a | s_{-n})` obtained by marginalizing the enumerated joint.
pub fn exact_conditional(s: &SpinConfiguration, site: usize, p: &ComponentParams) -> Result<Vec<f64>> {
    if site >= p.n_sites() {
        return Err(Error::invalid(format!("site {site} out of range")));
    }
    let dist = exact_distribution(p)?;
    let probs = dist.state_probabilities.expect("requested");
    let joint: Vec<f64> = (0..p.q())
        .map(|a| probs[index_of(&s.with_state(site, a as u8))])
        .collect();
    let total: f64 = joint.iter().sum();
    Ok(joint.into_iter().map(|x| x / total).collect())
}

fn component_log_zs(m: &MixtureModel) -> Result<Vec<f64>> {
    m.components()
        .iter()
        .map(|c| partition_function(c).map(|s| s.log_z))
        .collect()
}

fn check_data(data: &Dataset, m: &MixtureModel) -> Result<()> {
    if data.n_sites() != m.n_sites() || data.q() != m.q() {
        return Err(Error::invalid("dataset shape does not match the mixture"));
    }
    Ok(())
}

/// Per-component `log pi_k + log p_k(s)` with exact normalizers.
fn joint_terms(s: &SpinConfiguration, m: &MixtureModel, log_zs: &[f64]) -> Vec<f64> {
    m.components()
        .iter()
        .zip(m.pi())
        .zip(log_zs)
        .map(|((c, &pi), &lz)| pi.ln() + c.log_potential_unchecked(s.states()) - lz)
        .collect()
}

/// `sum_b log sum_k pi_k phi_k(s_b) / Z_k`.
pub fn exact_log_likelihood(data: &Dataset, m: &MixtureModel) -> Result<f64> {
    check_data(data, m)?;
    let log_zs = component_log_zs(m)?;
    Ok(data
        .samples()
        .iter()
        .map(|s| log_sum_exp(&joint_terms(s, m, &log_zs)))
        .sum())
}

/// Exact posterior over components for one sample.
pub fn exact_responsibilities(s: &SpinConfiguration, m: &MixtureModel) -> Result<Vec<f64>> {
    m.validate()?;
    if s.n_sites() != m.n_sites() || s.q() != m.q() {
        return Err(Error::invalid("configuration shape does not match the mixture"));
    }
    let log_zs = component_log_zs(m)?;
    let mut terms = joint_terms(s, m, &log_zs);
    let lse = log_sum_exp(&terms);
    for t in terms.iter_mut() {
        *t = (*t - lse).exp();
    }
    Ok(terms)
}

/// Exact model moments `E_p[d log phi / d theta]` of one component.
pub fn model_moments(p: &ComponentParams) -> Result<GradientVector> {
    let dist = exact_distribution(p)?;
    let probs = dist.state_probabilities.expect("requested");
    let (n, q) = (p.n_sites(), p.q());
    let dim = p.num_free();
    let partials: Vec<Vec<f64>> = probs
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut acc = vec![0.0; dim];
            let mut states = config_at(c * CHUNK, n, q).states().to_vec();
            for &pr in chunk {
                p.add_potential_gradient(&states, pr, &mut acc);
                advance(&mut states, q as u8);
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; dim];
    for part in partials {
        for (o, x) in out.iter_mut().zip(part) {
            *o += x;
        }
    }
    Ok(GradientVector::new(out))
}

/// Gradient of [`exact_log_likelihood`] with respect to component `k`'s free
/// parameters: `sum_b gamma_bk (d log phi_k(s_b) - E_k[d log phi_k])`.
pub fn exact_loglik_gradient(data: &Dataset, m: &MixtureModel, k: usize) -> Result<GradientVector> {
    check_data(data, m)?;
    if k >= m.k() {
        return Err(Error::invalid(format!("component {k} out of range")));
    }
    let log_zs = component_log_zs(m)?;
    let comp = &m.components()[k];
    let moments = model_moments(comp)?;
    let mut grad = vec![0.0; comp.num_free()];
    for s in data.samples() {
        let terms = joint_terms(s, m, &log_zs);
        let gamma = (terms[k] - log_sum_exp(&terms)).exp();
        if gamma == 0.0 {
            continue;
        }
        comp.add_potential_gradient(s.states(), gamma, &mut grad);
        for (g, mu) in grad.iter_mut().zip(moments.iter()) {
            *g -= gamma * mu;
        }
    }
    Ok(GradientVector::new(grad))
}
