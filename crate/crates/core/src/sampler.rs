//! Sequential-scan Gibbs sampling.
//!
//! One sweep updates sites `0..N` in order, each drawn from its conditional
//! given the current state of the others. A dataset is one long chain: `burn_in`
//! sweeps are discarded, then a sample is kept after every `thin` sweeps.
//! Randomness comes from ChaCha8 streams, so output depends only on the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mixture::MixtureModel;
use crate::spin_models::{ComponentParams, Dataset, SpinConfiguration};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainInit {
    UniformRandom,
    /// Every site starts in the given state.
    AllSame(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub burn_in: usize,
    pub thin: usize,
    pub init: ChainInit,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            burn_in: 500,
            thin: 10,
            init: ChainInit::UniformRandom,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub data: Dataset,
    /// Generating component of every sample.
    pub labels: Vec<usize>,
}

fn categorical(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (a, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    // rounding left u above the accumulated mass; pick the last state with mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

struct Chain<'a> {
    params: &'a ComponentParams,
    states: Vec<u8>,
    magnet: f64,
    probs: Vec<f64>,
}

impl<'a> Chain<'a> {
    fn new(params: &'a ComponentParams, init: ChainInit, rng: &mut ChaCha8Rng) -> Result<Self> {
        let (n, q) = (params.n_sites(), params.q());
        let states: Vec<u8> = match init {
            ChainInit::UniformRandom => (0..n).map(|_| rng.random_range(0..q) as u8).collect(),
            ChainInit::AllSame(a) if usize::from(a) < q => vec![a; n],
            ChainInit::AllSame(a) => {
                return Err(Error::invalid(format!("initial state {a} is outside [0, {q})")))
            }
        };
        let magnet = params.magnet_of(&states);
        Ok(Self {
            params,
            states,
            magnet,
            probs: vec![0.0; q],
        })
    }

    fn sweep(&mut self, rng: &mut ChaCha8Rng) {
        let tracks_magnet = self.params.ir_coupling().is_some();
        for site in 0..self.states.len() {
            self.params
                .site_energies(&self.states, self.magnet, site, &mut self.probs);
            crate::numeric::softmax_in_place(&mut self.probs);
            let new = categorical(&self.probs, rng.random::<f64>()) as u8;
            let old = std::mem::replace(&mut self.states[site], new);
            if tracks_magnet && old != new {
                self.magnet += if new == 1 { 2.0 } else { -2.0 };
            }
        }
    }
}

fn run_chain(p: &ComponentParams, count: usize, cfg: &SamplerConfig, rng: &mut ChaCha8Rng) -> Result<Vec<SpinConfiguration>> {
    if cfg.thin == 0 {
        return Err(Error::invalid("thin must be at least 1"));
    }
    let mut chain = Chain::new(p, cfg.init, rng)?;
    for _ in 0..cfg.burn_in {
        chain.sweep(rng);
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for _ in 0..cfg.thin {
            chain.sweep(rng);
        }
        out.push(SpinConfiguration::new(chain.states.clone(), p.q())?);
    }
    Ok(out)
}

/// `count` thinned samples from one Gibbs chain.
pub fn gibbs_sample(p: &ComponentParams, count: usize, cfg: &SamplerConfig) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Dataset::new(run_chain(p, count, cfg, &mut rng)?)
}

/// Labels drawn i.i.d. from `pi`, then one chain per component supplying its
/// samples in order. Labels use ChaCha stream 0 and component `k` stream `k + 1`.
pub fn sample_mixture(m: &MixtureModel, count: usize, cfg: &SamplerConfig) -> Result<LabeledDataset> {
    m.validate()?;
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let mut label_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let labels: Vec<usize> = (0..count)
        .map(|_| categorical(m.pi(), label_rng.random::<f64>()))
        .collect();
    let mut per_component: Vec<std::vec::IntoIter<SpinConfiguration>> = Vec::with_capacity(m.k());
    for (k, comp) in m.components().iter().enumerate() {
        let needed = labels.iter().filter(|&&l| l == k).count();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(k as u64 + 1);
        let samples = if needed == 0 {
            Vec::new()
        } else {
            run_chain(comp, needed, cfg, &mut rng)?
        };
        per_component.push(samples.into_iter());
    }
    let samples = labels
        .iter()
        .map(|&l| per_component[l].next().expect("one sample per label"))
        .collect();
    Ok(LabeledDataset {
        data: Dataset::new(samples)?,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_models::TieMode;

    #[test]
    fn categorical_draws() {
        assert_eq!(categorical(&[0.25, 0.75], 0.1), 0);
        assert_eq!(categorical(&[0.25, 0.75], 0.3), 1);
        assert_eq!(categorical(&[1.0, 0.0], 0.999_999), 0);
        assert_eq!(categorical(&[0.5, 0.5 - 1e-17, 0.0], 1.0 - 1e-18), 1);
    }

    #[test]
    fn zero_model_gives_unbiased_spins() {
        let p = ComponentParams::zeros(6, 2, 1.0, TieMode::Free).unwrap();
        let b = 4000;
        let cfg = SamplerConfig {
            seed: 3,
            burn_in: 0,
            thin: 1,
            init: ChainInit::AllSame(1),
        };
        let data = gibbs_sample(&p, b, &cfg).unwrap();
        for site in 0..6 {
            let mean: f64 = data
                .samples()
                .iter()
                .map(|s| if s.states()[site] == 1 { 1.0 } else { -1.0 })
                .sum::<f64>()
                / b as f64;
            assert!(mean.abs() <= 4.0 / (b as f64).sqrt(), "site {site}: {mean}");
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let p = ComponentParams::infinite_range(50, 0.02, 1.0).unwrap();
        let cfg = SamplerConfig {
            seed: 9,
            ..Default::default()
        };
        let a = gibbs_sample(&p, 20, &cfg).unwrap();
        let b = gibbs_sample(&p, 20, &cfg).unwrap();
        assert_eq!(a, b);
        let c = gibbs_sample(&p, 20, &SamplerConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_mixing_gives_single_label() {
        let c0 = ComponentParams::zeros(4, 2, 1.0, TieMode::Free).unwrap();
        let c1 = ComponentParams::infinite_range(4, 1.0, 1.0).unwrap();
        let m = MixtureModel::new(vec![1.0, 0.0], vec![c0, c1]).unwrap();
        let out = sample_mixture(&m, 50, &SamplerConfig::default()).unwrap();
        assert!(out.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn label_fraction_concentrates() {
        let c = ComponentParams::zeros(3, 2, 1.0, TieMode::Free).unwrap();
        let m = MixtureModel::uniform(vec![c.clone(), c]).unwrap();
        let b = 10_000;
        let cfg = SamplerConfig {
            burn_in: 0,
            thin: 1,
            ..Default::default()
        };
        let out = sample_mixture(&m, b, &cfg).unwrap();
        let frac = out.labels.iter().filter(|&&l| l == 0).count() as f64 / b as f64;
        assert!((frac - 0.5).abs() <= 4.0 * (0.25 / b as f64).sqrt());
    }

    #[test]
    fn rejects_bad_config() {
        let c = ComponentParams::zeros(3, 2, 1.0, TieMode::Free).unwrap();
        assert!(gibbs_sample(&c, 0, &SamplerConfig::default()).is_err());
        let cfg = SamplerConfig {
            thin: 0,
            ..Default::default()
        };
        assert!(gibbs_sample(&c, 5, &cfg).is_err());
        let cfg = SamplerConfig {
            init: ChainInit::AllSame(2),
            ..Default::default()
        };
        assert!(gibbs_sample(&c, 5, &cfg).is_err());
    }
}
