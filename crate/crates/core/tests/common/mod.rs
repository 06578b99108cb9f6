//! Reference implementations written from the model definitions alone. They
//! recompute every energy from scratch and share no code paths with the crate.

#![allow(dead_code)]

use mixpl::{ComponentParams, Dataset, SpinConfiguration, TieMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A component described by plain tables.
#[derive(Debug, Clone)]
pub enum Oracle {
    /// `h[i][a]`, and `j[i][k]` (row = state of `i`) for `i < k`.
    Potts {
        beta: f64,
        h: Vec<Vec<f64>>,
        j: Vec<Vec<Vec<f64>>>,
    },
    /// Spins `-1/+1` with `E = sum h_i s_i + sum_{i<k} J_ik s_i s_k`.
    Ising { beta: f64, h: Vec<f64>, j: Vec<Vec<f64>> },
    /// Zero fields and one coupling on every pair.
    InfiniteRange { beta: f64, n: usize, j: f64 },
}

fn spin(s: u8) -> f64 {
    if s == 0 {
        -1.0
    } else {
        1.0
    }
}

impl Oracle {
    pub fn n(&self) -> usize {
        match self {
            Oracle::Potts { h, .. } => h.len(),
            Oracle::Ising { h, .. } => h.len(),
            Oracle::InfiniteRange { n, .. } => *n,
        }
    }

    pub fn q(&self) -> usize {
        match self {
            Oracle::Potts { h, .. } => h[0].len(),
            _ => 2,
        }
    }

    pub fn tie_mode(&self) -> TieMode {
        match self {
            Oracle::InfiniteRange { .. } => TieMode::InfiniteRange,
            _ => TieMode::Free,
        }
    }

    /// `log phi(s)`.
    pub fn energy(&self, s: &[u8]) -> f64 {
        match self {
            Oracle::Potts { beta, h, j } => {
                let q = h[0].len();
                let mut e = 0.0;
                for i in 0..s.len() {
                    e += h[i][s[i] as usize];
                    for k in i + 1..s.len() {
                        e += j[i][k][s[i] as usize * q + s[k] as usize];
                    }
                }
                beta * e
            }
            Oracle::Ising { beta, h, j } => {
                let mut e = 0.0;
                for i in 0..s.len() {
                    e += h[i] * spin(s[i]);
                    for k in i + 1..s.len() {
                        e += j[i][k] * spin(s[i]) * spin(s[k]);
                    }
                }
                beta * e
            }
            Oracle::InfiniteRange { beta, j, .. } => {
                let mut e = 0.0;
                for i in 0..s.len() {
                    for k in i + 1..s.len() {
                        e += spin(s[i]) * spin(s[k]);
                    }
                }
                beta * j * e
            }
        }
    }

    pub fn params(&self) -> ComponentParams {
        match self {
            Oracle::Potts { beta, h, j } => {
                let (n, q) = (h.len(), h[0].len());
                let mut p = ComponentParams::zeros(n, q, *beta, TieMode::Free).unwrap();
                for i in 0..n {
                    for a in 0..q {
                        p.set_field(i, a, h[i][a]);
                    }
                    for k in i + 1..n {
                        p.set_coupling_block(i, k, &j[i][k]).unwrap();
                    }
                }
                p
            }
            Oracle::Ising { beta, h, j } => ComponentParams::ising(*beta, h, |a, b| j[a][b]).unwrap(),
            Oracle::InfiniteRange { beta, n, j } => ComponentParams::infinite_range(*n, *beta, *j).unwrap(),
        }
    }

    /// `p(s_site = a | rest)` for every `a`, from full energies.
    pub fn conditional(&self, s: &[u8], site: usize) -> Vec<f64> {
        let e: Vec<f64> = (0..self.q())
            .map(|a| {
                let mut t = s.to_vec();
                t[site] = a as u8;
                self.energy(&t)
            })
            .collect();
        let m = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = e.iter().map(|x| (x - m).exp()).sum();
        e.iter().map(|x| (x - m).exp() / z).collect()
    }

    pub fn log_pl(&self, s: &[u8]) -> f64 {
        (0..s.len()).map(|i| self.conditional(s, i)[s[i] as usize].ln()).sum()
    }

    /// `log sum_{a != s_site} phi(s with s_site = a) / phi(s)`.
    pub fn log_flip_odds(&self, s: &[u8], site: usize) -> f64 {
        let base = self.energy(s);
        let terms: Vec<f64> = (0..self.q())
            .filter(|&a| a != s[site] as usize)
            .map(|a| {
                let mut t = s.to_vec();
                t[site] = a as u8;
                self.energy(&t) - base
            })
            .collect();
        lse(&terms)
    }

    pub fn log_z(&self) -> f64 {
        let (n, q) = (self.n(), self.q());
        let energies: Vec<f64> = all_states(n, q).iter().map(|s| self.energy(s)).collect();
        lse(&energies)
    }

    /// Probabilities in lexicographic order, site 0 most significant.
    pub fn distribution(&self) -> Vec<f64> {
        let lz = self.log_z();
        all_states(self.n(), self.q())
            .iter()
            .map(|s| (self.energy(s) - lz).exp())
            .collect()
    }
}

pub fn lse(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Every configuration, site 0 most significant.
pub fn all_states(n: usize, q: usize) -> Vec<Vec<u8>> {
    let total = q.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut s = vec![0u8; n];
            for i in (0..n).rev() {
                s[i] = (idx % q) as u8;
                idx /= q;
            }
            s
        })
        .collect()
}

pub fn random_potts(r: &mut ChaCha8Rng, n: usize, q: usize, scale: f64) -> Oracle {
    let h = (0..n)
        .map(|_| (0..q).map(|_| r.random_range(-scale..scale)).collect())
        .collect();
    let j = (0..n)
        .map(|i| {
            (0..n)
                .map(|k| {
                    if k > i {
                        (0..q * q).map(|_| r.random_range(-scale..scale)).collect()
                    } else {
                        Vec::new()
                    }
                })
                .collect()
        })
        .collect();
    Oracle::Potts {
        beta: r.random_range(0.5..1.5),
        h,
        j,
    }
}

pub fn random_ising(r: &mut ChaCha8Rng, n: usize, scale: f64) -> Oracle {
    let h = (0..n).map(|_| r.random_range(-scale..scale)).collect();
    let mut j = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in i + 1..n {
            let v = r.random_range(-scale..scale);
            j[i][k] = v;
            j[k][i] = v;
        }
    }
    Oracle::Ising {
        beta: r.random_range(0.5..1.5),
        h,
        j,
    }
}

pub fn random_ir(r: &mut ChaCha8Rng, n: usize) -> Oracle {
    Oracle::InfiniteRange {
        beta: 1.0 / n as f64,
        n,
        j: r.random_range(-2.0..4.0),
    }
}

/// One of the three kinds, chosen by `kind % 3`; always Potts when `q > 2`.
pub fn random_oracle(r: &mut ChaCha8Rng, kind: usize, n: usize, q: usize) -> Oracle {
    if q > 2 {
        return random_potts(r, n, q, 0.8);
    }
    match kind % 3 {
        0 => random_potts(r, n, q, 0.8),
        1 => random_ising(r, n, 0.8),
        _ => random_ir(r, n),
    }
}

pub fn random_config(r: &mut ChaCha8Rng, n: usize, q: usize) -> SpinConfiguration {
    SpinConfiguration::new((0..n).map(|_| r.random_range(0..q as u8)).collect(), q).unwrap()
}

pub fn random_data(r: &mut ChaCha8Rng, b: usize, n: usize, q: usize) -> Dataset {
    Dataset::new((0..b).map(|_| random_config(r, n, q)).collect()).unwrap()
}

/// Rows on the simplex with strictly positive entries.
pub fn random_gamma(r: &mut ChaCha8Rng, b: usize, k: usize) -> Vec<Vec<f64>> {
    (0..b)
        .map(|_| {
            let row: Vec<f64> = (0..k).map(|_| r.random_range(0.05..1.0)).collect();
            let t: f64 = row.iter().sum();
            row.into_iter().map(|x| x / t).collect()
        })
        .collect()
}

/// `(1/B) sum_b sum_n -log(1 + sum_k gamma_bk sum_{a != s} phi_k(s^a)/phi_k(s))`.
pub fn mixture_log_pl(data: &Dataset, comps: &[Oracle], gamma: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (s, g) in data.samples().iter().zip(gamma) {
        let s = s.states();
        for site in 0..s.len() {
            let u: f64 = comps
                .iter()
                .zip(g)
                .map(|(c, &w)| w * c.log_flip_odds(s, site).exp())
                .sum();
            total -= (1.0 + u).ln();
        }
    }
    total / data.len() as f64
}

/// `gamma_bk` proportional to `pi_k PL_k(s_b)`.
pub fn pl_gamma(data: &Dataset, comps: &[Oracle], pi: &[f64]) -> Vec<Vec<f64>> {
    data.samples()
        .iter()
        .map(|s| {
            let t: Vec<f64> = comps
                .iter()
                .zip(pi)
                .map(|(c, p)| p.ln() + c.log_pl(s.states()))
                .collect();
            let z = lse(&t);
            t.iter().map(|x| (x - z).exp()).collect()
        })
        .collect()
}

/// `sum_b log sum_k pi_k phi_k(s_b) / Z_k`.
pub fn exact_log_likelihood(data: &Dataset, comps: &[Oracle], pi: &[f64]) -> f64 {
    let lz: Vec<f64> = comps.iter().map(Oracle::log_z).collect();
    data.samples()
        .iter()
        .map(|s| {
            let t: Vec<f64> = comps
                .iter()
                .zip(pi)
                .zip(&lz)
                .map(|((c, p), z)| p.ln() + c.energy(s.states()) - z)
                .collect();
            lse(&t)
        })
        .sum()
}

/// Central differences of `f` at `x`.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Worst `|a - b| / max(|b|, 1)` over entries.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1.0))
        .fold(0.0, f64::max)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
