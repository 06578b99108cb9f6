//! Ising/Potts component parameterization and single-component
//! pseudolikelihood quantities.
//!
//! Storage is always the Potts form: an `N x q` field table and one `q x q`
//! coupling block per unordered pair `i < j`. Ising components (`q = 2`) use
//! the reparameterization `h_i(1) = +h_i`, `h_i(0) = -h_i` and
//! `J_ij(a, b) = J_ij * spin(a) * spin(b)`, where state 0 is spin -1 and
//! state 1 is spin +1.
//!
//! # Free-parameter layout
//!
//! [`GradientVector`]s and [`ComponentParams::free_params`] share one layout:
//!
//! * `q = 2`, [`TieMode::Free`]: `N` Ising fields `h_i`, then one Ising
//!   coupling `J_ij` per pair in the order `(0,1), (0,2), .., (N-2,N-1)`.
//! * `q > 2`, [`TieMode::Free`]: `N * q` fields indexed `i * q + a`, then one
//!   `q x q` row-major block per pair in the same pair order.
//! * [`TieMode::InfiniteRange`]: a single slot holding the shared coupling.
//!   Fields are held fixed at their stored values.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::softmax_in_place;

/// Samples per work unit in parallel reductions. Fixed so sums do not depend
/// on the thread count.
const CHUNK: usize = 32;

/// Maps a binary state to its Ising spin.
#[inline]
pub fn decode_spin(state: u8) -> i8 {
    if state == 0 {
        -1
    } else {
        1
    }
}

/// Maps an Ising spin to its binary state.
#[inline]
pub fn encode_spin(spin: i8) -> u8 {
    u8::from(spin > 0)
}

#[inline]
fn spin_value(state: u8) -> f64 {
    if state == 0 {
        -1.0
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    states: Vec<u8>,
    q: usize,
}

impl SpinConfiguration {
    pub fn new(states: Vec<u8>, q: usize) -> Result<Self> {
        if !(2..=256).contains(&q) {
            return Err(Error::invalid(format!("q must be in [2, 256], got {q}")));
        }
        if states.is_empty() {
            return Err(Error::invalid("configuration has no sites"));
        }
        if let Some(pos) = states.iter().position(|&s| usize::from(s) >= q) {
            return Err(Error::invalid(format!(
                "state {} at site {pos} is outside [0, {q})",
                states[pos]
            )));
        }
        Ok(Self { states, q })
    }

    /// Builds a binary configuration from ±1 spins.
    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        if let Some(pos) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::invalid(format!("spin at site {pos} is not ±1")));
        }
        Self::new(spins.iter().map(|&s| encode_spin(s)).collect(), 2)
    }

    pub fn states(&self) -> &[u8] {
        &self.states
    }

    pub fn n_sites(&self) -> usize {
        self.states.len()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// ±1 spins; only meaningful for `q = 2`.
    pub fn spins(&self) -> Vec<i8> {
        self.states.iter().map(|&s| decode_spin(s)).collect()
    }

    /// Sum of spins (`q = 2`).
    pub fn magnetization(&self) -> f64 {
        self.states.iter().map(|&s| spin_value(s)).sum()
    }

    /// Maps every state `a` to `q - 1 - a`; for `q = 2` this is the global spin flip.
    pub fn reversed_states(&self) -> Self {
        let top = (self.q - 1) as u8;
        Self {
            states: self.states.iter().map(|&s| top - s).collect(),
            q: self.q,
        }
    }

    pub fn with_state(&self, site: usize, state: u8) -> Self {
        let mut out = self.clone();
        out.states[site] = state;
        out
    }
}

/// A homogeneous collection of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<SpinConfiguration>,
    n: usize,
    q: usize,
}

impl Dataset {
    pub fn new(samples: Vec<SpinConfiguration>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::invalid("dataset has no samples"))?;
        let (n, q) = (first.n_sites(), first.q());
        if let Some(b) = samples
            .iter()
            .position(|s| s.n_sites() != n || s.q() != q)
        {
            return Err(Error::invalid(format!(
                "sample {b} does not share (N={n}, q={q}) with sample 0"
            )));
        }
        Ok(Self { samples, n, q })
    }

    pub fn samples(&self) -> &[SpinConfiguration] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, b: usize) -> &SpinConfiguration {
        &self.samples[b]
    }

    /// Appends the samples of `other` after those of `self`.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        let mut samples = self.samples.clone();
        samples.extend_from_slice(&other.samples);
        Dataset::new(samples)
    }

    pub fn into_samples(self) -> Vec<SpinConfiguration> {
        self.samples
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TieMode {
    Free,
    /// One coupling shared by every pair; requires `q = 2`.
    InfiniteRange,
}

#[derive(Debug, Clone, PartialEq)]
enum Couplings {
    Blocks(Vec<f64>),
    InfiniteRange(f64),
}

/// Flat gradient (or parameter) vector in the free-parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn inf_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

impl std::ops::Deref for GradientVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Index of the unordered pair `i < j` among `n` sites.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

pub fn num_pairs(n: usize) -> usize {
    n * (n.saturating_sub(1)) / 2
}

/// One representative site per binary state together with the number of
/// sites in that state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SiteClasses {
    rep: [usize; 2],
    count: [f64; 2],
}

impl SiteClasses {
    pub(crate) fn of(states: &[u8]) -> Self {
        let mut rep = [usize::MAX; 2];
        let mut count = [0.0; 2];
        for (i, &s) in states.iter().enumerate() {
            let a = usize::from(s);
            if rep[a] == usize::MAX {
                rep[a] = i;
            }
            count[a] += 1.0;
        }
        Self { rep, count }
    }

    /// Number of sites `site` stands for; zero unless it is a representative.
    #[inline]
    pub(crate) fn multiplicity(&self, site: usize, state: u8) -> f64 {
        let a = usize::from(state);
        if self.rep[a] == site {
            self.count[a]
        } else {
            0.0
        }
    }

    pub(crate) fn representative(&self, state: u8) -> usize {
        self.rep[usize::from(state)]
    }
}

/// Parameters of one Ising or Potts component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentParams {
    beta: f64,
    n: usize,
    q: usize,
    fields: Vec<f64>,
    couplings: Couplings,
}

impl ComponentParams {
    /// All-zero parameters in the requested tie mode.
    pub fn zeros(n: usize, q: usize, beta: f64, tie: TieMode) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("component needs at least one site"));
        }
        if !(2..=256).contains(&q) {
            return Err(Error::invalid(format!("q must be in [2, 256], got {q}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        let couplings = match tie {
            TieMode::Free => Couplings::Blocks(vec![0.0; num_pairs(n) * q * q]),
            TieMode::InfiniteRange => {
                if q != 2 {
                    return Err(Error::invalid("infinite-range tying requires q = 2"));
                }
                Couplings::InfiniteRange(0.0)
            }
        };
        Ok(Self {
            beta,
            n,
            q,
            fields: vec![0.0; n * q],
            couplings,
        })
    }

    /// Infinite-range Ising component with zero fields.
    pub fn infinite_range(n: usize, beta: f64, coupling: f64) -> Result<Self> {
        let mut p = Self::zeros(n, 2, beta, TieMode::InfiniteRange)?;
        p.couplings = Couplings::InfiniteRange(coupling);
        Ok(p)
    }

    /// Ising component from scalar fields and a symmetric coupling function.
    pub fn ising(beta: f64, fields: &[f64], coupling: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let n = fields.len();
        let mut p = Self::zeros(n, 2, beta, TieMode::Free)?;
        for (i, &h) in fields.iter().enumerate() {
            p.set_ising_field(i, h);
        }
        for i in 0..n {
            for j in i + 1..n {
                p.set_ising_coupling(i, j, coupling(i, j))?;
            }
        }
        Ok(p)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn tie_mode(&self) -> TieMode {
        match self.couplings {
            Couplings::Blocks(_) => TieMode::Free,
            Couplings::InfiniteRange(_) => TieMode::InfiniteRange,
        }
    }

    pub fn field(&self, site: usize, state: usize) -> f64 {
        self.fields[site * self.q + state]
    }

    pub fn set_field(&mut self, site: usize, state: usize, value: f64) {
        self.fields[site * self.q + state] = value;
    }

    /// Sets the Ising field `h_i` (`q = 2`).
    pub fn set_ising_field(&mut self, site: usize, h: f64) {
        debug_assert_eq!(self.q, 2);
        self.fields[2 * site] = -h;
        self.fields[2 * site + 1] = h;
    }

    /// Coupling `J_ij(a, b)`; zero on the diagonal.
    pub fn coupling(&self, i: usize, j: usize, a: usize, b: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match &self.couplings {
            Couplings::InfiniteRange(c) => c * spin_value(a as u8) * spin_value(b as u8),
            Couplings::Blocks(blocks) => {
                let q = self.q;
                if i < j {
                    blocks[pair_index(self.n, i, j) * q * q + a * q + b]
                } else {
                    blocks[pair_index(self.n, j, i) * q * q + b * q + a]
                }
            }
        }
    }

    /// The `q x q` block oriented from `i` to `j` (row = state of `i`).
    pub fn coupling_block(&self, i: usize, j: usize) -> Vec<f64> {
        let q = self.q;
        let mut out = vec![0.0; q * q];
        for a in 0..q {
            for b in 0..q {
                out[a * q + b] = self.coupling(i, j, a, b);
            }
        }
        out
    }

    /// Overwrites the block between `i` and `j`, given oriented from `i` to `j`.
    pub fn set_coupling_block(&mut self, i: usize, j: usize, block: &[f64]) -> Result<()> {
        let (n, q) = (self.n, self.q);
        if i == j || i >= n || j >= n {
            return Err(Error::invalid(format!("invalid pair ({i}, {j}) for N={n}")));
        }
        if block.len() != q * q {
            return Err(Error::invalid(format!(
                "coupling block has {} entries, expected {}",
                block.len(),
                q * q
            )));
        }
        let Couplings::Blocks(blocks) = &mut self.couplings else {
            return Err(Error::invalid("cannot set a block on a tied component"));
        };
        let (lo, hi, transpose) = if i < j { (i, j, false) } else { (j, i, true) };
        let base = pair_index(n, lo, hi) * q * q;
        for a in 0..q {
            for b in 0..q {
                let v = if transpose { block[b * q + a] } else { block[a * q + b] };
                blocks[base + a * q + b] = v;
            }
        }
        Ok(())
    }

    /// Sets the Ising coupling `J_ij` (`q = 2`, free mode).
    pub fn set_ising_coupling(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        self.set_coupling_block(i, j, &[value, -value, -value, value])
    }

    /// Shared coupling of an infinite-range component.
    pub fn ir_coupling(&self) -> Option<f64> {
        match self.couplings {
            Couplings::InfiniteRange(c) => Some(c),
            Couplings::Blocks(_) => None,
        }
    }

    pub fn set_ir_coupling(&mut self, value: f64) -> Result<()> {
        match &mut self.couplings {
            Couplings::InfiniteRange(c) => {
                *c = value;
                Ok(())
            }
            Couplings::Blocks(_) => Err(Error::invalid("component is not infinite-range")),
        }
    }

    /// Length of the free-parameter vector.
    pub fn num_free(&self) -> usize {
        match self.couplings {
            Couplings::InfiniteRange(_) => 1,
            Couplings::Blocks(_) if self.q == 2 => self.n + num_pairs(self.n),
            Couplings::Blocks(_) => self.n * self.q + num_pairs(self.n) * self.q * self.q,
        }
    }

    /// Free parameters in the documented layout.
    ///
    /// For `q = 2` the stored tables are first reduced to canonical Ising
    /// form, which changes the log-potential by at most a constant.
    pub fn free_params(&self) -> GradientVector {
        match &self.couplings {
            Couplings::InfiniteRange(c) => GradientVector(vec![*c]),
            Couplings::Blocks(blocks) if self.q == 2 => {
                let n = self.n;
                let mut out = vec![0.0; self.num_free()];
                for i in 0..n {
                    out[i] = 0.5 * (self.fields[2 * i + 1] - self.fields[2 * i]);
                }
                for i in 0..n {
                    for j in i + 1..n {
                        let p = pair_index(n, i, j);
                        let b = &blocks[4 * p..4 * p + 4];
                        let (b00, b01, b10, b11) = (b[0], b[1], b[2], b[3]);
                        out[n + p] = 0.25 * (b11 - b10 - b01 + b00);
                        out[i] += 0.25 * (b11 + b10 - b01 - b00);
                        out[j] += 0.25 * (b11 - b10 + b01 - b00);
                    }
                }
                GradientVector(out)
            }
            Couplings::Blocks(blocks) => {
                let mut out = self.fields.clone();
                out.extend_from_slice(blocks);
                GradientVector(out)
            }
        }
    }

    /// Writes a free-parameter vector back into storage.
    pub fn set_free(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_free() {
            return Err(Error::invalid(format!(
                "expected {} free parameters, got {}",
                self.num_free(),
                values.len()
            )));
        }
        let (n, q) = (self.n, self.q);
        match &mut self.couplings {
            Couplings::InfiniteRange(c) => *c = values[0],
            Couplings::Blocks(blocks) if q == 2 => {
                for i in 0..n {
                    self.fields[2 * i] = -values[i];
                    self.fields[2 * i + 1] = values[i];
                }
                for (p, &c) in values[n..].iter().enumerate() {
                    blocks[4 * p..4 * p + 4].copy_from_slice(&[c, -c, -c, c]);
                }
            }
            Couplings::Blocks(blocks) => {
                self.fields.copy_from_slice(&values[..n * q]);
                blocks.copy_from_slice(&values[n * q..]);
            }
        }
        Ok(())
    }

    /// Equivalent parameters in the zero-sum gauge: every field row and every
    /// coupling block row and column sums to zero. The log-potential changes by
    /// a configuration-independent constant only.
    pub fn zero_sum_gauge(&self) -> ComponentParams {
        let (n, q) = (self.n, self.q);
        let mut out = self.clone();
        if let Couplings::Blocks(_) = self.couplings {
            for i in 0..n {
                for j in i + 1..n {
                    let block = self.coupling_block(i, j);
                    let (gauged, row_means, col_means) = zero_sum_block(&block, q);
                    out.set_coupling_block(i, j, &gauged)
                        .expect("pair is valid by construction");
                    for a in 0..q {
                        out.fields[i * q + a] += row_means[a];
                        out.fields[j * q + a] += col_means[a];
                    }
                }
            }
        }
        for i in 0..n {
            let row = &mut out.fields[i * q..(i + 1) * q];
            let mean = row.iter().sum::<f64>() / q as f64;
            row.iter_mut().for_each(|h| *h -= mean);
        }
        out
    }

    fn check_config(&self, s: &SpinConfiguration) -> Result<()> {
        if s.n_sites() != self.n || s.q() != self.q {
            return Err(Error::invalid(format!(
                "configuration has (N={}, q={}) but component has (N={}, q={})",
                s.n_sites(),
                s.q(),
                self.n,
                self.q
            )));
        }
        Ok(())
    }

    pub(crate) fn check_dataset(&self, data: &Dataset) -> Result<()> {
        if data.n_sites() != self.n || data.q() != self.q {
            return Err(Error::invalid(format!(
                "dataset has (N={}, q={}) but component has (N={}, q={})",
                data.n_sites(),
                data.q(),
                self.n,
                self.q
            )));
        }
        Ok(())
    }

    /// Sites grouped by observed state when every site shares one
    /// conditional per state: infinite-range couplings with identical field
    /// rows. `None` otherwise.
    pub(crate) fn site_classes(&self, states: &[u8]) -> Option<SiteClasses> {
        if !matches!(self.couplings, Couplings::InfiniteRange(_)) {
            return None;
        }
        let first = &self.fields[..self.q];
        if !self.fields.chunks_exact(self.q).all(|row| row == first) {
            return None;
        }
        Some(SiteClasses::of(states))
    }

    /// Sum of spins, needed by the infinite-range fast path.
    #[inline]
    pub(crate) fn magnet_of(&self, states: &[u8]) -> f64 {
        match self.couplings {
            Couplings::InfiniteRange(_) => states.iter().map(|&s| spin_value(s)).sum(),
            Couplings::Blocks(_) => 0.0,
        }
    }

    /// Writes `beta * (h_n(a) + sum_{j != n} J_nj(a, s_j))` for every state `a`.
    /// `magnet` must be [`Self::magnet_of`] of `states`.
    #[inline]
    pub(crate) fn site_energies(&self, states: &[u8], magnet: f64, site: usize, out: &mut [f64]) {
        let (n, q) = (self.n, self.q);
        out.copy_from_slice(&self.fields[site * q..(site + 1) * q]);
        match &self.couplings {
            Couplings::InfiniteRange(c) => {
                let rest = magnet - spin_value(states[site]);
                out[0] -= c * rest;
                out[1] += c * rest;
            }
            Couplings::Blocks(blocks) => {
                for (j, &sj) in states.iter().enumerate().take(site) {
                    let base = pair_index(n, j, site) * q * q + usize::from(sj) * q;
                    for (o, &v) in out.iter_mut().zip(&blocks[base..base + q]) {
                        *o += v;
                    }
                }
                let sj_offset = site * (2 * n - site - 1) / 2;
                for (j, &sj) in states.iter().enumerate().skip(site + 1) {
                    let base = (sj_offset + j - site - 1) * q * q + usize::from(sj);
                    for (a, o) in out.iter_mut().enumerate() {
                        *o += blocks[base + a * q];
                    }
                }
            }
        }
        for o in out.iter_mut() {
            *o *= self.beta;
        }
    }

    pub(crate) fn log_potential_unchecked(&self, states: &[u8]) -> f64 {
        let (n, q) = (self.n, self.q);
        let mut total: f64 = states
            .iter()
            .enumerate()
            .map(|(i, &s)| self.fields[i * q + usize::from(s)])
            .sum();
        match &self.couplings {
            Couplings::InfiniteRange(c) => {
                let m: f64 = states.iter().map(|&s| spin_value(s)).sum();
                total += c * 0.5 * (m * m - n as f64);
            }
            Couplings::Blocks(blocks) => {
                for i in 0..n {
                    let si = usize::from(states[i]);
                    for j in i + 1..n {
                        let p = pair_index(n, i, j);
                        total += blocks[p * q * q + si * q + usize::from(states[j])];
                    }
                }
            }
        }
        self.beta * total
    }

    /// Gradient of `log phi(s)` with respect to the free parameters.
    pub fn potential_gradient(&self, s: &SpinConfiguration) -> Result<GradientVector> {
        self.check_config(s)?;
        let mut out = vec![0.0; self.num_free()];
        self.add_potential_gradient(s.states(), 1.0, &mut out);
        Ok(GradientVector(out))
    }

    pub(crate) fn add_potential_gradient(&self, states: &[u8], weight: f64, out: &mut [f64]) {
        let (n, q) = (self.n, self.q);
        let w = weight * self.beta;
        match self.couplings {
            Couplings::InfiniteRange(_) => {
                let m: f64 = states.iter().map(|&s| spin_value(s)).sum();
                out[0] += w * 0.5 * (m * m - n as f64);
            }
            Couplings::Blocks(_) if q == 2 => {
                for i in 0..n {
                    let xi = spin_value(states[i]);
                    out[i] += w * xi;
                    for j in i + 1..n {
                        out[n + pair_index(n, i, j)] += w * xi * spin_value(states[j]);
                    }
                }
            }
            Couplings::Blocks(_) => {
                let off = n * q;
                for i in 0..n {
                    let si = usize::from(states[i]);
                    out[i * q + si] += w;
                    for j in i + 1..n {
                        let p = pair_index(n, i, j);
                        out[off + p * q * q + si * q + usize::from(states[j])] += w;
                    }
                }
            }
        }
    }

    /// Per-sample log-PL; when `grad` is given, also adds `weight` times the
    /// gradient of the per-sample log-PL.
    fn sample_log_pl(
        &self,
        states: &[u8],
        weight: f64,
        mut grad: Option<&mut [f64]>,
        energies: &mut [f64],
    ) -> f64 {
        let (n, q) = (self.n, self.q);
        let magnet = self.magnet_of(states);
        let classes = self.site_classes(states);
        let mut total = 0.0;
        for site in 0..n {
            let mult = classes.map_or(1.0, |c| c.multiplicity(site, states[site]));
            if mult == 0.0 {
                continue;
            }
            self.site_energies(states, magnet, site, energies);
            let sn = usize::from(states[site]);
            let e_obs = energies[sn];
            let lse = softmax_in_place(energies);
            total += mult * (e_obs - lse);
            let Some(g) = grad.as_deref_mut() else {
                continue;
            };
            let wb = weight * self.beta * mult;
            match self.couplings {
                Couplings::InfiniteRange(_) => {
                    let xn = spin_value(states[site]);
                    let resid = xn - (energies[1] - energies[0]);
                    g[0] += wb * resid * (magnet - xn);
                }
                Couplings::Blocks(_) if q == 2 => {
                    let resid = spin_value(states[site]) - (energies[1] - energies[0]);
                    let c = wb * resid;
                    g[site] += c;
                    for (j, &sj) in states.iter().enumerate() {
                        if j < site {
                            g[n + pair_index(n, j, site)] += c * spin_value(sj);
                        } else if j > site {
                            g[n + pair_index(n, site, j)] += c * spin_value(sj);
                        }
                    }
                }
                Couplings::Blocks(_) => {
                    // energies now holds the conditional probabilities
                    let resid: Vec<f64> = (0..q)
                        .map(|a| wb * (f64::from(u8::from(a == sn)) - energies[a]))
                        .collect();
                    for a in 0..q {
                        g[site * q + a] += resid[a];
                    }
                    let off = n * q;
                    for (j, &sj) in states.iter().enumerate() {
                        let sj = usize::from(sj);
                        if j < site {
                            let base = off + pair_index(n, j, site) * q * q + sj * q;
                            for a in 0..q {
                                g[base + a] += resid[a];
                            }
                        } else if j > site {
                            let base = off + pair_index(n, site, j) * q * q + sj;
                            for a in 0..q {
                                g[base + a * q] += resid[a];
                            }
                        }
                    }
                }
            }
        }
        total
    }
}

/// Zero-sum gauge of one `q x q` block. Returns the gauged block and the row
/// and column offsets that were removed (row offsets include `-grand_mean`).
pub(crate) fn zero_sum_block(block: &[f64], q: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let qf = q as f64;
    let row: Vec<f64> = (0..q)
        .map(|a| block[a * q..(a + 1) * q].iter().sum::<f64>() / qf)
        .collect();
    let col: Vec<f64> = (0..q)
        .map(|b| (0..q).map(|a| block[a * q + b]).sum::<f64>() / qf)
        .collect();
    let grand = row.iter().sum::<f64>() / qf;
    let mut out = vec![0.0; q * q];
    for a in 0..q {
        for b in 0..q {
            out[a * q + b] = block[a * q + b] - row[a] - col[b] + grand;
        }
    }
    let row_removed = row.iter().map(|r| r - grand).collect();
    (out, row_removed, col)
}

/// `log phi(s) = beta * (sum_i h_i(s_i) + sum_{i<j} J_ij(s_i, s_j))`.
pub fn log_potential(s: &SpinConfiguration, p: &ComponentParams) -> Result<f64> {
    p.check_config(s)?;
    Ok(p.log_potential_unchecked(s.states()))
}

/// Conditional distribution of site `site` given the rest of `s`.
pub fn site_conditionals(s: &SpinConfiguration, site: usize, p: &ComponentParams) -> Result<Vec<f64>> {
    p.check_config(s)?;
    if site >= p.n {
        return Err(Error::invalid(format!("site {site} out of range for N={}", p.n)));
    }
    let mut out = vec![0.0; p.q];
    p.site_energies(s.states(), p.magnet_of(s.states()), site, &mut out);
    softmax_in_place(&mut out);
    Ok(out)
}

/// `sum_n log p(s_n | s_{-n})` under one component.
pub fn component_log_pl(s: &SpinConfiguration, p: &ComponentParams) -> Result<f64> {
    p.check_config(s)?;
    let mut buf = vec![0.0; p.q];
    Ok(p.sample_log_pl(s.states(), 1.0, None, &mut buf))
}

/// Weighted log-PL of a dataset minus an L2 penalty on the free parameters,
/// with its exact gradient:
///
/// `Q(theta) = sum_b w_b * log PL(s_b; theta) - lambda * |theta|^2`
pub fn weighted_log_pl_and_grad(
    data: &Dataset,
    weights: &[f64],
    p: &ComponentParams,
    lambda: f64,
) -> Result<(f64, GradientVector)> {
    p.check_dataset(data)?;
    if weights.len() != data.len() {
        return Err(Error::invalid(format!(
            "{} weights for {} samples",
            weights.len(),
            data.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("regularization strength must be nonnegative"));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::DegenerateWeights);
    }
    let dim = p.num_free();
    let partials: Vec<(f64, Vec<f64>)> = data
        .samples()
        .par_chunks(CHUNK)
        .zip(weights.par_chunks(CHUNK))
        .map(|(samples, ws)| {
            let mut grad = vec![0.0; dim];
            let mut buf = vec![0.0; p.q];
            let mut value = 0.0;
            for (s, &w) in samples.iter().zip(ws) {
                if w == 0.0 {
                    continue;
                }
                value += w * p.sample_log_pl(s.states(), w, Some(&mut grad), &mut buf);
            }
            (value, grad)
        })
        .collect();
    let mut value = 0.0;
    let mut grad = vec![0.0; dim];
    for (v, g) in partials {
        value += v;
        for (acc, x) in grad.iter_mut().zip(g) {
            *acc += x;
        }
    }
    if lambda > 0.0 {
        let theta = p.free_params();
        for (g, t) in grad.iter_mut().zip(theta.iter()) {
            value -= lambda * t * t;
            *g -= 2.0 * lambda * t;
        }
    }
    Ok((value, GradientVector(grad)))
}

/// Per-sample component log-PL for every sample, in sample order.
pub(crate) fn dataset_log_pl(data: &Dataset, p: &ComponentParams) -> Vec<f64> {
    data.samples()
        .par_iter()
        .map_init(
            || vec![0.0; p.q],
            |buf, s| p.sample_log_pl(s.states(), 1.0, None, buf),
        )
        .collect()
}

/// Log of the summed conditional odds of the alternative states at `site`:
/// `log sum_{a != s_n} phi(s with s_n = a) / phi(s)`.
#[inline]
pub(crate) fn log_flip_odds(energies: &[f64], observed: usize) -> f64 {
    let e_obs = energies[observed];
    let mut max = f64::NEG_INFINITY;
    for (a, &e) in energies.iter().enumerate() {
        if a != observed {
            max = max.max(e - e_obs);
        }
    }
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = energies
        .iter()
        .enumerate()
        .filter(|&(a, _)| a != observed)
        .map(|(_, &e)| (e - e_obs - max).exp())
        .sum();
    max + sum.ln()
}
