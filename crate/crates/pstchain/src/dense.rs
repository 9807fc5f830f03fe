//! Brute-force reference implementation in the full 2^N space.
//!
//! Everything here is deliberately assembled from the model definition
//! (hops, diagonal terms, single- and two-qubit unitaries on a flat state
//! vector) rather than from the sector machinery, and evolution runs through
//! a scaled Taylor expansion of the propagator instead of a spectral
//! decomposition. The sector-wise implementation is validated against this
//! module by the selftest and the acceptance suite.

use ndarray::Array2;
use num_complex::Complex64;

use crate::basis::BasisMask;
use crate::chain::{ChainSpec, CouplingProfile, HamiltonianBlock};
use crate::dynamics::SparseState;
use crate::error::{Error, Result};

/// Full-space Hamiltonian over all 2^N chain states, in J0 units, built
/// directly from the coupling profile and diagonal terms.
pub fn full_operator(spec: &ChainSpec, profile: &CouplingProfile, site_d: Option<&[f64]>) -> Result<Array2<f64>> {
    spec.validate()?;
    let n = spec.n_sites;
    let dim = 1usize << n;
    let mut h = Array2::zeros((dim, dim));

    let eps = spec.site_energies().map(|(e, _)| e).unwrap_or(0.0);
    let eps_scale = if eps > 0.0 {
        let d = site_d.ok_or_else(|| Error::domain("full_operator needs site_d when epsilon > 0"))?;
        let scale = match spec.epsilon_scale_ref {
            Some(crate::chain::EnergyScaleRef::J0) => 1.0,
            Some(crate::chain::EnergyScaleRef::JMax) => spec.j_max / spec.j0(),
            None => return Err(Error::domain("epsilon_scale_ref missing")),
        };
        Some((d.to_vec(), scale))
    } else {
        None
    };

    for m in 0..dim {
        let mask = BasisMask(m as u32);
        for i in 1..n {
            if mask.has_site(i) != mask.has_site(i + 1) {
                let other = mask.flip_site(i).flip_site(i + 1).0 as usize;
                h[[m, other]] += profile.nearest[i - 1];
            }
        }
        if let Some(next) = &profile.next_nearest {
            for i in 1..n - 1 {
                if mask.has_site(i) != mask.has_site(i + 2) {
                    let other = mask.flip_site(i).flip_site(i + 2).0 as usize;
                    h[[m, other]] += next[i - 1];
                }
            }
        }
        let mut diag = spec.gamma() * mask.adjacent_pairs() as f64;
        if let Some((d, scale)) = &eps_scale {
            for site in 1..=n {
                if mask.has_site(site) {
                    diag += eps * scale * d[site - 1];
                }
            }
        }
        h[[m, m]] = diag;
    }
    Ok(h)
}

/// Scatter sector blocks into the full 2^N space (used to compare the
/// sector assembly against [`full_operator`], and to evolve noisy chains
/// densely with the exact same frozen draws).
pub fn embed_blocks(blocks: &[HamiltonianBlock], n_sites: usize) -> Array2<f64> {
    let dim = 1usize << n_sites;
    let mut h = Array2::zeros((dim, dim));
    for block in blocks {
        let basis = &block.basis;
        for a in 0..basis.dim() {
            for b in 0..basis.dim() {
                h[[basis.mask(a).0 as usize, basis.mask(b).0 as usize]] = block.matrix[[a, b]];
            }
        }
    }
    h
}

/// Flat state vector over chain and register qubits; the global index is
/// `chain_mask | reg_mask << n_sites`.
#[derive(Clone, Debug)]
pub struct DenseState {
    pub n_sites: usize,
    pub n_registers: usize,
    pub amps: Vec<Complex64>,
}

impl DenseState {
    pub fn from_sparse(state: &SparseState) -> DenseState {
        let dim = 1usize << (state.n_sites + state.n_registers);
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        for (mask, reg, amp) in state.iter() {
            amps[mask.0 as usize | (reg as usize) << state.n_sites] = amp;
        }
        DenseState {
            n_sites: state.n_sites,
            n_registers: state.n_registers,
            amps,
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Largest amplitude deviation from a sparse state.
    pub fn max_deviation(&self, state: &SparseState) -> f64 {
        let other = DenseState::from_sparse(state);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Evolve by `dtau` periods under the chain Hamiltonian `h` (J0 units),
    /// leaving register bits untouched. The propagator is expanded as a
    /// Taylor series over substeps sized so each step angle stays below 0.5.
    pub fn evolve(&mut self, h: &Array2<f64>, dtau: f64) {
        let dim_chain = 1usize << self.n_sites;
        assert_eq!(h.nrows(), dim_chain);

        let row_norm = (0..dim_chain)
            .map(|i| (0..dim_chain).map(|j| h[[i, j]].abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        let angle = std::f64::consts::PI * dtau.abs() * row_norm;
        let steps = (angle / 0.5).ceil().max(1.0) as usize;
        let factor = Complex64::new(0.0, -std::f64::consts::PI * dtau / steps as f64);

        let n_blocks = 1usize << self.n_registers;
        for _ in 0..steps {
            for blk in 0..n_blocks {
                let base = blk * dim_chain;
                let mut term: Vec<Complex64> = self.amps[base..base + dim_chain].to_vec();
                let mut acc = term.clone();
                for k in 1..=30 {
                    let mut next = vec![Complex64::new(0.0, 0.0); dim_chain];
                    for i in 0..dim_chain {
                        let mut s = Complex64::new(0.0, 0.0);
                        for j in 0..dim_chain {
                            let hij = h[[i, j]];
                            if hij != 0.0 {
                                s += hij * term[j];
                            }
                        }
                        next[i] = s * factor / k as f64;
                    }
                    let tail: f64 = next.iter().map(|a| a.norm_sqr()).sum();
                    for i in 0..dim_chain {
                        acc[i] += next[i];
                    }
                    term = next;
                    if tail < 1e-34 {
                        break;
                    }
                }
                self.amps[base..base + dim_chain].copy_from_slice(&acc);
            }
        }
    }

    fn bit_index(&self, chain_site: Option<usize>, register: Option<usize>) -> usize {
        match (chain_site, register) {
            (Some(s), None) => s - 1,
            (None, Some(r)) => self.n_sites + r,
            _ => unreachable!(),
        }
    }

    /// Apply a 2x2 unitary to one qubit (chain site or register).
    pub fn apply_one_qubit(
        &mut self,
        chain_site: Option<usize>,
        register: Option<usize>,
        u: [[Complex64; 2]; 2],
    ) {
        let bit = 1usize << self.bit_index(chain_site, register);
        for idx in 0..self.amps.len() {
            if idx & bit == 0 {
                let a0 = self.amps[idx];
                let a1 = self.amps[idx | bit];
                self.amps[idx] = u[0][0] * a0 + u[0][1] * a1;
                self.amps[idx | bit] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
    }

    /// Apply the partial-swap unitary between a chain site and a register.
    /// `r` is the reflection amplitude: 0 is a full swap.
    pub fn apply_partial_swap(&mut self, site: usize, register: usize, r: f64) {
        let site_bit = 1usize << (site - 1);
        let reg_bit = 1usize << (self.n_sites + register);
        let keep = Complex64::new(r, 0.0);
        let cross = Complex64::new((1.0 - r * r).sqrt(), 0.0);
        for idx in 0..self.amps.len() {
            // enumerate each (site, reg) = (0, 1) / (1, 0) pair once
            if idx & site_bit == 0 && idx & reg_bit != 0 {
                let partner = (idx | site_bit) & !reg_bit;
                let a01 = self.amps[idx]; // site 0, reg 1
                let a10 = self.amps[partner]; // site 1, reg 0
                self.amps[idx] = keep * a01 + cross * a10;
                self.amps[partner] = cross * a01 + keep * a10;
            }
        }
    }

    /// Projective measurement of one qubit. Returns
    /// `(p1, state | outcome 1, p0, state | outcome 0)`, post-states
    /// renormalized (zero vectors when the branch has no weight).
    pub fn measure(
        &self,
        chain_site: Option<usize>,
        register: Option<usize>,
    ) -> (f64, DenseState, f64, DenseState) {
        let bit = 1usize << self.bit_index(chain_site, register);
        let mut one = self.clone();
        let mut zero = self.clone();
        let mut p1 = 0.0;
        for idx in 0..self.amps.len() {
            if idx & bit != 0 {
                p1 += self.amps[idx].norm_sqr();
                zero.amps[idx] = Complex64::new(0.0, 0.0);
            } else {
                one.amps[idx] = Complex64::new(0.0, 0.0);
            }
        }
        let p0 = 1.0 - p1;
        let scale = |s: &mut DenseState, p: f64| {
            if p > 0.0 {
                let inv = 1.0 / p.sqrt();
                for a in &mut s.amps {
                    *a *= inv;
                }
            }
        };
        scale(&mut one, p1);
        scale(&mut zero, p0);
        (p1, one, p0, zero)
    }

    /// Reduced density matrix of two chain sites, all other qubits traced.
    /// Basis order |00>, |01>, |10>, |11>, first label = site `a`.
    pub fn reduce_two_sites(&self, a: usize, b: usize) -> [[Complex64; 4]; 4] {
        let bit_a = 1usize << (a - 1);
        let bit_b = 1usize << (b - 1);
        let mut rho = [[Complex64::new(0.0, 0.0); 4]; 4];
        for idx in 0..self.amps.len() {
            if self.amps[idx].norm_sqr() == 0.0 {
                continue;
            }
            let ia = 2 * ((idx & bit_a != 0) as usize) + (idx & bit_b != 0) as usize;
            for jb in 0..4 {
                let jdx = (idx & !(bit_a | bit_b))
                    | if jb & 2 != 0 { bit_a } else { 0 }
                    | if jb & 1 != 0 { bit_b } else { 0 };
                rho[ia][jb] += self.amps[idx] * self.amps[jdx].conj();
            }
        }
        rho
    }
}
