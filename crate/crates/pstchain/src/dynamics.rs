//! Spectral decomposition of sector blocks and coherent time evolution.
//!
//! Times are dimensionless throughout: `tau = t / t_S` with `t_S = pi / J0`
//! (hbar = 1), so one period of the ideal chain is `tau = 1` and the mirror
//! arrival sits at `tau = 0.5`. With block entries in J0 units the propagator
//! phase of eigenvalue `E` over `dtau` is `exp(-i pi E dtau)`.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use num_complex::Complex64;

use crate::basis::BasisMask;
use crate::chain::{build_block, ChainSpec, Disorder, HamiltonianBlock};
use crate::error::{Error, Result};
use crate::linalg;

/// Amplitudes below this magnitude are dropped from sparse states.
pub const AMP_PRUNE: f64 = 1e-15;

/// Eigendecomposition of a sector block, `H = V diag(E) V^T`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Array2<f64>,
}

/// Decompose a symmetric sector block; eigenvalues ascending.
pub fn decompose(block: &HamiltonianBlock) -> Result<SpectralDecomposition> {
    let (eigenvalues, eigenvectors) = linalg::eigh(&block.matrix)?;
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Pure state over chain basis masks and ancilla register qubits.
///
/// Keys are `(chain mask, register mask)`; the map is ordered so that every
/// reduction over amplitudes runs in a deterministic order. States may span
/// several excitation sectors coherently.
#[derive(Clone, Debug)]
pub struct SparseState {
    pub n_sites: usize,
    pub n_registers: usize,
    amps: BTreeMap<(u32, u32), Complex64>,
}

impl SparseState {
    pub fn vacuum(n_sites: usize) -> SparseState {
        SparseState::basis_state(n_sites, BasisMask::VACUUM)
    }

    pub fn basis_state(n_sites: usize, mask: BasisMask) -> SparseState {
        let mut amps = BTreeMap::new();
        amps.insert((mask.0, 0u32), Complex64::new(1.0, 0.0));
        SparseState {
            n_sites,
            n_registers: 0,
            amps,
        }
    }

    /// Build a state from explicit chain amplitudes (no registers).
    pub fn superposition(
        n_sites: usize,
        terms: &[(BasisMask, Complex64)],
    ) -> Result<SparseState> {
        let mut amps = BTreeMap::new();
        for &(mask, amp) in terms {
            *amps.entry((mask.0, 0u32)).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        let mut state = SparseState {
            n_sites,
            n_registers: 0,
            amps,
        };
        state.prune();
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!(
                "superposition is not normalized: |psi|^2 = {norm}"
            )));
        }
        Ok(state)
    }

    pub fn amplitude(&self, chain: BasisMask, register: u32) -> Complex64 {
        self.amps
            .get(&(chain.0, register))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (BasisMask, u32, Complex64)> + '_ {
        self.amps
            .iter()
            .map(|(&(c, r), &a)| (BasisMask(c), r, a))
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            for a in self.amps.values_mut() {
                *a /= norm;
            }
        }
    }

    pub fn prune(&mut self) {
        self.amps.retain(|_, a| a.norm() >= AMP_PRUNE);
    }

    /// Excitation sectors currently populated.
    pub fn sectors(&self) -> BTreeSet<usize> {
        self.amps
            .keys()
            .map(|&(c, _)| BasisMask(c).excitations())
            .collect()
    }

    /// Tensor a fresh register qubit in state `alpha |0> + beta |1>` onto the
    /// state. Returns the new register index.
    pub fn add_register(&mut self, alpha: Complex64, beta: Complex64) -> usize {
        let idx = self.n_registers;
        let bit = 1u32 << idx;
        let mut next = BTreeMap::new();
        for (&(c, r), &a) in &self.amps {
            if alpha.norm() >= AMP_PRUNE {
                next.insert((c, r), a * alpha);
            }
            if beta.norm() >= AMP_PRUNE {
                next.insert((c, r | bit), a * beta);
            }
        }
        self.amps = next;
        self.n_registers += 1;
        idx
    }

    /// Tensor two fresh registers jointly prepared in `(|10> + |01>)/sqrt(2)`
    /// onto the state. Returns their indices (first, second).
    pub fn add_bell_registers(&mut self) -> (usize, usize) {
        let first = self.n_registers;
        let second = first + 1;
        let (b1, b2) = (1u32 << first, 1u32 << second);
        let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut next = BTreeMap::new();
        for (&(c, r), &a) in &self.amps {
            next.insert((c, r | b1), a * w);
            next.insert((c, r | b2), a * w);
        }
        self.amps = next;
        self.n_registers += 2;
        (first, second)
    }

    pub(crate) fn from_map(
        n_sites: usize,
        n_registers: usize,
        amps: BTreeMap<(u32, u32), Complex64>,
    ) -> SparseState {
        let mut s = SparseState {
            n_sites,
            n_registers,
            amps,
        };
        s.prune();
        s
    }
}

/// Prepared per-sector decompositions of one chain realization.
pub struct ChainPropagator {
    pub n_sites: usize,
    sectors: BTreeMap<usize, SectorPropagator>,
}

struct SectorPropagator {
    block: HamiltonianBlock,
    decomp: SpectralDecomposition,
}

impl ChainPropagator {
    /// Build and decompose the blocks of the requested sectors using an
    /// explicit disorder realization.
    pub fn prepare_with_disorder(
        spec: &ChainSpec,
        sectors: &[usize],
        disorder: &Disorder,
    ) -> Result<ChainPropagator> {
        let profile = spec.coupling_profile()?;
        let mut map = BTreeMap::new();
        for &n_exc in sectors {
            if map.contains_key(&n_exc) {
                continue;
            }
            let block = build_block(spec, &profile, n_exc, disorder)?;
            let decomp = decompose(&block)?;
            map.insert(n_exc, SectorPropagator { block, decomp });
        }
        Ok(ChainPropagator {
            n_sites: spec.n_sites,
            sectors: map,
        })
    }

    /// Convenience for deterministic or freshly-drawn realizations. The draw
    /// order (per-sector noise ascending, then site energies) is fixed.
    pub fn prepare(
        spec: &ChainSpec,
        sectors: &[usize],
        rng: Option<&mut dyn rand::RngCore>,
    ) -> Result<ChainPropagator> {
        let profile = spec.coupling_profile()?;
        let needs_draws =
            spec.eta() > 0.0 || matches!(spec.site_energies(), Some((e, None)) if e > 0.0);
        let disorder = match rng {
            Some(rng) => Disorder::draw(spec, &profile, sectors, rng)?,
            None => {
                if needs_draws {
                    return Err(Error::domain(
                        "stochastic perturbations need an rng to draw a realization",
                    ));
                }
                // Site energies with a supplied pattern still go through draw.
                let mut dummy = NoRng;
                Disorder::draw(spec, &profile, sectors, &mut dummy)?
            }
        };
        ChainPropagator::prepare_with_disorder(spec, sectors, &disorder)
    }

    pub fn has_sector(&self, n_exc: usize) -> bool {
        self.sectors.contains_key(&n_exc)
    }

    pub fn block(&self, n_exc: usize) -> Option<&HamiltonianBlock> {
        self.sectors.get(&n_exc).map(|s| &s.block)
    }

    pub fn decomposition(&self, n_exc: usize) -> Option<&SpectralDecomposition> {
        self.sectors.get(&n_exc).map(|s| &s.decomp)
    }

    /// Propagate a state by `dtau` periods. Register bits ride along
    /// untouched; every populated sector advances with the same time origin
    /// so inter-sector coherences stay physical.
    pub fn propagate(&self, state: &SparseState, dtau: f64) -> Result<SparseState> {
        if state.n_sites != self.n_sites {
            return Err(Error::domain("state and propagator disagree on chain length"));
        }
        // Group populated amplitudes by (register, sector).
        let mut groups: BTreeMap<(u32, usize), Vec<(u32, Complex64)>> = BTreeMap::new();
        for (mask, reg, amp) in state.iter() {
            groups
                .entry((reg, mask.excitations()))
                .or_default()
                .push((mask.0, amp));
        }

        let mut out = BTreeMap::new();
        for ((reg, n_exc), entries) in groups {
            let sector = self.sectors.get(&n_exc).ok_or_else(|| {
                Error::domain(format!("state populates unprepared sector n_exc = {n_exc}"))
            })?;
            let basis = &sector.block.basis;
            let decomp = &sector.decomp;
            let dim = basis.dim();

            let mut dense = vec![Complex64::new(0.0, 0.0); dim];
            for (mask, amp) in entries {
                let idx = basis
                    .index_of(BasisMask(mask))
                    .expect("mask belongs to its sector basis");
                dense[idx] = amp;
            }

            // modal = V^T a, phased by exp(-i pi E dtau), back to a' = V modal.
            let v = &decomp.eigenvectors;
            let mut modal = vec![Complex64::new(0.0, 0.0); dim];
            for k in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..dim {
                    acc += v[[i, k]] * dense[i];
                }
                let phase = -std::f64::consts::PI * decomp.eigenvalues[k] * dtau;
                modal[k] = acc * Complex64::new(phase.cos(), phase.sin());
            }
            for i in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..dim {
                    acc += v[[i, k]] * modal[k];
                }
                if acc.norm() >= AMP_PRUNE {
                    out.insert((basis.mask(i).0, reg), acc);
                }
            }
        }

        Ok(SparseState::from_map(state.n_sites, state.n_registers, out))
    }
}

/// Rng stub for deterministic preparations; never actually sampled.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("deterministic preparation must not sample")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("deterministic preparation must not sample")
    }
    fn fill_bytes(&mut self, _dest: &mut [u8]) {
        unreachable!("deterministic preparation must not sample")
    }
    fn try_fill_bytes(&mut self, _dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        unreachable!("deterministic preparation must not sample")
    }
}

/// Sample times in units of t_S.
#[derive(Clone, Debug)]
pub struct TimeGrid {
    pub tau: Vec<f64>,
    pub steps_per_period: usize,
}

impl TimeGrid {
    /// Uniform grid over `[0, t_max]` with `steps_per_period` samples per
    /// unit of tau.
    pub fn from_span(t_max: f64, steps_per_period: usize) -> Result<TimeGrid> {
        if !(t_max > 0.0) || steps_per_period == 0 {
            return Err(Error::domain("time grid needs t_max > 0 and steps_per_period > 0"));
        }
        let steps = (t_max * steps_per_period as f64).round() as usize;
        let tau = (0..=steps)
            .map(|i| i as f64 / steps_per_period as f64)
            .collect();
        Ok(TimeGrid {
            tau,
            steps_per_period,
        })
    }

    pub fn single(tau: f64) -> TimeGrid {
        TimeGrid {
            tau: vec![tau],
            steps_per_period: 1,
        }
    }
}

/// Sampled observables on a time grid.
#[derive(Clone, Debug)]
pub struct TimeSeries {
    pub tau: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl TimeSeries {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

/// Named metric sampled along an evolution.
pub struct Observer<'a> {
    pub name: String,
    pub eval: Box<dyn Fn(&SparseState) -> f64 + Sync + 'a>,
}

impl<'a> Observer<'a> {
    pub fn new(name: impl Into<String>, eval: impl Fn(&SparseState) -> f64 + Sync + 'a) -> Self {
        Observer {
            name: name.into(),
            eval: Box::new(eval),
        }
    }
}

/// Evolve from the initial state to every grid point (each point is one
/// spectral propagation from the origin, so there is no step-to-step error
/// accumulation) and record the observers.
pub fn evolve_series(
    state: &SparseState,
    chain: &ChainPropagator,
    grid: &TimeGrid,
    observers: &[Observer],
) -> Result<TimeSeries> {
    let mut columns: Vec<(String, Vec<f64>)> = observers
        .iter()
        .map(|o| (o.name.clone(), Vec::with_capacity(grid.tau.len())))
        .collect();
    for &tau in &grid.tau {
        let at = chain.propagate(state, tau)?;
        for (obs, (_, col)) in observers.iter().zip(columns.iter_mut()) {
            col.push((obs.eval)(&at));
        }
    }
    Ok(TimeSeries {
        tau: grid.tau.clone(),
        columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::mirror_mask;

    fn fidelity(state: &SparseState, target: BasisMask) -> f64 {
        crate::metrics::fidelity_basis(state, target)
    }

    #[test]
    fn two_site_exchange() {
        let spec = ChainSpec::new(2);
        let prop = ChainPropagator::prepare(&spec, &[1], None).unwrap();
        let state = SparseState::basis_state(2, BasisMask::from_sites(&[1]));
        let half = prop.propagate(&state, 0.5).unwrap();
        assert!((fidelity(&half, BasisMask::from_sites(&[2])) - 1.0).abs() < 1e-12);
        // sin^2(pi tau) exchange profile at tau = 0.25
        let quarter = prop.propagate(&state, 0.25).unwrap();
        let p = fidelity(&quarter, BasisMask::from_sites(&[2]));
        assert!((p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_particle_spectrum_is_a_ladder() {
        let spec = ChainSpec::new(6);
        let prop = ChainPropagator::prepare(&spec, &[1], None).unwrap();
        let eigs = &prop.decomposition(1).unwrap().eigenvalues;
        assert_eq!(eigs.len(), 6);
        for (k, &e) in eigs.iter().enumerate() {
            let want = 2.0 * k as f64 - 5.0;
            assert!((e - want).abs() < 1e-9, "eigenvalue {k}: {e}");
        }
    }

    #[test]
    fn mirroring_and_revival() {
        let spec = ChainSpec::new(6);
        let prop = ChainPropagator::prepare(&spec, &[2], None).unwrap();
        let (mask, _) = BasisMask::parse_ket("110000").unwrap();
        let state = SparseState::basis_state(6, mask);
        let at_mirror = prop.propagate(&state, 0.5).unwrap();
        assert!((fidelity(&at_mirror, mirror_mask(mask, 6)) - 1.0).abs() < 1e-9);
        let at_period = prop.propagate(&state, 1.0).unwrap();
        assert!((fidelity(&at_period, mask) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn revival_for_all_basis_states_n8() {
        let spec = ChainSpec::new(8);
        let prop = ChainPropagator::prepare(&spec, &[1, 2], None).unwrap();
        for n_exc in [1usize, 2] {
            let basis = crate::basis::SubspaceBasis::enumerate(8, n_exc).unwrap();
            for &mask in basis.masks() {
                let state = SparseState::basis_state(8, mask);
                let back = prop.propagate(&state, 1.0).unwrap();
                assert!(
                    (fidelity(&back, mask) - 1.0).abs() < 1e-9,
                    "revival of {}",
                    mask.to_ket(8)
                );
            }
        }
    }

    #[test]
    fn norm_is_preserved_across_a_grid() {
        let spec = ChainSpec::new(6).with(crate::chain::Perturbation::NnnAveraged { delta: 0.05 });
        let prop = ChainPropagator::prepare(&spec, &[1, 2], None).unwrap();
        let state = SparseState::superposition(
            6,
            &[
                (BasisMask::from_sites(&[1, 2]), Complex64::new(0.6, 0.0)),
                (BasisMask::from_sites(&[3]), Complex64::new(0.0, 0.8)),
            ],
        )
        .unwrap();
        let grid = TimeGrid::from_span(5.0, 1000).unwrap();
        let series = evolve_series(
            &state,
            &prop,
            &grid,
            &[Observer::new("norm", |s: &SparseState| s.norm_sqr())],
        )
        .unwrap();
        for &n in series.column("norm").unwrap() {
            assert!((n - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sector_support_never_grows() {
        let spec = ChainSpec::new(6).with(crate::chain::Perturbation::NnnAveraged { delta: 0.1 });
        let prop = ChainPropagator::prepare(&spec, &[0, 1, 2, 3], None).unwrap();
        let state = SparseState::superposition(
            6,
            &[
                (BasisMask::VACUUM, Complex64::new(0.5, 0.0)),
                (BasisMask::from_sites(&[2]), Complex64::new(0.5, 0.0)),
                (
                    BasisMask::from_sites(&[1, 4]),
                    Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
                ),
            ],
        )
        .unwrap();
        let before = state.sectors();
        for &tau in &[0.13, 0.5, 0.77, 1.9] {
            let evolved = prop.propagate(&state, tau).unwrap();
            assert!(evolved.sectors().is_subset(&before));
        }
    }

    #[test]
    fn unprepared_sector_is_an_error() {
        let spec = ChainSpec::new(6);
        let prop = ChainPropagator::prepare(&spec, &[1], None).unwrap();
        let state = SparseState::basis_state(6, BasisMask::from_sites(&[1, 2]));
        assert!(prop.propagate(&state, 0.1).is_err());
    }

    #[test]
    fn grid_of_one_point_returns_initial_observables() {
        let spec = ChainSpec::new(4);
        let prop = ChainPropagator::prepare(&spec, &[1], None).unwrap();
        let mask = BasisMask::from_sites(&[1]);
        let state = SparseState::basis_state(4, mask);
        let series = evolve_series(
            &state,
            &prop,
            &TimeGrid::single(0.0),
            &[Observer::new("f", move |s: &SparseState| fidelity(s, mask))],
        )
        .unwrap();
        assert_eq!(series.tau.len(), 1);
        assert!((series.column("f").unwrap()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn decomposition_residual_contract() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        let spec = ChainSpec::new(8).with(crate::chain::Perturbation::RandomNoise { eta: 0.3 });
        let profile = spec.coupling_profile().unwrap();
        for _ in 0..20 {
            let disorder = Disorder::draw(&spec, &profile, &[2], &mut rng).unwrap();
            let block = build_block(&spec, &profile, 2, &disorder).unwrap();
            let d = decompose(&block).unwrap();
            let dim = block.basis.dim();
            let v = &d.eigenvectors;
            for i in 0..dim {
                for j in 0..dim {
                    let mut acc = 0.0;
                    let mut ortho = 0.0;
                    for k in 0..dim {
                        acc += v[[i, k]] * d.eigenvalues[k] * v[[j, k]];
                        ortho += v[[k, i]] * v[[k, j]];
                    }
                    assert!((acc - block.matrix[[i, j]]).abs() < 1e-10);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ortho - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn mirroring_theorem_small_chains() {
        for n in 2..=8 {
            let sectors: Vec<usize> = (0..=3.min(n)).collect();
            let spec = ChainSpec::new(n);
            let prop = ChainPropagator::prepare(&spec, &sectors, None).unwrap();
            for n_exc in 0..=3.min(n) {
                let basis = crate::basis::SubspaceBasis::enumerate(n, n_exc).unwrap();
                for &mask in basis.masks() {
                    let state = SparseState::basis_state(n, mask);
                    let at = prop.propagate(&state, 0.5).unwrap();
                    let f = fidelity(&at, mirror_mask(mask, n));
                    assert!((f - 1.0).abs() < 1e-8, "N={n} {}", mask.to_ket(n));
                }
            }
        }
    }
}
