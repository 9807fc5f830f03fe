//! Chain device model: engineered coupling profiles, perturbation terms,
//! frozen disorder draws, and per-sector Hamiltonian blocks.
//!
//! All matrix entries are stored in units of the characteristic coupling
//! `J0`. `J0` itself is fixed by holding the largest coupling of the chain at
//! `j_max`: `J0 = 2 j_max / N` for even `N` and `J0 = 2 j_max / (N sqrt(1 - 1/N^2))`
//! for odd `N`.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng;

use crate::basis::{BasisMask, SubspaceBasis, MAX_SITES};
use crate::error::{Error, Result};

/// Reference scale for site-energy disorder: `eps_i = epsilon * scale * d_i`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum EnergyScaleRef {
    J0,
    JMax,
}

/// One perturbation family applied to the ideal chain.
#[derive(Clone, Debug)]
pub enum Perturbation {
    /// Site-dependent energies `eps_i = epsilon * scale * d_i` with
    /// `d_i in [0, 1]` either supplied or drawn per realization.
    SiteEnergies { epsilon: f64, d: Option<Vec<f64>> },
    /// Nearest-neighbor excitation-excitation interaction of strength
    /// `gamma * J0` per adjacent excited pair.
    ExcitationInteraction { gamma: f64 },
    /// Next-nearest couplings as `delta` times the average of the two
    /// underlying nearest-neighbor couplings.
    NnnAveraged { delta: f64 },
    /// Next-nearest couplings from a 1/R^3 interaction between sites placed
    /// to realize the engineered nearest-neighbor profile.
    NnnDipole,
    /// Next-nearest couplings from exponentially decaying tunnelling,
    /// `t(R) = prefactor * R * exp(-kappa R)` and coupling `4 t^2 / u`.
    NnnTunnelling { u: f64, kappa: f64, prefactor: f64 },
    /// Frozen random noise `eta * d_lm * J0` added to every structurally
    /// non-zero Hamiltonian entry, symmetric, drawn per realization.
    RandomNoise { eta: f64 },
}

impl Perturbation {
    fn kind(&self) -> &'static str {
        match self {
            Perturbation::SiteEnergies { .. } => "site_energies",
            Perturbation::ExcitationInteraction { .. } => "excitation_interaction",
            Perturbation::NnnAveraged { .. } => "nnn_averaged",
            Perturbation::NnnDipole => "nnn_dipole",
            Perturbation::NnnTunnelling { .. } => "nnn_tunnelling",
            Perturbation::RandomNoise { .. } => "random_noise",
        }
    }

    fn is_nnn(&self) -> bool {
        matches!(
            self,
            Perturbation::NnnAveraged { .. }
                | Perturbation::NnnDipole
                | Perturbation::NnnTunnelling { .. }
        )
    }
}

/// Single source of truth for a simulated device.
#[derive(Clone, Debug)]
pub struct ChainSpec {
    pub n_sites: usize,
    pub j_max: f64,
    pub epsilon_scale_ref: Option<EnergyScaleRef>,
    pub perturbations: Vec<Perturbation>,
}

impl ChainSpec {
    pub fn new(n_sites: usize) -> ChainSpec {
        ChainSpec {
            n_sites,
            j_max: 1.0,
            epsilon_scale_ref: None,
            perturbations: Vec::new(),
        }
    }

    pub fn with(mut self, p: Perturbation) -> ChainSpec {
        self.perturbations.push(p);
        self
    }

    pub fn with_epsilon_ref(mut self, r: EnergyScaleRef) -> ChainSpec {
        self.epsilon_scale_ref = Some(r);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 || self.n_sites > MAX_SITES {
            return Err(Error::domain(format!(
                "chain length must be in 2..={MAX_SITES}, got {}",
                self.n_sites
            )));
        }
        if !(self.j_max > 0.0) {
            return Err(Error::domain("j_max must be positive"));
        }
        let mut seen: Vec<&'static str> = Vec::new();
        let mut nnn_count = 0;
        for p in &self.perturbations {
            if seen.contains(&p.kind()) {
                return Err(Error::domain(format!(
                    "perturbation {} given more than once",
                    p.kind()
                )));
            }
            seen.push(p.kind());
            if p.is_nnn() {
                nnn_count += 1;
            }
            match p {
                Perturbation::SiteEnergies { epsilon, d } => {
                    if *epsilon < 0.0 {
                        return Err(Error::domain("epsilon must be >= 0"));
                    }
                    if *epsilon > 0.0 && self.epsilon_scale_ref.is_none() {
                        return Err(Error::domain(
                            "site energies require epsilon_scale_ref = J0 or Jmax",
                        ));
                    }
                    if let Some(d) = d {
                        if d.len() != self.n_sites {
                            return Err(Error::domain(format!(
                                "site disorder pattern has {} entries, chain has {}",
                                d.len(),
                                self.n_sites
                            )));
                        }
                        if d.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                            return Err(Error::domain("site disorder entries must lie in [0,1]"));
                        }
                    }
                }
                Perturbation::ExcitationInteraction { gamma } => {
                    if *gamma < 0.0 {
                        return Err(Error::domain("gamma must be >= 0"));
                    }
                }
                Perturbation::NnnAveraged { delta } => {
                    if *delta < 0.0 {
                        return Err(Error::domain("delta must be >= 0"));
                    }
                }
                Perturbation::NnnDipole => {
                    if self.n_sites < 3 {
                        return Err(Error::domain("dipole next-nearest model needs N >= 3"));
                    }
                }
                Perturbation::NnnTunnelling { u, kappa, prefactor } => {
                    if !(*u > 0.0 && *kappa > 0.0 && *prefactor > 0.0) {
                        return Err(Error::domain("tunnelling parameters must be positive"));
                    }
                }
                Perturbation::RandomNoise { eta } => {
                    if *eta < 0.0 {
                        return Err(Error::domain("eta must be >= 0"));
                    }
                }
            }
        }
        if nnn_count > 1 {
            return Err(Error::domain(
                "at most one next-nearest-neighbor model may be active",
            ));
        }
        Ok(())
    }

    /// Characteristic coupling for this chain length and cap.
    pub fn j0(&self) -> f64 {
        j0_from_jmax(self.n_sites, self.j_max)
    }

    pub fn gamma(&self) -> f64 {
        self.perturbations
            .iter()
            .find_map(|p| match p {
                Perturbation::ExcitationInteraction { gamma } => Some(*gamma),
                _ => None,
            })
            .unwrap_or(0.0)
    }

    pub fn eta(&self) -> f64 {
        self.perturbations
            .iter()
            .find_map(|p| match p {
                Perturbation::RandomNoise { eta } => Some(*eta),
                _ => None,
            })
            .unwrap_or(0.0)
    }

    pub fn site_energies(&self) -> Option<(f64, Option<&[f64]>)> {
        self.perturbations.iter().find_map(|p| match p {
            Perturbation::SiteEnergies { epsilon, d } => Some((*epsilon, d.as_deref())),
            _ => None,
        })
    }

    fn nnn(&self) -> Option<&Perturbation> {
        self.perturbations.iter().find(|p| p.is_nnn())
    }

    /// Multiplier turning `epsilon * d_i` into diagonal entries in J0 units.
    fn epsilon_to_j0_units(&self) -> Result<f64> {
        match self.epsilon_scale_ref {
            Some(EnergyScaleRef::J0) => Ok(1.0),
            Some(EnergyScaleRef::JMax) => Ok(self.j_max / self.j0()),
            None => Err(Error::domain(
                "site energies require epsilon_scale_ref = J0 or Jmax",
            )),
        }
    }

    /// Coupling profile implied by this spec (engineered nearest couplings
    /// plus the active next-nearest model, if any), in units of J0.
    pub fn coupling_profile(&self) -> Result<CouplingProfile> {
        self.validate()?;
        let base = pst_couplings(self.n_sites);
        match self.nnn() {
            None => Ok(base),
            Some(Perturbation::NnnAveraged { delta }) => Ok(nnn_averaged(&base, *delta)),
            Some(Perturbation::NnnDipole) => nnn_dipole(self.n_sites),
            Some(Perturbation::NnnTunnelling { u, kappa, prefactor }) => {
                let (_, profile) = nnn_tunnelling(self.n_sites, self.j_max, *u, *kappa, *prefactor)?;
                Ok(profile)
            }
            Some(_) => unreachable!(),
        }
    }
}

/// Coupling strengths in units of J0. `nearest[i-1]` is the coupling between
/// sites `i` and `i+1`; `next_nearest[i-1]`, when present, couples `i` and
/// `i+2`.
#[derive(Clone, Debug)]
pub struct CouplingProfile {
    pub nearest: Vec<f64>,
    pub next_nearest: Option<Vec<f64>>,
}

/// `J0 = 2 j_max / N` (even) or `2 j_max / (N sqrt(1 - 1/N^2))` (odd), so
/// that the largest engineered coupling equals `j_max` exactly.
pub fn j0_from_jmax(n_sites: usize, j_max: f64) -> f64 {
    let n = n_sites as f64;
    if n_sites % 2 == 0 {
        2.0 * j_max / n
    } else {
        2.0 * j_max / (n * (1.0 - 1.0 / (n * n)).sqrt())
    }
}

/// Engineered profile `J_{i,i+1} = sqrt(i (N - i))` in units of J0.
pub fn pst_couplings(n_sites: usize) -> CouplingProfile {
    let nearest = (1..n_sites)
        .map(|i| ((i * (n_sites - i)) as f64).sqrt())
        .collect();
    CouplingProfile {
        nearest,
        next_nearest: None,
    }
}

/// Next-nearest couplings as `delta` times the average of the adjacent
/// nearest-neighbor couplings.
pub fn nnn_averaged(profile: &CouplingProfile, delta: f64) -> CouplingProfile {
    let n1 = &profile.nearest;
    let next = (0..n1.len().saturating_sub(1))
        .map(|i| delta * (n1[i] + n1[i + 1]) / 2.0)
        .collect();
    CouplingProfile {
        nearest: n1.clone(),
        next_nearest: Some(next),
    }
}

/// Next-nearest couplings for a 1/R^3 site-site interaction:
/// `J_{i,i+2} = ([i(N-i)]^{-1/6} + [(i+1)(N-i-1)]^{-1/6})^{-3}` in J0 units.
pub fn nnn_dipole(n_sites: usize) -> Result<CouplingProfile> {
    if n_sites < 3 {
        return Err(Error::domain("dipole next-nearest model needs N >= 3"));
    }
    let base = pst_couplings(n_sites);
    let next = (1..n_sites - 1)
        .map(|i| {
            let a = ((i * (n_sites - i)) as f64).powf(-1.0 / 6.0);
            let b = (((i + 1) * (n_sites - i - 1)) as f64).powf(-1.0 / 6.0);
            (a + b).powi(-3)
        })
        .collect();
    Ok(CouplingProfile {
        nearest: base.nearest,
        next_nearest: Some(next),
    })
}

/// Inter-site distances realizing the engineered couplings under the
/// tunnelling model, with the bisection residuals that produced them.
#[derive(Clone, Debug)]
pub struct TunnellingGeometry {
    pub distances: Vec<f64>,
    pub residuals: Vec<f64>,
}

fn tunnelling_coupling(r: f64, u: f64, kappa: f64, prefactor: f64) -> f64 {
    let t = prefactor * r * (-r * kappa).exp();
    4.0 * t * t / u
}

/// Solve for inter-site distances such that `4 t(R_i)^2 / u` reproduces the
/// engineered nearest couplings (absolute units), then evaluate the implied
/// next-nearest couplings at distance `R_i + R_{i+1}`.
///
/// Roots are found by bisection on the decreasing branch `R > 1/kappa`.
pub fn nnn_tunnelling(
    n_sites: usize,
    j_max: f64,
    u: f64,
    kappa: f64,
    prefactor: f64,
) -> Result<(TunnellingGeometry, CouplingProfile)> {
    if n_sites < 3 {
        return Err(Error::domain("tunnelling next-nearest model needs N >= 3"));
    }
    let j0 = j0_from_jmax(n_sites, j_max);
    let base = pst_couplings(n_sites);

    let mut distances = Vec::with_capacity(n_sites - 1);
    let mut residuals = Vec::with_capacity(n_sites - 1);
    for (idx, &j_rel) in base.nearest.iter().enumerate() {
        let target = j_rel * j0;
        let mut lo = 1.0 / kappa;
        let mut hi = 50.0 / kappa;
        let f = |r: f64| tunnelling_coupling(r, u, kappa, prefactor) - target;
        if !(f(lo) > 0.0 && f(hi) < 0.0) {
            return Err(Error::config(format!(
                "tunnelling coupling for bond {} is unreachable on the decreasing branch",
                idx + 1
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) < 1e-12 * hi {
                break;
            }
        }
        let r = 0.5 * (lo + hi);
        distances.push(r);
        residuals.push((tunnelling_coupling(r, u, kappa, prefactor) - target).abs() / target);
    }

    let next = (0..n_sites - 2)
        .map(|i| tunnelling_coupling(distances[i] + distances[i + 1], u, kappa, prefactor) / j0)
        .collect();

    Ok((
        TunnellingGeometry {
            distances,
            residuals,
        },
        CouplingProfile {
            nearest: base.nearest,
            next_nearest: Some(next),
        },
    ))
}

/// Calibrated tunnelling parameters: `kappa = 1` and `u = j_max` are fixed,
/// and the prefactor is bisected until the worst-case ratio
/// `J_{i,i+2} / J_{i,i+1}` equals `target_ratio` for an 8-site chain.
pub fn calibrate_tunnelling(j_max: f64, target_ratio: f64) -> Result<(f64, f64, f64)> {
    let kappa = 1.0;
    let u = j_max;
    let n = 8;

    let ratio = |prefactor: f64| -> Result<f64> {
        let (_, profile) = nnn_tunnelling(n, j_max, u, kappa, prefactor)?;
        let next = profile.next_nearest.as_ref().unwrap();
        Ok(next
            .iter()
            .zip(&profile.nearest)
            .map(|(&nn, &n1)| nn / n1)
            .fold(0.0f64, f64::max))
    };

    // The maximum of t(R) on the decreasing branch bounds the reachable
    // couplings; start just above that and grow until the ratio undershoots.
    let mut lo = 1.001 * std::f64::consts::E * (j_max * u).sqrt() / 2.0;
    let mut hi = lo;
    for _ in 0..200 {
        hi *= 2.0;
        if ratio(hi)? < target_ratio {
            break;
        }
    }
    if ratio(hi)? >= target_ratio {
        return Err(Error::numeric("tunnelling calibration failed to bracket"));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if ratio(mid)? > target_ratio {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < 1e-12 * hi {
            break;
        }
    }
    Ok((u, kappa, (lo * hi).sqrt()))
}

/// Frozen random draws for one disorder realization. One value of `d_lm` per
/// structurally non-zero Hamiltonian entry (upper triangle, row-major, per
/// sector in ascending excitation number), then one `d_i` per site, all flat
/// in [0, 1). The draw order is part of the reproducibility contract.
#[derive(Clone, Debug, Default)]
pub struct Disorder {
    site_d: Option<Vec<f64>>,
    noise: BTreeMap<usize, Vec<f64>>,
}

impl Disorder {
    /// No stochastic perturbations (deterministic chain).
    pub fn none() -> Disorder {
        Disorder::default()
    }

    pub fn draw(
        spec: &ChainSpec,
        profile: &CouplingProfile,
        sectors: &[usize],
        rng: &mut (impl Rng + ?Sized),
    ) -> Result<Disorder> {
        spec.validate()?;
        let mut sorted: Vec<usize> = sectors.to_vec();
        sorted.sort_unstable();
        sorted.dedup();

        let mut noise = BTreeMap::new();
        if spec.eta() > 0.0 {
            for &n_exc in &sorted {
                let basis = SubspaceBasis::enumerate(spec.n_sites, n_exc)?;
                let support = noise_support(spec, profile, &basis);
                let draws: Vec<f64> = (0..support.len()).map(|_| rng.gen::<f64>()).collect();
                noise.insert(n_exc, draws);
            }
        }

        let site_d = match spec.site_energies() {
            Some((_, Some(d))) => Some(d.to_vec()),
            Some((_, None)) => Some((0..spec.n_sites).map(|_| rng.gen::<f64>()).collect()),
            None => None,
        };

        Ok(Disorder { site_d, noise })
    }

    pub fn site_d(&self) -> Option<&[f64]> {
        self.site_d.as_deref()
    }
}

/// Hamiltonian of one excitation sector, dense symmetric, in units of J0.
#[derive(Clone, Debug)]
pub struct HamiltonianBlock {
    pub basis: SubspaceBasis,
    pub matrix: Array2<f64>,
}

/// Structurally non-zero entries (upper triangle incl. diagonal, row-major)
/// of a sector block before noise. This fixed enumeration defines both the
/// noise draw order and the entries noise is applied to.
fn noise_support(
    spec: &ChainSpec,
    profile: &CouplingProfile,
    basis: &SubspaceBasis,
) -> Vec<(usize, usize)> {
    let eps_active = matches!(spec.site_energies(), Some((e, _)) if e > 0.0);
    let gamma_active = spec.gamma() > 0.0;
    let dim = basis.dim();
    let mut support = Vec::new();
    for l in 0..dim {
        let mask = basis.mask(l);
        let diag_active = (eps_active && mask.excitations() > 0)
            || (gamma_active && mask.adjacent_pairs() > 0);
        if diag_active {
            support.push((l, l));
        }
        for m in l + 1..dim {
            if hop_coupling(mask, basis.mask(m), spec.n_sites, profile) != 0.0 {
                support.push((l, m));
            }
        }
    }
    support
}

/// Coupling between two masks if they are connected by a single nearest- or
/// next-nearest-neighbor hop, zero otherwise.
fn hop_coupling(a: BasisMask, b: BasisMask, n_sites: usize, profile: &CouplingProfile) -> f64 {
    let diff = a.0 ^ b.0;
    if diff.count_ones() != 2 {
        return 0.0;
    }
    // Hopping moves one excitation, so exactly one changed bit is set in `a`.
    if (a.0 & diff).count_ones() != 1 {
        return 0.0;
    }
    let low = diff.trailing_zeros() as usize;
    let high = 31 - diff.leading_zeros() as usize;
    if high == low + 1 {
        profile.nearest[low]
    } else if high == low + 2 && high < n_sites {
        match &profile.next_nearest {
            Some(next) => next[low],
            None => 0.0,
        }
    } else {
        0.0
    }
}

/// Assemble the Hamiltonian block of one excitation sector, in J0 units.
///
/// Off-diagonal entries hold the hop couplings; the diagonal collects site
/// energies and the nearest-neighbor excitation interaction. When the spec
/// carries random noise, `disorder` must hold draws for this sector.
pub fn build_block(
    spec: &ChainSpec,
    profile: &CouplingProfile,
    n_exc: usize,
    disorder: &Disorder,
) -> Result<HamiltonianBlock> {
    spec.validate()?;
    let basis = SubspaceBasis::enumerate(spec.n_sites, n_exc)?;
    let dim = basis.dim();
    let mut matrix = Array2::zeros((dim, dim));

    for a in 0..dim {
        let mask = basis.mask(a);
        for hop_len in 1..=2usize {
            let couplings: &[f64] = match hop_len {
                1 => &profile.nearest,
                _ => match &profile.next_nearest {
                    Some(next) => next,
                    None => continue,
                },
            };
            for i in 1..=spec.n_sites.saturating_sub(hop_len) {
                let j = i + hop_len;
                if mask.has_site(i) == mask.has_site(j) {
                    continue;
                }
                let other = mask.flip_site(i).flip_site(j);
                let b = basis
                    .index_of(other)
                    .expect("hopped mask stays in the sector");
                if b > a {
                    let val = couplings[i - 1];
                    matrix[[a, b]] = val;
                    matrix[[b, a]] = val;
                }
            }
        }

        let mut diag = spec.gamma() * mask.adjacent_pairs() as f64;
        if let Some((epsilon, _)) = spec.site_energies() {
            if epsilon > 0.0 {
                let scale = spec.epsilon_to_j0_units()?;
                let d = disorder.site_d().ok_or_else(|| {
                    Error::domain("site-energy disorder draws missing for this realization")
                })?;
                for site in 1..=spec.n_sites {
                    if mask.has_site(site) {
                        diag += epsilon * scale * d[site - 1];
                    }
                }
            }
        }
        matrix[[a, a]] = diag;
    }

    let eta = spec.eta();
    if eta > 0.0 {
        let draws = disorder.noise.get(&n_exc).ok_or_else(|| {
            Error::domain(format!("noise draws missing for sector n_exc = {n_exc}"))
        })?;
        let support = noise_support(spec, profile, &basis);
        if draws.len() != support.len() {
            return Err(Error::domain(
                "noise draw count does not match the sector support",
            ));
        }
        for (&(l, m), &d) in support.iter().zip(draws) {
            matrix[[l, m]] += eta * d;
            if l != m {
                matrix[[m, l]] += eta * d;
            }
        }
    }

    Ok(HamiltonianBlock { basis, matrix })
}
