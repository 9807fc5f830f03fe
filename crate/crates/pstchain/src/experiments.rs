//! Seeded multi-realization averaging, parameter scans, and the
//! exponential-in-N / Gaussian-in-amplitude decay fit.
//!
//! Reproducibility contract: realization `k` of a run seeded with `master`
//! draws every random number from `SeedSequence::stream(master, k)`, a
//! ChaCha8 stream whose 32-byte seed is derived from `master ^ k * GOLDEN`
//! by four SplitMix64 steps. Scans collect per-realization values into a
//! vector indexed by `k` and reduce sequentially, so results are identical
//! for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::basis::BasisMask;
use crate::chain::{ChainSpec, EnergyScaleRef, Perturbation};
use crate::dynamics::{ChainPropagator, SparseState, TimeSeries};
use crate::error::{Error, Result};
use crate::metrics::{eof_sites, fidelity_basis, find_peak};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives independent, platform-stable random streams per realization.
#[derive(Clone, Copy, Debug)]
pub struct SeedSequence {
    pub master: u64,
}

impl SeedSequence {
    pub fn new(master: u64) -> SeedSequence {
        SeedSequence { master }
    }

    /// Stream for realization `k`. Same `(master, k)` gives the same
    /// flat-[0,1) sequence on every platform.
    pub fn stream(&self, k: u64) -> ChaCha8Rng {
        let mut state = self.master ^ k.wrapping_mul(GOLDEN);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

/// Mean/standard-error summary of one scan point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub coords: Vec<f64>,
    pub mean: f64,
    pub std_err: f64,
    pub n_realizations: usize,
}

/// Grid of scan points with named coordinate axes.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub axis_names: Vec<String>,
    pub rows: Vec<ScanRow>,
}

/// Evaluate `f` once per realization stream and reduce. The returned vector
/// is ordered by realization index; mean and standard error are computed
/// sequentially over it.
pub fn run_realizations<F>(
    n_real: usize,
    seq: SeedSequence,
    f: F,
) -> Result<(f64, f64, Vec<f64>)>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if n_real == 0 {
        return Err(Error::domain("n_realizations must be >= 1"));
    }
    let values: Vec<f64> = (0..n_real as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = seq.stream(k);
            f(&mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, std_err) = summarize(&values);
    Ok((mean, std_err, values))
}

fn summarize(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Fidelity of the initial three-excitation state at the refined first
/// revival peak near tau = 1 for one prepared realization.
fn revival_peak(prop: &ChainPropagator, state: &SparseState, mask: BasisMask) -> Result<f64> {
    let (lo, hi) = (0.85f64, 1.15f64);
    let steps = 300usize;
    let tau: Vec<f64> = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect();
    let eval = |t: f64| -> f64 {
        fidelity_basis(&prop.propagate(state, t).expect("sector prepared"), mask)
    };
    let values: Vec<f64> = tau.iter().map(|&t| eval(t)).collect();
    let series = TimeSeries {
        tau,
        columns: vec![("f".into(), values)],
    };
    let peak = find_peak(&series, "f", 1.0, 0.15, Some(&eval))?;
    Ok(peak.value)
}

/// Revival-fidelity surface of a six-site chain carrying three excitations,
/// scanned over the excitation-interaction strength and the site-energy
/// amplitude (J0-referenced, averaged over realizations when stochastic).
pub fn scan_gamma_epsilon(
    gamma_grid: &[f64],
    epsilon_grid: &[f64],
    n_real: usize,
    master_seed: u64,
) -> Result<ScanResult> {
    let n_sites = 6usize;
    let mask = BasisMask::from_sites(&[1, 2, 3]);
    let seq = SeedSequence::new(master_seed);

    let mut rows = Vec::new();
    for &gamma in gamma_grid {
        for &epsilon in epsilon_grid {
            let mut spec = ChainSpec::new(n_sites);
            if gamma > 0.0 {
                spec = spec.with(Perturbation::ExcitationInteraction { gamma });
            }
            if epsilon > 0.0 {
                spec = spec
                    .with(Perturbation::SiteEnergies { epsilon, d: None })
                    .with_epsilon_ref(EnergyScaleRef::J0);
            }
            let stochastic = epsilon > 0.0;
            let state = SparseState::basis_state(n_sites, mask);

            let (mean, std_err, n_used) = if stochastic {
                let (m, s, _) = run_realizations(n_real, seq, |rng| {
                    let prop = ChainPropagator::prepare(&spec, &[3], Some(rng))?;
                    revival_peak(&prop, &state, mask)
                })?;
                (m, s, n_real)
            } else {
                let prop = ChainPropagator::prepare(&spec, &[3], None)?;
                (revival_peak(&prop, &state, mask)?, 0.0, 1)
            };
            rows.push(ScanRow {
                coords: vec![gamma, epsilon],
                mean,
                std_err,
                n_realizations: n_used,
            });
        }
    }
    Ok(ScanResult {
        axis_names: vec!["gamma".into(), "epsilon".into()],
        rows,
    })
}

/// Which observable a chain-length scan tracks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanFamily {
    /// Fidelity of `|110...0>` at tau = 1.
    Unentangled110,
    /// EoF of sites (1, 2) at tau = 1 for an initial (|10...> + |01...>)/sqrt(2).
    BellType1,
    /// EoF of sites (1, N) at tau = 0.5 for `|+>` payloads on both ends.
    GateType2,
}

/// Which perturbation the scan sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanPerturbation {
    /// Averaged next-nearest couplings of strength delta (deterministic).
    NnnAveraged,
    /// Site energies `epsilon * J_max * d_i` (averaged over realizations).
    SiteEnergies,
}

fn family_state(family: ScanFamily, n: usize) -> Result<(SparseState, Vec<usize>)> {
    let w = num_complex::Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let h = num_complex::Complex64::new(0.5, 0.0);
    match family {
        ScanFamily::Unentangled110 => Ok((
            SparseState::basis_state(n, BasisMask::from_sites(&[1, 2])),
            vec![2],
        )),
        ScanFamily::BellType1 => Ok((
            SparseState::superposition(
                n,
                &[
                    (BasisMask::from_sites(&[1]), w),
                    (BasisMask::from_sites(&[2]), w),
                ],
            )?,
            vec![1],
        )),
        ScanFamily::GateType2 => Ok((
            SparseState::superposition(
                n,
                &[
                    (BasisMask::VACUUM, h),
                    (BasisMask::from_sites(&[1]), h),
                    (BasisMask::from_sites(&[n]), h),
                    (BasisMask::from_sites(&[1, n]), h),
                ],
            )?,
            vec![0, 1, 2],
        )),
    }
}

fn family_observable(
    family: ScanFamily,
    prop: &ChainPropagator,
    state: &SparseState,
) -> Result<f64> {
    let n = prop.n_sites;
    match family {
        ScanFamily::Unentangled110 => {
            let evolved = prop.propagate(state, 1.0)?;
            Ok(fidelity_basis(&evolved, BasisMask::from_sites(&[1, 2])))
        }
        ScanFamily::BellType1 => {
            let evolved = prop.propagate(state, 1.0)?;
            eof_sites(&evolved, 1, 2)
        }
        ScanFamily::GateType2 => {
            let evolved = prop.propagate(state, 0.5)?;
            eof_sites(&evolved, 1, n)
        }
    }
}

/// Observable of `family` versus chain length for each perturbation value.
/// Stochastic points are averaged over `n_real` seeded realizations; the
/// averaged next-nearest model is deterministic (one realization).
pub fn scan_chain_length(
    family: ScanFamily,
    perturbation: ScanPerturbation,
    values: &[f64],
    n_range: (usize, usize),
    n_real: usize,
    master_seed: u64,
) -> Result<ScanResult> {
    let (n_lo, n_hi) = n_range;
    if n_lo < 2 || n_hi < n_lo {
        return Err(Error::domain("invalid chain-length range"));
    }
    let seq = SeedSequence::new(master_seed);

    let mut rows = Vec::new();
    for n in n_lo..=n_hi {
        for &p in values {
            let spec = match perturbation {
                ScanPerturbation::NnnAveraged => {
                    ChainSpec::new(n).with(Perturbation::NnnAveraged { delta: p })
                }
                ScanPerturbation::SiteEnergies => ChainSpec::new(n)
                    .with(Perturbation::SiteEnergies { epsilon: p, d: None })
                    .with_epsilon_ref(EnergyScaleRef::JMax),
            };
            let (state, sectors) = family_state(family, n)?;
            let stochastic = matches!(perturbation, ScanPerturbation::SiteEnergies) && p > 0.0;

            let (mean, std_err, n_used) = if stochastic {
                let (m, s, _) = run_realizations(n_real, seq, |rng| {
                    let prop = ChainPropagator::prepare(&spec, &sectors, Some(rng))?;
                    family_observable(family, &prop, &state)
                })?;
                (m, s, n_real)
            } else {
                let prop = ChainPropagator::prepare(&spec, &sectors, None)?;
                (family_observable(family, &prop, &state)?, 0.0, 1)
            };
            rows.push(ScanRow {
                coords: vec![n as f64, p],
                mean,
                std_err,
                n_realizations: n_used,
            });
        }
    }
    Ok(ScanResult {
        axis_names: vec!["n_sites".into(), "p".into()],
        rows,
    })
}

/// Fitted decay constant of the law `value = exp(-N p^2 / p0^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub p0: f64,
    /// RMS deviation of the fitted curve from the used points, in value space.
    pub residual_rms: f64,
    pub points_used: usize,
    pub points_excluded: usize,
}

/// Least-squares fit through the origin in transformed coordinates
/// `y = -ln(value)`, `x = N p^2`, so `1/p0^2 = sum(xy)/sum(x^2)`.
/// Points with value below `floor` are excluded (and counted).
pub fn fit_decay(points: &[(usize, f64, f64)], floor: f64) -> Result<FitResult> {
    let used: Vec<&(usize, f64, f64)> = points.iter().filter(|&&(_, _, v)| v >= floor).collect();
    let excluded = points.len() - used.len();
    if used.len() < 3 {
        return Err(Error::domain(format!(
            "fit needs at least 3 points above the floor, got {}",
            used.len()
        )));
    }
    let mut sum_xy = 0.0;
    let mut sum_xx = 0.0;
    for &&(n, p, value) in &used {
        let x = n as f64 * p * p;
        let y = -value.ln();
        sum_xy += x * y;
        sum_xx += x * x;
    }
    if sum_xy <= 0.0 {
        return Err(Error::numeric(
            "decay fit is degenerate: no net loss in the data",
        ));
    }
    let p0 = (sum_xx / sum_xy).sqrt();

    let mut rss = 0.0;
    for &&(n, p, value) in &used {
        let predicted = (-(n as f64) * p * p / (p0 * p0)).exp();
        rss += (value - predicted) * (value - predicted);
    }
    Ok(FitResult {
        p0,
        residual_rms: (rss / used.len() as f64).sqrt(),
        points_used: used.len(),
        points_excluded: excluded,
    })
}
