//! Transfer and entanglement metrics: basis-state fidelity, two-site reduced
//! density matrices, concurrence, entanglement of formation, and peak
//! location/refinement on sampled series.
//!
//! Register qubits are traced out by every chain metric: fidelities sum
//! |amplitude|^2 over register keys and reductions treat registers as part
//! of the environment.

use ndarray::Array2;
use num_complex::Complex64;

use crate::basis::BasisMask;
use crate::dynamics::{SparseState, TimeSeries};
use crate::error::{Error, Result};
use crate::linalg;

/// Probability of finding the chain in the given basis state (registers
/// traced out).
pub fn fidelity_basis(state: &SparseState, target: BasisMask) -> f64 {
    state
        .iter()
        .filter(|&(mask, _, _)| mask == target)
        .map(|(_, _, amp)| amp.norm_sqr())
        .sum()
}

/// 4x4 reduced density matrix of two chain sites, basis order
/// |00>, |01>, |10>, |11> with the first label belonging to the first
/// requested site.
#[derive(Clone, Debug)]
pub struct TwoQubitDensity {
    pub rho: [[Complex64; 4]; 4],
}

const DENSITY_TOL: f64 = 1e-10;

impl TwoQubitDensity {
    pub fn trace(&self) -> f64 {
        (0..4).map(|i| self.rho[i][i].re).sum()
    }

    fn to_array(&self) -> Array2<Complex64> {
        let mut a = Array2::zeros((4, 4));
        for i in 0..4 {
            for j in 0..4 {
                a[[i, j]] = self.rho[i][j];
            }
        }
        a
    }

    /// Hermiticity, unit trace, and positivity within tolerance.
    pub fn validate(&self) -> Result<()> {
        for i in 0..4 {
            for j in 0..4 {
                if (self.rho[i][j] - self.rho[j][i].conj()).norm() > DENSITY_TOL {
                    return Err(Error::numeric("density matrix is not Hermitian"));
                }
            }
        }
        if (self.trace() - 1.0).abs() > DENSITY_TOL {
            return Err(Error::numeric(format!(
                "density matrix trace {} != 1",
                self.trace()
            )));
        }
        let eigs = linalg::eigvals_hermitian(&self.to_array())?;
        if eigs.iter().any(|&e| e < -DENSITY_TOL) {
            return Err(Error::numeric(format!(
                "density matrix has negative eigenvalue {:.3e}",
                eigs[0]
            )));
        }
        Ok(())
    }
}

/// Trace out everything except chain sites `a` and `b` (all other sites and
/// all registers).
pub fn reduce_two_sites(state: &SparseState, a: usize, b: usize) -> Result<TwoQubitDensity> {
    let n = state.n_sites;
    if a == b || a < 1 || b < 1 || a > n || b > n {
        return Err(Error::domain(format!(
            "reduce_two_sites needs two distinct sites in 1..={n}, got ({a}, {b})"
        )));
    }
    let bit_a = 1u32 << (a - 1);
    let bit_b = 1u32 << (b - 1);
    let env_mask = !(bit_a | bit_b);

    // Group amplitudes by identical environment (other chain bits + registers).
    let mut groups: std::collections::BTreeMap<(u32, u32), [Complex64; 4]> =
        std::collections::BTreeMap::new();
    for (mask, reg, amp) in state.iter() {
        let env = (mask.0 & env_mask, reg);
        let xa = (mask.0 & bit_a != 0) as usize;
        let xb = (mask.0 & bit_b != 0) as usize;
        groups.entry(env).or_insert([Complex64::new(0.0, 0.0); 4])[2 * xa + xb] += amp;
    }

    let mut rho = [[Complex64::new(0.0, 0.0); 4]; 4];
    for v in groups.values() {
        for i in 0..4 {
            for j in 0..4 {
                rho[i][j] += v[i] * v[j].conj();
            }
        }
    }
    Ok(TwoQubitDensity { rho })
}

/// Spin-flipped partner `(sigma_y x sigma_y) conj(rho) (sigma_y x sigma_y)`.
fn spin_flip(rho: &[[Complex64; 4]; 4]) -> Array2<Complex64> {
    // sigma_y x sigma_y is the real antidiagonal (-1, 1, 1, -1).
    const Y2: [(usize, f64); 4] = [(3, -1.0), (2, 1.0), (1, 1.0), (0, -1.0)];
    let mut out = Array2::zeros((4, 4));
    for i in 0..4 {
        let (pi, si) = Y2[i];
        for j in 0..4 {
            let (pj, sj) = Y2[j];
            out[[i, j]] = rho[pi][pj].conj() * (si * sj);
        }
    }
    out
}

/// Wootters concurrence of a two-qubit density matrix.
///
/// The four lambda values are computed as square roots of the eigenvalues of
/// the Hermitian PSD product `sqrt(rho) rho_tilde sqrt(rho)`, evaluated
/// through the real symmetric embedding so only the Jacobi kernel is needed.
pub fn concurrence(density: &TwoQubitDensity) -> Result<f64> {
    density.validate()?;
    let rho = density.to_array();
    let root = linalg::sqrt_hermitian_psd(&rho, DENSITY_TOL)?;
    let tilde = spin_flip(&density.rho);

    let e_root = linalg::embed_hermitian(&root);
    let e_tilde = linalg::embed_hermitian(&tilde);
    let m = e_root.dot(&e_tilde).dot(&e_root);
    // The product of embeddings is the embedding of the product, so m is the
    // real symmetric image of a Hermitian PSD matrix.
    let sym = 0.5 * (&m + &m.t());
    let (vals, _) = linalg::eigh(&sym)?;

    // Eigenvalues arrive doubled and ascending: one copy per pair, descending.
    let mus: Vec<f64> = vals.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect();
    if mus.iter().any(|&mu| mu < -DENSITY_TOL) {
        return Err(Error::numeric("spin-flip product has a negative eigenvalue"));
    }
    // Exact zeros of the product pick up O(eps) noise that the square root
    // would blow up to ~1e-8; clip them before taking roots.
    let mu_max = mus.iter().cloned().fold(0.0f64, f64::max);
    let clip = 1e-12 * mu_max.max(1.0);
    let mut lambdas: Vec<f64> = mus
        .iter()
        .map(|&mu| if mu < clip { 0.0 } else { mu.sqrt() })
        .collect();
    lambdas.reverse();
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -(x * x.log2() + (1.0 - x) * (1.0 - x).log2())
}

/// Entanglement of formation from concurrence:
/// `EoF = h((1 + sqrt(1 - C^2)) / 2)` with `h` the binary entropy.
pub fn eof_from_concurrence(c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    binary_entropy(0.5 * (1.0 + (1.0 - c * c).sqrt()))
}

/// Entanglement of formation of a two-qubit density matrix.
pub fn eof(density: &TwoQubitDensity) -> Result<f64> {
    Ok(eof_from_concurrence(concurrence(density)?))
}

/// Convenience: EoF between two chain sites of a state.
pub fn eof_sites(state: &SparseState, a: usize, b: usize) -> Result<f64> {
    eof(&reduce_two_sites(state, a, b)?)
}

/// Located metric maximum.
#[derive(Clone, Debug)]
pub struct PeakReport {
    pub tau_star: f64,
    pub value: f64,
    pub window: (f64, f64),
    /// Grid maximum sat on the window edge; the refined result may not be a
    /// true local peak.
    pub at_edge: bool,
}

/// Peak-location tolerance in units of t_S.
pub const PEAK_TAU_TOL: f64 = 1e-6;

/// Locate the maximum of a series column inside `tau_center +- half_width`,
/// refine it by parabolic interpolation through the three bracketing samples
/// and, when `refine` supplies the underlying metric, polish by golden
/// section to a tau tolerance of 1e-6.
pub fn find_peak(
    series: &TimeSeries,
    column: &str,
    tau_center: f64,
    half_width: f64,
    refine: Option<&dyn Fn(f64) -> f64>,
) -> Result<PeakReport> {
    let values = series
        .column(column)
        .ok_or_else(|| Error::domain(format!("series has no column named {column}")))?;
    let lo = tau_center - half_width;
    let hi = tau_center + half_width;
    let first = series.tau.first().copied().unwrap_or(0.0);
    let last = series.tau.last().copied().unwrap_or(0.0);
    if lo < first - 1e-12 || hi > last + 1e-12 {
        return Err(Error::domain(format!(
            "peak window [{lo}, {hi}] exceeds the series range [{first}, {last}]"
        )));
    }

    let in_window: Vec<usize> = (0..series.tau.len())
        .filter(|&i| series.tau[i] >= lo - 1e-12 && series.tau[i] <= hi + 1e-12)
        .collect();
    if in_window.is_empty() {
        return Err(Error::domain("peak window contains no samples"));
    }
    let &best = in_window
        .iter()
        .max_by(|&&a, &&b| values[a].partial_cmp(&values[b]).unwrap())
        .unwrap();
    let at_edge = best == in_window[0] || best == *in_window.last().unwrap();

    let mut tau_star = series.tau[best];
    let mut value = values[best];

    if !at_edge && best > 0 && best + 1 < series.tau.len() {
        // Parabola through the three bracketing samples.
        let (t0, t1, t2) = (series.tau[best - 1], series.tau[best], series.tau[best + 1]);
        let (y0, y1, y2) = (values[best - 1], values[best], values[best + 1]);
        let denom = (y0 - y1) * (t1 - t2) - (y2 - y1) * (t1 - t0);
        if denom.abs() > 0.0 {
            let num = (y0 - y1) * (t1 - t2) * (t1 + t2) - (y2 - y1) * (t1 - t0) * (t1 + t0);
            let t = 0.5 * num / denom;
            if t.is_finite() && t > t0 && t < t2 {
                tau_star = t;
            }
        }
    }

    if let Some(metric) = refine {
        let step = if series.tau.len() > 1 {
            series.tau[1] - series.tau[0]
        } else {
            half_width
        };
        let mut a = (tau_star - step).max(lo);
        let mut b = (tau_star + step).min(hi);
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = metric(c);
        let mut fd = metric(d);
        while (b - a) > PEAK_TAU_TOL {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = metric(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = metric(d);
            }
        }
        tau_star = 0.5 * (a + b);
        value = metric(tau_star);
        if value < fc.max(fd) {
            value = fc.max(fd);
            tau_star = if fc > fd { c } else { d };
        }
    }

    Ok(PeakReport {
        tau_star,
        value,
        window: (lo, hi),
        at_edge,
    })
}
