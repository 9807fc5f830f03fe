//! Runtime self-test: module invariants plus dense full-space cross-checks.
//! Used by the `selftest` subcommand; the test suite covers the same ground
//! (and more) at build time.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{mirror_mask, BasisMask, SubspaceBasis};
use crate::chain::{build_block, ChainSpec, Disorder, EnergyScaleRef, Perturbation};
use crate::dense::{full_operator, DenseState};
use crate::dynamics::{ChainPropagator, SparseState};
use crate::error::Result;
use crate::experiments::{fit_decay, run_realizations, SeedSequence};
use crate::injection::{apply_rabi, measure_site, swap_inject};
use crate::metrics::{concurrence, eof_from_concurrence, reduce_two_sites, TwoQubitDensity};

pub struct SelftestReport {
    pub entries: Vec<(String, std::result::Result<(), String>)>,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|(_, r)| r.is_ok())
    }
}

fn check(name: &str, entries: &mut Vec<(String, std::result::Result<(), String>)>, f: impl FnOnce() -> std::result::Result<(), String>) {
    entries.push((name.to_string(), f()));
}

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_state(n: usize, max_exc: usize, registers: usize, rng: &mut ChaCha8Rng) -> SparseState {
    let mut terms = std::collections::BTreeMap::new();
    for n_exc in 0..=max_exc {
        let basis = SubspaceBasis::enumerate(n, n_exc).unwrap();
        for &mask in basis.masks() {
            if rng.gen::<f64>() < 0.4 {
                for reg in 0..(1u32 << registers) {
                    if rng.gen::<f64>() < 0.6 {
                        terms.insert(
                            (mask.0, reg),
                            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                        );
                    }
                }
            }
        }
    }
    if terms.is_empty() {
        terms.insert((0, 0), Complex64::new(1.0, 0.0));
    }
    let mut state = SparseState::from_map(n, registers, terms);
    state.normalize();
    state
}

/// Run all suites; the report carries one pass/fail entry per suite.
pub fn selftest() -> Result<SelftestReport> {
    let mut entries = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);

    check("basis: mirror involution and popcount", &mut entries, || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let n = rng.gen_range(2..=24usize);
            let mask = BasisMask(rng.gen::<u32>() & ((1u32 << n) - 1));
            let mirrored = mirror_mask(mask, n);
            ensure(mirror_mask(mirrored, n) == mask, "mirror is not an involution")?;
            ensure(
                mirrored.excitations() == mask.excitations(),
                "mirror changed the excitation count",
            )?;
        }
        for n in 2..=10usize {
            for k in 0..=n {
                let a = SubspaceBasis::enumerate(n, k).map_err(|e| e.to_string())?;
                let b = SubspaceBasis::enumerate(n, n - k).map_err(|e| e.to_string())?;
                ensure(a.dim() == b.dim(), "sector sizes break the k <-> n-k symmetry")?;
            }
        }
        Ok(())
    });

    check("blocks: embedding equals the directly-built operator", &mut entries, || {
        let n = 6;
        let spec = ChainSpec::new(n)
            .with(Perturbation::ExcitationInteraction { gamma: 0.2 })
            .with(Perturbation::NnnAveraged { delta: 0.03 })
            .with(Perturbation::SiteEnergies {
                epsilon: 0.15,
                d: Some(vec![0.9, 0.1, 0.4, 0.8, 0.3, 0.6]),
            })
            .with_epsilon_ref(EnergyScaleRef::J0);
        let profile = spec.coupling_profile().map_err(|e| e.to_string())?;
        let disorder = Disorder::draw(&spec, &profile, &[], &mut ChaCha8Rng::seed_from_u64(0))
            .map_err(|e| e.to_string())?;
        let blocks: Vec<_> = (0..=n)
            .map(|k| build_block(&spec, &profile, k, &disorder).unwrap())
            .collect();
        let embedded = crate::dense::embed_blocks(&blocks, n);
        let direct = full_operator(&spec, &profile, disorder.site_d()).map_err(|e| e.to_string())?;
        let dev = embedded
            .iter()
            .zip(direct.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        ensure(dev < 1e-12, format!("operator deviation {dev:.2e}"))
    });

    check("dynamics: mirroring, revival, unitarity", &mut entries, || {
        for n in [4usize, 6, 8] {
            let spec = ChainSpec::new(n);
            let prop = ChainPropagator::prepare(&spec, &[1, 2], None).map_err(|e| e.to_string())?;
            let basis = SubspaceBasis::enumerate(n, 2).unwrap();
            for &mask in basis.masks() {
                let state = SparseState::basis_state(n, mask);
                let at = prop.propagate(&state, 0.5).map_err(|e| e.to_string())?;
                let f = crate::metrics::fidelity_basis(&at, mirror_mask(mask, n));
                ensure((f - 1.0).abs() < 1e-8, format!("mirror fidelity {f}"))?;
                let back = prop.propagate(&state, 1.0).map_err(|e| e.to_string())?;
                let f = crate::metrics::fidelity_basis(&back, mask);
                ensure((f - 1.0).abs() < 1e-8, format!("revival fidelity {f}"))?;
                ensure((at.norm_sqr() - 1.0).abs() < 1e-10, "norm drifted")?;
            }
        }
        Ok(())
    });

    check("dynamics: dense full-space evolution agrees", &mut entries, || {
        for _ in 0..6 {
            let n = rng.gen_range(4..=7usize);
            let spec = ChainSpec::new(n)
                .with(Perturbation::ExcitationInteraction { gamma: rng.gen_range(0.0..0.2) })
                .with(Perturbation::NnnAveraged { delta: rng.gen_range(0.0..0.1) });
            let profile = spec.coupling_profile().map_err(|e| e.to_string())?;
            let prop = ChainPropagator::prepare(&spec, &[0, 1, 2, 3], None)
                .map_err(|e| e.to_string())?;
            let h = full_operator(&spec, &profile, None).map_err(|e| e.to_string())?;
            let state = random_state(n, 3, 0, &mut rng);
            let dtau = rng.gen_range(0.05..1.5);
            let sparse = prop.propagate(&state, dtau).map_err(|e| e.to_string())?;
            let mut dense = DenseState::from_sparse(&state);
            dense.evolve(&h, dtau);
            let dev = dense.max_deviation(&sparse);
            ensure(dev < 1e-10, format!("evolution deviation {dev:.2e}"))?;
        }
        Ok(())
    });

    check("metrics: partial trace agrees with the dense reduction", &mut entries, || {
        for _ in 0..10 {
            let n = rng.gen_range(4..=7usize);
            let state = random_state(n, 3, 1, &mut rng);
            let a = rng.gen_range(1..=n);
            let mut b = rng.gen_range(1..=n);
            while b == a {
                b = rng.gen_range(1..=n);
            }
            let rho = reduce_two_sites(&state, a, b).map_err(|e| e.to_string())?;
            rho.validate().map_err(|e| e.to_string())?;
            let dense_rho = DenseState::from_sparse(&state).reduce_two_sites(a, b);
            for i in 0..4 {
                for j in 0..4 {
                    let dev = (rho.rho[i][j] - dense_rho[i][j]).norm();
                    ensure(dev < 1e-10, format!("partial trace deviation {dev:.2e}"))?;
                }
            }
        }
        Ok(())
    });

    check("metrics: concurrence and EoF kernels", &mut entries, || {
        for k in 0..20 {
            let p = k as f64 / 19.0;
            let bell = 0.5;
            let mut rho = [[Complex64::new(0.0, 0.0); 4]; 4];
            for &i in &[0usize, 3] {
                for &j in &[0usize, 3] {
                    rho[i][j] = Complex64::new(bell * p, 0.0);
                }
            }
            for i in 0..4 {
                rho[i][i] += Complex64::new((1.0 - p) / 4.0, 0.0);
            }
            let got = concurrence(&TwoQubitDensity { rho }).map_err(|e| e.to_string())?;
            let want = (0.0f64).max((3.0 * p - 1.0) / 2.0);
            ensure((got - want).abs() < 1e-10, format!("werner C({p}) = {got}, want {want}"))?;
        }
        let mut prev = -1.0;
        for k in 0..=200 {
            let e = eof_from_concurrence(k as f64 / 200.0);
            ensure(e >= prev - 1e-12, "EoF not monotone in C")?;
            prev = e;
        }
        Ok(())
    });

    check("injection: unitaries and measurements agree with dense", &mut entries, || {
        for _ in 0..10 {
            let n = rng.gen_range(4..=6usize);
            let mut state = random_state(n, 2, 0, &mut rng);
            let reg = state.add_register(
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            );
            let site = rng.gen_range(1..=n);
            let theta = rng.gen_range(0.0..std::f64::consts::PI);
            let phi = rng.gen_range(0.0..std::f64::consts::PI);
            let r = rng.gen_range(0.0..0.8);

            let pulsed = apply_rabi(&state, site, theta, phi);
            let mut dense = DenseState::from_sparse(&state);
            let c = Complex64::new((theta / 2.0).cos(), 0.0);
            let s = (theta / 2.0).sin();
            dense.apply_one_qubit(
                Some(site),
                None,
                [
                    [c, Complex64::new(0.0, -1.0) * Complex64::from_polar(s, -phi)],
                    [Complex64::new(0.0, -1.0) * Complex64::from_polar(s, phi), c],
                ],
            );
            let dev = dense.max_deviation(&pulsed);
            ensure(dev < 1e-10, format!("rabi deviation {dev:.2e}"))?;
            ensure((pulsed.norm_sqr() - 1.0).abs() < 1e-10, "rabi broke the norm")?;

            let swapped = swap_inject(&state, site, reg, r).map_err(|e| e.to_string())?;
            let mut dense = DenseState::from_sparse(&state);
            dense.apply_partial_swap(site, reg, r);
            let dev = dense.max_deviation(&swapped);
            ensure(dev < 1e-10, format!("swap deviation {dev:.2e}"))?;

            let (one, zero) = measure_site(&state, site);
            let (p1d, oned, p0d, zerod) = DenseState::from_sparse(&state).measure(Some(site), None);
            ensure((one.probability - p1d).abs() < 1e-12, "p1 deviates")?;
            ensure((zero.probability - p0d).abs() < 1e-12, "p0 deviates")?;
            ensure(
                (one.probability + zero.probability - 1.0).abs() < 1e-10,
                "branch probabilities do not sum to 1",
            )?;
            if !one.empty {
                let dev = oned.max_deviation(&one.post_state);
                ensure(dev < 1e-10, format!("outcome-1 post state deviates {dev:.2e}"))?;
            }
            if !zero.empty {
                let dev = zerod.max_deviation(&zero.post_state);
                ensure(dev < 1e-10, format!("outcome-0 post state deviates {dev:.2e}"))?;
            }
        }
        Ok(())
    });

    check("experiments: determinism and fit recovery", &mut entries, || {
        let f = |rng: &mut ChaCha8Rng| Ok(rng.gen::<f64>());
        let a = run_realizations(32, SeedSequence::new(12345), f).map_err(|e| e.to_string())?;
        let b = run_realizations(32, SeedSequence::new(12345), f).map_err(|e| e.to_string())?;
        ensure(a.2 == b.2, "same master seed must reproduce bit-identically")?;

        let p0 = 0.37;
        let points: Vec<(usize, f64, f64)> = (4..=12)
            .flat_map(|n| {
                [0.05, 0.1, 0.2]
                    .iter()
                    .map(move |&p| (n, p, (-(n as f64) * p * p / (p0 * p0)).exp()))
                    .collect::<Vec<_>>()
            })
            .collect();
        let fit = fit_decay(&points, 0.05).map_err(|e| e.to_string())?;
        ensure((fit.p0 - p0).abs() < 1e-6, format!("fit recovered {}", fit.p0))
    });

    Ok(SelftestReport { entries })
}
