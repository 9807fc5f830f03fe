use num_complex::Complex64;
use pstchain::*;
use pstchain::basis::BasisMask;
use pstchain::dynamics::{ChainPropagator, SparseState};
use pstchain::injection::*;
use pstchain::metrics::fidelity_basis;

fn peak_scan(prop: &ChainPropagator, state: &SparseState, t0: f64, mask: BasisMask, lo: f64, hi: f64) -> (f64, f64) {
    let mut best = (0.0, 0.0);
    for i in 0..=400 {
        let tau = lo + (hi - lo) * i as f64 / 400.0;
        let f = fidelity_basis(&prop.propagate(state, tau - t0).unwrap(), mask);
        if f > best.1 { best = (tau, f); }
    }
    best
}

#[test]
fn enumerate_variants() {
    let n = 6;
    let d = 0.05;
    let target = BasisMask::from_sites(&[1, 2]);
    let prop = ChainPropagator::prepare(&ChainSpec::new(n), &[0,1,2], None).unwrap();

    for (first, second) in [(1usize, 2usize), (2, 1)] {
        let st = SparseState::basis_state(n, BasisMask::from_sites(&[first]));
        let at_d = prop.propagate(&st, d).unwrap();
        let pulsed = apply_rabi(&at_d, second, std::f64::consts::PI, 0.0);
        for m_site in [1usize, 2] {
            for m_tau in [1.0, 1.0 + d] {
                let at_m = prop.propagate(&pulsed, m_tau - d).unwrap();
                let (one, _) = measure_site(&at_m, m_site);
                let (tp, fc) = peak_scan(&prop, &one.post_state, m_tau, target, m_tau.max(1.0), 1.0 + 2.0*d + 0.05);
                println!("first={first} second={second} msite={m_site} mtau={m_tau:.2}: p={:.4} Fcond={:.4}@{tp:.3} p*F={:.4}",
                    one.probability, fc, one.probability * fc);
            }
        }
    }

    // SWAP variants, delay 0.075, twin fidelity
    let d = 0.075;
    let twin = mirror_mask(target, n);
    for (first, second) in [(1usize, 2usize), (2, 1)] {
        let st = SparseState::basis_state(n, BasisMask::from_sites(&[first]));
        let at_d = prop.propagate(&st, d).unwrap();
        let mut wr = at_d.clone();
        let reg = wr.add_register(Complex64::new(0.0,0.0), Complex64::new(1.0,0.0));
        let sw = swap_inject(&wr, second, reg, 0.0).unwrap();
        let (_, zero) = measure_register(&sw, reg).unwrap();
        let (tp, fc) = peak_scan(&prop, &zero.post_state, d, twin, 0.5, 0.70);
        println!("SWAP first={first} second={second}: p0={:.4} Fcond_twin={:.4}@{tp:.3} p*F={:.4}",
            zero.probability, fc, zero.probability * fc);
    }
}
