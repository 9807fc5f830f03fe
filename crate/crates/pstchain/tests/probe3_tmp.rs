use num_complex::Complex64;
use pstchain::*;
use pstchain::basis::BasisMask;
use pstchain::dynamics::{ChainPropagator, SparseState};
use pstchain::injection::*;
use pstchain::metrics::fidelity_basis;

#[test]
fn manual_swap_walk() {
    let prop = ChainPropagator::prepare(&ChainSpec::new(6), &[0,1,2], None).unwrap();
    let st = SparseState::basis_state(6, BasisMask::from_sites(&[1]));
    let d = 0.05;
    let at_delay = prop.propagate(&st, d).unwrap();
    let mut with_reg = at_delay.clone();
    let reg = with_reg.add_register(Complex64::new(0.0,0.0), Complex64::new(1.0,0.0));
    let swapped = swap_inject(&with_reg, 2, reg, 0.0).unwrap();
    let (one, zero) = measure_register(&swapped, reg).unwrap();
    println!("p(reg occupied) = {:.6}  (expect |<e2|U(d)|e1>|^2, small)", one.probability);
    println!("p(reg empty)    = {:.6}", zero.probability);
    // conditioned success branch forward to 1+d
    let fwd = prop.propagate(&zero.post_state, 1.0).unwrap();
    let f = fidelity_basis(&fwd, BasisMask::from_sites(&[1,2]));
    println!("F_cond(1+d) = {:.6}; product = {:.6} (caption 0.9870)", f, zero.probability * f);
    // scan fidelity near 1.05 on conditioned branch
    for k in 0..7 {
        let tau = 1.02 + 0.01 * k as f64;
        let s = prop.propagate(&zero.post_state, tau - d).unwrap();
        println!("  tau={tau:.2}: F={:.6}", fidelity_basis(&s, BasisMask::from_sites(&[1,2])));
    }
}
