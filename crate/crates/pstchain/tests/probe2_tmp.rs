use pstchain::*;
use pstchain::basis::BasisMask;
use pstchain::dynamics::{ChainPropagator, SparseState, TimeGrid};
use pstchain::injection::*;
use pstchain::metrics::{fidelity_basis, find_peak};

#[test]
fn probe_conditioning() {
    let grid = TimeGrid::from_span(3.0, 1000).unwrap();
    let mut cfg = ProtocolConfig::new(ChainSpec::new(6), 1, 2);
    cfg.delay = 0.05;
    cfg.method = InjectionMethod::RabiPulse { theta: std::f64::consts::PI, phi: 0.0 };
    cfg.correction = Correction::MeasureSiteAt { site: 1, tau: 1.0 };
    cfg.conditioned = false;  // probability-weighted mixture
    let s = run_delayed_pair(&cfg, &grid).unwrap();
    let p = find_peak(&s, "f_target", 1.05, 0.1, None).unwrap();
    println!("rabi site1 UNCOND: peak {:.5} at {:.4} (caption 0.7807)", p.value, p.tau_star);

    // manual: what is p(site1=1) at tau=1?
    let prop = ChainPropagator::prepare(&ChainSpec::new(6), &[0,1,2], None).unwrap();
    let st = SparseState::basis_state(6, BasisMask::from_sites(&[1]));
    let at_delay = prop.propagate(&st, 0.05).unwrap();
    let pulsed = apply_rabi(&at_delay, 2, std::f64::consts::PI, 0.0);
    let at_1 = prop.propagate(&pulsed, 1.0 - 0.05).unwrap();
    let (one, _) = measure_site(&at_1, 1);
    println!("p(site1=1 at tau=1) = {:.5}", one.probability);
    // conditioned fidelity at 1.05
    let cond = prop.propagate(&one.post_state, 0.05).unwrap();
    println!("F_cond(1.05) = {:.5}, product = {:.5}",
        fidelity_basis(&cond, BasisMask::from_sites(&[1,2])),
        one.probability * fidelity_basis(&cond, BasisMask::from_sites(&[1,2])));

    cfg.correction = Correction::MeasureSiteAt { site: 2, tau: 1.0 };
    let s = run_delayed_pair(&cfg, &grid).unwrap();
    let p = find_peak(&s, "f_target", 1.05, 0.15, None).unwrap();
    println!("rabi site2 UNCOND: peak {:.5} at {:.4} (caption 0.7203)", p.value, p.tau_star);

    cfg.method = InjectionMethod::SwapRegister { reflection: 0.0 };
    cfg.correction = Correction::MeasureRegisterImmediately;
    let s = run_delayed_pair(&cfg, &grid).unwrap();
    let p = find_peak(&s, "f_target", 1.05, 0.1, None).unwrap();
    println!("swap reg UNCOND: peak {:.5} at {:.4} (caption 0.9870)", p.value, p.tau_star);

    cfg.delay = 0.075;
    let s = run_delayed_pair(&cfg, &grid).unwrap();
    let p = find_peak(&s, "f_target_twin", 0.575, 0.1, None).unwrap();
    println!("swap 0.15tM UNCOND: twin peak {:.5} at {:.4} (caption 0.9313)", p.value, p.tau_star);

    cfg.delay = 0.5;
    let s = run_delayed_pair(&cfg, &grid).unwrap();
    let max_twin = s.column("f_target_twin").unwrap().iter().cloned().fold(0.0f64, f64::max);
    println!("swap delay tM UNCOND: max twin {:.5} (want < 0.02)", max_twin);
}
