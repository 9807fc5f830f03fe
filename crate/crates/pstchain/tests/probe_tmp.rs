use pstchain::*;
use pstchain::basis::BasisMask;
use pstchain::dynamics::{ChainPropagator, SparseState, TimeGrid, TimeSeries};
use pstchain::injection::{Correction, InjectionMethod, ProtocolConfig};
use pstchain::metrics::{eof_sites, fidelity_basis, find_peak};

fn peak_of(spec: &ChainSpec, mask_str: &str, sectors: &[usize], center: f64) -> f64 {
    let (mask, n) = BasisMask::parse_ket(mask_str).unwrap();
    let twin = mirror_mask(mask, n);
    let prop = ChainPropagator::prepare(spec, sectors, None).unwrap();
    let state = SparseState::basis_state(n, mask);
    let eval = |t: f64| fidelity_basis(&prop.propagate(&state, t).unwrap(), twin);
    let tau: Vec<f64> = (0..=300).map(|i| center - 0.15 + 0.3 * i as f64 / 300.0).collect();
    let vals: Vec<f64> = tau.iter().map(|&t| eval(t)).collect();
    let series = TimeSeries { tau, columns: vec![("f".into(), vals)] };
    find_peak(&series, "f", center, 0.15, Some(&eval)).unwrap().value
}

fn eof_peak(spec: &ChainSpec, state: &SparseState, a: usize, b: usize, center: f64) -> f64 {
    let prop = ChainPropagator::prepare(spec, &[0, 1, 2], None).unwrap();
    let eval = |t: f64| eof_sites(&prop.propagate(state, t).unwrap(), a, b).unwrap();
    let tau: Vec<f64> = (0..=300).map(|i| center - 0.15 + 0.3 * i as f64 / 300.0).collect();
    let vals: Vec<f64> = tau.iter().map(|&t| eval(t)).collect();
    let series = TimeSeries { tau, columns: vec![("f".into(), vals)] };
    find_peak(&series, "f", center, 0.15, Some(&eval)).unwrap().value
}

fn type2_state(n: usize) -> SparseState {
    let h = num_complex::Complex64::new(0.5, 0.0);
    SparseState::superposition(n, &[
        (BasisMask::VACUUM, h),
        (BasisMask::from_sites(&[1]), h),
        (BasisMask::from_sites(&[n]), h),
        (BasisMask::from_sites(&[1, n]), h),
    ]).unwrap()
}

#[test]
fn probe_caption_values() {
    // Fig 3(a,b): N=6 |110000>, gamma
    for (g, want) in [(0.05, 0.9988), (0.1, 0.9954)] {
        let spec = ChainSpec::new(6).with(Perturbation::ExcitationInteraction { gamma: g });
        let got = peak_of(&spec, "110000", &[2], 0.5);
        println!("gamma={g}: twin peak {got:.5} (caption {want})");
    }
    // fig:110000nnni: Delta=0.01 N=6 -> 0.9966 (first peak of twin)
    let spec = ChainSpec::new(6).with(Perturbation::NnnAveraged { delta: 0.01 });
    println!("delta=0.01 N=6: twin peak {:.5} (caption 0.9966)", peak_of(&spec, "110000", &[2], 0.5));
    // Fig 1: N=8 dipole, first peak ~0.52
    let spec = ChainSpec::new(8).with(Perturbation::NnnDipole);
    println!("dipole N=8: twin peak {:.5} (caption ~0.52)", peak_of(&spec, "11000000", &[2], 0.5));
    // Fig 1: averaged Delta=0.12
    let spec = ChainSpec::new(8).with(Perturbation::NnnAveraged { delta: 0.12 });
    println!("avg d=0.12 N=8: twin peak {:.5}", peak_of(&spec, "11000000", &[2], 0.5));

    // type (ii) N=8 gamma=0.05 -> 0.9996 ; Delta=0.01 -> 0.9976
    let st = type2_state(8);
    let spec = ChainSpec::new(8).with(Perturbation::ExcitationInteraction { gamma: 0.05 });
    println!("type2 gamma=0.05 N=8 EoF(1,8) peak {:.5} (caption 0.9996)", eof_peak(&spec, &st, 1, 8, 0.5));
    let spec = ChainSpec::new(8).with(Perturbation::NnnAveraged { delta: 0.01 });
    println!("type2 delta=0.01 N=8 EoF(1,8) peak {:.5} (caption 0.9976)", eof_peak(&spec, &st, 1, 8, 0.5));

    // Bell type (i): N=8 Delta=0.01, EoF(7,8) peak near 0.5 -> 0.9986
    let w = num_complex::Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let bell = SparseState::superposition(8, &[
        (BasisMask::from_sites(&[1]), w),
        (BasisMask::from_sites(&[2]), w),
    ]).unwrap();
    let spec = ChainSpec::new(8).with(Perturbation::NnnAveraged { delta: 0.01 });
    println!("bell delta=0.01 N=8 EoF(7,8) peak {:.5} (caption 0.9986)", eof_peak(&spec, &bell, 7, 8, 0.5));

    // noise single realizations: eta=0.1 N=6 |110000>
    let spec = ChainSpec::new(6).with(Perturbation::RandomNoise { eta: 0.1 });
    let seq = SeedSequence::new(0);
    let mut vals = vec![];
    for k in 0..10u64 {
        let mut rng = seq.stream(k);
        let prop = ChainPropagator::prepare(&spec, &[2], Some(&mut rng)).unwrap();
        let (mask, _) = BasisMask::parse_ket("110000").unwrap();
        let twin = mirror_mask(mask, 6);
        let state = SparseState::basis_state(6, mask);
        let eval = |t: f64| fidelity_basis(&prop.propagate(&state, t).unwrap(), twin);
        let tau: Vec<f64> = (0..=200).map(|i| 0.4 + 0.2 * i as f64 / 200.0).collect();
        let v: Vec<f64> = tau.iter().map(|&t| eval(t)).collect();
        let series = TimeSeries { tau, columns: vec![("f".into(), v)] };
        vals.push(find_peak(&series, "f", 0.5, 0.1, Some(&eval)).unwrap().value);
    }
    println!("noise eta=0.1 first-peak samples: {:?}", vals.iter().map(|v| (v*1e4).round()/1e4).collect::<Vec<_>>());
}

#[test]
fn probe_injection_values() {
    let grid = TimeGrid::from_span(3.0, 1000).unwrap();
    // Fig 12(a): Rabi, delay 0.1 t_M = 0.05, measure site 1 at tau=1 -> 0.7807
    let mut cfg = ProtocolConfig::new(ChainSpec::new(6), 1, 2);
    cfg.delay = 0.05;
    cfg.method = InjectionMethod::RabiPulse { theta: std::f64::consts::PI, phi: 0.0 };
    cfg.correction = Correction::MeasureSiteAt { site: 1, tau: 1.0 };
    let s = injection::run_delayed_pair(&cfg, &grid).unwrap();
    let p = find_peak(&s, "f_target", 1.05, 0.1, None).unwrap();
    println!("rabi site1: peak {:.5} at {:.4} (caption 0.7807)", p.value, p.tau_star);
    let p2 = find_peak(&s, "f_target", 2.05, 0.1, None).unwrap();
    println!("rabi site1: second peak {:.5} at {:.4}", p2.value, p2.tau_star);

    cfg.correction = Correction::MeasureSiteAt { site: 2, tau: 1.0 };
    let s = injection::run_delayed_pair(&cfg, &grid).unwrap();
    let p = find_peak(&s, "f_target", 1.05, 0.1, None).unwrap();
    println!("rabi site2: peak {:.5} at {:.4} (caption 0.7203)", p.value, p.tau_star);

    // Fig 12(b): SWAP + register measurement -> 0.9870
    cfg.method = InjectionMethod::SwapRegister { reflection: 0.0 };
    cfg.correction = Correction::MeasureRegisterImmediately;
    let s = injection::run_delayed_pair(&cfg, &grid).unwrap();
    let p = find_peak(&s, "f_target", 1.05, 0.1, None).unwrap();
    println!("swap reg: peak {:.5} at {:.4} (caption 0.9870)", p.value, p.tau_star);

    // Fig 13(a): delay 0.15 t_M = 0.075, twin |000011| peak 0.9313
    cfg.delay = 0.075;
    let s = injection::run_delayed_pair(&cfg, &grid).unwrap();
    let p = find_peak(&s, "f_target_twin", 0.575, 0.1, None).unwrap();
    println!("swap delay 0.15tM: twin peak {:.5} at {:.4} (caption 0.9313)", p.value, p.tau_star);
    let p = find_peak(&s, "f_target_twin", 1.575, 0.1, None).unwrap();
    println!("swap delay 0.15tM: twin peak2 {:.5} at {:.4}", p.value, p.tau_star);

    // delay 1.0 t_S: twin revives with unit fidelity at 1.5
    cfg.delay = 1.0;
    let s = injection::run_delayed_pair(&cfg, &grid).unwrap();
    let p = find_peak(&s, "f_target_twin", 1.5, 0.1, None).unwrap();
    println!("swap delay 1tS: twin peak {:.8} at {:.4} (want 1-1e-6)", p.value, p.tau_star);

    // delay t_M: twin occurrence < 0.02 over the whole series
    cfg.delay = 0.5;
    let s = injection::run_delayed_pair(&cfg, &grid).unwrap();
    let max_twin = s.column("f_target_twin").unwrap().iter().cloned().fold(0.0f64, f64::max);
    println!("swap delay tM: max twin {:.5} (want < 0.02)", max_twin);

    // delay 3 t_M: |010001> peak at 2.5 >= 0.999
    cfg.delay = 1.5;
    let s = injection::run_delayed_pair(&cfg, &grid).unwrap();
    let p = find_peak(&s, "f_shifted", 2.5, 0.1, None).unwrap();
    println!("swap delay 3tM: shifted peak {:.6} at {:.4} (want >= 0.999)", p.value, p.tau_star);
}

#[test]
fn probe_type2_and_bell_delays() {
    // Fig 15: N=8, delay 0.1 tM = 0.05: EoF >= 0.90 both methods, gap < 0.02
    let spec = ChainSpec::new(8);
    let r = injection::run_type2_delay(&spec, 0.05, InjectionMethod::RabiPulse { theta: 0.0, phi: 0.0 }).unwrap();
    let s = injection::run_type2_delay(&spec, 0.05, InjectionMethod::SwapRegister { reflection: 0.0 }).unwrap();
    println!("type2 delay 0.1tM: rabi {:.5}, swap {:.5}, gap {:.5}", r.value, s.value, (r.value - s.value).abs());

    // Fig 16: N=6 bell, delay <= 0.05 tM: EoF >= 0.99 (swap); at 0.1 tM swap > rabi
    let spec = ChainSpec::new(6);
    for d in [0.0125, 0.025] {
        let s = injection::run_bell_delay(&spec, d, InjectionMethod::SwapRegister { reflection: 0.0 }).unwrap();
        println!("bell swap delay {d}: EoF {:.5} (want >= 0.99)", s.value);
    }
    let s = injection::run_bell_delay(&spec, 0.05, InjectionMethod::SwapRegister { reflection: 0.0 }).unwrap();
    let r = injection::run_bell_delay(&spec, 0.05, InjectionMethod::RabiPulse { theta: 0.0, phi: 0.0 }).unwrap();
    println!("bell delay 0.1tM: swap {:.5} vs rabi {:.5} (want swap > rabi)", s.value, r.value);
}
