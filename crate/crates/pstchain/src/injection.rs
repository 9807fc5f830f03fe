//! Excitation injection and measurement-based correction protocols.
//!
//! Pulses and swaps are instantaneous unitaries; the chain only evolves
//! between injection events. Delays are measured from the first injection
//! and all series timestamps stay on the global clock.

use num_complex::Complex64;

use crate::basis::{mirror_mask, BasisMask};
use crate::chain::ChainSpec;
use crate::dynamics::{ChainPropagator, SparseState, TimeGrid, TimeSeries, AMP_PRUNE};
use crate::error::{Error, Result};
use crate::metrics::{eof_sites, fidelity_basis, find_peak, PeakReport};

/// How the second (delayed) excitation enters the chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InjectionMethod {
    /// Instantaneous control pulse rotating one site by `theta` about an
    /// axis set by `phi`. A pi pulse flips the site.
    RabiPulse { theta: f64, phi: f64 },
    /// (Partial) exchange with a fresh ancilla register holding the payload.
    /// `reflection` is the amplitude left behind by an imperfect swap; 0 is
    /// a full swap.
    SwapRegister { reflection: f64 },
}

/// Measurement-based correction applied after the delayed injection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Correction {
    None,
    /// Measure a chain site at global time `tau` and keep the
    /// "excitation present" branch.
    MeasureSiteAt { site: usize, tau: f64 },
    /// Measure the injection register right after the swap and keep the
    /// "register empty" branch.
    MeasureRegisterImmediately,
}

/// Single-qubit payload `alpha |0> + beta |1>` injected at a site.
#[derive(Clone, Copy, Debug)]
pub struct Payload {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl Payload {
    pub fn full_excitation() -> Payload {
        Payload {
            alpha: Complex64::new(0.0, 0.0),
            beta: Complex64::new(1.0, 0.0),
        }
    }

    pub fn plus() -> Payload {
        let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Payload { alpha: w, beta: w }
    }

    pub fn validate(&self) -> Result<()> {
        let norm = self.alpha.norm_sqr() + self.beta.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::domain("payload must be normalized"));
        }
        Ok(())
    }

    fn is_full_excitation(&self) -> bool {
        self.alpha.norm() < 1e-12 && (self.beta.norm() - 1.0).abs() < 1e-12
    }
}

/// Delayed-pair protocol description.
#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub chain: ChainSpec,
    pub first_site: usize,
    pub second_site: usize,
    /// Delay of the second injection, in units of t_S.
    pub delay: f64,
    pub method: InjectionMethod,
    pub correction: Correction,
    pub payload: Payload,
    /// Keep only the protocol's named measurement branch (renormalized).
    /// When false the recorded series is the probability-weighted mixture of
    /// both branches.
    pub conditioned: bool,
}

impl ProtocolConfig {
    pub fn new(chain: ChainSpec, first_site: usize, second_site: usize) -> ProtocolConfig {
        ProtocolConfig {
            chain,
            first_site,
            second_site,
            delay: 0.0,
            method: InjectionMethod::SwapRegister { reflection: 0.0 },
            correction: Correction::None,
            payload: Payload::full_excitation(),
            conditioned: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.chain.validate()?;
        let n = self.chain.n_sites;
        for site in [self.first_site, self.second_site] {
            if site < 1 || site > n {
                return Err(Error::config(format!("site {site} outside 1..={n}")));
            }
        }
        if self.first_site == self.second_site {
            return Err(Error::config("injection sites must be distinct"));
        }
        if self.delay < 0.0 {
            return Err(Error::config("delay must be >= 0"));
        }
        self.payload.validate()?;
        match self.method {
            InjectionMethod::RabiPulse { theta, .. } => {
                if !(0.0..=std::f64::consts::PI).contains(&theta) {
                    return Err(Error::config("rabi theta must lie in [0, pi]"));
                }
            }
            InjectionMethod::SwapRegister { reflection } => {
                if !(0.0..=1.0).contains(&reflection) {
                    return Err(Error::config("reflection amplitude must lie in [0, 1]"));
                }
            }
        }
        match self.correction {
            Correction::MeasureRegisterImmediately => {
                if matches!(self.method, InjectionMethod::RabiPulse { .. }) {
                    return Err(Error::config(
                        "register measurement is impossible with rabi injection",
                    ));
                }
            }
            Correction::MeasureSiteAt { site, tau } => {
                if site < 1 || site > n {
                    return Err(Error::config(format!("measured site {site} outside 1..={n}")));
                }
                if tau < self.delay {
                    return Err(Error::config(
                        "site measurement must come after the delayed injection",
                    ));
                }
            }
            Correction::None => {}
        }
        Ok(())
    }
}

/// Result of a projective measurement branch.
#[derive(Clone, Debug)]
pub struct MeasurementOutcome {
    pub outcome: u8,
    pub probability: f64,
    /// Renormalized post-measurement state; empty (and flagged) when the
    /// branch has no weight.
    pub post_state: SparseState,
    pub empty: bool,
}

/// Apply the single-site rotation
/// `[[cos(t/2), -i e^{-i phi} sin(t/2)], [-i e^{i phi} sin(t/2), cos(t/2)]]`
/// to one chain site across all amplitude keys.
pub fn apply_rabi(state: &SparseState, site: usize, theta: f64, phi: f64) -> SparseState {
    let c = Complex64::new((theta / 2.0).cos(), 0.0);
    let s = (theta / 2.0).sin();
    let u01 = Complex64::new(0.0, -1.0) * Complex64::from_polar(s, -phi);
    let u10 = Complex64::new(0.0, -1.0) * Complex64::from_polar(s, phi);

    let mut out = std::collections::BTreeMap::new();
    for (mask, reg, amp) in state.iter() {
        let (lo, hi) = (mask.without_site(site).0, mask.with_site(site).0);
        let (to_lo, to_hi) = if mask.has_site(site) {
            (u01 * amp, c * amp)
        } else {
            (c * amp, u10 * amp)
        };
        if to_lo.norm() >= AMP_PRUNE {
            *out.entry((lo, reg)).or_insert(Complex64::new(0.0, 0.0)) += to_lo;
        }
        if to_hi.norm() >= AMP_PRUNE {
            *out.entry((hi, reg)).or_insert(Complex64::new(0.0, 0.0)) += to_hi;
        }
    }
    SparseState::from_map(state.n_sites, state.n_registers, out)
}

/// Partial swap between a chain site and a register qubit.
///
/// `|00> -> |00>`, `|11> -> |11>`, and the one-excitation pair exchanges
/// with transfer amplitude `sqrt(1 - r^2)`; the reflected amplitude `r`
/// keeps the excitation where it was, with the quadrature phase that makes
/// the operation unitary. `r = 0` is an exact full swap.
pub fn swap_inject(
    state: &SparseState,
    site: usize,
    register: usize,
    r: f64,
) -> Result<SparseState> {
    if register >= state.n_registers {
        return Err(Error::domain(format!(
            "register {register} not prepared (state has {})",
            state.n_registers
        )));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain("reflection amplitude must lie in [0, 1]"));
    }
    let keep = Complex64::new(0.0, r);
    let cross = Complex64::new((1.0 - r * r).sqrt(), 0.0);
    let reg_bit = 1u32 << register;

    let mut out = std::collections::BTreeMap::new();
    for (mask, reg, amp) in state.iter() {
        let site_occ = mask.has_site(site);
        let reg_occ = reg & reg_bit != 0;
        if site_occ == reg_occ {
            *out.entry((mask.0, reg)).or_insert(Complex64::new(0.0, 0.0)) += amp;
            continue;
        }
        let swapped = (mask.flip_site(site).0, reg ^ reg_bit);
        let stay = keep * amp;
        let moved = cross * amp;
        if stay.norm() >= AMP_PRUNE {
            *out.entry((mask.0, reg)).or_insert(Complex64::new(0.0, 0.0)) += stay;
        }
        if moved.norm() >= AMP_PRUNE {
            *out.entry(swapped).or_insert(Complex64::new(0.0, 0.0)) += moved;
        }
    }
    Ok(SparseState::from_map(state.n_sites, state.n_registers, out))
}

fn measure_bit(
    state: &SparseState,
    is_set: impl Fn(BasisMask, u32) -> bool,
) -> (MeasurementOutcome, MeasurementOutcome) {
    let mut one = std::collections::BTreeMap::new();
    let mut zero = std::collections::BTreeMap::new();
    let mut p1 = 0.0;
    for (mask, reg, amp) in state.iter() {
        if is_set(mask, reg) {
            p1 += amp.norm_sqr();
            one.insert((mask.0, reg), amp);
        } else {
            zero.insert((mask.0, reg), amp);
        }
    }
    let total = state.norm_sqr();
    let p1 = p1 / total;
    let p0 = 1.0 - p1;
    let branch = |amps: std::collections::BTreeMap<(u32, u32), Complex64>, outcome: u8, p: f64| {
        let mut post = SparseState::from_map(state.n_sites, state.n_registers, amps);
        let empty = post.is_empty();
        post.normalize();
        MeasurementOutcome {
            outcome,
            probability: p,
            post_state: post,
            empty,
        }
    };
    (branch(one, 1, p1), branch(zero, 0, p0))
}

/// Measure one chain site. Returns the (outcome 1, outcome 0) branches.
pub fn measure_site(state: &SparseState, site: usize) -> (MeasurementOutcome, MeasurementOutcome) {
    measure_bit(state, move |mask, _| mask.has_site(site))
}

/// Measure one register qubit. Returns the (outcome 1, outcome 0) branches.
pub fn measure_register(
    state: &SparseState,
    register: usize,
) -> Result<(MeasurementOutcome, MeasurementOutcome)> {
    if register >= state.n_registers {
        return Err(Error::domain(format!(
            "register {register} not prepared (state has {})",
            state.n_registers
        )));
    }
    let bit = 1u32 << register;
    Ok(measure_bit(state, move |_, reg| reg & bit != 0))
}

/// One coherent branch of a protocol run: a state frozen at the time of the
/// last event, with its ensemble weight.
#[derive(Clone)]
struct Branch {
    weight: f64,
    state: SparseState,
    t: f64,
}

impl Branch {
    fn at(&self, prop: &ChainPropagator, tau: f64) -> Result<SparseState> {
        prop.propagate(&self.state, tau - self.t)
    }
}

enum Event {
    Inject,
    MeasureSite { site: usize },
    MeasureRegister { register: usize },
}

/// Run the delayed second-injection protocol and record fidelities on the
/// grid: the intended pair state, its twin, the vacuum, the pair state built
/// from the mirrored first excitation, its twin, the error-branch weight,
/// and the ensemble norm.
pub fn run_delayed_pair(config: &ProtocolConfig, grid: &TimeGrid) -> Result<TimeSeries> {
    config.validate()?;
    if !config.payload.is_full_excitation() {
        return Err(Error::config(
            "delayed-pair protocol injects full excitations",
        ));
    }
    let n = config.chain.n_sites;
    let prop = ChainPropagator::prepare(&config.chain, &[0, 1, 2], None)?;

    let target = BasisMask::from_sites(&[config.first_site, config.second_site]);
    let shifted = BasisMask::from_sites(&[config.second_site])
        .with_site(n + 1 - config.first_site);
    let columns = [
        ("f_target", target),
        ("f_target_twin", mirror_mask(target, n)),
        ("f_vacuum", BasisMask::VACUUM),
        ("f_shifted", shifted),
        ("f_shifted_twin", mirror_mask(shifted, n)),
    ];

    let mut branches = vec![Branch {
        weight: 1.0,
        state: SparseState::basis_state(n, BasisMask::from_sites(&[config.first_site])),
        t: 0.0,
    }];

    // (time, order) keeps the injection ahead of an immediate measurement.
    let mut events: Vec<(f64, usize, Event)> = vec![(config.delay, 0, Event::Inject)];
    match config.correction {
        Correction::None => {}
        Correction::MeasureSiteAt { site, tau } => events.push((tau, 1, Event::MeasureSite { site })),
        Correction::MeasureRegisterImmediately => {
            events.push((config.delay, 1, Event::MeasureRegister { register: 0 }))
        }
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

    let mut event_iter = events.into_iter().peekable();
    let mut out_columns: Vec<(String, Vec<f64>)> = columns
        .iter()
        .map(|(name, _)| (name.to_string(), Vec::with_capacity(grid.tau.len())))
        .collect();
    out_columns.push(("err_weight".into(), Vec::with_capacity(grid.tau.len())));
    out_columns.push(("norm".into(), Vec::with_capacity(grid.tau.len())));

    for &tau in &grid.tau {
        while let Some((t_event, _, _)) = event_iter.peek() {
            if *t_event > tau + 1e-12 {
                break;
            }
            let (t_event, _, event) = event_iter.next().unwrap();
            branches = apply_event(&prop, branches, t_event, &event, config)?;
        }

        let mut row = vec![0.0f64; out_columns.len()];
        for branch in &branches {
            let state = branch.at(&prop, tau)?;
            for (i, (_, mask)) in columns.iter().enumerate() {
                row[i] += branch.weight * fidelity_basis(&state, *mask);
            }
            let err = match config.method {
                InjectionMethod::RabiPulse { .. } => fidelity_basis(&state, BasisMask::VACUUM),
                InjectionMethod::SwapRegister { .. } => {
                    if state.n_registers == 0 {
                        0.0
                    } else {
                        state
                            .iter()
                            .filter(|&(_, reg, _)| reg & 1 != 0)
                            .map(|(_, _, a)| a.norm_sqr())
                            .sum()
                    }
                }
            };
            row[columns.len()] += branch.weight * err;
            row[columns.len() + 1] += branch.weight * state.norm_sqr();
        }
        for (col, v) in out_columns.iter_mut().zip(row) {
            col.1.push(v);
        }
    }

    Ok(TimeSeries {
        tau: grid.tau.clone(),
        columns: out_columns,
    })
}

fn apply_event(
    prop: &ChainPropagator,
    branches: Vec<Branch>,
    t_event: f64,
    event: &Event,
    config: &ProtocolConfig,
) -> Result<Vec<Branch>> {
    let mut next = Vec::new();
    for branch in branches {
        let state = branch.at(prop, t_event)?;
        match event {
            Event::Inject => {
                let injected = match config.method {
                    InjectionMethod::RabiPulse { theta, phi } => {
                        apply_rabi(&state, config.second_site, theta, phi)
                    }
                    InjectionMethod::SwapRegister { reflection } => {
                        let mut with_reg = state;
                        let reg =
                            with_reg.add_register(config.payload.alpha, config.payload.beta);
                        swap_inject(&with_reg, config.second_site, reg, reflection)?
                    }
                };
                next.push(Branch {
                    weight: branch.weight,
                    state: injected,
                    t: t_event,
                });
            }
            Event::MeasureSite { site } => {
                let (one, zero) = measure_site(&state, *site);
                push_measured(&mut next, branch.weight, t_event, one, zero, 1, config.conditioned);
            }
            Event::MeasureRegister { register } => {
                let (one, zero) = measure_register(&state, *register)?;
                push_measured(&mut next, branch.weight, t_event, one, zero, 0, config.conditioned);
            }
        }
    }
    if next.is_empty() {
        return Err(Error::numeric(
            "conditioned measurement branch has zero probability",
        ));
    }
    Ok(next)
}

fn push_measured(
    next: &mut Vec<Branch>,
    weight: f64,
    t: f64,
    one: MeasurementOutcome,
    zero: MeasurementOutcome,
    keep_outcome: u8,
    conditioned: bool,
) {
    for outcome in [one, zero] {
        if outcome.empty {
            continue;
        }
        if conditioned {
            if outcome.outcome == keep_outcome {
                next.push(Branch {
                    weight,
                    state: outcome.post_state,
                    t,
                });
            }
        } else {
            next.push(Branch {
                weight: weight * outcome.probability,
                state: outcome.post_state,
                t,
            });
        }
    }
}

/// Inject a payload at one site by the configured method, conditioning the
/// swap variant on a successful (empty-register) measurement.
fn inject_payload(
    state: &SparseState,
    site: usize,
    method: InjectionMethod,
    payload: Payload,
    measure_swap_register: bool,
) -> Result<SparseState> {
    match method {
        InjectionMethod::RabiPulse { theta, phi } => Ok(apply_rabi(state, site, theta, phi)),
        InjectionMethod::SwapRegister { reflection } => {
            let mut with_reg = state.clone();
            let reg = with_reg.add_register(payload.alpha, payload.beta);
            let swapped = swap_inject(&with_reg, site, reg, reflection)?;
            if measure_swap_register {
                let (_, zero) = measure_register(&swapped, reg)?;
                if zero.empty {
                    return Err(Error::numeric("swap correction branch has zero probability"));
                }
                Ok(zero.post_state)
            } else {
                Ok(swapped)
            }
        }
    }
}

fn peak_after_events(
    prop: &ChainPropagator,
    state: &SparseState,
    t_origin: f64,
    site_a: usize,
    site_b: usize,
    window: (f64, f64),
) -> Result<PeakReport> {
    let (lo, hi) = window;
    let steps = ((hi - lo) * 1000.0).ceil() as usize;
    let tau: Vec<f64> = (0..=steps)
        .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
        .collect();
    let eval = |t: f64| -> f64 {
        let s = prop
            .propagate(state, t - t_origin)
            .expect("sectors prepared");
        eof_sites(&s, site_a, site_b).expect("valid reduced density")
    };
    let values: Vec<f64> = tau.iter().map(|&t| eval(t)).collect();
    let series = TimeSeries {
        tau,
        columns: vec![("eof".into(), values)],
    };
    find_peak(
        &series,
        "eof",
        0.5 * (lo + hi),
        0.5 * (hi - lo),
        Some(&eval),
    )
}

/// Delayed end-to-end entangling protocol: a `|+>` payload enters site 1 at
/// tau = 0 and site N at `delay`. Swap injections measure their register
/// immediately (success branch); the pulse variant has no correction.
/// Returns the first peak of EoF(1, N).
pub fn run_type2_delay(
    chain: &ChainSpec,
    delay: f64,
    method: InjectionMethod,
) -> Result<PeakReport> {
    chain.validate()?;
    if delay < 0.0 {
        return Err(Error::config("delay must be >= 0"));
    }
    let method = normalize_plus_method(method);
    let n = chain.n_sites;
    let prop = ChainPropagator::prepare(chain, &[0, 1, 2], None)?;

    let vacuum = SparseState::vacuum(n);
    let first = inject_payload(&vacuum, 1, method, Payload::plus(), true)?;
    let at_delay = prop.propagate(&first, delay)?;
    let both = inject_payload(&at_delay, n, method, Payload::plus(), true)?;

    peak_after_events(&prop, &both, delay, 1, n, (delay.max(0.3), 0.75 + delay))
}

/// For the `|+>`-payload protocols a pulse of theta = pi/2 plays the role of
/// the swap's half-excitation payload.
fn normalize_plus_method(method: InjectionMethod) -> InjectionMethod {
    match method {
        InjectionMethod::RabiPulse { phi, .. } => InjectionMethod::RabiPulse {
            theta: std::f64::consts::FRAC_PI_2,
            phi,
        },
        swap => swap,
    }
}

/// Delayed Bell-pair injection: two registers prepared in
/// `(|10> + |01>)/sqrt(2)` transfer into sites 1 and 2, the second transfer
/// lagging by `delay`. The swap variant measures both registers afterwards
/// (conditioned on success); the pulse variant models coherent transfers
/// with no measurement, so transfer errors stay in the system. Returns the
/// first peak of EoF(N-1, N).
pub fn run_bell_delay(
    chain: &ChainSpec,
    delay: f64,
    method: InjectionMethod,
) -> Result<PeakReport> {
    chain.validate()?;
    if delay < 0.0 {
        return Err(Error::config("delay must be >= 0"));
    }
    let n = chain.n_sites;
    let prop = ChainPropagator::prepare(chain, &[0, 1, 2], None)?;

    let mut state = SparseState::vacuum(n);
    let (reg_a, reg_b) = state.add_bell_registers();
    let first = swap_inject(&state, 1, reg_a, 0.0)?;
    let at_delay = prop.propagate(&first, delay)?;
    let mut both = swap_inject(&at_delay, 2, reg_b, 0.0)?;

    if matches!(method, InjectionMethod::SwapRegister { .. }) {
        for reg in [reg_a, reg_b] {
            let (_, zero) = measure_register(&both, reg)?;
            if zero.empty {
                return Err(Error::numeric("swap correction branch has zero probability"));
            }
            both = zero.post_state;
        }
    }

    peak_after_events(
        &prop,
        &both,
        delay,
        n - 1,
        n,
        (delay.max(0.3), 0.75 + delay),
    )
}
