//! Run configuration: key=value text with optional `[section]` headers and
//! `#` comments. Keys are globally unique, so headers organize but do not
//! namespace. Every key is validated before any computation and unknown keys
//! are errors. `RunConfig::to_text` emits a canonical form that parses back
//! to an identical configuration, which is what run metadata files contain.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::basis::BasisMask;
use crate::chain::{calibrate_tunnelling, ChainSpec, EnergyScaleRef, Perturbation};
use crate::dynamics::SparseState;
use crate::error::{Error, Result};
use crate::experiments::{ScanFamily, ScanPerturbation};
use crate::injection::{Correction, InjectionMethod, Payload, ProtocolConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Evolve,
    Inject,
    Scan,
    Fit,
    Selftest,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Evolve => "evolve",
            Mode::Inject => "inject",
            Mode::Scan => "scan",
            Mode::Fit => "fit",
            Mode::Selftest => "selftest",
        }
    }

    fn parse(s: &str) -> Option<Mode> {
        match s {
            "evolve" => Some(Mode::Evolve),
            "inject" => Some(Mode::Inject),
            "scan" => Some(Mode::Scan),
            "fit" => Some(Mode::Fit),
            "selftest" => Some(Mode::Selftest),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NnnModel {
    None,
    Averaged,
    Dipole,
    Tunnelling,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StateDescriptor {
    Ket(String),
    Bell12,
    PlusEnds,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodKind {
    Rabi,
    Swap,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CorrectionKind {
    None,
    MeasureSite,
    MeasureRegister,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanKind {
    GammaEpsilon,
    ChainLength,
}

/// Fully validated run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    // chain
    pub n_sites: Option<usize>,
    pub j_max: f64,
    pub epsilon_scale_ref: Option<EnergyScaleRef>,
    // perturbations
    pub eta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub site_d: Option<Vec<f64>>,
    pub nnn: NnnModel,
    pub delta: f64,
    pub tunnel_u: Option<f64>,
    pub tunnel_kappa: Option<f64>,
    pub tunnel_prefactor: Option<f64>,
    // state
    pub state: Option<StateDescriptor>,
    // grid
    pub t_max: f64,
    pub steps_per_period: usize,
    // protocol
    pub method: MethodKind,
    pub reflection: f64,
    pub first_site: usize,
    pub second_site: usize,
    pub delay: f64,
    pub correction: CorrectionKind,
    pub measure_site: usize,
    pub measure_tau: f64,
    // experiment
    pub scan: ScanKind,
    pub family: ScanFamily,
    pub perturbation: ScanPerturbation,
    pub values: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
    pub gamma_values: Vec<f64>,
    pub epsilon_values: Vec<f64>,
    pub n_realizations: usize,
    pub seed: u64,
    // output
    pub csv: Option<String>,
    pub svg: Option<String>,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            mode: Mode::Evolve,
            n_sites: None,
            j_max: 1.0,
            epsilon_scale_ref: None,
            eta: 0.0,
            gamma: 0.0,
            epsilon: 0.0,
            site_d: None,
            nnn: NnnModel::None,
            delta: 0.01,
            tunnel_u: None,
            tunnel_kappa: None,
            tunnel_prefactor: None,
            state: None,
            t_max: 4.0,
            steps_per_period: 1000,
            method: MethodKind::Swap,
            reflection: 0.0,
            first_site: 1,
            second_site: 2,
            delay: 0.0,
            correction: CorrectionKind::None,
            measure_site: 1,
            measure_tau: 1.0,
            scan: ScanKind::ChainLength,
            family: ScanFamily::Unentangled110,
            perturbation: ScanPerturbation::NnnAveraged,
            values: vec![0.01, 0.05, 0.1],
            n_min: 4,
            n_max: 15,
            gamma_values: vec![0.0, 0.05, 0.1, 0.15, 0.2],
            epsilon_values: vec![0.0, 0.05, 0.1, 0.15, 0.2],
            n_realizations: 200,
            seed: 0,
            csv: None,
            svg: None,
        }
    }
}

const KNOWN_SECTIONS: &[&str] = &[
    "run",
    "chain",
    "perturbations",
    "state",
    "grid",
    "protocol",
    "experiment",
    "output",
];

fn parse_f64(key: &str, line: usize, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::config(format!("line {line}: {key} expects a number, got \"{v}\"")))
}

fn parse_usize(key: &str, line: usize, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| Error::config(format!("line {line}: {key} expects a count, got \"{v}\"")))
}

fn parse_list(key: &str, line: usize, v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .map(|item| {
            item.trim().parse::<f64>().map_err(|_| {
                Error::config(format!("line {line}: {key} expects numbers, got \"{item}\""))
            })
        })
        .collect()
}

/// Parse a configuration. `cli_mode` is the CLI subcommand; a `mode` key in
/// the text must agree with it when both are present.
pub fn parse_config(text: &str, cli_mode: Option<Mode>) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut file_mode: Option<Mode> = None;
    let mut seen: Vec<String> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(section) = line.strip_prefix('[') {
            let section = section
                .strip_suffix(']')
                .ok_or_else(|| Error::config(format!("line {line_no}: malformed section header")))?
                .trim();
            if !KNOWN_SECTIONS.contains(&section) {
                return Err(Error::config(format!(
                    "line {line_no}: unknown section [{section}]"
                )));
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::config(format!("line {line_no}: expected key = value, got \"{line}\""))
        })?;
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(Error::config(format!("line {line_no}: duplicate key {key}")));
        }
        seen.push(key.to_string());

        match key {
            "mode" => {
                file_mode = Some(Mode::parse(value).ok_or_else(|| {
                    Error::config(format!("line {line_no}: unknown mode \"{value}\""))
                })?);
            }
            "n" => cfg.n_sites = Some(parse_usize(key, line_no, value)?),
            "j_max" => cfg.j_max = parse_f64(key, line_no, value)?,
            "epsilon_scale_ref" => {
                cfg.epsilon_scale_ref = Some(match value.to_ascii_lowercase().as_str() {
                    "j0" => EnergyScaleRef::J0,
                    "jmax" => EnergyScaleRef::JMax,
                    _ => {
                        return Err(Error::config(format!(
                            "line {line_no}: epsilon_scale_ref must be J0 or Jmax"
                        )))
                    }
                });
            }
            "eta" => cfg.eta = parse_f64(key, line_no, value)?,
            "gamma" => cfg.gamma = parse_f64(key, line_no, value)?,
            "epsilon" => cfg.epsilon = parse_f64(key, line_no, value)?,
            "site_d" => cfg.site_d = Some(parse_list(key, line_no, value)?),
            "nnn" => {
                cfg.nnn = match value {
                    "none" => NnnModel::None,
                    "averaged" => NnnModel::Averaged,
                    "dipole" => NnnModel::Dipole,
                    "tunnelling" => NnnModel::Tunnelling,
                    _ => {
                        return Err(Error::config(format!(
                            "line {line_no}: nnn must be none|averaged|dipole|tunnelling"
                        )))
                    }
                };
            }
            "delta" => cfg.delta = parse_f64(key, line_no, value)?,
            "tunnel_u" => cfg.tunnel_u = Some(parse_f64(key, line_no, value)?),
            "tunnel_kappa" => cfg.tunnel_kappa = Some(parse_f64(key, line_no, value)?),
            "tunnel_prefactor" => cfg.tunnel_prefactor = Some(parse_f64(key, line_no, value)?),
            "state" => {
                cfg.state = Some(match value {
                    "bell12" => StateDescriptor::Bell12,
                    "plus-ends" => StateDescriptor::PlusEnds,
                    ket => {
                        BasisMask::parse_ket(ket).map_err(|e| {
                            Error::config(format!("line {line_no}: bad state: {e}"))
                        })?;
                        StateDescriptor::Ket(ket.to_string())
                    }
                });
            }
            "t_max" => cfg.t_max = parse_f64(key, line_no, value)?,
            "steps_per_period" => cfg.steps_per_period = parse_usize(key, line_no, value)?,
            "method" => {
                cfg.method = match value {
                    "rabi" => MethodKind::Rabi,
                    "swap" => MethodKind::Swap,
                    _ => {
                        return Err(Error::config(format!(
                            "line {line_no}: method must be rabi or swap"
                        )))
                    }
                };
            }
            "reflection" => cfg.reflection = parse_f64(key, line_no, value)?,
            "first_site" => cfg.first_site = parse_usize(key, line_no, value)?,
            "second_site" => cfg.second_site = parse_usize(key, line_no, value)?,
            "delay" => cfg.delay = parse_f64(key, line_no, value)?,
            "correction" => {
                cfg.correction = match value {
                    "none" => CorrectionKind::None,
                    "measure_site" => CorrectionKind::MeasureSite,
                    "measure_register" => CorrectionKind::MeasureRegister,
                    _ => {
                        return Err(Error::config(format!(
                            "line {line_no}: correction must be none|measure_site|measure_register"
                        )))
                    }
                };
            }
            "measure_site" => cfg.measure_site = parse_usize(key, line_no, value)?,
            "measure_tau" => cfg.measure_tau = parse_f64(key, line_no, value)?,
            "scan" => {
                cfg.scan = match value {
                    "gamma_epsilon" => ScanKind::GammaEpsilon,
                    "chain_length" => ScanKind::ChainLength,
                    _ => {
                        return Err(Error::config(format!(
                            "line {line_no}: scan must be gamma_epsilon or chain_length"
                        )))
                    }
                };
            }
            "family" => {
                cfg.family = match value {
                    "unentangled110" => ScanFamily::Unentangled110,
                    "bell_type1" => ScanFamily::BellType1,
                    "gate_type2" => ScanFamily::GateType2,
                    _ => {
                        return Err(Error::config(format!(
                            "line {line_no}: family must be unentangled110|bell_type1|gate_type2"
                        )))
                    }
                };
            }
            "perturbation" => {
                cfg.perturbation = match value {
                    "nnn_averaged" => ScanPerturbation::NnnAveraged,
                    "site_energies" => ScanPerturbation::SiteEnergies,
                    _ => {
                        return Err(Error::config(format!(
                            "line {line_no}: perturbation must be nnn_averaged or site_energies"
                        )))
                    }
                };
            }
            "values" => cfg.values = parse_list(key, line_no, value)?,
            "n_min" => cfg.n_min = parse_usize(key, line_no, value)?,
            "n_max" => cfg.n_max = parse_usize(key, line_no, value)?,
            "gamma_values" => cfg.gamma_values = parse_list(key, line_no, value)?,
            "epsilon_values" => cfg.epsilon_values = parse_list(key, line_no, value)?,
            "n_realizations" => cfg.n_realizations = parse_usize(key, line_no, value)?,
            "seed" => {
                cfg.seed = value.parse::<u64>().map_err(|_| {
                    Error::config(format!("line {line_no}: seed expects a u64, got \"{value}\""))
                })?;
            }
            "csv" => cfg.csv = Some(value.to_string()),
            "svg" => cfg.svg = Some(value.to_string()),
            _ => {
                return Err(Error::config(format!("line {line_no}: unknown key {key}")));
            }
        }
    }

    cfg.mode = match (file_mode, cli_mode) {
        (Some(f), Some(c)) if f != c => {
            return Err(Error::config(format!(
                "config says mode = {} but the {} subcommand was invoked",
                f.as_str(),
                c.as_str()
            )));
        }
        (Some(f), _) => f,
        (None, Some(c)) => c,
        (None, None) => return Err(Error::config("mode is required")),
    };

    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eta < 0.0 || self.gamma < 0.0 || self.epsilon < 0.0 || self.delta < 0.0 {
            return Err(Error::config("perturbation amplitudes must be >= 0"));
        }
        if self.epsilon > 0.0 && self.epsilon_scale_ref.is_none() {
            return Err(Error::config(
                "epsilon is set: epsilon_scale_ref = J0 or Jmax is required",
            ));
        }
        if self.method == MethodKind::Rabi && self.correction == CorrectionKind::MeasureRegister {
            return Err(Error::config(
                "correction = measure_register is impossible with method = rabi",
            ));
        }
        if !(0.0..=1.0).contains(&self.reflection) {
            return Err(Error::config("reflection must lie in [0, 1]"));
        }
        if self.delay < 0.0 {
            return Err(Error::config("delay must be >= 0"));
        }
        if let (Some(StateDescriptor::Ket(ket)), Some(n)) = (&self.state, self.n_sites) {
            if ket.len() != n {
                return Err(Error::config(format!(
                    "state has {} sites but n = {n}",
                    ket.len()
                )));
            }
        }
        match self.mode {
            Mode::Evolve => {
                if self.effective_n().is_none() {
                    return Err(Error::config("evolve needs n or a ket state"));
                }
                if self.state.is_none() {
                    return Err(Error::config("evolve needs a state"));
                }
            }
            Mode::Inject => {
                if self.effective_n().is_none() {
                    return Err(Error::config("inject needs n or a ket state"));
                }
            }
            Mode::Scan | Mode::Fit | Mode::Selftest => {}
        }
        Ok(())
    }

    /// Chain length from `n` or, failing that, from the ket state.
    pub fn effective_n(&self) -> Option<usize> {
        self.n_sites.or(match &self.state {
            Some(StateDescriptor::Ket(k)) => Some(k.len()),
            _ => None,
        })
    }

    /// Assemble the device spec from the perturbation keys.
    pub fn chain_spec(&self) -> Result<ChainSpec> {
        let n = self
            .effective_n()
            .ok_or_else(|| Error::config("chain length is required"))?;
        let mut spec = ChainSpec::new(n);
        spec.j_max = self.j_max;
        spec.epsilon_scale_ref = self.epsilon_scale_ref;
        if self.eta > 0.0 {
            spec = spec.with(Perturbation::RandomNoise { eta: self.eta });
        }
        if self.epsilon > 0.0 {
            spec = spec.with(Perturbation::SiteEnergies {
                epsilon: self.epsilon,
                d: self.site_d.clone(),
            });
        }
        if self.gamma > 0.0 {
            spec = spec.with(Perturbation::ExcitationInteraction { gamma: self.gamma });
        }
        match self.nnn {
            NnnModel::None => {}
            NnnModel::Averaged => {
                spec = spec.with(Perturbation::NnnAveraged { delta: self.delta });
            }
            NnnModel::Dipole => spec = spec.with(Perturbation::NnnDipole),
            NnnModel::Tunnelling => {
                let (u, kappa, prefactor) = match (
                    self.tunnel_u,
                    self.tunnel_kappa,
                    self.tunnel_prefactor,
                ) {
                    (Some(u), Some(k), Some(p)) => (u, k, p),
                    (None, None, None) => calibrate_tunnelling(self.j_max, 1e-4)?,
                    _ => {
                        return Err(Error::config(
                            "tunnelling needs all of tunnel_u, tunnel_kappa, tunnel_prefactor \
                             or none of them (calibrated defaults)",
                        ))
                    }
                };
                spec = spec.with(Perturbation::NnnTunnelling { u, kappa, prefactor });
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Initial state and the sectors it populates.
    pub fn initial_state(&self) -> Result<(SparseState, Vec<usize>)> {
        let n = self
            .effective_n()
            .ok_or_else(|| Error::config("chain length is required"))?;
        let descriptor = self
            .state
            .as_ref()
            .ok_or_else(|| Error::config("state is required"))?;
        let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let h = Complex64::new(0.5, 0.0);
        match descriptor {
            StateDescriptor::Ket(ket) => {
                let (mask, ket_n) = BasisMask::parse_ket(ket)?;
                if ket_n != n {
                    return Err(Error::config(format!(
                        "state has {ket_n} sites but n = {n}"
                    )));
                }
                let sectors = vec![mask.excitations()];
                Ok((SparseState::basis_state(n, mask), sectors))
            }
            StateDescriptor::Bell12 => Ok((
                SparseState::superposition(
                    n,
                    &[
                        (BasisMask::from_sites(&[1]), w),
                        (BasisMask::from_sites(&[2]), w),
                    ],
                )?,
                vec![1],
            )),
            StateDescriptor::PlusEnds => Ok((
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

    /// Protocol description for the inject mode.
    pub fn protocol(&self) -> Result<ProtocolConfig> {
        let chain = self.chain_spec()?;
        let method = match self.method {
            MethodKind::Rabi => InjectionMethod::RabiPulse {
                theta: std::f64::consts::PI,
                phi: 0.0,
            },
            MethodKind::Swap => InjectionMethod::SwapRegister {
                reflection: self.reflection,
            },
        };
        let correction = match self.correction {
            CorrectionKind::None => Correction::None,
            CorrectionKind::MeasureSite => Correction::MeasureSiteAt {
                site: self.measure_site,
                tau: self.measure_tau,
            },
            CorrectionKind::MeasureRegister => Correction::MeasureRegisterImmediately,
        };
        let mut protocol = ProtocolConfig::new(chain, self.first_site, self.second_site);
        protocol.delay = self.delay;
        protocol.method = method;
        protocol.correction = correction;
        protocol.payload = Payload::full_excitation();
        protocol.validate()?;
        Ok(protocol)
    }

    /// Canonical text form; `parse_config(to_text(c), None) == c`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "mode = {}", self.mode.as_str());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s);
        let _ = writeln!(s, "[chain]");
        if let Some(n) = self.n_sites {
            let _ = writeln!(s, "n = {n}");
        }
        let _ = writeln!(s, "j_max = {}", self.j_max);
        if let Some(r) = self.epsilon_scale_ref {
            let _ = writeln!(
                s,
                "epsilon_scale_ref = {}",
                match r {
                    EnergyScaleRef::J0 => "J0",
                    EnergyScaleRef::JMax => "Jmax",
                }
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "[perturbations]");
        let _ = writeln!(s, "eta = {}", self.eta);
        let _ = writeln!(s, "gamma = {}", self.gamma);
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        if let Some(d) = &self.site_d {
            let _ = writeln!(s, "site_d = {}", join_floats(d));
        }
        let _ = writeln!(
            s,
            "nnn = {}",
            match self.nnn {
                NnnModel::None => "none",
                NnnModel::Averaged => "averaged",
                NnnModel::Dipole => "dipole",
                NnnModel::Tunnelling => "tunnelling",
            }
        );
        let _ = writeln!(s, "delta = {}", self.delta);
        if let Some(u) = self.tunnel_u {
            let _ = writeln!(s, "tunnel_u = {u}");
        }
        if let Some(k) = self.tunnel_kappa {
            let _ = writeln!(s, "tunnel_kappa = {k}");
        }
        if let Some(p) = self.tunnel_prefactor {
            let _ = writeln!(s, "tunnel_prefactor = {p}");
        }
        if let Some(state) = &self.state {
            let _ = writeln!(s);
            let _ = writeln!(s, "[state]");
            let _ = writeln!(
                s,
                "state = {}",
                match state {
                    StateDescriptor::Ket(k) => k.as_str(),
                    StateDescriptor::Bell12 => "bell12",
                    StateDescriptor::PlusEnds => "plus-ends",
                }
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "[grid]");
        let _ = writeln!(s, "t_max = {}", self.t_max);
        let _ = writeln!(s, "steps_per_period = {}", self.steps_per_period);
        let _ = writeln!(s);
        let _ = writeln!(s, "[protocol]");
        let _ = writeln!(
            s,
            "method = {}",
            match self.method {
                MethodKind::Rabi => "rabi",
                MethodKind::Swap => "swap",
            }
        );
        let _ = writeln!(s, "reflection = {}", self.reflection);
        let _ = writeln!(s, "first_site = {}", self.first_site);
        let _ = writeln!(s, "second_site = {}", self.second_site);
        let _ = writeln!(s, "delay = {}", self.delay);
        let _ = writeln!(
            s,
            "correction = {}",
            match self.correction {
                CorrectionKind::None => "none",
                CorrectionKind::MeasureSite => "measure_site",
                CorrectionKind::MeasureRegister => "measure_register",
            }
        );
        let _ = writeln!(s, "measure_site = {}", self.measure_site);
        let _ = writeln!(s, "measure_tau = {}", self.measure_tau);
        let _ = writeln!(s);
        let _ = writeln!(s, "[experiment]");
        let _ = writeln!(
            s,
            "scan = {}",
            match self.scan {
                ScanKind::GammaEpsilon => "gamma_epsilon",
                ScanKind::ChainLength => "chain_length",
            }
        );
        let _ = writeln!(
            s,
            "family = {}",
            match self.family {
                ScanFamily::Unentangled110 => "unentangled110",
                ScanFamily::BellType1 => "bell_type1",
                ScanFamily::GateType2 => "gate_type2",
            }
        );
        let _ = writeln!(
            s,
            "perturbation = {}",
            match self.perturbation {
                ScanPerturbation::NnnAveraged => "nnn_averaged",
                ScanPerturbation::SiteEnergies => "site_energies",
            }
        );
        let _ = writeln!(s, "values = {}", join_floats(&self.values));
        let _ = writeln!(s, "n_min = {}", self.n_min);
        let _ = writeln!(s, "n_max = {}", self.n_max);
        let _ = writeln!(s, "gamma_values = {}", join_floats(&self.gamma_values));
        let _ = writeln!(s, "epsilon_values = {}", join_floats(&self.epsilon_values));
        let _ = writeln!(s, "n_realizations = {}", self.n_realizations);
        if self.csv.is_some() || self.svg.is_some() {
            let _ = writeln!(s);
            let _ = writeln!(s, "[output]");
            if let Some(csv) = &self.csv {
                let _ = writeln!(s, "csv = {csv}");
            }
            if let Some(svg) = &self.svg {
                let _ = writeln!(s, "svg = {svg}");
            }
        }
        s
    }
}

fn join_floats(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_applies_defaults() {
        let cfg = parse_config("n=6\nstate=110000", Some(Mode::Evolve)).unwrap();
        assert_eq!(cfg.n_realizations, 200);
        assert_eq!(cfg.steps_per_period, 1000);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.effective_n(), Some(6));
    }

    #[test]
    fn forbidden_method_correction_pair() {
        let err = parse_config(
            "n=6\nstate=110000\nmethod=rabi\ncorrection=measure_register",
            Some(Mode::Inject),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn epsilon_without_scale_ref_is_rejected() {
        let err = parse_config("n=6\nstate=110000\nepsilon=0.1", Some(Mode::Evolve)).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("epsilon_scale_ref"), "{msg}");
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let err = parse_config("n=6\nstate=110000\nbogus=1", Some(Mode::Evolve)).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line 3") && msg.contains("bogus"), "{msg}");
    }

    #[test]
    fn sections_and_comments_are_accepted() {
        let text = "# comment\n[chain]\nn = 8\n[state]\nstate = plus-ends  # trailing\n";
        let cfg = parse_config(text, Some(Mode::Evolve)).unwrap();
        assert_eq!(cfg.state, Some(StateDescriptor::PlusEnds));
        assert!(parse_config("[nonsense]\nn=6", Some(Mode::Evolve)).is_err());
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let err = parse_config("mode=scan\nn=6\nstate=110000", Some(Mode::Evolve)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn round_trip_is_identity() {
        let text = "mode=inject\nn=6\nstate=110000\nmethod=swap\ndelay=0.075\n\
                    correction=measure_register\neta=0\nseed=31\nvalues=0.01,0.2\ncsv=out.csv";
        let cfg = parse_config(text, None).unwrap();
        let emitted = cfg.to_text();
        let back = parse_config(&emitted, None).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn chain_spec_assembles_perturbations() {
        let cfg = parse_config(
            "n=6\nstate=110000\ngamma=0.05\nnnn=averaged\ndelta=0.01\neta=0.1",
            Some(Mode::Evolve),
        )
        .unwrap();
        let spec = cfg.chain_spec().unwrap();
        assert_eq!(spec.perturbations.len(), 3);
        assert_eq!(spec.gamma(), 0.05);
        assert_eq!(spec.eta(), 0.1);
    }
}
