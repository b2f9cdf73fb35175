//! Scenario file parsing: a flat key-value format with `[section]` headers
//! and `#` comments. Every key is checked against the known set; unknown
//! keys are rejected by name so a typo cannot silently fall back to a
//! default.

use phyauth_core::channel::SystemConfig;
use phyauth_core::powerctl::Strategy;
use std::fmt;

#[derive(Debug)]
pub struct ScenarioError(pub String);

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ScenarioError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError(msg.into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub strategies: Vec<Strategy>,
    pub phi_grid: Vec<f64>,
    pub p_tx_dbm: Vec<f64>,
    pub trials: u32,
    pub realizations: u32,
    pub analytic_only: bool,
    pub ml_attack: bool,
    pub mc_key_space: u64,
    /// RZF regularization; `None` selects K σ_n² / P_Tx automatically.
    pub rzf_beta: Option<f64>,
    pub seed: u64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            strategies: vec![
                Strategy::FixedPsi(0.02),
                Strategy::FixedOmega(100.0),
                Strategy::Conventional(0.015),
            ],
            phi_grid: (1..10).map(|i| i as f64 / 10.0).collect(),
            p_tx_dbm: (-2..=10).map(|i| i as f64 * 5.0).collect(),
            trials: 1000,
            realizations: 3,
            analytic_only: false,
            ml_attack: false,
            mc_key_space: 256,
            rzf_beta: None,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorsSection {
    pub psi: Vec<f64>,
    pub omega: Vec<f64>,
}

impl Default for FactorsSection {
    fn default() -> Self {
        Self {
            psi: vec![0.002, 0.005, 0.02],
            omega: (0..=10).map(|i| i as f64 * 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub cfg: SystemConfig,
    pub sweep: SweepSection,
    pub factors: FactorsSection,
}

impl Scenario {
    /// Parse a scenario file, starting from the built-in defaults and
    /// validating the resulting configuration.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut scenario = Scenario::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let lineno = lineno + 1;
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ScenarioError(format!("line {lineno}: malformed section header")))?;
                if !["system", "sweep", "factors"].contains(&name) {
                    return err(format!("line {lineno}: unknown section [{name}]"));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ScenarioError(format!("line {lineno}: expected key = value")))?;
            let key = key.trim();
            let value = value.trim();
            match section.as_str() {
                "system" => scenario.apply_system(key, value, lineno)?,
                "sweep" => scenario.apply_sweep(key, value, lineno)?,
                "factors" => scenario.apply_factors(key, value, lineno)?,
                _ => return err(format!("line {lineno}: key \"{key}\" outside any section")),
            }
        }
        scenario
            .cfg
            .validate()
            .map_err(|e| ScenarioError(e.to_string()))?;
        if scenario.sweep.strategies.is_empty() {
            return err("strategy list is empty");
        }
        Ok(scenario)
    }

    fn apply_system(&mut self, key: &str, value: &str, lineno: usize) -> Result<(), ScenarioError> {
        let cfg = &mut self.cfg;
        match key {
            "n" => cfg.bs_antennas = parse_num(key, value, lineno)?,
            "m" => cfg.eve_antennas = parse_num(key, value, lineno)?,
            "k" => cfg.users = parse_num(key, value, lineno)?,
            "z" => cfg.an_streams = parse_num(key, value, lineno)?,
            "l_p" => cfg.paths = parse_num(key, value, lineno)?,
            "delta_deg" => cfg.angular_spread_deg = parse_num(key, value, lineno)?,
            "f_c_ghz" => cfg.carrier_ghz = parse_num(key, value, lineno)?,
            "b_hz" => cfg.bandwidth_hz = parse_num(key, value, lineno)?,
            "noise_figure_db" => cfg.noise_figure_db = parse_num(key, value, lineno)?,
            "thermal_noise_dbm_hz" => cfg.thermal_noise_dbm_hz = parse_num(key, value, lineno)?,
            "d_s_over_lambda" => cfg.antenna_spacing = parse_num(key, value, lineno)?,
            "l_t" => cfg.tag_length = parse_num(key, value, lineno)?,
            "p_fa" => cfg.false_alarm_prob = parse_num(key, value, lineno)?,
            "key_space_size" => cfg.key_space_size = parse_num(key, value, lineno)?,
            "d_h_min_m" => cfg.user_horizontal_range_m.0 = parse_num(key, value, lineno)?,
            "d_h_max_m" => cfg.user_horizontal_range_m.1 = parse_num(key, value, lineno)?,
            "d_v_m" => cfg.vertical_distance_m = parse_num(key, value, lineno)?,
            "d_e_min_m" => cfg.eve_range_m.0 = parse_num(key, value, lineno)?,
            "d_e_max_m" => cfg.eve_range_m.1 = parse_num(key, value, lineno)?,
            _ => return err(format!("line {lineno}: unknown key \"{key}\" in [system]")),
        }
        Ok(())
    }

    fn apply_sweep(&mut self, key: &str, value: &str, lineno: usize) -> Result<(), ScenarioError> {
        let sweep = &mut self.sweep;
        match key {
            "strategies" => sweep.strategies = parse_strategies(value, lineno)?,
            "phi_grid" => sweep.phi_grid = parse_list(key, value, lineno)?,
            "p_tx_dbm" => sweep.p_tx_dbm = parse_list(key, value, lineno)?,
            "trials" => sweep.trials = parse_num(key, value, lineno)?,
            "realizations" => sweep.realizations = parse_num(key, value, lineno)?,
            "analytic_only" => sweep.analytic_only = parse_bool(key, value, lineno)?,
            "ml_attack" => sweep.ml_attack = parse_bool(key, value, lineno)?,
            "mc_key_space" => sweep.mc_key_space = parse_num(key, value, lineno)?,
            "rzf_beta" => {
                sweep.rzf_beta = if value == "auto" {
                    None
                } else {
                    Some(parse_num(key, value, lineno)?)
                }
            }
            "seed" => sweep.seed = parse_num(key, value, lineno)?,
            _ => return err(format!("line {lineno}: unknown key \"{key}\" in [sweep]")),
        }
        Ok(())
    }

    fn apply_factors(&mut self, key: &str, value: &str, lineno: usize) -> Result<(), ScenarioError> {
        match key {
            "psi" => self.factors.psi = parse_list(key, value, lineno)?,
            "omega" => self.factors.omega = parse_list(key, value, lineno)?,
            _ => return err(format!("line {lineno}: unknown key \"{key}\" in [factors]")),
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str, lineno: usize) -> Result<T, ScenarioError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| ScenarioError(format!("line {lineno}: key \"{key}\": {e}")))
}

fn parse_bool(key: &str, value: &str, lineno: usize) -> Result<bool, ScenarioError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => err(format!(
            "line {lineno}: key \"{key}\": expected true or false, got \"{value}\""
        )),
    }
}

fn parse_list(key: &str, value: &str, lineno: usize) -> Result<Vec<f64>, ScenarioError> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|item| parse_num(key, item.trim(), lineno))
        .collect()
}

pub fn parse_strategies(value: &str, lineno: usize) -> Result<Vec<Strategy>, ScenarioError> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|item| parse_strategy(item.trim(), lineno))
        .collect()
}

fn parse_strategy(item: &str, lineno: usize) -> Result<Strategy, ScenarioError> {
    let (kind, arg) = match item.split_once(':') {
        Some((k, a)) => (k.trim(), Some(a.trim())),
        None => (item, None),
    };
    let parse_arg = |default: Option<f64>| -> Result<f64, ScenarioError> {
        match (arg, default) {
            (Some(a), _) => parse_num(kind, a, lineno),
            (None, Some(d)) => Ok(d),
            (None, None) => err(format!(
                "line {lineno}: strategy \"{kind}\" needs a value, e.g. {kind}:0.02"
            )),
        }
    };
    match kind {
        "fixed_psi" => Ok(Strategy::FixedPsi(parse_arg(None)?)),
        "fixed_omega" => Ok(Strategy::FixedOmega(parse_arg(None)?)),
        "conventional" => Ok(Strategy::Conventional(parse_arg(Some(
            phyauth_core::powerctl::CONVENTIONAL_TAG_FRACTION,
        ))?)),
        _ => err(format!("line {lineno}: unknown strategy \"{kind}\"")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_settings() {
        let s = Scenario::parse("").unwrap();
        assert_eq!(s.cfg, SystemConfig::default());
        assert_eq!(s.sweep.strategies.len(), 3);
        assert_eq!(s.sweep.phi_grid.len(), 9);
        assert_eq!(s.sweep.p_tx_dbm.first(), Some(&-10.0));
        assert_eq!(s.sweep.p_tx_dbm.last(), Some(&50.0));
    }

    #[test]
    fn parses_overrides_and_sections() {
        let text = "\
# comment
[system]
n = 32
l_t = 1024   # trailing comment
[sweep]
strategies = fixed_psi:0.01, conventional
phi_grid = 0.2, 0.4, 0.8
seed = 99
rzf_beta = 0.0
[factors]
psi = 0.001
";
        let s = Scenario::parse(text).unwrap();
        assert_eq!(s.cfg.bs_antennas, 32);
        assert_eq!(s.cfg.tag_length, 1024);
        assert_eq!(
            s.sweep.strategies,
            vec![Strategy::FixedPsi(0.01), Strategy::Conventional(0.015)]
        );
        assert_eq!(s.sweep.phi_grid, vec![0.2, 0.4, 0.8]);
        assert_eq!(s.sweep.seed, 99);
        assert_eq!(s.sweep.rzf_beta, Some(0.0));
        assert_eq!(s.factors.psi, vec![0.001]);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = Scenario::parse("[system]\nantennas = 8\n").unwrap_err();
        assert!(e.0.contains("unknown key \"antennas\""), "{}", e.0);
        let e = Scenario::parse("[sweep]\nn = 8\n").unwrap_err();
        assert!(e.0.contains("unknown key \"n\" in [sweep]"), "{}", e.0);
        let e = Scenario::parse("[network]\nn = 8\n").unwrap_err();
        assert!(e.0.contains("unknown section"), "{}", e.0);
    }

    #[test]
    fn invalid_config_is_rejected_at_parse() {
        let e = Scenario::parse("[system]\nz = 11\n").unwrap_err();
        assert!(e.0.contains("z must be at most"), "{}", e.0);
        let e = Scenario::parse("[system]\np_fa = 0\n").unwrap_err();
        assert!(e.0.contains("p_fa"), "{}", e.0);
    }

    #[test]
    fn empty_strategy_list_is_an_error() {
        let e = Scenario::parse("[sweep]\nstrategies =\n").unwrap_err();
        assert!(e.0.contains("strategy list is empty"), "{}", e.0);
    }
}
