//! Run configuration files.
//!
//! Configs are TOML. Frequencies are ordinary frequencies in MHz, times in ns,
//! switching slopes in 1/ns and phases in units of π. Absent keys take the
//! default parameter set; grids absent from the file take defaults that
//! depend on the experiment. After [`parse_config`] every grid is an explicit
//! list, so the echoed effective config re-parses to an equal value.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{Alignment, OptimizeBox};
use crate::model::{Incidence, ProbeShape, ProtocolParams, SystemParams};
use crate::units::{mhz, ns, per_ns};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Spectrum,
    Slowlight,
    #[default]
    Storage,
    Bandwidth,
    Heatmap,
    Optimize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub omega_e_mhz: f64,
    pub omega_m_mhz: f64,
    pub gamma_mhz: f64,
    pub gamma_phi_mhz: f64,
    pub gamma_m_mhz: f64,
    pub kd_over_pi: f64,
    pub phi_over_pi: f64,
    pub omega_p_over_gamma: f64,
    pub delta_p_mhz: f64,
    pub coupling_detuning_mhz: f64,
    pub g_sigma_mhz: f64,
    pub incidence: Incidence,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            omega_e_mhz: 5000.0,
            omega_m_mhz: 4000.0,
            gamma_mhz: 10.0,
            gamma_phi_mhz: 0.1,
            gamma_m_mhz: 0.004,
            kd_over_pi: 0.5,
            phi_over_pi: -0.5,
            omega_p_over_gamma: 0.01,
            delta_p_mhz: 0.0,
            coupling_detuning_mhz: 0.0,
            g_sigma_mhz: 0.0,
            incidence: Incidence::Left,
        }
    }
}

impl SystemConfig {
    pub fn params(&self) -> SystemParams {
        let pi = std::f64::consts::PI;
        let gamma = mhz(self.gamma_mhz);
        SystemParams {
            omega_e: mhz(self.omega_e_mhz),
            omega_m: mhz(self.omega_m_mhz),
            gamma,
            gamma_phi: mhz(self.gamma_phi_mhz),
            gamma_m: mhz(self.gamma_m_mhz),
            kd: self.kd_over_pi * pi,
            phi: self.phi_over_pi * pi,
            omega_p: self.omega_p_over_gamma * gamma,
            delta_p: mhz(self.delta_p_mhz),
            coupling_detuning: mhz(self.coupling_detuning_mhz),
            g_sigma: mhz(self.g_sigma_mhz),
            incidence: self.incidence,
        }
    }
}

/// Probe and coupling controls. Exactly one of `t_on_ns` and `tau_d_ns` may
/// be given; the effective config always carries `t_on_ns`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub omega_phi_mhz: f64,
    pub beta_per_ns: f64,
    pub t_off_ns: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_on_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_d_ns: Option<f64>,
    pub phi_on_over_pi: f64,
    pub tau_s_ns: f64,
    pub t_center_ns: f64,
    pub continuous: bool,
}

/// Storage time used when neither `t_on_ns` nor `tau_d_ns` is given.
pub const DEFAULT_TAU_D_NS: f64 = 1000.0;

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            omega_phi_mhz: 6.0,
            beta_per_ns: 0.0085,
            t_off_ns: 80.0,
            t_on_ns: None,
            tau_d_ns: None,
            phi_on_over_pi: -0.5,
            tau_s_ns: 100.0,
            t_center_ns: 0.0,
            continuous: false,
        }
    }
}

impl ProtocolConfig {
    /// `t_on` for a storage time τ_d at the configured `t_off` and β.
    pub fn t_on_for(&self, tau_d_ns: f64) -> f64 {
        self.t_off_ns + 5.0 / self.beta_per_ns + tau_d_ns
    }

    pub fn params(&self) -> ProtocolParams {
        ProtocolParams {
            omega_phi: mhz(self.omega_phi_mhz),
            beta: per_ns(self.beta_per_ns),
            t_off: ns(self.t_off_ns),
            t_on: ns(self
                .t_on_ns
                .unwrap_or_else(|| self.t_on_for(self.tau_d_ns.unwrap_or(DEFAULT_TAU_D_NS)))),
            phi_on: self.phi_on_over_pi * std::f64::consts::PI,
            tau_s: ns(self.tau_s_ns),
            t_center: ns(self.t_center_ns),
            continuous: self.continuous,
            probe: ProbeShape::Gaussian,
        }
    }
}

/// A grid given either as an explicit list or as an inclusive linear range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        points: usize,
    },
}

impl Grid {
    pub fn linspace(start: f64, stop: f64, points: usize) -> Self {
        Grid::List(expand(start, stop, points))
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range {
                start,
                stop,
                points,
            } => expand(*start, *stop, *points),
        }
    }
}

fn expand(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![start],
        n => (0..n)
            .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Sweep axes. Which ones an experiment reads:
/// spectrum `delta_p_mhz × omega_phi_mhz`; slowlight `omega_phi_mhz`;
/// storage `phi_on_over_pi`, `tau_d_ns` and `delta_p_mhz` (each optional);
/// bandwidth `delta_p_mhz`; heatmap `omega_phi_mhz × beta_per_ns`;
/// optimize `tau_s_ns`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub delta_p_mhz: Option<Grid>,
    pub omega_phi_mhz: Option<Grid>,
    pub beta_per_ns: Option<Grid>,
    pub tau_d_ns: Option<Grid>,
    pub phi_on_over_pi: Option<Grid>,
    pub tau_s_ns: Option<Grid>,
}

/// Search box of the optimizer. β is searched on a logarithmic axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub omega_min_mhz: f64,
    pub omega_max_mhz: f64,
    pub beta_min_per_ns: f64,
    pub beta_max_per_ns: f64,
    pub tau_d_ns: f64,
    pub coarse: usize,
    pub refine: usize,
    pub passes: usize,
    pub zoom: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self {
            omega_min_mhz: 2.0,
            omega_max_mhz: 10.0,
            beta_min_per_ns: 0.001,
            beta_max_per_ns: 0.05,
            tau_d_ns: DEFAULT_TAU_D_NS,
            coarse: 15,
            refine: 9,
            passes: 2,
            zoom: 4.0,
        }
    }
}

impl OptimizeConfig {
    pub fn search_box(&self, t_off_ns: f64) -> OptimizeBox {
        OptimizeBox {
            omega: (mhz(self.omega_min_mhz), mhz(self.omega_max_mhz)),
            beta: (per_ns(self.beta_min_per_ns), per_ns(self.beta_max_per_ns)),
            t_off: ns(t_off_ns),
            tau_d: ns(self.tau_d_ns),
            coarse: self.coarse,
            refine: self.refine,
            passes: self.passes,
            zoom: self.zoom,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    pub alignment: Alignment,
    pub system: SystemConfig,
    pub protocol: ProtocolConfig,
    pub grids: GridConfig,
    pub optimize: OptimizeConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::default(),
            output_dir: PathBuf::from("out"),
            alignment: Alignment::Peak,
            system: SystemConfig::default(),
            protocol: ProtocolConfig::default(),
            grids: GridConfig::default(),
            optimize: OptimizeConfig::default(),
        }
    }
}

impl RunConfig {
    /// Grid by name after [`parse_config`]; empty if the experiment does not
    /// use it.
    pub fn grid(&self, g: &Option<Grid>) -> Vec<f64> {
        g.as_ref().map(Grid::values).unwrap_or_default()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }
}

/// 1-based line of `key` inside `[section]` (top level for ""), 0 if absent.
fn key_line(text: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return i + 1;
                }
            }
        }
    }
    0
}

fn from_toml_error(text: &str, e: &toml::de::Error) -> Error {
    let message = e.message().to_string();
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    let key = message
        .split('`')
        .nth(1)
        .filter(|_| message.starts_with("unknown field") || message.starts_with("unknown variant"))
        .map(str::to_string)
        .or_else(|| {
            let l = text.lines().nth(line.checked_sub(1)?)?;
            l.split_once('=').map(|(k, _)| k.trim().to_string())
        })
        .unwrap_or_else(|| "<document>".to_string());
    Error::Config {
        key,
        line,
        reason: message,
    }
}

fn invalid(text: &str, section: &str, key: &str, reason: impl Into<String>) -> Error {
    let full = if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    };
    Error::Config {
        key: full,
        line: key_line(text, section, key),
        reason: reason.into(),
    }
}

/// Parse, fill experiment-specific grid defaults and validate.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| from_toml_error(text, &e))?;
    resolve(&mut cfg).map_err(|(section, key, reason)| invalid(text, section, key, reason))?;
    Ok(cfg)
}

type Violation = (&'static str, &'static str, String);

fn require(
    ok: bool,
    section: &'static str,
    key: &'static str,
    reason: &str,
) -> std::result::Result<(), Violation> {
    if ok {
        Ok(())
    } else {
        Err((section, key, reason.to_string()))
    }
}

fn resolve(cfg: &mut RunConfig) -> std::result::Result<(), Violation> {
    let s = &cfg.system;
    require(s.gamma_mhz > 0.0, "system", "gamma_mhz", "must be positive")?;
    require(
        s.gamma_phi_mhz >= 0.0,
        "system",
        "gamma_phi_mhz",
        "must be non-negative",
    )?;
    require(
        s.gamma_m_mhz >= 0.0,
        "system",
        "gamma_m_mhz",
        "must be non-negative",
    )?;
    require(
        s.omega_p_over_gamma > 0.0 && s.omega_p_over_gamma <= crate::model::WEAK_PROBE_MAX,
        "system",
        "omega_p_over_gamma",
        "must lie in (0, 0.2]",
    )?;
    let finite = [
        ("omega_e_mhz", s.omega_e_mhz),
        ("omega_m_mhz", s.omega_m_mhz),
        ("kd_over_pi", s.kd_over_pi),
        ("phi_over_pi", s.phi_over_pi),
        ("delta_p_mhz", s.delta_p_mhz),
        ("coupling_detuning_mhz", s.coupling_detuning_mhz),
        ("g_sigma_mhz", s.g_sigma_mhz),
    ];
    for (key, v) in finite {
        require(v.is_finite(), "system", key, "must be finite")?;
    }

    let p = &mut cfg.protocol;
    require(
        p.omega_phi_mhz >= 0.0 && p.omega_phi_mhz.is_finite(),
        "protocol",
        "omega_phi_mhz",
        "must be finite and non-negative",
    )?;
    require(
        p.beta_per_ns > 0.0 && p.beta_per_ns.is_finite(),
        "protocol",
        "beta_per_ns",
        "must be positive",
    )?;
    require(
        p.tau_s_ns > 0.0 && p.tau_s_ns.is_finite(),
        "protocol",
        "tau_s_ns",
        "must be positive",
    )?;
    require(
        p.t_off_ns.is_finite(),
        "protocol",
        "t_off_ns",
        "must be finite",
    )?;
    require(
        p.t_center_ns.is_finite(),
        "protocol",
        "t_center_ns",
        "must be finite",
    )?;
    require(
        p.phi_on_over_pi.is_finite(),
        "protocol",
        "phi_on_over_pi",
        "must be finite",
    )?;
    require(
        !(p.t_on_ns.is_some() && p.tau_d_ns.is_some()),
        "protocol",
        "tau_d_ns",
        "give either t_on_ns or tau_d_ns, not both",
    )?;
    if let Some(tau_d) = p.tau_d_ns.take() {
        require(tau_d >= 0.0, "protocol", "tau_d_ns", "must be non-negative")?;
        p.t_on_ns = Some(p.t_on_for(tau_d));
    }
    let t_on = p.t_on_ns.unwrap_or_else(|| p.t_on_for(DEFAULT_TAU_D_NS));
    p.t_on_ns = Some(t_on);
    if !p.continuous {
        require(
            t_on - p.t_off_ns - 5.0 / p.beta_per_ns >= -1e-9 * t_on.abs().max(1.0),
            "protocol",
            "t_on_ns",
            "storage time t_on − t_off − 5/β is negative",
        )?;
    }

    let o = &cfg.optimize;
    require(
        o.omega_max_mhz > o.omega_min_mhz && o.omega_min_mhz >= 0.0,
        "optimize",
        "omega_max_mhz",
        "empty coupling range",
    )?;
    require(
        o.beta_max_per_ns > o.beta_min_per_ns && o.beta_min_per_ns > 0.0,
        "optimize",
        "beta_max_per_ns",
        "empty slope range",
    )?;
    require(
        o.tau_d_ns >= 0.0,
        "optimize",
        "tau_d_ns",
        "must be non-negative",
    )?;
    require(
        o.coarse >= 2,
        "optimize",
        "coarse",
        "needs at least 2 points",
    )?;
    require(
        o.refine >= 2,
        "optimize",
        "refine",
        "needs at least 2 points",
    )?;
    require(o.zoom > 1.0, "optimize", "zoom", "must exceed 1")?;

    let omega = p.omega_phi_mhz;
    let tau_s = p.tau_s_ns;
    let g = &mut cfg.grids;
    let fill = |slot: &mut Option<Grid>, default: Grid| {
        let values = slot.take().unwrap_or(default).values();
        *slot = Some(Grid::List(values));
    };
    match cfg.experiment {
        Experiment::Spectrum => {
            fill(&mut g.delta_p_mhz, Grid::linspace(-15.0, 15.0, 61));
            fill(
                &mut g.omega_phi_mhz,
                Grid::List(vec![2.0, 4.0, 6.0, 8.0, 10.0]),
            );
        }
        Experiment::Slowlight => fill(&mut g.omega_phi_mhz, Grid::List(vec![omega])),
        Experiment::Storage => {
            fill(&mut g.phi_on_over_pi, Grid::List(Vec::new()));
            fill(&mut g.tau_d_ns, Grid::List(Vec::new()));
            fill(&mut g.delta_p_mhz, Grid::List(Vec::new()));
        }
        Experiment::Bandwidth => fill(&mut g.delta_p_mhz, Grid::linspace(-4.0, 4.0, 81)),
        Experiment::Heatmap => {
            fill(&mut g.omega_phi_mhz, Grid::linspace(2.0, 12.0, 41));
            fill(&mut g.beta_per_ns, Grid::linspace(0.01, 0.2, 41));
        }
        Experiment::Optimize => fill(&mut g.tau_s_ns, Grid::List(vec![tau_s])),
    }
    let grids = [
        ("delta_p_mhz", &g.delta_p_mhz),
        ("omega_phi_mhz", &g.omega_phi_mhz),
        ("beta_per_ns", &g.beta_per_ns),
        ("tau_d_ns", &g.tau_d_ns),
        ("phi_on_over_pi", &g.phi_on_over_pi),
        ("tau_s_ns", &g.tau_s_ns),
    ];
    for (key, grid) in grids {
        if let Some(values) = grid.as_ref().map(Grid::values) {
            require(
                values.iter().all(|v| v.is_finite()),
                "grids",
                key,
                "values must be finite",
            )?;
        }
    }
    let required: &[(&'static str, &Option<Grid>)] = match cfg.experiment {
        Experiment::Spectrum => &[
            ("delta_p_mhz", &g.delta_p_mhz),
            ("omega_phi_mhz", &g.omega_phi_mhz),
        ],
        Experiment::Slowlight => &[("omega_phi_mhz", &g.omega_phi_mhz)],
        Experiment::Storage => &[],
        Experiment::Bandwidth => &[("delta_p_mhz", &g.delta_p_mhz)],
        Experiment::Heatmap => &[
            ("omega_phi_mhz", &g.omega_phi_mhz),
            ("beta_per_ns", &g.beta_per_ns),
        ],
        Experiment::Optimize => &[("tau_s_ns", &g.tau_s_ns)],
    };
    for (key, grid) in required {
        let values = grid.as_ref().map(Grid::values).unwrap_or_default();
        require(!values.is_empty(), "grids", key, "grid is empty")?;
    }
    if cfg.experiment == Experiment::Slowlight {
        let values = g
            .omega_phi_mhz
            .as_ref()
            .map(Grid::values)
            .unwrap_or_default();
        require(
            values.iter().all(|&w| w > 0.0),
            "grids",
            "omega_phi_mhz",
            "slow light needs positive couplings",
        )?;
    }
    if cfg.experiment == Experiment::Optimize {
        let values = g.tau_s_ns.as_ref().map(Grid::values).unwrap_or_default();
        require(
            values.iter().all(|&t| t > 0.0),
            "grids",
            "tau_s_ns",
            "pulse durations must be positive",
        )?;
    }
    if cfg.experiment == Experiment::Heatmap {
        let values = g.beta_per_ns.as_ref().map(Grid::values).unwrap_or_default();
        require(
            values.iter().all(|&b| b > 0.0),
            "grids",
            "beta_per_ns",
            "slopes must be positive",
        )?;
    }
    Ok(())
}

/// Built-in presets.
pub const PRESETS: [&str; 6] = ["fig2a", "fig2bc", "fig2d", "fig3", "fig4", "fig5"];

pub fn preset_text(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig2a" => FIG2A,
        "fig2bc" => FIG2BC,
        "fig2d" => FIG2D,
        "fig3" => FIG3,
        "fig4" => FIG4,
        "fig5" => FIG5,
        _ => return None,
    })
}

pub fn preset(name: &str) -> Result<RunConfig> {
    let text = preset_text(name).ok_or_else(|| Error::Config {
        key: "preset".into(),
        line: 0,
        reason: format!(
            "unknown preset `{name}`; expected one of {}",
            PRESETS.join(", ")
        ),
    })?;
    parse_config(text)
}

const FIG2A: &str = r#"
experiment = "spectrum"
output_dir = "out/fig2a"

[grids]
delta_p_mhz = { start = -15.0, stop = 15.0, points = 61 }
omega_phi_mhz = [2.0, 4.0, 6.0, 8.0, 10.0]
"#;

const FIG2BC: &str = r#"
experiment = "slowlight"
output_dir = "out/fig2bc"

[protocol]
continuous = true
tau_s_ns = 300.0

[grids]
omega_phi_mhz = [3.2, 5.6, 8.0]
"#;

const FIG2D: &str = r#"
experiment = "slowlight"
output_dir = "out/fig2d"

[protocol]
continuous = true
tau_s_ns = 300.0

[grids]
omega_phi_mhz = [3.2, 4.0, 4.8, 5.6, 6.4, 7.2, 8.0]
"#;

const FIG3: &str = r#"
experiment = "heatmap"
output_dir = "out/fig3"

[system]
gamma_phi_mhz = 0.0
gamma_m_mhz = 0.0

[protocol]
t_off_ns = 80.0
tau_s_ns = 100.0
tau_d_ns = 0.0

[grids]
omega_phi_mhz = { start = 2.0, stop = 12.0, points = 41 }
beta_per_ns = { start = 0.01, stop = 0.2, points = 41 }
"#;

const FIG4: &str = r#"
experiment = "storage"
output_dir = "out/fig4"

[protocol]
omega_phi_mhz = 6.0
beta_per_ns = 0.0085
t_off_ns = 80.0
tau_d_ns = 1000.0
tau_s_ns = 100.0
phi_on_over_pi = -0.5

[grids]
phi_on_over_pi = [-0.5, 0.5]
tau_d_ns = [500.0, 1000.0, 2000.0, 3000.0, 5000.0]
delta_p_mhz = { start = -4.0, stop = 4.0, points = 81 }
"#;

const FIG5: &str = r#"
experiment = "optimize"
output_dir = "out/fig5"

[protocol]
t_off_ns = 0.0

[optimize]
omega_min_mhz = 2.0
omega_max_mhz = 10.0
beta_min_per_ns = 0.001
beta_max_per_ns = 0.05
tau_d_ns = 1000.0

[grids]
tau_s_ns = [50.0, 100.0, 200.0, 300.0, 400.0, 500.0, 600.0]
"#;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_default_parameters() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg.experiment, Experiment::Storage);
        assert_eq!(cfg.system.params(), SystemParams::default());
        assert_eq!(cfg.protocol.t_on_ns, Some(80.0 + 5.0 / 0.0085 + 1000.0));
    }

    #[test]
    fn negative_dephasing_names_key_and_line() {
        let err =
            parse_config("experiment = \"spectrum\"\n[system]\ngamma_phi_mhz = -1\n").unwrap_err();
        match err {
            Error::Config { key, line, .. } => {
                assert!(key.contains("gamma_phi"), "{key}");
                assert_eq!(line, 3);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let err =
            parse_config("[protocol]\n\nbeta_per_ns = 0.01\nomega_phy_mhz = 3\n").unwrap_err();
        match err {
            Error::Config { key, line, .. } => {
                assert_eq!(key, "omega_phy_mhz");
                assert_eq!(line, 4);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn type_mismatch_is_reported() {
        let err = parse_config("[system]\ngamma_mhz = \"ten\"\n").unwrap_err();
        match err {
            Error::Config { key, line, .. } => {
                assert_eq!(key, "gamma_mhz");
                assert_eq!(line, 2);
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn bandwidth_default_grid_spans_four_mhz() {
        let cfg = parse_config("experiment = \"bandwidth\"").unwrap();
        let g = cfg.grid(&cfg.grids.delta_p_mhz);
        assert_eq!(g.len(), 81);
        assert_eq!((g[0], g[80]), (-4.0, 4.0));
        assert!((g[40]).abs() < 1e-12);
    }

    #[test]
    fn both_storage_time_keys_conflict() {
        let err = parse_config("[protocol]\nt_on_ns = 2000\ntau_d_ns = 100\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 3, .. }), "{err}");
    }

    #[test]
    fn effective_config_round_trips() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            assert_eq!(parse_config(&cfg.to_toml()).unwrap(), cfg, "{name}");
        }
        let custom =
            parse_config("experiment = \"heatmap\"\n[grids]\nbeta_per_ns = [0.02, 0.03]\n")
                .unwrap();
        assert_eq!(parse_config(&custom.to_toml()).unwrap(), custom);
    }

    #[test]
    fn unknown_preset_is_an_error() {
        assert!(preset("fig9").is_err());
    }
}
