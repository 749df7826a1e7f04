//! Executes a [`RunConfig`] and writes its tables, summary, effective config
//! and log into the output directory.
//!
//! Every float in CSV files is written as `{:.11e}` (12 significant digits)
//! and every float in the summary is rounded to 12 significant digits, so
//! identical configs give byte-identical CSV and JSON files. Only `run.log`
//! carries wall-clock timings.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{Experiment, RunConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    bandwidth_scan, decay_sweep, delay_law, fit_optical_depth, heatmap, optimize_protocol,
    slow_light_run, spectrum_scan, storage_run, storage_run_with, StorageOptions,
};
use crate::fields::Direction;
use crate::model::ProtocolParams;
use crate::units::{mhz, ns, per_ns, to_mhz, to_ns, to_per_ns};

/// A result table with a header row.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).map_err(std::io::Error::from)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| format!("{x:.11e}")))
                .map_err(std::io::Error::from)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Round to 12 significant digits; non-finite values become `null`.
pub fn round12(x: f64) -> Value {
    if x.is_finite() {
        let r: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
        json!(r)
    } else {
        Value::Null
    }
}

/// Everything a run produces, before it is written.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub summary: Map<String, Value>,
    pub log: Vec<String>,
}

impl RunOutput {
    /// Summary object with the effective config nested under `config`.
    pub fn summary_json(&self, cfg: &RunConfig) -> Result<String> {
        let mut obj = self.summary.clone();
        obj.insert(
            "config".into(),
            serde_json::to_value(cfg).map_err(|e| Error::Io(e.into()))?,
        );
        let mut text =
            serde_json::to_string_pretty(&Value::Object(obj)).map_err(|e| Error::Io(e.into()))?;
        text.push('\n');
        Ok(text)
    }
}

struct Log {
    start: Instant,
    lines: Vec<String>,
}

impl Log {
    fn new() -> Self {
        Self {
            start: Instant::now(),
            lines: Vec::new(),
        }
    }

    fn line(&mut self, msg: impl AsRef<str>) {
        self.lines.push(format!(
            "[{:9.3} s] {}",
            self.start.elapsed().as_secs_f64(),
            msg.as_ref()
        ));
    }
}

/// Run the configured experiment without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput> {
    let mut log = Log::new();
    log.line(format!(
        "chiral-memory {} experiment {:?}",
        env!("CARGO_PKG_VERSION"),
        cfg.experiment
    ));
    let sp = cfg.system.params();
    sp.validate()?;
    for w in sp.warnings() {
        log.line(format!("warning: {w}"));
    }
    let mut out = RunOutput {
        tables: Vec::new(),
        summary: Map::new(),
        log: Vec::new(),
    };
    out.summary.insert(
        "experiment".into(),
        serde_json::to_value(cfg.experiment).map_err(|e| Error::Io(e.into()))?,
    );
    match cfg.experiment {
        Experiment::Spectrum => run_spectrum(cfg, &mut out, &mut log)?,
        Experiment::Slowlight => run_slowlight(cfg, &mut out, &mut log)?,
        Experiment::Storage => run_storage(cfg, &mut out, &mut log)?,
        Experiment::Bandwidth => run_bandwidth(cfg, &cfg.protocol.params(), &mut out, &mut log)?,
        Experiment::Heatmap => run_heatmap(cfg, &mut out, &mut log)?,
        Experiment::Optimize => run_optimize(cfg, &mut out, &mut log)?,
    }
    log.line("done");
    out.log = log.lines;
    Ok(out)
}

/// Run the experiment and write all files into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let output = execute(cfg)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for t in &output.tables {
        let path = dir.join(format!("{}.csv", t.name));
        fs::write(&path, t.to_csv()?)?;
        files.push(path);
    }
    let summary = dir.join("summary.json");
    fs::write(&summary, output.summary_json(cfg)?)?;
    files.push(summary);
    let echo = dir.join("effective_config.toml");
    fs::write(&echo, cfg.to_toml())?;
    files.push(echo);
    let log = dir.join("run.log");
    let mut text = output.log.join("\n");
    text.push('\n');
    fs::write(&log, text)?;
    files.push(log);
    Ok(files)
}

fn put(out: &mut RunOutput, key: &str, v: f64) {
    out.summary.insert(key.into(), round12(v));
}

fn run_spectrum(cfg: &RunConfig, out: &mut RunOutput, log: &mut Log) -> Result<()> {
    let sp = cfg.system.params();
    let deltas: Vec<f64> = cfg
        .grid(&cfg.grids.delta_p_mhz)
        .into_iter()
        .map(mhz)
        .collect();
    let omegas: Vec<f64> = cfg
        .grid(&cfg.grids.omega_phi_mhz)
        .into_iter()
        .map(mhz)
        .collect();
    log.line(format!(
        "spectrum scan over {} x {} points",
        omegas.len(),
        deltas.len()
    ));
    let rows = spectrum_scan(&deltas, &omegas, &sp)?;
    let mut table = Table::new(
        "spectrum",
        &[
            "delta_p_mhz",
            "omega_phi_mhz",
            "re_tc_num",
            "im_tc_num",
            "re_tc_ana",
            "im_tc_ana",
        ],
    );
    for r in &rows {
        table.rows.push(vec![
            to_mhz(r.delta_p),
            to_mhz(r.omega_phi),
            r.numeric.re,
            r.numeric.im,
            r.analytic.re,
            r.analytic.im,
        ]);
    }
    let worst = rows
        .iter()
        .max_by(|a, b| a.deviation().total_cmp(&b.deviation()))
        .ok_or(Error::Empty("spectrum"))?;
    put(out, "max_deviation", worst.deviation());
    put(out, "worst_delta_p_mhz", to_mhz(worst.delta_p));
    put(out, "worst_omega_phi_mhz", to_mhz(worst.omega_phi));
    out.summary.insert("points".into(), json!(rows.len()));
    log.line(format!(
        "max |numeric - analytic| = {:e}",
        worst.deviation()
    ));
    out.tables.push(table);
    Ok(())
}

fn run_slowlight(cfg: &RunConfig, out: &mut RunOutput, log: &mut Log) -> Result<()> {
    let sp = cfg.system.params();
    let tau_s = ns(cfg.protocol.tau_s_ns);
    let omegas: Vec<f64> = cfg
        .grid(&cfg.grids.omega_phi_mhz)
        .into_iter()
        .map(mhz)
        .collect();
    log.line(format!(
        "slow light at {} couplings, tau_s = {} ns",
        omegas.len(),
        cfg.protocol.tau_s_ns
    ));
    let runs = omegas
        .par_iter()
        .map(|&w| slow_light_run(w, tau_s, &sp))
        .collect::<Result<Vec<_>>>()?;
    let dir = Direction::forward(sp.incidence);
    let mut delays = Table::new(
        "delays",
        &["omega_phi_mhz", "t_d_ns", "d_point", "t_d_law_ns"],
    );
    let mut traces = Table::new(
        "traces",
        &[
            "omega_phi_mhz",
            "t_ns",
            "in_power",
            "out_power",
            "re_out",
            "im_out",
        ],
    );
    for (rec, d) in &runs {
        delays.rows.push(vec![
            to_mhz(d.omega_phi),
            to_ns(d.t_d),
            d.d_fit,
            to_ns(delay_law(d.omega_phi, 4.0, sp.gamma)?),
        ]);
        for (k, &t) in rec.times.iter().enumerate() {
            let a = rec.output(dir)[k];
            traces.rows.push(vec![
                to_mhz(d.omega_phi),
                to_ns(t),
                rec.a_in_right[k].norm_sqr(),
                a.norm_sqr(),
                a.re,
                a.im,
            ]);
        }
        log.line(format!(
            "omega_phi = {:.3} MHz: t_d = {:.3} ns",
            to_mhz(d.omega_phi),
            to_ns(d.t_d)
        ));
    }
    let results: Vec<_> = runs.iter().map(|(_, d)| *d).collect();
    match fit_optical_depth(&results, sp.gamma) {
        Ok(d) => put(out, "d_fit", d),
        Err(e) => {
            log.line(format!("no optical-depth fit: {e}"));
            out.summary.insert("d_fit".into(), Value::Null);
        }
    }
    out.summary.insert(
        "delays".into(),
        Value::Array(
            results
                .iter()
                .map(|d| json!({ "omega_phi_mhz": round12(to_mhz(d.omega_phi)), "t_d_ns": round12(to_ns(d.t_d)) }))
                .collect(),
        ),
    );
    out.tables.push(delays);
    out.tables.push(traces);
    Ok(())
}

fn run_storage(cfg: &RunConfig, out: &mut RunOutput, log: &mut Log) -> Result<()> {
    let sp = cfg.system.params();
    let p = cfg.protocol.params();
    log.line(format!(
        "storage: omega_phi = {} MHz, beta = {} /ns, t_off = {} ns, t_on = {} ns",
        cfg.protocol.omega_phi_mhz,
        cfg.protocol.beta_per_ns,
        cfg.protocol.t_off_ns,
        to_ns(p.t_on)
    ));
    let opts = StorageOptions {
        alignment: cfg.alignment,
        diagnostics: true,
    };
    let r = storage_run_with(&sp, &p, opts)?;
    if r.eta > 1.0 {
        log.line(format!(
            "raw eta {} exceeds 1; reported value clamped",
            r.eta
        ));
    }
    put(out, "eta", r.eta.min(1.0));
    put(out, "eta_raw", r.eta);
    put(out, "fidelity", r.fidelity);
    put(out, "tau_d_ns", to_ns(r.tau_d));
    put(out, "t_prime_ns", to_ns(r.t_prime));
    put(out, "energy_in", r.energy_in);
    put(out, "energy_right", r.energy_right);
    put(out, "energy_left", r.energy_left);
    put(out, "retrieved_right", r.retrieved_right);
    put(out, "retrieved_left", r.retrieved_left);
    if let Some(d) = r.diagnostics {
        put(out, "max_trace_error", d.trace_error);
        put(out, "max_hermiticity_error", d.hermiticity);
        put(out, "min_eigenvalue", d.min_eigenvalue);
    }
    out.summary.insert(
        "direction".into(),
        serde_json::to_value(r.direction).map_err(|e| Error::Io(e.into()))?,
    );
    log.line(format!("eta = {:.6}, F = {:.6}", r.eta, r.fidelity));
    let mut trace = Table::new(
        "trace",
        &[
            "t_ns",
            "re_in",
            "im_in",
            "re_out_right",
            "im_out_right",
            "re_out_left",
            "im_out_left",
        ],
    );
    let rec = &r.field_record;
    for k in 0..rec.len() {
        trace.rows.push(vec![
            to_ns(rec.times[k]),
            rec.a_in_right[k].re,
            rec.a_in_right[k].im,
            rec.a_out_right[k].re,
            rec.a_out_right[k].im,
            rec.a_out_left[k].re,
            rec.a_out_left[k].im,
        ]);
    }
    out.tables.push(trace);

    let phases = cfg.grid(&cfg.grids.phi_on_over_pi);
    if !phases.is_empty() {
        let runs = phases
            .par_iter()
            .map(|&ph| storage_run(&sp, &p.with_phi_on(ph * std::f64::consts::PI)))
            .collect::<Result<Vec<_>>>()?;
        let mut t = Table::new(
            "direction",
            &[
                "phi_on_over_pi",
                "eta",
                "fidelity",
                "retrieved_right",
                "retrieved_left",
            ],
        );
        for (ph, r) in phases.iter().zip(&runs) {
            t.rows.push(vec![
                *ph,
                r.eta,
                r.fidelity,
                r.retrieved_right,
                r.retrieved_left,
            ]);
            log.line(format!(
                "phi_on = {ph} pi: right {:e}, left {:e}",
                r.retrieved_right, r.retrieved_left
            ));
        }
        out.tables.push(t);
    }

    let tau_ds = cfg.grid(&cfg.grids.tau_d_ns);
    if !tau_ds.is_empty() {
        let taus: Vec<f64> = tau_ds.iter().map(|&t| ns(t)).collect();
        let d = decay_sweep(&taus, &sp, &p)?;
        let mut t = Table::new("decay", &["tau_d_ns", "eta", "fidelity"]);
        for &(tau, eta, f) in &d.rows {
            t.rows.push(vec![to_ns(tau), eta, f]);
        }
        put(out, "decay_rate_khz", d.rate / mhz(1.0) * 1e3);
        put(
            out,
            "decay_rate_over_gamma_m",
            if sp.gamma_m > 0.0 {
                d.rate / sp.gamma_m
            } else {
                f64::NAN
            },
        );
        put(out, "decay_amplitude", d.amplitude);
        log.line(format!("decay rate {:.6} kHz", d.rate / mhz(1.0) * 1e3));
        out.tables.push(t);
    }

    if !cfg.grid(&cfg.grids.delta_p_mhz).is_empty() {
        run_bandwidth(cfg, &p, out, log)?;
    }
    Ok(())
}

fn run_bandwidth(
    cfg: &RunConfig,
    p: &ProtocolParams,
    out: &mut RunOutput,
    log: &mut Log,
) -> Result<()> {
    let sp = cfg.system.params();
    let deltas: Vec<f64> = cfg
        .grid(&cfg.grids.delta_p_mhz)
        .into_iter()
        .map(mhz)
        .collect();
    log.line(format!("bandwidth scan over {} detunings", deltas.len()));
    let b = bandwidth_scan(&deltas, &sp, p)?;
    let mut t = Table::new("bandwidth", &["delta_p_mhz", "eta", "fidelity"]);
    for r in &b.rows {
        t.rows.push(vec![to_mhz(r.delta_p), r.eta, r.fidelity]);
    }
    let f_min = b
        .rows
        .iter()
        .filter(|r| r.eta >= 0.5)
        .map(|r| r.fidelity)
        .fold(f64::INFINITY, f64::min);
    put(out, "bandwidth_mhz", to_mhz(b.bandwidth));
    put(out, "min_fidelity_in_band", f_min);
    log.line(format!("bandwidth {:.4} MHz", to_mhz(b.bandwidth)));
    out.tables.push(t);
    Ok(())
}

fn run_heatmap(cfg: &RunConfig, out: &mut RunOutput, log: &mut Log) -> Result<()> {
    let sp = cfg.system.params();
    let p = cfg.protocol.params();
    let omegas: Vec<f64> = cfg
        .grid(&cfg.grids.omega_phi_mhz)
        .into_iter()
        .map(mhz)
        .collect();
    let betas: Vec<f64> = cfg
        .grid(&cfg.grids.beta_per_ns)
        .into_iter()
        .map(per_ns)
        .collect();
    let tau_d = p.storage_time();
    log.line(format!(
        "heatmap over {} x {} points, tau_d = {} ns",
        omegas.len(),
        betas.len(),
        to_ns(tau_d)
    ));
    let rows = heatmap(&omegas, &betas, p.tau_s, p.t_off, tau_d, &sp)?;
    let mut t = Table::new(
        "heatmap",
        &["omega_phi_mhz", "beta_per_ns", "eta", "fidelity"],
    );
    for r in &rows {
        t.rows.push(vec![
            to_mhz(r.omega_phi),
            to_per_ns(r.beta),
            r.eta,
            r.fidelity,
        ]);
    }
    let failed = rows.iter().filter(|r| r.eta.is_nan()).count();
    if failed > 0 {
        log.line(format!(
            "{failed} grid points failed and are reported as NaN"
        ));
    }
    let best = rows
        .iter()
        .filter(|r| r.eta.is_finite())
        .fold(
            None,
            |acc: Option<&crate::experiments::HeatmapRow>, r| match acc {
                Some(b) if b.eta >= r.eta => acc,
                _ => Some(r),
            },
        )
        .ok_or(Error::Empty("feasible heatmap point"))?;
    put(out, "best_omega_phi_mhz", to_mhz(best.omega_phi));
    put(out, "best_beta_per_ns", to_per_ns(best.beta));
    put(out, "best_eta", best.eta);
    put(out, "best_fidelity", best.fidelity);
    out.summary.insert("failed_points".into(), json!(failed));
    out.tables.push(t);
    Ok(())
}

fn run_optimize(cfg: &RunConfig, out: &mut RunOutput, log: &mut Log) -> Result<()> {
    let sp = cfg.system.params();
    let b = cfg.optimize.search_box(cfg.protocol.t_off_ns);
    let mut t = Table::new(
        "optimize",
        &[
            "tau_s_ns",
            "omega_phi_mhz",
            "beta_per_ns",
            "eta",
            "fidelity",
            "evaluations",
        ],
    );
    let mut incumbents = Vec::new();
    for tau_s in cfg.grid(&cfg.grids.tau_s_ns) {
        let r = optimize_protocol(ns(tau_s), &sp, &b)?;
        log.line(format!(
            "tau_s = {tau_s} ns: omega_phi = {:.4} MHz, beta = {:.6} /ns, eta = {:.6}, F = {:.6}",
            to_mhz(r.omega_phi),
            to_per_ns(r.beta),
            r.eta,
            r.fidelity
        ));
        t.rows.push(vec![
            tau_s,
            to_mhz(r.omega_phi),
            to_per_ns(r.beta),
            r.eta,
            r.fidelity,
            r.evaluations as f64,
        ]);
        incumbents.push(json!({
            "tau_s_ns": round12(tau_s),
            "omega_phi_mhz": round12(to_mhz(r.omega_phi)),
            "beta_per_ns": round12(to_per_ns(r.beta)),
            "eta": round12(r.eta),
            "fidelity": round12(r.fidelity),
        }));
    }
    out.summary
        .insert("incumbents".into(), Value::Array(incumbents));
    out.tables.push(t);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_fixed_scientific_format() {
        let mut t = Table::new("x", &["a", "b"]);
        t.rows.push(vec![1.0, -2.5e-7]);
        let text = String::from_utf8(t.to_csv().unwrap()).unwrap();
        assert_eq!(text, "a,b\n1.00000000000e0,-2.50000000000e-7\n");
    }

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round12(0.123456789012345), json!(0.123456789012));
        assert_eq!(round12(f64::NAN), Value::Null);
    }
}
