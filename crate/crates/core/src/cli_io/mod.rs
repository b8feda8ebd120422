//! Experiment configuration, orchestration and CSV output.
//!
//! A configuration is a flat TOML table. Every key has a default, unknown
//! keys are rejected, and the effective configuration is echoed as comment
//! lines at the top of every file written.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{inversion_cost, orientation_profile, rigidity_probe, InversionOptions, OrientationProfile};
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::lattice::{build_box_lattice, build_dislocated_lattice, build_strip_lattice, export_deformation, export_lattice, Lattice, StructureMatrix};
use crate::optimize::MinimizeOptions;
use crate::transitions::{
    dislocated_scaling, folding_barrier, forces_demo, g2_estimate, gamma_table, scaling_study, ForcesSpec, SearchOptions,
    WellPair,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    GammaTable,
    Scaling,
    G2,
    InversionCost,
    RigidityProbe,
    ForcesDemo,
    BoundaryGamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKindName {
    KuhnBox,
    Strip,
    Hexagonal,
    Fcc,
    Bcc,
    Dislocated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub kind: LatticeKindName,
    #[serde(rename = "N")]
    pub n: usize,
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub lambda: f64,
    pub rho: f64,
    pub p: f64,
    pub c1: f64,
    pub c2: f64,
    pub seed: u64,
    pub tol: f64,
    pub max_iters: usize,
    pub restarts: usize,
    pub m_schedule: Vec<usize>,
    /// Scaling study: thicknesses.
    pub k_list: Vec<usize>,
    /// Scaling study: well pair label (`I-lamI` or `I-lamJ`).
    pub pair: String,
    pub folding: bool,
    /// g2: interface normal (empty means e_1) and cube sides.
    pub nu: Vec<f64>,
    pub t_list: Vec<usize>,
    /// Rigidity probe sample count.
    pub samples: usize,
    /// Forces demo: tangential load and switch position.
    pub f1: f64,
    pub a: i64,
    /// Boundary gamma: perturbation amplitudes of B around H.
    pub amplitudes: Vec<f64>,
    /// Write deformation files next to the tables.
    pub export_deformations: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::GammaTable,
            kind: LatticeKindName::Strip,
            n: 2,
            k: 1,
            l: 16,
            lambda: 1.0,
            rho: 1.0,
            p: 2.0,
            c1: 1.0,
            c2: 1.0,
            seed: 0,
            tol: 1e-8,
            max_iters: 10_000,
            restarts: 3,
            m_schedule: vec![4, 8, 16],
            k_list: vec![2, 4, 8],
            pair: WellPair::ILamI.label().to_string(),
            folding: true,
            nu: Vec::new(),
            t_list: vec![4, 8, 16],
            samples: 1000,
            f1: 0.1,
            a: 0,
            amplitudes: vec![0.2, 0.1, 0.05],
            export_deformations: false,
        }
    }
}

fn value_error(key: &str, message: impl Into<String>) -> Error {
    Error::ConfigValue { key: key.to_string(), message: message.into() }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Parse and validate a TOML configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        let line = e.span().map(|s| line_of(text, s.start)).unwrap_or(1);
        if let Some(key) = message.strip_prefix("unknown field `").and_then(|m| m.split('`').next()) {
            Error::ConfigValue { key: key.to_string(), message: format!("unknown key (line {line})") }
        } else {
            Error::ConfigSyntax { line, message }
        }
    })?;
    config.validate()?;
    Ok(config)
}

pub fn serialize_config(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("configuration serializes")
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(value_error("lambda", "λ ∈ (0,1]"));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(value_error("rho", "ρ ∈ (0,1]"));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(value_error("p", "p must be a finite number >= 1"));
        }
        for (key, c) in [("c1", self.c1), ("c2", self.c2)] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(value_error(key, "bond coefficients must be positive"));
            }
        }
        if !(2..=3).contains(&self.n) {
            return Err(value_error("N", "N must be 2 or 3"));
        }
        let needs = match self.kind {
            LatticeKindName::Hexagonal | LatticeKindName::Dislocated => Some(2),
            LatticeKindName::Fcc | LatticeKindName::Bcc => Some(3),
            _ => None,
        };
        if needs.is_some_and(|d| d != self.n) {
            return Err(value_error("N", format!("lattice kind {:?} needs N = {}", self.kind, needs.unwrap())));
        }
        if self.k == 0 {
            return Err(value_error("k", "k must be positive"));
        }
        if self.l < 3 {
            return Err(value_error("L", "L must be at least 3"));
        }
        if !(self.tol > 0.0) {
            return Err(value_error("tol", "tolerance must be positive"));
        }
        if self.max_iters == 0 {
            return Err(value_error("max_iters", "must be positive"));
        }
        if self.m_schedule.is_empty() || self.m_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(value_error("m_schedule", "must be a nonempty increasing list"));
        }
        if self.k_list.is_empty() || self.k_list.contains(&0) || self.k_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(value_error("k_list", "must be an increasing list of positive integers"));
        }
        if self.t_list.is_empty() || self.t_list.contains(&0) || self.t_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(value_error("t_list", "must be an increasing list of positive integers"));
        }
        if !matches!(WellPair::parse(&self.pair), Some(WellPair::ILamI | WellPair::ILamJ)) {
            return Err(value_error("pair", "must be `I-lamI` or `I-lamJ`"));
        }
        let norm: f64 = self.nu.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !self.nu.is_empty() && (self.nu.len() != self.n || (norm - 1.0).abs() > 1e-9) {
            return Err(value_error("nu", "must be a unit vector of length N"));
        }
        if self.samples < 100 {
            return Err(value_error("samples", "at least 100 samples"));
        }
        if !(self.f1 > 0.0) {
            return Err(value_error("f1", "tangential load must be positive"));
        }
        if self.amplitudes.iter().any(|a| !(*a > 0.0)) {
            return Err(value_error("amplitudes", "amplitudes must be positive"));
        }
        Ok(())
    }

    pub fn normal(&self) -> Vec<f64> {
        if self.nu.is_empty() {
            (0..self.n).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect()
        } else {
            self.nu.clone()
        }
    }

    pub fn structure_matrix(&self) -> StructureMatrix {
        match self.kind {
            LatticeKindName::Hexagonal | LatticeKindName::Dislocated => StructureMatrix::hexagonal(),
            LatticeKindName::Fcc => StructureMatrix::fcc(),
            LatticeKindName::Bcc => StructureMatrix::bcc(),
            LatticeKindName::KuhnBox | LatticeKindName::Strip => StructureMatrix::identity(self.n),
        }
    }

    pub fn model(&self) -> Result<EnergyModel> {
        EnergyModel::new(self.p, self.c1, self.c2, self.lambda, self.structure_matrix())
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions::with(self.tol, self.max_iters)
    }

    pub fn search(&self) -> SearchOptions {
        SearchOptions { m_schedule: self.m_schedule.clone(), opts: self.minimize_options(), restarts: self.restarts, seed: self.seed }
    }

    /// The lattice described by `kind`, `N`, `k`, `L`, `lambda`, `rho`.
    pub fn lattice(&self) -> Result<Lattice> {
        let h = self.structure_matrix();
        match self.kind {
            LatticeKindName::KuhnBox => build_box_lattice(self.n, &vec![2 * self.l + 1; self.n], 1, &h),
            LatticeKindName::Dislocated => build_dislocated_lattice(self.rho, self.k, self.l, self.lambda),
            _ => build_strip_lattice(self.n, self.k, self.l, self.lambda, &h),
        }
    }
}

/// Comment header: artifact version and the effective configuration.
pub fn header(config: &ExperimentConfig, notes: &[String]) -> String {
    let mut out = format!("# wirelattice {VERSION}\n");
    for line in serialize_config(config).lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    for n in notes {
        out.push_str("# ");
        out.push_str(n);
        out.push('\n');
    }
    out
}

/// Rows rendered with `Display`, which prints f64 in shortest round-trip form.
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn s(v: impl Display) -> String {
    v.to_string()
}

/// A file produced by an experiment, before it is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub name: String,
    pub contents: String,
}

fn csv_output(name: &str, config: &ExperimentConfig, notes: &[String], table: &Table) -> Result<Output> {
    Ok(Output { name: name.to_string(), contents: header(config, notes) + &table.to_csv()? })
}

pub fn profile_table(profile: &OrientationProfile) -> Table {
    let mut t = Table::new(&["slab_start", "slab_end", "label", "mean_dist_rot", "mean_dist_refl"]);
    for sl in &profile.slabs {
        t.push(vec![s(sl.start), s(sl.end), s(sl.label.as_str()), s(sl.mean_dist_rot), s(sl.mean_dist_refl)]);
    }
    t
}

const UPPER_BOUND_NOTE: &str = "values are estimates (upper bounds) of infima";

/// Run the configured experiment and return its output files.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<Output>> {
    config.validate()?;
    let model = config.model()?;
    let search = config.search();
    let mut outputs = Vec::new();
    match config.experiment {
        Experiment::GammaTable => {
            let table = gamma_table(config.k, &model, &search)?;
            let mut t = Table::new(&["pair", "k", "M", "value", "converged", "restarts"]);
            for (pair, est) in &table.rows {
                for pt in &est.points {
                    t.push(vec![s(pair.label()), s(config.k), s(pt.m), s(pt.value), s(pt.converged), s(pt.restarts)]);
                }
            }
            let mut notes = vec![UPPER_BOUND_NOTE.to_string()];
            if let Some(w) = table.interface_winner() {
                notes.push(format!("cheaper interface transition: {}", w.label()));
            }
            outputs.push(csv_output("gamma.csv", config, &notes, &t)?);
            for (pair, est) in &table.rows {
                let tag = pair.label();
                if model.h.dim() == est.lattice.dim() {
                    let wells = crate::transitions::wells_for(&est.left, &est.right, model.lambda).unwrap_or(model.wells);
                    let m = model.clone().with_wells(wells);
                    if let Ok(profile) = orientation_profile(&est.lattice, &est.best.u, &m) {
                        outputs.push(csv_output(&format!("profile_{tag}.csv"), config, &[], &profile_table(&profile))?);
                    }
                }
                if config.export_deformations {
                    outputs.push(Output {
                        name: format!("deformation_{tag}.txt"),
                        contents: header(config, &[]) + &export_deformation(&est.lattice, &est.best.u),
                    });
                }
            }
        }
        Experiment::Scaling => {
            let n = if config.kind == LatticeKindName::Dislocated { 2 } else { config.n };
            let study = if config.kind == LatticeKindName::Dislocated {
                dislocated_scaling(config.rho, &config.k_list, &model, &search)?
            } else {
                let pair = WellPair::parse(&config.pair).expect("validated pair");
                scaling_study(pair, &config.k_list, &model, &search, config.folding)?
            };
            let c1 = format!("value_per_k^{}", n - 1);
            let c2 = format!("value_per_k^{n}");
            let mut t = Table::new(&["k", "value", &c1, &c2, "folding_bound", "M", "converged", "pair"]);
            for r in &study.rows {
                let fb = r.folding_bound.map(s).unwrap_or_default();
                t.push(vec![s(r.k), s(r.value), s(r.per_k_n1), s(r.per_k_n), fb, s(r.m), s(r.converged), s(r.pair.label())]);
            }
            let mut notes = vec![UPPER_BOUND_NOTE.to_string()];
            if let Some(v) = study.seed_value {
                notes.push(format!("k = 1 seed value for the folding bound: {v}"));
            }
            outputs.push(csv_output("scaling.csv", config, &notes, &t)?);
        }
        Experiment::G2 => {
            let model = EnergyModel { lambda: 1.0, ..model };
            let normal = config.normal();
            let rows = g2_estimate(&normal, &config.t_list, &model, &config.minimize_options())?;
            let nu = normal.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
            let mut t = Table::new(&["nu", "T", "estimate", "sharp_value", "converged"]);
            for r in &rows {
                t.push(vec![nu.clone(), s(r.t), s(r.estimate), s(r.sharp_value), s(r.converged)]);
            }
            outputs.push(csv_output("g2.csv", config, &[UPPER_BOUND_NOTE.to_string()], &t)?);
        }
        Experiment::InversionCost => {
            let opts = InversionOptions { restarts: config.restarts.max(1) + 5, seed: config.seed, ..InversionOptions::default() };
            let c = inversion_cost(&model.h, config.p, &opts)?;
            let mut t = Table::new(&["N", "p", "seed", "value", "same_cube", "det_product", "feasible_runs", "total_runs"]);
            t.push(vec![s(config.n), s(config.p), s(config.seed), s(c.value), s(c.pair.same_cube), s(c.det_product), s(c.feasible_runs), s(c.total_runs)]);
            outputs.push(csv_output("inversion_cost.csv", config, &["empirical constant: minimum over pairs and restarts".to_string()], &t)?);
        }
        Experiment::RigidityProbe => {
            let r = rigidity_probe(&model.h, config.p, config.samples, config.seed)?;
            let argmax = r.argmax.transpose().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
            let mut t = Table::new(&["N", "p", "samples", "skipped", "constant", "constant_nonnegative_det", "argmax_rows"]);
            t.push(vec![s(config.n), s(config.p), s(r.samples), s(r.skipped), s(r.constant), s(r.constant_nonnegative_det), argmax]);
            outputs.push(csv_output("rigidity.csv", config, &[], &t)?);
        }
        Experiment::ForcesDemo => {
            let m = *config.m_schedule.last().unwrap();
            let spec = ForcesSpec {
                k: config.k,
                l: config.l,
                transition_half_length: m,
                a: config.a,
                f1: config.f1,
                search: search.clone(),
            };
            let d = forces_demo(&spec)?;
            let mut t = Table::new(&["amplitude", "folded_total", "unfolded_total", "folded_wins"]);
            for (amp, (f, u)) in [(d.amplitude_below, d.totals_below), (d.amplitude_above, d.totals_above)] {
                t.push(vec![s(amp), s(f), s(u), s(f <= u)]);
            }
            let notes = vec![
                format!("fold transition energy: {}", d.fold_energy),
                format!("bisection steps: {}", d.bisection_steps),
                format!("folded competitor wins under a constant-sign radial load: {}", d.folds_under_constant_load),
            ];
            outputs.push(csv_output("forces.csv", config, &notes, &t)?);
        }
        Experiment::BoundaryGamma => {
            let b = folding_barrier(&config.amplitudes, config.k, &model, &search, config.seed)?;
            let mut t = Table::new(&["amplitude", "dist", "entering", "leaving", "two_sided", "gamma_IJ"]);
            for r in &b.rows {
                t.push(vec![s(r.amplitude), s(r.distance), s(r.entering), s(r.leaving), s(r.entering + r.leaving), s(b.gamma_ij)]);
            }
            outputs.push(csv_output("boundary_gamma.csv", config, &[UPPER_BOUND_NOTE.to_string()], &t)?);
        }
    }
    Ok(outputs)
}

/// Plain-text export of the configured lattice.
pub fn lattice_export(config: &ExperimentConfig) -> Result<Output> {
    config.validate()?;
    let lattice = config.lattice()?;
    Ok(Output { name: "lattice.txt".to_string(), contents: header(config, &[]) + &export_lattice(&lattice) })
}

/// Write outputs into `dir` (created if missing) and return their paths.
pub fn write_outputs(dir: &Path, outputs: &[Output]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    outputs
        .iter()
        .map(|o| {
            let path = dir.join(&o.name);
            fs::write(&path, &o.contents)?;
            Ok(path)
        })
        .collect()
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&fs::read_to_string(path)?)
}
