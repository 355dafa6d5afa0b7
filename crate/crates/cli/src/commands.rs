//! Typed configurations and runners for each subcommand.

use std::path::Path;

use conebound::counting::{
    angular_spectrum, assemble_model, counting_curve, fit_log_slope, fit_log_slope_window,
    kirsch_simon_slope, log_grid, write_counting_csv, ModelParams, PotentialTransverse,
    RadialProblem, SlopeTarget, Variant,
};
use conebound::curvature_operator::{ks_constant_with, KsOptions};
use conebound::geometry::{build_curve, sup_curvature, write_curve_csv, CurveSpec, SampledCurve};
use conebound::threshold::{
    agmon_norms, compute_threshold, truncation_sweep, write_sweep_csv, PotentialSpec, SweepOptions,
};
use conebound::Error;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Artifacts produced by a run: the result object and named CSV files.
pub struct Outcome {
    pub result: Value,
    pub files: Vec<(&'static str, Vec<u8>)>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Places a parameter error under the config section it came from.
fn within<'a>(section: &str, family: &'a str) -> impl Fn(Error) -> Error + 'a {
    let section = section.to_string();
    move |e| match e {
        Error::Config { path, message } if path == family => {
            Error::config(section.clone(), message)
        }
        Error::Config { path, message } => Error::config(format!("{section}.{path}"), message),
        other => other,
    }
}

fn curve_from(spec: &CurveSpec, n: usize) -> Result<SampledCurve, Error> {
    build_curve(spec, n).map_err(within("curve", &spec.kind))
}

fn potential_checked(spec: &PotentialSpec) -> Result<(), Error> {
    spec.build()
        .map(|_| ())
        .map_err(within("potential", &spec.family))
}

fn default_samples() -> usize {
    1024
}

/// Logarithmic energy grid from `E_max` down to `E_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    #[serde(rename = "E_max")]
    pub e_max: f64,
    #[serde(rename = "E_min")]
    pub e_min: f64,
    pub per_decade: usize,
}

impl LogGrid {
    fn points(&self, field: &str) -> Result<Vec<f64>, Error> {
        let ok = self.e_max.is_finite()
            && self.e_min > 0.0
            && self.e_min < self.e_max
            && self.per_decade > 0;
        if !ok {
            return Err(Error::config(
                field,
                format!(
                    "need 0 < E_min < E_max and per_decade > 0, got E_max={}, E_min={}, per_decade={}",
                    self.e_max, self.e_min, self.per_decade
                ),
            ));
        }
        Ok(log_grid(self.e_max, self.e_min, self.per_decade))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub curve: CurveSpec,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
}

pub fn run_curve(cfg: &CurveConfig) -> Result<Outcome, Error> {
    let curve = curve_from(&cfg.curve, cfg.n_samples)?;
    let mut csv = Vec::new();
    write_curve_csv(&curve, &mut csv)?;
    Ok(Outcome {
        result: json!({
            "ell": curve.length,
            "kappa_inf": sup_curvature(&curve),
            "mean_kappa": curve.mean_kappa(),
            "kappa_error": curve.kappa_error,
            "under_resolved": curve.under_resolved,
            "n_samples": curve.len(),
        }),
        files: vec![("curve.csv", csv)],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KsConfig {
    pub curve: CurveSpec,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub ks: KsOptions,
}

pub fn run_ks(cfg: &KsConfig) -> Result<Outcome, Error> {
    let curve = curve_from(&cfg.curve, cfg.n_samples)?;
    let report = ks_constant_with(&curve, &cfg.ks)?;
    let mut result = to_value(&report);
    result["kappa_inf"] = json!(sup_curvature(&curve));
    Ok(Outcome {
        result,
        files: Vec::new(),
    })
}

fn default_half_length() -> f64 {
    12.0
}

fn default_points() -> usize {
    2049
}

fn default_h() -> f64 {
    SweepOptions::default().h
}

fn default_eta() -> f64 {
    SweepOptions::default().eta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "L_grid")]
    pub l_grid: Vec<f64>,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default, rename = "L_ref")]
    pub l_ref: Option<f64>,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgmonConfig {
    pub theta: f64,
    #[serde(rename = "R")]
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    pub potential: PotentialSpec,
    #[serde(rename = "L", default = "default_half_length")]
    pub l: f64,
    #[serde(default = "default_points")]
    pub n: usize,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub agmon: Option<AgmonConfig>,
}

pub fn run_threshold(cfg: &ThresholdConfig) -> Result<Outcome, Error> {
    potential_checked(&cfg.potential)?;
    let report = compute_threshold(&cfg.potential, cfg.l, cfg.n)?;
    let mut result = json!({ "threshold": to_value(&report) });
    let mut files = Vec::new();
    match (&cfg.sweep, &cfg.agmon) {
        (None, Some(_)) => {
            return Err(Error::config("agmon", "Agmon norms need a `sweep` section"));
        }
        (Some(s), agmon) => {
            let opts = SweepOptions {
                h: s.h,
                l_ref: s.l_ref,
                eta: s.eta,
            };
            let sweep = truncation_sweep(&cfg.potential, &s.l_grid, &opts)?;
            let agmon = agmon
                .as_ref()
                .map(|a| agmon_norms(&cfg.potential, a.theta, a.r, &s.l_grid, &opts))
                .transpose()?;
            let mut csv = Vec::new();
            write_sweep_csv(&sweep, agmon.as_ref(), &mut csv)?;
            files.push(("sweep.csv", csv));
            result["sweep"] = to_value(&sweep);
            if let Some(a) = agmon {
                result["agmon"] = to_value(&a);
            }
        }
        (None, None) => {}
    }
    Ok(Outcome { result, files })
}

fn default_counting_grid() -> LogGrid {
    LogGrid {
        e_max: 1e-3,
        e_min: 1e-8,
        per_decade: 8,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountingConfig {
    pub problem: RadialProblem,
    /// Used when `problem.E_grid` is empty.
    #[serde(default = "default_counting_grid")]
    pub grid: LogGrid,
    /// `[E_lo, E_hi]` of the slope fit; defaults to all but the top decade.
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
}

impl CountingConfig {
    pub fn default_grid() -> LogGrid {
        default_counting_grid()
    }
}

pub fn run_counting(cfg: &CountingConfig) -> Result<Outcome, Error> {
    let mut problem = cfg.problem.clone();
    if problem.e_grid.is_empty() {
        problem.e_grid = cfg.grid.points("grid")?;
    }
    let curve = counting_curve(&problem)?;
    let fit = |target| match cfg.fit_window {
        Some(w) => fit_log_slope_window(&curve, target, w),
        None => fit_log_slope(&curve, target),
    };
    let fit_count = fit(SlopeTarget::Count)?;
    let fit_phase = fit(SlopeTarget::Phase)?;
    let mut csv = Vec::new();
    write_counting_csv(&curve, &mut csv)?;
    Ok(Outcome {
        result: json!({
            "expected_slope": kirsch_simon_slope(-problem.c_num),
            "fit_count": to_value(&fit_count),
            "fit_phase": to_value(&fit_phase),
            "curve": to_value(&curve),
        }),
        files: vec![("counting.csv", csv)],
    })
}

fn default_delta() -> f64 {
    0.05
}

fn default_model_grid() -> LogGrid {
    LogGrid {
        e_max: 1e-2,
        e_min: 1e-20,
        per_decade: 6,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub variant: Variant,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub c_knob: f64,
    #[serde(default)]
    pub eps_knob: f64,
    #[serde(default, rename = "R")]
    pub r: Option<f64>,
    #[serde(default, rename = "K")]
    pub k: Option<f64>,
    #[serde(default = "default_model_grid")]
    pub grid: LogGrid,
}

impl ModelConfig {
    pub fn default_grid() -> LogGrid {
        default_model_grid()
    }
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            variant: Variant::default(),
            delta: default_delta(),
            c_knob: 0.0,
            eps_knob: 0.0,
            r: None,
            k: None,
            grid: default_model_grid(),
        }
    }
}

fn default_wall() -> PotentialSpec {
    PotentialSpec::hard_wall(1.0)
}

fn default_transverse_points() -> usize {
    1025
}

fn default_level() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssembleConfig {
    pub curve: CurveSpec,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    /// Resolution of the angular operator.
    #[serde(default = "default_samples")]
    pub angular_n: usize,
    /// Angular eigenvalues are kept below this level.
    #[serde(default = "default_level")]
    pub angular_level: f64,
    #[serde(default = "default_wall")]
    pub potential: PotentialSpec,
    #[serde(rename = "L_ref", default = "default_half_length")]
    pub l_ref: f64,
    #[serde(default = "default_transverse_points")]
    pub transverse_n: usize,
    #[serde(default)]
    pub model: ModelConfig,
}

pub fn run_assemble(cfg: &AssembleConfig) -> Result<Outcome, Error> {
    potential_checked(&cfg.potential)?;
    let curve = curve_from(&cfg.curve, cfg.n_samples)?;
    let angular = angular_spectrum(&curve, cfg.angular_n, cfg.angular_level)?;
    let transverse = PotentialTransverse::new(&cfg.potential, cfg.l_ref, cfg.transverse_n)?;
    let m = &cfg.model;
    let params = ModelParams {
        variant: m.variant,
        delta: m.delta,
        c_knob: m.c_knob,
        eps_knob: m.eps_knob,
        r: m.r,
        k: m.k,
        e_grid: m.grid.points("model.grid")?,
    };
    let model = assemble_model(&angular, sup_curvature(&curve), &transverse, &params)?;
    let slope = model.fit_phase.as_ref().map(|f| f.slope);
    let mut csv = Vec::new();
    write_counting_csv(&model.counts, &mut csv)?;
    let mut result = to_value(&model);
    result["slope"] = json!(slope);
    Ok(Outcome {
        result,
        files: vec![("counting.csv", csv)],
    })
}

/// Reads curve samples from a CSV file.
pub fn tabulated_from_csv(path: &Path) -> Result<CurveSpec, Error> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::config("curve.csv", format!("cannot open {}: {e}", path.display())))?;
    let samples = conebound::geometry::read_curve_csv(std::io::BufReader::new(file))?;
    Ok(CurveSpec::tabulated(&samples))
}
