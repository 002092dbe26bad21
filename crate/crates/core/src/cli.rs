//! Command-line front end: one parameter file in, one table out.
//!
//! Exit status is 0 on success, 1 for invalid input, 2 for a numerical
//! failure and 3 when `validate` runs but misses a tolerance. Errors are
//! reported on standard error as `{"code", "message", "context"}`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, ErrorClass, Result};
use crate::kernels::{energy_coeffs, kernel_set, KernelMethod};
use crate::observables::{mean_energy, relative_fluctuation, signal_closed_form, steady_energy_limit, InterferometerConfig};
use crate::oracle::{run_validation, ValidationOptions};
use crate::par;
use crate::params::{ligo_defaults, ForceSpec, LIGO_STRAIN, Model, ModelParams, ParamFile, PhysicalConstants, UnitSystem};
use crate::sensitivity::{
    min_strain_curve, power_window, sigma2_at_optimum, sweep_grid, Axis, Detector, GWSource, SweepSpec,
    DEFAULT_REFLECTIONS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// φ_t, c_t, s_t and the energy coefficients c₀, c₁, c₂
    Kernels,
    /// Mean oscillator energy ⟨b†b⟩
    Energy,
    /// Detector mean, variance and σ² from the closed form
    Signal,
    /// Twin-cavity σ² with its shot / SQL / back-action split
    Sensitivity,
    /// Photon-number and power window, t_max and SQL floor
    Bounds,
    /// σ² over a (t, N, h) grid
    Sweep,
    /// Oracle suite on the natural-units benchmark
    Validate,
    /// Data behind one of the sensitivity figures (with --fig)
    Fig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    General,
    Twin,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "forcemeter", version, about = "Cavity-oscillator interferometer model: tables, bounds and oracle checks")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON parameter file; LIGO-scale defaults when omitted
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Output file; standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Time axis: `x` or `start:stop:points[:log|:lin]`
    #[arg(long = "t", allow_hyphen_values = true)]
    pub t: Option<String>,
    /// Photon-number axis
    #[arg(long = "N")]
    pub photons: Option<String>,
    /// Strain axis; overrides the parameter file's force amplitude
    #[arg(long = "h")]
    pub h: Option<String>,
    /// Figure id for `fig`: 2, 3, 4 or 5
    #[arg(long)]
    pub fig: Option<u8>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trajectories for the stochastic part of `validate`; 0 skips it
    #[arg(long, default_value_t = 10_000)]
    pub trajectories: usize,
    /// Worker threads; the output does not depend on this
    #[arg(long)]
    pub threads: Option<usize>,
    /// Interferometer layout for `signal`
    #[arg(long, value_enum, default_value_t = LayoutArg::Twin)]
    pub layout: LayoutArg,
    /// Beam-splitter reflectivity sigma_r for the general layout
    #[arg(long, default_value_t = 1.0)]
    pub reflectivity: f64,
    /// Cavity round trips used to convert photon number into power
    #[arg(long, default_value_t = DEFAULT_REFLECTIONS)]
    pub reflections: f64,
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    InvalidInput = 1,
    Numerical = 2,
    ValidationFailed = 3,
}

impl From<ErrorClass> for Exit {
    fn from(c: ErrorClass) -> Self {
        match c {
            ErrorClass::InvalidInput => Exit::InvalidInput,
            ErrorClass::Numerical => Exit::Numerical,
        }
    }
}

/// A rendered artifact plus whether it records a passing run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub text: String,
    pub pass: bool,
}

/// Parses `args` (program name first), runs, writes the artifact and
/// returns the exit status. Diagnostics go to `stderr`.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Exit
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return Exit::Ok;
        }
        Err(e) => {
            let report = json!({
                "code": Exit::InvalidInput as i32,
                "message": e.to_string().trim_end(),
                "context": { "kind": "usage" },
            });
            let _ = writeln!(stderr, "{report}");
            return Exit::InvalidInput;
        }
    };
    let result = dispatch(&cfg).and_then(|artifact| {
        match &cfg.out {
            Some(path) => std::fs::write(path, &artifact.text)?,
            None => stdout.write_all(artifact.text.as_bytes())?,
        }
        Ok(artifact.pass)
    });
    match result {
        Ok(true) => Exit::Ok,
        Ok(false) => {
            let report = json!({
                "code": Exit::ValidationFailed as i32,
                "message": "validation tolerances not met",
                "context": { "command": cfg.command },
            });
            let _ = writeln!(stderr, "{report}");
            Exit::ValidationFailed
        }
        Err(e) => {
            let exit = Exit::from(e.class());
            let report = json!({
                "code": exit as i32,
                "message": e.to_string(),
                "context": { "command": cfg.command, "kind": e.kind() },
            });
            let _ = writeln!(stderr, "{report}");
            exit
        }
    }
}

/// Runs one command and renders its table.
pub fn dispatch(cfg: &RunConfig) -> Result<Artifact> {
    check_flags(cfg)?;
    match cfg.threads {
        Some(n) => par::with_threads(n, || dispatch_inner(cfg)),
        None => dispatch_inner(cfg),
    }
}

fn check_flags(cfg: &RunConfig) -> Result<()> {
    match (cfg.command, cfg.fig) {
        (Command::Fig, None) => Err(Error::InvalidInput("`fig` needs --fig 2|3|4|5".into())),
        (Command::Fig, Some(2..=5)) => Ok(()),
        (Command::Fig, Some(id)) => Err(Error::InvalidInput(format!("unknown figure {id}; expected 2, 3, 4 or 5"))),
        (_, Some(_)) => Err(Error::InvalidInput("--fig only applies to `fig`".into())),
        _ => Ok(()),
    }
}

fn dispatch_inner(cfg: &RunConfig) -> Result<Artifact> {
    if cfg.command == Command::Validate {
        return validate(cfg);
    }
    let inputs = Inputs::load(cfg)?;
    let table = match cfg.command {
        Command::Kernels => kernels_table(cfg, &inputs)?,
        Command::Energy => energy_table(cfg, &inputs)?,
        Command::Signal => signal_table(cfg, &inputs)?,
        Command::Sensitivity => sensitivity_table(cfg, &inputs)?,
        Command::Bounds => bounds_table(cfg, &inputs)?,
        Command::Sweep => sweep_table(cfg, &inputs)?,
        Command::Fig => fig_table(cfg, &inputs)?,
        Command::Validate => unreachable!(),
    };
    Ok(Artifact {
        text: table.render(cfg, &inputs)?,
        pass: true,
    })
}

/// Resolved parameter file.
struct Inputs {
    params: ModelParams,
    force: ForceSpec,
    constants: PhysicalConstants,
    /// Strain as written, so it is echoed without a round trip through F_m.
    strain: Option<f64>,
}

impl Inputs {
    fn load(cfg: &RunConfig) -> Result<Self> {
        let ((params, force, constants), strain) = match &cfg.params {
            Some(path) => {
                let file = ParamFile::from_json(&std::fs::read_to_string(path)?)?;
                (file.resolve()?, file.force.as_ref().and_then(|f| f.h))
            }
            None => (ligo_defaults(), Some(LIGO_STRAIN)),
        };
        Ok(Self {
            params,
            force,
            constants,
            strain,
        })
    }

    fn model(&self) -> Result<Model> {
        Model::new(&self.params, &self.force, &self.constants)
    }

    fn base_detector(&self) -> Result<Detector> {
        let mut src = GWSource::from_force(&self.force, &self.params)?;
        if let Some(h) = self.strain {
            src.h = h;
        }
        Detector::new(&self.params, &src, &self.constants)
    }

    /// Detector for the file's source, at the single `--h` value if given.
    fn detector(&self, cfg: &RunConfig) -> Result<Detector> {
        let det = self.base_detector()?;
        match &cfg.h {
            Some(text) => {
                let h = Axis::parse(text)?;
                if h.points != 1 {
                    return Err(Error::InvalidInput(format!(
                        "`{:?}` takes a single --h value; use `sweep` for strain grids",
                        cfg.command
                    )));
                }
                let strain = GWSource::new(h.start, 1.0, 0.0)?.h;
                Ok(det.with_strain(strain))
            }
            None => Ok(det),
        }
    }
}

fn axis(text: &Option<String>, default: &str) -> Result<Vec<f64>> {
    let a = Axis::parse(text.as_deref().unwrap_or(default))?;
    a.validate()?;
    Ok(a.values())
}

/// Rows of one command, kept as serialisable records.
struct Table {
    rows: Vec<Value>,
    csv: Vec<u8>,
    extra: Option<(&'static str, Value)>,
}

impl Table {
    fn new<R: Serialize>(rows: &[R]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(csv_error)?;
        }
        let csv = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        let rows = rows.iter().map(serde_json::to_value).collect::<std::result::Result<_, _>>()?;
        Ok(Self { rows, csv, extra: None })
    }

    fn with_extra(mut self, key: &'static str, value: Value) -> Self {
        self.extra = Some((key, value));
        self
    }

    fn render(self, cfg: &RunConfig, inputs: &Inputs) -> Result<String> {
        match cfg.format {
            Format::Csv => String::from_utf8(self.csv).map_err(|e| Error::InvalidInput(e.to_string())),
            Format::Json => {
                let mut doc = serde_json::Map::new();
                doc.insert("command".into(), serde_json::to_value(cfg.command)?);
                if let Some(id) = cfg.fig {
                    doc.insert("fig".into(), json!(id));
                }
                doc.insert("units".into(), units_block(inputs.constants.units));
                doc.insert(
                    "params".into(),
                    serde_json::to_value(ParamFile::from_parts(&inputs.params, &inputs.force, &inputs.constants))?,
                );
                if let Some((k, v)) = self.extra {
                    doc.insert(k.into(), v);
                }
                doc.insert("rows".into(), Value::Array(self.rows));
                Ok(serde_json::to_string_pretty(&Value::Object(doc))? + "\n")
            }
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv encoding: {e}"))
}

fn units_block(units: UnitSystem) -> Value {
    match units {
        UnitSystem::Si => json!({
            "system": "SI",
            "time": "s",
            "angular_frequency": "rad/s",
            "power": "W",
            "force": "N",
            "mass": "kg",
            "length": "m",
            "energy": "quanta",
            "strain": "1",
            "photons": "1",
        }),
        UnitSystem::Natural => json!({
            "system": "natural",
            "hbar": 1.0,
            "c": 1.0,
            "time": "1/frequency unit of the parameter file",
            "energy": "quanta",
            "photons": "1",
        }),
    }
}

#[derive(Serialize)]
struct KernelRow {
    t: f64,
    phi_t: f64,
    c_t: f64,
    s_t: f64,
    c0: f64,
    c1: f64,
    c2: f64,
}

fn kernels_table(cfg: &RunConfig, inputs: &Inputs) -> Result<Table> {
    let model = inputs.model()?;
    let rows = axis(&cfg.t, "0:1:11:lin")?
        .into_iter()
        .map(|t| {
            let k = kernel_set(t, &model, KernelMethod::ClosedForm)?;
            let e = energy_coeffs(t, &model)?;
            Ok(KernelRow {
                t,
                phi_t: k.phi,
                c_t: k.c,
                s_t: k.s,
                c0: e.c0,
                c1: e.c1,
                c2: e.c2,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Table::new(&rows)
}

#[derive(Serialize)]
struct EnergyRow {
    t: f64,
    photons: f64,
    energy: f64,
    steady_limit: f64,
}

fn energy_table(cfg: &RunConfig, inputs: &Inputs) -> Result<Table> {
    let model = inputs.model()?;
    let ns = axis(&cfg.photons, "1")?;
    let mut rows = Vec::new();
    for t in axis(&cfg.t, "0:1:11:lin")? {
        for &n in &ns {
            rows.push(EnergyRow {
                t,
                photons: n,
                energy: mean_energy(t, n, &model)?,
                steady_limit: steady_energy_limit(n, &model),
            });
        }
    }
    Table::new(&rows)
}

#[derive(Serialize)]
struct SignalRow {
    t: f64,
    photons: f64,
    mean: f64,
    variance: f64,
    sigma2: f64,
    signal_vanishes: bool,
}

fn signal_table(cfg: &RunConfig, inputs: &Inputs) -> Result<Table> {
    let model = inputs.model()?;
    let ns = axis(&cfg.photons, "1")?;
    let mut rows = Vec::new();
    for t in axis(&cfg.t, "0:1:11:lin")? {
        for &n in &ns {
            let layout = match cfg.layout {
                LayoutArg::Twin => InterferometerConfig::twin(n)?,
                LayoutArg::General => InterferometerConfig::general(n, cfg.reflectivity)?,
            };
            let s = signal_closed_form(t, &model, &layout)?;
            rows.push(SignalRow {
                t,
                photons: n,
                mean: s.mean,
                variance: s.variance,
                sigma2: s.sigma2,
                signal_vanishes: s.signal_vanishes,
            });
        }
    }
    Table::new(&rows)
}

#[derive(Serialize)]
struct SensitivityRow {
    t: f64,
    photons: f64,
    sigma2: f64,
    sigma2_approx: f64,
    shot: f64,
    sql: f64,
    back_action: f64,
    detectable: bool,
}

fn sensitivity_table(cfg: &RunConfig, inputs: &Inputs) -> Result<Table> {
    let model = inputs.model()?;
    let ns = axis(&cfg.photons, "1e12")?;
    let mut rows = Vec::new();
    for t in axis(&cfg.t, "1")? {
        for &n in &ns {
            let f = relative_fluctuation(t, n, &model)?;
            rows.push(SensitivityRow {
                t,
                photons: n,
                sigma2: f.exact.sigma2,
                sigma2_approx: f.approx,
                shot: f.terms.shot,
                sql: f.terms.sql,
                back_action: f.terms.back_action,
                detectable: f.exact.sigma2 <= 1.0,
            });
        }
    }
    Table::new(&rows)
}

fn bounds_table(cfg: &RunConfig, inputs: &Inputs) -> Result<Table> {
    let det = inputs.detector(cfg)?;
    let rows = axis(&cfg.t, "1")?
        .into_iter()
        .map(|t| det.bounds(t, cfg.reflections))
        .collect::<Result<Vec<_>>>()?;
    Table::new(&rows)
}

fn sweep_table(cfg: &RunConfig, inputs: &Inputs) -> Result<Table> {
    let det = inputs.base_detector()?;
    let spec = SweepSpec {
        t: Axis::parse(cfg.t.as_deref().unwrap_or("0.01:10000:25:log"))?,
        photons: Axis::parse(cfg.photons.as_deref().unwrap_or("1e6:1e20:29:log"))?,
        h: match &cfg.h {
            Some(text) => Axis::parse(text)?,
            None => Axis::single(det.h),
        },
    };
    Table::new(&sweep_grid(&det, &spec)?)
}

#[derive(Serialize)]
struct Fig2Row {
    t: f64,
    photons: f64,
    sigma2_clipped: f64,
}

fn fig_table(cfg: &RunConfig, inputs: &Inputs) -> Result<Table> {
    let det = inputs.detector(cfg)?;
    let times = |default: &str| -> Result<Axis> {
        let a = Axis::parse(cfg.t.as_deref().unwrap_or(default))?;
        a.validate()?;
        Ok(a)
    };
    match cfg.fig {
        Some(2) => {
            let spec = SweepSpec {
                t: times("0.01:10000:61:log")?,
                photons: Axis::parse(cfg.photons.as_deref().unwrap_or("1e6:1e20:57:log"))?,
                h: Axis::single(det.h),
            };
            let rows: Vec<Fig2Row> = sweep_grid(&det, &spec)?
                .into_iter()
                .map(|r| Fig2Row {
                    t: r.t,
                    photons: r.photons,
                    sigma2_clipped: r.sigma2_clipped,
                })
                .collect();
            Table::new(&rows)
        }
        Some(3) => {
            let rows = sigma2_at_optimum(&det, &times("1:3000:61:log")?)?;
            Ok(Table::new(&rows)?.with_extra("t_max", json!(det.t_max())))
        }
        Some(4) => Table::new(&min_strain_curve(&det, &times("0.01:10000:61:log")?)?),
        Some(5) => Table::new(&power_window(&det, &times("0.01:10000:61:log")?, cfg.reflections)?),
        _ => unreachable!("checked in check_flags"),
    }
}

fn validate(cfg: &RunConfig) -> Result<Artifact> {
    if cfg.params.is_some() {
        return Err(Error::InvalidInput(
            "`validate` runs the fixed natural-units benchmark and takes no --params".into(),
        ));
    }
    let report = run_validation(&ValidationOptions {
        n_traj: cfg.trajectories,
        seed: cfg.seed,
        ..ValidationOptions::default()
    })?;
    let text = match cfg.format {
        Format::Json => {
            let mut doc = serde_json::to_value(&report)?;
            if let Value::Object(map) = &mut doc {
                map.insert("units".into(), units_block(UnitSystem::Natural));
            }
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        Format::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                metric: &'a str,
                value: f64,
                tolerance: f64,
                pass: bool,
            }
            use crate::oracle::{ENERGY_REL_TOL, STOCHASTIC_Z_TOL, TRACE_DISTANCE_TOL};
            let m = &report.metrics;
            let mut rows = vec![
                Row {
                    metric: "max_trace_distance",
                    value: m.max_trace_distance,
                    tolerance: TRACE_DISTANCE_TOL,
                    pass: m.max_trace_distance <= TRACE_DISTANCE_TOL,
                },
                Row {
                    metric: "max_energy_rel_err",
                    value: m.max_energy_rel_err,
                    tolerance: ENERGY_REL_TOL,
                    pass: m.max_energy_rel_err <= ENERGY_REL_TOL,
                },
                Row {
                    metric: "leakage",
                    value: m.leakage,
                    tolerance: report.leakage_tol,
                    pass: m.leakage <= report.leakage_tol,
                },
            ];
            if let Some(s) = &report.stochastic {
                rows.push(Row {
                    metric: "stochastic_z_score",
                    value: s.z_score,
                    tolerance: STOCHASTIC_Z_TOL,
                    pass: s.z_score <= STOCHASTIC_Z_TOL,
                });
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r).map_err(csv_error)?;
            }
            let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
            String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))?
        }
    };
    Ok(Artifact {
        text,
        pass: report.pass,
    })
}
