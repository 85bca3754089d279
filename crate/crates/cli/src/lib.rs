//! Experiment driver behind the `thermoform` binary.
//!
//! A run is described by an [`ExperimentConfig`]. [`run_experiment`] parses
//! the map and potential specs, runs one pipeline and returns a [`Report`]
//! whose JSON and CSV encodings depend only on the config.

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};
use thermoform::{
    equilibrium_with_measure, horseshoe_certificate, hyperbolicity_report, induced_gap_series,
    parse_map, parse_potential, periodic_gap_check, repelling_orbits, tree_pressure_series,
    EquilibriumReport, Error, HorseshoeCertificate, HyperbolicityParams, HyperbolicityReport,
    Imfs, InducedGapReport, Interval, IntervalMap, PeriodicGapReport, Potential, Verdict,
};

/// Tolerance of the induced-series consistency inequality.
pub const CONSISTENCY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Pressure,
    Hyperbolicity,
    Equilibrium,
    PeriodicGap,
    Imfs,
    Exactness,
    Theorem1,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Pressure => "pressure",
            Command::Hyperbolicity => "hyperbolicity",
            Command::Equilibrium => "equilibrium",
            Command::PeriodicGap => "periodic-gap",
            Command::Imfs => "imfs",
            Command::Exactness => "exactness",
            Command::Theorem1 => "theorem1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub map_spec: String,
    pub potential_spec: String,
    pub base_points: Vec<f64>,
    /// Tree depth `n_max`.
    pub depth: usize,
    /// Sample count of the sup-average grid.
    pub grid: usize,
    /// Ulam cells `m`.
    pub cells: usize,
    /// Largest `n` in the sup-average sweep.
    pub n_sup: usize,
    /// Orbit period `N` for `periodic-gap`.
    pub period: usize,
    /// Horseshoe window radius.
    pub rho: f64,
    pub k_max: usize,
    /// Induced depth for the horseshoe series.
    pub m_max: usize,
    /// Word time bound for `imfs`.
    pub max_time: usize,
    pub imfs_file: Option<PathBuf>,
    /// Interval for `exactness`.
    pub interval: Option<[f64; 2]>,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn new(command: Command, map_spec: &str, potential_spec: &str) -> Self {
        Self {
            command,
            map_spec: map_spec.to_string(),
            potential_spec: potential_spec.to_string(),
            base_points: vec![0.75],
            depth: 14,
            grid: 100_000,
            cells: 4096,
            n_sup: 6,
            period: 1,
            rho: 0.2,
            k_max: 8,
            m_max: 8,
            max_time: 10,
            imfs_file: None,
            interval: None,
            format: Format::Json,
        }
    }

    /// Rejects non-positive numeric parameters.
    pub fn validate(&self) -> Result<(), RunError> {
        let counts = [
            ("depth", self.depth),
            ("grid", self.grid),
            ("cells", self.cells),
            ("nsup", self.n_sup),
            ("period", self.period),
            ("kmax", self.k_max),
            ("m-max", self.m_max),
            ("max-time", self.max_time),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(RunError::Parse(format!("--{name} must be positive")));
            }
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(RunError::Parse("--rho must be positive".into()));
        }
        if self.base_points.is_empty() {
            return Err(RunError::Parse("at least one base point is required".into()));
        }
        if let Some(x) = self.base_points.iter().find(|x| !x.is_finite()) {
            return Err(RunError::Parse(format!("base point `{x}` is not finite")));
        }
        if let Some([lo, hi]) = self.interval {
            if !(lo < hi) {
                return Err(RunError::Parse(format!("interval [{lo}, {hi}] is empty")));
            }
        }
        Ok(())
    }
}

/// Failure classes of a run, each with its own exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    Parse(String),
    Budget(String),
    Io(String),
    Failed(Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Parse(_) => 2,
            RunError::Budget(_) => 4,
            RunError::Io(_) | RunError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Parse(s) => write!(f, "parse error: {s}"),
            RunError::Budget(s) => write!(f, "budget error: {s}"),
            RunError::Io(s) => write!(f, "i/o error: {s}"),
            RunError::Failed(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } => RunError::Parse(e.to_string()),
            Error::Budget { .. } => RunError::Budget(e.to_string()),
            other => RunError::Failed(other),
        }
    }
}

/// Output of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: Command,
    /// Subcommand-specific body.
    pub body: Value,
    pub csv: String,
    /// False when a strictness or consistency verdict failed.
    pub passed: bool,
}

impl Report {
    /// Pretty JSON with sorted keys; `config` and `meta` are included only when given.
    pub fn to_json(&self, config: Option<&ExperimentConfig>, meta: Option<Value>) -> String {
        let mut doc = serde_json::Map::new();
        doc.insert("command".into(), json!(self.command.name()));
        if let Some(c) = config {
            doc.insert("config".into(), to_value(c));
        }
        doc.insert("passed".into(), json!(self.passed));
        doc.insert("report".into(), self.body.clone());
        if let Some(m) = meta {
            doc.insert("meta".into(), m);
        }
        let mut out = serde_json::to_string_pretty(&Value::Object(doc)).expect("serializable");
        out.push('\n');
        out
    }
}

/// Combined verdict of the hyperbolicity and equilibrium pipelines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub hyperbolicity: HyperbolicityReport,
    pub equilibrium: EquilibriumReport,
    /// Hyperbolic verdict implies positive entropy and Lyapunov exponent.
    pub consistency: bool,
}

impl Theorem1Report {
    pub fn new(hyperbolicity: HyperbolicityReport, equilibrium: EquilibriumReport) -> Self {
        let flags = equilibrium.flags;
        let consistency = hyperbolicity.verdict != Verdict::Hyperbolic
            || (flags.entropy_positive && flags.lyapunov_positive);
        Self {
            hyperbolicity,
            equilibrium,
            consistency,
        }
    }
}

/// Gap check at one orbit, with the horseshoe pipeline when a certificate exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitGapEntry {
    pub gap: PeriodicGapReport,
    pub at_endpoint: bool,
    pub certificate: Option<HorseshoeCertificate>,
    pub induced: Option<InducedGapReport>,
    /// `gap.margin ≥ induced.margin / K − tol`; absent without a certificate.
    pub consistent: Option<bool>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImfsEntry {
    pub x0: f64,
    pub star_property: bool,
    pub free: bool,
    /// Distinct word-image points per time `1..=max_time`.
    pub distinct_points: Vec<usize>,
}

/// Parses both specs, rejecting bad tokens before any computation.
pub fn parse_specs(map_spec: &str, potential_spec: &str) -> Result<(Arc<IntervalMap>, Potential), RunError> {
    let map = Arc::new(parse_map(map_spec)?);
    let phi = parse_potential(potential_spec, &map)?;
    Ok((map, phi))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, RunError> {
    config.validate()?;
    let (map, phi) = parse_specs(&config.map_spec, &config.potential_spec)?;
    let imfs_text = match (&config.command, &config.imfs_file) {
        (Command::Imfs, Some(path)) => Some(
            std::fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?,
        ),
        _ => None,
    };
    let x0 = config.base_points[0];
    match config.command {
        Command::Pressure => pressure(config, &map, &phi),
        Command::Hyperbolicity => {
            let report = hyperbolicity_report(&map, &phi, &hyperbolicity_params(config, x0))?;
            Ok(Report {
                command: config.command,
                csv: report.series.to_csv(),
                passed: report.verdict == Verdict::Hyperbolic,
                body: to_value(&report),
            })
        }
        Command::Equilibrium => {
            let (report, measure) = equilibrium_with_measure(&map, &phi, config.cells, f64::NAN)?;
            let report = EquilibriumReport::from_measure(
                &map,
                &phi,
                &measure,
                report.pressure_ulam,
                report.pressure_ulam,
            )?;
            Ok(Report {
                command: config.command,
                csv: measure.to_csv(),
                passed: report.flags.ruelle_ok,
                body: to_value(&report),
            })
        }
        Command::PeriodicGap => periodic_gap(config, &map, &phi),
        Command::Imfs => imfs(config, &map, imfs_text.as_deref()),
        Command::Exactness => exactness(config, &map),
        Command::Theorem1 => {
            let hyp = hyperbolicity_report(&map, &phi, &hyperbolicity_params(config, x0))?;
            let (eq, measure) = equilibrium_with_measure(&map, &phi, config.cells, hyp.pressure_ulam)?;
            let report = Theorem1Report::new(hyp, eq);
            Ok(Report {
                command: config.command,
                csv: measure.to_csv(),
                passed: report.consistency,
                body: to_value(&report),
            })
        }
    }
}

fn hyperbolicity_params(config: &ExperimentConfig, x0: f64) -> HyperbolicityParams {
    HyperbolicityParams {
        base_point: x0,
        n_max: config.depth,
        n_sup: config.n_sup,
        grid: config.grid,
        cells: config.cells,
    }
}

fn pressure(config: &ExperimentConfig, map: &IntervalMap, phi: &Potential) -> Result<Report, RunError> {
    let series = config
        .base_points
        .iter()
        .map(|&x| tree_pressure_series(map, phi, x, config.depth))
        .collect::<Result<Vec<_>, _>>()?;
    // One base point keeps the plain `n,p_n,leaf_count` schema.
    let csv = if let [single] = series.as_slice() {
        single.to_csv()
    } else {
        let mut csv = String::from("x0,n,p_n,leaf_count\n");
        for s in &series {
            for line in s.to_csv().lines().skip(1) {
                csv.push_str(&format!("{},{line}\n", s.base_point));
            }
        }
        csv
    };
    Ok(Report {
        command: config.command,
        body: json!({ "series": to_value(&series) }),
        csv,
        passed: true,
    })
}

fn periodic_gap(config: &ExperimentConfig, map: &IntervalMap, phi: &Potential) -> Result<Report, RunError> {
    let orbits: Vec<_> = repelling_orbits(map, config.period)?
        .into_iter()
        .filter(|o| o.orbit.period == config.period)
        .collect();
    if orbits.is_empty() {
        return Err(RunError::Failed(Error::NotFound(format!(
            "no repelling orbit of period {}",
            config.period
        ))));
    }
    let mut entries = Vec::with_capacity(orbits.len());
    for ro in &orbits {
        let gap = periodic_gap_check(map, phi, &ro.orbit, config.depth)?;
        let mut entry = OrbitGapEntry {
            gap,
            at_endpoint: ro.at_endpoint,
            certificate: None,
            induced: None,
            consistent: None,
            warnings: Vec::new(),
        };
        if !ro.at_endpoint {
            match horseshoe_certificate(map, &ro.orbit, config.rho, config.k_max) {
                Ok(cert) => {
                    let induced = induced_gap_series(map, phi, &cert, config.m_max)?;
                    entry.consistent = Some(
                        entry.gap.margin >= induced.margin / cert.k as f64 - CONSISTENCY_TOL,
                    );
                    entry.certificate = Some(cert);
                    entry.induced = Some(induced);
                }
                Err(Error::NotFound(msg)) => entry.warnings.push(format!("no certificate: {msg}")),
                Err(e) => return Err(e.into()),
            }
        }
        entries.push(entry);
    }
    // Endpoint orbits are reported but only decide the verdict when no interior orbit exists.
    let decisive: Vec<&OrbitGapEntry> = if entries.iter().any(|e| !e.at_endpoint) {
        entries.iter().filter(|e| !e.at_endpoint).collect()
    } else {
        entries.iter().collect()
    };
    let margin = decisive
        .iter()
        .map(|e| e.gap.margin)
        .fold(f64::INFINITY, f64::min);
    let passed = decisive.iter().all(|e| {
        e.gap.strict
            && e.induced.as_ref().is_none_or(|i| i.strict)
            && e.consistent.unwrap_or(true)
    });
    let mut csv = String::from("x0,period,lhs,rhs,margin,strict\n");
    for e in &entries {
        let g = &e.gap;
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            g.x0, g.period, g.lhs, g.rhs, g.margin, g.strict
        ));
    }
    Ok(Report {
        command: config.command,
        body: json!({ "margin": margin, "strict": passed, "orbits": to_value(&entries) }),
        csv,
        passed,
    })
}

fn imfs(config: &ExperimentConfig, map: &Arc<IntervalMap>, text: Option<&str>) -> Result<Report, RunError> {
    let system = match text {
        Some(t) => Imfs::parse(t, Arc::clone(map))?,
        None => Imfs::full_shift(Arc::clone(map), map.domain())?,
    };
    let mut entries = Vec::with_capacity(config.base_points.len());
    for &x0 in &config.base_points {
        let levels = system.enumerate(x0, config.max_time)?;
        entries.push(ImfsEntry {
            x0,
            star_property: system.star_property_check(x0, config.max_time)?,
            free: system.freeness_check(x0, config.max_time)?,
            distinct_points: levels.iter().map(|l| l.distinct_points()).collect(),
        });
    }
    let mut csv = String::from("x0,star_property,free\n");
    for e in &entries {
        csv.push_str(&format!("{},{},{}\n", e.x0, e.star_property, e.free));
    }
    let passed = entries.iter().all(|e| e.free && e.star_property);
    Ok(Report {
        command: config.command,
        body: json!({
            "base": system.base(),
            "branches": to_value(system.branches()),
            "entries": to_value(&entries),
        }),
        csv,
        passed,
    })
}

fn exactness(config: &ExperimentConfig, map: &IntervalMap) -> Result<Report, RunError> {
    let [lo, hi] = config
        .interval
        .ok_or_else(|| RunError::Parse("exactness needs --interval lo,hi".into()))?;
    let u = Interval::new(lo, hi);
    let time = map.exactness_time(&u, config.depth);
    let time_csv = time.map_or(String::new(), |t| t.to_string());
    Ok(Report {
        command: config.command,
        body: json!({ "interval": u, "n_max": config.depth, "time": time }),
        csv: format!("lo,hi,time\n{lo},{hi},{time_csv}\n"),
        passed: time.is_some(),
    })
}

fn to_value<T: Serialize + ?Sized>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}
