//! Command-line front end: single-state reports, table reproduction,
//! parameter scans, Wigner grids and imperfection maps as CSV or JSON.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::dq::{build_dq, to_fock, CMConfig};
use crate::error::Error;
use crate::fock::{brute_force_cm, Truncation, TAIL_TOLERANCE};
use crate::imperfections::{fidelity_heatmap, HeraldedOutputs, ImperfectionParams};
use crate::nongauss::{
    hsd_dq, hsd_scan, wigner_grid, wigner_negativity, PhaseGrid, COVERAGE_TOLERANCE, GRID_POINTS,
    HSD_ALPHA_SQ_RANGE, HSD_R_RANGE, RICHARDSON_TOLERANCE,
};
use crate::squeezing::{
    optimize_cm_squeezing, quadratures, squeezing_scan, table1, table2, ALPHA_SQ_RANGE, ALPHA_SQ_STEP,
    R_RANGE, R_STEP,
};

/// Exit status for malformed or incomplete arguments.
pub const EXIT_USAGE: i32 = 2;
/// Exit status when a computation fails (vanishing probability, coarse grid, ...).
pub const EXIT_NUMERICAL: i32 = 3;

/// The four single-photon-heralded configurations of the imperfection table.
pub const TABLE3_CONFIGS: [(usize, f64, f64); 4] = [(1, 3.05, 0.6), (2, 5.45, 0.8175), (3, 6.00, 0.765), (4, 6.65, 0.7275)];

#[derive(Parser, Debug)]
#[command(
    name = "dqsqueeze",
    version,
    about = "Displaced qudits from conditional photon measurement",
    after_help = "Inputs are |alpha|^2 (real alpha >= 0). CSV output is long format, one header row, LF line endings. \
                  JSON output is one object with `metadata`, `columns`, `data` (row-major) and, for some commands, `summary`."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Photon number of the input number state (maximum n for table commands).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of detected photons (maximum m for table1).
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Coherent intensity |alpha|^2.
    #[arg(long = "alpha-sq", global = true, allow_negative_numbers = true)]
    pub alpha_sq: Option<f64>,
    /// Beam-splitter reflectivity in (0, 1).
    #[arg(long = "R", global = true, allow_negative_numbers = true)]
    pub reflectivity: Option<f64>,
    /// Detector efficiency in [0, 1].
    #[arg(long = "eta-d", global = true, allow_negative_numbers = true)]
    pub eta_d: Option<f64>,
    /// Source purity weight in [0, 1].
    #[arg(long = "eta-s", global = true, allow_negative_numbers = true)]
    pub eta_s: Option<f64>,
    /// Fock truncation (defaults to a heuristic per configuration).
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Points per axis: `N` or `NAxNB`.
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Add achieved-accuracy checks to the output metadata (stderr for CSV).
    #[arg(long = "tolerance-report", global = true)]
    pub tolerance_report: bool,
    /// Record wall time in the metadata (makes reruns differ).
    #[arg(long, global = true)]
    pub timing: bool,
    /// `lo:hi` range of |alpha|^2 for scans and optimization.
    #[arg(long = "alpha-sq-range", global = true)]
    pub alpha_sq_range: Option<String>,
    /// `lo:hi` range of R for scans and optimization.
    #[arg(long = "r-range", global = true)]
    pub r_range: Option<String>,
    /// `lo:hi` range of eta_d for fidelity-map.
    #[arg(long = "eta-d-range", global = true)]
    pub eta_d_range: Option<String>,
    /// `lo:hi` range of eta_s for fidelity-map.
    #[arg(long = "eta-s-range", global = true)]
    pub eta_s_range: Option<String>,
    /// Half-width of the Wigner grid around the displacement.
    #[arg(long, global = true)]
    pub extent: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Coefficients, variances, non-Gaussianity and probabilities of one heralded state.
    #[command(after_help = "Needs --n --m --alpha-sq --R; --eta-d/--eta-s add the realized state.\n\
                            CSV columns: quantity,index,re,im (re holds real-valued quantities).")]
    State,
    /// Quadrature variances over an (|alpha|^2, R) grid.
    #[command(after_help = "Needs --n --m. CSV columns: alpha_sq,R,var_x,var_p,min_var,success_prob.")]
    Scan,
    /// Minimal X variance over the (|alpha|^2, R) box.
    #[command(after_help = "Needs --n --m. CSV columns: n,m,min_var,alpha_sq,R,grid_min_var,boundary_hit.")]
    Optimize,
    /// Optimal squeezing for n <= 4 (or --n) and m <= 4 (or --m).
    #[command(after_help = "CSV columns: n,m,min_var,alpha_sq,R,boundary_hit.")]
    Table1,
    /// Single-photon heralding against the best finite Fock superposition, n <= 6 (or --n).
    #[command(after_help = "CSV columns: n,dq_min_var,fock_min_var,difference,dq_alpha_sq,dq_R.")]
    Table2,
    /// Success probability and Wigner negativity of the four single-photon configurations.
    #[command(after_help = "Efficiencies default to 0.9. CSV columns: \
                            n,m,alpha_sq,R,eta_d,eta_s,success_prob,ideal_success_prob,fidelity,wigner_negativity.")]
    Table3,
    /// Wigner function of one heralded state on a square grid.
    #[command(after_help = "Needs --n --m --alpha-sq --R; --grid gives odd points per axis. CSV columns: x,p,w with x = Re beta, p = Im beta.")]
    Wigner,
    /// Hilbert-Schmidt non-Gaussianity over an (|alpha|^2, R) grid.
    #[command(after_help = "Needs --n --m. CSV columns: alpha_sq,R,hsd,min_var.")]
    HsdScan,
    /// Fidelity between ideal and realized states over (eta_d, eta_s).
    #[command(after_help = "Needs --n --m --alpha-sq --R. CSV columns: eta_d,eta_s,fidelity,success_prob.")]
    FidelityMap,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::State => "state",
            Command::Scan => "scan",
            Command::Optimize => "optimize",
            Command::Table1 => "table1",
            Command::Table2 => "table2",
            Command::Table3 => "table3",
            Command::Wigner => "wigner",
            Command::HsdScan => "hsd-scan",
            Command::FidelityMap => "fidelity-map",
        }
    }

    fn default_format(self) -> Format {
        match self {
            Command::State | Command::Optimize => Format::Json,
            _ => Format::Csv,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Validated run request.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub command: Command,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub cfg: Option<CMConfig>,
    pub imp: Option<ImperfectionParams>,
    pub dim: Option<usize>,
    pub grid: Option<(usize, usize)>,
    pub alpha_sq_range: (f64, f64),
    pub r_range: (f64, f64),
    pub eta_d_range: (f64, f64),
    pub eta_s_range: (f64, f64),
    pub extent: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub tolerance_report: bool,
    pub timing: bool,
}

/// A usage problem, naming the offending flag.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn usage(msg: impl Into<String>) -> UsageError {
    UsageError(msg.into())
}

fn parse_range(flag: &str, text: &str) -> Result<(f64, f64), UsageError> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || usage(format!("--{flag}: expected lo:hi, got {text:?}"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn parse_grid(text: &str) -> Result<(usize, usize), UsageError> {
    let bad = || usage(format!("--grid: expected N or NAxNB, got {text:?}"));
    let parse = |s: &str| s.trim().parse::<usize>().ok().filter(|&v| v >= 1).ok_or_else(bad);
    match text.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => {
            let v = parse(text)?;
            Ok((v, v))
        }
    }
}

impl RunSpec {
    pub fn from_cli(cli: &Cli) -> Result<Self, UsageError> {
        let command = cli.command;
        let range = |flag: &str, v: &Option<String>, default: (f64, f64)| match v {
            Some(t) => parse_range(flag, t),
            None => Ok(default),
        };
        let scan_default = match command {
            Command::Optimize => (ALPHA_SQ_RANGE, R_RANGE),
            _ => (HSD_ALPHA_SQ_RANGE, HSD_R_RANGE),
        };
        let mut spec = RunSpec {
            command,
            n: cli.n,
            m: cli.m,
            cfg: None,
            imp: None,
            dim: cli.dim,
            grid: cli.grid.as_deref().map(parse_grid).transpose()?,
            alpha_sq_range: range("alpha-sq-range", &cli.alpha_sq_range, scan_default.0)?,
            r_range: range("r-range", &cli.r_range, scan_default.1)?,
            eta_d_range: range("eta-d-range", &cli.eta_d_range, (0.5, 1.0))?,
            eta_s_range: range("eta-s-range", &cli.eta_s_range, (0.0, 1.0))?,
            extent: cli.extent,
            out: cli.out.clone(),
            format: cli.format.unwrap_or(command.default_format()),
            tolerance_report: cli.tolerance_report,
            timing: cli.timing,
        };

        if let Some(0) = spec.dim {
            return Err(usage("--dim: must be at least 1"));
        }
        if let Some(e) = spec.extent {
            if !(e > 0.0 && e.is_finite()) {
                return Err(usage("--extent: must be positive"));
            }
        }
        let (a_lo, _) = spec.alpha_sq_range;
        if a_lo < 0.0 {
            return Err(usage("--alpha-sq-range: |alpha|^2 must be >= 0"));
        }
        let (r_lo, r_hi) = spec.r_range;
        if !(r_lo > 0.0 && r_hi < 1.0) {
            return Err(usage("--r-range: R must stay inside (0, 1)"));
        }
        for (flag, (lo, hi)) in [("eta-d-range", spec.eta_d_range), ("eta-s-range", spec.eta_s_range)] {
            if lo < 0.0 || hi > 1.0 {
                return Err(usage(format!("--{flag}: must lie in [0, 1]")));
            }
        }

        let needs_nm = matches!(
            command,
            Command::State | Command::Scan | Command::Optimize | Command::Wigner | Command::HsdScan | Command::FidelityMap
        );
        let needs_point = matches!(command, Command::State | Command::Wigner | Command::FidelityMap);
        if needs_nm {
            if cli.n.is_none() {
                return Err(usage(format!("{}: --n is required", command.name())));
            }
            if cli.m.is_none() {
                return Err(usage(format!("{}: --m is required", command.name())));
            }
        }
        if needs_point {
            let alpha_sq = cli
                .alpha_sq
                .ok_or_else(|| usage(format!("{}: --alpha-sq is required", command.name())))?;
            let r = cli
                .reflectivity
                .ok_or_else(|| usage(format!("{}: --R is required", command.name())))?;
            if !(alpha_sq >= 0.0 && alpha_sq.is_finite()) {
                return Err(usage(format!("--alpha-sq: {alpha_sq} must be finite and >= 0")));
            }
            if !(r > 0.0 && r < 1.0) {
                return Err(usage(format!("--R: {r} must lie in (0, 1)")));
            }
            let cfg = CMConfig::from_alpha_sq(cli.n.unwrap_or(0), cli.m.unwrap_or(0), alpha_sq, r)
                .map_err(|e| usage(e.to_string()))?;
            spec.cfg = Some(cfg);
        }
        if cli.eta_d.is_some() || cli.eta_s.is_some() || command == Command::Table3 {
            let default = if command == Command::Table3 { 0.9 } else { 1.0 };
            let eta_d = cli.eta_d.unwrap_or(default);
            let eta_s = cli.eta_s.unwrap_or(default);
            if !(0.0..=1.0).contains(&eta_d) {
                return Err(usage(format!("--eta-d: {eta_d} must lie in [0, 1]")));
            }
            if !(0.0..=1.0).contains(&eta_s) {
                return Err(usage(format!("--eta-s: {eta_s} must lie in [0, 1]")));
            }
            spec.imp = Some(ImperfectionParams { eta_d, eta_s });
        }
        if command == Command::Table2 && cli.n.is_some_and(|n| n == 0 || n > 8) {
            return Err(usage("--n: table2 supports 1 <= n <= 8"));
        }
        if command == Command::Table1 && cli.n == Some(0) {
            return Err(usage("--n: table1 needs n >= 1"));
        }
        Ok(spec)
    }

    /// Truncation for a configuration: `--dim` if given, else the heuristic.
    fn truncation(&self, cfg: &CMConfig) -> Truncation {
        let heuristic = Truncation::heuristic(cfg.n, cfg.m, cfg.alpha_sq());
        match self.dim {
            Some(d) => {
                if d < heuristic.dim() {
                    eprintln!(
                        "warning: --dim {d} is below the heuristic {} for n={} m={} |alpha|^2={}",
                        heuristic.dim(),
                        cfg.n,
                        cfg.m,
                        format_float(cfg.alpha_sq())
                    );
                }
                Truncation::new(d).expect("validated")
            }
            None => heuristic,
        }
    }

    fn parameters(&self) -> Value {
        let mut p = Map::new();
        let mut put = |k: &str, v: Value| {
            if !v.is_null() {
                p.insert(k.to_string(), v);
            }
        };
        put("n", json!(self.n));
        put("m", json!(self.m));
        if let Some(cfg) = &self.cfg {
            put("alpha_sq", num(cfg.alpha_sq()));
            put("R", num(cfg.reflectivity));
        }
        if let Some(imp) = &self.imp {
            put("eta_d", num(imp.eta_d));
            put("eta_s", num(imp.eta_s));
        }
        put("dim", json!(self.dim));
        if let Some((a, b)) = self.grid {
            put("grid", json!([a, b]));
        }
        match self.command {
            Command::Scan | Command::Optimize | Command::HsdScan => {
                put("alpha_sq_range", json!([num(self.alpha_sq_range.0), num(self.alpha_sq_range.1)]));
                put("r_range", json!([num(self.r_range.0), num(self.r_range.1)]));
            }
            Command::FidelityMap => {
                put("eta_d_range", json!([num(self.eta_d_range.0), num(self.eta_d_range.1)]));
                put("eta_s_range", json!([num(self.eta_s_range.0), num(self.eta_s_range.1)]));
            }
            Command::Wigner => put("extent", self.extent.map_or(Value::Null, num)),
            _ => {}
        }
        Value::Object(p)
    }
}

/// One output value.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Round to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{x:.11e}").parse().expect("formatted float");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Decimal text of a float at 12 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round12(x);
    if r == 0.0 {
        "0".into()
    } else if (1e-5..1e16).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(round12(x)).map_or(Value::Null, Value::Number)
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => num(*v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }
}

/// Tabular result of a command.
#[derive(Debug, Clone, Default)]
pub struct Output {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// JSON-only extras.
    pub summary: Map<String, Value>,
    pub truncation_dim: Option<usize>,
    pub tolerance_report: Map<String, Value>,
}

impl Output {
    fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            ..Default::default()
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self, metadata: Value) -> String {
        let mut top = Map::new();
        top.insert("metadata".into(), metadata);
        top.insert("columns".into(), json!(self.columns));
        let data: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        top.insert("data".into(), Value::Array(data));
        if !self.summary.is_empty() {
            top.insert("summary".into(), Value::Object(self.summary.clone()));
        }
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("serializable");
        s.push('\n');
        s
    }
}

fn tolerances(command: Command) -> Value {
    let mut t = Map::new();
    t.insert("tail_mass".into(), num(TAIL_TOLERANCE));
    match command {
        Command::Optimize | Command::Table1 | Command::Table2 => {
            t.insert("grid_step_alpha_sq".into(), num(ALPHA_SQ_STEP));
            t.insert("grid_step_R".into(), num(R_STEP));
            t.insert("variance_refinement".into(), num(1e-6));
        }
        Command::Wigner | Command::Table3 | Command::State => {
            t.insert("richardson".into(), num(RICHARDSON_TOLERANCE));
            t.insert("grid_coverage".into(), num(COVERAGE_TOLERANCE));
        }
        _ => {}
    }
    t.insert("hsd".into(), num(1e-6));
    Value::Object(t)
}

/// Execute a validated spec.
pub fn run(spec: &RunSpec) -> crate::Result<Output> {
    match spec.command {
        Command::State => run_state(spec),
        Command::Scan => run_scan(spec),
        Command::Optimize => run_optimize(spec),
        Command::Table1 => run_table1(spec),
        Command::Table2 => run_table2(spec),
        Command::Table3 => run_table3(spec),
        Command::Wigner => run_wigner(spec),
        Command::HsdScan => run_hsd_scan(spec),
        Command::FidelityMap => run_fidelity_map(spec),
    }
}

fn wigner_points(spec: &RunSpec) -> crate::Result<usize> {
    match spec.grid {
        None => Ok(GRID_POINTS),
        Some((a, b)) if a == b => Ok(a),
        Some(_) => Err(Error::InvalidParameter {
            name: "grid",
            msg: "Wigner grids are square; give a single point count".into(),
        }),
    }
}

fn complex_pair(z: C64) -> Value {
    json!([num(z.re), num(z.im)])
}

fn run_state(spec: &RunSpec) -> crate::Result<Output> {
    let cfg = spec.cfg.expect("validated");
    let mut out = Output::new(vec!["quantity", "index", "re", "im"]);
    let (state, prob) = build_dq(&cfg)?;
    let q = quadratures(&state);
    let hsd = hsd_dq(&state)?;
    let grid = PhaseGrid::for_state(&state, wigner_points(spec)?)?;
    let wn = wigner_negativity(&state, &grid)?;
    let t = spec.truncation(&cfg);
    out.truncation_dim = Some(t.dim());

    let d = state.displacement();
    out.push(vec!["displacement".into(), Cell::Empty, d.re.into(), d.im.into()]);
    for (k, c) in state.coeffs().iter().enumerate() {
        out.push(vec!["coeff".into(), k.into(), c.re.into(), c.im.into()]);
    }
    let scalar = |out: &mut Output, name: &'static str, v: f64| {
        out.push(vec![name.into(), Cell::Empty, v.into(), Cell::Empty]);
        out.summary.insert(name.into(), num(v));
    };
    scalar(&mut out, "chi", cfg.chi());
    scalar(&mut out, "var_x", q.var_x);
    scalar(&mut out, "var_p", q.var_p);
    scalar(&mut out, "min_var", q.min_var);
    scalar(&mut out, "mean_x", q.mean_x);
    scalar(&mut out, "mean_p", q.mean_p);
    scalar(&mut out, "success_prob", prob);
    scalar(&mut out, "hsd", hsd);
    scalar(&mut out, "wigner_negativity", wn);
    if let Some(imp) = spec.imp {
        let outputs = HeraldedOutputs::new(&cfg, t)?;
        let ideal = to_fock(&state, t)?;
        let (fidelity, realized_prob) = outputs.fidelity_with(&ideal, imp)?;
        scalar(&mut out, "realized_success_prob", realized_prob);
        scalar(&mut out, "fidelity", fidelity);
    }
    out.summary.insert("class".into(), json!(cfg.class().to_string()));
    out.summary.insert("displacement".into(), complex_pair(d));
    out.summary.insert(
        "coeffs".into(),
        Value::Array(state.coeffs().iter().map(|c| complex_pair(*c)).collect()),
    );

    if spec.tolerance_report {
        let psi = to_fock(&state, t)?;
        let (oracle, oracle_prob) = brute_force_cm(cfg.n, cfg.m, cfg.alpha, cfg.reflectivity, t)?;
        let overlap = oracle.overlap(&psi)?.norm();
        out.tolerance_report.insert("oracle_overlap_defect".into(), num((1.0 - overlap).abs()));
        out.tolerance_report.insert("oracle_probability_diff".into(), num((oracle_prob - prob).abs()));
        out.tolerance_report.insert("fock_tail_mass".into(), num((1.0 - psi.norm_sqr()).abs()));
        out.tolerance_report.insert(
            "uncertainty_product_minus_quarter".into(),
            num(q.uncertainty_product() - 0.25),
        );
    }
    Ok(out)
}

fn scan_axes(spec: &RunSpec, default: (usize, usize)) -> crate::Result<(Vec<f64>, Vec<f64>)> {
    let (na, nr) = spec.grid.unwrap_or(default);
    let lin = |(lo, hi): (f64, f64), k: usize| -> Vec<f64> {
        if k == 1 {
            return vec![lo];
        }
        (0..k)
            .map(|i| if i + 1 == k { hi } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 })
            .collect()
    };
    Ok((lin(spec.alpha_sq_range, na), lin(spec.r_range, nr)))
}

fn run_scan(spec: &RunSpec) -> crate::Result<Output> {
    let (n, m) = (spec.n.unwrap(), spec.m.unwrap());
    let (alphas, rs) = scan_axes(spec, (65, 37))?;
    let mut out = Output::new(vec!["alpha_sq", "R", "var_x", "var_p", "min_var", "success_prob"]);
    let points = squeezing_scan(n, m, &alphas, &rs);
    let probs: Vec<f64> = points
        .par_iter()
        .map(|p| {
            CMConfig::from_alpha_sq(n, m, p.alpha_sq, p.reflectivity)
                .map(|c| crate::dq::success_probability(&c))
                .unwrap_or(f64::NAN)
        })
        .collect();
    for (p, prob) in points.iter().zip(probs) {
        out.push(vec![
            p.alpha_sq.into(),
            p.reflectivity.into(),
            p.var_x.into(),
            p.var_p.into(),
            p.var_x.min(p.var_p).into(),
            prob.into(),
        ]);
    }
    Ok(out)
}

fn run_optimize(spec: &RunSpec) -> crate::Result<Output> {
    let (n, m) = (spec.n.unwrap(), spec.m.unwrap());
    let rec = optimize_cm_squeezing(n, m, spec.alpha_sq_range, spec.r_range);
    let mut out = Output::new(vec!["n", "m", "min_var", "alpha_sq", "R", "grid_min_var", "boundary_hit"]);
    out.push(vec![
        n.into(),
        m.into(),
        rec.min_var.into(),
        rec.alpha_sq.into(),
        rec.reflectivity.into(),
        rec.grid_min_var.into(),
        rec.boundary_hit.into(),
    ]);
    if spec.tolerance_report {
        out.tolerance_report.insert("squeezed".into(), json!(rec.squeezed()));
    }
    Ok(out)
}

fn run_table1(spec: &RunSpec) -> crate::Result<Output> {
    let mut out = Output::new(vec!["n", "m", "min_var", "alpha_sq", "R", "boundary_hit"]);
    for rec in table1(spec.n.unwrap_or(4), spec.m.unwrap_or(4)) {
        out.push(vec![
            rec.n.into(),
            rec.m.into(),
            rec.min_var.into(),
            rec.alpha_sq.into(),
            rec.reflectivity.into(),
            rec.boundary_hit.into(),
        ]);
    }
    Ok(out)
}

fn run_table2(spec: &RunSpec) -> crate::Result<Output> {
    let mut out = Output::new(vec!["n", "dq_min_var", "fock_min_var", "difference", "dq_alpha_sq", "dq_R"]);
    for row in table2(spec.n.unwrap_or(6)) {
        out.push(vec![
            row.n.into(),
            row.dq.min_var.into(),
            row.fock.min_var.into(),
            row.difference.into(),
            row.dq.alpha_sq.into(),
            row.dq.reflectivity.into(),
        ]);
    }
    Ok(out)
}

fn run_table3(spec: &RunSpec) -> crate::Result<Output> {
    let imp = spec.imp.expect("table3 always has efficiencies");
    let points = wigner_points(spec)?;
    let mut out = Output::new(vec![
        "n",
        "m",
        "alpha_sq",
        "R",
        "eta_d",
        "eta_s",
        "success_prob",
        "ideal_success_prob",
        "fidelity",
        "wigner_negativity",
    ]);
    let mut dims = Vec::new();
    for (n, a2, r) in TABLE3_CONFIGS {
        let cfg = CMConfig::from_alpha_sq(n, 1, a2, r)?;
        let t = spec.truncation(&cfg);
        dims.push(t.dim());
        let (state, ideal_prob) = build_dq(&cfg)?;
        let outputs = HeraldedOutputs::new(&cfg, t)?;
        let (fidelity, prob) = outputs.fidelity_with(&to_fock(&state, t)?, imp)?;
        let wn = wigner_negativity(&state, &PhaseGrid::for_state(&state, points)?)?;
        out.push(vec![
            n.into(),
            1usize.into(),
            a2.into(),
            r.into(),
            imp.eta_d.into(),
            imp.eta_s.into(),
            prob.into(),
            ideal_prob.into(),
            fidelity.into(),
            wn.into(),
        ]);
    }
    out.truncation_dim = dims.into_iter().max();
    Ok(out)
}

fn run_wigner(spec: &RunSpec) -> crate::Result<Output> {
    let cfg = spec.cfg.expect("validated");
    let (state, _) = build_dq(&cfg)?;
    let points = wigner_points(spec)?;
    let layout = match spec.extent {
        Some(h) => {
            let d = state.displacement();
            PhaseGrid::layout((d.re - h, d.re + h), (d.im - h, d.im + h), points, points)?
        }
        None => PhaseGrid::for_state(&state, points)?,
    };
    let grid = wigner_grid(&state, &layout);
    let mut out = Output::new(vec!["x", "p", "w"]);
    for i in 0..grid.nx {
        for j in 0..grid.np {
            out.push(vec![grid.x(i).into(), grid.p(j).into(), grid.values[(i, j)].into()]);
        }
    }
    let integral = grid.integrate(|w| w);
    out.summary.insert("integral".into(), num(integral));
    if spec.tolerance_report {
        out.tolerance_report.insert("normalization_defect".into(), num((integral - 1.0).abs()));
        out.tolerance_report.insert("edge_ratio".into(), num(grid.edge_ratio()));
        match wigner_negativity(&state, &layout) {
            Ok(wn) => {
                out.tolerance_report.insert("wigner_negativity".into(), num(wn));
            }
            Err(e) => {
                out.tolerance_report.insert("wigner_negativity_error".into(), json!(e.to_string()));
            }
        }
    }
    Ok(out)
}

fn run_hsd_scan(spec: &RunSpec) -> crate::Result<Output> {
    let (n, m) = (spec.n.unwrap(), spec.m.unwrap());
    let (alphas, rs) = scan_axes(spec, (65, 37))?;
    let mut out = Output::new(vec!["alpha_sq", "R", "hsd", "min_var"]);
    let points = hsd_scan(n, m, &alphas, &rs);
    let mut best: Option<&crate::nongauss::HsdPoint> = None;
    for p in &points {
        if p.hsd.is_finite() && best.map_or(true, |b| p.hsd > b.hsd) {
            best = Some(p);
        }
        out.push(vec![p.alpha_sq.into(), p.reflectivity.into(), p.hsd.into(), p.min_var.into()]);
    }
    if let Some(b) = best {
        out.summary.insert(
            "grid_max".into(),
            json!({"hsd": num(b.hsd), "alpha_sq": num(b.alpha_sq), "R": num(b.reflectivity)}),
        );
    }
    Ok(out)
}

fn run_fidelity_map(spec: &RunSpec) -> crate::Result<Output> {
    let cfg = spec.cfg.expect("validated");
    let mut out = Output::new(vec!["eta_d", "eta_s", "fidelity", "success_prob"]);
    let t = spec.truncation(&cfg);
    out.truncation_dim = Some(t.dim());
    let steps = match spec.grid {
        None => 11,
        Some((a, b)) if a == b => a,
        Some(_) => {
            return Err(Error::InvalidParameter {
                name: "grid",
                msg: "fidelity-map uses one step count for both axes".into(),
            })
        }
    };
    for c in fidelity_heatmap(&cfg, spec.eta_d_range, spec.eta_s_range, steps, t)? {
        out.push(vec![c.eta_d.into(), c.eta_s.into(), c.fidelity.into(), c.success_prob.into()]);
    }
    Ok(out)
}

fn render(spec: &RunSpec, out: &Output, wall: Option<f64>) -> String {
    match spec.format {
        Format::Csv => out.to_csv(),
        Format::Json => {
            let mut meta = Map::new();
            meta.insert("tool".into(), json!("dqsqueeze"));
            meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
            meta.insert("command".into(), json!(spec.command.name()));
            meta.insert("parameters".into(), spec.parameters());
            meta.insert("truncation_dim".into(), json!(out.truncation_dim));
            meta.insert("tolerances".into(), tolerances(spec.command));
            if spec.tolerance_report {
                meta.insert("tolerance_report".into(), Value::Object(out.tolerance_report.clone()));
            }
            if let Some(w) = wall {
                meta.insert("wall_time_s".into(), num(w));
            }
            out.to_json(Value::Object(meta))
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter { .. } => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

/// Parse, run and write; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let spec = match RunSpec::from_cli(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let start = Instant::now();
    let out = match run(&spec) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {}: {e}", spec.command.name());
            return exit_code(&e);
        }
    };
    if spec.tolerance_report && spec.format == Format::Csv {
        for (k, v) in &out.tolerance_report {
            eprintln!("tolerance: {k} = {v}");
        }
    }
    let wall = spec.timing.then(|| start.elapsed().as_secs_f64());
    let text = render(&spec, &out, wall);
    let written = match &spec.out {
        Some(path) => std::fs::write(path, text.as_bytes()),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: --out: {e}");
        return EXIT_USAGE;
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(args: &[&str]) -> Result<RunSpec, UsageError> {
        let mut full = vec!["dqsqueeze"];
        full.extend_from_slice(args);
        RunSpec::from_cli(&Cli::try_parse_from(full).unwrap())
    }

    #[test]
    fn float_formatting() {
        assert_eq!(format_float(0.1 + 0.2), "0.3");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_float(-0.0), "0");
        assert_eq!(format_float(1.5e-7), "1.5e-7");
        assert_eq!(format_float(f64::NAN), "nan");
        assert_eq!(round12(2.0f64.sqrt()), 1.41421356237);
    }

    #[test]
    fn grid_and_range_parsing() {
        assert_eq!(parse_grid("201").unwrap(), (201, 201));
        assert_eq!(parse_grid("65x37").unwrap(), (65, 37));
        assert!(parse_grid("0").is_err() && parse_grid("ax3").is_err());
        assert_eq!(parse_range("r", "0.1:0.9").unwrap(), (0.1, 0.9));
        assert!(parse_range("r", "0.9:0.1").is_err());
    }

    #[test]
    fn required_fields_are_named() {
        let e = spec(&["state", "--n", "2", "--m", "1", "--R", "0.5"]).unwrap_err();
        assert!(e.0.contains("--alpha-sq"));
        let e = spec(&["scan", "--m", "1"]).unwrap_err();
        assert!(e.0.contains("--n"));
        let e = spec(&["state", "--n", "1", "--m", "1", "--alpha-sq", "1", "--R", "1.5"]).unwrap_err();
        assert!(e.0.contains("--R"));
        assert!(spec(&["table1"]).is_ok());
    }

    #[test]
    fn coherent_state_report() {
        let s = spec(&["state", "--n", "0", "--m", "0", "--alpha-sq", "4", "--R", "0.5"]).unwrap();
        let out = run(&s).unwrap();
        assert!((out.summary["var_x"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert!((out.summary["var_p"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }
}
