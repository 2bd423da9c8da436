//! Config-driven runs: transports, Wilson loops, law suites, round trips and
//! convergence tables, with JSON or CSV output and CI exit codes.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::{self, CatalogEntry, CONVERGENCE_STEPS};
use crate::descriptor::{ConnectionDesc, FamilyDesc, PathDesc, PotentialDesc};
use crate::error::{Error, Result};
use crate::gauge::{check_group_laws, check_loop_laws, infinitesimal_check, wilson_loop, GaugePotential, WilsonLoop, DEFAULT_DX};
use crate::linalg::CMatrix;
use crate::linear::{ConvergenceTable, IntegratorConfig, Scheme, LAW_CHECK_STEPS};
use crate::parallel::{check_axioms, check_segment_law, roundtrip_transport, segment, AxiomSuite, FromTransport};
use crate::path::{Interval, Orientation, Path, Reparameterization};
use crate::report::{format_float, to_json_string, LawReport, SCHEMA_VERSION};
use crate::tensor::{check_tensor_laws, orientation_behavior, orientation_taus};
use crate::transport::{check_groupoid, check_reparam, check_restriction, TransportFamily, DEFAULT_GRID_POINTS, DEFAULT_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_LAW_FAILURE: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Transport,
    Wilson,
    Laws,
    Roundtrip,
    Convergence,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Groupoid,
    Restriction,
    Reparameterization,
    Axioms,
    Segment,
    Roundtrip,
    Tensor,
    Group,
    Oracles,
}

pub const ALL_SUITES: [Suite; 9] = [
    Suite::Groupoid,
    Suite::Restriction,
    Suite::Reparameterization,
    Suite::Axioms,
    Suite::Segment,
    Suite::Roundtrip,
    Suite::Tensor,
    Suite::Group,
    Suite::Oracles,
];

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_grid() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_law_steps() -> usize {
    LAW_CHECK_STEPS
}

fn default_samples() -> usize {
    200
}

fn default_convergence_steps() -> Vec<usize> {
    CONVERGENCE_STEPS.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub schema_version: Option<String>,
    pub command: Command,
    /// Catalog entries, by name.
    #[serde(default)]
    pub entries: Vec<String>,
    #[serde(default)]
    pub family: Option<FamilyDesc>,
    /// Shorthand for a connection-driven family.
    #[serde(default)]
    pub connection: Option<ConnectionDesc>,
    #[serde(default)]
    pub potential: Option<PotentialDesc>,
    #[serde(default)]
    pub path: Option<PathDesc>,
    #[serde(default)]
    pub paths: Vec<PathDesc>,
    #[serde(default)]
    pub s: Option<f64>,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// Step floor for checks on nonuniformly parameterized paths.
    #[serde(default = "default_law_steps")]
    pub law_steps: usize,
    #[serde(default)]
    pub suites: Vec<Suite>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub tensor_samples: usize,
    #[serde(default = "default_convergence_steps")]
    pub convergence_steps: Vec<usize>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            schema_version: None,
            command,
            entries: Vec::new(),
            family: None,
            connection: None,
            potential: None,
            path: None,
            paths: Vec::new(),
            s: None,
            t: None,
            grid_points: DEFAULT_GRID_POINTS,
            tol: DEFAULT_TOL,
            integrator: IntegratorConfig::default(),
            law_steps: LAW_CHECK_STEPS,
            suites: Vec::new(),
            seed: 0,
            tensor_samples: 200,
            convergence_steps: CONVERGENCE_STEPS.to_vec(),
            format: Format::Json,
            out: None,
        }
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(json)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = &self.schema_version {
            if v != SCHEMA_VERSION {
                return Err(Error::Descriptor(format!("unsupported schema_version {v:?}")));
            }
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Descriptor(format!("tolerance {} must be positive", self.tol)));
        }
        if self.grid_points < 2 {
            return Err(Error::Descriptor("grid needs at least 2 points".into()));
        }
        self.integrator.validate()?;
        if self.law_steps == 0 || self.convergence_steps.contains(&0) {
            return Err(Error::Descriptor("step counts must be positive".into()));
        }
        if self.family.is_some() && self.connection.is_some() {
            return Err(Error::Descriptor("give either family or connection, not both".into()));
        }
        for name in &self.entries {
            if !catalog::NAMES.contains(&name.as_str()) {
                return Err(Error::Descriptor(format!("unknown catalog entry {name:?}")));
            }
        }
        Ok(())
    }

    fn law_cfg(&self) -> IntegratorConfig {
        IntegratorConfig {
            steps: self.integrator.steps.max(self.law_steps),
            ..self.integrator
        }
    }

    fn family_desc(&self) -> Option<FamilyDesc> {
        self.family.clone().or_else(|| {
            self.connection
                .clone()
                .map(|connection| FamilyDesc::Connection { connection })
        })
    }

    fn suites(&self) -> BTreeSet<Suite> {
        if self.suites.is_empty() {
            ALL_SUITES.into_iter().collect()
        } else {
            self.suites.iter().copied().collect()
        }
    }
}

/// Matrix output of the `transport` command.
#[derive(Clone, Debug, Serialize)]
pub struct TransportOutput {
    pub schema_version: String,
    pub path: String,
    pub s: f64,
    pub t: f64,
    #[serde(serialize_with = "crate::gauge::serialize_matrix")]
    pub matrix: CMatrix,
}

#[derive(Clone, Debug, Serialize)]
pub struct WilsonOutput {
    pub schema_version: String,
    pub path: String,
    #[serde(flatten)]
    pub wilson: WilsonLoop,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceOutput {
    pub schema_version: String,
    pub scheme: Scheme,
    pub tables: Vec<ConvergenceTable>,
}

#[derive(Clone, Debug)]
pub enum Output {
    Transport(TransportOutput),
    Wilson(WilsonOutput),
    Report(LawReport),
    Convergence(ConvergenceOutput),
}

impl Output {
    pub fn to_json(&self) -> Result<String> {
        match self {
            Output::Transport(o) => to_json_string(o),
            Output::Wilson(o) => to_json_string(o),
            Output::Report(r) => r.to_json(),
            Output::Convergence(o) => to_json_string(o),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        match self {
            Output::Report(r) => return r.to_csv(),
            Output::Transport(TransportOutput { matrix, .. })
            | Output::Wilson(WilsonOutput {
                wilson: WilsonLoop {
                    element: crate::gauge::GroupElement { matrix, .. },
                    ..
                },
                ..
            }) => {
                w.write_record(["row", "col", "re", "im"])?;
                for i in 0..matrix.nrows() {
                    for j in 0..matrix.ncols() {
                        let z = matrix[(i, j)];
                        w.write_record([i.to_string(), j.to_string(), format_float(z.re), format_float(z.im)])?;
                    }
                }
            }
            Output::Convergence(o) => {
                w.write_record(["entry", "steps", "residual", "order"])?;
                for t in &o.tables {
                    let order = t.order.map(format_float).unwrap_or_else(|| "exact".into());
                    for (n, r) in t.steps.iter().zip(&t.residuals) {
                        w.write_record([t.label.clone(), n.to_string(), format_float(*r), order.clone()])?;
                    }
                }
            }
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?).expect("csv is utf-8"))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }

    /// True unless this is a report with a failing non-diagnostic entry, or a
    /// convergence table whose order is off by more than 0.3.
    pub fn passed(&self) -> bool {
        match self {
            Output::Report(r) => r.passed(),
            Output::Convergence(o) => o.tables.iter().all(|t| t.order.is_none_or(|p| (p - 2.0).abs() <= 0.3) || o.scheme != Scheme::MidpointMagnus2),
            _ => true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub output: Output,
    pub rendered: String,
    pub exit_code: i32,
}

/// Exit code for an error: descriptor and JSON problems are parse errors,
/// everything else is a numerical failure.
pub fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Json(_) | Error::Descriptor(_) | Error::Csv(_) | Error::Io(_) => EXIT_PARSE,
        Error::Domain(_) | Error::Junction { .. } | Error::Dimension { .. } | Error::Tensor(_) => EXIT_PARSE,
        Error::OpenLoop { .. } => EXIT_PARSE,
        Error::Composition { .. } | Error::Singular { .. } | Error::Numerical(_) | Error::GroupInvariant { .. } => {
            EXIT_NUMERICAL
        }
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let output = match cfg.command {
        Command::Transport => Output::Transport(run_transport(cfg)?),
        Command::Wilson => Output::Wilson(run_wilson(cfg)?),
        Command::Laws => Output::Report(run_laws(cfg)?),
        Command::Roundtrip => Output::Report(run_roundtrip(cfg)?),
        Command::Convergence => Output::Convergence(run_convergence(cfg)?),
    };
    let rendered = output.render(cfg.format)?;
    if let Some(out) = &cfg.out {
        std::fs::write(out, &rendered)?;
    }
    let exit_code = if output.passed() { EXIT_OK } else { EXIT_LAW_FAILURE };
    Ok(Outcome {
        output,
        rendered,
        exit_code,
    })
}

fn single_entry(cfg: &RunConfig) -> Result<Option<CatalogEntry>> {
    match cfg.entries.as_slice() {
        [] => Ok(None),
        [name] => Ok(Some(catalog::by_name(name)?)),
        _ => Err(Error::Descriptor("this command takes at most one catalog entry".into())),
    }
}

fn family_for(cfg: &RunConfig, steps: IntegratorConfig) -> Result<Arc<dyn TransportFamily>> {
    if let Some(f) = cfg.family_desc() {
        return f.build(steps);
    }
    match single_entry(cfg)? {
        Some(e) => Ok(Arc::new(e.family(steps))),
        None => Err(Error::Descriptor("a family or a catalog entry is required".into())),
    }
}

fn first_path(cfg: &RunConfig, entry: Option<&CatalogEntry>) -> Result<Path> {
    if let Some(p) = &cfg.path {
        return p.build();
    }
    if let Some(p) = cfg.paths.first() {
        return p.build();
    }
    entry
        .and_then(|e| e.paths.first().cloned())
        .ok_or_else(|| Error::Descriptor("a path is required".into()))
}

fn run_transport(cfg: &RunConfig) -> Result<TransportOutput> {
    let entry = single_entry(cfg)?;
    let family = family_for(cfg, cfg.integrator)?;
    let path = first_path(cfg, entry.as_ref())?;
    let dom = path.domain();
    let (s, t) = (cfg.s.unwrap_or(dom.a()), cfg.t.unwrap_or(dom.b()));
    let h = family.transport(&path, s, t)?;
    Ok(TransportOutput {
        schema_version: SCHEMA_VERSION.into(),
        path: path.label().to_string(),
        s: h.source(),
        t: h.target(),
        matrix: h.into_matrix(),
    })
}

fn potential_for(cfg: &RunConfig, entry: Option<&CatalogEntry>) -> Result<GaugePotential> {
    if let Some(p) = &cfg.potential {
        return p.build();
    }
    entry
        .and_then(|e| e.potential.clone())
        .ok_or_else(|| Error::Descriptor("a gauge potential is required".into()))
}

fn run_wilson(cfg: &RunConfig) -> Result<WilsonOutput> {
    let entry = single_entry(cfg)?;
    let potential = potential_for(cfg, entry.as_ref())?;
    let path = first_path(cfg, entry.as_ref())?;
    Ok(WilsonOutput {
        schema_version: SCHEMA_VERSION.into(),
        path: path.label().to_string(),
        wilson: wilson_loop(&potential, &path, &cfg.integrator)?,
    })
}

fn grid_on(cfg: &RunConfig, dom: Interval) -> Vec<f64> {
    dom.grid(cfg.grid_points)
}

/// An interior sub-interval: the middle of the domain minus 20% at each end.
fn inner(dom: Interval) -> Result<Interval> {
    Interval::new(dom.a() + 0.2 * dom.len(), dom.b() - 0.2 * dom.len())
}

fn path_taus(dom: Interval) -> Result<Vec<Reparameterization>> {
    Ok(vec![
        Reparameterization::affine(Interval::new(-1.0, 2.0)?, dom, Orientation::Preserving)?,
        Reparameterization::cubic(dom, dom, 0.45, Orientation::Preserving)?,
    ])
}

/// Groupoid, restriction and reparameterization laws of a family on a path.
pub fn transport_laws(
    family: &dyn TransportFamily,
    law_family: &dyn TransportFamily,
    path: &Path,
    suites: &BTreeSet<Suite>,
    grid_points: usize,
    tol: f64,
) -> Result<LawReport> {
    let mut report = LawReport::new();
    let dom = path.domain();
    if dom.is_degenerate() {
        return Ok(report);
    }
    if suites.contains(&Suite::Groupoid) {
        report.extend(check_groupoid(family, path, &dom.grid(grid_points), tol));
    }
    if suites.contains(&Suite::Restriction) {
        let sub = inner(dom)?;
        report.extend(check_restriction(law_family, path, sub, &sub.grid(grid_points), tol));
    }
    if suites.contains(&Suite::Reparameterization) {
        for tau in path_taus(dom)? {
            report.extend(check_reparam(law_family, path, &tau, &tau.source().grid(grid_points), tol));
        }
    }
    Ok(report)
}

fn axiom_laws(
    law_family: &dyn TransportFamily,
    paths: &[Path],
    suites: &BTreeSet<Suite>,
    tol: f64,
) -> Result<LawReport> {
    let mut report = LawReport::new();
    let rule = FromTransport::new(law_family);
    if suites.contains(&Suite::Axioms) {
        report.extend(check_axioms(&rule, &AxiomSuite::from_paths(paths)?, tol));
    }
    if suites.contains(&Suite::Segment) {
        for p in paths.iter().filter(|p| !p.domain().is_degenerate()) {
            let d = p.domain();
            let at = |f: f64| d.a() + f * d.len();
            report.extend(check_segment_law(&rule, p, at(0.1), at(0.45), at(0.9), tol));
        }
    }
    Ok(report)
}

fn gauge_laws(potential: &GaugePotential, paths: &[Path], tol: f64, cfg: &IntegratorConfig, law_cfg: &IntegratorConfig) -> Result<LawReport> {
    let mut report = LawReport::new();
    let tau = Reparameterization::cubic(Interval::unit(), Interval::unit(), 0.4, Orientation::Preserving)?;
    for p in paths.iter().filter(|p| !p.domain().is_degenerate()) {
        let unit = p.canonical()?;
        let first = segment(&unit, 0.0, 0.4)?.canonical()?;
        let second = segment(&unit, 0.4, 1.0)?.canonical()?;
        report.extend(check_group_laws(potential, &first, &second, &tau, tol, law_cfg));
        if p.closure_gap() <= crate::gauge::LOOP_CLOSURE_TOL {
            report.extend(check_loop_laws(potential, &unit, &unit.reverse(), 0.3, tol, cfg));
        }
        let x = p.start();
        let dx: Vec<f64> = (0..x.len()).map(|i| DEFAULT_DX * if i % 2 == 0 { 0.6 } else { 0.8 }).collect();
        report.extend(infinitesimal_check(potential, &x, &dx, tol, cfg)?.report);
    }
    Ok(report)
}

fn entry_laws(entry: &CatalogEntry, cfg: &RunConfig, suites: &BTreeSet<Suite>) -> Result<LawReport> {
    let family = entry.family(cfg.integrator);
    let law_family = entry.family(cfg.law_cfg());
    let mut report = LawReport::new();
    for p in &entry.paths {
        report.extend(transport_laws(&family, &law_family, p, suites, cfg.grid_points, cfg.tol)?);
        if suites.contains(&Suite::Roundtrip) {
            report.extend(roundtrip_transport(&law_family, p, &grid_on(cfg, p.domain()), cfg.tol));
        }
    }
    report.extend(axiom_laws(&law_family, &entry.paths, suites, cfg.tol)?);
    if suites.contains(&Suite::Tensor) && entry.potential.is_none() {
        let p = &entry.paths[0];
        let d = p.domain();
        let h = family.transport(p, d.a(), d.b())?;
        report.extend(check_tensor_laws(&h, 3, cfg.tensor_samples, cfg.seed, 1e-12));
        let ranks = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 1), (1, 2)];
        for path in &entry.paths {
            for tau in orientation_taus(path.domain())? {
                report.extend(orientation_behavior(&family, path, &tau, &ranks, 1e-10));
            }
        }
    }
    if suites.contains(&Suite::Group) {
        if let Some(potential) = &entry.potential {
            report.extend(gauge_laws(potential, &entry.paths, cfg.tol, &cfg.integrator, &cfg.law_cfg())?);
        }
    }
    if suites.contains(&Suite::Oracles) {
        report.extend(entry.check_oracles(&cfg.integrator));
    }
    Ok(report)
}

fn explicit_paths(cfg: &RunConfig) -> Result<Vec<Path>> {
    cfg.path.iter().chain(&cfg.paths).map(PathDesc::build).collect()
}

fn run_laws(cfg: &RunConfig) -> Result<LawReport> {
    let suites = cfg.suites();
    let mut report = LawReport::new();
    if cfg.family_desc().is_some() || cfg.potential.is_some() {
        let paths = explicit_paths(cfg)?;
        if paths.is_empty() {
            return Err(Error::Descriptor("laws on a family or potential need at least one path".into()));
        }
        if let Some(f) = cfg.family_desc() {
            let family = f.build(cfg.integrator)?;
            let law_family = f.build(cfg.law_cfg())?;
            for p in &paths {
                report.extend(transport_laws(&*family, &*law_family, p, &suites, cfg.grid_points, cfg.tol)?);
            }
            report.extend(axiom_laws(&*law_family, &paths, &suites, cfg.tol)?);
        }
        if let (Some(p), true) = (&cfg.potential, suites.contains(&Suite::Group)) {
            report.extend(gauge_laws(&p.build()?, &paths, cfg.tol, &cfg.integrator, &cfg.law_cfg())?);
        }
        return Ok(report);
    }
    let names: Vec<String> = if cfg.entries.is_empty() {
        catalog::NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        cfg.entries.clone()
    };
    for name in names {
        report.extend(entry_laws(&catalog::by_name(&name)?, cfg, &suites)?);
    }
    Ok(report)
}

fn run_roundtrip(cfg: &RunConfig) -> Result<LawReport> {
    let mut report = LawReport::new();
    if cfg.family_desc().is_some() {
        let family = family_for(cfg, cfg.law_cfg())?;
        for p in explicit_paths(cfg)? {
            report.extend(roundtrip_transport(&*family, &p, &grid_on(cfg, p.domain()), cfg.tol));
        }
        return Ok(report);
    }
    let names: Vec<&str> = if cfg.entries.is_empty() {
        catalog::NAMES.to_vec()
    } else {
        cfg.entries.iter().map(String::as_str).collect()
    };
    for name in names {
        let entry = catalog::by_name(name)?;
        let family = entry.family(cfg.law_cfg());
        let paths = if cfg.path.is_some() || !cfg.paths.is_empty() {
            explicit_paths(cfg)?
        } else {
            entry.paths.clone()
        };
        for p in &paths {
            report.extend(roundtrip_transport(&family, p, &grid_on(cfg, p.domain()), cfg.tol));
        }
    }
    Ok(report)
}

fn run_convergence(cfg: &RunConfig) -> Result<ConvergenceOutput> {
    let names: Vec<&str> = if cfg.entries.is_empty() {
        catalog::NAMES.to_vec()
    } else {
        cfg.entries.iter().map(String::as_str).collect()
    };
    let tables = names
        .into_iter()
        .map(|n| catalog::by_name(n)?.convergence(&cfg.convergence_steps, cfg.integrator.scheme))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceOutput {
        schema_version: SCHEMA_VERSION.into(),
        scheme: cfg.integrator.scheme,
        tables,
    })
}
