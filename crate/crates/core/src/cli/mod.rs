//! Command-line front end. Each command resolves a scenario and a configuration,
//! computes its artifacts (or takes them from the content-addressed cache), writes them
//! under the output directory and maps the outcome to an exit status.

pub mod cache;
pub mod config;
pub mod svg;

use crate::bloch::{self, csv_err, fmt};
use crate::bulk;
use crate::coupling::{self, CouplingCurve};
use crate::dirac;
use crate::dirac_line;
use crate::edge::{self, SpectralFlowTrace};
use crate::error::{Error, Result};
use crate::flow::FlowTrace;
use crate::scenarios::{self, Scenario, VerificationReport};
use cache::{Artifact, Cache};
use clap::{Parser, Subcommand};
use config::RunConfig;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use svg::{Chart, Series, Style};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dislocation", version, about = "Bulk and edge invariants of dislocated periodic Schrodinger operators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Ignore and do not update the artifact cache.
    #[arg(long, global = true)]
    pub no_cache: bool,
    /// Worker threads for parallel eigensolves.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Built-in scenario id, overriding the configuration.
    #[arg(long, global = true)]
    pub scenario: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Dispersion curves of the periodic operator.
    Bands,
    /// Dirac point and eigenbasis at quasimomentum pi.
    Dirac,
    /// Coupling curve and its winding number.
    Winding,
    /// Chern numbers and Berry curvature.
    Chern,
    /// Spectral flow of the effective Dirac family.
    DiracFlow,
    /// Spectral flow of the dislocated family.
    EdgeFlow,
    /// Full bulk-edge verification.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Bands => "bands",
            Command::Dirac => "dirac",
            Command::Winding => "winding",
            Command::Chern => "chern",
            Command::DiracFlow => "dirac-flow",
            Command::EdgeFlow => "edge-flow",
            Command::Verify => "verify",
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit status.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run(&cli)
}

pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary.trim_end());
            eprintln!("eigensolves: {}", bloch::eigensolve_count());
            if let Some(v) = outcome.violation {
                eprintln!("hypothesis violated: {v}");
                EXIT_HYPOTHESIS
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_hypothesis_violation() {
        EXIT_HYPOTHESIS
    } else if matches!(e, Error::ConfigInvalid(_)) {
        EXIT_CONFIG
    } else {
        EXIT_INTERNAL
    }
}

struct Outcome {
    summary: String,
    violation: Option<String>,
}

/// Everything a command's result depends on; its hash is the cache key.
#[derive(Serialize)]
struct KeyMaterial<'a> {
    version: &'static str,
    command: Command,
    scenario: scenarios::ScenarioRecord,
    deterministic: bool,
    bands: &'a config::BandsConfig,
    chern: &'a config::ChernConfig,
    budget: &'a scenarios::PipelineBudget,
}

fn execute(cli: &Cli) -> Result<Outcome> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::ConfigInvalid("--threads must be positive".into()));
        }
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let sc = cfg.scenario(cli.scenario.as_deref())?;
    let material = KeyMaterial {
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command,
        scenario: sc.to_record(),
        deterministic: cfg.deterministic,
        bands: &cfg.bands,
        chern: &cfg.chern,
        budget: &cfg.budget,
    };
    let key = cache::sha256_hex(serde_json::to_string(&material).map_err(|e| Error::Io(e.to_string()))?.as_bytes());
    let store = Cache::new(cli.out.join(".cache"));

    let cached = if cli.no_cache {
        None
    } else {
        match store.load(&key) {
            Ok(Some(a)) => {
                eprintln!("cache: hit {key}");
                Some(a)
            }
            Ok(None) => {
                eprintln!("cache: miss {key}");
                None
            }
            Err(e) => {
                eprintln!("cache: {e}; recomputing");
                None
            }
        }
    };
    let (artifact, violation) = match cached {
        Some(a) => (a, None),
        None => {
            let (a, violation) = compute(cli.command, &sc, &cfg)?;
            if !cli.no_cache && violation.is_none() {
                store.store(&key, &a)?;
            }
            (a, violation)
        }
    };
    cache::write_files(&cli.out, &artifact)?;
    let mut resolved = cfg.clone();
    if cli.scenario.is_some() {
        resolved.scenario = cli.scenario.clone();
        resolved.potential = None;
        resolved.potential_file = None;
    }
    std::fs::write(cli.out.join("config.resolved.toml"), resolved.to_toml())?;
    Ok(Outcome { summary: artifact.summary, violation })
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn to_string_with(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

struct Files(BTreeMap<String, String>);

impl Files {
    fn new() -> Self {
        Self(BTreeMap::new())
    }

    fn add(&mut self, name: &str, content: String) {
        self.0.insert(name.to_string(), content);
    }

    fn done(self, summary: String) -> Artifact {
        Artifact { files: self.0, summary }
    }
}

fn compute(command: Command, sc: &Scenario, cfg: &RunConfig) -> Result<(Artifact, Option<String>)> {
    let plain = |a: Result<Artifact>| a.map(|a| (a, None));
    match command {
        Command::Bands => plain(bands(sc, cfg)),
        Command::Dirac => plain(dirac_cmd(sc)),
        Command::Winding => plain(winding(sc)),
        Command::Chern => plain(chern(sc, cfg)),
        Command::DiracFlow => plain(dirac_flow(sc, cfg)),
        Command::EdgeFlow => plain(edge_flow(sc, cfg)),
        Command::Verify => verify(sc, cfg),
    }
}

fn bands(sc: &Scenario, cfg: &RunConfig) -> Result<Artifact> {
    let m = cfg.bands.xi_samples;
    let xi: Vec<f64> = (0..m).map(|i| 2.0 * PI * i as f64 / (m - 1) as f64).collect();
    let sheet = bloch::dispersion_sheet(&sc.v, &xi, cfg.bands.band_count)?;
    let mut files = Files::new();
    files.add("bands.csv", to_string_with(|b| sheet.write_csv(b))?);
    let chart = Chart {
        title: format!("Dispersion curves, {}", sc.id),
        x_label: "xi".into(),
        y_label: "E".into(),
        series: (0..cfg.bands.band_count)
            .map(|j| Series {
                name: format!("band {}", j + 1),
                points: xi.iter().copied().zip(sheet.band(j)).collect(),
                style: Style::Line,
            })
            .collect(),
        shaded: Vec::new(),
    };
    files.add("bands.svg", chart.render());
    let summary = format!(
        "bands: {} bands on {} xi samples; monotonicity violations: {}",
        cfg.bands.band_count,
        m,
        sheet.monotonicity_violations.len()
    );
    Ok(files.done(summary))
}

fn dirac_cmd(sc: &Scenario) -> Result<Artifact> {
    let data = dirac::find_dirac_point_default(&sc.v, sc.n)?;
    let record = data.to_record();
    let mut files = Files::new();
    files.add("dirac.json", serde_json::to_string_pretty(&record).map_err(|e| Error::Io(e.to_string()))? + "\n");
    let summary = format!(
        "dirac: scenario {} gap {}: E_star = {}, nu_star = {}, residual = {:e}",
        sc.id, sc.n, data.e_star, data.nu_star, data.gap_residual
    );
    Ok(files.done(summary))
}

fn winding_files(files: &mut Files, sc: &Scenario, curve: &CouplingCurve) -> Result<()> {
    files.add("winding.csv", to_string_with(|b| curve.write_csv(b))?);
    let chart = Chart {
        title: format!("Coupling curve theta(t), {} (winding {})", sc.id, curve.winding),
        x_label: "Re theta".into(),
        y_label: "Im theta".into(),
        series: vec![
            Series { name: "theta(t)".into(), points: curve.samples.iter().map(|&(_, z)| (z.re, z.im)).collect(), style: Style::Line },
            Series { name: "origin".into(), points: vec![(0.0, 0.0)], style: Style::Markers },
        ],
        shaded: Vec::new(),
    };
    files.add("winding.svg", chart.render());
    Ok(())
}

fn winding(sc: &Scenario) -> Result<Artifact> {
    let data = dirac::find_dirac_point_default(&sc.v, sc.n)?;
    let curve = coupling::coupling_curve(&data, &sc.w)?;
    let mut files = Files::new();
    winding_files(&mut files, sc, &curve)?;
    let summary = format!(
        "winding: scenario {} m = {}; min |theta| = {:e}; theta_F = {:e}",
        sc.id, curve.winding, curve.min_modulus, curve.theta_f
    );
    files.add("winding.txt", summary.clone() + "\n");
    Ok(files.done(summary))
}

fn chern(sc: &Scenario, cfg: &RunConfig) -> Result<Artifact> {
    let b = &cfg.budget;
    let cutoff = b.cutoff.unwrap_or_else(|| bulk::torus_cutoff(&sc.v, &sc.w, sc.n));
    let mut rows = Vec::new();
    let mut text = String::new();
    let mut c1s = Vec::new();
    for &s in &b.chern_s {
        let r = bulk::chern_number(&sc.v, &sc.w, sc.n, s, b.chern_grid, cutoff)?;
        text.push_str(&format!(
            "scenario: {}\ns: {}\ngrid: {}x{}\nc1: {}\nraw: {}\nmax_flux: {}\n\n",
            sc.id, s, r.n_xi, r.n_t, r.c1, r.raw, r.max_flux
        ));
        rows.push(vec![fmt(s), r.c1.to_string(), fmt(r.raw), r.n_xi.to_string(), r.n_t.to_string(), fmt(r.max_flux)]);
        c1s.push(r.c1);
    }
    let mut files = Files::new();
    files.add("chern.txt", text);
    files.add("chern.csv", csv_string(&["s", "c1", "raw", "n_xi", "n_t", "max_flux"], rows)?);
    let g = cfg.chern.curvature_grid;
    if g > 0 {
        let s = *b.chern_s.last().expect("validated non-empty");
        let field = bulk::torus_eigenframe(&sc.v, &sc.w, s, sc.n, g, g, cutoff)?;
        let mut values = vec![vec![0.0; g]; g];
        let mut rows = Vec::with_capacity(g * g);
        for i in 0..g {
            for j in 0..g {
                let im = bulk::berry_curvature_trace(&field, i, j)?.im;
                values[i][j] = im;
                rows.push(vec![fmt(field.xi_grid[i]), fmt(field.t_grid[j]), fmt(im)]);
            }
        }
        files.add("curvature.csv", csv_string(&["xi", "t", "im_b"], rows)?);
        files.add(
            "curvature.svg",
            svg::heatmap(&format!("Im Berry curvature, {} (s = {s})", sc.id), "xi", "t", &field.xi_grid, &field.t_grid, &values),
        );
    }
    let summary = format!("chern: scenario {} c1 = {:?} at s = {:?}", sc.id, c1s, b.chern_s);
    Ok(files.done(summary))
}

fn flow_chart(title: String, trace: &FlowTrace) -> Chart {
    let mut branches: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for (s, ids) in trace.samples.iter().zip(&trace.branch_ids) {
        for (&e, &id) in s.roots.iter().zip(ids) {
            branches.entry(id).or_default().push((s.t, e));
        }
    }
    let lower: Vec<(f64, f64)> = trace.samples.iter().map(|s| (s.t, s.lower)).collect();
    let upper: Vec<(f64, f64)> = trace.samples.iter().map(|s| (s.t, s.upper)).collect();
    let span = trace.samples.iter().map(|s| s.upper - s.lower).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let band = |edge: &[(f64, f64)], outward: f64| -> Vec<(f64, f64)> {
        let mut poly = edge.to_vec();
        poly.extend(edge.iter().rev().map(|&(t, e)| (t, e + outward * 0.15 * span)));
        poly
    };
    let mut series = vec![Series {
        name: "reference".into(),
        points: trace.samples.iter().map(|s| (s.t, s.reference)).collect(),
        style: Style::Dashed,
    }];
    for (id, pts) in branches {
        series.push(Series { name: format!("branch {id}"), points: pts, style: Style::Line });
    }
    let crossings: Vec<(f64, f64)> = trace
        .crossings
        .iter()
        .filter_map(|c| {
            trace.samples.iter().min_by(|a, b| (a.t - c.t).abs().total_cmp(&(b.t - c.t).abs())).map(|s| (c.t, s.reference))
        })
        .collect();
    series.push(Series { name: format!("crossings (Sf = {})", trace.total), points: crossings, style: Style::Markers });
    Chart { title, x_label: "t".into(), y_label: "E".into(), series, shaded: vec![band(&lower, -1.0), band(&upper, 1.0)] }
}

fn dirac_flow(sc: &Scenario, cfg: &RunConfig) -> Result<Artifact> {
    let data = dirac::find_dirac_point_default(&sc.v, sc.n)?;
    let curve = coupling::coupling_curve(&data, &sc.w)?;
    let family = scenarios::unit_dirac_family(&data, &curve, cfg.budget.dirac_profile);
    let trace = dirac_line::dirac_spectral_flow(&family, cfg.budget.dirac_samples)?;
    let mut files = Files::new();
    files.add("dirac_flow.csv", to_string_with(|b| trace.write_csv(b))?);
    files.add("dirac_flow.svg", flow_chart(format!("Effective Dirac spectral flow, {}", sc.id), &trace).render());
    let summary = format!("dirac-flow: scenario {} Sf = {} ({} crossings)", sc.id, trace.total, trace.crossing_events());
    Ok(files.done(summary))
}

fn edge_files(files: &mut Files, sc: &Scenario, trace: &SpectralFlowTrace) -> Result<()> {
    files.add("edge_flow.csv", to_string_with(|b| trace.trace.write_csv(b))?);
    let title = format!("Edge spectral flow, {} ({:?}, L = {})", sc.id, trace.backend, trace.half_length);
    files.add("edge_flow.svg", flow_chart(title, &trace.trace).render());
    Ok(())
}

fn edge_flow(sc: &Scenario, cfg: &RunConfig) -> Result<Artifact> {
    let prob = cfg.budget.edge_problem(sc)?;
    let trace = edge::spectral_flow(&prob, cfg.budget.edge)?;
    let mut files = Files::new();
    edge_files(&mut files, sc, &trace)?;
    let summary = format!(
        "edge-flow: scenario {} Sf = {} ({} crossings, {:?} backend, L = {})",
        sc.id,
        trace.total(),
        trace.trace.crossing_events(),
        trace.backend,
        trace.half_length
    );
    Ok(files.done(summary))
}

fn summary_csv(r: &VerificationReport) -> Result<String> {
    let opt = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_default();
    let chern = |s: f64| r.chern.iter().find(|c| c.s == s).map(|c| c.c1.to_string()).unwrap_or_default();
    let mut header = vec!["scenario", "n", "predicted_index", "winding"];
    let s_labels: Vec<String> = r.chern.iter().map(|c| format!("c1_s{}", c.s)).collect();
    header.extend(s_labels.iter().map(String::as_str));
    header.extend(["dirac_flow", "edge_flow", "crossing_events", "h1_margin", "h2_margin", "verdict"]);
    let mut row = vec![r.scenario.clone(), r.n.to_string(), r.predicted_index.to_string(), opt(r.winding)];
    row.extend(r.chern.iter().map(|c| chern(c.s)));
    row.extend([
        opt(r.dirac_flow),
        opt(r.edge_flow),
        r.crossing_events.map(|x| x.to_string()).unwrap_or_default(),
        r.h1_margin.map(fmt).unwrap_or_default(),
        r.h2_margin.map(fmt).unwrap_or_default(),
        r.verdict.map(|v| v.to_string()).unwrap_or_default(),
    ]);
    csv_string(&header, [row])
}

fn verify(sc: &Scenario, cfg: &RunConfig) -> Result<(Artifact, Option<String>)> {
    let run = scenarios::run_pipeline(sc, &cfg.budget)?;
    let mut report = run.report.clone();
    if cfg.deterministic {
        report.timings.clear();
    }
    let mut files = Files::new();
    files.add("report.txt", report.to_text());
    files.add("report.json", serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))? + "\n");
    files.add("summary.csv", summary_csv(&report)?);
    if let Some(curve) = &run.coupling {
        winding_files(&mut files, sc, curve)?;
    }
    if let Some(trace) = &run.edge_trace {
        edge_files(&mut files, sc, trace)?;
    }
    let summary = match report.verdict {
        Some(v) => format!(
            "verify: scenario {} winding {:?} chern {:?} dirac-flow {:?} edge-flow {:?} predicted {} verdict {}",
            sc.id,
            report.winding,
            report.chern.iter().map(|c| c.c1).collect::<Vec<_>>(),
            report.dirac_flow,
            report.edge_flow,
            report.predicted_index,
            v
        ),
        None => format!("verify: scenario {} stopped: {}", sc.id, report.violation.as_deref().unwrap_or("")),
    };
    Ok((files.done(summary), report.violation.clone()))
}
