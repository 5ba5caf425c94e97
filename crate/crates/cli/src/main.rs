mod run_config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use extremal_core::config::parse_grid;
use extremal_core::harness::{self, format_sig, Status, Table, SCENARIO_IDS};
use extremal_core::stability::{morse_index, IndexConfig, SpectralContext, StabilityReport};
use extremal_core::{solve_lambda1, Error, Mesh1D, RadialDomain, Result, WarpedSurface};

use run_config::RunConfig;

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "extremal", version, about = "First Dirichlet eigenvalue, stability and variation checks for rotationally symmetric domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// key = value configuration file.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override a configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory for JSON and CSV outputs.
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Radial mesh nodes.
    #[arg(long)]
    nodes: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct DomainArgs {
    /// sphere-band, sphere-polar or flat.
    #[arg(long)]
    surface: Option<String>,
    /// Band between r1 and r2 (radians).
    #[arg(long, num_args = 2, value_names = ["R1", "R2"], allow_negative_numbers = true, conflicts_with = "disk")]
    band: Option<Vec<f64>>,
    /// Geodesic disk of radius r0 (radians).
    #[arg(long, value_name = "R0")]
    disk: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// First eigenvalue, normal derivatives and extremality defect.
    Eig {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        common: Common,
        /// Print the JSON summary instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Morse index and nullity of the stability form.
    Index {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        common: Common,
        /// Largest Fourier mode scanned.
        #[arg(long)]
        kmax: Option<u32>,
        /// Relative zero threshold for mode-form eigenvalues.
        #[arg(long)]
        null_tol: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Run verification scenarios.
    Verify {
        /// Scenario ids.
        ids: Vec<String>,
        /// Run every scenario.
        #[arg(long, conflicts_with = "ids")]
        all: bool,
        /// start:stop:step grid for scenarios that take one.
        #[arg(long, value_name = "GRID")]
        grid: Option<String>,
        /// List scenario ids and configuration keys, then exit.
        #[arg(long)]
        list: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Parameter sweeps as CSV.
    Scan {
        kind: ScanKind,
        /// Radii start:stop:step (radians).
        #[arg(long, value_name = "GRID")]
        r0: String,
        /// Surface for index and lambda scans.
        #[arg(long)]
        surface: Option<String>,
        /// Shape swept by index and lambda scans.
        #[arg(long, value_enum, default_value_t = Shape::Band)]
        shape: Shape,
        /// Worker threads; 0 picks the available parallelism.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ScanKind {
    /// Area times lambda1 of geodesic disks on the sphere.
    Fk,
    /// Morse index and nullity.
    Index,
    /// lambda1 and area.
    Lambda,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Shape {
    /// Symmetric band [-r0, r0].
    Band,
    /// Geodesic disk of radius r0.
    Disk,
}

/// Outcome of a command that completed without an error.
enum Done {
    Ok,
    VerifyFailed,
    Inconclusive,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(Done::Ok) => ExitCode::SUCCESS,
        Ok(Done::VerifyFailed) => ExitCode::from(EXIT_VERIFY),
        Ok(Done::Inconclusive) => ExitCode::from(EXIT_NUMERICAL),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_USAGE })
        }
    }
}

fn dispatch(cmd: Command) -> Result<Done> {
    match cmd {
        Command::Eig { domain, common, json } => {
            let cfg = load(&common, Some(&domain))?;
            cmd_eig(&cfg, json)
        }
        Command::Index {
            domain,
            common,
            kmax,
            null_tol,
            json,
        } => {
            let mut cfg = load(&common, Some(&domain))?;
            if let Some(k) = kmax {
                cfg.set("k_max", &k.to_string())?;
            }
            if let Some(t) = null_tol {
                cfg.set("null_tol", &t.to_string())?;
            }
            cmd_index(&cfg, json)
        }
        Command::Verify {
            ids,
            all,
            grid,
            list,
            common,
        } => {
            if list {
                print_listing();
                return Ok(Done::Ok);
            }
            let mut cfg = load(&common, None)?;
            let ids: Vec<String> = if all {
                SCENARIO_IDS.iter().map(|s| s.to_string()).collect()
            } else if ids.is_empty() {
                return Err(Error::Config("give scenario ids or --all".into()));
            } else {
                ids
            };
            for id in &ids {
                if !SCENARIO_IDS.contains(&id.as_str()) {
                    return Err(Error::UnknownScenario(id.clone()));
                }
            }
            if let Some(g) = grid {
                parse_grid("--grid", &g)?;
                let keys: Vec<&str> = ids.iter().filter_map(|id| harness::grid_key(id)).collect();
                if keys.is_empty() {
                    return Err(Error::Config("--grid given but no selected scenario takes a grid".into()));
                }
                for k in keys {
                    cfg.set(k, &g)?;
                }
            }
            cmd_verify(&cfg, &ids)
        }
        Command::Scan {
            kind,
            r0,
            surface,
            shape,
            jobs,
            common,
        } => {
            let mut cfg = load(&common, None)?;
            if let Some(s) = surface {
                cfg.set("surface", &s)?;
            }
            let radii = parse_grid("--r0", &r0)?;
            cmd_scan(&cfg, kind, shape, &radii, jobs)
        }
    }
}

/// File, then `--set` overrides, then dedicated flags.
fn load(common: &Common, domain: Option<&DomainArgs>) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &common.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for kv in &common.set {
        cfg.apply_override(kv)?;
    }
    if let Some(d) = &common.out_dir {
        cfg.set("out_dir", &d.to_string_lossy())?;
    }
    if let Some(n) = common.nodes {
        cfg.set("nodes", &n.to_string())?;
    }
    if let Some(d) = domain {
        if let Some(s) = &d.surface {
            cfg.set("surface", s)?;
        }
        if let Some(b) = &d.band {
            cfg.set("band", &format!("{}:{}", b[0], b[1]))?;
            cfg.set("disk", "")?;
        }
        if let Some(r) = d.disk {
            cfg.set("disk", &r.to_string())?;
            cfg.set("band", "")?;
        }
    }
    // Surface, formats and mesh are validated before any solve.
    cfg.surface()?;
    cfg.writes("json")?;
    cfg.nodes()?;
    Ok(cfg)
}

fn write_output(cfg: &RunConfig, format: &str, name: &str, contents: &str) -> Result<Option<PathBuf>> {
    if !cfg.writes(format)? {
        return Ok(None);
    }
    let dir = cfg.out_dir();
    fs::create_dir_all(&dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(Some(path))
}

fn csv_with_digest(digest: &str, body: &str) -> String {
    format!("# config_digest={digest}\n{body}")
}

fn note_written(path: Option<PathBuf>) {
    if let Some(p) = path {
        eprintln!("wrote {}", p.display());
    }
}

fn cmd_eig(cfg: &RunConfig, as_json: bool) -> Result<Done> {
    let domain = cfg.domain()?;
    let sol = solve_lambda1(&domain, Mesh1D::for_domain(&domain, cfg.nodes()?)?)?;
    let circles = domain.boundary();
    let summary = json!({
        "config_digest": cfg.digest(),
        "domain": domain.describe(),
        "surface": domain.surface().name().as_str(),
        "area": domain.area(),
        "nodes": sol.mesh.n(),
        "lambda1": sol.lambda1,
        "lambda1_mesh": sol.lambda1_mesh,
        "boundary": circles.iter().zip(&sol.normal_derivs).map(|(c, d)| json!({
            "r": c.r_value,
            "length": c.length,
            "kappa_g": c.kappa_g,
            "normal_derivative": d,
        })).collect::<Vec<_>>(),
        "extremality_defect": sol.extremality_defect,
        "residual": sol.residual,
    });
    let text = serde_json::to_string_pretty(&summary)?;
    if as_json {
        println!("{text}");
    } else {
        println!("domain              {}", domain.describe());
        println!("area                {}", format_sig(domain.area()));
        println!("lambda1             {}", format_sig(sol.lambda1));
        for (c, d) in circles.iter().zip(&sol.normal_derivs) {
            println!("dphi/dnu at r={:<8} {}", format_sig(c.r_value), format_sig(*d));
        }
        println!("extremality defect  {}", format_sig(sol.extremality_defect));
        println!("config digest       {}", cfg.digest());
    }
    note_written(write_output(cfg, "json", "eig.json", &text)?);
    Ok(Done::Ok)
}

fn mode_csv(report: &StabilityReport) -> String {
    let rows = report.mode_table();
    let width = rows.iter().map(|(_, m, _)| *m).max().unwrap_or(0);
    let mut s = String::from("k,m");
    for j in 1..=width {
        s.push_str(&format!(",eig_{j}"));
    }
    s.push('\n');
    for (k, m, eigs) in rows {
        s.push_str(&format!("{k},{m}"));
        for j in 0..width {
            s.push(',');
            if let Some(v) = eigs.get(j) {
                s.push_str(&format_sig(*v));
            }
        }
        s.push('\n');
    }
    s
}

fn print_report(report: &StabilityReport) {
    println!("domain        {}", report.domain);
    println!("lambda1       {}", format_sig(report.lambda1));
    println!("{:>4} {:>3}  eigenvalues", "k", "m");
    for (k, m, eigs) in report.mode_table() {
        let e: Vec<String> = eigs.iter().map(|v| format_sig(*v)).collect();
        println!("{k:>4} {m:>3}  {}", e.join("  "));
    }
    println!("morse index   {}", report.morse_index);
    println!("nullity       {} (expected symmetries {})", report.nullity, report.expected_symmetries);
    println!("stopped at k  {} ({})", report.k_stop, report.stop_reason);
    println!("verdict       {}", report.verdict);
    for w in &report.warnings {
        println!("warning: {w}");
    }
}

fn cmd_index(cfg: &RunConfig, as_json: bool) -> Result<Done> {
    let domain = cfg.domain()?;
    let index_cfg = IndexConfig {
        k_max: cfg.harness.values().usize("k_max")? as u32,
        null_tol: cfg.harness.values().f64("null_tol")?,
    };
    let ctx = SpectralContext::new(&domain, cfg.nodes()?)?;
    let (report, done) = match morse_index(&ctx, index_cfg) {
        Ok(r) => (r, Done::Ok),
        Err(Error::TruncationInconclusive { k_max, partial }) => {
            eprintln!("inconclusive: no positivity streak before k_max = {k_max}; partial report follows");
            (*partial, Done::Inconclusive)
        }
        Err(e) => return Err(e),
    };
    let text = serde_json::to_string_pretty(&json!({
        "config_digest": cfg.digest(),
        "conclusive": matches!(done, Done::Ok),
        "report": report,
    }))?;
    if as_json {
        println!("{text}");
    } else {
        print_report(&report);
        println!("config digest {}", cfg.digest());
    }
    note_written(write_output(cfg, "json", "index.json", &text)?);
    note_written(write_output(
        cfg,
        "csv",
        "index.csv",
        &csv_with_digest(&cfg.digest(), &mode_csv(&report)),
    )?);
    Ok(done)
}

fn cmd_verify(cfg: &RunConfig, ids: &[String]) -> Result<Done> {
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let report = harness::run(&refs, &cfg.harness)?;
    for s in &report.scenarios {
        let status = match s.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        };
        println!("{status:<12} {}", s.id);
        for c in s.failed_checks() {
            println!("    failed: {} computed {} expected {} tol {}", c.name, format_sig(c.computed), format_sig(c.expected), format_sig(c.tol));
        }
        for d in &s.diagnostics {
            println!("    {d}");
        }
    }
    println!("run {} config digest {}", report.run_id, report.config_digest);
    note_written(write_output(cfg, "json", "report.json", &report.to_json())?);
    for s in &report.scenarios {
        if !s.table.columns.is_empty() {
            let body = csv_with_digest(&report.config_digest, &s.table.to_csv());
            note_written(write_output(cfg, "csv", &format!("{}.csv", s.id), &body)?);
        }
    }
    Ok(if report.scenarios.iter().any(|s| s.status == Status::Fail) {
        Done::VerifyFailed
    } else if report.scenarios.iter().any(|s| s.status == Status::Inconclusive) {
        Done::Inconclusive
    } else {
        Done::Ok
    })
}

/// Evaluates `f` on every grid point with a bounded pool; results keep grid
/// order regardless of completion order.
fn par_map<T: Send>(points: &[f64], jobs: usize, f: impl Fn(f64) -> Result<T> + Sync) -> Vec<Result<T>> {
    let workers = if jobs == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        jobs
    }
    .min(points.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<T>>>> = Mutex::new((0..points.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= points.len() {
                    break;
                }
                let r = f(points[i]);
                slots.lock().expect("no worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

fn scan_domain(surface: WarpedSurface, shape: Shape, r0: f64) -> Result<RadialDomain> {
    match shape {
        Shape::Band => RadialDomain::symmetric_band(surface, r0),
        Shape::Disk => RadialDomain::disk(surface, r0),
    }
}

fn cmd_scan(cfg: &RunConfig, kind: ScanKind, shape: Shape, radii: &[f64], jobs: usize) -> Result<Done> {
    let nodes = cfg.nodes()?;
    let surface = cfg.surface()?;
    let (name, mut table, rows) = match kind {
        ScanKind::Fk => {
            let table = Table::new(&[
                ("r0", "geodesic radius"),
                ("area", "disk area"),
                ("lambda1", "first eigenvalue"),
                ("product", "area * lambda1"),
            ]);
            let polar = WarpedSurface::sphere_polar();
            let rows = par_map(radii, jobs, |r0| {
                let d = RadialDomain::disk(polar, r0)?;
                let l = solve_lambda1(&d, Mesh1D::for_domain(&d, nodes)?)?.lambda1;
                Ok(vec![r0, d.area(), l, d.area() * l])
            });
            ("fk", table, rows)
        }
        ScanKind::Lambda => {
            let table = Table::new(&[("r0", "radius or half-width"), ("area", "area"), ("lambda1", "first eigenvalue")]);
            let rows = par_map(radii, jobs, |r0| {
                let d = scan_domain(surface, shape, r0)?;
                let l = solve_lambda1(&d, Mesh1D::for_domain(&d, nodes)?)?.lambda1;
                Ok(vec![r0, d.area(), l])
            });
            ("lambda", table, rows)
        }
        ScanKind::Index => {
            let table = Table::new(&[
                ("r0", "radius or half-width"),
                ("index", "Morse index"),
                ("nullity", "nullity"),
            ]);
            let index_cfg = IndexConfig {
                k_max: cfg.harness.values().usize("k_max")? as u32,
                null_tol: cfg.harness.values().f64("null_tol")?,
            };
            let rows = par_map(radii, jobs, |r0| {
                let d = scan_domain(surface, shape, r0)?;
                let rep = morse_index(&SpectralContext::new(&d, nodes)?, index_cfg)?;
                Ok(vec![r0, rep.morse_index as f64, rep.nullity as f64])
            });
            ("index", table, rows)
        }
    };
    for row in rows {
        table.push(row?);
    }
    let body = csv_with_digest(&cfg.digest(), &table.to_csv());
    print!("{body}");
    note_written(write_output(cfg, "csv", &format!("scan-{name}.csv"), &body)?);
    Ok(Done::Ok)
}

fn print_listing() {
    println!("scenarios:");
    for id in SCENARIO_IDS {
        match harness::grid_key(id) {
            Some(k) => println!("  {id}  (grid key {k})"),
            None => println!("  {id}"),
        }
    }
    println!("configuration keys:");
    for (k, v, doc) in run_config::RUN_KEYS.iter().chain(harness::CONFIG_KEYS) {
        println!("  {k} = {v}    # {doc}");
    }
}
