mod config;
mod emit;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::Serialize;
use tubeflow::suite::{self, ExperimentConfig, Outcome};

use config::CliError;
use emit::{header, num, opt, Emitter, Summary};

#[derive(Parser)]
#[command(name = "tubeflow", version, about = "Certificates for metric deformations along a closed geodesic")]
struct Cli {
    /// JSON experiment configuration (defaults when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for the summary and CSV tables.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the parallel scans.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Central curvature table, bump estimate certificates and the flat-field witness.
    VerifyDeformation,
    /// Sectional curvature scans for both deformations.
    ScanCurvature,
    /// Angle-derivative identity and cone invariance scans.
    ConeCheck,
    /// Lyapunov spectra of the linearized flow.
    Lyapunov,
    /// Closed-form and finite-difference oracle comparisons.
    OracleSuite,
    /// Every criterion with an aggregate summary.
    Report,
    /// Print the default configuration.
    PrintDefaults,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::VerifyDeformation => "verify-deformation",
            Command::ScanCurvature => "scan-curvature",
            Command::ConeCheck => "cone-check",
            Command::Lyapunov => "lyapunov",
            Command::OracleSuite => "oracle-suite",
            Command::Report => "report",
            Command::PrintDefaults => "print-defaults",
        }
    }
}

type Step = fn(&ExperimentConfig, &mut Emitter) -> Result<Vec<Outcome>, CliError>;

fn verify_deformation(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<Vec<Outcome>, CliError> {
    let tables = suite::central_table_check(cfg)?;
    let certs = suite::bump_certificate_check(cfg)?;
    let witnesses = suite::witness_check(cfg)?;

    let n = cfg.model.n;
    let mut cols = header(&["label", "t"]);
    cols.extend((1..n).map(|k| format!("k_{k}")));
    let rows = tables
        .tables
        .iter()
        .flat_map(|t| {
            t.value.times.iter().zip(&t.value.values).map(move |(time, row)| {
                let mut r = vec![t.label.clone(), num(*time)];
                r.extend(row.iter().map(|v| num(*v)));
                r
            })
        })
        .collect();
    out.csv("central_table.csv", &cols, rows)?;
    let rows = certs
        .certificates
        .iter()
        .flat_map(|c| {
            c.bounds.iter().map(move |b| {
                vec![num(c.eps), c.k.to_string(), b.index.to_string(), b.name.clone(), num(b.measured), num(b.limit), b.passed.to_string()]
            })
        })
        .collect();
    out.csv("certificates.csv", &header(&["eps", "k0", "index", "bound", "measured", "limit", "passed"]), rows)?;
    let rows = witnesses
        .records
        .iter()
        .map(|w| {
            vec![w.label.clone(), num(w.value.max_curvature), num(w.value.max_transport), w.value.passed.to_string()]
        })
        .collect();
    out.csv("witness.csv", &header(&["chart", "max_curvature", "max_transport", "witness_accepted"]), rows)?;

    #[derive(Serialize)]
    struct Details<'a> {
        central_tables: &'a suite::CentralTables,
        certificates: &'a suite::BumpCertificates,
        witnesses: &'a suite::Witnesses,
    }
    out.json(
        "verify-deformation.json",
        &Details { central_tables: &tables, certificates: &certs, witnesses: &witnesses },
    )?;
    Ok(vec![tables.outcome, certs.outcome, witnesses.outcome])
}

fn scan_curvature(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<Vec<Outcome>, CliError> {
    let mut b = suite::nonpositivity_check(cfg)?;
    let a = suite::positive_bound_check(cfg)?;

    let n = cfg.model.n;
    let mut cols: Vec<String> = (1..n).map(|k| format!("x_{k}")).collect();
    cols.extend(header(&["distance", "min_k", "max_k", "central_plane"]));
    let rows = b
        .report
        .points
        .iter()
        .map(|p| {
            let mut r: Vec<String> = p.x.iter().map(|v| num(*v)).collect();
            r.extend([num(p.distance), num(p.min_k), num(p.max_k), num(p.central_plane)]);
            r
        })
        .collect();
    out.csv("curvature_b.csv", &cols, rows)?;
    let rows = a
        .rows
        .iter()
        .map(|r| vec![num(r.eps), r.points.to_string(), num(r.max_k), num(r.m)])
        .collect();
    out.csv("positive_bound_a.csv", &header(&["eps", "points", "max_k", "m"]), rows)?;

    // per-point rows live in the CSV
    b.report.points.clear();
    #[derive(Serialize)]
    struct Details<'a> {
        nonpositivity: &'a suite::Nonpositivity,
        positive_bound: &'a suite::PositiveBound,
    }
    out.json("scan-curvature.json", &Details { nonpositivity: &b, positive_bound: &a })?;
    Ok(vec![b.outcome, a.outcome])
}

fn cone_check(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<Vec<Outcome>, CliError> {
    let angle = suite::angle_identity_check(cfg)?;
    let cones = suite::cone_check(cfg)?;
    let n = cfg.model.n;
    let mut cols = header(&["cone", "id", "class"]);
    cols.extend((0..n).map(|k| format!("x0_{k}")));
    cols.extend((0..n).map(|k| format!("v0_{k}")));
    cols.extend(header(&[
        "boundary_samples",
        "min_margin",
        "worst_time",
        "residence_time",
        "residence_bound",
        "exited",
        "passed",
    ]));
    let rows = cones
        .scans
        .iter()
        .flat_map(|scan| {
            scan.seeds.iter().map(move |s| {
                let mut r = vec![format!("{:?}", scan.cone.center), s.id.to_string(), format!("{:?}", s.class)];
                r.extend(s.x0.iter().chain(&s.v0).map(|v| num(*v)));
                r.extend([
                    s.boundary_samples.to_string(),
                    opt(s.min_margin),
                    opt(s.worst_time),
                    opt(s.residence_time),
                    opt(s.residence_bound),
                    s.exited.to_string(),
                    s.passed.to_string(),
                ]);
                r
            })
        })
        .collect();
    out.csv("cone_seeds.csv", &cols, rows)?;
    out.json("cone-check.json", &cones)?;
    Ok(vec![angle, cones.outcome])
}

fn lyapunov(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<Vec<Outcome>, CliError> {
    let spectra = suite::spectrum_check(cfg)?;
    let rows = spectra
        .spectra
        .iter()
        .flat_map(|s| {
            (0..s.exponents.len()).map(move |i| {
                vec![
                    s.label.clone(),
                    s.source.clone(),
                    i.to_string(),
                    num(s.exponents[i]),
                    num(s.qr_exponents[i]),
                    opt(s.floquet_exponents.as_ref().map(|f| f[i])),
                ]
            })
        })
        .collect();
    out.csv("spectra.csv", &header(&["orbit", "source", "index", "exponent", "qr", "floquet"]), rows)?;
    out.json("lyapunov.json", &spectra)?;
    Ok(vec![spectra.outcome])
}

fn oracle_suite(cfg: &ExperimentConfig, out: &mut Emitter) -> Result<Vec<Outcome>, CliError> {
    let outcomes = vec![suite::jacobi_oracle_check(cfg)?, suite::oracle_suite_check(cfg)?];
    let rows = outcomes
        .iter()
        .flat_map(|o| {
            o.checks.iter().map(move |c| {
                vec![o.criterion.to_string(), c.name.clone(), num(c.measured), c.relation.clone(), num(c.limit), c.passed.to_string()]
            })
        })
        .collect();
    out.csv("oracles.csv", &header(&["criterion", "check", "measured", "relation", "limit", "passed"]), rows)?;
    Ok(outcomes)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let mut cfg = config::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(CliError::Invalid)?;
    if cli.command == Command::PrintDefaults {
        let text = serde_json::to_string_pretty(&ExperimentConfig::default()).expect("defaults serialize");
        // a closed pipe (`| head`) is not an error
        let _ = writeln!(std::io::stdout(), "{text}");
        return Ok(true);
    }
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Threads(e.to_string()))?;
    }
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("tubeflow-out"));
    let mut out = Emitter::new(&dir)?;
    let mut outcomes = Vec::new();
    let steps: &[Step] = match cli.command {
        Command::VerifyDeformation => &[verify_deformation],
        Command::ScanCurvature => &[scan_curvature],
        Command::ConeCheck => &[cone_check],
        Command::Lyapunov => &[lyapunov],
        Command::OracleSuite => &[oracle_suite],
        Command::Report => &[verify_deformation, oracle_suite, lyapunov, cone_check, scan_curvature],
        Command::PrintDefaults => unreachable!("handled above"),
    };
    for step in steps {
        outcomes.extend(step(&cfg, &mut out)?);
    }
    outcomes.sort_by_key(|o| o.criterion);
    let passed = outcomes.iter().all(|o| o.passed);
    for o in &outcomes {
        println!("{}", o.line());
        for c in o.failures() {
            eprintln!("  witness: {} = {:e} (need {} {:e})", c.name, c.measured, c.relation, c.limit);
        }
    }
    let summary = Summary {
        tool: "tubeflow",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: cli.command.name().to_string(),
        status: if passed { "pass" } else { "fail" },
        config_hash: config::hash(&cfg),
        seed: cfg.seed,
        criteria: outcomes,
        artifacts: out.artifacts.clone(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
    };
    out.summary(&summary)?;
    println!("status: {} ({})", summary.status, dir.join("summary.json").display());
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
