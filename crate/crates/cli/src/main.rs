//! Command-line driver: simulation dumps, verification campaigns and
//! kernel tabulation. Every verify command writes a JSON report bundle
//! and exits 0 only if all of its checks pass; output files embed the
//! run manifest that reproduces them.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hyperbm::campaigns::{
    appendix_transform_reports, clt_reports, default_clt_horizon, default_limit_horizon,
    determinism_reports, dufresne_reports, fourier_reports, hitting_charfn_report,
    hitting_laplace_report, kernel_normalization_reports, limit_law_complex_reports,
    limit_law_quat_reports, limit_law_real_reports, skew_block_reports, Space,
};
use hyperbm::complexspace::{
    poisson_kernel_complex_eval, sample_complex_bm, sample_complex_terminal_batch, ComplexPoint,
};
use hyperbm::parallel::with_workers;
use hyperbm::quat::{poisson_kernel_quat_eval, sample_quat_bm, sample_quat_terminal_batch, QuatPoint};
use hyperbm::real::{poisson_kernel_real, sample_real_bm, sample_real_terminal_batch, RealPoint};
use hyperbm::report::{write_csv, write_json_report, ReportBundle, RunManifest};
use hyperbm::{Error, SimConfig, TestReport};

const DEFAULT_SEED: u64 = 20260809;

#[derive(Parser)]
#[command(
    name = "hyperbm",
    version,
    about = "Brownian motion on hyperbolic half-spaces: samplers and limit-law verification"
)]
struct Cli {
    /// Worker threads (default: HYPERBM_WORKERS, then all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SimArgs {
    /// Target space.
    #[arg(long, value_parser = ["real", "complex", "quaternionic"])]
    space: String,
    /// Space parameter n (boundary dimension for real; n >= 2 otherwise).
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Time horizon.
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Step size.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Number of independent paths.
    #[arg(long, default_value_t = 1)]
    samples: u64,
    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Starting height.
    #[arg(long, default_value_t = 1.0)]
    y0: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Sample paths and dump trajectory / terminal CSV files.
    Simulate {
        #[command(flatten)]
        sim: SimArgs,
        /// Trajectory CSV (full paths of the first `traj-paths` streams).
        #[arg(long, default_value = "trajectories.csv")]
        trajectories: PathBuf,
        /// How many streams to include in the trajectory dump.
        #[arg(long, default_value_t = 8)]
        traj_paths: u64,
        /// Terminal-sample CSV (one row per path).
        #[arg(long, default_value = "terminal.csv")]
        terminal: PathBuf,
    },
    /// Radial central limit checks (plus the determinism contract).
    VerifyClt {
        #[arg(long, default_value = "all", value_parser = ["all", "real", "complex", "quaternionic"])]
        space: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Horizon; per-space defaults (real/complex 50, quaternionic 30).
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value = "verify-clt-report.json")]
        report: PathBuf,
    },
    /// Boundary limit-law checks (Cauchy KS, characteristic-function
    /// matches, stability in T, kernel marginals, skew-block invariants).
    VerifyLimitLaw {
        #[arg(long, default_value = "all", value_parser = ["all", "real", "complex", "quaternionic"])]
        space: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Horizon; per-space defaults (real 30, complex 20, quaternionic 10).
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED + 100)]
        seed: u64,
        #[arg(long, default_value = "verify-limit-law-report.json")]
        report: PathBuf,
    },
    /// Fourier identities, kernel normalizations and the first-hitting
    /// characteristic function.
    VerifyFourier {
        #[arg(long, default_value_t = 1_000_000)]
        mc_points: u64,
        #[arg(long, default_value_t = 10_000)]
        hitting_samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED + 200)]
        seed: u64,
        #[arg(long, default_value = "verify-fourier-report.json")]
        report: PathBuf,
    },
    /// Perpetual-integral checks: Dufresne, the joint and conditional
    /// Laplace transforms, and the Whittaker hitting transform.
    VerifyAppendix {
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 100_000)]
        transform_samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED + 300)]
        seed: u64,
        #[arg(long, default_value = "verify-appendix-report.json")]
        report: PathBuf,
    },
    /// Tabulate a Poisson kernel on boundary points.
    KernelEval {
        #[arg(long, value_parser = ["real", "complex", "quaternionic"])]
        space: String,
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Height of the base point above the boundary origin.
        #[arg(long, default_value_t = 1.0)]
        y: f64,
        /// Boundary point coordinates, comma separated (dimension n for
        /// real, 2n-1 for complex, 4n-1 for quaternionic).
        #[arg(long, default_value = "0")]
        xi: String,
        /// Optional sweep of the first coordinate: start:stop:count.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long, default_value = "kernel.csv")]
        out: PathBuf,
    },
}

fn parse_floats(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("cannot parse '{tok}' as a number")))
        })
        .collect()
}

fn parse_grid(s: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Domain(format!("grid must be start:stop:count, got '{s}'")));
    }
    let start: f64 = parts[0].parse().map_err(|_| Error::Domain("bad grid start".into()))?;
    let stop: f64 = parts[1].parse().map_err(|_| Error::Domain("bad grid stop".into()))?;
    let count: usize = parts[2].parse().map_err(|_| Error::Domain("bad grid count".into()))?;
    if count < 2 {
        return Ok(vec![start]);
    }
    Ok((0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect())
}

fn print_reports(reports: &[TestReport]) {
    for r in reports {
        println!("{}", r.summary_line());
    }
}

fn finish(report_path: &PathBuf, manifest: RunManifest, reports: Vec<TestReport>) -> Result<ExitCode, Error> {
    print_reports(&reports);
    let bundle = ReportBundle::new(manifest, reports);
    write_json_report(report_path, &bundle)?;
    println!(
        "{}: {} report written to {}",
        if bundle.passed { "PASS" } else { "FAIL" },
        bundle.manifest.command,
        report_path.display()
    );
    Ok(if bundle.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn spaces_of(arg: &str) -> Vec<Space> {
    match arg {
        "all" => vec![Space::Real, Space::Complex, Space::Quaternionic],
        one => vec![one.parse().expect("validated by clap")],
    }
}

fn simulate(sim: &SimArgs, trajectories: &PathBuf, traj_paths: u64, terminal: &PathBuf) -> Result<ExitCode, Error> {
    let space: Space = sim.space.parse()?;
    let config = SimConfig { seed: sim.seed, dt: sim.dt, horizon: sim.t, n_samples: sim.samples, n_workers: 0 };
    config.validate()?;
    let manifest = RunManifest::new("simulate", &sim.space, sim.n, config).with_param("y0", sim.y0);
    let kept = traj_paths.min(sim.samples);

    // Trajectory rows carry the stream id in the first column; terminal
    // rows are one per path in stream order.
    let (traj_header, traj_rows, term_header, term_rows): (Vec<String>, Vec<Vec<f64>>, Vec<String>, Vec<Vec<f64>>) =
        match space {
            Space::Real => {
                let z0 = RealPoint::new(vec![0.0; sim.n], sim.y0)?;
                let mut header = vec!["stream".to_string(), "t".to_string()];
                header.extend((1..=sim.n).map(|i| format!("x_{i}")));
                header.push("y".to_string());
                let mut rows = Vec::new();
                for sid in 0..kept {
                    let traj = sample_real_bm(&z0, &config, sid)?;
                    for (t, p) in traj.t.iter().zip(&traj.points) {
                        let mut row = vec![sid as f64, *t];
                        row.extend_from_slice(&p.x);
                        row.push(p.y);
                        rows.push(row);
                    }
                }
                let term = sample_real_terminal_batch(&z0, &config)?;
                let t_header = header[0..1]
                    .iter()
                    .cloned()
                    .chain(header[2..].iter().cloned())
                    .collect::<Vec<_>>();
                let t_rows = term
                    .iter()
                    .enumerate()
                    .map(|(sid, p)| {
                        let mut row = vec![sid as f64];
                        row.extend_from_slice(&p.x);
                        row.push(p.y);
                        row
                    })
                    .collect();
                (header, rows, t_header, t_rows)
            }
            Space::Complex => {
                let z0 = ComplexPoint::new(0.0, sim.y0, vec![0.0; 2 * (sim.n - 1)])?;
                let mut header = vec!["stream".to_string(), "t".to_string(), "x1".to_string(), "y".to_string()];
                for k in 2..=sim.n {
                    header.push(format!("x_{k}"));
                    header.push(format!("y_{k}"));
                }
                let mut rows = Vec::new();
                for sid in 0..kept {
                    let traj = sample_complex_bm(&z0, &config, sid)?;
                    for (t, p) in traj.t.iter().zip(&traj.points) {
                        let mut row = vec![sid as f64, *t, p.x1, p.y];
                        row.extend_from_slice(&p.tilde);
                        rows.push(row);
                    }
                }
                let term = sample_complex_terminal_batch(&z0, &config)?;
                let t_header = header[0..1]
                    .iter()
                    .cloned()
                    .chain(header[2..].iter().cloned())
                    .collect::<Vec<_>>();
                let t_rows = term
                    .iter()
                    .enumerate()
                    .map(|(sid, p)| {
                        let mut row = vec![sid as f64, p.x1, p.y];
                        row.extend_from_slice(&p.tilde);
                        row
                    })
                    .collect();
                (header, rows, t_header, t_rows)
            }
            Space::Quaternionic => {
                let z0 = QuatPoint::new(0.0, sim.y0, 0.0, 0.0, vec![0.0; 4 * (sim.n - 1)])?;
                let mut header = vec![
                    "stream".to_string(),
                    "t".to_string(),
                    "x1".to_string(),
                    "y".to_string(),
                    format!("x_{}", sim.n + 1),
                    format!("y_{}", sim.n + 1),
                ];
                for k in 2..=sim.n {
                    for part in [format!("x_{k}"), format!("y_{k}"), format!("x_{}", sim.n + k), format!("y_{}", sim.n + k)] {
                        header.push(part);
                    }
                }
                let mut rows = Vec::new();
                for sid in 0..kept {
                    let traj = sample_quat_bm(&z0, &config, sid)?;
                    for (t, p) in traj.t.iter().zip(&traj.points) {
                        let mut row = vec![sid as f64, *t, p.x1, p.y, p.xn1, p.yn1];
                        row.extend_from_slice(&p.tilde);
                        rows.push(row);
                    }
                }
                let term = sample_quat_terminal_batch(&z0, &config)?;
                let t_header = header[0..1]
                    .iter()
                    .cloned()
                    .chain(header[2..].iter().cloned())
                    .collect::<Vec<_>>();
                let t_rows = term
                    .iter()
                    .enumerate()
                    .map(|(sid, p)| {
                        let mut row = vec![sid as f64, p.x1, p.y, p.xn1, p.yn1];
                        row.extend_from_slice(&p.tilde);
                        row
                    })
                    .collect();
                (header, rows, t_header, t_rows)
            }
        };

    let header_refs: Vec<&str> = traj_header.iter().map(|s| s.as_str()).collect();
    write_csv(trajectories, &manifest, &header_refs, traj_rows.iter().map(|r| r.as_slice()))?;
    let term_refs: Vec<&str> = term_header.iter().map(|s| s.as_str()).collect();
    write_csv(terminal, &manifest, &term_refs, term_rows.iter().map(|r| r.as_slice()))?;
    println!(
        "wrote {} trajectory rows to {} and {} terminal rows to {}",
        traj_rows.len(),
        trajectories.display(),
        term_rows.len(),
        terminal.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn kernel_eval(space: &str, n: usize, y: f64, xi: &str, grid: Option<&str>, out: &PathBuf) -> Result<ExitCode, Error> {
    let space: Space = space.parse()?;
    let base = parse_floats(xi)?;
    let dim = match space {
        Space::Real => n,
        Space::Complex => 2 * n - 1,
        Space::Quaternionic => 4 * n - 1,
    };
    let mut point = base;
    point.resize(dim, 0.0);
    let sweeps: Vec<f64> = match grid {
        Some(g) => parse_grid(g)?,
        None => vec![point[0]],
    };
    let mut rows = Vec::with_capacity(sweeps.len());
    for first in sweeps {
        let mut coords = point.clone();
        coords[0] = first;
        let value = match space {
            Space::Real => poisson_kernel_real(n, &coords, y)?,
            Space::Complex => poisson_kernel_complex_eval(n, &coords, y)?,
            Space::Quaternionic => poisson_kernel_quat_eval(n, &coords, y)?,
        };
        coords.push(value);
        rows.push(coords);
    }
    let config = SimConfig { seed: 0, dt: 1.0, horizon: 1.0, n_samples: 1, n_workers: 0 };
    let manifest = RunManifest::new("kernel-eval", &space.to_string(), n, config).with_param("y", y);
    let mut header: Vec<String> = (1..=dim).map(|i| format!("c_{i}")).collect();
    header.push("kernel".to_string());
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    write_csv(out, &manifest, &header_refs, rows.iter().map(|r| r.as_slice()))?;
    println!("wrote {} kernel rows to {}", rows.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match &cli.command {
        Command::Simulate { sim, trajectories, traj_paths, terminal } => {
            simulate(sim, trajectories, *traj_paths, terminal)
        }
        Command::VerifyClt { space, n, t, dt, samples, seed, report } => {
            let mut reports = Vec::new();
            for (i, sp) in spaces_of(space).into_iter().enumerate() {
                let horizon = t.unwrap_or_else(|| default_clt_horizon(sp));
                reports.extend(clt_reports(sp, *n, horizon, *dt, *samples, seed + i as u64)?);
            }
            reports.extend(determinism_reports(seed + 13)?);
            let config = SimConfig { seed: *seed, dt: *dt, horizon: t.unwrap_or(50.0), n_samples: *samples, n_workers: 0 };
            let manifest = RunManifest::new("verify-clt", space, *n, config);
            finish(report, manifest, reports)
        }
        Command::VerifyLimitLaw { space, n, t, dt, samples, seed, report } => {
            let mut reports = Vec::new();
            for (i, sp) in spaces_of(space).into_iter().enumerate() {
                let horizon = t.unwrap_or_else(|| default_limit_horizon(sp));
                let seed = seed + 10 * i as u64;
                match sp {
                    Space::Real => reports.extend(limit_law_real_reports(horizon, *dt, *samples, seed)?),
                    Space::Complex => {
                        reports.extend(limit_law_complex_reports(*n, horizon, *dt, *samples, seed)?)
                    }
                    Space::Quaternionic => {
                        reports.extend(skew_block_reports(seed)?);
                        reports.extend(limit_law_quat_reports(*n, horizon, *dt, *samples, seed)?);
                    }
                }
            }
            let config = SimConfig { seed: *seed, dt: *dt, horizon: t.unwrap_or(30.0), n_samples: *samples, n_workers: 0 };
            let manifest = RunManifest::new("verify-limit-law", space, *n, config);
            finish(report, manifest, reports)
        }
        Command::VerifyFourier { mc_points, hitting_samples, seed, report } => {
            let mut reports = fourier_reports(*mc_points, *seed)?;
            reports.extend(kernel_normalization_reports(*mc_points, seed + 50)?);
            reports.push(hitting_charfn_report(1e-4, *hitting_samples, seed + 60)?);
            let config = SimConfig { seed: *seed, dt: 1e-4, horizon: 1.0, n_samples: *mc_points, n_workers: 0 };
            let manifest = RunManifest::new("verify-fourier", "-", 0, config);
            finish(report, manifest, reports)
        }
        Command::VerifyAppendix { dt, samples, transform_samples, seed, report } => {
            let mut reports = dufresne_reports(*dt, *samples, *seed)?;
            reports.extend(appendix_transform_reports(*dt, *transform_samples, seed + 20)?);
            reports.push(hitting_laplace_report(1e-4, *samples, seed + 40)?);
            let config = SimConfig { seed: *seed, dt: *dt, horizon: 15.0, n_samples: *samples, n_workers: 0 };
            let manifest = RunManifest::new("verify-appendix", "-", 0, config);
            finish(report, manifest, reports)
        }
        Command::KernelEval { space, n, y, xi, grid, out } => {
            kernel_eval(space, *n, *y, xi, grid.as_deref(), out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli
        .workers
        .or_else(|| std::env::var("HYPERBM_WORKERS").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(0);
    match with_workers(workers, || run(cli)) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
