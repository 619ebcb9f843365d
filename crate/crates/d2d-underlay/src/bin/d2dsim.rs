//! Command-line front end: parameter sweeps to CSV, analytic-vs-simulation
//! validation tables, moment checks, allocation fractions, and SDDPC
//! iteration statistics.
//!
//! Exit codes: 0 success, 1 validation threshold exceeded, 2 unreadable
//! config file, 3 invalid parameter, 4 quadrature failure, 5 output I/O
//! error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use d2d_underlay::analytic::{
    self, activity_probability_edppc, d2d_coverage_dppc, d2d_coverage_edppc, moment_pk_dppc,
    moment_pk_edppc, tagged_cellular_mc, tagged_d2d_mc, AnalyticParams,
};
use d2d_underlay::config::{db_to_linear, SystemConfig};
use d2d_underlay::geometry::{sample_uniform_disk, Point2D, RngStream};
use d2d_underlay::simkernel::{estimate, sddpc_iteration_stats, Scheme, SweepResult};

#[derive(Parser)]
#[command(name = "d2dsim", version, about = "D2D-underlay uplink simulator and analytic toolkit")]
struct Cli {
    /// Plain-text key=value config file; omitted keys use defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base RNG seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SweepArgs {
    /// Scheme(s): dppc, edppc, sddpc, maxpower (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "dppc")]
    scheme: Vec<String>,
    /// Number of CUEs / groups, comma-separated list.
    #[arg(long = "M", value_delimiter = ',')]
    m: Option<Vec<usize>>,
    /// D2D density list, per square meter.
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    /// SINR threshold grid in dB: "lo:hi:step", a comma list, or one value.
    #[arg(long, default_value = "-18:18:3", allow_hyphen_values = true)]
    beta: String,
    /// Monte Carlo trials per grid point.
    #[arg(long)]
    trials: Option<usize>,
    /// Output CSV path (stdout when omitted).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Run trials on one thread (output is identical either way).
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Scheme to validate: dppc or edppc.
    #[arg(long, default_value = "dppc")]
    scheme: String,
    #[arg(long, default_value = "-18:18:3", allow_hyphen_values = true)]
    beta: String,
    #[arg(long)]
    trials: Option<usize>,
    /// Trials for the model-consistent tagged-link Monte Carlo column.
    #[arg(long, default_value_t = 20_000)]
    tagged_trials: usize,
    /// Absolute tolerance on cellular coverage.
    #[arg(long, default_value_t = 0.03)]
    cell_tol: f64,
    /// Absolute tolerance on D2D coverage.
    #[arg(long, default_value_t = 0.05)]
    d2d_tol: f64,
    /// Optional CSV dump of the Monte Carlo sweep rows.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AllocStatsArgs {
    /// Number of CUEs.
    #[arg(long = "M", default_value_t = 2)]
    m: usize,
    /// Number of sampled links.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
}

#[derive(Args)]
struct IterStatsArgs {
    #[arg(long)]
    trials: Option<usize>,
    /// SDDPC target at short range, dB.
    #[arg(long)]
    beta_max_db: Option<f64>,
    /// SDDPC target at maximum range, dB.
    #[arg(long)]
    beta_min_db: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep over (scheme, M, lambda, beta); emits CSV.
    Sweep(SweepArgs),
    /// Analytic-vs-Monte-Carlo coverage comparison with pass/fail.
    Validate(ValidateArgs),
    /// Print and verify the transmit-power moment formulas.
    Moments,
    /// Empirical allocation fractions vs 1/M.
    AllocStats(AllocStatsArgs),
    /// SDDPC round and per-link update statistics.
    IterStats(IterStatsArgs),
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_PARAM: u8 = 3;
const EXIT_QUAD: u8 = 4;
const EXIT_IO: u8 = 5;

fn fail(code: u8, msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn parse_beta_grid(spec: &str) -> Result<Vec<f64>, String> {
    let grid_db: Vec<f64> = if let Some((lo, rest)) = spec.split_once(':') {
        let (hi, step) = rest
            .split_once(':')
            .ok_or_else(|| format!("bad beta grid '{spec}', expected lo:hi:step"))?;
        let (lo, hi, step): (f64, f64, f64) = (
            lo.parse().map_err(|_| format!("bad number '{lo}'"))?,
            hi.parse().map_err(|_| format!("bad number '{hi}'"))?,
            step.parse().map_err(|_| format!("bad number '{step}'"))?,
        );
        if step <= 0.0 || hi < lo {
            return Err(format!("bad beta grid '{spec}'"));
        }
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|i| lo + step * i as f64).collect()
    } else {
        spec.split(',')
            .map(|s| s.trim().parse().map_err(|_| format!("bad number '{s}'")))
            .collect::<Result<_, _>>()?
    };
    Ok(grid_db.into_iter().map(db_to_linear).collect())
}

fn load_config(cli: &Cli) -> Result<SystemConfig, (u8, String)> {
    let mut cfg = match &cli.config {
        Some(path) => SystemConfig::from_file(path).map_err(|e| (EXIT_CONFIG, e.to_string()))?,
        None => SystemConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
    }
    cfg.validate().map_err(|e| (EXIT_PARAM, e.to_string()))
}

fn write_csv(path: &Option<PathBuf>, rows: &[SweepResult]) -> Result<(), String> {
    let mut text = String::from(SweepResult::CSV_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("writing {}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_sweep(cfg: &SystemConfig, args: &SweepArgs) -> Result<ExitCode, (u8, String)> {
    let beta = parse_beta_grid(&args.beta).map_err(|e| (EXIT_PARAM, e))?;
    let schemes: Vec<Scheme> = args
        .scheme
        .iter()
        .map(|s| Scheme::parse(s).ok_or((EXIT_PARAM, format!("unknown scheme '{s}'"))))
        .collect::<Result<_, _>>()?;
    let m_list = args.m.clone().unwrap_or_else(|| vec![cfg.num_cues]);
    let lambdas = args.lambda.clone().unwrap_or_else(|| vec![cfg.density_per_m2]);

    let mut rows = Vec::new();
    for &scheme in &schemes {
        for &m in &m_list {
            for &lambda in &lambdas {
                let c = SystemConfig {
                    num_cues: m,
                    density_per_m2: lambda,
                    ..cfg.clone()
                }
                .validate()
                .map_err(|e| (EXIT_PARAM, e.to_string()))?;
                let trials = args.trials.unwrap_or(c.num_trials);
                rows.extend(estimate(&c, scheme, &beta, trials, !args.sequential));
            }
        }
    }
    write_csv(&args.output, &rows).map_err(|e| (EXIT_IO, e))?;
    if args.output.is_some() {
        eprintln!("wrote {} rows", rows.len());
    }
    Ok(ExitCode::SUCCESS)
}

fn run_validate(cfg: &SystemConfig, args: &ValidateArgs) -> Result<ExitCode, (u8, String)> {
    let scheme = Scheme::parse(&args.scheme)
        .filter(|s| matches!(s, Scheme::Dppc | Scheme::Edppc))
        .ok_or((EXIT_PARAM, format!("validate supports dppc or edppc, got '{}'", args.scheme)))?;
    let beta = parse_beta_grid(&args.beta).map_err(|e| (EXIT_PARAM, e))?;
    let trials = args.trials.unwrap_or(cfg.num_trials);
    let rows = estimate(cfg, scheme, &beta, trials, true);

    println!(
        "validate {} (M={}, lambda={:e}, {} trials; tagged-link MC: {} trials)",
        scheme.name(),
        cfg.num_cues,
        cfg.density_per_m2,
        trials,
        args.tagged_trials
    );
    println!(
        "{:>8} {:>9} {:>9} {:>9} {:>7} {:>6} | {:>9} {:>9} {:>9} {:>7} {:>6}",
        "beta_dB", "cell_an", "cell_mc", "cell_tag", "|d|", "ok", "d2d_an", "d2d_mc", "d2d_tag", "|d|", "ok"
    );
    let mut all_ok = true;
    for (i, &b) in beta.iter().enumerate() {
        let (cell_an, d2d_an) = match scheme {
            Scheme::Dppc => (
                AnalyticParams::for_dppc(cfg, b).cellular_coverage(b, cfg),
                d2d_coverage_dppc(b, cfg),
            ),
            Scheme::Edppc => (
                AnalyticParams::for_edppc(cfg, b).cellular_coverage(b, cfg),
                d2d_coverage_edppc(b, cfg).map_err(|e| (EXIT_QUAD, e.to_string()))?,
            ),
            _ => unreachable!(),
        };
        let cell_tag = tagged_cellular_mc(scheme, b, cfg, args.tagged_trials);
        let d2d_tag = tagged_d2d_mc(scheme, b, cfg, args.tagged_trials);
        let r = &rows[i];
        let cell_gap = (cell_an - r.cellular_coverage).abs();
        let d2d_gap = (d2d_an - r.d2d_coverage).abs();
        let cell_ok = cell_gap <= args.cell_tol;
        let d2d_ok = d2d_gap <= args.d2d_tol;
        all_ok &= cell_ok && d2d_ok;
        println!(
            "{:>8.1} {:>9.4} {:>9.4} {:>9.4} {:>7.4} {:>6} | {:>9.4} {:>9.4} {:>9.4} {:>7.4} {:>6}",
            10.0 * b.log10(),
            cell_an,
            r.cellular_coverage,
            cell_tag,
            cell_gap,
            if cell_ok { "pass" } else { "FAIL" },
            d2d_an,
            r.d2d_coverage,
            d2d_tag,
            d2d_gap,
            if d2d_ok { "pass" } else { "FAIL" },
        );
    }
    if let Some(path) = &args.output {
        write_csv(&Some(path.clone()), &rows).map_err(|e| (EXIT_IO, e))?;
    }
    if all_ok {
        println!("all grid points within tolerance ({}/{})", args.cell_tol, args.d2d_tol);
        Ok(ExitCode::SUCCESS)
    } else {
        println!(
            "tolerance exceeded; the tagged-link column shows the closed forms \
             against their own independence assumptions"
        );
        Ok(ExitCode::from(EXIT_VALIDATION))
    }
}

fn run_moments(cfg: &SystemConfig) -> ExitCode {
    let alpha = cfg.pathloss_exponent;
    let e = 2.0 / alpha;
    let u = cfg.rho_rx() * (1.0 + cfg.estimation_margin);
    let v = cfg.edppc_mu * u;
    let mut rng = RngStream::new(cfg.rng_seed, 0);
    let n = 400_000;

    let m_dppc = moment_pk_dppc(cfg);
    let mut mc_dppc = 0.0;
    for _ in 0..n {
        let d = cfg.d2d_max_range_m * rand::Rng::gen::<f64>(&mut rng).sqrt();
        mc_dppc += (u * d.powf(alpha)).powf(e);
    }
    mc_dppc /= n as f64;

    let m_edppc = moment_pk_edppc(cfg);
    let mut mc_edppc = 0.0;
    for _ in 0..n {
        let dk = cfg.d2d_max_range_m * rand::Rng::gen::<f64>(&mut rng).sqrt();
        let d0 = cfg.cell_radius_m * rand::Rng::gen::<f64>(&mut rng).sqrt();
        mc_edppc += (u * dk.powf(alpha)).min(v * d0.powf(alpha)).powf(e);
    }
    mc_edppc /= n as f64;

    println!("E[p^(2/alpha)] moments ({} samples each):", n);
    println!(
        "  dppc  formula {:.6e}  sampled {:.6e}  rel.err {:.2e}",
        m_dppc,
        mc_dppc,
        (mc_dppc - m_dppc).abs() / m_dppc
    );
    println!(
        "  edppc formula {:.6e}  sampled {:.6e}  rel.err {:.2e}",
        m_edppc,
        mc_edppc,
        (mc_edppc - m_edppc).abs() / m_edppc
    );
    println!(
        "  edppc gate activity E[exp(-G_min d^alpha)] = {:.4}",
        activity_probability_edppc(cfg)
    );
    let ok = (mc_dppc - m_dppc).abs() / m_dppc < 0.01
        && (mc_edppc - m_edppc).abs() / m_edppc < 0.01;
    if ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: moment formula disagrees with sampling by more than 1%");
        ExitCode::from(EXIT_VALIDATION)
    }
}

fn run_alloc_stats(cfg: &SystemConfig, args: &AllocStatsArgs) -> Result<ExitCode, (u8, String)> {
    if args.m < 1 || args.n == 0 {
        return Err((EXIT_PARAM, "M and n must be at least 1".into()));
    }
    let mut rng = RngStream::new(cfg.rng_seed, 0);
    let mut counts = vec![0usize; args.m];
    for _ in 0..args.n {
        let cues: Vec<Point2D> = (0..args.m)
            .map(|_| sample_uniform_disk(Point2D::ORIGIN, cfg.cell_radius_m, &mut rng))
            .collect();
        let rx = sample_uniform_disk(Point2D::ORIGIN, cfg.cell_radius_m, &mut rng);
        let alloc = d2d_underlay::allocation::allocate(&[rx], &cues);
        counts[alloc.assignment[0]] += 1;
    }
    println!("allocation fractions over {} links, M = {}:", args.n, args.m);
    for (i, c) in counts.iter().enumerate() {
        println!(
            "  group {}: {:.4} (target {:.4})",
            i,
            *c as f64 / args.n as f64,
            1.0 / args.m as f64
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn run_iter_stats(cfg: &SystemConfig, args: &IterStatsArgs) -> Result<ExitCode, (u8, String)> {
    let mut c = cfg.clone();
    if let Some(b) = args.beta_max_db {
        c.sddpc_beta_max = db_to_linear(b);
    }
    if let Some(b) = args.beta_min_db {
        c.sddpc_beta_min = db_to_linear(b);
    }
    if let Some(t) = args.tol {
        c.sddpc_tol = t;
    }
    let c = c.validate().map_err(|e| (EXIT_PARAM, e.to_string()))?;
    let trials = args.trials.unwrap_or(c.num_trials);
    let stats = sddpc_iteration_stats(&c, trials, true);
    println!("sddpc iteration statistics over {} trials:", trials);
    println!("  mean rounds per group run : {:.2}", stats.mean_rounds);
    println!("  mean updates per link     : {:.2}", stats.mean_link_updates);
    println!("  converged group fraction  : {:.4}", stats.converged_fraction);
    println!("  per-link update histogram:");
    let total: usize = stats.update_histogram.iter().sum();
    for (k, n) in stats.update_histogram.iter().enumerate() {
        if *n > 0 {
            println!("    {:>3} updates: {:>7} ({:.3})", k, n, *n as f64 / total as f64);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err((code, msg)) => return fail(code, &msg),
    };
    // make sure panics inside quadrature surface as plain errors
    let _ = std::io::stdout().flush();
    let result = match &cli.command {
        Command::Sweep(args) => run_sweep(&cfg, args),
        Command::Validate(args) => run_validate(&cfg, args),
        Command::Moments => Ok(run_moments(&cfg)),
        Command::AllocStats(args) => run_alloc_stats(&cfg, args),
        Command::IterStats(args) => run_iter_stats(&cfg, args),
    };
    match result {
        Ok(code) => code,
        Err((code, msg)) => fail(code, &msg),
    }
}

// a tiny re-export check so `use analytic::...` above stays exercised even if
// subcommands evolve
#[allow(dead_code)]
fn _touch(cfg: &SystemConfig) -> f64 {
    analytic::sinc_norm(0.5) + analytic::transmission_capacity(1.0, cfg)
}
