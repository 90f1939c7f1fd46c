//! Command-line front end: deterministic, scriptable sweeps over the
//! capacity formulas, mutual-information integrals, and the power-control
//! solver, with CSV/JSON output.
//!
//! Exit codes: 0 success, 1 usage/config/IO error, 2 statistical check
//! failure, 3 solver failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use onebit_isac::distributions::{DiscreteInputDistribution, FadingGrid, PowerValue};
use onebit_isac::information::{c_comm_closed_form, c_sense_closed_form, cmi, smi, CapacityRecord};
use onebit_isac::power_control::{solve_mu, weighted_objective, PolicyExport, PolicyRow};
use onebit_isac::quantized_channel::{run_sim_checks, ChannelParams, SimCheckResult, CHI2_CRIT_3DF_P999};
use onebit_isac::{Constellation, Grid};

mod output;
use output::{sig12, write_text};

#[derive(Parser)]
#[command(
    name = "onebit-isac",
    version,
    about = "Capacity region and power control of Gaussian fading ISAC channels with 1-bit I/Q receivers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form communication and sensing capacities over an SNR sweep
    Capacity(CapacityArgs),
    /// Mutual information and symmetry report for a constellation file
    Mi(MiArgs),
    /// Optimal power-control curves P(gamma_c) for each priority weight
    PowerControl(PowerControlArgs),
    /// CSIT rates under solved policies vs the CSIR baselines
    Rates(RatesArgs),
    /// Monte-Carlo vs analytic channel-law checks (exit 2 on failure)
    Simulate(SimulateArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct NoiseArgs {
    /// Communication-link noise power
    #[arg(long, default_value_t = 1.0)]
    sigma_c_sq: f64,
    /// Sensing-link noise power
    #[arg(long, default_value_t = 1.0)]
    sigma_s_sq: f64,
}

#[derive(Args)]
struct GridArgs {
    /// Gauss-Laguerre nodes for the channel-gain dimension
    #[arg(long, default_value_t = 64)]
    n_gamma: usize,
    /// Gauss-Legendre nodes for the phase dimension
    #[arg(long, default_value_t = 64)]
    n_theta: usize,
}

#[derive(Args)]
struct SweepArgs {
    /// Sweep start, dB (power P = 10^(snr/10))
    #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
    snr_min: f64,
    /// Sweep end, dB (inclusive)
    #[arg(long, default_value_t = 40.0, allow_negative_numbers = true)]
    snr_max: f64,
    /// Sweep step, dB
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    snr_step: f64,
}

#[derive(Args)]
struct OutArgs {
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct CapacityArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct MiArgs {
    /// Constellation JSON file: {"points": [[re, im], ...], "probs": [...]}
    #[arg(long)]
    constellation: PathBuf,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Output path (stdout when omitted); always JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PowerControlArgs {
    /// Average power budget P
    #[arg(long, default_value_t = 1.0)]
    power: f64,
    /// Priority weight lambda in [0, 1]; repeatable
    #[arg(long = "lambda", value_name = "LAMBDA")]
    lambdas: Vec<f64>,
    /// Upper end of the reporting grid for gamma_c
    #[arg(long, default_value_t = 10.0)]
    gamma_max: f64,
    /// Number of reporting-grid points
    #[arg(long, default_value_t = 201)]
    gamma_points: usize,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct RatesArgs {
    #[command(flatten)]
    sweep: SweepArgs,
    /// Priority weight lambda in [0, 1]; repeatable
    #[arg(long = "lambda", value_name = "LAMBDA")]
    lambdas: Vec<f64>,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Base seed for the battery (case i uses seed + i)
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Samples per case
    #[arg(long, default_value_t = 200_000)]
    n: u64,
    /// Output path (stdout when omitted); always JSON
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Statistical(String),
    Solver(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Statistical(m) | CliError::Solver(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Statistical(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<onebit_isac::Error> for CliError {
    fn from(e: onebit_isac::Error) -> Self {
        match e {
            onebit_isac::Error::Solver(_) => CliError::Solver(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("I/O error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Ok(v) = std::env::var("ONEBIT_ISAC_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Capacity(args) => cmd_capacity(args),
        Command::Mi(args) => cmd_mi(args),
        Command::PowerControl(args) => cmd_power_control(args),
        Command::Rates(args) => cmd_rates(args),
        Command::Simulate(args) => cmd_simulate(args),
    }
}

fn build_grid(args: &GridArgs) -> Result<Grid, CliError> {
    Ok(FadingGrid::build(args.n_gamma, args.n_theta)?)
}

fn snr_points(sweep: &SweepArgs) -> Result<Vec<f64>, CliError> {
    if !sweep.snr_min.is_finite() || !sweep.snr_max.is_finite() || !sweep.snr_step.is_finite() {
        return Err(CliError::Usage("SNR sweep bounds must be finite".into()));
    }
    if sweep.snr_step <= 0.0 {
        return Err(CliError::Usage("--snr-step must be > 0".into()));
    }
    if sweep.snr_max < sweep.snr_min {
        return Err(CliError::Usage("--snr-max must be >= --snr-min".into()));
    }
    let count = ((sweep.snr_max - sweep.snr_min) / sweep.snr_step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| sweep.snr_min + sweep.snr_step * i as f64).collect())
}

fn validated_lambdas(list: &[f64], default: &[f64]) -> Result<Vec<f64>, CliError> {
    let lambdas: Vec<f64> = if list.is_empty() { default.to_vec() } else { list.to_vec() };
    for &l in &lambdas {
        if !l.is_finite() || !(0.0..=1.0).contains(&l) {
            return Err(CliError::Usage(format!("lambda must lie in [0, 1], got {l}")));
        }
    }
    Ok(lambdas)
}

fn snr_to_power(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

#[derive(Serialize)]
struct CapacityRowJson {
    snr_db: f64,
    #[serde(flatten)]
    record: CapacityRecord,
}

fn cmd_capacity(args: CapacityArgs) -> Result<(), CliError> {
    let grid = build_grid(&args.grid)?;
    let snrs = snr_points(&args.sweep)?;
    let rows: Result<Vec<CapacityRowJson>, onebit_isac::Error> = snrs
        .par_iter()
        .map(|&snr_db| {
            let p = snr_to_power(snr_db);
            let pw = PowerValue::new(p)?;
            let c_comm = c_comm_closed_form(pw, args.noise.sigma_c_sq, &grid)?.get();
            let c_sense = c_sense_closed_form(pw, args.noise.sigma_s_sq, &grid)?.get();
            Ok(CapacityRowJson {
                snr_db,
                record: CapacityRecord {
                    p,
                    sigma_c_sq: args.noise.sigma_c_sq,
                    sigma_s_sq: args.noise.sigma_s_sq,
                    c_comm,
                    c_sense,
                },
            })
        })
        .collect();
    let rows = rows?;
    match args.out.format {
        Format::Csv => {
            let mut text = String::from("snr_db,C_comm,C_sense\n");
            for r in &rows {
                text.push_str(&format!(
                    "{},{},{}\n",
                    sig12(r.snr_db),
                    sig12(r.record.c_comm),
                    sig12(r.record.c_sense)
                ));
            }
            write_text(args.out.out.as_deref(), &text)?;
        }
        Format::Json => {
            let text = serde_json::to_string_pretty(&rows).expect("serializable rows");
            write_text(args.out.out.as_deref(), &text)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MiTermsJson {
    value: f64,
    h_output: f64,
    h_output_given_state: f64,
}

#[derive(Serialize)]
struct MiReport {
    avg_power: f64,
    sigma_c_sq: f64,
    sigma_s_sq: f64,
    is_symmetric: bool,
    cmi: MiTermsJson,
    smi: MiTermsJson,
    /// Closed form at the same average power minus the achieved CMI.
    c_comm_gap: f64,
    /// Closed form at the same average power minus the achieved SMI.
    c_sense_gap: f64,
}

fn cmd_mi(args: MiArgs) -> Result<(), CliError> {
    let grid = build_grid(&args.grid)?;
    let text = std::fs::read_to_string(&args.constellation)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.constellation.display())))?;
    let input: Constellation = DiscreteInputDistribution::from_json_str(&text)?;
    let avg_power = input.average_power();
    let mi_c = cmi(&input, &grid, args.noise.sigma_c_sq)?;
    let mi_s = smi(&input, &grid, args.noise.sigma_s_sq)?;
    let cc = c_comm_closed_form(avg_power, args.noise.sigma_c_sq, &grid)?.get();
    let cs = c_sense_closed_form(avg_power, args.noise.sigma_s_sq, &grid)?.get();
    let report = MiReport {
        avg_power: avg_power.get(),
        sigma_c_sq: args.noise.sigma_c_sq,
        sigma_s_sq: args.noise.sigma_s_sq,
        is_symmetric: input.is_pi2_symmetric(1e-9),
        cmi: MiTermsJson {
            value: mi_c.value.get(),
            h_output: mi_c.h_output.get(),
            h_output_given_state: mi_c.h_output_given_state.get(),
        },
        smi: MiTermsJson {
            value: mi_s.value.get(),
            h_output: mi_s.h_output.get(),
            h_output_given_state: mi_s.h_output_given_state.get(),
        },
        c_comm_gap: cc - mi_c.value.get(),
        c_sense_gap: cs - mi_s.value.get(),
    };
    let text = serde_json::to_string_pretty(&report).expect("serializable report");
    write_text(args.out.as_deref(), &text)?;
    Ok(())
}

#[derive(Serialize)]
struct PolicyMeta {
    lambda: f64,
    mu: f64,
    snr_db: f64,
    cutoff_gamma_c: f64,
}

fn cmd_power_control(args: PowerControlArgs) -> Result<(), CliError> {
    if args.gamma_points < 2 {
        return Err(CliError::Usage("--gamma-points must be >= 2".into()));
    }
    if !args.gamma_max.is_finite() || args.gamma_max <= 0.0 {
        return Err(CliError::Usage("--gamma-max must be finite and > 0".into()));
    }
    if args.out.format == Format::Csv && args.out.out.is_none() {
        return Err(CliError::Usage(
            "power-control --format csv writes one file per lambda; --out is required (use --format json for stdout)".into(),
        ));
    }
    let lambdas = validated_lambdas(&args.lambdas, &[0.0, 0.5, 1.0])?;
    let grid = build_grid(&args.grid)?;
    let params = ChannelParams::new(args.noise.sigma_c_sq, args.noise.sigma_s_sq, args.power)?;
    let snr_db = 10.0 * args.power.log10();

    let solved: Result<Vec<(PolicyExport, PolicyMeta)>, onebit_isac::Error> = lambdas
        .par_iter()
        .map(|&lambda| {
            eprintln!("solving power control: lambda = {lambda}");
            let policy = solve_mu(lambda, &params, &grid, 1e-6)?;
            let rows: Result<Vec<PolicyRow>, onebit_isac::Error> = (0..args.gamma_points)
                .map(|i| {
                    let gamma_c =
                        args.gamma_max * i as f64 / (args.gamma_points - 1) as f64;
                    Ok(PolicyRow { gamma_c, power: policy.power_at(gamma_c)?.get() })
                })
                .collect();
            let meta = PolicyMeta {
                lambda,
                mu: policy.mu(),
                snr_db,
                cutoff_gamma_c: policy.cutoff_gamma()?,
            };
            Ok((PolicyExport { lambda, mu: policy.mu(), snr_db, rows: rows? }, meta))
        })
        .collect();
    let solved = solved?;

    match args.out.format {
        Format::Json => {
            let exports: Vec<&PolicyExport> = solved.iter().map(|(e, _)| e).collect();
            let text = serde_json::to_string_pretty(&exports).expect("serializable exports");
            write_text(args.out.out.as_deref(), &text)?;
        }
        Format::Csv => {
            let out = args.out.out.as_ref().expect("checked above");
            let stem = out.with_extension("");
            for (export, _) in &solved {
                let path = PathBuf::from(format!(
                    "{}_lambda_{:.3}.csv",
                    stem.display(),
                    export.lambda
                ));
                let mut text = String::from("gamma_c,power\n");
                for row in &export.rows {
                    text.push_str(&format!("{},{}\n", sig12(row.gamma_c), sig12(row.power)));
                }
                write_text(Some(&path), &text)?;
            }
            let metas: Vec<&PolicyMeta> = solved.iter().map(|(_, m)| m).collect();
            let meta_path = PathBuf::from(format!("{}_meta.json", stem.display()));
            let text = serde_json::to_string_pretty(&metas).expect("serializable metas");
            write_text(Some(&meta_path), &text)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct RateRow {
    snr_db: f64,
    lambda: f64,
    #[serde(rename = "R_c_csit")]
    r_c_csit: f64,
    #[serde(rename = "R_s")]
    r_s: f64,
    #[serde(rename = "C_comm_csir")]
    c_comm_csir: f64,
    #[serde(rename = "C_sense_csir")]
    c_sense_csir: f64,
}

fn cmd_rates(args: RatesArgs) -> Result<(), CliError> {
    let lambdas = validated_lambdas(&args.lambdas, &[0.0, 0.5, 0.999, 1.0])?;
    let grid = build_grid(&args.grid)?;
    let snrs = snr_points(&args.sweep)?;
    let points: Vec<(f64, f64)> = snrs
        .iter()
        .flat_map(|&snr| lambdas.iter().map(move |&l| (snr, l)))
        .collect();
    let rows: Result<Vec<RateRow>, onebit_isac::Error> = points
        .par_iter()
        .map(|&(snr_db, lambda)| {
            eprintln!("solving rates: snr = {snr_db} dB, lambda = {lambda}");
            let p = snr_to_power(snr_db);
            let params = ChannelParams::new(args.noise.sigma_c_sq, args.noise.sigma_s_sq, p)?;
            let policy = solve_mu(lambda, &params, &grid, 1e-6)?;
            let obj = weighted_objective(&policy)?;
            let pw = PowerValue::new(p)?;
            Ok(RateRow {
                snr_db,
                lambda,
                r_c_csit: obj.r_comm.get(),
                r_s: obj.r_sense.get(),
                c_comm_csir: c_comm_closed_form(pw, args.noise.sigma_c_sq, &grid)?.get(),
                c_sense_csir: c_sense_closed_form(pw, args.noise.sigma_s_sq, &grid)?.get(),
            })
        })
        .collect();
    let rows = rows?;
    match args.out.format {
        Format::Csv => {
            let mut text = String::from("snr_db,lambda,R_c_csit,R_s,C_comm_csir,C_sense_csir\n");
            for r in &rows {
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    sig12(r.snr_db),
                    sig12(r.lambda),
                    sig12(r.r_c_csit),
                    sig12(r.r_s),
                    sig12(r.c_comm_csir),
                    sig12(r.c_sense_csir)
                ));
            }
            write_text(args.out.out.as_deref(), &text)?;
        }
        Format::Json => {
            let text = serde_json::to_string_pretty(&rows).expect("serializable rows");
            write_text(args.out.out.as_deref(), &text)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SimReport {
    seed: u64,
    n: u64,
    chi2_critical: f64,
    all_pass: bool,
    cases: Vec<SimCheckResult>,
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    if args.n == 0 {
        return Err(CliError::Usage("--n must be >= 1".into()));
    }
    let cases = run_sim_checks(args.seed, args.n)?;
    let all_pass = cases.iter().all(|c| c.pass);
    let report = SimReport {
        seed: args.seed,
        n: args.n,
        chi2_critical: CHI2_CRIT_3DF_P999,
        all_pass,
        cases,
    };
    let text = serde_json::to_string_pretty(&report).expect("serializable report");
    write_text(args.out.as_deref(), &text)?;
    if !all_pass {
        let failing: Vec<String> = report
            .cases
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("chi2={:.2} z={:?}", c.chi2, c.z_scores))
            .collect();
        return Err(CliError::Statistical(format!(
            "{} of {} chi-square checks failed: {}",
            failing.len(),
            report.cases.len(),
            failing.join("; ")
        )));
    }
    Ok(())
}
