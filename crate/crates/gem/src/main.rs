//! Command-line driver for the grain envelope simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gem::config::{SimConfig, Solver};
use gem::driver::{run_diffuse, run_sharp, RunArtifacts, StateDump};
use gem::kinetics::{tip_speed, u_delta_of_pe, KineticsParams};
use gem::report::{emit_report, regenerate_svgs};

#[derive(Parser)]
#[command(name = "gem", about = "Dendritic grain envelope growth simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write CSV/SVG artifacts.
    Run(RunArgs),
    /// Print a CSV table of the stagnant-film kinetics.
    Kinetics(KineticsArgs),
    /// Regenerate the SVG plots from CSVs in an output directory.
    Report {
        /// Directory holding timeseries.csv and envelope_*.csv files.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Config file with `key = value` lines (# comments allowed).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the scaled-down desk preset instead of paper defaults.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_tot: Option<f64>,
    #[arg(long)]
    a_m: Option<f64>,
    #[arg(long)]
    r_d: Option<f64>,
    #[arg(long)]
    h_d: Option<f64>,
    #[arg(long)]
    h_m: Option<f64>,
    #[arg(long)]
    h_g: Option<f64>,
    #[arg(long)]
    omega0: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    cadence: Option<usize>,
    #[arg(long)]
    record_every: Option<usize>,
    /// Also write full concentration-field snapshots.
    #[arg(long)]
    write_field: bool,
}

#[derive(Args)]
struct KineticsArgs {
    #[arg(long, default_value_t = 0.18)]
    omega0: f64,
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Largest Peclet number tabulated.
    #[arg(long, default_value_t = 0.5)]
    table_pe_max: f64,
    /// Number of table rows.
    #[arg(long, default_value_t = 50)]
    rows: usize,
}

fn build_config(args: &RunArgs) -> Result<SimConfig, gem::error::Error> {
    let mut cfg = match args.preset.as_deref() {
        None => SimConfig::default(),
        Some("desk") => SimConfig::desk(),
        Some(other) => {
            return Err(gem::error::Error::Config(format!(
                "unknown preset '{other}' (available: desk)"
            )))
        }
    };
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    // CLI flags override file values
    if let Some(s) = &args.solver {
        cfg.solver = Solver::parse(s)?;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.dt {
        cfg.dt = v;
    }
    if let Some(v) = args.t_tot {
        cfg.t_tot = v;
    }
    if let Some(v) = args.a_m {
        cfg.a_m = v;
    }
    if let Some(v) = args.r_d {
        cfg.r_d = v;
    }
    if let Some(v) = args.h_d {
        cfg.h_d = v;
    }
    if let Some(v) = args.h_m {
        cfg.h_m = v;
    }
    if let Some(v) = args.h_g {
        cfg.h_g = v;
    }
    if let Some(v) = args.omega0 {
        cfg.omega0 = v;
    }
    if let Some(v) = args.delta {
        cfg.delta = v;
    }
    if let Some(v) = args.cadence {
        cfg.cadence = v;
    }
    if let Some(v) = args.record_every {
        cfg.record_every = v;
    }
    if args.write_field {
        cfg.write_field = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_state_dump(out: &PathBuf, dump: &StateDump) {
    let _ = std::fs::create_dir_all(out);
    let mut env = String::from("x,y\n");
    for p in &dump.envelope {
        env.push_str(&format!("{},{}\n", p.x, p.y));
    }
    let mut field = String::from("x,y,u\n");
    for (p, u) in dump.positions.iter().zip(&dump.values) {
        field.push_str(&format!("{},{},{u}\n", p.x, p.y));
    }
    let _ = std::fs::write(out.join("state_dump_envelope.csv"), env);
    let _ = std::fs::write(out.join("state_dump_field.csv"), field);
    eprintln!(
        "state dump at t = {} written to {}",
        dump.t,
        out.display()
    );
}

fn cmd_run(args: RunArgs) -> Result<(), String> {
    let cfg = build_config(&args).map_err(|e| e.to_string())?;
    let mut artifacts: Vec<RunArtifacts> = Vec::new();
    if matches!(cfg.solver, Solver::Sharp | Solver::Both) {
        match run_sharp(&cfg) {
            Ok(a) => artifacts.push(a),
            Err(fail) => {
                write_state_dump(&args.out, &fail.dump);
                return Err(fail.error.to_string());
            }
        }
    }
    if matches!(cfg.solver, Solver::Diffuse | Solver::Both) {
        artifacts.push(run_diffuse(&cfg).map_err(|e| e.to_string())?);
    }
    let written = emit_report(&artifacts, &args.out).map_err(|e| e.to_string())?;
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_kinetics(args: KineticsArgs) -> Result<(), String> {
    let kin = KineticsParams::new(args.omega0, args.delta, args.table_pe_max.max(10.0), 1e-12)
        .map_err(|e| e.to_string())?;
    println!("pe,u_delta,v");
    let rows = args.rows.max(2);
    let mut printed_iv = false;
    let emit = |pe: f64| -> Result<(), String> {
        let u = u_delta_of_pe(pe, kin.film_delta).map_err(|e| e.to_string())?;
        let v = tip_speed(pe, kin.pe_iv).map_err(|e| e.to_string())?;
        println!("{pe},{u},{v}");
        Ok(())
    };
    for k in 0..rows {
        let pe = args.table_pe_max * (k + 1) as f64 / rows as f64;
        // include the free-growth operating point in its sorted position
        if !printed_iv && pe >= kin.pe_iv {
            emit(kin.pe_iv)?;
            printed_iv = true;
        }
        if (pe - kin.pe_iv).abs() > 1e-15 {
            emit(pe)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Kinetics(args) => cmd_kinetics(args),
        Command::Report { out } => regenerate_svgs(&out)
            .map(|written| {
                for p in written {
                    println!("{}", p.display());
                }
            })
            .map_err(|e| e.to_string()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
