use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kgseries_cli::classical::{run_classical, run_convergence, ClassicalSettings};
use kgseries_cli::config::RawConfig;
use kgseries_cli::output::OutputDir;
use kgseries_cli::quantum::{run_quantum, QuantumSettings};
use kgseries_cli::sweep::{fits_to_csv, parse_values, run_sweep};
use kgseries_cli::{trees, CliError};

/// Tree-indexed perturbative series for the nonlinear Klein-Gordon equation.
#[derive(Parser)]
#[command(name = "kgseries", version)]
struct Cli {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: $KGSERIES_OUT_DIR, else ./kgseries-out).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Planar p-tree counts against the exponential bound, as CSV on stdout.
    Trees {
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long)]
        max_order: usize,
        /// Also write every canonical key, one per line, to this file.
        #[arg(long)]
        keys: Option<PathBuf>,
    },
    /// Series against the reference integrator and the free field.
    Classical(ClassicalArgs),
    /// Radius of convergence and per-tree norm bounds.
    Convergence(ClassicalArgs),
    /// Gradewise unitarity and field identities on a truncated Fock space.
    Quantum(QuantumArgs),
    /// One row of scalar outputs per value of a single parameter.
    Sweep {
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Extra `key=value` settings for every run.
        #[arg(long = "set")]
        set: Vec<String>,
        /// Also emit log-log slopes of every column against the parameter.
        #[arg(long)]
        fit: bool,
    },
}

// Values stay strings here so that the config reader reports every bad key at once.
#[derive(Args)]
struct ClassicalArgs {
    #[arg(long)]
    p: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    #[arg(long)]
    order: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mass: Option<String>,
    #[arg(long)]
    dims: Option<String>,
    #[arg(long)]
    grid_n: Option<String>,
    #[arg(long = "box-L", allow_hyphen_values = true)]
    box_l: Option<String>,
    /// Time horizon.
    #[arg(long = "T", allow_hyphen_values = true)]
    horizon: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    /// Sobolev index of the working norm.
    #[arg(long)]
    q: Option<String>,
    /// Initial field: zero | gaussian:amp=A,width=W | mode:j=J,amp=A,phase=P | random:seed=S,band=B,amp=A
    #[arg(long)]
    phi0: Option<String>,
    /// Initial time derivative, same families as --phi0.
    #[arg(long)]
    phi1: Option<String>,
    /// Rescale the initial data to this data norm.
    #[arg(long)]
    data_norm: Option<String>,
    /// Sobolev algebra constant; estimated on the grid when omitted.
    #[arg(long)]
    c_q: Option<String>,
    /// strang-splitting | leapfrog
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    dealias: bool,
    /// Run only the reference integrator.
    #[arg(long)]
    reference_only: bool,
}

impl ClassicalArgs {
    fn apply(self, raw: &mut RawConfig) {
        raw.set_opt("p", self.p);
        raw.set_opt("lambda", self.lambda);
        raw.set_opt("order", self.order);
        raw.set_opt("mass", self.mass);
        raw.set_opt("dims", self.dims);
        raw.set_opt("grid_n", self.grid_n);
        raw.set_opt("box_L", self.box_l);
        raw.set_opt("horizon_T", self.horizon);
        raw.set_opt("dt", self.dt);
        raw.set_opt("sobolev_q", self.q);
        raw.set_opt("phi0", self.phi0);
        raw.set_opt("phi1", self.phi1);
        raw.set_opt("data_norm", self.data_norm);
        raw.set_opt("c_q", self.c_q);
        raw.set_opt("scheme", self.scheme);
        if self.dealias {
            raw.set("dealias", true);
        }
        if self.reference_only {
            raw.set("reference_only", true);
        }
    }
}

#[derive(Args)]
struct QuantumArgs {
    #[arg(long)]
    p: Option<String>,
    /// Number of retained wavevectors (odd).
    #[arg(long)]
    modes: Option<String>,
    /// Per-mode occupation cutoff.
    #[arg(long)]
    nmax: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    mass: Option<String>,
    #[arg(long = "box-L", allow_hyphen_values = true)]
    box_l: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    /// Evaluation point of the field.
    #[arg(long, allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long)]
    order: Option<String>,
    /// Coarsest quadrature step.
    #[arg(long, allow_hyphen_values = true)]
    dtau: Option<String>,
    /// Number of refinement levels, each halving dtau.
    #[arg(long)]
    refine: Option<String>,
    /// Sign of the Dyson exponent: minus | plus
    #[arg(long)]
    sign: Option<String>,
}

impl QuantumArgs {
    fn apply(self, raw: &mut RawConfig) {
        raw.set_opt("p", self.p);
        raw.set_opt("modes", self.modes);
        raw.set_opt("nmax", self.nmax);
        raw.set_opt("mass", self.mass);
        raw.set_opt("box_L", self.box_l);
        raw.set_opt("t0", self.t0);
        raw.set_opt("t", self.t);
        raw.set_opt("x", self.x);
        raw.set_opt("order", self.order);
        raw.set_opt("dtau", self.dtau);
        raw.set_opt("refine", self.refine);
        raw.set_opt("sign", self.sign);
    }
}

fn base_config(path: Option<&PathBuf>) -> Result<RawConfig, CliError> {
    match path {
        Some(p) => RawConfig::load(p),
        None => Ok(RawConfig::new()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let out = OutputDir::resolve(cli.out_dir);
    let mut raw = base_config(cli.config.as_ref())?;
    match cli.command {
        Command::Trees { p, max_order, keys } => {
            let table = trees::count_table(p, max_order)?;
            if let Some(path) = keys {
                std::fs::write(path, trees::key_list(p, max_order)?)?;
            }
            print!("{table}");
        }
        Command::Classical(args) => {
            args.apply(&mut raw);
            let report = run_classical(&ClassicalSettings::from_raw(&raw)?)?;
            println!("{}", out.write_json("classical.json", &report)?.display());
            println!(
                "{}",
                out.write_text("classical_timeseries.csv", &report.timeseries)?
                    .display()
            );
        }
        Command::Convergence(args) => {
            args.apply(&mut raw);
            let report = run_convergence(&ClassicalSettings::from_raw(&raw)?)?;
            println!("{}", out.write_json("convergence.json", &report)?.display());
        }
        Command::Quantum(args) => {
            args.apply(&mut raw);
            let report = run_quantum(&QuantumSettings::from_raw(&raw)?)?;
            println!("{}", out.write_json("quantum.json", &report)?.display());
        }
        Command::Sweep {
            param,
            values,
            set,
            fit,
        } => {
            for pair in &set {
                raw.set_pair(pair)?;
            }
            let values = parse_values(&values)?;
            let table = run_sweep(&raw, &param, &values)?;
            println!(
                "{}",
                out.write_text("sweep.csv", &table.to_csv())?.display()
            );
            if fit {
                let fits = fits_to_csv(&table.fits());
                println!("{}", out.write_text("sweep_fit.csv", &fits)?.display());
                print!("{fits}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match serde_json::to_string(&e.record()) {
                Ok(json) => eprintln!("{json}"),
                Err(err) => eprintln!("cannot serialize error record: {err}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}
