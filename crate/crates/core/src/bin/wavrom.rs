use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wavrom::harness::archive::Archive;
use wavrom::harness::metrics::error_measures;
use wavrom::harness::pipeline::NN_FILE;
use wavrom::harness::{bench_speedup, ExperimentConfig, Pipeline};
use wavrom::rom::galerkin_pod_solve;
use wavrom::transform::ParamPoint;
use wavrom::{Error, ErrorKind, Result};

/// Offline/online reduced-order modelling of wave problems on deformed cubes.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute (or reuse) the training snapshots.
    Snapshots(Common),
    /// Compute (or reuse) the POD basis.
    Pod(Common),
    /// Train (or reuse) the coefficient networks.
    Train(Common),
    /// Evaluate all solvers on the test set and write the error CSVs.
    Eval(Common),
    /// Time online queries of the three solvers.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        queries: usize,
        /// Basis size; defaults to the largest configured value.
        #[arg(long)]
        modes: Option<usize>,
    },
    /// Solve at one parameter point.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Comma- or space-separated values, a JSON array, or a file holding either.
        #[arg(long)]
        y: String,
        /// Write the high-fidelity coefficients as `index,re,im` CSV.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(match e.kind() {
                ErrorKind::Config | ErrorKind::Argument => 2,
                ErrorKind::Numerical => 3,
                ErrorKind::Archive | ErrorKind::Io => 1,
            })
        }
    }
}

fn pipeline(common: &Common) -> Result<Pipeline> {
    Pipeline::new(ExperimentConfig::load(&common.config)?)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Snapshots(c) => {
            let s = pipeline(&c)?.snapshots()?;
            println!("{} snapshots with {} degrees of freedom", s.num_snapshots(), s.num_dofs());
        }
        Command::Pod(c) => {
            let b = pipeline(&c)?.basis()?;
            println!("kept {} of {} modes; tail energy {:.6e} of {:.6e}", b.num_modes(), b.rank(), b.tail_energy(), b.total_energy());
        }
        Command::Train(c) => {
            let nets = pipeline(&c)?.surrogates()?;
            let ls: Vec<usize> = nets.by_modes.iter().map(|(l, _)| *l).collect();
            println!("networks for L = {ls:?}");
        }
        Command::Eval(c) => {
            let mut p = pipeline(&c)?;
            print!("{}", p.evaluate()?.to_csv());
        }
        Command::Bench { common, queries, modes } => {
            let mut p = pipeline(&common)?;
            let modes = modes.unwrap_or_else(|| p.config().max_modes());
            let report = bench_speedup(&mut p, queries, modes)?;
            let csv = report.to_csv();
            std::fs::write(p.path("bench.csv"), &csv)?;
            print!("{csv}");
        }
        Command::Solve { common, y, output } => solve(&common, &y, output.as_deref())?,
    }
    Ok(())
}

fn parse_point(arg: &str) -> Result<ParamPoint> {
    let text = if Path::new(arg).is_file() {
        std::fs::read_to_string(arg)?
    } else {
        arg.to_string()
    };
    let trimmed = text.trim();
    let values: Vec<f64> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed).map_err(|e| Error::InvalidArgument(format!("--y: {e}")))?
    } else {
        trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| Error::InvalidArgument(format!("--y value `{s}`: {e}"))))
            .collect::<Result<_>>()?
    };
    ParamPoint::new(values)
}

fn solve(common: &Common, y: &str, output: Option<&Path>) -> Result<()> {
    let mut p = pipeline(common)?;
    let y = parse_point(y)?;
    let hf = p.model().solve_hf(&y)?;
    println!("degrees of freedom: {}", hf.len());
    println!("|u_h| = {:.16e}", hf.norm());

    // reduced solutions only when trained artifacts are current
    let nn_path = p.path(NN_FILE);
    if Archive::peek_hash(&nn_path).ok() == Some(p.config().nn_hash()) {
        let l = p.config().max_modes();
        let basis = p.basis()?.truncated(l)?;
        let nets = p.surrogates()?;
        let g = galerkin_pod_solve(p.model(), &y, &basis)?.lifted;
        let nn = match nets.get(l) {
            Some(net) => net.predict_solution(&y, &basis)?,
            None => basis.reconstruct(&nalgebra::DVector::zeros(l))?,
        };
        let e = error_measures(&hf, &g, &nn, &basis.project_onto(&hf)?)?;
        println!("L = {l}: E_G = {:.6e}, E_NN = {:.6e}, E_V = {:.6e}", e.e_g, e.e_nn, e.e_v);
    }
    if let Some(path) = output {
        let mut csv = String::from("index,re,im\n");
        for (i, z) in hf.values.iter().enumerate() {
            writeln!(csv, "{i},{:.16e},{:.16e}", z.re, z.im).unwrap();
        }
        std::fs::write(path, csv)?;
    }
    Ok(())
}
