use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use laser_xy::harness::{run_spec, ExperimentSpec, RunOptions, THREADS_ENV};
use laser_xy::Error;

/// Run one experiment spec and write its results as CSV.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// JSON experiment spec.
    spec: PathBuf,
    /// Output CSV; defaults to the spec's `output` field.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = THREADS_ENV)]
    threads: Option<usize>,
    /// Added to every seed in the spec.
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
}

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn exit_code(e: &Error) -> ExitCode {
    ExitCode::from(if e.is_input_error() { EXIT_INPUT } else { EXIT_NUMERIC })
}

fn main() -> ExitCode {
    env_logger::init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let bytes = match std::fs::read(&args.spec) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.spec.display());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let spec = match std::str::from_utf8(&bytes)
        .map_err(|e| Error::InvalidSpec(e.to_string()))
        .and_then(ExperimentSpec::from_json)
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let Some(out_path) = args.out.clone().or_else(|| spec.output.clone()) else {
        eprintln!("error: no output path: pass --out or set `output` in the spec");
        return ExitCode::from(EXIT_INPUT);
    };
    let file = match File::create(&out_path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", out_path.display());
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let opts = RunOptions {
        threads: args.threads,
        seed_offset: args.seed_offset,
    };
    log::info!("running {} over N = {:?}", spec.mode.as_str(), spec.n_list);
    match run_spec(&spec, &bytes, &opts, BufWriter::new(file)) {
        Ok(summary) => {
            println!("wrote {} rows to {}", summary.rows, out_path.display());
            for (name, f) in &summary.fits {
                println!(
                    "fit {name}: slope {:.4} ± {:.4} (95% half-width {:.4})",
                    f.slope, f.slope_se, f.ci_half_width
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
