use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wsbem::pipeline::{
    apply_env, cmd_run, cmd_spectrum, cmd_validate_sphere, error_json, exit_code, load_config, EXIT_OK, EXIT_USAGE,
};
use wsbem::Error;

/// Time-delay analysis of acoustic scatterers with the boundary element method.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble, solve and export S, S', Q and the delay modes.
    Run { config: PathBuf },
    /// Compare a sphere run with the analytic solution.
    ValidateSphere { config: PathBuf },
    /// Classify the delays of a finished run into spectrum.csv.
    Spectrum {
        dir: PathBuf,
        /// Delays with magnitude at most this are classified as zero.
        #[arg(long)]
        eps: Option<f64>,
    },
}

fn fail(e: &Error, dir: Option<&Path>) -> ExitCode {
    let json = error_json(e);
    let text = serde_json::to_string_pretty(&json).expect("error record serializes");
    eprintln!("{text}");
    if let Some(dir) = dir {
        if std::fs::create_dir_all(dir).is_ok() {
            let _ = std::fs::write(dir.join("error.json"), &text);
        }
    }
    ExitCode::from(exit_code(e) as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { EXIT_OK as u8 });
        }
    };
    if let Some(n) = std::env::var("WSBEM_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match cli.command {
        Command::Run { config } => {
            let mut cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e, None),
            };
            apply_env(&mut cfg);
            match cmd_run(&cfg) {
                Ok(out) => {
                    let d = &out.manifest.diagnostics;
                    println!(
                        "wrote {} files to {}; unitarity defect {:.3e}, cross-route gap {}",
                        out.manifest.files.len() + 1,
                        cfg.output_dir.display(),
                        d.unitarity_defect,
                        d.cross_route_gap.map_or("n/a".into(), |g| format!("{g:.3e}"))
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e, Some(&cfg.output_dir)),
            }
        }
        Command::ValidateSphere { config } => {
            let mut cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e, None),
            };
            apply_env(&mut cfg);
            match cmd_validate_sphere(&cfg) {
                Ok(report) => {
                    print!("{}", report.table());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e, Some(&cfg.output_dir)),
            }
        }
        Command::Spectrum { dir, eps } => match cmd_spectrum(&dir, eps) {
            Ok(rows) => {
                let mut out = std::io::stdout().lock();
                for r in rows {
                    // a closed pipe is not an error for a listing
                    if writeln!(out, "{},{:e},{}", r.index, r.delay, r.class).is_err() {
                        break;
                    }
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e, None),
        },
    }
}
