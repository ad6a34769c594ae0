use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tridiag_cli::*;
use tridiag_core::generate::MatrixKind;
use tridiag_core::genericity::classify;
use tridiag_core::pencil::SweepOptions;
use tridiag_core::tridiag::{TridiagOptions, DEFAULT_TOL};
use tridiag_core::CMatrix;

#[derive(Parser)]
#[command(name = "tridiag", version, about = "Unitary tridiagonalisation of complex matrices up to 4 x 4")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Emit JSON instead of a summary.
    #[arg(long)]
    json: bool,
    /// Emit indented JSON.
    #[arg(long)]
    pretty: bool,
}

impl Output {
    fn emit<T: serde::Serialize>(&self, value: &T, human: impl FnOnce() -> String) {
        if self.json || self.pretty {
            println!("{}", to_json(value, self.pretty));
        } else {
            print!("{}", human());
        }
    }
}

#[derive(Args)]
struct Search {
    /// Seed for every random choice.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Base points of the sweep over the curve.
    #[arg(long, default_value_t = SweepOptions::default().samples)]
    sweep_samples: usize,
    /// Extra random base points of the sweep.
    #[arg(long, default_value_t = SweepOptions::default().restarts)]
    max_restarts: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Find U with U A U* tridiagonal.
    Tridiag {
        /// Matrix file, JSON or text; `-` or absent reads stdin.
        input: Option<PathBuf>,
        /// Bound on the off-tridiagonal entries relative to ||A||_F.
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        search: Search,
        /// Skip the genericity screen.
        #[arg(long)]
        force: bool,
        /// Go straight to the perturbation fallback.
        #[arg(long)]
        force_perturbation: bool,
        /// Report a flag for every certified section zero.
        #[arg(long)]
        all_flags: bool,
        /// Recompute residuals and compare spectra.
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Report the genericity conditions.
    Classify {
        input: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Count the degrees of D and C and the section zeros of a 4 x 4 matrix.
    Degrees {
        input: Option<PathBuf>,
        /// Random lines and hyperplanes to try.
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[command(flatten)]
        search: Search,
        /// Run even when the matrix fails the genericity screen.
        #[arg(long)]
        force: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Print a seeded test matrix.
    Gen {
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Kind::Gaussian)]
        kind: Kind,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Gaussian,
    Hermitian,
    Tridiagonal,
    Jordan,
}

impl From<Kind> for MatrixKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Gaussian => MatrixKind::Gaussian,
            Kind::Hermitian => MatrixKind::Hermitian,
            Kind::Tridiagonal => MatrixKind::Tridiagonal,
            Kind::Jordan => MatrixKind::Jordan,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

fn read_matrix(path: Option<&PathBuf>) -> Result<CMatrix, String> {
    let text = match path {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s).map_err(|e| format!("stdin: {e}"))?;
            s
        }
    };
    parse_matrix(&text).map_err(|e| e.to_string())
}

fn sweep(search: &Search) -> SweepOptions {
    SweepOptions {
        seed: search.seed,
        samples: search.sweep_samples,
        restarts: search.max_restarts,
        ..SweepOptions::default()
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("TRIDIAG_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            // fails only if a pool already exists, which cannot happen here
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Tridiag {
            input,
            tol,
            search,
            force,
            force_perturbation,
            all_flags,
            verify,
            output,
        } => {
            let a = match read_matrix(input.as_ref()) {
                Ok(a) => a,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_INPUT;
                }
            };
            if !(tol > 0.0 && tol.is_finite()) {
                eprintln!("error: --tol must be positive");
                return EXIT_INPUT;
            }
            let args = TridiagArgs {
                options: TridiagOptions {
                    tol,
                    seed: search.seed,
                    sweep_samples: search.sweep_samples,
                    max_restarts: search.max_restarts,
                    force_perturbation,
                    all_flags,
                },
                skip_screen: force,
                verify,
            };
            match run_tridiag(&a, &args) {
                Ok(report) => {
                    output.emit(&report, || human_report(&report));
                    EXIT_OK
                }
                Err((e, failure)) => {
                    eprintln!("error: {e}");
                    if output.json || output.pretty {
                        println!("{}", to_json(&failure, output.pretty));
                    }
                    exit_code(&e)
                }
            }
        }
        Command::Classify { input, output } => {
            let a = match read_matrix(input.as_ref()) {
                Ok(a) => a,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_INPUT;
                }
            };
            match classify(&a) {
                Ok(g) => {
                    output.emit(&g, || human_genericity(&g));
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
        Command::Degrees {
            input,
            trials,
            search,
            force,
            output,
        } => {
            let a = match read_matrix(input.as_ref()) {
                Ok(a) => a,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_INPUT;
                }
            };
            if trials == 0 {
                eprintln!("error: --trials must be positive");
                return EXIT_INPUT;
            }
            match run_degrees(&a, trials, search.seed, force, sweep(&search)) {
                Ok(r) => {
                    if let Some(why) = &r.skipped {
                        eprintln!("notice: experiments skipped: {why}");
                    }
                    output.emit(&r, || human_degrees(&r));
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
        Command::Gen { n, seed, kind, format } => {
            if !(1..=MAX_N).contains(&n) {
                eprintln!("error: --n must be between 1 and {MAX_N}");
                return EXIT_INPUT;
            }
            let m = generate_input(kind.into(), n, seed);
            match format {
                Format::Json => println!("{}", to_json(&m, false)),
                Format::Text => print!("{}", m.to_text()),
            }
            EXIT_OK
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    configure_threads();
    ExitCode::from(run(cli) as u8)
}
