use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use numjcf_cli::commands::{
    exit_code, frank_matrix, jcf_report, paper_example, parse_segre, parse_structure, refine_report, seeded_matrix, verify,
    OutputKind, PaperExample, StructureSidecar,
};
use numjcf_cli::matfile::{parse_entry, parse_matrix, write_matrix};
use numjcf_cli::report::Report;
use numjcf_core::pipeline::Config;
use numjcf_core::{Matrix, C64};

#[derive(Parser)]
#[command(name = "numjcf", version, about = "Numerical Jordan canonical form and staircase decomposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identify the Jordan structure and compute the decompositions.
    Jcf {
        input: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
        #[arg(long, value_enum, default_value_t = Output::Staircase)]
        output: Output,
        /// Include U/T (staircase) or X/J (jordan) in the report.
        #[arg(long)]
        factors: bool,
        /// Write the report here and print a summary table instead.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Refine one eigentriplet of a given structure.
    Refine {
        input: PathBuf,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        lambda0: C64,
        /// Segre characteristic, e.g. `9,1`.
        #[arg(long, value_parser = parse_segre)]
        segre: std::vec::Vec<usize>,
        #[command(flatten)]
        tuning: Tuning,
        /// Include Y and lambda I + S in the report.
        #[arg(long)]
        factors: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write a test matrix.
    Generate {
        #[command(subcommand)]
        kind: Generate,
    },
    /// Recheck a report against its matrix.
    Verify { matrix: PathBuf, report: PathBuf },
}

#[derive(Args)]
struct Tuning {
    #[arg(long, default_value_t = Config::default().delta)]
    delta: f64,
    #[arg(long, default_value_t = Config::default().gamma)]
    gamma: f64,
    #[arg(long, default_value_t = Config::default().tau)]
    tau: f64,
    #[arg(long, default_value_t = Config::default().rho)]
    rho: f64,
    #[arg(long, env = "NUMJCF_SEED", default_value_t = 0)]
    seed: u64,
}

impl Tuning {
    fn config(&self) -> Config {
        Config { delta: self.delta, gamma: self.gamma, tau: self.tau, rho: self.rho, seed: self.seed, ..Config::default() }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    Staircase,
    Jordan,
    Structure,
}

#[derive(Subcommand)]
enum Generate {
    /// Frank matrix of order n.
    Frank {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random matrix with prescribed multiple eigenvalues; the ground truth
    /// goes to `<out>.structure.json`.
    JordanSeeded {
        /// `value:segre;...`, e.g. `1:5,4,3,1;2:4,2,2`.
        #[arg(long, value_parser = parse_structure, allow_hyphen_values = true)]
        structure: std::vec::Vec<(f64, Vec<usize>)>,
        #[arg(long)]
        n: usize,
        /// Bound on the condition number of the eigenvector matrix.
        #[arg(long, default_value_t = 1e4)]
        cond: f64,
        #[arg(long, env = "NUMJCF_SEED", default_value_t = 0)]
        seed: u64,
        /// Skip the similarity transformation.
        #[arg(long)]
        identity: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// One of the worked examples.
    PaperExample {
        #[arg(value_enum)]
        name: Example,
        #[arg(long, default_value_t = std::f64::consts::SQRT_2)]
        r: f64,
        #[arg(long, default_value_t = 3f64.sqrt())]
        s: f64,
        /// Parameter of `at`, or the third eigenvalue of `a4`.
        #[arg(long)]
        t: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Example {
    Ex1,
    A4,
    A5,
    At,
}

fn parse_complex(s: &str) -> Result<C64, String> {
    parse_entry(s).ok_or_else(|| format!("invalid complex number `{s}`"))
}

fn read_matrix(path: &Path) -> Result<Matrix, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_matrix(&text).map_err(|e| format!("{}:{e}", path.display()))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_report(report: &Report, path: Option<&Path>) -> Result<u8, String> {
    match path {
        Some(p) => {
            write_text(Some(p), &report.to_json())?;
            print!("{}", report.summary());
        }
        None => print!("{}", report.to_json()),
    }
    Ok(exit_code(report))
}

fn run(cli: Cli) -> Result<u8, String> {
    match cli.command {
        Command::Jcf { input, tuning, output, factors, report } => {
            let a = read_matrix(&input)?;
            let kind = match output {
                Output::Staircase => OutputKind::Staircase,
                Output::Jordan => OutputKind::Jordan,
                Output::Structure => OutputKind::Structure,
            };
            let r = jcf_report(&a, &tuning.config(), kind, factors).map_err(|e| e.to_string())?;
            emit_report(&r, report.as_deref())
        }
        Command::Refine { input, lambda0, segre, tuning, factors, report } => {
            let a = read_matrix(&input)?;
            let r = refine_report(&a, lambda0, &segre, &tuning.config(), factors).map_err(|e| e.to_string())?;
            emit_report(&r, report.as_deref())
        }
        Command::Generate { kind } => {
            match kind {
                Generate::Frank { n, out } => write_text(out.as_deref(), &write_matrix(&frank_matrix(n)))?,
                Generate::JordanSeeded { structure, n, cond, seed, identity, out } => {
                    let m = seeded_matrix(&structure, n, cond, seed, identity).map_err(|e| e.to_string())?;
                    write_text(Some(&out), &write_matrix(&m.a))?;
                    let sidecar = serde_json::to_string_pretty(&StructureSidecar::new(&m)).expect("sidecar serializes");
                    let mut path = out.into_os_string();
                    path.push(".structure.json");
                    write_text(Some(Path::new(&path)), &(sidecar + "\n"))?;
                }
                Generate::PaperExample { name, r, s, t, out } => {
                    let (kind, t) = match name {
                        Example::Ex1 => (PaperExample::Ex1, 0.0),
                        Example::A4 => (PaperExample::A4, t.unwrap_or(5f64.sqrt())),
                        Example::A5 => (PaperExample::A5, 0.0),
                        Example::At => (PaperExample::At, t.unwrap_or(1.0)),
                    };
                    write_text(out.as_deref(), &write_matrix(&paper_example(kind, r, s, t)))?;
                }
            }
            Ok(0)
        }
        Command::Verify { matrix, report } => {
            let a = read_matrix(&matrix)?;
            let text = fs::read_to_string(&report).map_err(|e| format!("{}: {e}", report.display()))?;
            let r = Report::from_json(&text).map_err(|e| format!("{}:{e}", report.display()))?;
            let fails = verify(&a, &r);
            for f in &fails {
                eprintln!("numjcf: verify: {f}");
            }
            Ok(if fails.is_empty() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("numjcf: error: {msg}");
            ExitCode::from(1)
        }
    }
}
