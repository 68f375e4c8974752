use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bell_core::model_file::ModelDocument;
use bell_core::montecarlo::{write_trials_csv_file, RunConfig, SettingsPolicy, Source};
use bell_core::quantum::{basis_from_angle, make_phi_plus};
use bell_core::report::{self, ReportDocument, DEFAULT_ANGLES_DEG};
use bell_core::{analysis, lhv, BellError, Setting};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "bell",
    version,
    about = "Quantum and local hidden-variable correlations for the three-setting Bell inequality"
)]
struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SourceArg {
    Quantum,
    Lhv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact correlations of |Φ⁺⟩ measured at three equatorial angles.
    Quantum {
        /// Angles for A, B, C in degrees.
        #[arg(long, num_args = 3, value_names = ["A", "B", "C"],
              allow_negative_numbers = true, value_parser = finite_f64)]
        angles: Option<Vec<f64>>,
    },
    /// Exact correlations, hypotheses and Venn regions of a model file.
    Lhv { model: PathBuf },
    /// Grid search over θ_B, θ_C with θ_A = 0.
    Scan {
        /// Grid step in degrees.
        #[arg(long, default_value_t = 1.0, value_parser = finite_f64)]
        step: f64,
        /// Refine to 0.01° within ±1° of the grid minimum.
        #[arg(long)]
        refine: bool,
        /// Write theta_b_deg,theta_c_deg,bell_sum rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Seeded Monte Carlo estimate of the three agreement probabilities.
    Sample {
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = SourceArg::Quantum)]
        source: SourceArg,
        /// Model file for `--source lhv`; defaults to the uniform mixture
        /// over all eight triplets.
        #[arg(long)]
        model: Option<PathBuf>,
        /// `uniform`, or a fixed ordered pair such as `AB`.
        #[arg(long, default_value = "uniform", value_parser = parse_policy)]
        settings_policy: SettingsPolicy,
        /// Quantum measurement angles for A, B, C in degrees.
        #[arg(long, num_args = 3, value_names = ["A", "B", "C"],
              allow_negative_numbers = true, value_parser = finite_f64)]
        angles: Option<Vec<f64>>,
        /// Write the trial log (trial,X,X',x,x') here.
        #[arg(long)]
        trials_csv: Option<PathBuf>,
    },
    /// Factorization, perfect correlations and the determinism they imply.
    AppendixA { model: PathBuf },
}

fn finite_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{s:?} is not a number: {e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s:?} is not finite"))
    }
}

fn parse_policy(s: &str) -> Result<SettingsPolicy, String> {
    if s.eq_ignore_ascii_case("uniform") {
        return Ok(SettingsPolicy::Uniform);
    }
    let chars: Vec<char> = s.chars().collect();
    match chars.as_slice() {
        &[a, b] => match (Setting::from_char(a), Setting::from_char(b)) {
            (Some(a), Some(b)) => Ok(SettingsPolicy::Fixed(a, b)),
            _ => Err(format!("{s:?}: settings are A, B or C")),
        },
        _ => Err(format!("{s:?}: expected `uniform` or a pair like `AB`")),
    }
}

fn angles3(angles: Option<Vec<f64>>) -> [f64; 3] {
    match angles.as_deref() {
        Some(&[a, b, c]) => [a, b, c],
        _ => DEFAULT_ANGLES_DEG,
    }
}

fn load(path: &Path) -> Result<ModelDocument, BellError> {
    ModelDocument::load(path)
}

fn run(cli: Cli) -> Result<ReportDocument, BellError> {
    match cli.command {
        Command::Quantum { angles } => report::quantum_report(angles3(angles)),
        Command::Lhv { model } => report::lhv_report(&load(&model)?, &model.display().to_string()),
        Command::Scan { step, refine, csv } => {
            let (result, doc) = report::scan_report(step, refine)?;
            if let Some(path) = csv {
                analysis::write_scan_csv_file(&result, &path)?;
            }
            Ok(doc)
        }
        Command::Sample {
            n,
            seed,
            source,
            model,
            settings_policy,
            angles,
            trials_csv,
        } => {
            let (src, desc) = match source {
                SourceArg::Quantum => {
                    let [a, b, c] = angles3(angles);
                    let bases = [
                        basis_from_angle(a.to_radians(), "A")?,
                        basis_from_angle(b.to_radians(), "B")?,
                        basis_from_angle(c.to_radians(), "C")?,
                    ];
                    let src = Source::Quantum {
                        state: make_phi_plus(),
                        bases,
                    };
                    (src, format!("quantum phi+ at ({a}, {b}, {c}) deg"))
                }
                SourceArg::Lhv => match model {
                    Some(path) => (
                        Source::Lhv(load(&path)?.model()?),
                        format!("lhv {}", path.display()),
                    ),
                    None => (
                        Source::Lhv(lhv::model_from_triplet_distribution(
                            &lhv::uniform_triplet_weights(),
                        )?),
                        "lhv uniform over 8 triplets".to_string(),
                    ),
                },
            };
            let config = RunConfig {
                n_samples: n,
                seed,
                settings_policy,
            };
            if let Some(path) = trials_csv {
                write_trials_csv_file(&config, &src, &path)?;
            }
            report::sample_report(&config, &src, &desc)
        }
        Command::AppendixA { model } => {
            report::appendix_a_report(&load(&model)?, &model.display().to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = cli.output.clone();
    let format = cli.format;
    let doc = match run(cli) {
        Ok(doc) => doc,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let rendered = match format {
        Format::Text => doc.render_text(),
        Format::Structured => doc.render_structured(),
    };
    match output {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, rendered) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        }
        None => print!("{rendered}"),
    }
    ExitCode::SUCCESS
}
