use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

#[derive(Parser, Debug)]
#[command(
    name = "selfsim",
    version,
    about = "Random self-similar measures on the line"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Arithmetic: exact rationals, f64, or exact when the input has no
    /// float literals.
    #[arg(long, value_enum, default_value_t = Mode::Auto, global = true)]
    pub mode: Mode,

    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Largest atom list any step may build.
    #[arg(long, global = true, default_value_t = 1 << 22)]
    pub atom_cap: usize,

    /// Largest word enumeration any step may perform.
    #[arg(long, global = true, default_value_t = 1 << 24)]
    pub word_cap: usize,

    /// CSV destination (default: standard output).
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Auto,
    Exact,
    Float,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check or summarise a model file.
    #[command(subcommand)]
    Model(ModelCmd),

    /// Dyadic entropies of the truncated measure at each scale.
    Entropy {
        spec: PathBuf,
        /// Dyadic levels, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        /// Environment seed when the file has none.
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Fourier transform decay, over frequency bands or along powers.
    Fourier {
        spec: PathBuf,
        #[arg(long, default_value_t = 1000.0)]
        xi_max: f64,
        #[arg(long, default_value_t = 12)]
        bands: usize,
        /// Frequencies evaluated per band.
        #[arg(long, default_value_t = 64)]
        samples: usize,
        /// Evaluate at θ, θ², …, θ^N instead of over bands.
        #[arg(long, value_name = "THETA")]
        along_powers: Option<f64>,
        #[arg(long, default_value_t = 30)]
        n_max: u32,
        /// Atom budget of the cross-check route along powers.
        #[arg(long, default_value_t = 4096)]
        check_atoms: usize,
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Integer-part recursion scans for parameters in an interval.
    Ek(EkArgs),

    /// Block recoding of a non-homogeneous system.
    Recode {
        spec: PathBuf,
        /// Block length (overrides the file).
        #[arg(long)]
        r: Option<usize>,
        /// Keep/skip block length for the recoded model (overrides the file).
        #[arg(long)]
        s: Option<usize>,
        /// Where to write the recoded model file.
        #[arg(long)]
        spec_out: Option<PathBuf>,
        #[arg(long)]
        keep_out: Option<PathBuf>,
        #[arg(long)]
        skip_out: Option<PathBuf>,
        /// Seed recorded in the written model files.
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Dimension estimates.
    Dim {
        spec: PathBuf,
        #[arg(long, value_enum)]
        method: DimMethod,
        /// Dyadic levels (fiber: construction levels), comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<u32>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Required by the sampling methods.
        #[arg(long)]
        seed: Option<u64>,
        /// Cell refinement for the concentration check.
        #[arg(long, default_value_t = 1)]
        q: u32,
    },

    /// Atoms of the first factor of the scale-`n` decomposition.
    Decompose {
        spec: PathBuf,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Independent draws from a truncated measure.
    Sample {
        spec: PathBuf,
        /// Truncate at the depth of dyadic scale `n`.
        #[arg(long)]
        n: u32,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
    },

    /// Direct depth-`rn` measure against the mixture of recoded measures.
    MixtureCheck {
        spec: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum ModelCmd {
    /// Parse and validate; print the derived constants.
    Validate {
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate and print per-system details and separations.
    Describe {
        spec: PathBuf,
        /// Separation levels to report.
        #[arg(long, default_value_t = 6)]
        levels: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimMethod {
    Ball,
    Entropy,
    Fiber,
    Frostman,
    Concentration,
}

#[derive(Args, Debug)]
pub struct EkArgs {
    #[arg(long, value_delimiter = ',', num_args = 1, required = true)]
    pub theta_interval: Vec<f64>,
    #[arg(long = "M", default_value_t = 10)]
    pub m: usize,
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.3)]
    pub delta: f64,
    #[arg(long, default_value_t = 100)]
    pub theta_grid: usize,
    #[arg(long, default_value_t = 10)]
    pub tau_grid: usize,
    /// Exponent of each symbol; the first must be 1.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub betas: Vec<f64>,
    /// Symbol probabilities (default: uniform).
    #[arg(long, value_delimiter = ',')]
    pub marginal: Vec<f64>,
    /// Environment seed; needed with more than one symbol.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the trace table of one `θ τ` pair instead of the scan.
    #[arg(long, num_args = 2, value_names = ["THETA", "TAU"])]
    pub trace: Option<Vec<f64>>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<commands::Usage>().is_some() {
        return 1;
    }
    match e.downcast_ref::<selfsim::Error>() {
        Some(err) if err.is_cap() => 3,
        _ => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str) -> String {
        PathBuf::from(env!("CARGO_MANIFEST_DIR"))
            .join("../../specs")
            .join(name)
            .to_string_lossy()
            .into_owned()
    }

    /// Exit code of a full invocation, the way `main` computes it.
    fn code(args: &[&str]) -> u8 {
        let argv = std::iter::once("selfsim").chain(args.iter().copied());
        match Cli::try_parse_from(argv) {
            Err(e) => u8::from(e.use_stderr()),
            Ok(cli) => match commands::run(&cli) {
                Ok(()) => 0,
                Err(e) => exit_code(&e),
            },
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(code(&["--help"]), 0);
        assert_eq!(code(&["model", "validate", &spec("cantor.toml")]), 0);
        assert_eq!(
            code(&["model", "validate", "--bogus", &spec("cantor.toml")]),
            1
        );
        assert_eq!(
            code(&[
                "dim",
                &spec("cantor.toml"),
                "--method",
                "ball",
                "--n",
                "4,5"
            ]),
            1
        );
        assert_eq!(code(&["model", "validate", "/nonexistent/model.toml"]), 2);
        assert_eq!(
            code(&[
                "--atom-cap",
                "100",
                "entropy",
                &spec("uniform.toml"),
                "--n",
                "12"
            ]),
            3
        );
    }

    #[test]
    fn tables_written_to_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
        let (a, b) = (path("a.csv"), path("b.csv"));
        for out in [&a, &b] {
            let args = [
                "-o",
                out,
                "entropy",
                &spec("two_systems.toml"),
                "--n",
                "3,6",
            ];
            assert_eq!(code(&args), 0);
        }
        let text = std::fs::read_to_string(&a).unwrap();
        assert!(
            text.starts_with("n,depth,atoms,entropy,normalized\n"),
            "{text}"
        );
        assert_eq!(text.lines().count(), 3);
        assert_eq!(std::fs::read(&b).unwrap(), text.as_bytes());

        let mix = path("mix.csv");
        let args = [
            "-o",
            &mix,
            "mixture-check",
            &spec("two_ratios.toml"),
            "--r",
            "2",
            "--n",
            "3",
        ];
        assert_eq!(code(&args), 0);
        let text = std::fs::read_to_string(&mix).unwrap();
        let row = text.lines().nth(1).unwrap();
        assert!(row.ends_with(",0.0000000000000000e0"), "{row}");
    }

    #[test]
    fn recoded_models_validate() {
        let dir = tempfile::tempdir().unwrap();
        let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
        let (m, k, s, t) = (
            path("m.toml"),
            path("k.toml"),
            path("s.toml"),
            path("t.csv"),
        );
        let args = [
            "-o",
            &t,
            "recode",
            &spec("two_ratios.toml"),
            "--spec-out",
            &m,
            "--keep-out",
            &k,
            "--skip-out",
            &s,
            "--seed",
            "1",
        ];
        assert_eq!(code(&args), 0);
        for file in [&m, &k, &s] {
            assert_eq!(code(&["model", "validate", file]), 0, "{file}");
        }
    }
}
