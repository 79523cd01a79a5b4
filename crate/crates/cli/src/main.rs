use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use simdiverge::survey::{DomainId, PromptFormat};
use simdiverge::synth::{PlantedSpec, SynthData};
use simdiverge_cli::config::{DomainSource, SynthPreset, SynthSource};
use simdiverge_cli::report::emit_report;
use simdiverge_cli::{Options, Pipeline, RunConfig, Step};

#[derive(Parser)]
#[command(name = "simdiverge", version, about = "Survey-simulation divergence diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated steps: simulate, step1..step6, all.
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated model names or provider/model labels.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    formats: Option<Vec<PromptFormat>>,
    /// Replace every provider with the deterministic mock.
    #[arg(long)]
    mock: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Validate datasets and write normalized copies.
    Ingest(RunArgs),
    /// Collect simulated responses.
    Simulate(RunArgs),
    /// Steps 1 to 5 (or `--steps`).
    Analyze(RunArgs),
    /// Step 6: reasoning extraction and corpus direction labels.
    Trace(RunArgs),
    /// Markdown report and plot specs for a run directory.
    Report {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a planted synthetic dataset with its manifest.
    Synth {
        #[arg(long)]
        domain: DomainId,
        #[arg(long, value_enum, default_value = "paper-pattern")]
        preset: PresetArg,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Target latent R² for the target-r2 preset.
        #[arg(long)]
        r2: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum PresetArg {
    PaperPattern,
    TargetR2,
    AmplifiedTrust,
}

impl RunArgs {
    fn pipeline(&self) -> simdiverge_cli::Result<Pipeline> {
        let cfg = RunConfig::load(&self.config)?;
        let opts = Options {
            out: self.out.clone(),
            seed: self.seed,
            models: self.models.clone(),
            formats: self.formats.clone(),
            mock: self.mock,
        };
        Pipeline::new(cfg, &opts)
    }

    fn steps(&self, default: &[Step]) -> simdiverge_cli::Result<Vec<Step>> {
        match &self.steps {
            Some(s) => Step::parse_list(s),
            None => Ok(default.to_vec()),
        }
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    let (args, default) = match &cli.command {
        Command::Ingest(a) => {
            let p = a.pipeline()?;
            p.ingest()?;
            println!("{}", p.out.join("data").display());
            return Ok(());
        }
        Command::Simulate(a) => (a, vec![Step::Simulate]),
        Command::Analyze(a) => (a, Step::ALL[1..6].to_vec()),
        Command::Trace(a) => (a, vec![Step::Step6]),
        Command::Report { config, out } => {
            let dir = match (out, config) {
                (Some(o), _) => o.clone(),
                (None, Some(c)) => RunConfig::load(c)?.out,
                (None, None) => return Err("report needs --out or --config".into()),
            };
            emit_report(&dir)?;
            println!("{}", dir.join("report/report.md").display());
            return Ok(());
        }
        Command::Synth { domain, preset, n, seed, r2, out } => {
            let preset = match preset {
                PresetArg::PaperPattern => SynthPreset::PaperPattern,
                PresetArg::TargetR2 => SynthPreset::TargetR2,
                PresetArg::AmplifiedTrust => SynthPreset::AmplifiedTrust,
            };
            let source = DomainSource {
                id: *domain,
                profiles: None,
                responses: None,
                config: None,
                template: None,
                synth: Some(SynthSource { preset, n: *n, seed: *seed, r2: *r2 }),
            };
            let spec: PlantedSpec = simdiverge_cli::pipeline::planted_spec(&source).expect("synth source");
            let manifest = SynthData::generate(&spec)?.write_dir(out)?;
            println!("{} ({} features)", out.display(), manifest.features.len());
            return Ok(());
        }
    };
    let steps = args.steps(&default)?;
    let p = args.pipeline()?;
    let manifest = p.run(&steps)?;
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    println!("{} (run {})", p.out.display(), p.run_id);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
