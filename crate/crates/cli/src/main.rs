mod config;
mod output;
mod studies;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::output::{sha256_hex, write_manifest, write_outputs, Manifest, Versions};

const DEFAULT_OUTPUT_DIR: &str = "radfock-out";

#[derive(Parser)]
#[command(name = "radfock", version, about = "Run radial Fock-space studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for reports; overrides `output_dir` in the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads for the parallel kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study described by a config file.
    Run { config: PathBuf },
    /// List the available studies.
    List,
}

enum Status {
    Pass,
    Fail,
    Error(String),
}

fn list() -> String {
    let mut s = String::new();
    for (study, params, class) in studies::catalog() {
        s.push_str(&format!("{:<16}{:<12}{}\n", study.name(), class, params));
    }
    s
}

fn run(path: &Path, cli: &Cli) -> ExitCode {
    let start = Instant::now();
    let bytes = std::fs::read(path);
    let mut manifest = Manifest {
        config_path: path.display().to_string(),
        config_sha256: bytes.as_ref().ok().map(|b| sha256_hex(b)),
        study: None,
        seed: None,
        versions: Versions::current(),
        wall_time_s: 0.0,
        status: String::new(),
        error: None,
        files: Vec::new(),
    };
    let mut dir = cli.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let status = (|| -> anyhow::Result<Status> {
        let bytes = bytes.map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        let text = String::from_utf8(bytes).map_err(|_| anyhow::anyhow!("{} is not UTF-8", path.display()))?;
        let mut cfg = ExperimentConfig::parse(&text)?;
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        if let (None, Some(d)) = (&cli.output_dir, &cfg.output_dir) {
            dir = d.clone();
        }
        manifest.study = Some(cfg.study.to_string());
        manifest.seed = Some(cfg.seed);
        let out = studies::run(&cfg)?;
        manifest.files = write_outputs(&dir, &out)?;
        Ok(if out.pass { Status::Pass } else { Status::Fail })
    })()
    .unwrap_or_else(|e| Status::Error(format!("{e:#}")));
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    let (label, code) = match &status {
        Status::Pass => ("pass", 0),
        Status::Fail => ("fail", 2),
        Status::Error(e) => {
            eprintln!("error: {e}");
            manifest.error = Some(e.clone());
            ("error", 1)
        }
    };
    manifest.status = label.into();
    manifest.files.push("manifest.json".into());
    match write_manifest(&dir, &manifest) {
        Ok(p) => println!("{label}: {}", p.display()),
        Err(e) => {
            eprintln!("error: cannot write manifest: {e:#}");
            return ExitCode::from(1);
        }
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match &cli.command {
        Command::List => {
            print!("{}", list());
            ExitCode::SUCCESS
        }
        Command::Run { config } => run(config, &cli),
    }
}
