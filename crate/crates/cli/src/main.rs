use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use framelab_core::density::DensitySchedule;
use framelab_core::finframe::{comparison_residual, double_sum_bounds};
use framelab_core::localization::localization_table;
use framelab_core::verify::{gram_truncation_study, run_and_write, GramOptions, MeasureConfig, TrialCache};
use framelab_core::{density, Ball, Error, FiniteFrame, FramePairSpec, KernelConfig, LocalizationConfig, Omega, ScenarioConfig};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "framelab", version, about = "Continuous frames, reproducing kernels and Beurling densities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its JSON report and CSV tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Upper and lower density of `mu` with respect to `nu`.
    Density {
        /// Measure as inline JSON or a path to a JSON file.
        #[arg(long)]
        mu: String,
        #[arg(long)]
        nu: String,
        #[arg(long, default_value_t = 128.0)]
        rmax: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Localization defect of a self-dual pair over a radius schedule.
    Localize {
        /// `{"kernel": {...}, "mu": {...}, "nu": {...}, "centers": [[...]]}`
        #[arg(long)]
        pair: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        radii: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gram spectra of a kernel family over growing windows.
    Gram {
        /// Kernel config as inline JSON or a path.
        #[arg(long)]
        kernel: String,
        /// Family index (lattice or point set) as inline JSON or a path.
        #[arg(long)]
        family: String,
        #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
        windows: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Comparison identity and double-sum bounds for two finite frames.
    Identity {
        /// Frame CSV, one member per row: `re_1, im_1, .., re_n, im_n, weight`.
        /// Members are indexed by row number on the line.
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: PathBuf,
        /// Center of the index ball, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Vec<f64>,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairFile {
    kernel: KernelConfig,
    mu: MeasureConfig,
    nu: MeasureConfig,
    #[serde(default)]
    centers: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    localization: Option<LocalizationConfig>,
}

/// Inline JSON when the argument starts with `{`, otherwise a file path.
fn json_arg<T: serde::de::DeserializeOwned>(arg: &str) -> Result<T> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading {arg}"))?
    };
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        Error::Config { path: e.path().to_string(), message: e.inner().to_string() }.into()
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes())?;
            s.write_all(b"\n")?;
            Ok(())
        }
    }
}

fn run_scenario(config: &Path, out_dir: Option<PathBuf>, seed: Option<u64>) -> Result<bool> {
    let mut cfg = ScenarioConfig::from_path(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if out_dir.is_some() {
        cfg.output.dir = out_dir;
    }
    let (report, paths) = run_and_write(&cfg, Path::new("."))?;
    for v in &report.verdicts {
        println!("{:<40} {:<20} {}", v.id, v.verdict.as_str(), v.statement);
    }
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
    Ok(report.ok())
}

fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Run { config, out_dir, seed } => run_scenario(&config, out_dir, seed),
        Command::Density { mu, nu, rmax, out } => {
            let mu = json_arg::<MeasureConfig>(&mu)?.build()?;
            let nu = json_arg::<MeasureConfig>(&nu)?.build()?;
            let sched = DensitySchedule::default_for(&mu, &nu, rmax)?;
            let est = density(&mu, &nu, &sched)?;
            emit(out.as_deref(), &serde_json::to_string_pretty(&est)?)?;
            Ok(true)
        }
        Command::Localize { pair, radii, out } => {
            let file: PairFile = json_arg(&pair.to_string_lossy())?;
            let kernel = file.kernel.build()?;
            let centers = file.centers.unwrap_or_else(|| vec![vec![0.0; kernel.point_dim()]]);
            let spec = FramePairSpec::new(kernel, file.mu.build()?, file.nu.build()?)?;
            let rows = localization_table(&spec, &centers, &radii, &file.localization.unwrap_or_default())?;
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["center", "r", "defect", "t1", "t2", "normalizer", "eps_eff", "trunc_bound"])?;
            for r in &rows {
                let center = r.center.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
                w.write_record([
                    center,
                    r.r.to_string(),
                    r.defect.to_string(),
                    r.t1.to_string(),
                    r.t2.to_string(),
                    r.normalizer.to_string(),
                    r.eps_eff.to_string(),
                    r.trunc_bound.to_string(),
                ])?;
            }
            let text = String::from_utf8(w.into_inner()?)?;
            emit(out.as_deref(), text.trim_end())?;
            Ok(true)
        }
        Command::Gram { kernel, family, windows, out } => {
            let kernel = json_arg::<KernelConfig>(&kernel)?.build()?;
            let atoms = json_arg::<MeasureConfig>(&family)?.atoms()?;
            let study = gram_truncation_study(&kernel, &atoms, &GramOptions::new(windows), &mut TrialCache::new())?;
            emit(out.as_deref(), &serde_json::to_string_pretty(&study)?)?;
            Ok(true)
        }
        Command::Identity { f, g, center, radius, out } => {
            let f = FiniteFrame::from_csv_path(&f)?;
            let g = FiniteFrame::from_csv_path(&g)?;
            if center.is_empty() {
                bail!("--center needs at least one coordinate");
            }
            let omega = Omega::Ball(Ball::centered(&center, radius)?);
            let cmp = comparison_residual(&f, &g, &omega)?;
            let sums = double_sum_bounds(&f, &g, &omega, 1e-9)?;
            let ok = cmp.residual < 1e-10 && sums.dual_first.holds && sums.dual_second.holds;
            let body = serde_json::json!({ "comparison": cmp, "double_sum": sums });
            emit(out.as_deref(), &serde_json::to_string_pretty(&body)?)?;
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
