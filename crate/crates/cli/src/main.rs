//! `iim`: phantom generation, forward solves and inversion experiments.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use iim_core::harness::{
    emit_report, load_report, run_noise_sweep, run_single, ExperimentConfig, ExperimentSetup, PAPER_GRID,
};
use iim_core::iim::InversionMode;

/// Noise levels used by `sweep` when neither the config nor `--noise` lists any.
const DEFAULT_SWEEP: [f64; 10] = [0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10];

#[derive(Parser, Debug)]
#[command(name = "iim", version, about = "Intensity-based inversion of Lamé parameters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the phantom and dump the image and region labels.
    Phantom(Common),
    /// Solve the forward problem at the ground truth and emit the deformed image.
    Forward(Common),
    /// Run one reconstruction (first noise level, first seed).
    Invert(Common),
    /// Run every noise level for every seed.
    Sweep(Common),
    /// Re-render the CSV files of an existing output directory.
    Report {
        /// Directory holding a `report.json`.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Single,
    Four,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    MuOnly,
    Full,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// TOML experiment file; flags override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long, num_args = 2, value_names = ["NX", "NY"], conflicts_with = "paper_grid")]
    grid: Option<Vec<usize>>,
    /// Comma-separated relative noise levels, e.g. 0.01,0.02.
    #[arg(long, value_delimiter = ',', value_name = "LIST")]
    noise: Option<Vec<f64>>,
    /// Master seed; replaces the configured seed list.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Nelder-Mead iteration budget.
    #[arg(long, value_name = "N")]
    iters: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Use the 508×216 grid.
    #[arg(long)]
    paper_grid: bool,
}

impl Common {
    fn resolve(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        let e = &mut cfg.experiment;
        if let Some(p) = self.preset {
            e.preset = match p {
                Preset::Single => "single",
                Preset::Four => "four",
            }
            .into();
            cfg.phantom = None;
        }
        if let Some(m) = self.mode {
            e.mode = match m {
                Mode::MuOnly => InversionMode::MuOnly,
                Mode::Full => InversionMode::Full,
            };
        }
        if let Some(g) = &self.grid {
            e.grid = [g[0], g[1]];
        }
        if self.paper_grid {
            e.grid = PAPER_GRID;
        }
        if let Some(n) = &self.noise {
            e.noise_levels = n.clone();
        }
        if let Some(s) = self.seed {
            e.seeds = vec![s];
        }
        if let Some(i) = self.iters {
            cfg.optimizer.max_iterations = i;
        }
        let out = self.out.clone().or_else(|| e.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
        cfg.validate()?;
        Ok((cfg, out))
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_with(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf).with_context(|| format!("encoding {}", path.display()))?;
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

fn write_manifest(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&serde_json::json!({ "config": cfg }))?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn phantom(common: &Common) -> Result<()> {
    let (cfg, out) = common.resolve()?;
    let setup = ExperimentSetup::prepare(&cfg)?;
    create_dir(&out)?;
    write_with(&out.join("reference.pgm"), |b| setup.reference.write_pgm(b))?;
    write_with(&out.join("reference.csv"), |b| setup.reference.write_csv(b))?;
    write_with(&out.join("labels.csv"), |b| {
        writeln!(b, "triangle,region")?;
        for (t, r) in setup.regions.labels().iter().enumerate() {
            writeln!(b, "{t},{r}")?;
        }
        Ok(())
    })?;
    write_manifest(&out, &cfg)?;
    println!("phantom {}x{} written to {}", setup.reference.width(), setup.reference.height(), out.display());
    Ok(())
}

fn forward(common: &Common) -> Result<()> {
    let (cfg, out) = common.resolve()?;
    let setup = ExperimentSetup::prepare(&cfg)?;
    create_dir(&out)?;
    write_with(&out.join("reference.pgm"), |b| setup.reference.write_pgm(b))?;
    write_with(&out.join("deformed.pgm"), |b| setup.deformed.write_pgm(b))?;
    write_with(&out.join("deformed.csv"), |b| setup.deformed.write_csv(b))?;
    write_with(&out.join("displacement.csv"), |b| {
        writeln!(b, "x1,x2,u1,u2")?;
        for (p, u) in setup.mesh.nodes().iter().zip(setup.displacement.values()) {
            writeln!(b, "{},{},{},{}", p[0], p[1], u[0], u[1])?;
        }
        Ok(())
    })?;
    write_manifest(&out, &cfg)?;
    println!("round-trip floor {:e}; written to {}", setup.interpolation_floor, out.display());
    Ok(())
}

fn print_runs(report: &iim_core::harness::ExperimentReport) {
    for r in &report.runs {
        println!(
            "{}: delta_joint {:.6} (best {:.6} at iteration {}), {} iterations",
            r.run_id, r.final_error.joint, r.best_error.joint, r.best_iteration, r.iterations
        );
    }
    if let Some(s) = &report.statistics {
        println!("spearman {:?}, log-log slope {:?}", s.spearman, s.log_log_slope);
    }
}

fn invert(common: &Common) -> Result<()> {
    let (cfg, out) = common.resolve()?;
    let report = run_single(&cfg)?;
    emit_report(&report, &out)?;
    print_runs(&report);
    Ok(())
}

fn sweep(common: &Common) -> Result<()> {
    let (mut cfg, out) = common.resolve()?;
    if cfg.experiment.noise_levels.is_empty() {
        cfg.experiment.noise_levels = DEFAULT_SWEEP.to_vec();
    }
    let report = run_noise_sweep(&cfg)?;
    emit_report(&report, &out)?;
    print_runs(&report);
    Ok(())
}

fn report(out: &Path) -> Result<()> {
    let report = load_report(out)?;
    emit_report(&report, out)?;
    print_runs(&report);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Phantom(c) => phantom(c),
        Command::Forward(c) => forward(c),
        Command::Invert(c) => invert(c),
        Command::Sweep(c) => sweep(c),
        Command::Report { out } => report(out),
    }
}
