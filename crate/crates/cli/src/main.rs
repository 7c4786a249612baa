use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use curvewire::io::{
    emit_plot, parse_config, read_spectrum_csv, write_hartman_csv, write_json, write_spectrum_csv,
    RunManifest, SpectrumTable,
};
use curvewire::oracle::{oracle_suite, OracleCheck};
use curvewire::sweep::{describe_profile, hartman_scan, run};
use curvewire::units::mev_to_hartree;
use curvewire::{solve_smatrix, Chain, SweepConfig};

const THREADS_ENV: &str = "CURVEWIRE_THREADS";
const ORACLE_SEED: u64 = 20_240_917;

#[derive(Parser)]
#[command(
    name = "curvewire",
    version,
    about = "Transmission and Wigner delay of curved quantum wires"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep one profile over the configured energy grid.
    Spectrum(Common),
    /// Wigner delay at a fixed energy for stretched copies of the profile.
    Hartman(Common),
    /// Run the reference-solver suite, plus unitarity checks if a config is given.
    Validate(Common),
    /// Re-render the SVG of a spectrum CSV.
    Plot {
        /// Spectrum CSV written by `spectrum`.
        csv: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for outputs; created if missing.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads. CURVEWIRE_THREADS takes precedence.
    #[arg(long)]
    threads: Option<usize>,
    /// Number of lattice intervals across the wire.
    #[arg(long)]
    resolution: Option<usize>,
    /// Also write an SVG plot of the spectrum.
    #[arg(long)]
    emit_svg: bool,
}

impl Common {
    fn load(&self) -> Result<SweepConfig> {
        let path = self.config.as_deref().context("--config is required")?;
        let mut config = parse_config(path)?;
        if let Some(r) = self.resolution {
            config.intervals = r;
        }
        if let Some(t) = threads_override(self.threads)? {
            config.threads = Some(t);
        }
        config.validate()?;
        Ok(config)
    }

    fn out(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;
        Ok(self.out_dir.join(name))
    }
}

fn threads_override(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_ENV}={v} is not a thread count"))?;
            if n == 0 {
                bail!("{THREADS_ENV} must be >= 1");
            }
            Ok(Some(n))
        }
        _ => Ok(flag),
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn spectrum(common: &Common) -> Result<()> {
    let start = Instant::now();
    let config = common.load()?;
    let result = run(&config)?;
    let csv = common.out("spectrum.csv")?;
    write_spectrum_csv(&result.spectrum, &csv)?;

    let mut manifest = RunManifest::for_config("spectrum", &config);
    manifest.intervals = Some(result.intervals);
    manifest.lattice_constant = Some(result.spacing);
    manifest.converged = result.converged;
    manifest.convergence_history = result.history.clone();
    manifest.record_spectrum(&result.spectrum);
    manifest.outputs.push(display(&csv));
    if common.emit_svg {
        let svg = common.out("spectrum.svg")?;
        let title = describe_profile(&config.profile);
        emit_plot(&SpectrumTable::from(&result.spectrum), &title, &svg)?;
        manifest.outputs.push(display(&svg));
    }
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(&common.out("spectrum.manifest.json")?)?;

    if !result.converged {
        eprintln!(
            "warning: transmission not converged to 1e-4 after {} intervals",
            result.intervals
        );
    }
    println!(
        "{} energies, {} intervals, wrote {}",
        result.spectrum.len(),
        result.intervals,
        csv.display()
    );
    Ok(())
}

fn hartman(common: &Common) -> Result<()> {
    let start = Instant::now();
    let config = common.load()?;
    let probe = mev_to_hartree(config.hartman.probe_mev);
    let scan = hartman_scan(&config.profile, &config.hartman.stretches, probe, &config)?;
    let csv = common.out("hartman.csv")?;
    write_hartman_csv(&scan, &csv)?;

    let mut manifest = RunManifest::for_config("hartman", &config);
    manifest.converged = scan.rows.iter().all(|r| r.converged);
    manifest.outputs.push(display(&csv));
    for (stretch, why) in &scan.skipped {
        eprintln!("warning: stretch {stretch} skipped: {why}");
    }
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(&common.out("hartman.manifest.json")?)?;

    match scan.fit {
        Some(fit) => println!(
            "slope {:.6e} au/bohr (classical {:.6e}), max residual {:.3e} of range",
            fit.slope,
            (config.mass / (2.0 * probe)).sqrt(),
            fit.relative_residual
        ),
        None => println!("fewer than two stretches evaluated; no fit"),
    }
    Ok(())
}

/// Unitarity, reciprocity and probability conservation over the grid of `config`.
fn grid_checks(config: &SweepConfig) -> Result<Vec<OracleCheck>> {
    let chain = Chain::build(&config.profile, config.intervals, config.mass)?;
    let grid = config.energy_grid();
    let (mut unitarity, mut reciprocity, mut conservation) = (0.0f64, 0.0f64, 0.0f64);
    for &e in &grid {
        let p = solve_smatrix(&chain, e)?;
        unitarity = unitarity.max(p.unitarity_defect);
        reciprocity = reciprocity.max(p.s.reciprocity_defect());
        conservation = conservation.max((p.transmission() + p.reflection() - 1.0).abs());
    }
    let check = |name: &str, worst: f64, tolerance: f64| OracleCheck {
        name: name.into(),
        worst,
        tolerance,
        samples: grid.len(),
        passed: worst < tolerance,
    };
    Ok(vec![
        check("grid_unitarity", unitarity, 1e-10),
        check("grid_reciprocity", reciprocity, 1e-8),
        check("grid_probability", conservation, 1e-10),
    ])
}

fn validate(common: &Common) -> Result<bool> {
    let start = Instant::now();
    let mut checks = oracle_suite(ORACLE_SEED)?;
    let mut manifest = match &common.config {
        Some(_) => {
            let config = common.load()?;
            checks.extend(grid_checks(&config)?);
            RunManifest::for_config("validate", &config)
        }
        None => RunManifest::new("validate"),
    };
    for c in &checks {
        println!(
            "{:<32} {} worst {:.3e} (tol {:.0e}, n = {})",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.worst,
            c.tolerance,
            c.samples
        );
    }
    let report = common.out("validate.json")?;
    write_json(&checks, &report)?;
    let ok = checks.iter().all(|c| c.passed);
    manifest.converged = ok;
    manifest.outputs.push(display(&report));
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(&common.out("validate.manifest.json")?)?;
    Ok(ok)
}

fn plot(csv: &Path, common: &Common) -> Result<()> {
    let start = Instant::now();
    let table = read_spectrum_csv(csv)?;
    let stem = csv
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("spectrum")
        .to_string();
    let svg = common.out(&format!("{stem}.svg"))?;
    emit_plot(&table, &stem, &svg)?;
    let mut manifest = RunManifest::new("plot");
    manifest.inputs.push(display(csv));
    manifest.outputs.push(display(&svg));
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    manifest.write(&common.out(&format!("{stem}.svg.manifest.json"))?)?;
    println!("{} points, wrote {}", table.len(), svg.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Spectrum(c) => spectrum(c).map(|_| true),
        Command::Hartman(c) => hartman(c).map(|_| true),
        Command::Validate(c) => validate(c),
        Command::Plot { csv, common } => plot(csv, common).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
