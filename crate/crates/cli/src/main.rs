use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use wgcdm::analysis::mean_free_path;
use wgcdm::config::{parse_config, parse_config_str, RunConfig};
use wgcdm::experiment::{
    format_sweep_table, geometry_dir_name, read_geometries, run_experiment, sweep_geometry,
};
use wgcdm::geometry::{cutoff_wavenumber, longitudinal_wavenumber, propagating_modes, WaveguideGeometry};
use wgcdm::output::{fmt_f64, to_json_string};
use wgcdm::{Error, Result};

const PRESETS: &[(&str, &str)] = &[
    ("fig2a", include_str!("../presets/fig2a.toml")),
    ("fig2b", include_str!("../presets/fig2b.toml")),
];

#[derive(Parser)]
#[command(name = "wgcdm", version, about = "Coupled-dipole light transport in a conducting rectangular waveguide")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan T(L), fit both scaling laws and write curve, fits and manifest.
    Run {
        /// Config file, or a preset name (fig2a, fig2b).
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override rng.master_seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Repeat the run over a list of cross-sections.
    Sweep {
        config: String,
        /// TOML file of [[geometry]] entries.
        #[arg(long)]
        geometries: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the propagating TE/TM modes.
    Modes {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        k: f64,
    },
    /// Print the free-space photon mean free path.
    Mfp {
        #[arg(long, allow_hyphen_values = true)]
        n: f64,
        #[arg(long, allow_hyphen_values = true)]
        delta: f64,
    },
}

fn load(spec: &str) -> Result<(RunConfig, String)> {
    let path = Path::new(spec);
    if path.exists() {
        let name = path.file_stem().map_or("run".into(), |s| s.to_string_lossy().into_owned());
        return Ok((parse_config(path)?, name));
    }
    match PRESETS.iter().find(|(name, _)| *name == spec) {
        Some((name, text)) => Ok((parse_config_str(text)?, name.to_string())),
        None => Err(Error::io(
            path,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("no such file and no preset named `{spec}` (presets: fig2a, fig2b)"),
            ),
        )),
    }
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Configuration("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Configuration(e.to_string()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, seed, threads } => {
            set_threads(threads)?;
            let (mut cfg, name) = load(&config)?;
            if let Some(s) = seed {
                cfg.simulation.master_seed = s;
            }
            let result = run_experiment(&cfg)?;
            let dir = out.unwrap_or_else(|| PathBuf::from("out").join(name));
            result.write(&dir)?;
            print!("{}", to_json_string(&result.fits_json()));
            eprintln!("wrote {}", dir.display());
        }
        Command::Sweep { config, geometries, out, seed, threads } => {
            set_threads(threads)?;
            let (mut cfg, name) = load(&config)?;
            if let Some(s) = seed {
                cfg.simulation.master_seed = s;
            }
            let entries = read_geometries(&geometries)?;
            let rows = sweep_geometry(&cfg, &entries);
            let dir = out.unwrap_or_else(|| PathBuf::from("out").join(format!("{name}_sweep")));
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            for row in &rows {
                if let Ok(result) = &row.outcome {
                    result.write(&dir.join(geometry_dir_name(row.a, row.b)))?;
                }
            }
            let table = format_sweep_table(&rows);
            let path = dir.join("sweep.csv");
            std::fs::write(&path, &table).map_err(|e| Error::io(&path, e))?;
            print!("{table}");
        }
        Command::Modes { a, b, k } => {
            let geom = WaveguideGeometry::new(a, b)?;
            if k.is_nan() || k <= 0.0 || k.is_infinite() {
                return Err(Error::Domain(format!("k must be positive, got {k}")));
            }
            println!("# mode k_c k_z");
            for mode in propagating_modes(&geom, k) {
                let kz = longitudinal_wavenumber(mode, &geom, k)?;
                println!("{mode} {} {}", fmt_f64(cutoff_wavenumber(mode, &geom)), fmt_f64(kz.re));
            }
        }
        Command::Mfp { n, delta } => {
            println!("{}", mean_free_path(n, delta)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = json!({ "error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() });
            eprintln!("{record}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
