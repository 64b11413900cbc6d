use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use wgs_core::AlphaGrid;
use wgs_lab::config::{parse_alpha_grid, Experiment, SweepConfig};
use wgs_lab::{execute, LabError};

/// Parameter sweeps over entanglement measures of weighted graph states.
#[derive(Debug, Parser)]
#[command(name = "wgs-lab", version)]
struct Args {
    experiment: Experiment,
    /// TOML file with sweep settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Comma-separated local dimensions for multi-d experiments.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Alpha grid as start:step:count.
    #[arg(long, value_parser = parse_alpha_grid)]
    alpha: Option<AlphaGrid>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the resolved plan and exit.
    #[arg(long)]
    dry_run: bool,
}

fn load(args: Args) -> Result<(SweepConfig, bool), LabError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| LabError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let cfg = SweepConfig::from_toml(&text).map_err(LabError::Usage)?;
            if cfg.experiment != args.experiment {
                return Err(LabError::Usage(format!(
                    "config file is for {}, command line asks for {}",
                    cfg.experiment, args.experiment
                )));
            }
            cfg
        }
        None => SweepConfig::new(args.experiment),
    };
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(d) = args.d {
        cfg.d = d;
    }
    if args.dims.is_some() {
        cfg.dims = args.dims;
    }
    if args.alpha.is_some() {
        cfg.alpha = args.alpha;
    }
    if args.t0.is_some() {
        cfg.t0 = args.t0;
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if args.jobs.is_some() {
        cfg.jobs = args.jobs;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let cfg = cfg.resolve().map_err(LabError::Config)?;
    Ok((cfg, args.dry_run))
}

fn run(args: Args) -> Result<(), LabError> {
    let (cfg, dry_run) = load(args)?;
    if dry_run {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| LabError::Usage(format!("output directory {} is not writable: {e}", cfg.out.display())))?;
    let summary = execute(&cfg)?;
    println!(
        "{} rows -> {}{}",
        summary.table.rows.len(),
        summary.paths.csv.display(),
        if summary.cache_hit { " (cached)" } else { "" }
    );
    Ok(())
}

/// Parses `argv`, runs the experiment and returns the process exit status.
fn status<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match run(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as u8
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    ExitCode::from(status(std::env::args_os()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(argv: &[&str]) -> Result<(SweepConfig, bool), LabError> {
        load(Args::try_parse_from(std::iter::once("wgs-lab").chain(argv.iter().copied())).unwrap())
    }

    #[test]
    fn bad_arguments_exit_with_usage_status() {
        assert_eq!(status(["wgs-lab", "no-such-experiment"]), 1);
        assert_eq!(status(["wgs-lab", "ggm-time", "--alpha", "1:2"]), 1);
        assert_eq!(status(["wgs-lab", "ggm-time", "--n", "1", "--dry-run"]), 1);
        assert_eq!(status(["wgs-lab", "--help"]), 0);
        assert_eq!(status(["wgs-lab", "n-sat", "--dry-run"]), 0);
    }

    #[test]
    fn flags_resolve_into_the_plan() {
        let (cfg, dry) = plan(&["n-sat", "--d", "3", "--alpha", "1:0.5:4", "--dims", "2,3", "--dry-run"]).unwrap();
        assert!(dry);
        assert_eq!(cfg.d, 3);
        assert_eq!(cfg.dims(), vec![2, 3]);
        assert_eq!(cfg.alpha.unwrap().count, 4);
        assert_eq!(cfg.t0, Some(3.0 * std::f64::consts::PI));
        assert!(cfg.to_toml().contains("experiment = \"n-sat\""));
    }

    #[test]
    fn config_file_and_flag_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.toml");
        let file = path.to_str().unwrap();
        std::fs::write(&path, "experiment = \"ggm-time\"\nn = 50\nd = 3\n").unwrap();
        let (cfg, _) = plan(&["ggm-time", "--config", file, "--d", "4"]).unwrap();
        assert_eq!((cfg.n, cfg.d), (50, 4));
        assert!(matches!(plan(&["entropy", "--config", file]), Err(LabError::Usage(_))));
        std::fs::write(&path, "experiment = \"ggm-time\"\nbogus = 1\n").unwrap();
        assert_eq!(status(["wgs-lab", "ggm-time", "--config", file]), 1);
    }

    #[test]
    fn size_cap_exits_with_resource_status() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.toml");
        std::fs::write(&path, "experiment = \"approx-error\"\nd = 4\nsizes = [6, 8]\nt0 = 0.5\n").unwrap();
        let out = dir.path().join("out");
        let code = status(["wgs-lab", "approx-error", "--config", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code, 3);
        let csv = std::fs::read_to_string(out.join("approx-error.csv")).unwrap();
        assert_eq!(csv.lines().count(), 1 + 2);
    }
}
