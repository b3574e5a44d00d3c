use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::config::{ExperimentConfig, Overrides};
use crate::error::CliError;
use crate::runner::run_experiment;

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub config: PathBuf,
    pub out_dir: Option<PathBuf>,
    pub exit_code: i32,
    pub message: String,
}

/// `*.toml` files directly inside `dir`, sorted by name.
pub fn sweep_configs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Config(format!("no .toml files in {}", dir.display())));
    }
    Ok(files)
}

fn run_one(path: &Path, base: &Path, overrides: &Overrides) -> SweepEntry {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let out_dir = base.join(&stem);
    let result = ExperimentConfig::load(path).and_then(|mut cfg| {
        cfg.apply(overrides);
        cfg.output.dir = out_dir.clone();
        run_experiment(&cfg)
    });
    match result {
        Ok(_) => SweepEntry {
            config: path.to_path_buf(),
            out_dir: Some(out_dir),
            exit_code: 0,
            message: "ok".into(),
        },
        Err(e) => SweepEntry {
            config: path.to_path_buf(),
            out_dir: out_dir.is_dir().then_some(out_dir),
            exit_code: e.exit_code(),
            message: e.to_string(),
        },
    }
}

/// Runs every configuration in `dir` on `threads` workers. Each run writes
/// to `<base>/<file stem>`, where `base` is the override output directory
/// or `<dir>/out`.
pub fn run_sweep(dir: &Path, overrides: &Overrides, threads: usize) -> Result<Vec<SweepEntry>, CliError> {
    let files = sweep_configs(dir)?;
    let base = overrides.out_dir.clone().unwrap_or_else(|| dir.join("out"));
    let per_run = Overrides {
        out_dir: None,
        ..overrides.clone()
    };
    let next = AtomicUsize::new(0);
    let results = Mutex::new(vec![None; files.len()]);
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, files.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = files.get(i) else { break };
                log::info!("sweep: starting {}", path.display());
                let entry = run_one(path, &base, &per_run);
                results.lock().expect("sweep results poisoned")[i] = Some(entry);
            });
        }
    });
    let entries: Vec<SweepEntry> = results
        .into_inner()
        .expect("sweep results poisoned")
        .into_iter()
        .map(|e| e.expect("every config visited"))
        .collect();
    std::fs::create_dir_all(&base).map_err(|e| CliError::io(&base, e))?;
    let summary = base.join("sweep.json");
    let file = std::fs::File::create(&summary).map_err(|e| CliError::io(&summary, e))?;
    serde_json::to_writer_pretty(file, &entries).map_err(|e| CliError::io(&summary, std::io::Error::other(e)))?;
    Ok(entries)
}
