//! `train`: fit an ensemble and write a complete run directory.
//!
//! Artifact layout:
//!
//! ```text
//! <run>/
//!   member00/checkpoint.json   network parameters
//!   member00/runlog.csv        per-iteration losses, λ, gradient norms
//!   member00/trajectory.csv    the λ schedule the policy emitted
//!   ...
//!   manifest.json              written last; certifies a complete run
//! ```
//!
//! The config is validated and the dataset loaded **before** the run
//! directory is created, so a bad invocation leaves nothing behind.

use crate::config::ExperimentConfig;
use crate::manifest::{LeakAudit, Manifest, MemberRecord};
use crate::{CliError, CliResult};
use nbeats_s::data::{Dataset, SplitMode};
use nbeats_s::dlw::write_trajectory_csv;
use nbeats_s::model::Checkpoint;
use nbeats_s::trainer::train_members;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

pub fn run(config_path: &Path, out: Option<PathBuf>, seeds: Option<Vec<u64>>) -> CliResult<()> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(seeds) = seeds {
        if seeds.is_empty() {
            return Err(CliError::Config("--seeds must list at least one seed".into()));
        }
        config.seeds = Some(seeds);
    }
    config.validate()?;
    let run_dir = out.or_else(|| config.output_dir.clone()).ok_or_else(|| {
        CliError::Config("no run directory: pass --out or set output_dir in the config".into())
    })?;

    let member_seeds = config.member_seeds();
    let (series, stamp) = config.dataset.load()?;
    let dataset = Dataset::new(series, config.split, config.split_mode());
    if dataset.is_empty() {
        let hint = dataset
            .exclusions()
            .first()
            .map(|e| format!(" (first exclusion: {} — {})", e.series_id, e.reason))
            .unwrap_or_default();
        return Err(CliError::Config(format!(
            "no series is long enough for the requested split{hint}"
        )));
    }

    // All inputs check out; only now touch the filesystem.
    std::fs::create_dir_all(&run_dir).map_err(CliError::runtime)?;
    log::info!(
        "training {} member(s) on {} series ({} iterations, policy {})",
        member_seeds.len(),
        dataset.len(),
        config.training.iterations,
        config.dlw.name()
    );
    let outcomes = train_members(&dataset, &config.train_config(config.seed), &member_seeds)
        .map_err(CliError::runtime)?;

    let mut members = Vec::with_capacity(outcomes.len());
    for (index, outcome) in outcomes.iter().enumerate() {
        let rel = format!("member{index:02}");
        let dir = run_dir.join(&rel);
        std::fs::create_dir_all(&dir).map_err(CliError::runtime)?;

        let checkpoint = Checkpoint {
            config: config.model.clone(),
            params: outcome.params.clone(),
        };
        checkpoint
            .save(&dir.join("checkpoint.json"))
            .map_err(CliError::runtime)?;
        let runlog = std::fs::File::create(dir.join("runlog.csv")).map_err(CliError::runtime)?;
        outcome
            .log
            .write_csv(BufWriter::new(runlog))
            .map_err(CliError::runtime)?;
        let trajectory =
            std::fs::File::create(dir.join("trajectory.csv")).map_err(CliError::runtime)?;
        write_trajectory_csv(&outcome.dlw_trajectory, BufWriter::new(trajectory))
            .map_err(CliError::runtime)?;

        members.push(MemberRecord {
            index,
            seed: member_seeds[index],
            checkpoint: format!("{rel}/checkpoint.json"),
            runlog: format!("{rel}/runlog.csv"),
            trajectory: format!("{rel}/trajectory.csv"),
        });
        log::info!(
            "member {index}: final composite {:.6} in {:.1}s",
            outcome.log.records.last().map(|r| r.composite).unwrap_or(f64::NAN),
            outcome.log.wall_clock.as_secs_f64()
        );
    }

    let leak_audit = LeakAudit {
        max_origin_index_used: outcomes.iter().map(|o| o.max_index_used).max().unwrap_or(0),
        min_leak_headroom: outcomes
            .iter()
            .map(|o| o.min_leak_headroom)
            .min()
            .unwrap_or(0),
        earliest_train_end: dataset
            .entries()
            .iter()
            .map(|e| e.split.train_end)
            .min()
            .unwrap_or(0),
    };

    // Echo the fully resolved config so the run is reproducible from the
    // manifest alone.
    let mut echo = config.clone();
    echo.seeds = Some(member_seeds.clone());
    echo.output_dir = Some(run_dir.clone());
    let manifest = Manifest {
        command: "train".into(),
        config: echo,
        member_seeds,
        dataset: stamp,
        excluded_series: dataset
            .exclusions()
            .iter()
            .map(|e| e.series_id.clone())
            .collect(),
        split_mode: match dataset.mode() {
            SplitMode::Tuning => "tuning".into(),
            SplitMode::FinalFit => "final_fit".into(),
        },
        policy: config.dlw.name().into(),
        members,
        leak_audit: leak_audit.clone(),
    };
    manifest.save(&run_dir)?;

    println!(
        "trained {} member(s) into {}",
        manifest.members.len(),
        run_dir.display()
    );
    println!(
        "leak audit: max series index sampled {} < earliest training boundary {} \
         (headroom at the boundary: {})",
        leak_audit.max_origin_index_used,
        leak_audit.earliest_train_end,
        leak_audit.min_leak_headroom
    );
    Ok(())
}
