//! Run orchestration and persistence: norm-series CSV, diagnostics report,
//! MFLD snapshots, trajectory stores, and the reproducibility manifest.
//! All file writes are atomic (write-temp-then-rename).

use crate::diagnostics::{build_report, BlowupWindowConfig, DiagnosticsReport, NormSeries};
use crate::error::{Error, Result};
use crate::field::StatePair;
use crate::rescale::{zoom, residual_check_with, RescaleParams};
use crate::scenario::Scenario;
use crate::snapshot;
use crate::solver::{march, BlowupInfo, Segment, SolverConstants, Trajectory, WindowRecord};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const SCENARIO_COPY: &str = "scenario.toml";
pub const NORMS_FILE: &str = "norms.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.toml";
pub const TRAJECTORY_DIR: &str = "traj";

/// Atomic write: temp file in the same directory, then rename over target.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp_write");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridMeta {
    pub dimension: usize,
    pub modes_per_axis: usize,
    pub period_length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutcomeMeta {
    pub completed: bool,
    pub blowup_flag: bool,
    pub t_reached: f64,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub time: f64,
    pub u_file: String,
    pub d_file: String,
}

/// Everything needed to audit or recompute a run: configuration hash, seed,
/// version, the measured constants, and the per-window Picard records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub app_version: String,
    pub scenario_hash_fnv1a: String,
    pub seed: u64,
    pub grid: GridMeta,
    pub constants: SolverConstants,
    pub outcome: OutcomeMeta,
    pub snapshots: Vec<SnapshotMeta>,
    pub has_trajectory_store: bool,
    pub windows: Vec<WindowRecord>,
}

impl RunManifest {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Scenario(format!("manifest parse failure: {e}")))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE)).map_err(|e| {
            Error::Scenario(format!("cannot read manifest in {}: {e}", dir.display()))
        })?;
        Self::from_toml_str(&text)
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub completed: bool,
    pub blowup: Option<BlowupInfo>,
    pub manifest: RunManifest,
    /// Absent when the run flagged blow-up before the first window.
    pub report: Option<DiagnosticsReport>,
}

fn grid_meta(scenario: &Scenario) -> GridMeta {
    GridMeta {
        dimension: scenario.grid.dimension,
        modes_per_axis: scenario.grid.modes_per_axis,
        period_length: scenario.grid.period_length,
    }
}

fn norms_csv(series: &NormSeries) -> String {
    let mut out = String::from("t,sup_u,sup_grad_d,dev_unit,div_res\n");
    for i in 0..series.t.len() {
        out.push_str(&format!(
            "{:.15e},{:.15e},{:.15e},{:.15e},{:.15e}\n",
            series.t[i], series.sup_u[i], series.sup_grad_d[i], series.dev_unit[i],
            series.div_res[i]
        ));
    }
    out
}

/// Execute a scenario and write every artifact into `out_dir`.
pub fn run(scenario: &Scenario, out_dir: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(out_dir)?;
    atomic_write(&out_dir.join(SCENARIO_COPY), scenario.source_text.as_bytes())?;

    let grid = scenario.build_grid()?;
    let (u0, d0) = scenario.build_initial(&grid)?;
    let cfg = scenario.solver_config();
    let constants = SolverConstants::from_data(&u0, &d0, cfg.c_star, cfg.t_max_cap)?;

    let outcome = march(&u0, &d0, scenario.solver.time_total_t, &cfg);
    let marched = match outcome {
        Ok(m) => m,
        Err(err) => {
            // serialize what we know about the failing window, then fail
            let (windows, failure) = match &err {
                Error::Window {
                    t_start,
                    t_end,
                    source,
                } => match source.as_ref() {
                    Error::PicardNonConvergence { record } => {
                        let w = WindowRecord {
                            t_start: *t_start,
                            t_end: *t_end,
                            record: (**record).clone(),
                        };
                        (vec![w], err.to_string())
                    }
                    _ => (Vec::new(), err.to_string()),
                },
                _ => (Vec::new(), err.to_string()),
            };
            let manifest = RunManifest {
                schema_version: 1,
                app_version: env!("CARGO_PKG_VERSION").to_string(),
                scenario_hash_fnv1a: format!("{:#018x}", scenario.source_hash),
                seed: scenario.seed,
                grid: grid_meta(scenario),
                constants,
                outcome: OutcomeMeta {
                    completed: false,
                    blowup_flag: false,
                    t_reached: 0.0,
                    failure: Some(failure),
                },
                snapshots: Vec::new(),
                has_trajectory_store: false,
                windows,
            };
            let text = toml::to_string_pretty(&manifest)
                .map_err(|e| Error::Scenario(format!("manifest serialize: {e}")))?;
            atomic_write(&out_dir.join(MANIFEST_FILE), text.as_bytes())?;
            return Err(err);
        }
    };

    let diag_cfg = scenario.diagnostics_config()?;
    let mut snapshots = Vec::new();
    let report = match &marched.trajectory {
        Some(traj) => {
            let report = build_report(traj, &diag_cfg)?;
            atomic_write(
                &out_dir.join(NORMS_FILE),
                norms_csv(&report.series).as_bytes(),
            )?;
            let report_text = toml::to_string_pretty(&report)
                .map_err(|e| Error::Scenario(format!("report serialize: {e}")))?;
            atomic_write(&out_dir.join(DIAGNOSTICS_FILE), report_text.as_bytes())?;
            for (i, &t) in scenario.output.snapshot_times.iter().enumerate() {
                let t = t.min(traj.t_end());
                let state = traj.sample(t)?;
                let u_file = format!("snap_u_{i:04}.mfld");
                let d_file = format!("snap_d_{i:04}.mfld");
                snapshot::write_file(&state.u, &out_dir.join(&u_file))?;
                snapshot::write_file(&state.d, &out_dir.join(&d_file))?;
                snapshots.push(SnapshotMeta {
                    time: t,
                    u_file,
                    d_file,
                });
            }
            if scenario.output.store_trajectory {
                store_trajectory(traj, &out_dir.join(TRAJECTORY_DIR))?;
            }
            Some(report)
        }
        None => None,
    };

    let manifest = RunManifest {
        schema_version: 1,
        app_version: env!("CARGO_PKG_VERSION").to_string(),
        scenario_hash_fnv1a: format!("{:#018x}", scenario.source_hash),
        seed: scenario.seed,
        grid: grid_meta(scenario),
        constants,
        outcome: OutcomeMeta {
            completed: marched.completed(),
            blowup_flag: marched.blowup.is_some(),
            t_reached: marched
                .trajectory
                .as_ref()
                .map(|t| t.t_end())
                .unwrap_or(0.0),
            failure: None,
        },
        snapshots,
        has_trajectory_store: scenario.output.store_trajectory && marched.trajectory.is_some(),
        windows: marched.windows.clone(),
    };
    let text = toml::to_string_pretty(&manifest)
        .map_err(|e| Error::Scenario(format!("manifest serialize: {e}")))?;
    atomic_write(&out_dir.join(MANIFEST_FILE), text.as_bytes())?;

    Ok(RunOutcome {
        out_dir: out_dir.to_path_buf(),
        completed: marched.completed(),
        blowup: marched.blowup,
        manifest,
        report,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryIndex {
    dimension: usize,
    modes_per_axis: usize,
    period_length: f64,
    segments: Vec<SegmentIndex>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SegmentIndex {
    times: Vec<f64>,
    u_files: Vec<String>,
    d_files: Vec<String>,
}

/// Persist every trajectory node as MFLD pairs plus a TOML index carrying
/// the node times and the (possibly rescaled) period.
pub fn store_trajectory(traj: &Trajectory, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let grid = traj.grid();
    let mut segments = Vec::new();
    for (si, seg) in traj.segments().iter().enumerate() {
        let mut idx = SegmentIndex {
            times: seg.times().to_vec(),
            u_files: Vec::new(),
            d_files: Vec::new(),
        };
        for (ni, state) in seg.states().iter().enumerate() {
            let u_file = format!("seg{si:03}_n{ni:02}_u.mfld");
            let d_file = format!("seg{si:03}_n{ni:02}_d.mfld");
            atomic_write(&dir.join(&u_file), &snapshot::to_bytes(&state.u)?)?;
            atomic_write(&dir.join(&d_file), &snapshot::to_bytes(&state.d)?)?;
            idx.u_files.push(u_file);
            idx.d_files.push(d_file);
        }
        segments.push(idx);
    }
    let index = TrajectoryIndex {
        dimension: grid.dimension(),
        modes_per_axis: grid.modes_per_axis(),
        period_length: grid.period(),
        segments,
    };
    let text = toml::to_string_pretty(&index)
        .map_err(|e| Error::Scenario(format!("trajectory index serialize: {e}")))?;
    atomic_write(&dir.join("index.toml"), text.as_bytes())?;
    Ok(())
}

pub fn load_trajectory(dir: &Path) -> Result<Trajectory> {
    let text = std::fs::read_to_string(dir.join("index.toml")).map_err(|e| {
        Error::Scenario(format!(
            "cannot read trajectory index in {}: {e}",
            dir.display()
        ))
    })?;
    let index: TrajectoryIndex = toml::from_str(&text)
        .map_err(|e| Error::Scenario(format!("trajectory index parse failure: {e}")))?;
    let mut segments = Vec::new();
    for seg in &index.segments {
        let mut states = Vec::new();
        for ((t, uf), df) in seg.times.iter().zip(&seg.u_files).zip(&seg.d_files) {
            let u_bytes = std::fs::read(dir.join(uf))?;
            let d_bytes = std::fs::read(dir.join(df))?;
            let u = snapshot::from_bytes_with_period(&u_bytes, index.period_length)?;
            let d = snapshot::from_bytes_with_period(&d_bytes, index.period_length)?;
            states.push(StatePair::new(u, d, *t)?);
        }
        segments.push(Segment::new(seg.times.clone(), states)?);
    }
    Trajectory::from_segments(segments)
}

/// Re-run the diagnostics of a stored run, optionally overriding the
/// blow-up window parameters, without re-solving.
pub fn diagnose(
    run_dir: &Path,
    sigma: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
) -> Result<DiagnosticsReport> {
    let scenario = Scenario::load(&run_dir.join(SCENARIO_COPY))?;
    let manifest = RunManifest::load(run_dir)?;
    let mut cfg = scenario.diagnostics_config()?;
    cfg.window = BlowupWindowConfig::new(
        sigma.unwrap_or(cfg.window.sigma),
        a.unwrap_or(cfg.window.a),
        b.unwrap_or(cfg.window.b),
        cfg.window.t_blow,
    )?;

    let traj = if manifest.has_trajectory_store {
        load_trajectory(&run_dir.join(TRAJECTORY_DIR))?
    } else {
        // fall back to the stored snapshots
        if manifest.snapshots.len() < 2 {
            return Err(Error::Scenario(
                "diagnose needs a trajectory store or at least two snapshots".into(),
            ));
        }
        let mut pairs: Vec<(f64, StatePair)> = Vec::new();
        for meta in &manifest.snapshots {
            let u = snapshot::read_file(&run_dir.join(&meta.u_file))?;
            let d = snapshot::read_file(&run_dir.join(&meta.d_file))?;
            pairs.push((meta.time, StatePair::new(u, d, meta.time)?));
        }
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        pairs.dedup_by(|x, y| (x.0 - y.0).abs() < 1e-12);
        if pairs.len() < 2 {
            return Err(Error::Scenario(
                "stored snapshots do not span two distinct times".into(),
            ));
        }
        let times: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let states: Vec<StatePair> = pairs.into_iter().map(|p| p.1).collect();
        Trajectory::single(times, states)?
    };

    let report = build_report(&traj, &cfg)?;
    let text = toml::to_string_pretty(&report)
        .map_err(|e| Error::Scenario(format!("report serialize: {e}")))?;
    atomic_write(&run_dir.join("diagnostics_rerun.toml"), text.as_bytes())?;
    Ok(report)
}

#[derive(Debug, Serialize)]
pub struct RescaleReport {
    pub m: f64,
    pub center: [f64; 3],
    pub t_k: f64,
    pub aperiodic_local: bool,
    pub residual_source: f64,
    pub residual_zoomed: f64,
    pub sup_u_source_final: f64,
    pub sup_u_zoomed_final: f64,
}

/// Zoom a stored trajectory and write the rescaled store plus a report.
/// Omitted center or time default to the argmax of |u| + |grad d| at the
/// latest node.
pub fn rescale_run(
    run_dir: &Path,
    m: f64,
    center: Option<[f64; 3]>,
    t_k: Option<f64>,
    out_dir: &Path,
) -> Result<RescaleReport> {
    let manifest = RunManifest::load(run_dir)?;
    if !manifest.has_trajectory_store {
        return Err(Error::Rescale(
            "rescale needs a run with store_trajectory = true".into(),
        ));
    }
    let scenario = Scenario::load(&run_dir.join(SCENARIO_COPY))?;
    let traj = load_trajectory(&run_dir.join(TRAJECTORY_DIR))?;
    let (center, t_k) = match (center, t_k) {
        (Some(c), Some(t)) => (c, t),
        (c, t) => {
            let (sc, st) = crate::rescale::suggest_zoom_center(&traj)?;
            (c.unwrap_or(sc), t.unwrap_or(st))
        }
    };
    let params = RescaleParams::new(center, t_k, m)?;
    let zoomed = zoom(&traj, &params)?;
    let rule = scenario.solver_config().cubic_rule;
    let residual_source = residual_check_with(&traj, rule)?;
    let residual_zoomed = residual_check_with(&zoomed.trajectory, rule)?;

    std::fs::create_dir_all(out_dir)?;
    store_trajectory(&zoomed.trajectory, &out_dir.join(TRAJECTORY_DIR))?;
    let report = RescaleReport {
        m,
        center,
        t_k,
        aperiodic_local: zoomed.aperiodic_local,
        residual_source,
        residual_zoomed,
        sup_u_source_final: traj.last_state().u.sup_norm(),
        sup_u_zoomed_final: zoomed.trajectory.last_state().u.sup_norm(),
    };
    let text = toml::to_string_pretty(&report)
        .map_err(|e| Error::Scenario(format!("rescale report serialize: {e}")))?;
    atomic_write(&out_dir.join("rescale_report.toml"), text.as_bytes())?;
    Ok(report)
}
