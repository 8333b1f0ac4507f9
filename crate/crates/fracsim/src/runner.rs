//! Run orchestration: evolve, emit CSVs and the run manifest, and drive the
//! optional diagnostics (continuity, Bohmian fields, trajectories, the
//! Klein-Gordon residual).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::bohm::{bohm_series, integrate_trajectory};
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::evolver::evolve;
use crate::grid::GridFunction;
use crate::model::klein_gordon_residual;
use crate::observables::continuity_residual;
use crate::output;

/// Per-run summary scalars, in emission order.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub entries: Vec<(String, String)>,
}

impl RunSummary {
    fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Execute one experiment, writing all artifacts under `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    let started = Instant::now();
    cfg.validate()?;
    let params = cfg.build_params()?;
    let initial = cfg.build_initial()?;
    let norm_initial = initial.l2_norm();

    let snapshots = evolve(initial, params.clone(), cfg.run.clone())?;
    fs::create_dir_all(out_dir)?;

    let mut summary = RunSummary {
        out_dir: out_dir.to_path_buf(),
        entries: Vec::new(),
    };
    summary.push("version", env!("CARGO_PKG_VERSION"));
    summary.push("scheme", cfg.run.scheme.name());
    let total_steps = (cfg.run.t_final / cfg.run.dt).round() as usize;
    summary.push("steps", total_steps);
    summary.push("snapshots", snapshots.len());
    summary.push("final_time", format!("{:.16e}", snapshots.last().unwrap().0));

    for (idx, (_, psi)) in snapshots.iter().enumerate() {
        output::write_snapshot(&out_dir.join(format!("snapshot_{idx:04}.csv")), psi)?;
    }

    let norm_final = snapshots.last().unwrap().1.l2_norm();
    summary.push("norm_initial", format!("{norm_initial:.16e}"));
    summary.push("norm_final", format!("{norm_final:.16e}"));
    summary.push(
        "probability_drift",
        format!("{:.16e}", (norm_final * norm_final - norm_initial * norm_initial).abs()),
    );

    // diagnostics run on the uniformly spaced snapshot stack; if the final
    // step fell off-stride, it is excluded from memory-bearing derivatives
    let dt_snap = cfg.run.dt * cfg.run.snapshot_stride as f64;
    let mut stack: Vec<GridFunction> = snapshots.iter().map(|(_, s)| s.clone()).collect();
    if total_steps > 0 && total_steps % cfg.run.snapshot_stride != 0 {
        stack.pop();
    }
    let mode = cfg.run.mode;

    if cfg.diagnostics.continuity && stack.len() >= 2 {
        let report = continuity_residual(&stack, dt_snap, &params, mode)?;
        output::write_continuity(&out_dir.join("continuity.csv"), &report)?;
        summary.push(
            "continuity_interior_residual_l2",
            format!("{:.16e}", report.interior_residual_l2),
        );
        summary.push(
            "total_probability",
            format!("{:.16e}", report.total_probability),
        );
    }

    if cfg.diagnostics.kg_residual && stack.len() >= 3 {
        let res = klein_gordon_residual(&stack, dt_snap, &params, mode)?;
        let grid = res.grid();
        let rows: Vec<Vec<f64>> = res
            .values()
            .iter()
            .enumerate()
            .map(|(j, v)| vec![grid.x(j), v.re, v.im, v.norm()])
            .collect();
        output::write_csv(
            &out_dir.join("kg_residual.csv"),
            &["x", "re", "im", "abs"],
            &rows,
        )?;
        summary.push(
            "kg_residual_interior_l2",
            format!("{:.16e}", res.interior_l2_norm()),
        );
    }

    if cfg.diagnostics.bohm {
        let series = bohm_series(&stack, dt_snap, &params, mode, cfg.diagnostics.eps_r_rel)?;
        for (idx, fields) in series.iter().enumerate() {
            output::write_bohm(&out_dir.join(format!("bohm_{idx:04}.csv")), fields)?;
        }
        if let Some(last) = series.last() {
            summary.push(
                "energy_balance_interior_l2",
                format!("{:.16e}", last.balance_residual.interior_l2_norm()),
            );
        }

        if !cfg.diagnostics.trajectory_seeds.is_empty() {
            let v_stack: Vec<GridFunction> = series.iter().map(|f| f.v.clone()).collect();
            let mut exited = 0usize;
            for (idx, &seed) in cfg.diagnostics.trajectory_seeds.iter().enumerate() {
                let traj = integrate_trajectory(&v_stack, seed, params.alpha, dt_snap)?;
                if traj.exited {
                    exited += 1;
                }
                output::write_trajectory(&out_dir.join(format!("traj_{idx:02}.csv")), &traj)?;
            }
            summary.push("trajectories", cfg.diagnostics.trajectory_seeds.len());
            summary.push("trajectories_exited", exited);
        }
    }

    summary.push("wall_time_s", format!("{:.3}", started.elapsed().as_secs_f64()));
    write_manifest(cfg, &summary, out_dir)?;
    Ok(summary)
}

/// manifest.txt: summary scalars as `key = value` lines, then the resolved
/// config echo. The echo is also written to config_echo.cfg so a run can be
/// reproduced directly from its output directory.
fn write_manifest(cfg: &ExperimentConfig, summary: &RunSummary, out_dir: &Path) -> Result<()> {
    let echo = cfg.echo();
    let mut s = String::from("# run manifest\n");
    for (k, v) in &summary.entries {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "\n# resolved config (also in config_echo.cfg)");
    s.push_str(&echo);
    fs::write(out_dir.join("manifest.txt"), s)?;
    fs::write(out_dir.join("config_echo.cfg"), echo)?;
    Ok(())
}
