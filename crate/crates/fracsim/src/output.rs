//! CSV emission and plot-script generation. All numeric columns use a fixed
//! `%.16e` format so reference-mode runs are byte-reproducible.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bohm::{BohmFields, Trajectory};
use crate::error::Result;
use crate::grid::GridFunction;
use crate::observables::ContinuityReport;

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a CSV with a header line and fixed-format float rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "{}", header.join(","));
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let cols: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        let _ = writeln!(s, "{}", cols.join(","));
    }
    fs::write(path, s)?;
    Ok(())
}

/// snapshot_NNNN.csv: x, re_psi, im_psi, rho.
pub fn write_snapshot(path: &Path, psi: &GridFunction) -> Result<()> {
    let grid = psi.grid();
    let rows: Vec<Vec<f64>> = psi
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| vec![grid.x(j), v.re, v.im, v.norm_sqr()])
        .collect();
    write_csv(path, &["x", "re_psi", "im_psi", "rho"], &rows)
}

/// continuity.csv: x, rho, rho_dt, dJ_dx, residual.
pub fn write_continuity(path: &Path, report: &ContinuityReport) -> Result<()> {
    let grid = report.rho.grid();
    let rows: Vec<Vec<f64>> = (0..grid.n())
        .map(|j| {
            vec![
                grid.x(j),
                report.rho.values()[j].re,
                report.rho_dt.values()[j].re,
                report.dj_dx.values()[j].re,
                report.residual.values()[j].re,
            ]
        })
        .collect();
    write_csv(path, &["x", "rho", "rho_dt", "dJ_dx", "residual"], &rows)
}

/// bohm_NNNN.csv: x, R, S, Q, p, v, F, E, K, balance_residual, node_mask.
pub fn write_bohm(path: &Path, fields: &BohmFields) -> Result<()> {
    let grid = fields.r.grid();
    let rows: Vec<Vec<f64>> = (0..grid.n())
        .map(|j| {
            vec![
                grid.x(j),
                fields.r.values()[j].re,
                fields.s.values()[j].re,
                fields.q.values()[j].re,
                fields.p.values()[j].re,
                fields.v.values()[j].re,
                fields.f.values()[j].re,
                fields.e.values()[j].re,
                fields.k.values()[j].re,
                fields.balance_residual.values()[j].re,
                if fields.node_mask[j] { 1.0 } else { 0.0 },
            ]
        })
        .collect();
    write_csv(
        path,
        &["x", "R", "S", "Q", "p", "v", "F", "E", "K", "balance_residual", "node_mask"],
        &rows,
    )
}

/// traj_NN.csv: t, x.
pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let rows: Vec<Vec<f64>> = traj
        .times
        .iter()
        .zip(&traj.positions)
        .map(|(&t, &x)| vec![t, x])
        .collect();
    write_csv(path, &["t", "x"], &rows)
}

/// Generate gnuplot scripts for whatever CSV families exist in `run_dir`.
/// Returns the script paths written.
pub fn generate_plot_scripts(run_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut snapshots: Vec<String> = Vec::new();
    let mut bohms: Vec<String> = Vec::new();
    let mut trajs: Vec<String> = Vec::new();
    let mut has_continuity = false;
    for entry in fs::read_dir(run_dir)? {
        let name = entry?.file_name().to_string_lossy().into_owned();
        if name.starts_with("snapshot_") && name.ends_with(".csv") {
            snapshots.push(name);
        } else if name.starts_with("bohm_") && name.ends_with(".csv") {
            bohms.push(name);
        } else if name.starts_with("traj_") && name.ends_with(".csv") {
            trajs.push(name);
        } else if name == "continuity.csv" {
            has_continuity = true;
        }
    }
    snapshots.sort();
    bohms.sort();
    trajs.sort();

    if !snapshots.is_empty() {
        let mut s = String::from(
            "set datafile separator ','\n\
             set key autotitle columnhead\n\
             set xlabel 'x'\n\
             set ylabel 'rho'\n\
             set term pngcairo size 1000,600\n\
             set output 'density.png'\n",
        );
        let parts: Vec<String> = snapshots
            .iter()
            .map(|f| format!("'{f}' using 1:4 with lines title '{f}'"))
            .collect();
        let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
        let p = run_dir.join("plot_density.gp");
        fs::write(&p, s)?;
        written.push(p);
    }

    if has_continuity {
        let s = "set datafile separator ','\n\
                 set key autotitle columnhead\n\
                 set xlabel 'x'\n\
                 set term pngcairo size 1000,600\n\
                 set output 'continuity.png'\n\
                 plot 'continuity.csv' using 1:3 with lines, \\\n     \
                 'continuity.csv' using 1:4 with lines, \\\n     \
                 'continuity.csv' using 1:5 with lines\n";
        let p = run_dir.join("plot_continuity.gp");
        fs::write(&p, s)?;
        written.push(p);
    }

    if let Some(last) = bohms.last() {
        let mut s = String::from(
            "set datafile separator ','\n\
             set key autotitle columnhead\n\
             set xlabel 'x'\n\
             set term pngcairo size 1000,600\n\
             set output 'bohm.png'\n",
        );
        let _ = writeln!(
            s,
            "plot '{last}' using 1:4 with lines title 'Q', \\\n     \
             '{last}' using 1:5 with lines title 'p', \\\n     \
             '{last}' using 1:6 with lines title 'v'"
        );
        let p = run_dir.join("plot_bohm.gp");
        fs::write(&p, s)?;
        written.push(p);
    }

    if !trajs.is_empty() {
        let mut s = String::from(
            "set datafile separator ','\n\
             set key autotitle columnhead\n\
             set xlabel 't'\n\
             set ylabel 'x'\n\
             set term pngcairo size 1000,600\n\
             set output 'trajectories.png'\n",
        );
        let parts: Vec<String> = trajs
            .iter()
            .map(|f| format!("'{f}' using 1:2 with lines title '{f}'"))
            .collect();
        let _ = writeln!(s, "plot {}", parts.join(", \\\n     "));
        let p = run_dir.join("plot_trajectories.gp");
        fs::write(&p, s)?;
        written.push(p);
    }

    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;
    use num_complex::Complex64;

    #[test]
    fn csv_format_is_stable() {
        let dir = std::env::temp_dir().join("fracsim_output_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("snap.csv");
        let grid = Grid1D::new(0.0, 0.5, 4).unwrap();
        let psi = GridFunction::from_fn(grid, |x| Complex64::new(x, -x));
        write_snapshot(&path, &psi).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "x,re_psi,im_psi,rho");
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 4);
        assert!(first.starts_with("0.0000000000000000e0"));

        // byte determinism of repeated writes
        write_snapshot(&path, &psi).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), text);
        fs::remove_dir_all(&dir).unwrap();
    }
}
