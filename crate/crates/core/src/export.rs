//! File exports for recorded runs.
//!
//! All series are plain comma-separated numbers with a header row, floats
//! printed in shortest round-trip form, so identical runs produce identical
//! bytes. Wall-clock data lives in its own file (`timings.json`) instead of
//! `metrics.json`, keeping the metrics byte-reproducible across runs of the
//! same seed.

use crate::control_set::ControlInputSet;
use crate::error::{Error, Result};
use crate::sim::{MetricsReport, RunRecord, TimingReport, WorldTrace};
use crate::zonotope::CONTAINMENT_TOL;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const MEASUREMENTS_CSV: &str = "measurements.csv";
pub const OCCUPANCY_CSV: &str = "occupancy.csv";
pub const CONTROL_SETS_JSON: &str = "control_sets.json";
pub const METRICS_JSON: &str = "metrics.json";
pub const TIMINGS_JSON: &str = "timings.json";
pub const TUBES_JSON: &str = "tubes.json";
pub const CONFIG_ECHO_TOML: &str = "config.toml";

pub const PLOTS_DIR: &str = "plots";
pub const PATH_TRACE_CSV: &str = "path_trace.csv";
pub const CONTROL_SERIES_CSV: &str = "control_series.csv";
pub const CONTROL_CONTAINMENT_CSV: &str = "control_containment.csv";
pub const OCCUPANCY_POLYGONS_CSV: &str = "occupancy_polygons.csv";

/// One control set per iteration together with the estimate that updated it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ControlSetRow {
    pub k: usize,
    pub a_est: f64,
    pub kappa_est: f64,
    pub set: ControlInputSet,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn json_file<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(dir, name, &text)
}

/// Trajectory and measurement series for a world-only simulation.
pub fn write_world_exports(trace: &WorldTrace, t_s: f64, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut traj = String::from("k,t,px,py,theta,v,a_true,kappa_true\n");
    let mut meas = String::from("k,t,z_px,z_py,z_v\n");
    for (i, step) in trace.steps.iter().enumerate() {
        let k = i + 1;
        let t = k as f64 * t_s;
        let s = &step.state;
        writeln!(traj, "{k},{t},{},{},{},{},{},{}", s.px, s.py, s.theta, s.v, s.a, s.kappa)
            .expect("string writes cannot fail");
        let z = &step.measurement;
        writeln!(meas, "{k},{t},{},{},{}", z.px, z.py, z.v).expect("string writes cannot fail");
    }
    Ok(vec![
        write_file(dir, TRAJECTORY_CSV, &traj)?,
        write_file(dir, MEASUREMENTS_CSV, &meas)?,
    ])
}

/// Full export bundle for a recorded run: trajectory/measurement CSVs, the
/// occupancy polygons, per-iteration control sets, metric and timing
/// reports, and an echo of the configuration that produced them.
pub fn write_run_exports(
    record: &RunRecord,
    metrics: &MetricsReport,
    timing: &TimingReport,
    dir: &Path,
    dump_tubes: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let t_s = record.config.run.t_s;

    let mut traj = String::from(
        "k,t,px,py,theta,v,a_true,kappa_true,z_px,z_py,z_v,a_est,kappa_est\n",
    );
    let mut meas = String::from("k,t,z_px,z_py,z_v\n");
    let mut occ = String::from("k,step,vertex,x,y\n");
    let mut sets = Vec::with_capacity(record.iterations.len());
    for it in &record.iterations {
        let t = it.k as f64 * t_s;
        let s = &it.true_state;
        let z = &it.measurement;
        let e = &it.estimate;
        writeln!(
            traj,
            "{},{t},{},{},{},{},{},{},{},{},{},{},{}",
            it.k, s.px, s.py, s.theta, s.v, s.a, s.kappa, z.px, z.py, z.v, e.a, e.kappa
        )
        .expect("string writes cannot fail");
        writeln!(meas, "{},{t},{},{},{}", it.k, z.px, z.py, z.v).expect("string writes cannot fail");
        for set in &it.occupancy {
            for (vertex, p) in set.polygon.iter().enumerate() {
                writeln!(occ, "{},{},{vertex},{},{}", it.k, set.step, p[0], p[1])
                    .expect("string writes cannot fail");
            }
        }
        sets.push(ControlSetRow {
            k: it.k,
            a_est: e.a,
            kappa_est: e.kappa,
            set: it.control_set.clone(),
        });
    }

    let mut written = vec![
        write_file(dir, TRAJECTORY_CSV, &traj)?,
        write_file(dir, MEASUREMENTS_CSV, &meas)?,
        write_file(dir, OCCUPANCY_CSV, &occ)?,
        json_file(dir, CONTROL_SETS_JSON, &sets)?,
        json_file(dir, METRICS_JSON, metrics)?,
        json_file(dir, TIMINGS_JSON, timing)?,
    ];
    let config_text =
        toml::to_string_pretty(&record.config).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    written.push(write_file(dir, CONFIG_ECHO_TOML, &config_text)?);

    if dump_tubes {
        #[derive(Serialize)]
        struct TubeRow<'a> {
            k: usize,
            tube: &'a crate::reachability::ReachableTube,
        }
        let tubes: Vec<TubeRow> =
            record.iterations.iter().map(|it| TubeRow { k: it.k, tube: &it.tube }).collect();
        written.push(json_file(dir, TUBES_JSON, &tubes)?);
    }
    Ok(written)
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::MissingRecordFile(path))
    }
}

pub fn read_metrics(dir: &Path) -> Result<MetricsReport> {
    let text = fs::read_to_string(require(dir.join(METRICS_JSON))?)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_timings(dir: &Path) -> Result<TimingReport> {
    let text = fs::read_to_string(require(dir.join(TIMINGS_JSON))?)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_control_sets(dir: &Path) -> Result<Vec<ControlSetRow>> {
    let text = fs::read_to_string(require(dir.join(CONTROL_SETS_JSON))?)?;
    Ok(serde_json::from_str(&text)?)
}

/// Reads a numeric CSV written by this module: header names plus one row of
/// floats per line.
fn read_csv(path: PathBuf) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(require(path.clone())?)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::MissingRecordFile(path.clone()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| {
            Error::InvalidConfig(format!("{}: bad numeric row: {e}", path.display()))
        })?);
    }
    Ok((header, rows))
}

fn column(header: &[String], name: &str) -> Option<usize> {
    header.iter().position(|h| h == name)
}

/// Writes the per-figure CSV bundles for a recorded run into
/// `<record_dir>/plots`: the driven path against its measurements, the
/// control estimates with the fitted set bounds, the per-iteration
/// containment classification, and the occupancy polygons (optionally
/// restricted to the given iterations). Re-exporting overwrites in place.
pub fn export_plot_bundles(record_dir: &Path, steps: Option<&[usize]>) -> Result<Vec<PathBuf>> {
    let (traj_header, traj_rows) = read_csv(record_dir.join(TRAJECTORY_CSV))?;
    let sets = read_control_sets(record_dir)?;
    let (occ_header, occ_rows) = read_csv(record_dir.join(OCCUPANCY_CSV))?;

    let plots = record_dir.join(PLOTS_DIR);
    fs::create_dir_all(&plots)?;

    let k_col = column(&traj_header, "k").expect("trajectory always has k");
    let t_col = column(&traj_header, "t").expect("trajectory always has t");
    let px_col = column(&traj_header, "px").expect("trajectory always has px");
    let py_col = column(&traj_header, "py").expect("trajectory always has py");
    let z_cols = column(&traj_header, "z_px").zip(column(&traj_header, "z_py"));
    // World-only records keep measurements in their own file.
    let meas_rows = if z_cols.is_none() {
        Some(read_csv(record_dir.join(MEASUREMENTS_CSV))?)
    } else {
        None
    };
    let mut trace = String::from("k,t,px,py,z_px,z_py\n");
    for (i, row) in traj_rows.iter().enumerate() {
        let (z_px, z_py) = match (z_cols, &meas_rows) {
            (Some((a, b)), _) => (row[a], row[b]),
            (None, Some((mh, mr))) => {
                let zx = column(mh, "z_px").expect("measurements have z_px");
                let zy = column(mh, "z_py").expect("measurements have z_py");
                (mr[i][zx], mr[i][zy])
            }
            (None, None) => unreachable!("measurement rows loaded when columns are absent"),
        };
        writeln!(
            trace,
            "{},{},{},{},{z_px},{z_py}",
            row[k_col], row[t_col], row[px_col], row[py_col]
        )
        .expect("string writes cannot fail");
    }

    let mut series = String::from("k,a_est,kappa_est,a_lo,a_hi,kappa_lo,kappa_hi\n");
    let mut containment = String::from("k,inside\n");
    for (i, row) in sets.iter().enumerate() {
        let (a, kappa) = row.set.hull();
        writeln!(
            series,
            "{},{},{},{},{},{},{}",
            row.k, row.a_est, row.kappa_est, a.lo, a.hi, kappa.lo, kappa.hi
        )
        .expect("string writes cannot fail");
        if i > 0 {
            let estimate = crate::vehicle::ControlSample { a: row.a_est, kappa: row.kappa_est };
            let inside = sets[i - 1].set.contains(&estimate, CONTAINMENT_TOL);
            writeln!(containment, "{},{}", row.k, inside as u8).expect("string writes cannot fail");
        }
    }

    let occ_k = column(&occ_header, "k").expect("occupancy always has k");
    let mut polygons = String::new();
    polygons.push_str(&occ_header.join(","));
    polygons.push('\n');
    for row in &occ_rows {
        let keep = steps.map_or(true, |wanted| wanted.contains(&(row[occ_k] as usize)));
        if keep {
            let printed: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            polygons.push_str(&printed.join(","));
            polygons.push('\n');
        }
    }

    Ok(vec![
        write_file(&plots, PATH_TRACE_CSV, &trace)?,
        write_file(&plots, CONTROL_SERIES_CSV, &series)?,
        write_file(&plots, CONTROL_CONTAINMENT_CSV, &containment)?,
        write_file(&plots, OCCUPANCY_POLYGONS_CSV, &polygons)?,
    ])
}
