//! Result serialization: the plot-ready CSV table and the JSON sidecar
//! carrying fits, notes and the fully-resolved configuration.
//!
//! Formatting is deterministic — shortest-round-trip floats, fixed column
//! order — so identical runs produce byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::experiments::ExperimentResult;

pub const CSV_HEADER: &str = "x,x_unit,p_bright,ci_low,ci_high,n_shots";

/// Render the sweep table: one row per point, columns
/// `x, x_unit, p_bright, ci_low, ci_high, n_shots`.
pub fn render_csv(result: &ExperimentResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.x, result.sweep_unit, row.p_bright, row.ci_low, row.ci_high, row.shots
        ));
    }
    out
}

/// Render the JSON sidecar.
pub fn render_sidecar(result: &ExperimentResult) -> String {
    let mut text = serde_json::to_string_pretty(result).expect("result serializes");
    text.push('\n');
    text
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn write_file(path: &Path, contents: &str) -> Result<(), ReportError> {
    let io = |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
    }
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)?;
    Ok(())
}

/// Write `<dir>/<experiment>.csv` and `<dir>/<experiment>.json`; returns
/// both paths.
pub fn write_outputs(
    result: &ExperimentResult,
    dir: &Path,
) -> Result<(PathBuf, PathBuf), ReportError> {
    let csv_path = dir.join(format!("{}.csv", result.experiment));
    let json_path = dir.join(format!("{}.json", result.experiment));
    write_file(&csv_path, &render_csv(result))?;
    write_file(&json_path, &render_sidecar(result))?;
    Ok((csv_path, json_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ParamValue, Params, RunConfig};
    use crate::experiments::{run_experiment, Experiment};

    fn small_result() -> ExperimentResult {
        let mut cfg = RunConfig::default();
        cfg.detector = crate::measure::DetectorModel::ideal();
        cfg.shots = 20;
        cfg.seed = 3;
        let mut params = Params::new();
        params.insert("points".into(), ParamValue::Number(6.0));
        run_experiment(Experiment::RabiBare, &cfg, &params).unwrap()
    }

    #[test]
    fn csv_has_the_contract_columns() {
        let result = small_result();
        let csv = render_csv(&result);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let first = lines.next().unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[1], "s");
        assert_eq!(fields[5], "20");
        assert_eq!(csv.lines().count(), 1 + result.rows.len());
    }

    #[test]
    fn rendering_is_deterministic() {
        let result = small_result();
        assert_eq!(render_csv(&result), render_csv(&result));
        assert_eq!(render_sidecar(&result), render_sidecar(&result));
    }

    #[test]
    fn sidecar_round_trips_the_result() {
        let result = small_result();
        let json = render_sidecar(&result);
        let back: ExperimentResult = serde_json::from_str(&json).unwrap();
        assert_eq!(result, back);
    }
}
