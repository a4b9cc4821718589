use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{ExperimentOutput, ResultRow, SummaryRow};
use crate::error::{Error, Result};

pub const RESULTS_HEADER: [&str; 11] = [
    "algorithm",
    "run",
    "seed",
    "t",
    "y_hat",
    "y",
    "y_true",
    "inst_err",
    "cum_err",
    "bound",
    "active_experts",
];

pub const SUMMARY_HEADER: [&str; 5] = ["algorithm", "t", "mean_cum_err", "std_cum_err", "bound"];

/// Writes `results.csv`, `summary.csv` and `config.json` into `dir`,
/// creating it if needed.
pub fn write_results(output: &ExperimentOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(&dir.join("results.csv"), &RESULTS_HEADER, &output.rows)?;
    write_csv(&dir.join("summary.csv"), &SUMMARY_HEADER, &output.summary)?;
    let config_path = dir.join("config.json");
    let mut text =
        serde_json::to_string_pretty(&output.resolved).map_err(|e| Error::json(&config_path, e))?;
    text.push('\n');
    fs::write(&config_path, text).map_err(|e| Error::io(&config_path, e))
}

fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    writer
        .write_record(header)
        .map_err(|e| Error::csv(path, e))?;
    for row in rows {
        writer.serialize(row).map_err(|e| Error::csv(path, e))?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

fn read_csv<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let found = reader.headers().map_err(|e| Error::csv(path, e))?;
    for column in header {
        if !found.iter().any(|h| h == *column) {
            return Err(Error::Config(format!(
                "{}: missing column {column:?}",
                path.display()
            )));
        }
    }
    reader
        .deserialize()
        .map(|row| row.map_err(|e| Error::csv(path, e)))
        .collect()
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>> {
    read_csv(path, &RESULTS_HEADER)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    read_csv(path, &SUMMARY_HEADER)
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            name: "tiny".into(),
            data: DataSpec {
                n: 40,
                d: 1,
                sigma: 1.0,
                input_mode: InputMode::ConstantOne,
                shift: ShiftSpec::Soft { alpha: 0.3 },
                dictionary: None,
            },
            algorithms: vec![
                AlgorithmSpec::meta("iflh-ma", Pruning::Binary, SubroutineSpec::MovingAverage),
                AlgorithmSpec::oracle("oracle", crate::baselines::OracleMode::Scalar),
            ],
            runs: 2,
            seed: 1,
            eta: Eta::Auto,
            bound_constant: 1.0,
            log_base: crate::baselines::LogBase::Natural,
            output_dir: None,
        }
    }

    #[test]
    fn round_trip_and_layout() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&tiny()).unwrap();
        write_results(&out, dir.path()).unwrap();
        let rows = read_results(&dir.path().join("results.csv")).unwrap();
        assert_eq!(rows.len(), out.rows.len());
        for (a, b) in rows.iter().zip(&out.rows) {
            assert_eq!(a.algorithm, b.algorithm);
            assert_eq!(a.active_experts, b.active_experts);
            for (u, v) in [
                (a.y_hat, b.y_hat),
                (a.cum_err, b.cum_err),
                (a.bound, b.bound),
                (a.y_true, b.y_true),
            ] {
                assert!((u - v).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
        let summary = read_summary(&dir.path().join("summary.csv")).unwrap();
        assert_eq!(summary, out.summary);
        let raw = fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert!(!raw.contains('\r'));
        assert_eq!(raw.lines().next().unwrap(), RESULTS_HEADER.join(","));
    }

    #[test]
    fn empty_tables_are_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = run_experiment(&tiny()).unwrap();
        out.rows.clear();
        out.summary.clear();
        write_results(&out, dir.path()).unwrap();
        let raw = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert_eq!(raw, format!("{}\n", SUMMARY_HEADER.join(",")));
        assert!(read_results(&dir.path().join("results.csv"))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn config_echo_is_complete() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&tiny()).unwrap();
        write_results(&out, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("config.json")).unwrap();
        let echo: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(echo["eta_rule"].as_str().unwrap().contains("1/(32 Y^2)"));
        assert_eq!(echo["ending_time_log_base"], 2);
        assert!(echo["formula_log"].as_str().unwrap().contains("natural"));
        let runs = echo["runs"].as_array().unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[1]["seed"], out.resolved.runs[1].seed);
        assert!(
            runs[0]["resolved"]["iflh-ma"]["final_eta"]
                .as_f64()
                .unwrap()
                > 0.0
        );
        assert!(runs[0]["resolved"]["oracle"]["m"].as_u64().unwrap() >= 1);
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("summary.csv");
        fs::write(&file, "algorithm,t,mean_cum_err,bound\n").unwrap();
        let err = read_summary(&file).unwrap_err();
        assert!(err.to_string().contains("std_cum_err"), "{err}");
    }

    #[test]
    fn identical_configs_write_identical_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write_results(&run_experiment(&tiny()).unwrap(), a.path()).unwrap();
        write_results(&run_experiment(&tiny()).unwrap(), b.path()).unwrap();
        assert_eq!(
            fs::read(a.path().join("results.csv")).unwrap(),
            fs::read(b.path().join("results.csv")).unwrap()
        );
    }
}
