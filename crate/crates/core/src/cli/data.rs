use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Dataset, Outcome, OutcomeFamily};

/// What to do with rows holding missing or non-numeric cells in the
/// columns an analysis uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NaPolicy {
    #[default]
    #[value(name = "drop_rows", alias = "drop-rows")]
    DropRows,
    Error,
}

/// Column roles for reading a mediation dataset from CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSpec {
    pub data_path: PathBuf,
    pub exposure_column: String,
    pub mediator_columns: Vec<String>,
    #[serde(default)]
    pub covariate_columns: Vec<String>,
    pub outcome_family: OutcomeFamily,
    /// Outcome for linear and logistic families.
    #[serde(default)]
    pub outcome_column: Option<String>,
    #[serde(default)]
    pub time_column: Option<String>,
    #[serde(default)]
    pub event_column: Option<String>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub na_policy: NaPolicy,
}

fn default_delta() -> f64 {
    0.05
}

impl AnalysisSpec {
    /// Outcome columns in the order `Outcome` expects.
    fn outcome_columns(&self) -> Result<Vec<&str>> {
        match self.outcome_family {
            OutcomeFamily::Linear | OutcomeFamily::Logistic => {
                if self.time_column.is_some() || self.event_column.is_some() {
                    return Err(Error::config(
                        "time_column",
                        format!(
                            "{} outcomes take --outcome, not --time/--event",
                            self.outcome_family
                        ),
                    ));
                }
                let y = self
                    .outcome_column
                    .as_deref()
                    .ok_or_else(|| Error::config("outcome_column", "required for this family"))?;
                Ok(vec![y])
            }
            OutcomeFamily::Cox => {
                if self.outcome_column.is_some() {
                    return Err(Error::config(
                        "outcome_column",
                        "cox outcomes take --time and --event",
                    ));
                }
                let t = self
                    .time_column
                    .as_deref()
                    .ok_or_else(|| Error::config("time_column", "required for cox"))?;
                let e = self
                    .event_column
                    .as_deref()
                    .ok_or_else(|| Error::config("event_column", "required for cox"))?;
                Ok(vec![t, e])
            }
        }
    }

    /// All used columns: exposure, mediators, covariates, outcome.
    fn columns(&self) -> Result<Vec<&str>> {
        if self.mediator_columns.is_empty() {
            return Err(Error::config(
                "mediator_columns",
                "at least one mediator is required",
            ));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(
                "delta",
                format!("must lie in (0, 1), got {}", self.delta),
            ));
        }
        let mut cols = vec![self.exposure_column.as_str()];
        cols.extend(self.mediator_columns.iter().map(String::as_str));
        cols.extend(self.covariate_columns.iter().map(String::as_str));
        cols.extend(self.outcome_columns()?);
        for (i, c) in cols.iter().enumerate() {
            if cols[..i].contains(c) {
                return Err(Error::config(
                    "columns",
                    format!("column `{c}` is used twice"),
                ));
            }
        }
        Ok(cols)
    }
}

/// A dataset read from CSV, with the rows the NA policy removed.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedData {
    pub dataset: Dataset,
    /// 1-based data-row numbers (header excluded) that were dropped.
    pub dropped_rows: Vec<usize>,
}

fn parse_cell(cell: &str) -> Option<f64> {
    let t = cell.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan") {
        return None;
    }
    t.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn load_dataset(spec: &AnalysisSpec) -> Result<LoadedData> {
    let file = std::fs::File::open(&spec.data_path).map_err(|source| Error::Io {
        path: spec.data_path.clone(),
        source,
    })?;
    read_dataset(spec, file)
}

/// Reads the columns named in `spec` from CSV text with a header row.
pub fn read_dataset(spec: &AnalysisSpec, reader: impl Read) -> Result<LoadedData> {
    let columns = spec.columns()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let positions = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h.trim() == *c)
                .ok_or_else(|| Error::Data {
                    row: 0,
                    column: c.to_string(),
                    message: "column not found in header".into(),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); columns.len()];
    let mut dropped_rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let parsed: Vec<Option<f64>> = positions
            .iter()
            .map(|&p| record.get(p).and_then(parse_cell))
            .collect();
        if let Some(bad) = parsed.iter().position(Option::is_none) {
            match spec.na_policy {
                NaPolicy::DropRows => {
                    dropped_rows.push(row);
                    continue;
                }
                NaPolicy::Error => {
                    return Err(Error::Data {
                        row,
                        column: columns[bad].to_string(),
                        message: format!(
                            "cannot parse `{}` as a number",
                            record.get(positions[bad]).unwrap_or("")
                        ),
                    })
                }
            }
        }
        for (col, v) in values.iter_mut().zip(parsed) {
            col.push(v.unwrap_or_default());
        }
    }
    let n = values[0].len();
    let d = spec.mediator_columns.len();
    let q = spec.covariate_columns.len();
    let exposure = values[0].clone();
    let mediators = DMatrix::from_fn(n, d, |i, k| values[1 + k][i]);
    let covariates = DMatrix::from_fn(n, q, |i, k| values[1 + d + k][i]);
    let base = 1 + d + q;
    let outcome = match spec.outcome_family {
        OutcomeFamily::Linear => Outcome::Continuous(values[base].clone()),
        OutcomeFamily::Logistic => Outcome::Binary(values[base].clone()),
        OutcomeFamily::Cox => Outcome::Survival {
            time: values[base].clone(),
            event: values[base + 1].clone(),
        },
    };
    let dataset = Dataset::new(exposure, mediators, covariates, outcome).map_err(|e| match e {
        // Map row indices inside the kept data back to file rows.
        Error::Data {
            row,
            column,
            message,
        } => Error::Data {
            row: kept_row_number(row, &dropped_rows),
            column,
            message,
        },
        other => other,
    })?;
    Ok(LoadedData {
        dataset,
        dropped_rows,
    })
}

fn kept_row_number(index: usize, dropped: &[usize]) -> usize {
    let mut row = index + 1;
    for &d in dropped {
        if d <= row {
            row += 1;
        }
    }
    row
}

/// Formats `v` with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_full(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Column names used by [`write_dataset_csv`].
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetColumns {
    pub exposure: String,
    pub mediators: Vec<String>,
    pub covariates: Vec<String>,
    /// One name for linear/logistic, `[time, event]` for cox.
    pub outcome: Vec<String>,
}

impl DatasetColumns {
    /// `x`, `m1..md`, `z1..zq`, and `y` or `time,status`.
    pub fn default_for(data: &Dataset) -> Self {
        let outcome = match data.outcome {
            Outcome::Survival { .. } => vec!["time".into(), "status".into()],
            _ => vec!["y".into()],
        };
        Self {
            exposure: "x".into(),
            mediators: (1..=data.d()).map(|k| format!("m{k}")).collect(),
            covariates: (1..=data.covariates.ncols())
                .map(|k| format!("z{k}"))
                .collect(),
            outcome,
        }
    }

    pub fn spec(&self, path: impl AsRef<Path>, family: OutcomeFamily) -> AnalysisSpec {
        let (outcome_column, time_column, event_column) = match family {
            OutcomeFamily::Cox => (
                None,
                self.outcome.first().cloned(),
                self.outcome.get(1).cloned(),
            ),
            _ => (self.outcome.first().cloned(), None, None),
        };
        AnalysisSpec {
            data_path: path.as_ref().to_path_buf(),
            exposure_column: self.exposure.clone(),
            mediator_columns: self.mediators.clone(),
            covariate_columns: self.covariates.clone(),
            outcome_family: family,
            outcome_column,
            time_column,
            event_column,
            delta: 0.05,
            na_policy: NaPolicy::DropRows,
        }
    }
}

/// Writes `data` as CSV with 17-significant-digit values.
pub fn write_dataset_csv(data: &Dataset, columns: &DatasetColumns, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![columns.exposure.clone()];
    header.extend(columns.mediators.iter().cloned());
    header.extend(columns.covariates.iter().cloned());
    header.extend(columns.outcome.iter().cloned());
    w.write_record(&header)?;
    for i in 0..data.n() {
        let mut rec = vec![fmt_full(data.exposure[i])];
        rec.extend(data.mediators.row(i).iter().map(|v| fmt_full(*v)));
        rec.extend(data.covariates.row(i).iter().map(|v| fmt_full(*v)));
        match &data.outcome {
            Outcome::Continuous(y) => rec.push(fmt_full(y[i])),
            Outcome::Binary(y) => rec.push(format!("{}", y[i] as i64)),
            Outcome::Survival { time, event } => {
                rec.push(fmt_full(time[i]));
                rec.push(format!("{}", event[i] as i64));
            }
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<csv output>"),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(policy: NaPolicy) -> AnalysisSpec {
        AnalysisSpec {
            data_path: PathBuf::new(),
            exposure_column: "x".into(),
            mediator_columns: vec!["m".into()],
            covariate_columns: vec![],
            outcome_family: OutcomeFamily::Linear,
            outcome_column: Some("y".into()),
            time_column: None,
            event_column: None,
            delta: 0.05,
            na_policy: policy,
        }
    }

    const CSV: &str = "x,m,y,unused\n1,2,3,a\n2,oops,4,b\n3,1,0.5,c\n4,5,6,d\n5,2,1,e\n";

    #[test]
    fn drop_rows_policy() {
        let loaded = read_dataset(&spec(NaPolicy::DropRows), CSV.as_bytes()).unwrap();
        assert_eq!(loaded.dataset.n(), 4);
        assert_eq!(loaded.dropped_rows, vec![2]);
        assert_eq!(loaded.dataset.exposure, vec![1.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn error_policy_names_row_and_column() {
        match read_dataset(&spec(NaPolicy::Error), CSV.as_bytes()) {
            Err(Error::Data { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "m");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_column() {
        let mut s = spec(NaPolicy::Error);
        s.mediator_columns = vec!["nope".into()];
        assert!(matches!(
            read_dataset(&s, CSV.as_bytes()),
            Err(Error::Data { column, .. }) if column == "nope"
        ));
    }

    #[test]
    fn column_roles_checked() {
        let mut s = spec(NaPolicy::Error);
        s.mediator_columns = vec!["x".into()];
        assert!(matches!(
            read_dataset(&s, CSV.as_bytes()),
            Err(Error::InvalidConfig { .. })
        ));
        let mut s = spec(NaPolicy::Error);
        s.outcome_family = OutcomeFamily::Cox;
        assert!(read_dataset(&s, CSV.as_bytes()).is_err());
    }

    #[test]
    fn invalid_binary_row_reported_in_file_numbering() {
        let mut s = spec(NaPolicy::DropRows);
        s.outcome_family = OutcomeFamily::Logistic;
        let text = "x,m,y\n1,1,0\n2,NA,1\n3,2,7\n";
        match read_dataset(&s, text.as_bytes()) {
            Err(Error::Data { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let x = vec![
            0.1,
            1.0 / 3.0,
            -2.5e-7,
            12345.678901234567,
            std::f64::consts::PI,
        ];
        let m = DMatrix::from_column_slice(5, 1, &[1e-300, -0.2, 0.3, 0.4, 7.0]);
        let data = Dataset::new(
            x,
            m,
            DMatrix::zeros(5, 0),
            Outcome::Continuous(vec![0.7, 0.1 + 0.2, 3.0, -1.0, 2.0]),
        )
        .unwrap();
        let cols = DatasetColumns::default_for(&data);
        let mut buf = Vec::new();
        write_dataset_csv(&data, &cols, &mut buf).unwrap();
        let back = read_dataset(&cols.spec("", OutcomeFamily::Linear), buf.as_slice()).unwrap();
        assert_eq!(back.dataset, data);
    }
}
