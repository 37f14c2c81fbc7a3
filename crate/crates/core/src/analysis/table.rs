//! The observables table and its CSV form.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact column order of `observables.csv`.
pub const OBSERVABLE_COLUMNS: [&str; 17] = [
    "K",
    "J",
    "q",
    "t",
    "epsilon",
    "kT",
    "N",
    "samples",
    "seed",
    "mean_M",
    "se_M",
    "chi",
    "chi_tilde",
    "binder",
    "corr_Gtilde",
    "mutual_info",
    "error",
];

/// Model parameters except the temperature, i.e. one curve family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamGroup {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "J")]
    pub coupling: f64,
    pub q: f64,
    pub t: f64,
    pub epsilon: f64,
}

impl ParamGroup {
    fn cmp_total(&self, other: &Self) -> Ordering {
        self.k
            .cmp(&other.k)
            .then(self.coupling.total_cmp(&other.coupling))
            .then(self.q.total_cmp(&other.q))
            .then(self.t.total_cmp(&other.t))
            .then(self.epsilon.total_cmp(&other.epsilon))
    }
}

impl Eq for ParamGroup {}

impl PartialOrd for ParamGroup {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ParamGroup {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_total(other)
    }
}

/// Row key `(K, J, q, t, epsilon, kT, N)`, totally ordered.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointKey {
    pub group: ParamGroup,
    #[serde(rename = "kT")]
    pub kt: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl Eq for PointKey {}

impl PartialOrd for PointKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PointKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.group
            .cmp(&other.group)
            .then(self.kt.total_cmp(&other.kt))
            .then(self.n.cmp(&other.n))
    }
}

impl std::fmt::Display for PointKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let g = &self.group;
        write!(
            f,
            "K={} J={} q={} t={} epsilon={} kT={} N={}",
            g.k, g.coupling, g.q, g.t, g.epsilon, self.kt, self.n
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRow {
    pub key: PointKey,
    pub samples: u64,
    pub seed: u64,
    pub mean_m: Option<f64>,
    pub se_m: Option<f64>,
    pub chi: Option<f64>,
    pub chi_tilde: Option<f64>,
    pub binder: Option<f64>,
    pub corr: Option<f64>,
    pub mutual_info: Option<f64>,
    pub error: Option<String>,
}

impl ObservableRow {
    /// A row for a point whose run failed.
    pub fn failed(key: PointKey, samples: u64, seed: u64, error: impl Into<String>) -> Self {
        Self {
            key,
            samples,
            seed,
            mean_m: None,
            se_m: None,
            chi: None,
            chi_tilde: None,
            binder: None,
            corr: None,
            mutual_info: None,
            error: Some(error.into()),
        }
    }
}

/// Rows sorted by key, no duplicates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservableTable {
    rows: Vec<ObservableRow>,
}

impl ObservableTable {
    pub fn new(mut rows: Vec<ObservableRow>) -> Result<Self> {
        rows.sort_by_key(|r| r.key);
        if let Some(w) = rows.windows(2).find(|w| w[0].key == w[1].key) {
            return Err(Error::DuplicateKey(w[0].key.to_string()));
        }
        for row in &rows {
            if let Some(se) = row.se_m {
                if !(se.is_finite() && se >= 0.0) {
                    return Err(Error::InvalidParameter {
                        field: "se_M",
                        reason: format!("standard error must be finite and >= 0 at {}", row.key),
                    });
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[ObservableRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn groups(&self) -> Vec<ParamGroup> {
        let mut groups: Vec<ParamGroup> = self.rows.iter().map(|r| r.key.group).collect();
        groups.dedup();
        groups
    }

    /// Rows of one parameter group.
    pub fn select(&self, group: &ParamGroup) -> ObservableTable {
        Self {
            rows: self
                .rows
                .iter()
                .filter(|r| &r.key.group == group)
                .cloned()
                .collect(),
        }
    }

    pub fn filter(&self, keep: impl Fn(&ObservableRow) -> bool) -> ObservableTable {
        Self {
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }

    /// The single parameter group of this table.
    pub fn single_group(&self) -> Result<ParamGroup> {
        match self.groups().as_slice() {
            [g] => Ok(*g),
            [] => Err(Error::InsufficientData("empty table".into())),
            many => Err(Error::ParameterMismatch(format!(
                "expected one (K, J, q, t, epsilon) group, found {}",
                many.len()
            ))),
        }
    }

    /// Distinct sizes in ascending order.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.rows.iter().map(|r| r.key.n).collect();
        sizes.sort_unstable();
        sizes.dedup();
        sizes
    }

    /// Distinct temperatures in ascending order.
    pub fn temperatures(&self) -> Vec<f64> {
        let mut temps: Vec<f64> = self.rows.iter().map(|r| r.key.kt).collect();
        temps.sort_by(f64::total_cmp);
        temps.dedup();
        temps
    }

    /// `(kT, value)` along one size, ascending in kT, rows without the value skipped.
    pub fn curve(
        &self,
        n: usize,
        value: impl Fn(&ObservableRow) -> Option<f64>,
    ) -> Vec<(f64, f64)> {
        let mut curve: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.key.n == n)
            .filter_map(|r| value(r).filter(|v| v.is_finite()).map(|v| (r.key.kt, v)))
            .collect();
        curve.sort_by(|a, b| a.0.total_cmp(&b.0));
        curve
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(OBSERVABLE_COLUMNS)?;
        for row in &self.rows {
            out.write_record(row_fields(row))?;
        }
        out.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    /// Parses `observables.csv`, diagnosing header mismatches column by column.
    pub fn read_csv<R: Read>(reader: R) -> std::result::Result<Self, SchemaError> {
        let mut input = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let header = input
            .headers()
            .map_err(|e| SchemaError::new(format!("unreadable header: {e}")))?
            .clone();
        check_header(&header, &OBSERVABLE_COLUMNS)?;
        let mut rows = Vec::new();
        for (i, record) in input.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| SchemaError::new(format!("line {line}: {e}")))?;
            rows.push(parse_row(&record, line)?);
        }
        ObservableTable::new(rows).map_err(|e| SchemaError::new(e.to_string()))
    }
}

/// Header or value mismatch in an input CSV.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("schema mismatch: {message}")]
pub struct SchemaError {
    pub message: String,
}

impl SchemaError {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

/// Compares a header against the expected columns and names every difference.
pub fn check_header(
    header: &csv::StringRecord,
    expected: &[&str],
) -> std::result::Result<(), SchemaError> {
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found == expected {
        return Ok(());
    }
    let mut message = String::new();
    let missing: Vec<&str> = expected
        .iter()
        .copied()
        .filter(|c| !found.contains(c))
        .collect();
    let unexpected: Vec<&str> = found
        .iter()
        .copied()
        .filter(|c| !expected.contains(c))
        .collect();
    if !missing.is_empty() {
        let _ = write!(message, "missing columns [{}]; ", missing.join(", "));
    }
    if !unexpected.is_empty() {
        let _ = write!(message, "unexpected columns [{}]; ", unexpected.join(", "));
    }
    if missing.is_empty() && unexpected.is_empty() {
        for (pos, (want, got)) in expected.iter().zip(&found).enumerate() {
            if want != got {
                let _ = write!(
                    message,
                    "column {} is `{got}`, expected `{want}`; ",
                    pos + 1
                );
                break;
            }
        }
    }
    let _ = write!(message, "expected header: {}", expected.join(","));
    Err(SchemaError::new(message))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite())
        .map(|x| x.to_string())
        .unwrap_or_default()
}

fn row_fields(row: &ObservableRow) -> Vec<String> {
    let g = &row.key.group;
    vec![
        g.k.to_string(),
        g.coupling.to_string(),
        g.q.to_string(),
        g.t.to_string(),
        g.epsilon.to_string(),
        row.key.kt.to_string(),
        row.key.n.to_string(),
        row.samples.to_string(),
        row.seed.to_string(),
        fmt_opt(row.mean_m),
        fmt_opt(row.se_m),
        fmt_opt(row.chi),
        fmt_opt(row.chi_tilde),
        fmt_opt(row.binder),
        fmt_opt(row.corr),
        fmt_opt(row.mutual_info),
        row.error.clone().unwrap_or_default(),
    ]
}

fn parse_row(
    record: &csv::StringRecord,
    line: usize,
) -> std::result::Result<ObservableRow, SchemaError> {
    let field = |idx: usize| record.get(idx).unwrap_or("").trim();
    let bad = |idx: usize, what: &str| {
        SchemaError::new(format!(
            "line {line}, column `{}`: cannot parse `{}` as {what}",
            OBSERVABLE_COLUMNS[idx],
            field(idx)
        ))
    };
    let int = |idx: usize| {
        field(idx)
            .parse::<u64>()
            .map_err(|_| bad(idx, "an integer"))
    };
    let real = |idx: usize| field(idx).parse::<f64>().map_err(|_| bad(idx, "a number"));
    let opt = |idx: usize| {
        if field(idx).is_empty() {
            Ok(None)
        } else {
            real(idx).map(Some)
        }
    };
    Ok(ObservableRow {
        key: PointKey {
            group: ParamGroup {
                k: int(0)? as usize,
                coupling: real(1)?,
                q: real(2)?,
                t: real(3)?,
                epsilon: real(4)?,
            },
            kt: real(5)?,
            n: int(6)? as usize,
        },
        samples: int(7)?,
        seed: int(8)?,
        mean_m: opt(9)?,
        se_m: opt(10)?,
        chi: opt(11)?,
        chi_tilde: opt(12)?,
        binder: opt(13)?,
        corr: opt(14)?,
        mutual_info: opt(15)?,
        error: Some(field(16).to_string()).filter(|s| !s.is_empty()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn row(k: usize, q: f64, t: f64, kt: f64, n: usize) -> ObservableRow {
        ObservableRow {
            key: PointKey {
                group: ParamGroup {
                    k,
                    coupling: 1.0,
                    q,
                    t,
                    epsilon: 0.0,
                },
                kt,
                n,
            },
            samples: 10,
            seed: 3,
            mean_m: Some(0.5),
            se_m: Some(0.01),
            chi: Some(1.5),
            chi_tilde: Some(2.5),
            binder: Some(-0.25),
            corr: Some(0.125),
            mutual_info: Some(0.0625),
            error: None,
        }
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let r = row(2, 0.1, 0.0, 0.5, 16);
        assert!(matches!(
            ObservableTable::new(vec![r.clone(), r]),
            Err(Error::DuplicateKey(_))
        ));
    }

    #[test]
    fn rows_are_sorted_by_key() {
        let t = ObservableTable::new(vec![
            row(2, 0.1, 0.0, 0.5, 32),
            row(2, 0.1, 0.0, 0.3, 64),
            row(2, 0.1, 0.0, 0.5, 16),
        ])
        .unwrap();
        let keys: Vec<(f64, usize)> = t.rows().iter().map(|r| (r.key.kt, r.key.n)).collect();
        assert_eq!(keys, vec![(0.3, 64), (0.5, 16), (0.5, 32)]);
        assert_eq!(t.sizes(), vec![16, 32, 64]);
        assert_eq!(t.temperatures(), vec![0.3, 0.5]);
    }

    #[test]
    fn csv_round_trip_with_missing_values() {
        let mut failed =
            ObservableRow::failed(row(2, 0.1, 0.7, 0.2, 8).key, 5, 9, "runaway, capped");
        failed.samples = 5;
        let t = ObservableTable::new(vec![row(2, 0.1, 0.0, 0.5, 16), failed]).unwrap();
        let text = t.to_csv_string();
        assert!(text.starts_with("K,J,q,t,epsilon,kT,N,samples,seed,mean_M,se_M,chi,chi_tilde,binder,corr_Gtilde,mutual_info,error\n"));
        assert!(text.contains("\"runaway, capped\""));
        let back = ObservableTable::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn header_diagnostics_name_columns() {
        let err =
            ObservableTable::read_csv("K,J,q,t,epsilon,kT,N,samples\n".as_bytes()).unwrap_err();
        assert!(
            err.message.contains("missing columns [seed, mean_M"),
            "{}",
            err.message
        );

        let mut cols = OBSERVABLE_COLUMNS.to_vec();
        cols.swap(0, 1);
        let err =
            ObservableTable::read_csv(format!("{}\n", cols.join(",")).as_bytes()).unwrap_err();
        assert!(err.message.contains("column 1 is `J`"), "{}", err.message);

        let mut text = OBSERVABLE_COLUMNS.join(",");
        text.push_str(",extra\n");
        let err = ObservableTable::read_csv(text.as_bytes()).unwrap_err();
        assert!(err.message.contains("unexpected columns [extra]"));
    }

    #[test]
    fn bad_values_report_line_and_column() {
        let text = format!(
            "{}\n2,1,0.1,0,0,abc,16,1,1,,,,,,,,\n",
            OBSERVABLE_COLUMNS.join(",")
        );
        let err = ObservableTable::read_csv(text.as_bytes()).unwrap_err();
        assert!(
            err.message.contains("line 2, column `kT`"),
            "{}",
            err.message
        );
    }
}
