//! Analysis tasks over files written by a sweep.

use serde_json::json;

use super::output::{csv_text, fmt_real, OutputFile};
use super::{HarnessError, SUMMARY_SCHEMA_VERSION};
use crate::analysis::table::check_header;
use crate::analysis::{
    build_phase_diagram, default_fss_grid, estimate_critical_temperature, grid_search_exponents,
    power_law_region, GridSpec, ObservableTable, PhaseAxis, SchemaError, TcEstimate, TcMethod,
    TcOptions,
};
use crate::error::Error;
use crate::observables::HISTOGRAM_BINS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyzeTask {
    Fss,
    Tc,
    PhaseDiagram,
    Zipf,
    Histogram,
}

impl AnalyzeTask {
    pub fn name(self) -> &'static str {
        match self {
            AnalyzeTask::Fss => "fss",
            AnalyzeTask::Tc => "tc",
            AnalyzeTask::PhaseDiagram => "phase-diagram",
            AnalyzeTask::Zipf => "zipf",
            AnalyzeTask::Histogram => "histogram",
        }
    }

    /// The file a task reads.
    pub fn input_file(self) -> &'static str {
        match self {
            AnalyzeTask::Zipf => "zipf.csv",
            AnalyzeTask::Histogram => "histogram.csv",
            _ => "observables.csv",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalyzeOptions {
    pub grid: Option<GridSpec>,
    pub axis: Option<PhaseAxis>,
    /// Empty means every method.
    pub methods: Vec<TcMethod>,
}

fn summary(task: &str, body: serde_json::Value) -> String {
    let mut value = json!({ "schema_version": SUMMARY_SCHEMA_VERSION, "task": task });
    if let (Some(map), serde_json::Value::Object(extra)) = (value.as_object_mut(), body) {
        map.extend(extra);
    }
    serde_json::to_string_pretty(&value).expect("summary serializes") + "\n"
}

fn estimate_fields(estimate: &Result<TcEstimate, Error>) -> (String, String, String, String) {
    match estimate {
        Ok(TcEstimate::Transition { tc, uncertainty }) => (
            tc.to_string(),
            uncertainty.to_string(),
            "false".into(),
            String::new(),
        ),
        Ok(TcEstimate::NoTransition) => {
            (String::new(), String::new(), "true".into(), String::new())
        }
        Err(e) => (String::new(), String::new(), String::new(), e.to_string()),
    }
}

fn estimate_json(estimate: &Result<TcEstimate, Error>) -> serde_json::Value {
    match estimate {
        Ok(TcEstimate::Transition { tc, uncertainty }) => {
            json!({"Tc": tc, "uncertainty": uncertainty, "no_transition": false})
        }
        Ok(TcEstimate::NoTransition) => json!({"no_transition": true}),
        Err(e) => json!({"error": e.to_string()}),
    }
}

/// `fss.csv` (the full quality landscape) and `fss_summary.json`.
pub fn fss_files(table: &ObservableTable, grid: Option<&GridSpec>) -> Vec<OutputFile> {
    let result = table
        .single_group()
        .and_then(|_| grid.copied().map_or_else(|| default_fss_grid(table), Ok))
        .and_then(|grid| grid_search_exponents(table, &grid, true));
    match result {
        Ok(r) => {
            let landscape = r.landscape.clone().unwrap_or_default();
            let (qmin, qmax) = landscape
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p.quality), hi.max(p.quality))
                });
            let rows = landscape.iter().map(|p| {
                vec![
                    p.tc.to_string(),
                    p.nu.to_string(),
                    p.gamma.to_string(),
                    p.quality.to_string(),
                ]
            });
            vec![
                OutputFile::new("fss.csv", csv_text(&["Tc", "nu", "gamma", "quality"], rows)),
                OutputFile::new(
                    "fss_summary.json",
                    summary(
                        "fss",
                        json!({
                            "method": "grid search over variance-normalized local-linear collapse residual",
                            "minimizer": {"Tc": r.tc, "nu": r.nu, "gamma": r.gamma, "quality": r.quality},
                            "on_grid_boundary": r.on_grid_boundary(),
                            "grid": r.grid,
                            "landscape": {"points": landscape.len(), "quality_min": qmin, "quality_max": qmax},
                        }),
                    ),
                ),
            ]
        }
        Err(e) => vec![
            OutputFile::new(
                "fss.csv",
                csv_text(&["Tc", "nu", "gamma", "quality"], Vec::<Vec<String>>::new()),
            ),
            OutputFile::new(
                "fss_summary.json",
                summary("fss", json!({"error": e.to_string()})),
            ),
        ],
    }
}

fn varying_axis(table: &ObservableTable) -> Result<PhaseAxis, Error> {
    let groups = table.groups();
    let varies =
        |f: fn(&crate::analysis::ParamGroup) -> f64| groups.iter().any(|g| f(g) != f(&groups[0]));
    match (varies(|g| g.q), varies(|g| g.t)) {
        (true, true) => Err(Error::ParameterMismatch(
            "both q and t vary; choose an axis and filter the table".into(),
        )),
        (false, true) => Ok(PhaseAxis::T),
        _ => Ok(PhaseAxis::Q),
    }
}

/// `phase_diagram.csv` and `phase_diagram_summary.json`.
pub fn phase_files(
    table: &ObservableTable,
    axis: Option<PhaseAxis>,
    methods: &[TcMethod],
    options: &TcOptions,
) -> Vec<OutputFile> {
    let header = ["axis_name", "axis_value", "Tc", "method", "no_transition"];
    let diagram = axis
        .map_or_else(|| varying_axis(table), Ok)
        .and_then(|axis| build_phase_diagram(table, axis, methods, options).map(|d| (axis, d)));
    match diagram {
        Ok((axis, points)) => {
            let rows = points.iter().map(|p| {
                let (tc, _, no_transition, _) = estimate_fields(&p.estimate);
                vec![
                    axis.name().into(),
                    p.axis_value.to_string(),
                    tc,
                    p.method.name().into(),
                    no_transition,
                ]
            });
            let entries: Vec<serde_json::Value> = points
                .iter()
                .map(|p| {
                    let mut v = estimate_json(&p.estimate);
                    v["axis_value"] = json!(p.axis_value);
                    v["method"] = json!(p.method.name());
                    v
                })
                .collect();
            vec![
                OutputFile::new("phase_diagram.csv", csv_text(&header, rows)),
                OutputFile::new(
                    "phase_diagram_summary.json",
                    summary(
                        "phase-diagram",
                        json!({"axis": axis.name(), "options": options, "points": entries}),
                    ),
                ),
            ]
        }
        Err(e) => vec![
            OutputFile::new(
                "phase_diagram.csv",
                csv_text(&header, Vec::<Vec<String>>::new()),
            ),
            OutputFile::new(
                "phase_diagram_summary.json",
                summary("phase-diagram", json!({"error": e.to_string()})),
            ),
        ],
    }
}

fn tc_files(table: &ObservableTable, methods: &[TcMethod], options: &TcOptions) -> Vec<OutputFile> {
    let header = [
        "K",
        "J",
        "q",
        "t",
        "epsilon",
        "method",
        "Tc",
        "uncertainty",
        "no_transition",
        "error",
    ];
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for group in table.groups() {
        let sub = table.select(&group);
        for &method in methods {
            let estimate = estimate_critical_temperature(&sub, method, options);
            let (tc, unc, no_transition, error) = estimate_fields(&estimate);
            rows.push(vec![
                group.k.to_string(),
                group.coupling.to_string(),
                group.q.to_string(),
                group.t.to_string(),
                group.epsilon.to_string(),
                method.name().into(),
                tc,
                unc,
                no_transition,
                error,
            ]);
            let mut v = estimate_json(&estimate);
            v["group"] = json!(group);
            v["method"] = json!(method.name());
            entries.push(v);
        }
    }
    vec![
        OutputFile::new("tc.csv", csv_text(&header, rows)),
        OutputFile::new(
            "tc_summary.json",
            summary("tc", json!({"options": options, "estimates": entries})),
        ),
    ]
}

fn read_records(
    text: &str,
    expected: &[&str],
    task: AnalyzeTask,
) -> Result<Vec<csv::StringRecord>, SchemaError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| SchemaError::new(format!("unreadable header: {e}")))?
        .clone();
    check_header(&header, expected).map_err(|e| {
        SchemaError::new(format!(
            "task `{}` reads {}: {}",
            task.name(),
            task.input_file(),
            e.message
        ))
    })?;
    reader
        .records()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| SchemaError::new(format!("line {}: {e}", i + 2))))
        .collect()
}

fn parse_field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    column: &str,
    line: usize,
) -> Result<T, SchemaError> {
    let raw = record.get(idx).unwrap_or("").trim();
    raw.parse().map_err(|_| {
        SchemaError::new(format!(
            "line {line}, column `{column}`: cannot parse `{raw}`"
        ))
    })
}

fn zipf_files(text: &str) -> Result<Vec<OutputFile>, HarnessError> {
    let records = read_records(text, &["kT", "rank", "rel_freq"], AnalyzeTask::Zipf)?;
    let mut series: Vec<(f64, Vec<(usize, f64)>)> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let kt: f64 = parse_field(r, 0, "kT", i + 2)?;
        let rank: usize = parse_field(r, 1, "rank", i + 2)?;
        let freq: f64 = parse_field(r, 2, "rel_freq", i + 2)?;
        match series.iter_mut().find(|(t, _)| *t == kt) {
            Some((_, s)) => s.push((rank, freq)),
            None => series.push((kt, vec![(rank, freq)])),
        }
    }
    series.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut loglog = Vec::new();
    let mut fits = Vec::new();
    let mut entries = Vec::new();
    for (kt, s) in &mut series {
        s.sort_by_key(|p| p.0);
        for &(rank, freq) in s.iter() {
            loglog.push(vec![
                kt.to_string(),
                rank.to_string(),
                freq.to_string(),
                (rank as f64).log10().to_string(),
                fmt_real(Some(freq.log10())),
            ]);
        }
        let region = power_law_region(s, ZIPF_WINDOW_DECADES, ZIPF_SLOPE.0, ZIPF_SLOPE.1);
        let freq_at = |rank: usize| s.iter().find(|p| p.0 == rank).map(|p| p.1);
        let head_ratio = freq_at(1).zip(freq_at(10)).map(|(a, b)| a / b);
        fits.push(vec![
            kt.to_string(),
            region.map(|r| r.first_rank.to_string()).unwrap_or_default(),
            region.map(|r| r.last_rank.to_string()).unwrap_or_default(),
            fmt_real(region.map(|r| r.decades)),
            fmt_real(region.map(|r| r.slope)),
            fmt_real(head_ratio),
        ]);
        entries.push(json!({"kT": kt, "ranks": s.len(), "power_law_region": region, "head_ratio_1_10": head_ratio}));
    }
    Ok(vec![
        OutputFile::new(
            "zipf_loglog.csv",
            csv_text(
                &["kT", "rank", "rel_freq", "log10_rank", "log10_freq"],
                loglog,
            ),
        ),
        OutputFile::new(
            "zipf_fit.csv",
            csv_text(
                &[
                    "kT",
                    "first_rank",
                    "last_rank",
                    "decades",
                    "slope",
                    "head_ratio_1_10",
                ],
                fits,
            ),
        ),
        OutputFile::new(
            "zipf_summary.json",
            summary(
                "zipf",
                json!({
                    "method": "local log-log slope over half-decade rank windows",
                    "window_decades": ZIPF_WINDOW_DECADES,
                    "slope_range": [ZIPF_SLOPE.0, ZIPF_SLOPE.1],
                    "series": entries,
                }),
            ),
        ),
    ])
}

/// Window width of the local slope in [`power_law_region`].
pub const ZIPF_WINDOW_DECADES: f64 = 0.5;
/// Accepted local slope range of a power-law-like region.
pub const ZIPF_SLOPE: (f64, f64) = (-3.0, -0.3);

/// `(bin_lo, bin_hi, count)`.
type HistogramBin = (f64, f64, u64);

fn histogram_files(text: &str) -> Result<Vec<OutputFile>, HarnessError> {
    let records = read_records(
        text,
        &["kT", "N", "bin_lo", "bin_hi", "count"],
        AnalyzeTask::Histogram,
    )?;
    let mut hists: Vec<((f64, usize), Vec<HistogramBin>)> = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let line = i + 2;
        let key = (
            parse_field::<f64>(r, 0, "kT", line)?,
            parse_field::<usize>(r, 1, "N", line)?,
        );
        let bin = (
            parse_field::<f64>(r, 2, "bin_lo", line)?,
            parse_field::<f64>(r, 3, "bin_hi", line)?,
            parse_field::<u64>(r, 4, "count", line)?,
        );
        match hists.iter_mut().find(|(k, _)| *k == key) {
            Some((_, bins)) => bins.push(bin),
            None => hists.push((key, vec![bin])),
        }
    }
    hists.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0).then(a.0 .1.cmp(&b.0 .1)));
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for ((kt, n), bins) in &hists {
        let total: u64 = bins.iter().map(|b| b.2).sum();
        let mode = bins
            .iter()
            .max_by(|a, b| a.2.cmp(&b.2).then(b.0.total_cmp(&a.0)))
            .copied()
            .unwrap_or((0.0, 0.0, 0));
        let mean = if total > 0 {
            bins.iter()
                .map(|b| 0.5 * (b.0 + b.1) * b.2 as f64)
                .sum::<f64>()
                / total as f64
        } else {
            f64::NAN
        };
        rows.push(vec![
            kt.to_string(),
            n.to_string(),
            total.to_string(),
            mode.0.to_string(),
            mode.1.to_string(),
            fmt_real(Some(mean)),
        ]);
        entries.push(json!({"kT": kt, "N": n, "total": total, "mode_bin": [mode.0, mode.1], "mean_M_binned": mean, "bins": bins.len()}));
    }
    Ok(vec![
        OutputFile::new(
            "histogram_summary.csv",
            csv_text(
                &[
                    "kT",
                    "N",
                    "total",
                    "mode_bin_lo",
                    "mode_bin_hi",
                    "mean_M_binned",
                ],
                rows,
            ),
        ),
        OutputFile::new(
            "histogram_summary.json",
            summary(
                "histogram",
                json!({"bins_expected": HISTOGRAM_BINS, "histograms": entries}),
            ),
        ),
    ])
}

/// Runs `task` on the text of its input file.
pub fn analyze(
    task: AnalyzeTask,
    input: &str,
    options: &AnalyzeOptions,
) -> Result<Vec<OutputFile>, HarnessError> {
    let methods: Vec<TcMethod> = if options.methods.is_empty() {
        TcMethod::ALL.to_vec()
    } else {
        options.methods.clone()
    };
    let tc_options = TcOptions {
        fss_grid: options.grid,
        ..TcOptions::default()
    };
    match task {
        AnalyzeTask::Fss => Ok(fss_files(&read_observables(input)?, options.grid.as_ref())),
        AnalyzeTask::Tc => Ok(tc_files(&read_observables(input)?, &methods, &tc_options)),
        AnalyzeTask::PhaseDiagram => Ok(phase_files(
            &read_observables(input)?,
            options.axis,
            &methods,
            &tc_options,
        )),
        AnalyzeTask::Zipf => zipf_files(input),
        AnalyzeTask::Histogram => histogram_files(input),
    }
}

fn read_observables(input: &str) -> Result<ObservableTable, SchemaError> {
    ObservableTable::read_csv(input.as_bytes())
        .map_err(|e| SchemaError::new(format!("task reads observables.csv: {}", e.message)))
}
