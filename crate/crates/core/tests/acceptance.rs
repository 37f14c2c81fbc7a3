//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported without failing the test target; set
//! `ACCEPTANCE_STRICT=1` to turn any failure into a nonzero exit.

mod common;

use std::time::Instant;

use csrlm_core::analysis::{
    collapse_quality, default_fss_grid, estimate_critical_temperature, grid_search_exponents,
    loglog_fit, ObservableTable, TcEstimate, TcMethod, TcOptions,
};
use csrlm_core::harness::check::CheckSuite;
use csrlm_core::harness::{
    analyze, run_sweep, sweep_artifacts, write_artifacts, AnalyzeOptions, AnalyzeTask, CheckScope,
    SweepConfig, SweepOutput,
};

/// K=20, q=0.01 scan shared by criteria 4, 5, 7 and 10.
const TRANSITION_SWEEP: &str = r#"{
    "grid": {"K": [20], "J": [1], "q": [0.01], "t": [0], "epsilon": [0],
             "kT": {"start": 0.04, "stop": 0.6, "step": 0.02}, "N": [64, 128, 256, 512]},
    "protocol": {"seed": 2024},
    "outputs": {"artifacts": ["observables"]}
}"#;

const CORRELATION_SWEEP: &str = r#"{
    "grid": {"K": [20], "q": [0.01], "kT": [0.1, 0.2, 0.6], "N": [64, 128, 256, 512, 1024]},
    "protocol": {"seed": 6, "samples": 4000},
    "outputs": {"artifacts": ["observables"]}
}"#;

const LARGE_T_SWEEP: &str = r#"{
    "grid": {"K": [2], "q": [0.1], "t": [0.7],
             "kT": [0.06, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0], "N": [64, 128, 256, 512]},
    "protocol": {"seed": 8, "samples": 20000},
    "outputs": {"artifacts": ["observables"]}
}"#;

const ZIPF_SWEEP: &str = r#"{
    "grid": {"K": [100], "q": [0.1], "t": [0], "epsilon": [0], "kT": [0.42, 2.0], "N": [4096]},
    "protocol": {"seed": 9, "samples": 1},
    "outputs": {"artifacts": ["zipf"]}
}"#;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Self::new(false, format!("error: {e}"))
    }
}

fn sweep(json: &str) -> Result<SweepOutput, String> {
    let config = SweepConfig::from_json(json).map_err(|e| e.to_string())?;
    run_sweep(&config).map_err(|e| e.to_string())
}

fn fmt_estimate(e: &Result<TcEstimate, csrlm_core::Error>) -> String {
    match e {
        Ok(TcEstimate::Transition { tc, uncertainty }) => format!("{tc:.2}+-{uncertainty:.2}"),
        Ok(TcEstimate::NoTransition) => "no transition".into(),
        Err(e) => format!("error ({e})"),
    }
}

fn oracle_equilibrium() -> Outcome {
    match CheckSuite::default().run(CheckScope::Equilibrium) {
        Ok(report) => {
            let worst = report
                .entries
                .iter()
                .map(|e| e.statistic.abs())
                .fold(0.0, f64::max);
            let failed: Vec<&str> = report
                .entries
                .iter()
                .filter(|e| !e.pass)
                .map(|e| e.name.as_str())
                .collect();
            Outcome::new(
                report.pass(),
                format!(
                    "{} checks, max |z| = {worst:.2} (limit 3){}",
                    report.entries.len(),
                    failed_list(&failed)
                ),
            )
        }
        Err(e) => Outcome::error(e),
    }
}

fn failed_list(failed: &[&str]) -> String {
    if failed.is_empty() {
        String::new()
    } else {
        format!("; failed: {}", failed.join(", "))
    }
}

fn oracle_absorption() -> Outcome {
    let defaults = CheckSuite::default();
    let suite = CheckSuite {
        absorption_cases: defaults.absorption_cases[..1].to_vec(),
        ..defaults
    };
    match suite.run(CheckScope::Absorption) {
        Ok(report) => {
            let tv = report.entries[0].statistic;
            Outcome::new(
                report.pass(),
                format!("TV distance {tv:.4} over {} runs (limit 0.02)", suite.runs),
            )
        }
        Err(e) => Outcome::error(e),
    }
}

fn observable_identities() -> Outcome {
    let mut failed = Vec::new();
    for (name, property) in common::PROPERTIES {
        if let Err(msg) = property(&mut common::runner(256)) {
            failed.push(format!("{name}: {msg}"));
        }
    }
    let total = common::PROPERTIES.len();
    Outcome::new(
        failed.is_empty(),
        format!("{}/{total} properties hold{}", total - failed.len(), {
            let names: Vec<&str> = failed.iter().map(String::as_str).collect();
            failed_list(&names)
        }),
    )
}

fn transition_location(table: &ObservableTable) -> Outcome {
    let options = TcOptions::default();
    let inside = |e: &Result<TcEstimate, _>| matches!(e, Ok(est) if est.tc().is_some_and(|tc| (0.18..=0.30).contains(&tc)));
    let peak = estimate_critical_temperature(table, TcMethod::SusceptibilityPeak, &options);
    let binder = estimate_critical_temperature(table, TcMethod::BinderDeparture, &options);
    Outcome::new(
        inside(&peak) && inside(&binder),
        format!(
            "susceptibility peak {}, Binder departure {} (both required in [0.18, 0.30])",
            fmt_estimate(&peak),
            fmt_estimate(&binder)
        ),
    )
}

fn binder_signature(table: &ObservableTable) -> Outcome {
    let sizes = table.sizes();
    let mut hot = Vec::new();
    let mut cold = Vec::new();
    for &n in &sizes {
        let curve = table.curve(n, |r| r.binder);
        let worst_hot = curve
            .iter()
            .filter(|p| p.0 >= 0.5 - 1e-9)
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()));
        let lowest_cold = curve
            .iter()
            .filter(|p| p.0 <= 0.1 + 1e-9)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some(&(kt, u)) = worst_hot {
            hot.push((n, kt, u));
        }
        if let Some(&(kt, u)) = lowest_cold {
            cold.push((n, kt, u));
        }
    }
    let hot_ok = hot.len() == sizes.len() && hot.iter().all(|h| h.2.abs() < 0.1);
    let cold_ok = cold.len() == sizes.len() && cold.iter().all(|c| c.2 > 0.8);
    let largest = *sizes.last().unwrap_or(&0);
    let peak =
        estimate_critical_temperature(table, TcMethod::SusceptibilityPeak, &TcOptions::default())
            .ok()
            .and_then(|e| e.tc());
    let dip = table
        .curve(largest, |r| r.binder)
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1));
    let dip_ok = match (dip, peak) {
        (Some((kt, u)), Some(tc)) => u < -0.05 && (kt - tc).abs() <= 0.1 + 1e-9,
        _ => false,
    };
    let hot_text: Vec<String> = hot
        .iter()
        .map(|(n, kt, u)| format!("N={n}: {u:+.3} at kT={kt}"))
        .collect();
    let cold_text: Vec<String> = cold
        .iter()
        .map(|(n, _, u)| format!("N={n}: {u:.3}"))
        .collect();
    Outcome::new(
        hot_ok && cold_ok && dip_ok,
        format!(
            "max |U| at kT>=0.5 [{}] (limit 0.1) {}; min U at kT<=0.1 [{}] (limit 0.8) {}; N={largest} dip {} near Tc {} {}",
            hot_text.join(", "),
            verdict(hot_ok),
            cold_text.join(", "),
            verdict(cold_ok),
            dip.map_or("none".into(), |(kt, u)| format!("{u:.2} at kT={kt}")),
            peak.map_or("none".into(), |t| t.to_string()),
            verdict(dip_ok)
        ),
    )
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn correlation_decay(table: &ObservableTable) -> Outcome {
    let series = |kt: f64| -> Vec<(f64, f64)> {
        table
            .rows()
            .iter()
            .filter(|r| (r.key.kt - kt).abs() < 1e-9)
            .filter_map(|r| r.corr.map(|g| (r.key.n as f64, g)))
            .collect()
    };
    let mut text = Vec::new();
    let mut linear_ok = true;
    let mut low_slopes = Vec::new();
    for kt in [0.1, 0.2] {
        match loglog_fit(&series(kt)) {
            Some(fit) => {
                linear_ok &= fit.r2 > 0.95;
                low_slopes.push(fit.slope.abs());
                text.push(format!(
                    "kT={kt}: slope {:.4}, R^2 {:.3}",
                    fit.slope, fit.r2
                ));
            }
            None => {
                linear_ok = false;
                text.push(format!("kT={kt}: fewer than 2 positive points"));
            }
        }
    }
    let hot = series(0.6);
    let at_1024 = hot.iter().find(|p| p.0 == 1024.0).map(|p| p.1);
    let hot_slope = loglog_fit(&hot).map(|f| f.slope.abs());
    let steeper = hot_slope.is_some_and(|s| low_slopes.iter().all(|&l| s >= 3.0 * l));
    let fast_ok = steeper || at_1024.is_some_and(|g| g < 1e-2);
    text.push(format!(
        "kT=0.6: |slope| {}, G~(1024) = {}",
        hot_slope.map_or("n/a".into(), |s| format!("{s:.3}")),
        at_1024.map_or("n/a".into(), |g| format!("{g:.4}"))
    ));
    Outcome::new(
        linear_ok && fast_ok,
        format!(
            "{} (R^2 > 0.95 {}; fast decay {})",
            text.join("; "),
            verdict(linear_ok),
            verdict(fast_ok)
        ),
    )
}

fn fss_consistency(table: &ObservableTable) -> Outcome {
    let q = |tc, nu, gamma| collapse_quality(table, tc, nu, gamma);
    let (reference, loose, shifted) =
        match (q(0.24, 2.5, 2.0), q(0.24, 1.0, 1.0), q(0.40, 2.5, 2.0)) {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            (a, b, c) => {
                let err = [a, b, c]
                    .into_iter()
                    .find_map(Result::err)
                    .expect("one of the three failed");
                return Outcome::error(err);
            }
        };
    let stretch = default_fss_grid(table)
        .and_then(|grid| grid_search_exponents(table, &grid, false))
        .map(|r| {
            let within = (r.tc - 0.24).abs() <= 0.25 && (r.nu - 2.5).abs() <= 0.25 && (r.gamma - 2.0).abs() <= 0.25;
            format!(
                "grid minimizer (Tc, nu, gamma) = ({}, {}, {}), Q = {:.4}, exponents within 0.25: {} (reported, not gated)",
                r.tc,
                r.nu,
                r.gamma,
                r.quality,
                if within { "yes" } else { "no" }
            )
        })
        .unwrap_or_else(|e| format!("grid search: {e} (reported, not gated)"));
    Outcome::new(
        reference < loose && reference < shifted,
        format!(
            "Q(0.24, 2.50, 2.00) = {reference:.4}, Q(0.24, 1.00, 1.00) = {loose:.4}, Q(0.40, 2.50, 2.00) = {shifted:.4}; {stretch}"
        ),
    )
}

fn no_transition_at_large_t(table: &ObservableTable) -> Outcome {
    let options = TcOptions::default();
    let estimates: Vec<_> = TcMethod::ALL
        .iter()
        .map(|&m| (m, estimate_critical_temperature(table, m, &options)))
        .collect();
    let fired = estimates
        .iter()
        .any(|(_, e)| matches!(e, Ok(TcEstimate::Transition { .. })));
    let min_u = table
        .rows()
        .iter()
        .filter_map(|r| r.binder.map(|u| (u, r.key)))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let complete = table.rows().iter().all(|r| r.binder.is_some());
    let u_ok = complete && min_u.is_some_and(|(u, _)| u > -0.05);
    let methods: Vec<String> = estimates
        .iter()
        .map(|(m, e)| format!("{}: {}", m.name(), fmt_estimate(e)))
        .collect();
    Outcome::new(
        !fired && u_ok,
        format!(
            "{}; min U = {} (limit -0.05)",
            methods.join(", "),
            min_u.map_or("n/a".into(), |(u, k)| format!(
                "{u:.4} at kT={} N={}",
                k.kt, k.n
            ))
        ),
    )
}

fn zipf_check() -> Outcome {
    let run = || -> Result<serde_json::Value, String> {
        let config = SweepConfig::from_json(ZIPF_SWEEP).map_err(|e| e.to_string())?;
        let output = run_sweep(&config).map_err(|e| e.to_string())?;
        let files = sweep_artifacts(&config, &output);
        let zipf = files
            .iter()
            .find(|f| f.name == "zipf.csv")
            .ok_or("no zipf.csv")?;
        let analysis = analyze(
            AnalyzeTask::Zipf,
            &zipf.contents,
            &AnalyzeOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        let summary = analysis
            .iter()
            .find(|f| f.name == "zipf_summary.json")
            .ok_or("no zipf summary")?;
        serde_json::from_str(&summary.contents).map_err(|e| e.to_string())
    };
    let summary = match run() {
        Ok(s) => s,
        Err(e) => return Outcome::error(e),
    };
    let series = |kt: f64| {
        summary["series"]
            .as_array()
            .and_then(|s| s.iter().find(|e| e["kT"].as_f64() == Some(kt)))
            .cloned()
            .unwrap_or_default()
    };
    let (cold, hot) = (series(0.42), series(2.0));
    let region = &cold["power_law_region"];
    let decades = region["decades"].as_f64();
    let head = hot["head_ratio_1_10"].as_f64();
    let region_ok = decades.is_some_and(|d| d >= 1.0);
    let head_ok = head.is_some_and(|h| h < 3.0);
    Outcome::new(
        region_ok && head_ok,
        format!(
            "kT=0.42: ranks {}..{} span {} decades at slope {}; kT=2.0: f(1)/f(10) = {} (limit 3)",
            region["first_rank"],
            region["last_rank"],
            decades.map_or("n/a".into(), |d| format!("{d:.2}")),
            region["slope"]
                .as_f64()
                .map_or("n/a".into(), |s| format!("{s:.2}")),
            head.map_or("n/a".into(), |h| format!("{h:.2}"))
        ),
    )
}

fn determinism(first: &SweepOutput) -> Outcome {
    let run = || -> Result<bool, String> {
        let config = SweepConfig::from_json(TRANSITION_SWEEP).map_err(|e| e.to_string())?;
        let second = run_sweep(&config).map_err(|e| e.to_string())?;
        let dirs = [tempfile::tempdir(), tempfile::tempdir()];
        let mut written = Vec::new();
        for (output, dir) in [first, &second].into_iter().zip(&dirs) {
            let dir = dir.as_ref().map_err(|e| e.to_string())?;
            write_artifacts(dir.path(), &sweep_artifacts(&config, output), false)
                .map_err(|e| e.to_string())?;
            written.push(
                std::fs::read(dir.path().join("observables.csv")).map_err(|e| e.to_string())?,
            );
        }
        Ok(written[0] == written[1])
    };
    match run() {
        Ok(same) => Outcome::new(
            same,
            if same {
                "observables.csv byte-identical across reruns"
            } else {
                "observables.csv differs between reruns"
            },
        ),
        Err(e) => Outcome::error(e),
    }
}

fn report(number: usize, title: &str, started: Instant, outcome: &Outcome) {
    println!(
        "[{}] criterion {number}: {title}: {} ({:.1} s)",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.detail,
        started.elapsed().as_secs_f64()
    );
}

fn main() {
    // libtest flags such as `--nocapture` or filters are accepted and ignored.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut outcomes = Vec::new();
    let mut record = |number: usize, title: &str, started: Instant, outcome: Outcome| {
        report(number, title, started, &outcome);
        outcomes.push(outcome.pass);
    };

    let t = Instant::now();
    record(
        1,
        "fixed-length dynamics match exact enumeration",
        t,
        oracle_equilibrium(),
    );
    let t = Instant::now();
    record(
        2,
        "growth process matches the absorption distribution",
        t,
        oracle_absorption(),
    );
    let t = Instant::now();
    record(3, "observable identities", t, observable_identities());

    let t = Instant::now();
    let transition = sweep(TRANSITION_SWEEP);
    let sweep_secs = t.elapsed().as_secs_f64();
    println!("transition sweep (K=20, q=0.01, 116 points) took {sweep_secs:.1} s");
    match &transition {
        Ok(out) => {
            record(4, "transition location", t, transition_location(&out.table));
            record(
                5,
                "Binder signature of the transition",
                Instant::now(),
                binder_signature(&out.table),
            );
        }
        Err(e) => {
            record(4, "transition location", t, Outcome::error(e));
            record(
                5,
                "Binder signature of the transition",
                t,
                Outcome::error(e),
            );
        }
    }

    let t = Instant::now();
    let outcome =
        sweep(CORRELATION_SWEEP).map_or_else(Outcome::error, |out| correlation_decay(&out.table));
    record(6, "correlation decay", t, outcome);

    let t = Instant::now();
    let outcome = transition
        .as_ref()
        .map_or_else(Outcome::error, |out| fss_consistency(&out.table));
    record(7, "finite-size scaling consistency", t, outcome);

    let t = Instant::now();
    let outcome = sweep(LARGE_T_SWEEP)
        .map_or_else(Outcome::error, |out| no_transition_at_large_t(&out.table));
    record(8, "no transition at t=0.7", t, outcome);

    let t = Instant::now();
    record(9, "rank-frequency shape", t, zipf_check());

    let t = Instant::now();
    let outcome = transition.as_ref().map_or_else(Outcome::error, determinism);
    record(10, "determinism", t, outcome);

    let passed = outcomes.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", outcomes.len());
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && passed < outcomes.len() {
        std::process::exit(1);
    }
}
