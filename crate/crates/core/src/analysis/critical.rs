//! Critical-temperature estimation on one parameter group.

use serde::{Deserialize, Serialize};

use super::collapse::{grid_search_exponents, GridSpec};
use super::table::ObservableTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TcMethod {
    BinderDeparture,
    SusceptibilityPeak,
    FssGrid,
}

impl TcMethod {
    pub const ALL: [TcMethod; 3] = [
        TcMethod::BinderDeparture,
        TcMethod::SusceptibilityPeak,
        TcMethod::FssGrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TcMethod::BinderDeparture => "binder_departure",
            TcMethod::SusceptibilityPeak => "susceptibility_peak",
            TcMethod::FssGrid => "fss_grid",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TcEstimate {
    Transition {
        #[serde(rename = "Tc")]
        tc: f64,
        uncertainty: f64,
    },
    NoTransition,
}

impl TcEstimate {
    pub fn tc(&self) -> Option<f64> {
        match self {
            TcEstimate::Transition { tc, .. } => Some(*tc),
            TcEstimate::NoTransition => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcOptions {
    /// Binder values below this count as the transition region.
    pub binder_threshold: f64,
    /// The susceptibility peak must grow at least this much from the
    /// smallest to the largest size.
    pub peak_growth: f64,
    /// Grid for [`TcMethod::FssGrid`]; defaults to [`GridSpec::standard`]
    /// over the interior of the scanned temperatures.
    pub fss_grid: Option<GridSpec>,
}

impl Default for TcOptions {
    fn default() -> Self {
        Self {
            binder_threshold: -0.05,
            peak_growth: 1.5,
            fss_grid: None,
        }
    }
}

/// Half the mean spacing of the temperatures around index `i`.
fn half_spacing(temps: &[f64], i: usize) -> f64 {
    let mut gaps = Vec::new();
    if i > 0 {
        gaps.push(temps[i] - temps[i - 1]);
    }
    if i + 1 < temps.len() {
        gaps.push(temps[i + 1] - temps[i]);
    }
    if gaps.is_empty() {
        return 0.0;
    }
    0.5 * gaps.iter().sum::<f64>() / gaps.len() as f64
}

fn check_scan(table: &ObservableTable) -> Result<Vec<usize>> {
    table.single_group()?;
    let sizes = table.sizes();
    if sizes.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 sizes, found {}",
            sizes.len()
        )));
    }
    Ok(sizes)
}

pub fn estimate_critical_temperature(
    table: &ObservableTable,
    method: TcMethod,
    options: &TcOptions,
) -> Result<TcEstimate> {
    let sizes = check_scan(table)?;
    let largest = *sizes.last().expect("at least two sizes");
    match method {
        TcMethod::BinderDeparture => binder_departure(
            &table.curve(largest, |r| r.binder),
            options.binder_threshold,
        ),
        TcMethod::SusceptibilityPeak => {
            let small = table.curve(sizes[0], |r| r.chi);
            let large = table.curve(largest, |r| r.chi);
            susceptibility_peak(&small, &large, options.peak_growth)
        }
        TcMethod::FssGrid => fss_grid(table, options.fss_grid),
    }
}

/// Highest temperature of the contiguous region `U < threshold` that
/// contains the deepest point of the curve.
///
/// Isolated noisy points elsewhere on the curve are not part of that region.
pub fn binder_departure(curve: &[(f64, f64)], threshold: f64) -> Result<TcEstimate> {
    if curve.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "Binder curve has {} points, need at least 3",
            curve.len()
        )));
    }
    let (deepest, &(_, u_min)) = curve
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("non-empty curve");
    if u_min >= threshold {
        return Ok(TcEstimate::NoTransition);
    }
    let mut top = deepest;
    while top + 1 < curve.len() && curve[top + 1].1 < threshold {
        top += 1;
    }
    if top + 1 == curve.len() {
        return Err(Error::RangeTooNarrow(format!(
            "Binder parameter is still below {threshold} at the top of the scan (kT = {})",
            curve[top].0
        )));
    }
    let temps: Vec<f64> = curve.iter().map(|p| p.0).collect();
    Ok(TcEstimate::Transition {
        tc: temps[top],
        uncertainty: half_spacing(&temps, top),
    })
}

/// Peak of the largest-size susceptibility, accepted when it lies inside the
/// scan and has grown by `growth` over the smallest size.
pub fn susceptibility_peak(
    smallest: &[(f64, f64)],
    largest: &[(f64, f64)],
    growth: f64,
) -> Result<TcEstimate> {
    if largest.len() < 3 || smallest.is_empty() {
        return Err(Error::InsufficientData(
            "susceptibility curves need at least 3 points on the largest size".into(),
        ));
    }
    let peak = |c: &[(f64, f64)]| {
        c.iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1).then(b.0.cmp(&a.0)))
            .map(|(i, p)| (i, p.1))
            .expect("non-empty curve")
    };
    let (i, chi_large) = peak(largest);
    let (_, chi_small) = peak(smallest);
    if chi_large < growth * chi_small {
        return Ok(TcEstimate::NoTransition);
    }
    if i == 0 || i + 1 == largest.len() {
        return Err(Error::RangeTooNarrow(format!(
            "susceptibility peak at the edge of the scan (kT = {})",
            largest[i].0
        )));
    }
    let temps: Vec<f64> = largest.iter().map(|p| p.0).collect();
    Ok(TcEstimate::Transition {
        tc: temps[i],
        uncertainty: half_spacing(&temps, i),
    })
}

/// Standard exponent grid with `Tc` over the interior of the scanned temperatures.
pub fn default_fss_grid(table: &ObservableTable) -> Result<GridSpec> {
    let temps = table.temperatures();
    if temps.len() < 3 {
        return Err(Error::InsufficientData(
            "need at least 3 temperatures".into(),
        ));
    }
    let lo = (temps[1] * 50.0).ceil() / 50.0;
    let hi = (temps[temps.len() - 2] * 50.0).floor() / 50.0;
    if hi < lo {
        return Err(Error::RangeTooNarrow("no interior Tc grid".into()));
    }
    GridSpec::standard(lo, hi)
}

/// Grid-search minimizer, accepted only when it is interior on every axis.
fn fss_grid(table: &ObservableTable, grid: Option<GridSpec>) -> Result<TcEstimate> {
    let grid = match grid {
        Some(g) => g,
        None => default_fss_grid(table)?,
    };
    let result = grid_search_exponents(table, &grid, false)?;
    if result.on_grid_boundary() {
        return Ok(TcEstimate::NoTransition);
    }
    let tcs = grid.tc.values();
    let i = tcs.iter().position(|&t| t == result.tc).unwrap_or(0);
    Ok(TcEstimate::Transition {
        tc: result.tc,
        uncertainty: half_spacing(&tcs, i),
    })
}
