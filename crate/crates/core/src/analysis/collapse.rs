//! Finite-size-scaling collapse of `chi_tilde` and the exponent grid search.
//!
//! Points are rescaled to `x = N^(1/nu) (T - Tc) / Tc`, `y = chi_tilde / N^(gamma/nu)`.
//! Every point is compared with a local master curve: a least-squares line
//! through the two points that bracket its `x` on each *other* size. The
//! quality is the mean squared residual divided by the variance of `y`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::table::ObservableTable;
use crate::error::{Error, Result};

/// Fewest sizes that must overlap in `x`.
pub const MIN_OVERLAPPING_SIZES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub n: usize,
    pub kt: f64,
    pub chi_tilde: f64,
}

/// Points with a finite `chi_tilde`.
pub fn scaling_points(table: &ObservableTable) -> Vec<ScalingPoint> {
    table
        .rows()
        .iter()
        .filter_map(|r| {
            r.chi_tilde
                .filter(|v| v.is_finite())
                .map(|chi_tilde| ScalingPoint {
                    n: r.key.n,
                    kt: r.key.kt,
                    chi_tilde,
                })
        })
        .collect()
}

pub fn collapse_quality(table: &ObservableTable, tc: f64, nu: f64, gamma: f64) -> Result<f64> {
    collapse_quality_points(&scaling_points(table), tc, nu, gamma)
}

pub fn collapse_quality_points(
    points: &[ScalingPoint],
    tc: f64,
    nu: f64,
    gamma: f64,
) -> Result<f64> {
    if !(tc > 0.0 && nu > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "collapse",
            reason: format!("need Tc > 0 and nu > 0, got Tc = {tc}, nu = {nu}"),
        });
    }
    let mut curves: Vec<(usize, Vec<(f64, f64)>)> = Vec::new();
    for p in points {
        let n = p.n as f64;
        let xy = (
            n.powf(1.0 / nu) * (p.kt - tc) / tc,
            p.chi_tilde / n.powf(gamma / nu),
        );
        match curves.iter_mut().find(|(size, _)| *size == p.n) {
            Some((_, curve)) => curve.push(xy),
            None => curves.push((p.n, vec![xy])),
        }
    }
    curves.sort_by_key(|(size, _)| *size);
    for (_, curve) in &mut curves {
        curve.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    }

    let mut residuals = Vec::new();
    let mut ys = Vec::new();
    let mut contributing = vec![false; curves.len()];
    let mut neighbours = Vec::with_capacity(2 * curves.len());
    for (own, (_, curve)) in curves.iter().enumerate() {
        for &(x, y) in curve {
            neighbours.clear();
            for (other, (_, other_curve)) in curves.iter().enumerate() {
                if other != own {
                    bracket(other_curve, x, &mut neighbours);
                }
            }
            if neighbours.len() < 2 {
                continue;
            }
            residuals.push(y - local_line(&neighbours, x));
            ys.push(y);
            contributing[own] = true;
        }
    }
    let sizes = contributing.iter().filter(|&&c| c).count();
    if sizes < MIN_OVERLAPPING_SIZES {
        return Err(Error::InsufficientOverlap { sizes });
    }
    let count = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / count;
    let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / count;
    if var <= 0.0 {
        return Ok(0.0);
    }
    let mse = residuals.iter().map(|r| r * r).sum::<f64>() / count;
    Ok(mse / var)
}

/// Pushes the points of `curve` (sorted by x) that bracket `x`.
fn bracket(curve: &[(f64, f64)], x: f64, out: &mut Vec<(f64, f64)>) {
    let (Some(first), Some(last)) = (curve.first(), curve.last()) else {
        return;
    };
    if x < first.0 || x > last.0 {
        return;
    }
    let hi = curve.partition_point(|p| p.0 < x);
    if curve[hi].0 == x {
        out.push(curve[hi]);
        if let Some(next) = curve.get(hi + 1) {
            out.push(*next);
        } else if hi > 0 {
            out.push(curve[hi - 1]);
        }
    } else {
        out.push(curve[hi - 1]);
        out.push(curve[hi]);
    }
}

/// Least-squares line through `points`, evaluated at `x`.
fn local_line(points: &[(f64, f64)], x: f64) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return my;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    my + sxy / sxx * (x - mx)
}

/// Evenly spaced values `start, start + step, ..., <= stop`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        let axis = Self { start, stop, step };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop >= self.start && self.step > 0.0) {
            return Err(Error::InvalidParameter {
                field: "grid",
                reason: format!(
                    "need finite start <= stop and step > 0, got {}..{} step {}",
                    self.start, self.stop, self.step
                ),
            });
        }
        Ok(())
    }

    /// Grid values, rounded to 1e-9 so that decimal steps land on decimal values.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| ((self.start + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub tc: GridAxis,
    pub nu: GridAxis,
    pub gamma: GridAxis,
}

impl GridSpec {
    /// Exponent axes `0.25..=5.0` in steps of 0.25 and `Tc` in steps of 0.02.
    pub fn standard(tc_lo: f64, tc_hi: f64) -> Result<Self> {
        Ok(Self {
            tc: GridAxis::new(tc_lo, tc_hi, 0.02)?,
            nu: GridAxis::new(0.25, 5.0, 0.25)?,
            gamma: GridAxis::new(0.25, 5.0, 0.25)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.tc.validate()?;
        self.nu.validate()?;
        self.gamma.validate()?;
        if self.tc.start <= 0.0 || self.nu.start <= 0.0 {
            return Err(Error::InvalidParameter {
                field: "grid",
                reason: "Tc and nu grids must be positive".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapePoint {
    #[serde(rename = "Tc")]
    pub tc: f64,
    pub nu: f64,
    pub gamma: f64,
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    #[serde(rename = "Tc")]
    pub tc: f64,
    pub nu: f64,
    pub gamma: f64,
    pub quality: f64,
    pub grid: GridSpec,
    /// Every grid point where the collapse could be evaluated, in grid order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub landscape: Option<Vec<LandscapePoint>>,
}

impl ScalingResult {
    /// True if the minimizer sits on the edge of any grid axis.
    pub fn on_grid_boundary(&self) -> bool {
        let edge = |axis: &GridAxis, v: f64| {
            let values = axis.values();
            v == values[0] || v == values[values.len() - 1]
        };
        edge(&self.grid.tc, self.tc)
            || edge(&self.grid.nu, self.nu)
            || edge(&self.grid.gamma, self.gamma)
    }
}

/// Minimizes [`collapse_quality`] over the grid; ties go to the smallest
/// `(Tc, nu, gamma)` in lexicographic order.
pub fn grid_search_exponents(
    table: &ObservableTable,
    grid: &GridSpec,
    keep_landscape: bool,
) -> Result<ScalingResult> {
    grid.validate()?;
    let points = scaling_points(table);
    let (tcs, nus, gammas) = (grid.tc.values(), grid.nu.values(), grid.gamma.values());
    let mut triples = Vec::with_capacity(tcs.len() * nus.len() * gammas.len());
    for &tc in &tcs {
        for &nu in &nus {
            for &gamma in &gammas {
                triples.push((tc, nu, gamma));
            }
        }
    }
    let evaluated: Vec<Result<f64>> = triples
        .par_iter()
        .map(|&(tc, nu, gamma)| collapse_quality_points(&points, tc, nu, gamma))
        .collect();

    let mut best: Option<LandscapePoint> = None;
    let mut landscape = Vec::new();
    let mut overlap_error = None;
    for (&(tc, nu, gamma), quality) in triples.iter().zip(evaluated) {
        let quality = match quality {
            Ok(q) => q,
            Err(e @ Error::InsufficientOverlap { .. }) => {
                overlap_error.get_or_insert(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let point = LandscapePoint {
            tc,
            nu,
            gamma,
            quality,
        };
        if best.is_none_or(|b| quality < b.quality) {
            best = Some(point);
        }
        if keep_landscape {
            landscape.push(point);
        }
    }
    let best =
        best.ok_or_else(|| overlap_error.unwrap_or(Error::InsufficientOverlap { sizes: 0 }))?;
    Ok(ScalingResult {
        tc: best.tc,
        nu: best.nu,
        gamma: best.gamma,
        quality: best.quality,
        grid: *grid,
        landscape: keep_landscape.then_some(landscape),
    })
}
