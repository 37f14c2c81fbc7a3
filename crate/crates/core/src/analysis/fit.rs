//! Log-log line fits for correlation decay and rank-frequency tables.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares of `y` on `x`; `None` for fewer than two distinct `x`.
pub fn line_fit(points: &[(f64, f64)]) -> Option<LineFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

/// Fit of `ln y` against `ln x`; points with non-positive coordinates are dropped.
pub fn loglog_fit(points: &[(f64, f64)]) -> Option<LineFit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    line_fit(&logs)
}

/// Widest run of ranks over which the local log-log slope stays in range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawRegion {
    pub first_rank: usize,
    pub last_rank: usize,
    /// `log10(last_rank / first_rank)`.
    pub decades: f64,
    /// Slope of a single fit over the whole region.
    pub slope: f64,
}

/// Scans a rank-frequency table for a power-law-like region.
///
/// The local slope at rank `r` is the log-log fit over ranks
/// `[r, r * 10^window_decades]` (at least three points). A region is a run of
/// consecutive starting ranks whose local slope lies in `[slope_lo, slope_hi]`;
/// it covers from its first starting rank to the end of its last window.
pub fn power_law_region(
    ranks: &[(usize, f64)],
    window_decades: f64,
    slope_lo: f64,
    slope_hi: f64,
) -> Option<PowerLawRegion> {
    let pts: Vec<(f64, f64)> = ranks
        .iter()
        .filter(|p| p.0 > 0 && p.1 > 0.0)
        .map(|&(r, f)| (r as f64, f))
        .collect();
    let span = 10f64.powf(window_decades);
    let windows: Vec<Option<(usize, bool)>> = (0..pts.len())
        .map(|start| {
            let end_rank = pts[start].0 * span;
            let end = pts.partition_point(|p| p.0 <= end_rank + 1e-9);
            if end - start < 3 || pts[end - 1].0 < end_rank - 1e-9 && end == pts.len() {
                return None;
            }
            let fit = loglog_fit(&pts[start..end])?;
            Some((end - 1, (slope_lo..=slope_hi).contains(&fit.slope)))
        })
        .collect();

    let mut best: Option<(usize, usize)> = None;
    let mut run_start = None;
    for (i, w) in windows.iter().enumerate() {
        match w {
            Some((_, true)) => {
                let first = *run_start.get_or_insert(i);
                let last = w.expect("checked").0;
                let better =
                    best.is_none_or(|(bf, bl)| pts[last].0 / pts[first].0 > pts[bl].0 / pts[bf].0);
                if better {
                    best = Some((first, last));
                }
            }
            _ => run_start = None,
        }
    }
    let (first, last) = best?;
    Some(PowerLawRegion {
        first_rank: pts[first].0 as usize,
        last_rank: pts[last].0 as usize,
        decades: (pts[last].0 / pts[first].0).log10(),
        slope: loglog_fit(&pts[first..=last]).map_or(f64::NAN, |f| f.slope),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_fit() {
        let pts: Vec<(f64, f64)> = [64.0, 128.0, 256.0, 512.0]
            .iter()
            .map(|&n: &f64| (n, 3.0 * n.powf(-0.25)))
            .collect();
        let fit = loglog_fit(&pts).unwrap();
        assert!((fit.slope + 0.25).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        assert!(loglog_fit(&pts[..1]).is_none());
    }

    #[test]
    fn zipf_law_spans_all_ranks() {
        let ranks: Vec<(usize, f64)> = (1..=100).map(|r| (r, 1.0 / r as f64)).collect();
        let region = power_law_region(&ranks, 0.5, -3.0, -0.3).unwrap();
        // The last full window starts at rank 31 and ends at 98.
        assert_eq!((region.first_rank, region.last_rank), (1, 98));
        assert!((region.decades - 98f64.log10()).abs() < 1e-12);
        assert!((region.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_table_has_no_region() {
        let ranks: Vec<(usize, f64)> = (1..=100).map(|r| (r, 0.01 - 1e-6 * r as f64)).collect();
        assert!(power_law_region(&ranks, 0.5, -3.0, -0.3).is_none());
    }

    #[test]
    fn region_stops_where_slope_leaves_range() {
        // Power law up to rank 20, flat afterwards.
        let ranks: Vec<(usize, f64)> = (1..=100)
            .map(|r| {
                (
                    r,
                    if r <= 20 {
                        1.0 / r as f64
                    } else {
                        0.05 - 1e-6 * r as f64
                    },
                )
            })
            .collect();
        let region = power_law_region(&ranks, 0.5, -3.0, -0.3).unwrap();
        assert_eq!(region.first_rank, 1);
        // Windows straddling the kink still mix in enough slope to qualify.
        assert!(region.last_rank < 50, "{region:?}");
    }
}
