//! Phase diagrams in the kT-q and kT-t planes.

use serde::{Deserialize, Serialize};

use super::critical::{estimate_critical_temperature, TcEstimate, TcMethod, TcOptions};
use super::table::{ObservableTable, ParamGroup};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseAxis {
    Q,
    T,
}

impl PhaseAxis {
    pub fn name(self) -> &'static str {
        match self {
            PhaseAxis::Q => "q",
            PhaseAxis::T => "t",
        }
    }

    fn value(self, g: &ParamGroup) -> f64 {
        match self {
            PhaseAxis::Q => g.q,
            PhaseAxis::T => g.t,
        }
    }

    /// The group with the axis parameter blanked out.
    fn rest(self, g: &ParamGroup) -> ParamGroup {
        let mut g = *g;
        match self {
            PhaseAxis::Q => g.q = 0.0,
            PhaseAxis::T => g.t = 0.0,
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub axis_value: f64,
    pub method: TcMethod,
    pub estimate: Result<TcEstimate>,
}

/// One estimate per axis value and method, ordered by axis value then by
/// the order of `methods`. Per-point failures are kept, not propagated.
pub fn build_phase_diagram(
    table: &ObservableTable,
    axis: PhaseAxis,
    methods: &[TcMethod],
    options: &TcOptions,
) -> Result<Vec<PhasePoint>> {
    let groups = table.groups();
    let Some(first) = groups.first() else {
        return Err(Error::InsufficientData("empty table".into()));
    };
    if let Some(g) = groups.iter().find(|g| axis.rest(g) != axis.rest(first)) {
        return Err(Error::ParameterMismatch(format!(
            "phase diagram along {} needs every other parameter fixed; found {:?} and {:?}",
            axis.name(),
            first,
            g
        )));
    }
    let mut groups = groups;
    groups.sort_by(|a, b| axis.value(a).total_cmp(&axis.value(b)));
    let mut diagram = Vec::new();
    for group in &groups {
        let sub = table.select(group);
        for &method in methods {
            diagram.push(PhasePoint {
                axis_value: axis.value(group),
                method,
                estimate: estimate_critical_temperature(&sub, method, options),
            });
        }
    }
    Ok(diagram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::table::{ObservableRow, PointKey};

    fn rows(t: f64, dip_top: Option<f64>) -> Vec<ObservableRow> {
        let mut out = Vec::new();
        for n in [64, 128] {
            for i in 1..12 {
                let kt = (4.0 * f64::from(i)).round() / 100.0;
                let mut row = ObservableRow::failed(
                    PointKey {
                        group: ParamGroup {
                            k: 20,
                            coupling: 1.0,
                            q: 0.01,
                            t,
                            epsilon: 0.0,
                        },
                        kt,
                        n,
                    },
                    10,
                    1,
                    "",
                );
                row.error = None;
                row.binder = Some(match dip_top {
                    Some(top) if kt > 0.1 && kt <= top + 1e-9 => -0.5,
                    _ if kt <= 0.1 => 0.9,
                    _ => 0.0,
                });
                out.push(row);
            }
        }
        out
    }

    #[test]
    fn diagram_is_ordered_and_keeps_no_transition() {
        let mut all = rows(0.7, None);
        all.extend(rows(0.3, Some(0.24)));
        all.extend(rows(0.5, Some(0.2)));
        let table = ObservableTable::new(all).unwrap();
        let d = build_phase_diagram(
            &table,
            PhaseAxis::T,
            &[TcMethod::BinderDeparture],
            &TcOptions::default(),
        )
        .unwrap();
        let got: Vec<(f64, Option<f64>)> = d
            .iter()
            .map(|p| (p.axis_value, p.estimate.as_ref().unwrap().tc()))
            .collect();
        assert_eq!(got, vec![(0.3, Some(0.24)), (0.5, Some(0.2)), (0.7, None)]);
    }

    #[test]
    fn per_point_errors_do_not_abort() {
        let mut all = rows(0.3, Some(0.24));
        all.extend(rows(0.5, Some(1.0)));
        let table = ObservableTable::new(all).unwrap();
        let d = build_phase_diagram(
            &table,
            PhaseAxis::T,
            &[TcMethod::BinderDeparture],
            &TcOptions::default(),
        )
        .unwrap();
        assert!(d[0].estimate.is_ok());
        assert!(matches!(d[1].estimate, Err(Error::RangeTooNarrow(_))));
    }

    #[test]
    fn other_parameters_must_be_fixed() {
        let mut all = rows(0.3, Some(0.24));
        let mut other = rows(0.5, Some(0.2));
        for r in &mut other {
            r.key.group.q = 0.1;
        }
        all.extend(other);
        let table = ObservableTable::new(all).unwrap();
        assert!(matches!(
            build_phase_diagram(
                &table,
                PhaseAxis::T,
                &[TcMethod::BinderDeparture],
                &TcOptions::default()
            ),
            Err(Error::ParameterMismatch(_))
        ));
    }
}
