//! Inference from observable tables: critical temperatures, finite-size
//! scaling collapse, phase diagrams and rank-frequency fits.

pub mod collapse;
pub mod critical;
pub mod fit;
pub mod phase;
pub mod table;

pub use collapse::{
    collapse_quality, grid_search_exponents, GridAxis, GridSpec, LandscapePoint, ScalingResult,
};
pub use critical::{
    default_fss_grid, estimate_critical_temperature, TcEstimate, TcMethod, TcOptions,
};
pub use fit::{loglog_fit, power_law_region, LineFit, PowerLawRegion};
pub use phase::{build_phase_diagram, PhaseAxis, PhasePoint};
pub use table::{ObservableRow, ObservableTable, ParamGroup, PointKey, SchemaError};
