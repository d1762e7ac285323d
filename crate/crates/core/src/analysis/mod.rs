//! Efficiency and fidelity metrics, parameter sweeps, and their CSV and SVG
//! output.

mod metrics;
mod report;
mod sweep;

pub use metrics::{efficiency_closed_form, fidelity, DephasedFidelity};
pub use report::{
    colour, emit_csv, emit_svg_heatmap, geometry, parse_csv, SweepColumn, CSV_COLUMNS, DEPHASING_COLUMNS,
};
pub use sweep::{leakage_rate, linspace, run_sweep, SweepGrid, SweepRecord};
