//! Two-cell Monte Carlo experiment: an all-Active cell against a cell where
//! some handsets run in TR mode, both fed the same channel draws.

mod config;
mod output;
mod run;

pub use config::{
    parse_override, AppRates, BioheatConfig, ExposureConfig, FrameConfig, ModePolicy, RadioConfig,
    ScenarioConfig,
};
pub use output::{emit_outputs, OUTPUT_FILES};
pub use run::{
    check_constraints, complexity_series, draw_iteration, ee_series, exposure_results, representative_powers,
    run_network, run_scenario, signal_strength_dbm, simulate_cell, table4_report, tr_mask, user_axis,
    CellIteration, CellKind, CellMetrics, ComplexityRow, ConstraintReport, ConstraintRow, EeRow,
    ExposureResults, IterationDraws, NetworkResults, RunResults, UserStats, TABLE4_DEPTH_MM,
};
