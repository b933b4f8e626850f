//! Scenario files, CSV and JSON persistence, decay fits, SVG plots and the
//! acceptance suite.

mod config;
mod fit;
mod plot;
mod scenario;
mod series;
mod verify;

pub use config::{
    product_scenario, random_modes, random_torus_scenario, synthesize, with_fault, FactorConfig, Mode, ModelConfig,
    MonitorConfig, OutputConfig, PotentialSpec, RandomPotential, ScenarioConfig, MIN_RANDOM_MARGIN, SCHEMA_VERSION,
};
pub use fit::{fit_decay, DecayFitReport, MIN_FIT_SAMPLES};
pub use plot::{render_svg, write_svg, PlotSpec};
pub use scenario::{
    decay_series, observed_constants, output_root, run_scenario, scenario_verdicts, ScenarioOutcome, Summary,
    SummaryProvenance, OUT_ENV, SCALEX_TOLERANCE,
};
pub use series::{format_value, write_records, Series};
pub use verify::{
    example_scenario, verify_all, verify_with, write_report, Check, CriterionReport, SuiteReport, VerifyOptions,
    SCENARIO_SEED, TITLES,
};

#[cfg(test)]
mod tests;
