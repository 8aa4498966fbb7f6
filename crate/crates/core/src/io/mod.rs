//! Input tables and result files.

mod profiles;
mod results;

pub use profiles::{load_profiles, parse_profiles_str, ProfileTable, PROFILE_HEADER};
pub use results::{
    curtailment_table, emit_results, emit_results_at, fitted_models_csv, flows_table, format_number,
    parse_result_table, pn_table, prices_table, read_result_table, read_summary, write_atomic, write_fitted_models,
    FittedRow, ResultRow, ResultTable, StepRecord, SummaryFile, FITTED_HEADER, RESULTS_FORMAT, RESULT_FILES,
};
