//! Library surface of the command-line tool: document schemas, parsers, and
//! command implementations. Exposed separately from the binary so the
//! parsing entry points can be exercised by integration tests and fuzz
//! targets.

pub mod commands;
pub mod docs;

pub use commands::{cmd_pade_error, cmd_simulate, cmd_sweep, cmd_synth, cmd_verify, OutputFormat};
pub use docs::{
    parse_axis_spec, parse_gains_doc, parse_gains_inline, parse_run_config, parse_scenario,
    RunConfig, ScenarioDoc,
};
