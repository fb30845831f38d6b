//! Configuration-driven runner: load a family, surface or projective field,
//! run a pipeline of invariant checks and write a JSON report together with
//! CSV tables and OBJ meshes.

pub mod config;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, Check, ConfigError, Pipeline, RunConfig};
pub use output::{emit_mesh, write_mesh, MeshStats};
pub use run::{run, CheckResult, InvariantReport, RunError, RunOutput, Timings};
