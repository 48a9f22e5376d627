pub mod cli;
pub mod engine;
pub mod func;
pub mod metrics;
pub mod model;
pub mod sched;
pub mod syntax;

pub use model::{check_source, load_program, Program};
