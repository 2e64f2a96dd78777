//! Library surface of the `ncmax` command line tool: scenario documents,
//! deterministic probe generation, task execution, and artifact writing.

pub mod probes;
pub mod report;
pub mod scenario;
pub mod selftest;
pub mod tasks;
