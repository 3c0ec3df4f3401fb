//! Command-line companion to `despeckle-core`: grayscale image I/O, the
//! FOEBANK file glue, weight presets, JSON run reports and the four
//! subcommands (`synth`, `despeckle`, `eval`, `benchmark`).

pub mod bank;
pub mod commands;
pub mod io;
pub mod presets;
pub mod report;
