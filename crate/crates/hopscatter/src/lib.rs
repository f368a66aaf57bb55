//! Discrete-event simulation of an edge-assisted BLE backscatter tag: an
//! edge server forwards channel information to a tag over a slow downlink,
//! the tag backscatters excitation packets onto target channels, and
//! receivers count what arrives.
//!
//! Experiments are described by JSON [`config::ScenarioConfig`] files and
//! run with [`scenario::run`].

pub mod checks;
pub mod config;
pub mod engine;
pub mod event;
pub mod fixtures;
pub mod model;
pub mod scenario;
pub mod stats;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use scenario::Outcome;

/// Writes each output as `<dir>/<name>_<suffix>` and returns the paths.
pub fn write_outputs(dir: &Path, name: &str, outcome: &Outcome) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (suffix, contents) in outcome.files() {
        let path = dir.join(format!("{name}_{suffix}"));
        fs::write(&path, contents)?;
        paths.push(path);
    }
    Ok(paths)
}
