//! Corpus access shared by the benchmarks.

use std::fs;
use std::path::{Path, PathBuf};

use invforge::{parse_program, Program};

pub fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every corpus program, by file stem, in name order.
pub fn corpus() -> Vec<(String, Program)> {
    let mut out: Vec<(String, Program)> = fs::read_dir(corpus_dir())
        .into_iter()
        .flatten()
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.to_string_lossy();
            name.ends_with(".imp") && !name.ends_with(".solved.imp")
        })
        .filter_map(|p| {
            let text = fs::read_to_string(&p).ok()?;
            let stem = p.file_stem()?.to_string_lossy().into_owned();
            Some((stem, parse_program(&text).ok()?))
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

pub fn corpus_program(name: &str) -> Program {
    corpus()
        .into_iter()
        .find(|(n, _)| n == name)
        .map(|(_, p)| p)
        .unwrap_or_else(|| panic!("no corpus program {name}"))
}
