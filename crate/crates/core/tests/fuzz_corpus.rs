//! Replays the checked-in fuzz seeds through the same entry points the fuzz
//! targets use. Seeds named `valid_*` must be accepted, `invalid_*` rejected.

use std::path::{Path, PathBuf};

use pathtransport::error::Result;
use pathtransport::fuzzing;

fn corpus(target: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
}

fn replay(target: &str, entry: fn(&[u8]) -> Result<()>) {
    let files = corpus(target);
    assert!(files.len() >= 5, "{target} corpus is too small");
    for f in files {
        let name = f.file_name().unwrap().to_string_lossy().into_owned();
        let outcome = entry(&std::fs::read(&f).unwrap());
        if name.starts_with("valid_") {
            assert!(outcome.is_ok(), "{target}/{name}: {:?}", outcome.err());
        } else if name.starts_with("invalid_") {
            assert!(outcome.is_err(), "{target}/{name} was accepted");
        }
    }
}

#[test]
fn parse_path_seeds() {
    replay("parse_path", fuzzing::path);
}

#[test]
fn parse_connection_seeds() {
    replay("parse_connection", fuzzing::connection);
}

#[test]
fn parse_potential_seeds() {
    replay("parse_potential", fuzzing::potential);
}

#[test]
fn run_config_seeds() {
    replay("run_config", fuzzing::run_config);
}

fn seed_bytes() -> Vec<(fn(&[u8]) -> Result<()>, Vec<u8>)> {
    let targets: [(&str, fn(&[u8]) -> Result<()>); 4] = [
        ("parse_path", fuzzing::path),
        ("parse_connection", fuzzing::connection),
        ("parse_potential", fuzzing::potential),
        ("run_config", fuzzing::run_config),
    ];
    targets
        .iter()
        .flat_map(|&(t, f)| corpus(t).into_iter().map(move |p| (f, std::fs::read(p).unwrap())))
        .collect()
}

proptest::proptest! {
    #![proptest_config(proptest::prelude::ProptestConfig::with_cases(512))]

    #[test]
    fn mutated_seeds_never_panic(
        pick in 0usize..1000,
        edits in proptest::collection::vec((0usize..4096, proptest::prelude::any::<u8>(), 0u8..3), 1..6),
    ) {
        let seeds = seed_bytes();
        let (entry, mut bytes) = seeds[pick % seeds.len()].clone();
        for (at, byte, op) in edits {
            let at = if bytes.is_empty() { 0 } else { at % bytes.len() };
            match op {
                0 if !bytes.is_empty() => bytes[at] = byte,
                1 => bytes.insert(at, byte),
                _ if !bytes.is_empty() => {
                    bytes.remove(at);
                }
                _ => bytes.push(byte),
            }
        }
        let _ = entry(&bytes);
    }
}
