//! Every checked-in fuzz seed must decode, so the corpora stay useful as
//! the formats evolve.

use std::path::PathBuf;

use rocketlite::io::{decode_vectors, ModelBundle};
use rocketlite::pipeline::RunConfig;
use rocketlite::signal::{decode_window_archive, parse_recording_csv, parse_sidecar};
use rocketlite::sim::parse_scenario;

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("seed"))
        .map(|p| {
            let bytes = std::fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text(bytes: &[u8]) -> &str {
    std::str::from_utf8(bytes).unwrap()
}

#[test]
fn binary_seeds_decode() {
    for (path, bytes) in seeds("bundle") {
        let b = ModelBundle::from_bytes(&bytes).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(b.to_bytes().unwrap(), bytes);
    }
    for (path, bytes) in seeds("golden_vectors") {
        let v = decode_vectors(&bytes).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(v.to_bytes().unwrap(), bytes);
    }
    for (path, bytes) in seeds("window_archive") {
        decode_window_archive(&bytes).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn text_seeds_parse() {
    let mut meta = None;
    for (path, bytes) in seeds("sidecar") {
        meta = Some(parse_sidecar(text(&bytes)).unwrap_or_else(|e| panic!("{}: {e}", path.display())));
    }
    for (path, bytes) in seeds("recording_csv") {
        parse_recording_csv(&bytes, meta.clone().unwrap(), 0).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
    for (path, bytes) in seeds("scenario") {
        parse_scenario(text(&bytes)).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
    for (path, bytes) in seeds("run_config") {
        RunConfig::from_toml_str(text(&bytes)).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
