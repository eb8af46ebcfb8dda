#![no_main]

use libfuzzer_sys::fuzz_target;
use rocketlite::signal::parse_sidecar;

fuzz_target!(|data: &str| {
    let _ = parse_sidecar(data);
});
