#![no_main]

use libfuzzer_sys::fuzz_target;
use rocketlite::sim::parse_scenario;

fuzz_target!(|data: &str| {
    if let Ok(segments) = parse_scenario(data) {
        assert!(segments.iter().all(|s| s.t_end_s >= s.t_start_s));
    }
});
