#![no_main]

use libfuzzer_sys::fuzz_target;
use rocketlite::pipeline::RunConfig;

fuzz_target!(|data: &str| {
    if let Ok(config) = RunConfig::from_toml_str(data) {
        let text = config.to_toml().expect("valid config serializes");
        assert_eq!(RunConfig::from_toml_str(&text).expect("round trip"), config);
    }
});
