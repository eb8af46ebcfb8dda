#![no_main]

use libfuzzer_sys::fuzz_target;
use rocketlite::signal::decode_window_archive;

fuzz_target!(|data: &[u8]| {
    if let Ok(archive) = decode_window_archive(data) {
        for w in &archive.windows {
            assert_eq!(w.channels(), archive.channels);
            assert_eq!(w.len(), archive.window_len);
        }
    }
});
