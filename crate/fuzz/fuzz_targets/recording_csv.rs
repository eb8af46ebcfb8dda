#![no_main]

use libfuzzer_sys::fuzz_target;
use rocketlite::signal::{parse_recording_csv, RecordingMeta};

fuzz_target!(|data: &[u8]| {
    let meta = RecordingMeta {
        brand: "fuzz".into(),
        family: "drill".into(),
        activity: "drilling".into(),
        source_rate_hz: 3200.0,
    };
    if let Ok(rec) = parse_recording_csv(data, meta, 0) {
        assert_eq!(rec.labels.len(), rec.len());
        assert!(rec.samples.iter().all(|c| c.len() == rec.len()));
    }
});
