#![no_main]

use libfuzzer_sys::fuzz_target;
use rocketlite::io::decode_vectors;

fuzz_target!(|data: &[u8]| {
    if let Ok(v) = decode_vectors(data) {
        // compared as bytes: recorded inputs may hold NaN
        let bytes = v.to_bytes().expect("decoded vectors re-encode");
        let again = decode_vectors(&bytes).expect("re-encoded vectors decode");
        assert_eq!(again.to_bytes().unwrap(), bytes);
    }
});
