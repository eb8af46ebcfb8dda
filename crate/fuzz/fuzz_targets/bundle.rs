#![no_main]

use libfuzzer_sys::fuzz_target;
use rocketlite::io::ModelBundle;

fuzz_target!(|data: &[u8]| {
    if let Ok(bundle) = ModelBundle::from_bytes(data) {
        // anything accepted must re-encode to something accepted
        let bytes = bundle.to_bytes().expect("decoded bundle re-encodes");
        ModelBundle::from_bytes(&bytes).expect("re-encoded bundle decodes");
    }
});
