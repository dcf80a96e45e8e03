#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = tscloud::io::parse_config(text) {
            // accepted configs must survive a roundtrip
            let again = tscloud::io::parse_config(&cfg.to_json()).expect("re-parse");
            assert_eq!(again.to_json(), cfg.to_json());
        }
    }
});
