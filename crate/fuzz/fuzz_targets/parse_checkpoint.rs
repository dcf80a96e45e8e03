#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(ck) = tscloud::io::parse_checkpoint(text) {
            let again = tscloud::io::parse_checkpoint(&ck.to_json()).expect("re-parse");
            assert_eq!(again.to_json(), ck.to_json());
        }
    }
});
