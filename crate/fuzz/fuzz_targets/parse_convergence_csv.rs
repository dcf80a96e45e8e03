#![no_main]

use libfuzzer_sys::fuzz_target;
use tscloud::io::{convergence_csv, parse_convergence_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = parse_convergence_csv(text) {
            let rendered = convergence_csv(&rows);
            let again = parse_convergence_csv(&rendered).expect("re-parse");
            assert_eq!(convergence_csv(&again), rendered);
        }
    }
});
