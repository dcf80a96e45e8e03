#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((plant, _eps)) = tscloud::hinf::parse_plant_description(text) {
            let (n, _, _) = plant.dims().expect("validated plant");
            assert!(n >= 1 && !plant.rules.is_empty());
        }
    }
});
