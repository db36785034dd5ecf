#![no_main]

use holoweight::config::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(text) {
            // accepted configs must describe a runnable matrix
            assert!(cfg.collar_inner < cfg.collar_outer);
            let _ = cfg.cells();
            let _ = cfg.quadrature_config().validate();
        }
    }
});
