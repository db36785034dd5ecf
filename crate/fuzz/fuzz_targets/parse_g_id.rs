#![no_main]

use holoweight::catalog::GKind;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(id) = std::str::from_utf8(data) {
        if let Ok(g) = id.parse::<GKind>() {
            let again: GKind = g.to_string().parse().expect("display output parses");
            assert_eq!(again, g);
        }
    }
});
