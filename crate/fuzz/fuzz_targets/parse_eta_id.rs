#![no_main]

use holoweight::catalog::HoloTestFunction;
use holoweight::geometry::DomainKind;
use holoweight::Complex64;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(id) = std::str::from_utf8(data) {
        for domain in [DomainKind::Disc, DomainKind::Ball] {
            if let Ok(eta) = HoloTestFunction::parse(id, domain) {
                assert_eq!(eta.id, id);
                let _ = eta.eval_z(Complex64::new(0.25, -0.5));
                let _ = eta.taylor_coeff(3);
            }
        }
    }
});
