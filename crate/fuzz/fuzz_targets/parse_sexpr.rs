#![no_main]

use holoweight::field::{sexpr, ExprPool};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let mut pool = ExprPool::new();
        if let Ok(root) = sexpr::parse(text, &mut pool) {
            let dumped = sexpr::dump(&pool, root);
            let mut fresh = ExprPool::new();
            let back = sexpr::parse(&dumped, &mut fresh).expect("dump output parses");
            assert_eq!(sexpr::dump(&fresh, back), dumped);
        }
    }
});
