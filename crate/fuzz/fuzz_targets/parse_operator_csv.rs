#![no_main]

use libfuzzer_sys::fuzz_target;
use posstab::io::parse_operator_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(op) = parse_operator_csv(text) {
        let m = op.to_matrix();
        assert!(m.is_square() && m.is_finite());
    }
});
