#![no_main]

use libfuzzer_sys::fuzz_target;
use posstab::io::{parse_operator_json, to_json_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(op) = parse_operator_json(text) else { return };
    // accepted operators survive a write/read cycle unchanged
    let again = parse_operator_json(&to_json_string(&op).unwrap()).unwrap();
    assert_eq!(again, op);
});
