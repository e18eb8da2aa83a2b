#![no_main]

use libfuzzer_sys::fuzz_target;
use posstab::io::parse_cone_json;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cone) = parse_cone_json(text) {
        let c = cone.constants();
        assert!(c.normality_c >= 1.0 && c.decomposition_m >= 1.0 && c.dual_m_prime >= 1.0);
        assert!(cone.contains(&cone.axis(), 0.0).unwrap());
    }
});
