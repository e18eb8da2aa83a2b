#![no_main]

use libfuzzer_sys::fuzz_target;
use posstab::io::parse_input_signal_json;
use posstab::Norm;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(u) = parse_input_signal_json(text) {
        let _ = u.sup_norm(Norm::LInf);
        if let Some(n) = u.dim() {
            let _ = u.at(u.values.len(), n);
        }
    }
});
