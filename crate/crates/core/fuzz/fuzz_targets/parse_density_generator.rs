#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_recovery::measures::DensitySpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = text.parse::<DensitySpec>() {
        let back: DensitySpec = spec.to_string().parse().expect("display form parses");
        assert_eq!(back, spec);
        let _ = spec.exact_terms(1, 32.0);
    }
});
