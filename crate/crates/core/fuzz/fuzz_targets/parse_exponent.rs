#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_recovery::measures::Exponent;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(p) = text.parse::<Exponent>() {
        assert!(p.value() >= 1.0);
        let back: Exponent = p.to_string().parse().expect("display form parses");
        assert_eq!(back, p);
    }
});
