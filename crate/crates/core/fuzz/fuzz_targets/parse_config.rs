#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_recovery::experiments::ExperimentConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = ExperimentConfig::from_json(text) {
        // validation may reject, but must not panic
        let _ = config.validate();
        let back = ExperimentConfig::from_json(&config.to_json()).expect("serialized config parses");
        assert_eq!(back.study, config.study);
    }
});
