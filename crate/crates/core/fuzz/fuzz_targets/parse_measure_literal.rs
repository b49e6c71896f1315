#![no_main]

use libfuzzer_sys::fuzz_target;
use spectral_recovery::experiments::MeasureSpec;
use spectral_recovery::system::Grid;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(spec) = MeasureSpec::parse(text) {
        let grid = Grid::new(1, 64).unwrap();
        let _ = spec.build(&grid);
    }
});
