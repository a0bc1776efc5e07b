#![no_main]

use libfuzzer_sys::fuzz_target;
use qfreq::qkernel::SvmModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = SvmModel::from_json(text) {
        assert_eq!(SvmModel::from_json(&model.to_json()).expect("round trip"), model);
    }
});
