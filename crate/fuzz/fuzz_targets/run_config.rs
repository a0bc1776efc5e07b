#![no_main]

use libfuzzer_sys::fuzz_target;
use qfreq::config::{ConfigFile, Overrides, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if ConfigFile::parse(text).is_ok() {
        let _ = RunConfig::from_toml(text, &Overrides::default());
    }
});
