#![no_main]

use libfuzzer_sys::fuzz_target;
use qfreq::datasets::{iris_from_rows, parse_iris_csv, IRIS_FEATURE_RANGE};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_iris_csv(text) {
        let _ = iris_from_rows(&rows, ("Iris-setosa", "Iris-versicolor"), IRIS_FEATURE_RANGE);
    }
});
