#![no_main]

use std::path::Path;

use formheat_cli::config::{parse_str, RunConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(raw) = parse_str(&text) {
        let _ = RunConfig::from_raw(raw, Path::new("."));
    }
});
