#![no_main]

use fieldroad_cli::config::{parse_text, RunConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(raw) = parse_text(text) {
            if let Ok(config) = RunConfig::from_raw(&raw) {
                let _ = config.to_manifest();
            }
        }
    }
});
