#![no_main]

use fieldroad_cli::config::{RawConfig, RunConfig};
use libfuzzer_sys::fuzz_target;

// One `key=value` override per line, applied in order.
fuzz_target!(|data: &[u8]| {
    let input = String::from_utf8_lossy(data);
    let mut raw = RawConfig::default();
    for flag in input.lines() {
        if raw.apply_override(flag).is_err() {
            return;
        }
    }
    let _ = RunConfig::from_raw(&raw);
});
