#![no_main]

use fieldroad_core::csvio::{read_snapshots, road_profiles};
use fieldroad_core::diagnostics::track_profiles;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(rows) = read_snapshots(data) else {
        return;
    };
    if let Ok(profiles) = road_profiles(&rows) {
        let trace = track_profiles(profiles.iter().map(|p| (p.t, p.xs.as_slice(), p.us.as_slice())), 0.5);
        assert_eq!(trace.times.len(), trace.pos_right.len());
    }
});
