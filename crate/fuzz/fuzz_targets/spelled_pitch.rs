#![no_main]

use libfuzzer_sys::fuzz_target;
use piano_fingering::pig::{midi_to_spelled, spelled_to_midi};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(midi) = spelled_to_midi(text) {
        assert!(midi <= 127);
        assert_eq!(spelled_to_midi(&midi_to_spelled(midi)).unwrap(), midi);
    }
});
