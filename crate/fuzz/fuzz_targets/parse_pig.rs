#![no_main]

use libfuzzer_sys::fuzz_target;
use piano_fingering::pig::{parse_pig, write_pig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(piece) = parse_pig(text) {
        let again = parse_pig(&write_pig(&piece)).expect("written files parse");
        assert_eq!(again.len(), piece.len());
    }
});
