#![no_main]

use libfuzzer_sys::fuzz_target;
use piano_fingering::harness::Checkpoint;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ck) = Checkpoint::from_json(text) {
        Checkpoint::from_json(&ck.to_json()).expect("saved checkpoints load");
    }
});
