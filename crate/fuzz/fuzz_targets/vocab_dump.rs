#![no_main]

use libfuzzer_sys::fuzz_target;
use piano_fingering::encoding::PdVocabulary;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = PdVocabulary::parse_dump(text) {
        assert_eq!(PdVocabulary::parse_dump(&v.dump()).unwrap(), v);
    }
});
