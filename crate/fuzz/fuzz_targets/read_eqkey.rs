#![no_main]

use isea_core::imgio::{read_eqkey, write_eqkey};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(key) = read_eqkey(text) {
        let again = read_eqkey(&write_eqkey(&key)).expect("written eqkey parses");
        assert_eq!(again, key);
    }
});
