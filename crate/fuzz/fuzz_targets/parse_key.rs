#![no_main]

use isea_core::imgio::{parse_key, serialize_key};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(key) = parse_key(text) {
        let again = parse_key(&serialize_key(&key)).expect("serialized key parses");
        assert_eq!(again, key);
    }
});
