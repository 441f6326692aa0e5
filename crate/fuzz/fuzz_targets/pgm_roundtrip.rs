#![no_main]

use isea_core::imgio::{read_pgm, write_pgm};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = read_pgm(data) {
        let bytes = write_pgm(&img);
        assert_eq!(read_pgm(&bytes).expect("written image parses"), img);
    }
});
