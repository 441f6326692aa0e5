#![no_main]

//! The oracle answers with attacker-controlled pixels. The attack must
//! either fail cleanly or return a key consistent with every answer.

use isea_core::cpa::cpa_attack;
use isea_core::{apply_equivalent, Direction, GrayImage};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() < 2 {
        return;
    }
    let h = 1 + (data[0] % 24) as usize;
    let w = 1 + (data[1] % 6) as usize;
    let pool = &data[2..];
    let mut cursor = 0usize;
    let mut log: Vec<(GrayImage, GrayImage)> = Vec::new();
    let mut oracle = |plain: &GrayImage| {
        let pixels: Vec<u8> = (0..h * w)
            .map(|_| {
                let b = pool.get(cursor).copied().unwrap_or(0);
                cursor += 1;
                b
            })
            .collect();
        let cipher = GrayImage::new(h, w, pixels)?;
        log.push((plain.clone(), cipher.clone()));
        Ok(cipher)
    };
    if let Ok(key) = cpa_attack(&mut oracle, h, w) {
        for (plain, cipher) in &log {
            assert_eq!(&apply_equivalent(plain, &key, Direction::Encrypt).unwrap(), cipher);
        }
    }
});
