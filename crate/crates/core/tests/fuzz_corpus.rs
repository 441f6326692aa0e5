//! Runs the checked-in fuzz seeds through the same checks as the fuzz
//! targets, so the corpus is exercised on stable toolchains too.

use std::fs;
use std::path::PathBuf;

use isea_core::cpa::cpa_attack;
use isea_core::imgio::{parse_key, read_eqkey, read_pgm, serialize_key, write_eqkey, write_pgm};
use isea_core::{apply_equivalent, Direction, GrayImage};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn pgm_seeds() {
    let mut ok = 0;
    for (name, data) in seeds("read_pgm").into_iter().chain(seeds("pgm_roundtrip")) {
        if let Ok(img) = read_pgm(&data) {
            assert_eq!(read_pgm(&write_pgm(&img)).unwrap(), img, "{name}");
            ok += 1;
        }
    }
    assert!(ok >= 2);
}

#[test]
fn key_seeds() {
    let mut ok = 0;
    for (name, data) in seeds("parse_key") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        if let Ok(key) = parse_key(text) {
            assert_eq!(parse_key(&serialize_key(&key)).unwrap(), key, "{name}");
            ok += 1;
        }
    }
    assert!(ok >= 2);
}

#[test]
fn eqkey_seeds() {
    let mut ok = 0;
    for (name, data) in seeds("read_eqkey") {
        let Ok(text) = std::str::from_utf8(&data) else { continue };
        if let Ok(key) = read_eqkey(text) {
            assert_eq!(read_eqkey(&write_eqkey(&key)).unwrap(), key, "{name}");
            ok += 1;
        }
    }
    assert!(ok >= 1);
}

#[test]
fn cpa_oracle_seeds() {
    let mut ok = 0;
    for (name, data) in seeds("cpa_untrusted_oracle") {
        if data.len() < 2 {
            continue;
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
                assert_eq!(&apply_equivalent(plain, &key, Direction::Encrypt).unwrap(), cipher, "{name}");
            }
            ok += 1;
        }
    }
    assert_eq!(ok, 1, "only the identity seed describes a consistent oracle");
}
