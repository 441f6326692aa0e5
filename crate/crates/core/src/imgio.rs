//! Serialization: binary PGM images, secret-key files and equivalent-key
//! files.
//!
//! Key files are line-oriented `name=value` documents; `#` starts a comment
//! that runs to the end of the line. A secret key file carries `m`, `n`,
//! `Ti`, `x0` and `mu`:
//!
//! ```text
//! m=20
//! n=51
//! Ti=1
//! x0=0.2009
//! mu=3.98
//! ```
//!
//! An equivalent-key file carries `M`, `N` and the two permutations as
//! space-separated indices:
//!
//! ```text
//! M=2
//! N=1
//! row_perm=1 0
//! col_perm=0 1 2 3 4 5 6 7
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::bitplane::GrayImage;
use crate::cipher::EquivalentKey;
use crate::error::{Error, Result};
use crate::keyschedule::SecretKey;
use crate::perm::Permutation;

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&c| c != b'\n' && c != b'\r') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    /// Returns the value and the offset it starts at.
    fn number(&mut self, what: &str) -> Result<(usize, usize)> {
        self.skip_space_and_comments();
        let start = self.pos;
        let mut value: usize = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add((b - b'0') as usize))
                .ok_or_else(|| Error::format(start, format!("{what} is too large")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(if self.pos >= self.bytes.len() {
                Error::format(self.pos, format!("unexpected end of header, expected {what}"))
            } else {
                Error::format(self.pos, format!("expected {what}"))
            });
        }
        Ok((value, start))
    }
}

/// Decodes a binary (`P5`) PGM with maxval 255.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::format(0, "bad magic, expected \"P5\""));
    }
    let mut r = HeaderReader { bytes, pos: 2 };
    if !r.bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(Error::format(2, "expected whitespace after magic"));
    }
    let (width, width_at) = r.number("width")?;
    let (height, _) = r.number("height")?;
    let (maxval, maxval_at) = r.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(width_at, format!("empty image {width}x{height}")));
    }
    if maxval != 255 {
        return Err(Error::format(
            maxval_at,
            format!("unsupported maxval {maxval}, only 255 is accepted"),
        ));
    }
    match bytes.get(r.pos) {
        Some(b) if b.is_ascii_whitespace() => r.pos += 1,
        Some(_) => return Err(Error::format(r.pos, "expected whitespace before raster")),
        None => return Err(Error::format(r.pos, "missing raster")),
    }
    let len = width
        .checked_mul(height)
        .ok_or_else(|| Error::format(width_at, "image dimensions overflow"))?;
    let raster = &bytes[r.pos..];
    if raster.len() < len {
        return Err(Error::format(
            bytes.len(),
            format!("truncated raster: {} of {len} bytes", raster.len()),
        ));
    }
    GrayImage::new(height, width, raster[..len].to_vec())
}

pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    out
}

/// `name -> value` for every entry of a key document.
fn entries<'a>(text: &'a str, known: &[&str]) -> Result<HashMap<&'a str, &'a str>> {
    let mut out = HashMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, value) = line.split_once('=').ok_or_else(|| {
            Error::validation(format!("line {}", n + 1), "expected `name=value`")
        })?;
        let name = name.trim();
        if !known.contains(&name) {
            return Err(Error::validation(name, format!("unknown entry on line {}", n + 1)));
        }
        if out.insert(name, value.trim()).is_some() {
            return Err(Error::validation(name, format!("duplicate entry on line {}", n + 1)));
        }
    }
    Ok(out)
}

fn required<'a>(map: &HashMap<&str, &'a str>, name: &str) -> Result<&'a str> {
    map.get(name)
        .copied()
        .ok_or_else(|| Error::validation(name, "missing entry"))
}

fn parse_field<T: std::str::FromStr>(map: &HashMap<&str, &str>, name: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = required(map, name)?;
    raw.parse()
        .map_err(|e| Error::validation(name, format!("cannot parse {raw:?}: {e}")))
}

pub fn parse_key(text: &str) -> Result<SecretKey> {
    let map = entries(text, &["m", "n", "Ti", "x0", "mu"])?;
    let key = SecretKey {
        m: parse_field(&map, "m")?,
        n: parse_field(&map, "n")?,
        rounds: parse_field(&map, "Ti")?,
        x0: parse_field(&map, "x0")?,
        mu: parse_field(&map, "mu")?,
    };
    key.validate()?;
    Ok(key)
}

/// `f64`'s `Display` is the shortest decimal that parses back to the same
/// value, so the document roundtrips exactly.
pub fn serialize_key(key: &SecretKey) -> String {
    format!(
        "m={}\nn={}\nTi={}\nx0={}\nmu={}\n",
        key.m, key.n, key.rounds, key.x0, key.mu
    )
}

fn parse_perm(map: &HashMap<&str, &str>, name: &str, len: usize) -> Result<Permutation> {
    let raw = required(map, name)?;
    let values = raw
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|e| Error::validation(name, format!("cannot parse {t:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != len {
        return Err(Error::validation(
            name,
            format!("has {} entries, expected {len}", values.len()),
        ));
    }
    Permutation::from_vec(values).map_err(|e| Error::validation(name, e.to_string()))
}

pub fn read_eqkey(text: &str) -> Result<EquivalentKey> {
    let map = entries(text, &["M", "N", "row_perm", "col_perm"])?;
    let height: usize = parse_field(&map, "M")?;
    let width: usize = parse_field(&map, "N")?;
    if height == 0 {
        return Err(Error::validation("M", "must be positive"));
    }
    let bit_cols = match width.checked_mul(8) {
        Some(w) if w > 0 => w,
        _ => return Err(Error::validation("N", format!("{width} is not a usable width"))),
    };
    let rows = parse_perm(&map, "row_perm", height)?;
    let cols = parse_perm(&map, "col_perm", bit_cols)?;
    EquivalentKey::new(height, width, rows, cols)
}

pub fn write_eqkey(key: &EquivalentKey) -> String {
    let join = |p: &Permutation| {
        let mut s = String::with_capacity(p.len() * 5);
        for (k, v) in p.as_slice().iter().enumerate() {
            if k > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{v}");
        }
        s
    };
    format!(
        "M={}\nN={}\nrow_perm={}\ncol_perm={}\n",
        key.height(),
        key.width(),
        join(key.row_perm()),
        join(key.col_perm())
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pgm_example() {
        let mut bytes = b"P5 2 2 255\n".to_vec();
        bytes.extend_from_slice(&[5, 255, 0, 7]);
        let img = read_pgm(&bytes).unwrap();
        assert_eq!((img.height(), img.width()), (2, 2));
        assert_eq!(img.pixels(), &[5, 255, 0, 7]);
    }

    #[test]
    fn pgm_comments_in_header() {
        let mut bytes = b"P5\n# made by hand\n3 # width\n1\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        assert_eq!(read_pgm(&bytes).unwrap().pixels(), &[1, 2, 3]);
    }

    #[test]
    fn pgm_errors() {
        let err = read_pgm(b"P2 2 2 255\n0000").unwrap_err();
        assert!(matches!(err, Error::Format { offset: 0, .. }));
        let err = read_pgm(b"P5 2 2 65535\n00000000").unwrap_err();
        assert!(matches!(err, Error::Format { offset: 7, .. }), "{err}");
        let err = read_pgm(b"P5 2 2 255\n\x01\x02\x03").unwrap_err();
        assert!(matches!(err, Error::Format { offset: 14, .. }), "{err}");
        assert!(read_pgm(b"P5 2").is_err());
        assert!(read_pgm(b"P5 0 2 255\n").is_err());
        assert!(read_pgm(b"P5 99999999999999999999999 2 255\n").is_err());
        assert!(read_pgm(b"P5 4294967296 4294967296 255\n").is_err());
        assert!(read_pgm(b"P5 1 1 255").is_err());
    }

    #[test]
    fn published_key_parses() {
        let key = parse_key("m=20\nn=51\nTi=1\nx0=0.2009\nmu=3.98").unwrap();
        assert_eq!(key, SecretKey::new(20, 51, 1, 0.2009, 3.98).unwrap());
        let reordered = parse_key("# key\nmu = 3.98\nx0=0.2009 # start\n\nTi=1\nn=51\nm=20\n").unwrap();
        assert_eq!(reordered, key);
    }

    #[test]
    fn key_errors_name_the_field() {
        let err = parse_key("m=20\nn=51\nTi=1\nx0=0.2009\nmu=4.0").unwrap_err();
        assert!(matches!(&err, Error::Validation { field, .. } if field == "mu"), "{err}");
        let err = parse_key("m=20\nn=51\nTi=1\nx0=0.2009").unwrap_err();
        assert!(matches!(&err, Error::Validation { field, .. } if field == "mu"), "{err}");
        let err = parse_key("m=20\nm=21\nn=51\nTi=1\nx0=0.2\nmu=3.9").unwrap_err();
        assert!(matches!(&err, Error::Validation { field, .. } if field == "m"), "{err}");
        let err = parse_key("m=-1\nn=51\nTi=1\nx0=0.2\nmu=3.9").unwrap_err();
        assert!(matches!(&err, Error::Validation { field, .. } if field == "m"), "{err}");
        let err = parse_key("m=1\nn=51\nTi=1\nx0=nan\nmu=3.9").unwrap_err();
        assert!(matches!(&err, Error::Validation { field, .. } if field == "x0"), "{err}");
        assert!(parse_key("m 1").is_err());
        assert!(parse_key("k=1").is_err());
    }

    #[test]
    fn eqkey_identity_roundtrip_and_errors() {
        let id = EquivalentKey::identity(3, 1).unwrap();
        assert_eq!(read_eqkey(&write_eqkey(&id)).unwrap(), id);

        let err = read_eqkey("M=2\nN=1\nrow_perm=1 1\ncol_perm=0 1 2 3 4 5 6 7").unwrap_err();
        assert!(matches!(&err, Error::Validation { field, .. } if field == "row_perm"), "{err}");
        let err = read_eqkey("M=3\nN=1\nrow_perm=1 0\ncol_perm=0 1 2 3 4 5 6 7").unwrap_err();
        assert!(matches!(&err, Error::Validation { field, .. } if field == "row_perm"), "{err}");
        let err = read_eqkey("M=2\nN=1\nrow_perm=1 0\ncol_perm=0 1 2 3").unwrap_err();
        assert!(matches!(&err, Error::Validation { field, .. } if field == "col_perm"), "{err}");
        assert!(read_eqkey("M=2\nN=0\nrow_perm=1 0\ncol_perm=").is_err());
        assert!(read_eqkey("M=1\nN=99999999999999999999\nrow_perm=0\ncol_perm=").is_err());
    }

    proptest! {
        #[test]
        fn pgm_roundtrip(h in 1usize..20, w in 1usize..20, seed in any::<u64>()) {
            let img = GrayImage::from_fn(h, w, |i, j| (seed >> ((i * w + j) % 57)) as u8 ^ (i * 7 + j) as u8).unwrap();
            prop_assert_eq!(read_pgm(&write_pgm(&img)).unwrap(), img);
        }

        #[test]
        fn key_roundtrip(m in 1usize..10_000, n in 1usize..10_000, t in 1usize..10,
                         x0 in 1e-12f64..0.999_999_999, mu in 3.569_945_673f64..3.999_999_999) {
            let key = SecretKey::new(m, n, t, x0, mu).unwrap();
            let back = parse_key(&serialize_key(&key)).unwrap();
            prop_assert_eq!(back.x0.to_bits(), key.x0.to_bits());
            prop_assert_eq!(back.mu.to_bits(), key.mu.to_bits());
            prop_assert_eq!(back, key);
        }
    }
}
