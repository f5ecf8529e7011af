//! Binary PGM (P5) images with 8- or 16-bit samples.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major, top row first.
    pub pixels: Vec<u16>,
}

impl Pgm {
    pub fn new(width: usize, height: usize, maxval: u16, pixels: Vec<u16>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::invalid(format!(
                "pixel buffer has {} entries, expected {width}x{height}",
                pixels.len()
            )));
        }
        if maxval == 0 {
            return Err(Error::invalid("PGM maxval must be positive"));
        }
        Ok(Pgm {
            width,
            height,
            maxval,
            pixels,
        })
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        write!(w, "P5\n{} {}\n{}\n", self.width, self.height, self.maxval)?;
        let mut bytes = Vec::with_capacity(self.pixels.len() * 2);
        for &p in &self.pixels {
            if self.maxval < 256 {
                bytes.push(p as u8);
            } else {
                bytes.extend_from_slice(&p.to_be_bytes());
            }
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read<R: BufRead>(r: &mut R) -> Result<Self> {
        let mut fields = Vec::new();
        while fields.len() < 4 {
            let mut tok = Vec::new();
            loop {
                let mut b = [0u8; 1];
                if r.read(&mut b)? == 0 {
                    return Err(Error::invalid("truncated PGM header"));
                }
                match b[0] {
                    b'#' if tok.is_empty() => {
                        let mut line = String::new();
                        r.read_line(&mut line)?;
                    }
                    c if c.is_ascii_whitespace() => {
                        if !tok.is_empty() {
                            break;
                        }
                    }
                    c => tok.push(c),
                }
            }
            fields.push(String::from_utf8_lossy(&tok).into_owned());
        }
        if fields[0] != "P5" {
            return Err(Error::invalid(format!("not a binary PGM (magic {})", fields[0])));
        }
        let parse = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| Error::invalid(format!("bad PGM header field '{s}'")))
        };
        let width = parse(&fields[1])?;
        let height = parse(&fields[2])?;
        let maxval = parse(&fields[3])?;
        if maxval == 0 || maxval > 65535 {
            return Err(Error::invalid(format!("bad PGM maxval {maxval}")));
        }
        let bpp = if maxval < 256 { 1 } else { 2 };
        let mut raw = vec![0u8; width * height * bpp];
        r.read_exact(&mut raw)?;
        let pixels = if bpp == 1 {
            raw.into_iter().map(u16::from).collect()
        } else {
            raw.chunks_exact(2)
                .map(|c| u16::from_be_bytes([c[0], c[1]]))
                .collect()
        };
        Pgm::new(width, height, maxval as u16, pixels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_16_bit() {
        let img = Pgm::new(3, 2, 65535, vec![0, 1, 300, 65535, 7, 42]).unwrap();
        let mut buf = Vec::new();
        img.write(&mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n3 2\n65535\n"));
        let back = Pgm::read(&mut buf.as_slice()).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn round_trip_8_bit_with_comment() {
        let mut buf = b"P5\n# a comment\n2 1\n255\n".to_vec();
        buf.extend_from_slice(&[0, 255]);
        let img = Pgm::read(&mut buf.as_slice()).unwrap();
        assert_eq!(img.pixels, vec![0, 255]);
        let mut out = Vec::new();
        img.write(&mut out).unwrap();
        assert_eq!(Pgm::read(&mut out.as_slice()).unwrap(), img);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Pgm::read(&mut b"P2\n1 1\n255\n0".as_slice()).is_err());
        assert!(Pgm::read(&mut b"P5\n2 2\n255\n\x00".as_slice()).is_err());
        assert!(Pgm::new(2, 2, 255, vec![0; 3]).is_err());
    }
}
