use std::io::Write;
use std::path::Path;

use super::CameraIntrinsics;
use crate::geometry::{Point3, PointCloud};
use crate::{Error, Result};

/// Row-major raw depth raster; zero marks a missing measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u16>,
}

impl DepthImage {
    pub fn zeros(width: usize, height: usize) -> Self {
        DepthImage {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn get(&self, u: usize, v: usize) -> u16 {
        self.data[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, value: u16) {
        self.data[v * self.width + u] = value;
    }

    /// `(u, v)` of every non-zero pixel, in the order [`back_project`] emits
    /// points.
    pub fn valid_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderReader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format("PGM header truncated".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| Error::Format("PGM header is not ASCII".into()))
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::Format(format!("PGM {what} '{tok}' is not a number")))
    }
}

pub fn parse_pgm16(bytes: &[u8]) -> Result<DepthImage> {
    let mut header = HeaderReader { bytes, pos: 0 };
    let magic = header.token()?;
    if magic != "P5" {
        return Err(Error::Format(format!("PGM magic '{magic}', expected 'P5'")));
    }
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval = header.number("maxval")?;
    if maxval != 65535 {
        return Err(Error::Format(format!(
            "PGM maxval {maxval}, expected 65535 (16-bit)"
        )));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = header.pos + 1;
    let expected = width * height * 2;
    if bytes.len() < start + expected {
        return Err(Error::Format(format!(
            "PGM raster truncated: {} bytes for {width}x{height}",
            bytes.len().saturating_sub(start)
        )));
    }
    let data = bytes[start..start + expected]
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    Ok(DepthImage {
        width,
        height,
        data,
    })
}

pub fn read_pgm16(path: impl AsRef<Path>) -> Result<DepthImage> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm16(&bytes)
}

pub fn write_pgm16(path: impl AsRef<Path>, image: &DepthImage) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(32 + image.data.len() * 2);
    write!(buf, "P5\n{} {}\n65535\n", image.width, image.height).expect("in-memory write");
    for d in &image.data {
        buf.extend_from_slice(&d.to_be_bytes());
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Camera-frame cloud of all valid pixels, row-major, with the raster shape
/// recorded as the organized shape.
pub fn back_project(image: &DepthImage, intrinsics: &CameraIntrinsics) -> Result<PointCloud> {
    if image.width != intrinsics.width || image.height != intrinsics.height {
        return Err(Error::Format(format!(
            "depth raster is {}x{}, intrinsics expect {}x{}",
            image.width, image.height, intrinsics.width, intrinsics.height
        )));
    }
    let points: Vec<Point3> = image
        .valid_pixels()
        .map(|(u, v)| {
            let z = f64::from(image.get(u, v)) * intrinsics.depth_scale;
            intrinsics.unproject(u as f64, v as f64, z)
        })
        .collect();
    PointCloud::new(points)?.with_organized_shape(image.width, image.height)
}

pub fn load_depth_frame(path: impl AsRef<Path>, intrinsics: &CameraIntrinsics) -> Result<PointCloud> {
    back_project(&read_pgm16(path)?, intrinsics)
}
