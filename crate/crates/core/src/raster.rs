//! Minimal owned RGB8 raster.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::geometry::BBox;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    /// Row-major interleaved RGB.
    data: Vec<u8>,
}

impl Raster {
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&rgb);
        }
        Self { width, height, data }
    }

    pub fn from_rgb(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        let expected = width as usize * height as usize * 3;
        if data.len() != expected {
            return Err(invalid(format!(
                "raster {width}x{height} needs {expected} bytes, got {}",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_gray(width: u32, height: u32, gray: &[u8]) -> Result<Self> {
        if gray.len() != width as usize * height as usize {
            return Err(invalid("gray buffer does not match dimensions"));
        }
        let data = gray.iter().flat_map(|&g| [g, g, g]).collect();
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn frame(&self) -> Result<BBox> {
        BBox::frame(self.width, self.height)
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let o = self.offset(x, y);
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let o = self.offset(x, y);
        self.data[o..o + 3].copy_from_slice(&rgb);
    }

    /// Copy of the pixels inside `bbox`.
    pub fn crop(&self, bbox: &BBox) -> Result<Raster> {
        if !bbox.fits_in(self.width, self.height) {
            return Err(invalid(format!(
                "box {bbox} outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = vec![0u8; bbox.area() as usize * 3];
        let row = bbox.width() as usize * 3;
        for (i, y) in (bbox.y0..bbox.y1).enumerate() {
            let src = self.offset(bbox.x0, y);
            data[i * row..(i + 1) * row].copy_from_slice(&self.data[src..src + row]);
        }
        Ok(Raster {
            width: bbox.width(),
            height: bbox.height(),
            data,
        })
    }
}
