use serde::{Deserialize, Serialize};

use super::CocoError;

/// Run-length encoded binary mask in COCO's column-major order. Runs
/// alternate background/foreground and always start with background (a
/// leading zero-length run when the first pixel is set).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    /// `[height, width]`
    pub size: [u32; 2],
    pub counts: Vec<u32>,
}

/// Row-major binary bitmap.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitmap {
    pub width: u32,
    pub height: u32,
    pub data: Vec<bool>,
}

impl Bitmap {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height, data: vec![false; width as usize * height as usize] }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.data[y as usize * self.width as usize + x as usize] = v;
    }

    pub fn count_ones(&self) -> u64 {
        self.data.iter().filter(|b| **b).count() as u64
    }

    /// Tight `(x, y, w, h)` of the set pixels.
    pub fn bounds(&self) -> Option<[u32; 4]> {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0, 0);
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        (x0 != u32::MAX).then(|| [x0, y0, x1 - x0 + 1, y1 - y0 + 1])
    }
}

/// Accumulates runs, merging consecutive pushes of the same value.
#[derive(Debug, Default)]
pub(crate) struct RunBuilder {
    counts: Vec<u32>,
    current: bool,
    run: u32,
}

impl RunBuilder {
    #[inline]
    pub(crate) fn push(&mut self, value: bool, n: u32) {
        if n == 0 {
            return;
        }
        if value != self.current {
            self.counts.push(self.run);
            self.current = value;
            self.run = 0;
        }
        self.run += n;
    }

    pub(crate) fn finish(mut self, height: u32, width: u32) -> RleMask {
        if self.run > 0 || self.counts.is_empty() {
            self.counts.push(self.run);
        }
        RleMask { size: [height, width], counts: self.counts }
    }
}

pub fn rle_encode(mask: &Bitmap) -> RleMask {
    let mut b = RunBuilder::default();
    for x in 0..mask.width {
        for y in 0..mask.height {
            b.push(mask.get(x, y), 1);
        }
    }
    b.finish(mask.height, mask.width)
}

pub fn rle_decode(rle: &RleMask) -> Result<Bitmap, CocoError> {
    let [h, w] = rle.size;
    rle.check()?;
    let mut out = Bitmap::new(w, h);
    let mut pos: u64 = 0;
    for (i, &c) in rle.counts.iter().enumerate() {
        if i % 2 == 1 {
            for p in pos..pos + c as u64 {
                let (x, y) = ((p / h as u64) as u32, (p % h as u64) as u32);
                out.set(x, y, true);
            }
        }
        pos += c as u64;
    }
    Ok(out)
}

impl RleMask {
    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }

    pub(crate) fn check(&self) -> Result<(), CocoError> {
        let [h, w] = self.size;
        let total: u64 = self.counts.iter().map(|&c| c as u64).sum();
        if total != h as u64 * w as u64 {
            return Err(CocoError::Rle(format!("run lengths sum to {total}, expected {h}x{w} = {}", h as u64 * w as u64)));
        }
        Ok(())
    }

    /// Tight `(x, y, w, h)` bounds of the foreground, computed from the runs.
    pub fn bounds(&self) -> Option<[u32; 4]> {
        let h = self.size[0] as u64;
        let (mut x0, mut y0, mut x1, mut y1) = (u64::MAX, u64::MAX, 0u64, 0u64);
        let mut pos = 0u64;
        for (i, &c) in self.counts.iter().enumerate() {
            let c = c as u64;
            if i % 2 == 1 && c > 0 {
                let (first, last) = (pos, pos + c - 1);
                let (fx, fy) = (first / h, first % h);
                let (lx, ly) = (last / h, last % h);
                x0 = x0.min(fx);
                x1 = x1.max(lx);
                if fx == lx {
                    y0 = y0.min(fy);
                    y1 = y1.max(ly);
                } else {
                    // A run crossing a column boundary covers the last row of
                    // one column and the first row of the next.
                    y0 = 0;
                    y1 = h - 1;
                }
            }
            pos += c;
        }
        (x0 != u64::MAX).then(|| [x0 as u32, y0 as u32, (x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32])
    }

    /// COCO's compact string form of the counts.
    pub fn to_compressed(&self) -> String {
        let mut s = String::new();
        for (i, &c) in self.counts.iter().enumerate() {
            let mut x = c as i64;
            if i > 2 {
                x -= self.counts[i - 2] as i64;
            }
            loop {
                let mut ch = (x & 0x1f) as u8;
                x >>= 5;
                let more = if ch & 0x10 != 0 { x != -1 } else { x != 0 };
                if more {
                    ch |= 0x20;
                }
                s.push((ch + 48) as char);
                if !more {
                    break;
                }
            }
        }
        s
    }

    /// Parses COCO's compact string counts.
    pub fn from_compressed(size: [u32; 2], text: &str) -> Result<Self, CocoError> {
        let bytes = text.as_bytes();
        let mut counts: Vec<u32> = Vec::new();
        let mut p = 0;
        while p < bytes.len() {
            let mut x: i64 = 0;
            let mut k = 0;
            loop {
                let Some(&b) = bytes.get(p) else {
                    return Err(CocoError::Rle("truncated compressed counts".into()));
                };
                if !(48..48 + 64).contains(&b) || k > 12 {
                    return Err(CocoError::Rle(format!("invalid compressed count byte {b:#x}")));
                }
                let c = (b - 48) as i64;
                x |= (c & 0x1f) << (5 * k);
                p += 1;
                k += 1;
                if c & 0x20 == 0 {
                    if c & 0x10 != 0 {
                        x |= -1i64 << (5 * k);
                    }
                    break;
                }
            }
            let m = counts.len();
            if m > 2 {
                x += counts[m - 2] as i64;
            }
            let v = u32::try_from(x).map_err(|_| CocoError::Rle(format!("run length {x} out of range")))?;
            counts.push(v);
        }
        let rle = Self { size, counts };
        rle.check()?;
        Ok(rle)
    }
}
