//! Binary masks and the COCO run-length encoding.
//!
//! COCO RLE walks pixels in column-major order and alternates run lengths
//! starting with a run of zeros. The compact string form stores each count
//! (delta-coded against the count two positions back after the third) as
//! 5-bit groups offset by 48.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{BBox, GeometryError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

/// COCO-style compressed RLE: `{"size": [height, width], "counts": "..."}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rle {
    pub size: [usize; 2],
    pub counts: String,
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    /// Pixels with integer coordinates inside `b` (pixel centers `u + 0.5`).
    pub fn from_bbox(width: usize, height: usize, b: &BBox) -> Self {
        let mut m = Mask::empty(width, height);
        for v in 0..height {
            for u in 0..width {
                let (x, y) = (u as f64 + 0.5, v as f64 + 0.5);
                if x >= b.x0 && x < b.x1 && y >= b.y0 && y < b.y1 {
                    m.set(u, v, true);
                }
            }
        }
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        u < self.width && v < self.height && self.bits[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, on: bool) {
        if u < self.width && v < self.height {
            self.bits[v * self.width + u] = on;
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Set pixels as `(u, v)`, row-major.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    /// 4-neighbour erosion; pixels on the image border are removed.
    pub fn eroded(&self, iterations: usize) -> Mask {
        let mut cur = self.clone();
        for _ in 0..iterations {
            let mut next = Mask::empty(self.width, self.height);
            for (u, v) in cur.pixels() {
                let keep = u > 0
                    && v > 0
                    && cur.get(u - 1, v)
                    && cur.get(u + 1, v)
                    && cur.get(u, v - 1)
                    && cur.get(u, v + 1);
                next.set(u, v, keep);
            }
            cur = next;
        }
        cur
    }

    fn runs(&self) -> Vec<u64> {
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u64;
        for u in 0..self.width {
            for v in 0..self.height {
                let bit = self.bits[v * self.width + u];
                if bit != current {
                    counts.push(run);
                    run = 0;
                    current = bit;
                }
                run += 1;
            }
        }
        counts.push(run);
        counts
    }

    pub fn to_rle(&self) -> Rle {
        Rle {
            size: [self.height, self.width],
            counts: encode_counts(&self.runs()),
        }
    }

    pub fn from_rle(rle: &Rle) -> Result<Mask, GeometryError> {
        let [height, width] = rle.size;
        let counts = decode_counts(&rle.counts).ok_or(GeometryError::InvalidRle)?;
        let total = width * height;
        let mut m = Mask::empty(width, height);
        let mut idx = 0usize;
        let mut on = false;
        for c in counts {
            let c = usize::try_from(c).map_err(|_| GeometryError::InvalidRle)?;
            if idx + c > total {
                return Err(GeometryError::InvalidRle);
            }
            if on {
                for k in idx..idx + c {
                    // column-major index → (u, v)
                    let (u, v) = (k / height, k % height);
                    m.bits[v * width + u] = true;
                }
            }
            idx += c;
            on = !on;
        }
        if idx != total {
            return Err(GeometryError::InvalidRle);
        }
        Ok(m)
    }
}

fn encode_counts(counts: &[u64]) -> String {
    let mut s = String::new();
    for (i, &c) in counts.iter().enumerate() {
        let mut x = c as i64;
        if i > 2 {
            x -= counts[i - 2] as i64;
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

fn decode_counts(s: &str) -> Option<Vec<i64>> {
    let bytes = s.as_bytes();
    let mut counts: Vec<i64> = Vec::new();
    let mut p = 0;
    while p < bytes.len() {
        let mut x: i64 = 0;
        let mut k = 0;
        loop {
            let c = i64::from(bytes.get(p)?.checked_sub(48)?);
            if k >= 12 {
                return None;
            }
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
        if counts.len() > 2 {
            x += counts[counts.len() - 2];
        }
        if x < 0 {
            return None;
        }
        counts.push(x);
    }
    Some(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_coco_string() {
        // 3x3 mask with the centre pixel set: runs [4, 1, 4].
        let mut m = Mask::empty(3, 3);
        m.set(1, 1, true);
        let rle = m.to_rle();
        assert_eq!(rle.size, [3, 3]);
        assert_eq!(rle.counts, "414");
        assert_eq!(Mask::from_rle(&rle).unwrap(), m);
    }

    #[test]
    fn column_major_order() {
        // 2 wide x 3 high, only (u=1, v=0) set: column 0 is 3 zeros, then 1 one, then 2 zeros.
        let mut m = Mask::empty(2, 3);
        m.set(1, 0, true);
        assert_eq!(m.runs(), [3, 1, 2]);
    }

    #[test]
    fn rejects_bad_rle() {
        let bad = Rle {
            size: [2, 2],
            counts: "9".into(),
        };
        assert_eq!(Mask::from_rle(&bad), Err(GeometryError::InvalidRle));
        let short = Rle {
            size: [2, 2],
            counts: "1".into(),
        };
        assert!(Mask::from_rle(&short).is_err());
    }

    #[test]
    fn erosion() {
        let m = Mask::from_bbox(10, 10, &BBox::new(2.0, 2.0, 7.0, 7.0).unwrap());
        assert_eq!(m.count(), 25);
        assert_eq!(m.eroded(1).count(), 9);
        assert_eq!(m.eroded(0), m);
    }

    proptest! {
        #[test]
        fn rle_round_trip(w in 1usize..24, h in 1usize..24, seed in proptest::collection::vec(any::<bool>(), 576)) {
            let mut m = Mask::empty(w, h);
            for v in 0..h {
                for u in 0..w {
                    m.set(u, v, seed[v * 24 + u]);
                }
            }
            prop_assert_eq!(Mask::from_rle(&m.to_rle()).unwrap(), m);
        }
    }
}
