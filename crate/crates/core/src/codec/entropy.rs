//! Binarization and context modelling of quantized 8×8 blocks.
//!
//! Per block: DC level as a difference to the previous block's DC, an
//! "any AC" flag, the zig-zag position of the last non-zero AC level (6-bit
//! binary tree), then significance/magnitude/sign for each AC position up to
//! the last one.

use super::range::{BitModel, RangeDecoder, RangeEncoder};
use super::transform::{zigzag, AREA};
use crate::error::{Error, Result};

const CLASSES: usize = 7;
const DC_CLASS: usize = 6;
const EG_PREFIX_CTX: usize = 16;
const MAX_EG_PREFIX: u32 = 24;

fn ac_class(scan_pos: usize) -> usize {
    match scan_pos {
        0 => DC_CLASS,
        1..=2 => 0,
        3..=5 => 1,
        6..=9 => 2,
        10..=14 => 3,
        15..=27 => 4,
        _ => 5,
    }
}

#[derive(Clone)]
pub struct Contexts {
    sig: [BitModel; CLASSES],
    gt1: [BitModel; CLASSES],
    gt2: [BitModel; CLASSES],
    eg: [[BitModel; EG_PREFIX_CTX]; CLASSES],
    has_ac: [BitModel; 2],
    last: [BitModel; 64],
    prev_dc: i32,
    prev_had_ac: bool,
}

impl Default for Contexts {
    fn default() -> Self {
        Self {
            sig: Default::default(),
            gt1: Default::default(),
            gt2: Default::default(),
            eg: [[BitModel::default(); EG_PREFIX_CTX]; CLASSES],
            has_ac: Default::default(),
            last: [BitModel::default(); 64],
            prev_dc: 0,
            prev_had_ac: false,
        }
    }
}

impl Contexts {
    fn put_eg0(&mut self, enc: &mut RangeEncoder, class: usize, value: u32) {
        let v = value + 1;
        let k = 31 - v.leading_zeros();
        for i in 0..k {
            enc.encode(
                &mut self.eg[class][(i as usize).min(EG_PREFIX_CTX - 1)],
                true,
            );
        }
        enc.encode(
            &mut self.eg[class][(k as usize).min(EG_PREFIX_CTX - 1)],
            false,
        );
        enc.encode_direct(v - (1 << k), k);
    }

    fn get_eg0(&mut self, dec: &mut RangeDecoder, class: usize) -> Result<u32> {
        let mut k = 0;
        while dec.decode(&mut self.eg[class][(k as usize).min(EG_PREFIX_CTX - 1)]) {
            k += 1;
            if k > MAX_EG_PREFIX {
                return Err(Error::Decode("level prefix too long".into()));
            }
        }
        Ok((1 << k) + dec.decode_direct(k) - 1)
    }

    fn put_nonzero(&mut self, enc: &mut RangeEncoder, class: usize, level: i32) {
        let mag = level.unsigned_abs();
        enc.encode_direct((level < 0) as u32, 1);
        enc.encode(&mut self.gt1[class], mag > 1);
        if mag > 1 {
            enc.encode(&mut self.gt2[class], mag > 2);
            if mag > 2 {
                self.put_eg0(enc, class, mag - 3);
            }
        }
    }

    fn get_nonzero(&mut self, dec: &mut RangeDecoder, class: usize) -> Result<i32> {
        let negative = dec.decode_direct(1) == 1;
        let mut mag = 1;
        if dec.decode(&mut self.gt1[class]) {
            mag = 2;
            if dec.decode(&mut self.gt2[class]) {
                mag = 3 + self.get_eg0(dec, class)?;
            }
        }
        let mag = mag as i32;
        Ok(if negative { -mag } else { mag })
    }

    fn put_level(&mut self, enc: &mut RangeEncoder, class: usize, level: i32) {
        enc.encode(&mut self.sig[class], level != 0);
        if level != 0 {
            self.put_nonzero(enc, class, level);
        }
    }

    fn get_level(&mut self, dec: &mut RangeDecoder, class: usize) -> Result<i32> {
        if dec.decode(&mut self.sig[class]) {
            self.get_nonzero(dec, class)
        } else {
            Ok(0)
        }
    }

    /// Codes one block of levels given in raster order.
    pub fn put_block(&mut self, enc: &mut RangeEncoder, levels: &[i32; AREA]) {
        let scan = zigzag();
        let dc = levels[0];
        self.put_level(enc, DC_CLASS, dc - self.prev_dc);
        self.prev_dc = dc;

        let last = (1..AREA).rev().find(|&i| levels[scan[i]] != 0);
        let ctx = self.prev_had_ac as usize;
        enc.encode(&mut self.has_ac[ctx], last.is_some());
        self.prev_had_ac = last.is_some();
        let Some(last) = last else { return };

        // binary tree over last − 1 in [0, 62]
        let mut node = 1;
        for i in (0..6).rev() {
            let bit = ((last - 1) >> i) & 1 == 1;
            enc.encode(&mut self.last[node], bit);
            node = (node << 1) | bit as usize;
        }
        for pos in 1..last {
            self.put_level(enc, ac_class(pos), levels[scan[pos]]);
        }
        self.put_nonzero(enc, ac_class(last), levels[scan[last]]);
    }

    pub fn get_block(&mut self, dec: &mut RangeDecoder) -> Result<[i32; AREA]> {
        let scan = zigzag();
        let mut levels = [0; AREA];
        let dc = self
            .prev_dc
            .checked_add(self.get_level(dec, DC_CLASS)?)
            .ok_or_else(|| Error::Decode("DC level overflow".into()))?;
        levels[0] = dc;
        self.prev_dc = dc;

        let ctx = self.prev_had_ac as usize;
        let has_ac = dec.decode(&mut self.has_ac[ctx]);
        self.prev_had_ac = has_ac;
        if !has_ac {
            return Ok(levels);
        }
        let mut node = 1;
        for _ in 0..6 {
            let bit = dec.decode(&mut self.last[node]);
            node = (node << 1) | bit as usize;
        }
        let last = node - 64 + 1;
        if last >= AREA {
            return Err(Error::Decode(format!("last position {last} out of range")));
        }
        for pos in 1..last {
            levels[scan[pos]] = self.get_level(dec, ac_class(pos))?;
        }
        levels[scan[last]] = self.get_nonzero(dec, ac_class(last))?;
        Ok(levels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_roundtrip() {
        let mut blocks = Vec::new();
        for seed in 0..40i32 {
            let mut b = [0i32; AREA];
            for (i, v) in b.iter_mut().enumerate() {
                let x = (seed * 31 + i as i32 * 17) % 23;
                *v = if i as i32 % (seed % 7 + 1) == 0 {
                    x - 11
                } else {
                    0
                };
            }
            if seed % 5 == 0 {
                b = [0; AREA];
                b[0] = 4000 - seed * 300;
            }
            if seed == 3 {
                b[63] = -70_000;
            }
            blocks.push(b);
        }
        let mut ctx = Contexts::default();
        let mut enc = RangeEncoder::new();
        for b in &blocks {
            ctx.put_block(&mut enc, b);
        }
        let bytes = enc.finish();
        let mut ctx = Contexts::default();
        let mut dec = RangeDecoder::new(&bytes).unwrap();
        for b in &blocks {
            assert_eq!(&ctx.get_block(&mut dec).unwrap(), b);
        }
        dec.check().unwrap();
    }
}
