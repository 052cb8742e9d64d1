use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::{LatticeWindow, Site};
use crate::solver::FreeRegion;

/// A pinned set `A ⊆ W`, as one bit per window site.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PinConfiguration {
    window: LatticeWindow,
    bits: Vec<bool>,
}

impl PinConfiguration {
    pub fn empty(window: LatticeWindow) -> Self {
        let n = window.len();
        PinConfiguration {
            window,
            bits: vec![false; n],
        }
    }

    pub fn full(window: LatticeWindow) -> Self {
        let n = window.len();
        PinConfiguration {
            window,
            bits: vec![true; n],
        }
    }

    pub fn from_mask(window: LatticeWindow, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != window.len() {
            return Err(Error::InvalidArgument(format!(
                "mask has {} entries for a window of {} sites",
                bits.len(),
                window.len()
            )));
        }
        Ok(PinConfiguration { window, bits })
    }

    pub fn from_sites<'a>(window: LatticeWindow, sites: impl IntoIterator<Item = &'a Site>) -> Result<Self> {
        let mut c = Self::empty(window);
        for s in sites {
            let i = c
                .window
                .index_of(s)
                .ok_or_else(|| Error::InvalidArgument(format!("{s} is outside the window")))?;
            c.bits[i] = true;
        }
        Ok(c)
    }

    /// Independent pins with probability `p`, one uniform per site in index
    /// order, so equal RNG states couple different `p` monotonically.
    pub fn bernoulli<R: Rng + ?Sized>(window: LatticeWindow, p: f64, rng: &mut R) -> Self {
        let bits = (0..window.len()).map(|_| rng.random::<f64>() < p).collect();
        PinConfiguration { window, bits }
    }

    /// Bit `i` of `mask` pins window site `i`; windows of at most 64 sites.
    pub fn from_bits_u64(window: LatticeWindow, mask: u64) -> Result<Self> {
        if window.len() > 64 {
            return Err(Error::SizeLimit {
                what: "window for a 64-bit mask",
                size: window.len(),
                limit: 64,
            });
        }
        let bits = (0..window.len()).map(|i| mask >> i & 1 == 1).collect();
        Ok(PinConfiguration { window, bits })
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn mask(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_pinned(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn contains(&self, x: &Site) -> bool {
        self.window.index_of(x).is_some_and(|i| self.bits[i])
    }

    pub fn set(&mut self, idx: usize, pinned: bool) {
        self.bits[idx] = pinned;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.bits.len())
            .filter(|&i| self.bits[i])
            .map(|i| self.window.site(i))
    }

    /// `W \ A` as a free region.
    pub fn free_region(&self) -> FreeRegion {
        FreeRegion::from_mask(self.window.clone(), self.bits.clone()).expect("mask length matches")
    }

    pub fn is_subset_of(&self, other: &PinConfiguration) -> bool {
        self.window == other.window && self.bits.iter().zip(&other.bits).all(|(a, b)| !a || *b)
    }

    /// Lowercase hex, two digits per byte; bit `i` is bit `i % 8` of byte `i / 8`.
    pub fn to_hex(&self) -> String {
        let mut out = String::with_capacity(self.bits.len().div_ceil(8) * 2);
        for chunk in self.bits.chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |b, (k, &on)| b | (u8::from(on) << k));
            write!(out, "{byte:02x}").expect("writing to a string");
        }
        out
    }

    pub fn from_hex(window: LatticeWindow, hex: &str) -> Result<Self> {
        let n = window.len();
        if hex.len() != n.div_ceil(8) * 2 {
            return Err(Error::Parse(format!(
                "expected {} hex digits for {n} sites, found {}",
                n.div_ceil(8) * 2,
                hex.len()
            )));
        }
        let mut bits = vec![false; n];
        for (k, pair) in hex.as_bytes().chunks(2).enumerate() {
            let s = std::str::from_utf8(pair).map_err(|e| Error::Parse(e.to_string()))?;
            let byte = u8::from_str_radix(s, 16).map_err(|e| Error::Parse(format!("{s:?}: {e}")))?;
            for b in 0..8 {
                let i = 8 * k + b;
                let on = byte >> b & 1 == 1;
                if i < n {
                    bits[i] = on;
                } else if on {
                    return Err(Error::Parse("padding bits must be zero".into()));
                }
            }
        }
        Ok(PinConfiguration { window, bits })
    }

    /// The record line `seed sweep bitset-hex`.
    pub fn to_record(&self, seed: u64, sweep: u64) -> String {
        format!("{seed} {sweep} {}", self.to_hex())
    }

    pub fn from_record(window: LatticeWindow, line: &str) -> Result<(u64, u64, Self)> {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::Parse(format!("expected `seed sweep hex`, found {line:?}")));
        }
        let seed = f[0].parse().map_err(|_| Error::Parse(format!("bad seed {:?}", f[0])))?;
        let sweep = f[1].parse().map_err(|_| Error::Parse(format!("bad sweep {:?}", f[1])))?;
        Ok((seed, sweep, Self::from_hex(window, f[2])?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hex_layout() {
        let w = LatticeWindow::from_extents(&[(0, 9)]).unwrap();
        let c = PinConfiguration::from_bits_u64(w.clone(), 0b10_0000_0011).unwrap();
        assert_eq!(c.to_hex(), "0302");
        assert_eq!(c.to_record(7, 12), "7 12 0302");
        let (s, k, back) = PinConfiguration::from_record(w.clone(), "7 12 0302").unwrap();
        assert_eq!((s, k), (7, 12));
        assert_eq!(back, c);
        assert!(PinConfiguration::from_hex(w.clone(), "0306").is_err());
        assert!(PinConfiguration::from_hex(w, "03").is_err());
    }

    proptest! {
        #[test]
        fn hex_round_trips(bits in prop::collection::vec(any::<bool>(), 1..70)) {
            let w = LatticeWindow::from_extents(&[(0, bits.len() as i64 - 1)]).unwrap();
            let c = PinConfiguration::from_mask(w.clone(), bits).unwrap();
            prop_assert_eq!(PinConfiguration::from_hex(w, &c.to_hex()).unwrap(), c);
        }
    }
}
