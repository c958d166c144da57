//! Gray-labeled 8-PSK, AWGN and hard decisions.
//!
//! Point `i` sits at angle `2 pi i / 8` (no rotation offset) and carries the
//! label `i ^ (i >> 1)`, written MSB first as three bits:
//!
//! ```text
//! index  angle   label  bits
//!   0      0°      0    000
//!   1     45°      1    001
//!   2     90°      3    011
//!   3    135°      2    010
//!   4    180°      6    110
//!   5    225°      7    111
//!   6    270°      5    101
//!   7    315°      4    100
//! ```

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;

use crate::channel::complex_gaussian;
use crate::error::{Error, Result};
use crate::linalg::C64;

pub const BITS_PER_SYMBOL: usize = 3;
const ORDER: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: [C64; ORDER],
    labels: [u8; ORDER],
    index_of_label: [usize; ORDER],
}

/// Nearest constellation point to a soft estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub index: usize,
    pub label: u8,
    pub symbol: C64,
}

impl Decision {
    pub fn bits(&self) -> [bool; BITS_PER_SYMBOL] {
        label_bits(self.label)
    }
}

fn label_bits(label: u8) -> [bool; BITS_PER_SYMBOL] {
    [label & 4 != 0, label & 2 != 0, label & 1 != 0]
}

impl Default for Constellation {
    fn default() -> Self {
        Self::psk8()
    }
}

impl Constellation {
    pub fn psk8() -> Self {
        let mut points = [C64::new(0.0, 0.0); ORDER];
        let mut labels = [0u8; ORDER];
        let mut index_of_label = [0usize; ORDER];
        for i in 0..ORDER {
            points[i] = C64::from_polar(1.0, 2.0 * PI * i as f64 / ORDER as f64);
            labels[i] = (i ^ (i >> 1)) as u8;
            index_of_label[labels[i] as usize] = i;
        }
        Constellation { points, labels, index_of_label }
    }

    pub fn order(&self) -> usize {
        ORDER
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn label(&self, index: usize) -> u8 {
        self.labels[index]
    }

    pub fn point_for_label(&self, label: u8) -> C64 {
        self.points[self.index_of_label[label as usize]]
    }

    /// Maps each 3-bit group (MSB first) to its symbol.
    pub fn modulate(&self, bits: &[bool]) -> Result<Vec<C64>> {
        if bits.len() % BITS_PER_SYMBOL != 0 {
            return Err(Error::BitLength(bits.len()));
        }
        Ok(bits
            .chunks(BITS_PER_SYMBOL)
            .map(|b| self.point_for_label(((b[0] as u8) << 2) | ((b[1] as u8) << 1) | b[2] as u8))
            .collect())
    }

    /// Nearest point by angular sector. Exact sector boundaries resolve to the
    /// lower label; zero maps to label 0.
    pub fn hard_decision(&self, soft: C64) -> Result<Decision> {
        if !soft.re.is_finite() || !soft.im.is_finite() {
            return Err(Error::NonFinite(soft.to_string()));
        }
        let index = if soft == C64::new(0.0, 0.0) {
            self.index_of_label[0]
        } else {
            let sector = soft.arg().rem_euclid(2.0 * PI) / (2.0 * PI / ORDER as f64);
            let lower = sector.floor();
            let frac = sector - lower;
            let (lo, hi) = (lower as usize % ORDER, (lower as usize + 1) % ORDER);
            if frac < 0.5 {
                lo
            } else if frac > 0.5 || self.labels[hi] < self.labels[lo] {
                hi
            } else {
                lo
            }
        };
        Ok(Decision { index, label: self.labels[index], symbol: self.points[index] })
    }

    pub fn demodulate(&self, softs: &[C64]) -> Result<Vec<bool>> {
        let mut bits = Vec::with_capacity(softs.len() * BITS_PER_SYMBOL);
        for &s in softs {
            bits.extend(self.hard_decision(s)?.bits());
        }
        Ok(bits)
    }

    /// Tab-separated table `index angle_deg re im label bits`.
    pub fn table_text(&self) -> String {
        let mut s = String::from("index\tangle_deg\tre\tim\tlabel\tbits\n");
        for i in 0..ORDER {
            let p = self.points[i];
            let bits: String = label_bits(self.labels[i]).iter().map(|&b| if b { '1' } else { '0' }).collect();
            let _ = writeln!(
                s,
                "{i}\t{}\t{:.17e}\t{:.17e}\t{}\t{bits}",
                45 * i,
                p.re,
                p.im,
                self.labels[i]
            );
        }
        s
    }
}

/// Adds i.i.d. `CN(0, sigma2)` noise to every entry.
pub fn awgn<R: Rng + ?Sized>(clean: &[C64], sigma2: f64, rng: &mut R) -> Vec<C64> {
    if sigma2 == 0.0 {
        return clean.to_vec();
    }
    let s = sigma2.sqrt();
    clean.iter().map(|&c| c + complex_gaussian(rng) * s).collect()
}

pub fn random_bits<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<bool> {
    (0..n).map(|_| rng.random::<bool>()).collect()
}
