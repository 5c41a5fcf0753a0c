//! Arithmetic in GF(2^8) with reduction polynomial x^8 + x^4 + x^3 + x + 1.
//!
//! One field element is one byte. Multiplication and inversion go through
//! log/antilog tables generated from the primitive element `0x03` the first
//! time they are needed; the generator's order is checked during
//! construction.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Sub, SubAssign};
use std::sync::LazyLock;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Low byte of the reduction polynomial (the x^8 term is implicit).
pub const REDUCTION_POLY: u8 = 0x1B;

/// Generator used to build the log/antilog tables.
pub const GENERATOR: u8 = 0x03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("no inverse of zero")]
    ZeroInverse,
}

/// An element of GF(256).
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
#[repr(transparent)]
pub struct Gf256(pub u8);

impl Gf256 {
    pub const ZERO: Gf256 = Gf256(0);
    pub const ONE: Gf256 = Gf256(1);

    #[inline]
    pub const fn new(value: u8) -> Self {
        Gf256(value)
    }

    #[inline]
    pub const fn value(self) -> u8 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplicative inverse.
    pub fn inv(self) -> Result<Gf256, FieldError> {
        if self.0 == 0 {
            return Err(FieldError::ZeroInverse);
        }
        let t = tables();
        let log = t.log[self.0 as usize] as usize;
        Ok(Gf256(t.exp[(255 - log) % 255]))
    }

    /// `self^exp` by table lookup.
    pub fn pow(self, exp: u32) -> Gf256 {
        if exp == 0 {
            return Gf256::ONE;
        }
        if self.0 == 0 {
            return Gf256::ZERO;
        }
        let t = tables();
        let log = t.log[self.0 as usize] as u64;
        Gf256(t.exp[((log * exp as u64) % 255) as usize])
    }

    /// Uniform draw over the 255 nonzero elements.
    pub fn random_nonzero<R: Rng + ?Sized>(rng: &mut R) -> Gf256 {
        Gf256(rng.gen_range(1..=255u8))
    }

    /// Uniform draw over all 256 elements.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Gf256 {
        Gf256(rng.gen())
    }
}

impl fmt::Debug for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl fmt::Display for Gf256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl From<u8> for Gf256 {
    fn from(value: u8) -> Self {
        Gf256(value)
    }
}

impl From<Gf256> for u8 {
    fn from(value: Gf256) -> Self {
        value.0
    }
}

/// Field sum; the characteristic is 2, so this is XOR.
#[inline]
pub fn add(a: Gf256, b: Gf256) -> Gf256 {
    Gf256(a.0 ^ b.0)
}

#[inline]
pub fn mul(a: Gf256, b: Gf256) -> Gf256 {
    if a.0 == 0 || b.0 == 0 {
        return Gf256::ZERO;
    }
    let t = tables();
    let sum = t.log[a.0 as usize] as usize + t.log[b.0 as usize] as usize;
    Gf256(t.exp[sum])
}

#[inline]
pub fn inv(a: Gf256) -> Result<Gf256, FieldError> {
    a.inv()
}

pub fn random_nonzero<R: Rng + ?Sized>(rng: &mut R) -> Gf256 {
    Gf256::random_nonzero(rng)
}

impl Add for Gf256 {
    type Output = Gf256;
    #[inline]
    fn add(self, rhs: Gf256) -> Gf256 {
        add(self, rhs)
    }
}

impl AddAssign for Gf256 {
    #[inline]
    fn add_assign(&mut self, rhs: Gf256) {
        *self = add(*self, rhs);
    }
}

impl Sub for Gf256 {
    type Output = Gf256;
    #[inline]
    fn sub(self, rhs: Gf256) -> Gf256 {
        add(self, rhs)
    }
}

impl SubAssign for Gf256 {
    #[inline]
    fn sub_assign(&mut self, rhs: Gf256) {
        *self = add(*self, rhs);
    }
}

impl Mul for Gf256 {
    type Output = Gf256;
    #[inline]
    fn mul(self, rhs: Gf256) -> Gf256 {
        mul(self, rhs)
    }
}

impl MulAssign for Gf256 {
    #[inline]
    fn mul_assign(&mut self, rhs: Gf256) {
        *self = mul(*self, rhs);
    }
}

/// `dst[i] += coeff * src[i]` over the whole slice.
pub fn axpy(dst: &mut [Gf256], coeff: Gf256, src: &[Gf256]) {
    debug_assert_eq!(dst.len(), src.len());
    if coeff.is_zero() {
        return;
    }
    if coeff == Gf256::ONE {
        for (d, s) in dst.iter_mut().zip(src) {
            d.0 ^= s.0;
        }
        return;
    }
    let t = tables();
    let lc = t.log[coeff.0 as usize] as usize;
    for (d, s) in dst.iter_mut().zip(src) {
        if s.0 != 0 {
            d.0 ^= t.exp[lc + t.log[s.0 as usize] as usize];
        }
    }
}

/// `row[i] *= coeff` over the whole slice.
pub fn scale(row: &mut [Gf256], coeff: Gf256) {
    if coeff == Gf256::ONE {
        return;
    }
    for x in row.iter_mut() {
        *x = mul(*x, coeff);
    }
}

struct Tables {
    // exp is doubled so that exp[log a + log b] needs no reduction.
    exp: [u8; 512],
    log: [u8; 256],
}

static TABLES: LazyLock<Tables> = LazyLock::new(build_tables);

#[inline]
fn tables() -> &'static Tables {
    &TABLES
}

fn xtime(a: u8) -> u8 {
    let shifted = a << 1;
    if a & 0x80 != 0 {
        shifted ^ REDUCTION_POLY
    } else {
        shifted
    }
}

/// Carry-less multiply by the generator: 0x03 * a = 0x02 * a + a.
fn mul_generator(a: u8) -> u8 {
    xtime(a) ^ a
}

fn build_tables() -> Tables {
    let mut exp = [0u8; 512];
    let mut log = [0u8; 256];
    let mut x = 1u8;
    for (i, slot) in exp.iter_mut().take(255).enumerate() {
        *slot = x;
        log[x as usize] = i as u8;
        x = mul_generator(x);
        assert!(
            x != 1 || i == 254,
            "generator {GENERATOR:#04x} has order {} instead of 255",
            i + 1
        );
    }
    assert_eq!(x, 1, "generator did not cycle back to one");
    for i in 255..512 {
        exp[i] = exp[i - 255];
    }
    Tables { exp, log }
}
