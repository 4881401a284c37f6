//! Arithmetic in GF(2^m) for 1 <= m <= 16.
//!
//! Elements are stored as `u16` bit-vectors of polynomial coefficients.
//! Addition is XOR and needs no field context; multiplication goes through
//! log/antilog tables built once per [`Field`] and shared behind an `Arc`.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};

/// A single field symbol.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct Gf(pub u16);

impl Gf {
    pub const ZERO: Gf = Gf(0);
    pub const ONE: Gf = Gf(1);

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl Add for Gf {
    type Output = Gf;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Gf) -> Gf {
        Gf(self.0 ^ rhs.0)
    }
}

impl Sub for Gf {
    type Output = Gf;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn sub(self, rhs: Gf) -> Gf {
        Gf(self.0 ^ rhs.0)
    }
}

impl AddAssign for Gf {
    #[inline]
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: Gf) {
        self.0 ^= rhs.0;
    }
}

impl fmt::Display for Gf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

/// Bit width and reduction polynomial of a binary extension field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    pub m: u32,
    pub reduction_poly: u32,
}

impl FieldSpec {
    /// GF(2^8) with the AES polynomial x^8 + x^4 + x^3 + x + 1.
    pub const DEFAULT: FieldSpec = FieldSpec {
        m: 8,
        reduction_poly: 0x11B,
    };

    /// A standard irreducible polynomial for each supported width.
    pub fn with_bits(m: u32) -> Result<FieldSpec> {
        let reduction_poly = match m {
            1 => 0x3,
            2 => 0x7,
            3 => 0xB,
            4 => 0x13,
            5 => 0x25,
            6 => 0x43,
            7 => 0x89,
            8 => 0x11B,
            9 => 0x211,
            10 => 0x409,
            11 => 0x805,
            12 => 0x1053,
            13 => 0x201B,
            14 => 0x4443,
            15 => 0x8003,
            16 => 0x1100B,
            _ => {
                return Err(Error::InvalidField(format!(
                    "unsupported bit width m = {m}"
                )))
            }
        };
        Ok(FieldSpec { m, reduction_poly })
    }

    pub fn order(&self) -> usize {
        1usize << self.m
    }
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::DEFAULT
    }
}

/// Carry-less product of two polynomials over GF(2).
fn clmul(a: u32, b: u32) -> u32 {
    let mut acc = 0u32;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        a <<= 1;
        b >>= 1;
    }
    acc
}

fn degree(p: u32) -> i32 {
    31 - p.leading_zeros() as i32
}

fn poly_mod(mut a: u32, p: u32) -> u32 {
    let dp = degree(p);
    while a != 0 && degree(a) >= dp {
        a ^= p << (degree(a) - dp);
    }
    a
}

/// Trial division by every polynomial of degree 1..=deg/2.
pub fn is_irreducible(poly: u32) -> bool {
    let d = degree(poly);
    if d < 1 {
        return false;
    }
    for cand in 2u32..(1u32 << (d / 2 + 1)) {
        if degree(cand) >= 1 && degree(cand) <= d / 2 && poly_mod(poly, cand) == 0 {
            return false;
        }
    }
    true
}

#[derive(Debug)]
struct Tables {
    spec: FieldSpec,
    order: usize,
    exp: Vec<u16>,
    log: Vec<u16>,
}

/// Shared handle to the multiplication tables of one field.
#[derive(Clone)]
pub struct Field(Arc<Tables>);

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GF(2^{}) mod {:#x}",
            self.0.spec.m, self.0.spec.reduction_poly
        )
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

impl Eq for Field {}

impl Field {
    pub fn new(spec: FieldSpec) -> Result<Field> {
        if spec.m == 0 || spec.m > 16 {
            return Err(Error::InvalidField(format!(
                "bit width {} not in 1..=16",
                spec.m
            )));
        }
        if degree(spec.reduction_poly) != spec.m as i32 {
            return Err(Error::InvalidField(format!(
                "polynomial {:#x} does not have degree {}",
                spec.reduction_poly, spec.m
            )));
        }
        if !is_irreducible(spec.reduction_poly) {
            return Err(Error::InvalidField(format!(
                "polynomial {:#x} is reducible",
                spec.reduction_poly
            )));
        }
        let order = spec.order();
        // Find a primitive element; 0x11B for instance has no primitive x.
        for g in 1..order as u32 {
            let mut exp = vec![0u16; 2 * order];
            let mut log = vec![0u16; order];
            let mut seen = vec![false; order];
            let mut x = 1u32;
            let mut ok = true;
            #[allow(clippy::needless_range_loop)]
            for i in 0..order - 1 {
                if seen[x as usize] {
                    ok = false;
                    break;
                }
                seen[x as usize] = true;
                exp[i] = x as u16;
                log[x as usize] = i as u16;
                x = poly_mod(clmul(x, g), spec.reduction_poly);
            }
            if !ok {
                continue;
            }
            for i in order - 1..2 * order {
                exp[i] = exp[i - (order - 1)];
            }
            return Ok(Field(Arc::new(Tables {
                spec,
                order,
                exp,
                log,
            })));
        }
        Err(Error::InvalidField("no primitive element found".into()))
    }

    pub fn with_bits(m: u32) -> Result<Field> {
        Field::new(FieldSpec::with_bits(m)?)
    }

    pub fn gf256() -> Field {
        Field::new(FieldSpec::DEFAULT).expect("default field is valid")
    }

    pub fn spec(&self) -> FieldSpec {
        self.0.spec
    }

    pub fn bits(&self) -> u32 {
        self.0.spec.m
    }

    /// Number of elements, 2^m.
    pub fn order(&self) -> usize {
        self.0.order
    }

    #[inline]
    pub fn contains(&self, a: Gf) -> bool {
        (a.0 as usize) < self.0.order
    }

    #[inline]
    pub fn add(&self, a: Gf, b: Gf) -> Gf {
        a + b
    }

    #[inline]
    pub fn mul(&self, a: Gf, b: Gf) -> Gf {
        if a.0 == 0 || b.0 == 0 {
            return Gf::ZERO;
        }
        let t = &self.0;
        Gf(t.exp[t.log[a.0 as usize] as usize + t.log[b.0 as usize] as usize])
    }

    pub fn inv(&self, a: Gf) -> Result<Gf> {
        if a.0 == 0 {
            return Err(Error::ZeroInverse);
        }
        let t = &self.0;
        let l = t.log[a.0 as usize] as usize;
        Ok(Gf(t.exp[(t.order - 1 - l) % (t.order - 1)]))
    }

    pub fn div(&self, a: Gf, b: Gf) -> Result<Gf> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `dst[i] += c * src[i]` for equal-length slices.
    pub fn mul_add_slice(&self, dst: &mut [Gf], src: &[Gf], c: Gf) {
        debug_assert_eq!(dst.len(), src.len());
        if c.0 == 0 {
            return;
        }
        if c.0 == 1 {
            for (d, s) in dst.iter_mut().zip(src) {
                d.0 ^= s.0;
            }
            return;
        }
        let t = &self.0;
        let lc = t.log[c.0 as usize] as usize;
        for (d, s) in dst.iter_mut().zip(src) {
            if s.0 != 0 {
                d.0 ^= t.exp[t.log[s.0 as usize] as usize + lc];
            }
        }
    }

    /// Scales a slice in place.
    pub fn scale_slice(&self, dst: &mut [Gf], c: Gf) {
        if c.0 == 1 {
            return;
        }
        for d in dst.iter_mut() {
            *d = self.mul(*d, c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Shift-and-reduce multiplication, independent of the tables.
    fn slow_mul(a: u16, b: u16, poly: u32, m: u32) -> u16 {
        let mut acc = 0u32;
        let mut a = a as u32;
        let mut b = b as u32;
        while b != 0 {
            if b & 1 != 0 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & (1 << m) != 0 {
                a ^= poly;
            }
        }
        acc as u16
    }

    #[test]
    fn add_examples() {
        let f = Field::gf256();
        assert_eq!(f.add(Gf(0x00), Gf(0x5A)), Gf(0x5A));
        assert_eq!(f.add(Gf(0x5A), Gf(0x5A)), Gf(0x00));
        assert_eq!(f.add(Gf(0x53), Gf(0xCA)), Gf(0x99));
    }

    #[test]
    fn mul_matches_shift_reduce_exhaustively() {
        for m in [1u32, 2, 3, 4, 5, 8] {
            let f = Field::with_bits(m).unwrap();
            let poly = f.spec().reduction_poly;
            for a in 0..f.order() as u16 {
                for b in 0..f.order() as u16 {
                    assert_eq!(f.mul(Gf(a), Gf(b)).0, slow_mul(a, b, poly, m));
                }
            }
        }
    }

    #[test]
    fn mul_examples() {
        let f = Field::gf256();
        for x in 0..=255u16 {
            assert_eq!(f.mul(Gf(0), Gf(x)), Gf(0));
            assert_eq!(f.mul(Gf(1), Gf(x)), Gf(x));
        }
        assert_eq!(f.mul(Gf(0x53), Gf(0xCA)), Gf(0x01));
    }

    #[test]
    fn inverse_by_exhaustive_search() {
        let f = Field::gf256();
        assert_eq!(f.inv(Gf(1)).unwrap(), Gf(1));
        assert!(matches!(f.inv(Gf(0)), Err(Error::ZeroInverse)));
        let search = (1..=255u16)
            .find(|&y| slow_mul(0xCA, y, 0x11B, 8) == 1)
            .unwrap();
        assert_eq!(search, 0x53);
        assert_eq!(f.inv(Gf(0xCA)).unwrap(), Gf(search));
    }

    #[test]
    fn every_default_polynomial_builds() {
        for m in 1..=16 {
            let f = Field::with_bits(m).unwrap();
            assert_eq!(f.order(), 1 << m);
            let a = Gf((f.order() - 1) as u16);
            assert_eq!(f.mul(a, f.inv(a).unwrap()), Gf::ONE);
        }
    }

    #[test]
    fn rejects_bad_polynomials() {
        // x^8 + 1 = (x + 1)^8
        assert!(Field::new(FieldSpec {
            m: 8,
            reduction_poly: 0x101
        })
        .is_err());
        assert!(Field::new(FieldSpec {
            m: 4,
            reduction_poly: 0x11B
        })
        .is_err());
        assert!(Field::new(FieldSpec {
            m: 0,
            reduction_poly: 1
        })
        .is_err());
        assert!(is_irreducible(0x11B));
        assert!(!is_irreducible(0x15)); // x^4 + x^2 + 1 = (x^2 + x + 1)^2
    }

    #[test]
    fn slice_helpers() {
        let f = Field::with_bits(4).unwrap();
        let src = [Gf(1), Gf(2), Gf(0), Gf(15)];
        let mut dst = [Gf(0); 4];
        f.mul_add_slice(&mut dst, &src, Gf(3));
        for i in 0..4 {
            assert_eq!(dst[i], f.mul(src[i], Gf(3)));
        }
        f.mul_add_slice(&mut dst, &src, Gf(3));
        assert!(dst.iter().all(|x| x.is_zero()));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn field_axioms(a in 0u16..256, b in 0u16..256, c in 0u16..256) {
                let f = Field::gf256();
                let (a, b, c) = (Gf(a), Gf(b), Gf(c));
                prop_assert_eq!(f.mul(a, b), f.mul(b, a));
                prop_assert_eq!(f.mul(a, b + c), f.mul(a, b) + f.mul(a, c));
                prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
                if !a.is_zero() {
                    prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), Gf::ONE);
                }
            }

            #[test]
            fn gf65536_inverse(a in 1u16..=u16::MAX) {
                let f = Field::with_bits(16).unwrap();
                prop_assert_eq!(f.mul(Gf(a), f.inv(Gf(a)).unwrap()), Gf::ONE);
            }
        }
    }
}
