//! Real and complex element types behind one trait.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use faer::c64;
use faer::traits::ComplexField;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::datagen::Field;

pub trait Scalar:
    ComplexField<Real = f64>
    + Copy
    + Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    const FIELD: Field;
    /// Bytes per element in the little-endian export format.
    const BYTES: usize;

    fn from_re(x: f64) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn conjugate(self) -> Self;
    fn modulus_sq(self) -> f64;

    fn scale(self, s: f64) -> Self {
        self * Self::from_re(s)
    }

    /// Unit-variance normal; complex draws are circularly symmetric with
    /// variance 1/2 in each part.
    fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn sample_rademacher<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::from_re(if rng.random::<bool>() { 1.0 } else { -1.0 })
    }

    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
}

impl Scalar for f64 {
    const FIELD: Field = Field::Real;
    const BYTES: usize = 8;

    fn from_re(x: f64) -> Self {
        x
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn conjugate(self) -> Self {
        self
    }
    fn modulus_sq(self) -> f64 {
        self * self
    }
    fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        f64::from_le_bytes(bytes[..8].try_into().unwrap())
    }
}

impl Scalar for c64 {
    const FIELD: Field = Field::Complex;
    const BYTES: usize = 16;

    fn from_re(x: f64) -> Self {
        c64::new(x, 0.0)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn conjugate(self) -> Self {
        c64::new(self.re, -self.im)
    }
    fn modulus_sq(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
    fn sample_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.re.to_le_bytes());
        out.extend_from_slice(&self.im.to_le_bytes());
    }
    fn read_le(bytes: &[u8]) -> Self {
        c64::new(
            f64::from_le_bytes(bytes[..8].try_into().unwrap()),
            f64::from_le_bytes(bytes[8..16].try_into().unwrap()),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn complex_normal_is_circular_with_unit_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let (mut power, mut pseudo, mut re2) = (0.0, c64::new(0.0, 0.0), 0.0);
        for _ in 0..n {
            let x = c64::sample_normal(&mut rng);
            power += x.modulus_sq();
            pseudo += x * x;
            re2 += x.re * x.re;
        }
        let n = n as f64;
        assert!((power / n - 1.0).abs() < 0.02);
        assert!((re2 / n - 0.5).abs() < 0.01);
        assert!((pseudo / n).norm() < 0.02);
    }

    #[test]
    fn le_round_trip() {
        let mut buf = Vec::new();
        1.5f64.write_le(&mut buf);
        c64::new(-2.0, 0.25).write_le(&mut buf);
        assert_eq!(buf.len(), 24);
        assert_eq!(f64::read_le(&buf), 1.5);
        assert_eq!(c64::read_le(&buf[8..]), c64::new(-2.0, 0.25));
    }

    #[test]
    fn rademacher_is_signed_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<f64> = (0..1000).map(|_| f64::sample_rademacher(&mut rng)).collect();
        assert!(draws.iter().all(|x| x.abs() == 1.0));
        let mean = draws.iter().sum::<f64>() / 1000.0;
        assert!(mean.abs() < 0.15);
    }
}
