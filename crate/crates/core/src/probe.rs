//! Randomly shifted Halton point sets used for coverage certification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom2d::Vec2;

/// Default number of probe points per tested radius.
pub const DEFAULT_PROBES: usize = 100_000;

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

/// Halton (2, 3) sequence with a Cranley–Patterson rotation drawn from `seed`.
#[derive(Debug, Clone)]
pub struct ShiftedHalton {
    shift: (f64, f64),
}

impl ShiftedHalton {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            shift: (rng.gen::<f64>(), rng.gen::<f64>()),
        }
    }

    /// The `i`-th point of the rotated sequence in the unit square.
    pub fn unit(&self, i: usize) -> (f64, f64) {
        let a = (radical_inverse(i as u64 + 1, 2) + self.shift.0).fract();
        let b = (radical_inverse(i as u64 + 1, 3) + self.shift.1).fract();
        (a, b)
    }

    /// The `i`-th point mapped area-uniformly onto the closed disk `B(0, radius)`.
    pub fn disk(&self, i: usize, radius: f64) -> Vec2 {
        let (a, b) = self.unit(i);
        let r = radius * a.sqrt();
        let phi = std::f64::consts::TAU * b;
        Vec2::new(r * phi.cos(), r * phi.sin())
    }

    pub fn disk_points(&self, n: usize, radius: f64) -> impl Iterator<Item = Vec2> + '_ {
        (0..n).map(move |i| self.disk(i, radius))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn disk_points_stay_inside() {
        let h = ShiftedHalton::new(7);
        assert!(h.disk_points(10_000, 0.3).all(|p| p.norm() <= 0.3 + 1e-15));
    }

    #[test]
    fn same_seed_same_points() {
        let a = ShiftedHalton::new(3);
        let b = ShiftedHalton::new(3);
        let c = ShiftedHalton::new(4);
        assert_eq!(a.disk(17, 1.0), b.disk(17, 1.0));
        assert_ne!(a.disk(17, 1.0), c.disk(17, 1.0));
    }
}
