use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A site of the square lattice.
///
/// Ordering is lexicographic in `(x, y)`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct LatticePoint {
    pub x: i32,
    pub y: i32,
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn norm2(self) -> i64 {
        let (x, y) = (self.x as i64, self.y as i64);
        x * x + y * y
    }

    pub fn norm(self) -> f64 {
        (self.norm2() as f64).sqrt()
    }

    pub fn dist2(self, other: LatticePoint) -> i64 {
        (self - other).norm2()
    }

    pub fn dist(self, other: LatticePoint) -> f64 {
        (self.dist2(other) as f64).sqrt()
    }

    /// The four nearest neighbors.
    pub fn neighbors(self) -> [LatticePoint; 4] {
        let LatticePoint { x, y } = self;
        [
            LatticePoint::new(x + 1, y),
            LatticePoint::new(x - 1, y),
            LatticePoint::new(x, y + 1),
            LatticePoint::new(x, y - 1),
        ]
    }

    /// Membership in the closed disk `D(0, r)`.
    pub fn in_disk(self, r: u32) -> bool {
        self.norm2() <= (r as i64) * (r as i64)
    }
}

impl Add for LatticePoint {
    type Output = LatticePoint;
    fn add(self, o: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for LatticePoint {
    type Output = LatticePoint;
    fn sub(self, o: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for LatticePoint {
    type Output = LatticePoint;
    fn neg(self) -> LatticePoint {
        LatticePoint::new(-self.x, -self.y)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(i32, i32)> for LatticePoint {
    fn from((x, y): (i32, i32)) -> Self {
        LatticePoint::new(x, y)
    }
}

/// Minimal wrapped squared distance on the `side x side` torus.
pub fn torus_dist2(a: LatticePoint, b: LatticePoint, side: u32) -> i64 {
    let side = side as i64;
    let wrap = |d: i64| {
        let d = d.rem_euclid(side);
        d.min(side - d)
    };
    let dx = wrap(a.x as i64 - b.x as i64);
    let dy = wrap(a.y as i64 - b.y as i64);
    dx * dx + dy * dy
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_lexicographic() {
        let mut pts = vec![
            LatticePoint::new(1, -1),
            LatticePoint::new(0, 5),
            LatticePoint::new(0, -2),
        ];
        pts.sort();
        assert_eq!(
            pts,
            vec![
                LatticePoint::new(0, -2),
                LatticePoint::new(0, 5),
                LatticePoint::new(1, -1)
            ]
        );
    }

    #[test]
    fn torus_wraps() {
        let a = LatticePoint::new(0, 0);
        let b = LatticePoint::new(9, 1);
        assert_eq!(torus_dist2(a, b, 10), 2);
        assert_eq!(torus_dist2(a, LatticePoint::new(5, 5), 10), 50);
    }
}
