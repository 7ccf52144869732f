use crate::lattice::LatticePoint;

const NONE: u32 = u32::MAX;

/// A finite set of lattice sites with a row-major index.
///
/// Sites are ordered by `y` then `x`, which keeps the nearest-neighbor
/// operator banded with bandwidth close to the widest row.
#[derive(Debug, Clone)]
pub struct LatticeDomain {
    sites: Vec<LatticePoint>,
    min: LatticePoint,
    width: usize,
    height: usize,
    index: Vec<u32>,
}

impl LatticeDomain {
    fn from_predicate(min: LatticePoint, max: LatticePoint, keep: impl Fn(LatticePoint) -> bool) -> Self {
        let width = (max.x - min.x + 1) as usize;
        let height = (max.y - min.y + 1) as usize;
        let mut index = vec![NONE; width * height];
        let mut sites = Vec::new();
        for y in min.y..=max.y {
            for x in min.x..=max.x {
                let p = LatticePoint::new(x, y);
                if keep(p) {
                    index[(y - min.y) as usize * width + (x - min.x) as usize] = sites.len() as u32;
                    sites.push(p);
                }
            }
        }
        Self {
            sites,
            min,
            width,
            height,
            index,
        }
    }

    /// The closed disk `D(center, radius)`.
    pub fn disk(center: LatticePoint, radius: u32) -> Self {
        let r = radius as i32;
        let r2 = (radius as i64) * (radius as i64);
        Self::from_predicate(
            LatticePoint::new(center.x - r, center.y - r),
            LatticePoint::new(center.x + r, center.y + r),
            |p| p.dist2(center) <= r2,
        )
    }

    /// The box `{0, .., side-1}^2`.
    pub fn square_box(side: u32) -> Self {
        let s = side as i32 - 1;
        Self::from_predicate(LatticePoint::ORIGIN, LatticePoint::new(s, s), |_| true)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[LatticePoint] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> LatticePoint {
        self.sites[i]
    }

    pub fn index_of(&self, p: LatticePoint) -> Option<usize> {
        let dx = p.x - self.min.x;
        let dy = p.y - self.min.y;
        if dx < 0 || dy < 0 || dx as usize >= self.width || dy as usize >= self.height {
            return None;
        }
        match self.index[dy as usize * self.width + dx as usize] {
            NONE => None,
            i => Some(i as usize),
        }
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        self.index_of(p).is_some()
    }
}
