//! Discrete Gaussian free field on a square box with zero boundary.
//!
//! The field lives on the interior sites `{0, .., n-1}^2` and vanishes
//! outside. Its covariance is the Green's function of the simple random walk
//! killed on leaving the box, so `Cov = (I - P)^{-1}`. Rather than factoring
//! that dense matrix, the sparse precision matrix `Q = I - P` is factored as
//! `Q = C C^T` (banded, bandwidth `n`), and a sample is `phi = C^{-T} z`.
//! The implied factor of the covariance, `L = C^{-T}`, satisfies
//! `L L^T = Q^{-1}`.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::LatticePoint;
use crate::potential::{BandCholesky, KilledWalkOperator, LatticeDomain, SolveMethod};
use crate::rng::stream_rng;

/// Largest supported box side.
pub const MAX_SIDE: u32 = 128;

/// Covariance convention stated in every serialized sample.
pub const CONVENTION: &str = "killed-walk Green's function, zero outside {0..n-1}^2";

/// Factored covariance of the field on a box of side `n`.
#[derive(Debug, Clone)]
pub struct CovarianceFactor {
    side: u32,
    op: KilledWalkOperator<f64>,
}

pub fn build_covariance(n: u32) -> Result<CovarianceFactor> {
    if n == 0 {
        return Err(invalid("box side must be positive"));
    }
    if n > MAX_SIDE {
        return Err(Error::SizeLimit {
            size: n as usize,
            limit: MAX_SIDE as usize,
        });
    }
    let op = KilledWalkOperator::new(LatticeDomain::square_box(n), &[], SolveMethod::Direct)?;
    Ok(CovarianceFactor { side: n, op })
}

impl CovarianceFactor {
    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn len(&self) -> usize {
        self.op.free_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn precision_factor(&self) -> &BandCholesky<f64> {
        self.op.factor().expect("box operator is always factored directly")
    }

    /// Row-major index of an interior site.
    pub fn index_of(&self, p: LatticePoint) -> Option<usize> {
        self.op.free_index(p)
    }

    pub fn site(&self, index: usize) -> LatticePoint {
        self.op.free_site(index)
    }

    /// `G(x, y)`, zero when either site is outside the box.
    pub fn covariance(&self, x: LatticePoint, y: LatticePoint) -> Result<f64> {
        match (self.index_of(x), self.index_of(y)) {
            (Some(_), Some(_)) => Ok(self.op.green_column(y)?.at(x)),
            _ => Ok(0.0),
        }
    }

    /// The dense covariance matrix. Quadratic memory, meant for small boxes.
    pub fn green_matrix(&self) -> Vec<Vec<f64>> {
        let f = self.precision_factor();
        (0..self.len())
            .map(|j| {
                let mut col = vec![0.0; self.len()];
                col[j] = 1.0;
                f.solve_in_place(&mut col);
                col
            })
            .collect()
    }

    /// The dense triangular factor `L` with `L L^T = G`, as rows.
    /// `L = C^{-T}` is upper triangular in the row-major site order.
    pub fn triangular_factor(&self) -> Vec<Vec<f64>> {
        let f = self.precision_factor();
        let m = self.len();
        let mut rows = vec![vec![0.0; m]; m];
        for j in 0..m {
            let mut col = vec![0.0; m];
            col[j] = 1.0;
            f.backward(&mut col);
            for (i, v) in col.into_iter().enumerate() {
                rows[i][j] = v;
            }
        }
        rows
    }

    /// `max |L L^T - G|` over all entries, with `G` solved independently
    /// from the precision factor.
    pub fn factorization_residual(&self) -> f64 {
        let l = self.triangular_factor();
        let g = self.green_matrix();
        let m = self.len();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let s: f64 = (0..m).map(|k| l[i][k] * l[j][k]).sum();
                worst = worst.max((s - g[i][j]).abs());
            }
        }
        worst
    }

    /// `C^{-T} z` for a given vector of standard normals.
    pub fn apply_factor(&self, mut z: Vec<f64>) -> Vec<f64> {
        self.precision_factor().backward(&mut z);
        z
    }
}

/// One realization of the field.
#[derive(Debug, Clone, PartialEq)]
pub struct GFFSample {
    pub side: u32,
    pub seed: u64,
    /// Row-major over the interior (`y * side + x`).
    pub values: Vec<f64>,
}

pub fn sample(factor: &CovarianceFactor, seed: u64) -> GFFSample {
    let mut rng = stream_rng(seed);
    let z: Vec<f64> = (0..factor.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    GFFSample {
        side: factor.side,
        seed,
        values: factor.apply_factor(z),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleHeader {
    pub n: u32,
    pub seed: u64,
    pub convention: String,
}

impl GFFSample {
    pub fn at(&self, p: LatticePoint) -> f64 {
        let s = self.side as i32;
        if p.x < 0 || p.y < 0 || p.x >= s || p.y >= s {
            0.0
        } else {
            self.values[(p.y * s + p.x) as usize]
        }
    }

    pub fn site(&self, index: usize) -> LatticePoint {
        let s = self.side as usize;
        LatticePoint::new((index % s) as i32, (index / s) as i32)
    }

    pub fn center(&self) -> LatticePoint {
        let c = (self.side / 2) as i32;
        LatticePoint::new(c, c)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The sign-flipped field, equal in law.
    pub fn negated(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }

    pub fn header(&self) -> SampleHeader {
        SampleHeader {
            n: self.side,
            seed: self.seed,
            convention: CONVENTION.to_string(),
        }
    }

    /// Little-endian `f64` values, row-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }

    pub fn from_parts(header: &SampleHeader, bytes: &[u8]) -> Result<Self> {
        let m = (header.n as usize) * (header.n as usize);
        if bytes.len() != m * 8 {
            return Err(invalid(format!(
                "expected {} bytes for side {}, got {}",
                m * 8,
                header.n,
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Self {
            side: header.n,
            seed: header.seed,
            values,
        })
    }
}
