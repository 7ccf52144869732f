//! Linear solves for the killed nearest-neighbor walk.
//!
//! On the free sites of a domain (domain minus absorbing sites) the operator
//! is `A = I - P`, where `P` moves to each of the four neighbors with
//! probability 1/4 and mass leaving the free set is killed. `A` is symmetric
//! positive definite. Small systems are factored with a banded Cholesky
//! decomposition; larger ones use conjugate gradients with a Jacobi
//! preconditioner.

use crate::error::{Error, Result};
use crate::lattice::LatticePoint;
use crate::scalar::Real;

use super::domain::LatticeDomain;

/// Disk radius up to which [`SolveMethod::Auto`] factors directly.
pub const DIRECT_RADIUS_LIMIT: u32 = 128;

/// Band storage budget (entries) for [`SolveMethod::Auto`].
const DIRECT_STORAGE_LIMIT: usize = 16_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Auto,
    Direct,
    ConjugateGradient,
}

/// Lower-triangular banded Cholesky factor `A = L L^T`.
#[derive(Debug, Clone)]
pub struct BandCholesky<T> {
    n: usize,
    bw: usize,
    // row i holds L[i][i-bw..=i] at offsets 0..=bw
    data: Vec<T>,
}

impl<T: Real> BandCholesky<T> {
    /// Factors the symmetric matrix whose lower band is produced by
    /// `entry(i, j)` for `i - bw <= j <= i`.
    pub fn factor(n: usize, bw: usize, entry: impl Fn(usize, usize) -> T) -> Result<Self> {
        let w = bw + 1;
        let mut data = vec![T::zero(); n * w];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                data[i * w + (j + bw - i)] = entry(i, j);
            }
        }
        for i in 0..n {
            let lo_i = i.saturating_sub(bw);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(bw));
                let mut sum = data[i * w + (j + bw - i)];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in lo..j {
                    sum = sum - data[ri + k] * data[rj + k];
                }
                if i == j {
                    if sum <= T::zero() {
                        return Err(Error::Singular(i));
                    }
                    data[i * w + bw] = sum.sqrt();
                } else {
                    data[i * w + (j + bw - i)] = sum / data[j * w + bw];
                }
            }
        }
        Ok(Self { n, bw, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// `L[i][j]`, zero outside the band.
    pub fn entry(&self, i: usize, j: usize) -> T {
        if j > i || i - j > self.bw {
            T::zero()
        } else {
            self.data[i * (self.bw + 1) + (j + self.bw - i)]
        }
    }

    /// Solves `L y = b` in place.
    pub fn forward(&self, b: &mut [T]) {
        let w = self.bw + 1;
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = i * w + self.bw - i;
            let mut s = b[i];
            for k in lo..i {
                s = s - self.data[row + k] * b[k];
            }
            b[i] = s / self.data[i * w + self.bw];
        }
    }

    /// Solves `L^T x = y` in place.
    pub fn backward(&self, b: &mut [T]) {
        let w = self.bw + 1;
        for i in (0..self.n).rev() {
            b[i] = b[i] / self.data[i * w + self.bw];
            let lo = i.saturating_sub(self.bw);
            let row = i * w + self.bw - i;
            let bi = b[i];
            for k in lo..i {
                b[k] = b[k] - self.data[row + k] * bi;
            }
        }
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        self.forward(b);
        self.backward(b);
    }
}

#[derive(Debug, Clone)]
enum Backend<T> {
    Direct(BandCholesky<T>),
    Iterative,
}

/// `I - P` on the free sites of a domain, ready for repeated solves.
#[derive(Debug, Clone)]
pub struct KilledWalkOperator<T> {
    domain: LatticeDomain,
    /// domain index -> free index, `None` for absorbing sites
    free_of: Vec<Option<usize>>,
    free_sites: Vec<usize>,
    /// free neighbors of each free site
    adj: Vec<[u32; 4]>,
    degree: Vec<u8>,
    backend: Backend<T>,
}

impl<T: Real> KilledWalkOperator<T> {
    pub fn new(domain: LatticeDomain, absorbing: &[LatticePoint], method: SolveMethod) -> Result<Self> {
        let mut free_of: Vec<Option<usize>> = vec![Some(0); domain.len()];
        for p in absorbing {
            if let Some(i) = domain.index_of(*p) {
                free_of[i] = None;
            }
        }
        let mut free_sites = Vec::with_capacity(domain.len());
        for (i, slot) in free_of.iter_mut().enumerate() {
            if slot.is_some() {
                *slot = Some(free_sites.len());
                free_sites.push(i);
            }
        }
        let mut adj = Vec::with_capacity(free_sites.len());
        let mut degree = Vec::with_capacity(free_sites.len());
        let mut bw = 0usize;
        for (fi, &di) in free_sites.iter().enumerate() {
            let mut row = [u32::MAX; 4];
            let mut deg = 0u8;
            for q in domain.site(di).neighbors() {
                if let Some(fj) = domain.index_of(q).and_then(|j| free_of[j]) {
                    row[deg as usize] = fj as u32;
                    deg += 1;
                    bw = bw.max(fi.abs_diff(fj));
                }
            }
            adj.push(row);
            degree.push(deg);
        }

        let n = free_sites.len();
        let direct = match method {
            SolveMethod::Direct => true,
            SolveMethod::ConjugateGradient => false,
            SolveMethod::Auto => {
                n.saturating_mul(bw + 1) <= DIRECT_STORAGE_LIMIT && bw <= 2 * DIRECT_RADIUS_LIMIT as usize + 1
            }
        };
        let backend = if direct {
            let quarter = T::lit(0.25);
            let f = BandCholesky::factor(n, bw, |i, j| {
                if i == j {
                    T::one()
                } else if adj[i][..degree[i] as usize].contains(&(j as u32)) {
                    -quarter
                } else {
                    T::zero()
                }
            })?;
            Backend::Direct(f)
        } else {
            Backend::Iterative
        };
        Ok(Self {
            domain,
            free_of,
            free_sites,
            adj,
            degree,
            backend,
        })
    }

    pub fn domain(&self) -> &LatticeDomain {
        &self.domain
    }

    pub fn free_len(&self) -> usize {
        self.free_sites.len()
    }

    pub fn free_index(&self, p: LatticePoint) -> Option<usize> {
        self.domain.index_of(p).and_then(|i| self.free_of[i])
    }

    pub fn free_site(&self, fi: usize) -> LatticePoint {
        self.domain.site(self.free_sites[fi])
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.backend, Backend::Direct(_))
    }

    pub fn factor(&self) -> Option<&BandCholesky<T>> {
        match &self.backend {
            Backend::Direct(f) => Some(f),
            Backend::Iterative => None,
        }
    }

    /// `y = (I - P) u` over free sites.
    pub fn apply(&self, u: &[T], y: &mut [T]) {
        let quarter = T::lit(0.25);
        for i in 0..u.len() {
            let mut s = T::zero();
            for &j in &self.adj[i][..self.degree[i] as usize] {
                s = s + u[j as usize];
            }
            y[i] = u[i] - quarter * s;
        }
    }

    /// Solves `(I - P) u = rhs` over free sites.
    pub fn solve(&self, rhs: &[T]) -> Result<Vec<T>> {
        match &self.backend {
            Backend::Direct(f) => {
                let mut u = rhs.to_vec();
                f.solve_in_place(&mut u);
                Ok(u)
            }
            Backend::Iterative => self.conjugate_gradient(rhs),
        }
    }

    fn conjugate_gradient(&self, b: &[T]) -> Result<Vec<T>> {
        let n = b.len();
        let dot = |a: &[T], c: &[T]| a.iter().zip(c).fold(T::zero(), |s, (&p, &q)| s + p * q);
        // the diagonal of I - P is identically one, so the Jacobi
        // preconditioner reduces to the identity
        let b_norm = dot(b, b).sqrt();
        let mut x = vec![T::zero(); n];
        if b_norm == T::zero() {
            return Ok(x);
        }
        let tol = T::solve_tolerance() * b_norm;
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut ap = vec![T::zero(); n];
        let mut rr = dot(&r, &r);
        let max_iter = 20 * n + 100;
        for _ in 0..max_iter {
            if rr.sqrt() <= tol {
                return Ok(x);
            }
            self.apply(&p, &mut ap);
            let alpha = rr / dot(&p, &ap);
            for i in 0..n {
                x[i] = x[i] + alpha * p[i];
                r[i] = r[i] - alpha * ap[i];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
            rr = rr_new;
        }
        Err(Error::NoConvergence {
            iterations: max_iter,
            residual: (rr.sqrt() / b_norm).to_f64().unwrap_or(f64::NAN),
        })
    }

    /// Solves the Dirichlet problem `u = P u` on free sites with
    /// `u = boundary(p)` on absorbing sites and `u = exterior` off the domain.
    /// Returns a [`Field`] covering the whole plane.
    pub fn harmonic(&self, boundary: impl Fn(LatticePoint) -> T, exterior: T) -> Result<Field<'_, T>> {
        let quarter = T::lit(0.25);
        let rhs: Vec<T> = self
            .free_sites
            .iter()
            .map(|&di| {
                let mut s = T::zero();
                for q in self.domain.site(di).neighbors() {
                    match self.domain.index_of(q) {
                        None => s = s + exterior,
                        Some(j) if self.free_of[j].is_none() => s = s + boundary(q),
                        Some(_) => {}
                    }
                }
                quarter * s
            })
            .collect();
        let values = self.solve(&rhs)?;
        let fixed = (0..self.domain.len())
            .map(|i| {
                let p = self.domain.site(i);
                if self.free_of[i].is_none() {
                    boundary(p)
                } else {
                    T::zero()
                }
            })
            .collect();
        Ok(Field {
            op: self,
            values,
            fixed,
            exterior,
        })
    }

    /// Green's function column `G(., y)` of the killed walk: expected visits
    /// to `y` before absorption, as a function of the start.
    pub fn green_column(&self, y: LatticePoint) -> Result<Field<'_, T>> {
        let fy = self.free_index(y).ok_or(Error::InvalidParameter(format!(
            "site {y} is not a free site of the domain"
        )))?;
        let mut rhs = vec![T::zero(); self.free_len()];
        rhs[fy] = T::one();
        let values = self.solve(&rhs)?;
        Ok(Field {
            op: self,
            values,
            fixed: vec![T::zero(); self.domain.len()],
            exterior: T::zero(),
        })
    }
}

/// A solution extended to the whole plane.
pub struct Field<'a, T> {
    op: &'a KilledWalkOperator<T>,
    values: Vec<T>,
    fixed: Vec<T>,
    exterior: T,
}

impl<T: Real> Field<'_, T> {
    pub fn at(&self, p: LatticePoint) -> T {
        match self.op.domain.index_of(p) {
            None => self.exterior,
            Some(i) => match self.op.free_of[i] {
                Some(fi) => self.values[fi],
                None => self.fixed[i],
            },
        }
    }

    /// Average over the four neighbors: the value seen one step after `p`.
    pub fn neighbor_mean(&self, p: LatticePoint) -> T {
        p.neighbors()
            .iter()
            .fold(T::zero(), |s, &q| s + self.at(q))
            * T::lit(0.25)
    }

    pub fn free_values(&self) -> &[T] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_cholesky_tridiagonal() {
        // 2 on the diagonal, -1 off: known inverse
        let n = 6;
        let f = BandCholesky::<f64>::factor(n, 1, |i, j| if i == j { 2.0 } else { -1.0 }).unwrap();
        let mut b = vec![0.0; n];
        b[0] = 1.0;
        f.solve_in_place(&mut b);
        // inverse of the path Laplacian: (A^-1)_{i0} = (n - i) / (n + 1)
        for (i, v) in b.iter().enumerate() {
            assert!((v - (n - i) as f64 / (n + 1) as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn band_cholesky_rejects_indefinite() {
        let e = BandCholesky::<f64>::factor(3, 1, |i, j| if i == j { 1.0 } else { -1.0 });
        assert!(matches!(e, Err(Error::Singular(_))));
    }

    #[test]
    fn direct_and_iterative_agree() {
        let dom = LatticeDomain::disk(LatticePoint::ORIGIN, 15);
        let absorbing = [LatticePoint::new(3, 1)];
        let d = KilledWalkOperator::<f64>::new(dom.clone(), &absorbing, SolveMethod::Direct).unwrap();
        let c = KilledWalkOperator::<f64>::new(dom, &absorbing, SolveMethod::ConjugateGradient).unwrap();
        assert!(d.is_direct() && !c.is_direct());
        let g1 = d.green_column(LatticePoint::new(-2, 4)).unwrap();
        let g2 = c.green_column(LatticePoint::new(-2, 4)).unwrap();
        for (a, b) in g1.free_values().iter().zip(g2.free_values()) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn f32_solves() {
        let dom = LatticeDomain::disk(LatticePoint::ORIGIN, 6);
        let op = KilledWalkOperator::<f32>::new(dom.clone(), &[], SolveMethod::ConjugateGradient).unwrap();
        let op64 = KilledWalkOperator::<f64>::new(dom, &[], SolveMethod::Direct).unwrap();
        let g = op.green_column(LatticePoint::ORIGIN).unwrap().at(LatticePoint::ORIGIN);
        let g64 = op64.green_column(LatticePoint::ORIGIN).unwrap().at(LatticePoint::ORIGIN);
        assert!((g as f64 - g64).abs() < 1e-4);
    }
}
