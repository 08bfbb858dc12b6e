//! Canonical subspaces of a coordinate space. The basis is kept in reduced
//! row-echelon form with zero rows stripped, so structural equality of two
//! `Subspace` values is equality of the subspaces they represent.

use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::scalar::{Field, Scalar};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Mat,
}

impl Subspace {
    /// Span of the rows of `gens`.
    pub fn from_rows(gens: &Mat) -> Subspace {
        let (r, pivots) = gens.rref();
        let basis = r.submatrix(0..pivots.len(), 0..gens.cols());
        Subspace {
            ambient_dim: gens.cols(),
            basis,
        }
    }

    pub fn from_vecs(field: Field, ambient_dim: usize, vecs: &[Vec<Scalar>]) -> Result<Subspace> {
        for v in vecs {
            if v.len() != ambient_dim {
                return Err(Error::Dimension(format!(
                    "generator of length {} in ambient dimension {}",
                    v.len(),
                    ambient_dim
                )));
            }
        }
        if vecs.is_empty() {
            return Ok(Subspace::zero(field, ambient_dim));
        }
        Ok(Subspace::from_rows(&Mat::from_rows(field, vecs.to_vec())?))
    }

    pub fn zero(field: Field, ambient_dim: usize) -> Subspace {
        Subspace {
            ambient_dim,
            basis: Mat::zero(field, 0, ambient_dim),
        }
    }

    pub fn full(field: Field, ambient_dim: usize) -> Subspace {
        Subspace {
            ambient_dim,
            basis: Mat::identity(field, ambient_dim),
        }
    }

    pub fn field(&self) -> Field {
        self.basis.field()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim
    }

    pub fn contains_vec(&self, v: &[Scalar]) -> bool {
        assert_eq!(v.len(), self.ambient_dim, "vector in wrong ambient space");
        let rhs = Mat::from_rows(self.field(), vec![v.to_vec()])
            .expect("single row")
            .transpose();
        self.basis.transpose().solve(&rhs).is_ok()
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        assert_eq!(self.ambient_dim, other.ambient_dim);
        other.basis.row_vecs().iter().all(|v| self.contains_vec(v))
    }

    /// Coordinates of `v` relative to the canonical basis, if `v` lies here.
    pub fn coordinates(&self, v: &[Scalar]) -> Result<Vec<Scalar>> {
        let rhs = Mat::from_rows(self.field(), vec![v.to_vec()])?.transpose();
        let x = self.basis.transpose().solve(&rhs)?;
        Ok((0..self.dim()).map(|i| x.at(i, 0).clone()).collect())
    }

    /// Expresses each row of `m` in the canonical basis; fails if a row
    /// falls outside the subspace. Returns a `m.rows() x dim` matrix.
    pub fn coordinates_of_rows(&self, m: &Mat) -> Result<Mat> {
        let x = self.basis.transpose().solve(&m.transpose())?;
        Ok(x.transpose())
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.check_ambient(other)?;
        Ok(Subspace::from_rows(&self.basis.vstack(&other.basis)?))
    }

    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        self.check_ambient(other)?;
        // Rows c = (a, -b) of the left kernel of [A; B] give aᵀA = bᵀB,
        // which runs over exactly the intersection.
        let stacked = self.basis.vstack(&other.basis)?;
        let left_kernel = stacked.transpose().kernel_basis();
        let a_part = left_kernel.submatrix(0..left_kernel.rows(), 0..self.dim());
        let gens = a_part.mul(&self.basis)?;
        Ok(Subspace::from_rows(&gens))
    }

    /// A surjection onto coordinates of the quotient by this subspace:
    /// a `(ambient - dim) x ambient` matrix whose kernel is exactly `self`.
    pub fn quotient_map(&self) -> Mat {
        let field = self.field();
        let (_, pivots) = self.basis.rref();
        let free: Vec<usize> = (0..self.ambient_dim)
            .filter(|c| !pivots.contains(c))
            .collect();
        let mut q = Mat::zero(field, free.len(), self.ambient_dim);
        for (row, &j) in free.iter().enumerate() {
            q.set(row, j, field.one());
            for (i, &p) in pivots.iter().enumerate() {
                q.set(row, p, self.basis.at(i, j).neg_ref());
            }
        }
        q
    }

    /// Greedily builds a subspace complementary to every member of `avoid`
    /// (all of which must share one dimension). Returns `None` when no common
    /// complement exists, which can only happen over small prime fields.
    pub fn common_complement(field: Field, ambient: usize, avoid: &[Subspace]) -> Option<Subspace> {
        let target = if avoid.is_empty() {
            ambient
        } else {
            ambient - avoid[0].dim()
        };
        if avoid.iter().any(|s| ambient - s.dim() != target) {
            return None;
        }
        let mut picked: Vec<Vec<Scalar>> = Vec::new();
        while picked.len() < target {
            let mut found = None;
            for v in enumerate_vectors(field, ambient) {
                let ok = avoid.iter().all(|s| {
                    let mut rows = s.basis.row_vecs();
                    rows.extend(picked.iter().cloned());
                    rows.push(v.clone());
                    Mat::from_rows(field, rows).expect("rectangular").rank()
                        == s.dim() + picked.len() + 1
                });
                if ok {
                    found = Some(v);
                    break;
                }
            }
            picked.push(found?);
        }
        Subspace::from_vecs(field, ambient, &picked).ok()
    }

    fn check_ambient(&self, other: &Subspace) -> Result<()> {
        if self.ambient_dim != other.ambient_dim || self.field() != other.field() {
            return Err(Error::Dimension(format!(
                "subspaces of ambient dimensions {} and {}",
                self.ambient_dim, other.ambient_dim
            )));
        }
        Ok(())
    }
}

/// Deterministic stream of candidate vectors with small nonnegative entries.
/// Over a prime field this is exhaustive. Over the rationals the grid
/// {0..B}^dim cannot be covered by fewer than B proper subspaces, so scanning
/// a small radix first and a large one as fallback always terminates.
fn enumerate_vectors(field: Field, dim: usize) -> impl Iterator<Item = Vec<Scalar>> {
    let radixes: Vec<u64> = match field {
        Field::Prime(p) => vec![p],
        Field::Rational => vec![8, 4096],
    };
    radixes.into_iter().flat_map(move |radix| {
        let count = radix.checked_pow(dim as u32).unwrap_or(u64::MAX);
        (1..count).map(move |mut code| {
            let mut v = Vec::with_capacity(dim);
            for _ in 0..dim {
                v.push(field.from_i64((code % radix) as i64));
                code /= radix;
            }
            v
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: Field = Field::Rational;

    fn span(rows: &[&[i64]]) -> Subspace {
        Subspace::from_rows(&Mat::from_i64(Q, rows))
    }

    #[test]
    fn canonical_equality() {
        // the same plane, presented by two different generating sets
        let a = span(&[&[1, 0, 1], &[0, 1, 1]]);
        let b = span(&[&[1, 1, 2], &[1, -1, 0]]);
        assert_eq!(a, b);
        assert_ne!(a, span(&[&[1, 0, 0], &[0, 1, 0]]));
    }

    #[test]
    fn sum_and_intersection_examples() {
        let e1 = span(&[&[1, 0]]);
        let e2 = span(&[&[0, 1]]);
        assert_eq!(e1.sum(&e2).unwrap(), Subspace::full(Q, 2));
        // solving x(1,0) = y(1,1) by hand forces x = y = 0
        let diag = span(&[&[1, 1]]);
        assert!(e1.intersect(&diag).unwrap().is_zero());
        assert_eq!(e1.intersect(&e1).unwrap(), e1);
    }

    #[test]
    fn quotient_map_example() {
        let e1 = span(&[&[1, 0]]);
        let q = e1.quotient_map();
        assert_eq!(q.rows(), 1);
        // kernel of q is exactly span{e1}: substitute both basis directions
        assert!(q.mul_vec(&[Q.one(), Q.zero()]).unwrap()[0].is_zero());
        assert!(!q.mul_vec(&[Q.zero(), Q.one()]).unwrap()[0].is_zero());
        assert_eq!(Subspace::from_rows(&q.kernel_basis()), e1);
    }

    #[test]
    fn grassmann_identity_enumerated() {
        // exhaustive over F_2-like small data: all pairs of subspaces of F_3^2
        let f = Field::Prime(3);
        let mut all = vec![Subspace::zero(f, 2), Subspace::full(f, 2)];
        for a in 0..3i64 {
            for b in 0..3i64 {
                if a == 0 && b == 0 {
                    continue;
                }
                let s = Subspace::from_rows(&Mat::from_i64(f, &[&[a, b]]));
                if !all.contains(&s) {
                    all.push(s);
                }
            }
        }
        for x in &all {
            for y in &all {
                let s = x.sum(y).unwrap();
                let i = x.intersect(y).unwrap();
                assert_eq!(s.dim() + i.dim(), x.dim() + y.dim());
                assert!(s.contains(x) && s.contains(y));
                assert!(x.contains(&i) && y.contains(&i));
            }
        }
    }

    #[test]
    fn common_complement_found_and_refused() {
        let lines = vec![span(&[&[1, 0]]), span(&[&[1, 1]]), span(&[&[0, 1]])];
        let c = Subspace::common_complement(Q, 2, &lines).unwrap();
        for l in &lines {
            assert!(c.intersect(l).unwrap().is_zero());
            assert_eq!(c.sum(l).unwrap(), Subspace::full(Q, 2));
        }
        // over F_2 the three lines of the plane have no common complement
        let f2 = Field::Prime(2);
        let all_lines: Vec<Subspace> = [[1, 0], [0, 1], [1, 1]]
            .iter()
            .map(|r| Subspace::from_rows(&Mat::from_i64(f2, &[&[r[0], r[1]]])))
            .collect();
        assert!(Subspace::common_complement(f2, 2, &all_lines).is_none());
    }

    #[test]
    fn coordinates_roundtrip() {
        let s = span(&[&[1, 2, 0], &[0, 0, 1]]);
        let v = vec![Q.from_i64(2), Q.from_i64(4), Q.from_i64(-3)];
        let coords = s.coordinates(&v).unwrap();
        let back = s.basis().transpose().mul_vec(&coords).unwrap();
        assert_eq!(back, v);
        assert!(s.coordinates(&[Q.one(), Q.zero(), Q.zero()]).is_err());
    }
}
