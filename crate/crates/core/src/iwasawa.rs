//! Iwasawa data `g = k + a + n` for the supported real forms.
//!
//! For `sl(n, R)` the Cartan involution is `theta(X) = -X^T`; `k` is the
//! antisymmetric matrices, `a` the traceless diagonal, and `n` the strictly
//! lower triangular matrices, i.e. the sum of the root spaces `g^{-a}` over the
//! positive restricted roots `e_i - e_j`, `i < j`. For `su(n)` everything is
//! compact: `theta = 1`, `k = g`, and `a`, `m`, `n` vanish.

use std::sync::Arc;

use crate::algebra::{AlgebraElement, AlgebraSpec, Family};
use crate::error::Result;
use crate::linalg::{self, c, CMat, RMat};

/// Restricted root `e_i - e_j` on `a`, stored by its index pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RestrictedRoot {
    pub pair: (usize, usize),
    pub positive: bool,
}

impl RestrictedRoot {
    /// Value on a real diagonal element.
    pub fn eval(&self, diag: &[f64]) -> f64 {
        diag[self.pair.0] - diag[self.pair.1]
    }
}

#[derive(Debug, Clone)]
pub struct IwasawaDatum {
    algebra: Arc<AlgebraSpec>,
    theta: RMat,
    k: Vec<AlgebraElement>,
    p: Vec<AlgebraElement>,
    a: Vec<AlgebraElement>,
    m: Vec<AlgebraElement>,
    n: Vec<AlgebraElement>,
    restricted_roots: Vec<RestrictedRoot>,
}

pub fn iwasawa(algebra: Arc<AlgebraSpec>) -> Result<IwasawaDatum> {
    let d = algebra.dim();
    let size = algebra.n();
    let unit = |i: usize, j: usize| {
        let mut m = CMat::zeros(size, size);
        m[(i, j)] = c(1.0, 0.0);
        m
    };
    let elem = |m: &CMat| algebra.element_from_matrix(m).expect("square matrix of the right size");

    match algebra.family() {
        Family::Su => Ok(IwasawaDatum {
            theta: RMat::identity(d, d),
            k: (0..d).map(|i| algebra.basis_element(i)).collect(),
            p: Vec::new(),
            a: Vec::new(),
            m: Vec::new(),
            n: Vec::new(),
            restricted_roots: Vec::new(),
            algebra,
        }),
        Family::SlReal => {
            let mut theta = RMat::zeros(d, d);
            for j in 0..d {
                let x = algebra.basis_element(j);
                let mt = -algebra.to_matrix(&x)?.transpose();
                let y = algebra.element_from_matrix(&mt)?;
                for (i, v) in y.real_coords().into_iter().enumerate() {
                    theta[(i, j)] = v;
                }
            }
            let mut k = Vec::new();
            let mut p = Vec::new();
            let mut n = Vec::new();
            let mut roots = Vec::new();
            for i in 0..size {
                for j in i + 1..size {
                    k.push(elem(&(unit(i, j) - unit(j, i))));
                    p.push(elem(&(unit(i, j) + unit(j, i))));
                    n.push(elem(&unit(j, i)));
                }
            }
            for i in 0..size {
                for j in 0..size {
                    if i != j {
                        roots.push(RestrictedRoot {
                            pair: (i, j),
                            positive: i < j,
                        });
                    }
                }
            }
            let a: Vec<AlgebraElement> = (0..size - 1).map(|q| elem(&(unit(q, q) - unit(q + 1, q + 1)))).collect();
            p.extend(a.iter().cloned());
            Ok(IwasawaDatum {
                algebra,
                theta,
                k,
                p,
                a,
                m: Vec::new(),
                n,
                restricted_roots: roots,
            })
        }
    }
}

impl IwasawaDatum {
    pub fn algebra(&self) -> &Arc<AlgebraSpec> {
        &self.algebra
    }

    /// Matrix of the Cartan involution in the algebra basis.
    pub fn theta(&self) -> &RMat {
        &self.theta
    }

    pub fn apply_theta(&self, x: &AlgebraElement) -> AlgebraElement {
        let t = linalg::to_complex(&self.theta);
        AlgebraElement::from_complex((t * x.coords()).iter().cloned().collect())
    }

    pub fn k(&self) -> &[AlgebraElement] {
        &self.k
    }

    pub fn p(&self) -> &[AlgebraElement] {
        &self.p
    }

    pub fn a(&self) -> &[AlgebraElement] {
        &self.a
    }

    pub fn m(&self) -> &[AlgebraElement] {
        &self.m
    }

    pub fn n(&self) -> &[AlgebraElement] {
        &self.n
    }

    pub fn restricted_roots(&self) -> &[RestrictedRoot] {
        &self.restricted_roots
    }

    pub fn positive_restricted_roots(&self) -> Vec<RestrictedRoot> {
        self.restricted_roots.iter().copied().filter(|r| r.positive).collect()
    }

    /// `|theta^2 - 1|`.
    pub fn involution_residual(&self) -> f64 {
        let d = self.theta.nrows();
        (&self.theta * &self.theta - RMat::identity(d, d)).amax()
    }

    /// Largest `|theta[X, Y] - [theta X, theta Y]|` over basis pairs.
    pub fn homomorphism_residual(&self) -> Result<f64> {
        let d = self.algebra.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let x = self.algebra.basis_element(i);
                let y = self.algebra.basis_element(j);
                let lhs = self.apply_theta(&self.algebra.bracket(&x, &y)?);
                let rhs = self.algebra.bracket(&self.apply_theta(&x), &self.apply_theta(&y))?;
                worst = worst.max(lhs.sub(&rhs).norm());
            }
        }
        Ok(worst)
    }

    /// Largest deviation of `k` (resp. `p`) from the `+1` (resp. `-1`) eigenspace.
    pub fn eigenspace_residual(&self) -> f64 {
        let k = self.k.iter().map(|x| self.apply_theta(x).sub(x).norm());
        let p = self.p.iter().map(|x| self.apply_theta(x).add(x).norm());
        k.chain(p).fold(0.0, f64::max)
    }

    /// `dim g - (dim k + dim a + dim n)`; zero for an Iwasawa decomposition.
    pub fn dimension_defect(&self) -> i64 {
        self.algebra.dim() as i64 - (self.k.len() + self.a.len() + self.n.len()) as i64
    }

    /// Steps of the lower central series of `n` until it vanishes, `None` if it stalls.
    pub fn nilpotency_length(&self) -> Result<Option<usize>> {
        let mut current = self.n.clone();
        for step in 0..=self.algebra.dim() {
            if current.iter().all(|x| x.norm() < 1e-12) {
                return Ok(Some(step));
            }
            let mut next = Vec::new();
            for x in &self.n {
                for y in &current {
                    let z = self.algebra.bracket(x, y)?;
                    if z.norm() >= 1e-12 {
                        next.push(z);
                    }
                }
            }
            current = next;
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn datum(f: Family, n: usize) -> IwasawaDatum {
        iwasawa(Arc::new(AlgebraSpec::build(f, n).unwrap())).unwrap()
    }

    #[test]
    fn sl2_dimensions() {
        let iw = datum(Family::SlReal, 2);
        assert_eq!((iw.k().len(), iw.a().len(), iw.n().len()), (1, 1, 1));
        assert_eq!(iw.dimension_defect(), 0);
    }

    #[test]
    fn su3_is_compact() {
        let iw = datum(Family::Su, 3);
        assert!(iw.a().is_empty() && iw.n().is_empty());
        assert_eq!(iw.k().len(), 8);
        assert_eq!(iw.dimension_defect(), 0);
    }

    #[test]
    fn sl3_restricted_roots() {
        let iw = datum(Family::SlReal, 3);
        assert_eq!(iw.restricted_roots().len(), 6);
        assert_eq!(iw.positive_restricted_roots().len(), 3);
    }

    #[test]
    fn involution_invariants() {
        for (f, n) in [(Family::SlReal, 2), (Family::SlReal, 3), (Family::Su, 3)] {
            let iw = datum(f, n);
            assert!(iw.involution_residual() < 1e-12);
            assert!(iw.homomorphism_residual().unwrap() < 1e-12);
            assert!(iw.eigenspace_residual() < 1e-12);
            assert!(iw.nilpotency_length().unwrap().is_some());
        }
        assert_eq!(datum(Family::SlReal, 3).nilpotency_length().unwrap(), Some(2));
    }
}
