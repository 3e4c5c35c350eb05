//! Fixed points of a regular semisimple element on the flag variety.
//!
//! The Borel subalgebras containing a Cartan `t` are in bijection with Weyl
//! chambers. The base point is the Borel spanned by `t` and the negative root
//! spaces; the fixed point of `w` has nilradical roots `w(Phi^-)` and twisted
//! moment value `lambda_x = w(lambda)`.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::algebra::{Family, TAU_RS};
use crate::cartan::CartanDatum;
use crate::error::{Error, Result};
use crate::linalg::C64;

#[derive(Debug, Clone)]
pub struct FixedPoint {
    /// Index into the Cartan's Weyl group.
    pub weyl_index: usize,
    pub label: String,
    pub sign: i32,
    /// Roots whose root spaces span the nilradical of the Borel.
    pub borel_roots: Vec<usize>,
    /// `w(lambda)` as values on the Cartan basis.
    pub lambda_x: DVector<C64>,
    pub in_closed_orbit: bool,
    pub multiplicity: i32,
}

/// Checks `B*(lambda, a) != 0` for every root, relative to the largest pairing.
pub fn check_regular_lambda(cartan: &CartanDatum, lambda: &DVector<C64>) -> Result<()> {
    if lambda.len() != cartan.rank() {
        return Err(Error::DimensionMismatch {
            expected: cartan.rank(),
            found: lambda.len(),
        });
    }
    let pairings: Vec<f64> = cartan
        .roots()
        .iter()
        .map(|r| cartan.dual_form(lambda, &r.coords).norm())
        .collect();
    let hi = pairings.iter().cloned().fold(0.0, f64::max);
    let lo = pairings.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi == 0.0 || lo <= TAU_RS * hi {
        return Err(Error::NonRegularLambda(format!(
            "smallest root pairing {lo:.3e} vs largest {hi:.3e}"
        )));
    }
    Ok(())
}

/// One fixed point per Weyl element, in Weyl-group order. Support flags and
/// multiplicities are left unset (`false`, `0`).
pub fn enumerate_fixed_points(cartan: &CartanDatum, lambda: &DVector<C64>) -> Result<Vec<FixedPoint>> {
    check_regular_lambda(cartan, lambda)?;
    let negatives = cartan.negative_roots();
    Ok(cartan
        .weyl_group()
        .iter()
        .enumerate()
        .map(|(idx, w)| {
            let mut borel_roots: Vec<usize> = negatives.iter().map(|&a| w.root_perm[a]).collect();
            borel_roots.sort_unstable();
            FixedPoint {
                weyl_index: idx,
                label: w.label(),
                sign: w.sign,
                borel_roots,
                lambda_x: w.act(lambda),
                in_closed_orbit: false,
                multiplicity: 0,
            }
        })
        .collect())
}

/// Splits a positive system at Cartan coordinates `x` into
/// `Phi' = {Re a(X) < 0}` and `Phi'' = {Re a(X) > 0}`.
///
/// Roots with `Re a(X) = 0` go to neither; for regular real `X` in a split
/// Cartan there are none.
pub fn split_positive_system(cartan: &CartanDatum, x: &DVector<C64>, positive: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let values = cartan.root_values(x);
    let scale = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-12 * scale;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for &a in positive {
        let re = values[a].re;
        if re < -tol {
            lower.push(a);
        } else if re > tol {
            upper.push(a);
        }
    }
    (lower, upper)
}

/// Support flags: every fixed point for the compact form, otherwise the
/// fixed points whose Borel is stable under complex conjugation.
pub fn closed_orbit_support(cartan: &CartanDatum, fixed_points: &[FixedPoint]) -> Result<Vec<bool>> {
    let algebra = cartan.algebra();
    match algebra.family() {
        Family::Su => Ok(vec![true; fixed_points.len()]),
        Family::SlReal => {
            // Decompose into the Cartan basis followed by all root vectors.
            let d = algebra.dim();
            let r = cartan.rank();
            let mut frame = crate::linalg::CMat::zeros(d, d);
            for (k, h) in cartan.basis().iter().enumerate() {
                frame.set_column(k, h.coords());
            }
            for (a, e) in cartan.root_vectors().iter().enumerate() {
                frame.set_column(r + a, e.coords());
            }
            let inv = crate::linalg::inverse(&frame).ok_or_else(|| Error::Construction("root decomposition is singular".into()))?;
            Ok(fixed_points
                .iter()
                .map(|fp| {
                    fp.borel_roots.iter().all(|&a| {
                        let e = &cartan.root_vectors()[a];
                        let conj = algebra.real_structure(e);
                        let comps = &inv * conj.coords();
                        let scale = comps.iter().map(|z| z.norm()).fold(0.0, f64::max);
                        (0..cartan.roots().len())
                            .filter(|b| !fp.borel_roots.contains(b))
                            .all(|b| comps[r + b].norm() <= 1e-8 * scale)
                    })
                })
                .collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MultiplicityMode {
    Compact,
    MaximallySplit,
    /// Weyl label to multiplicity; labels not listed get 0.
    UserSupplied { values: BTreeMap<String, f64> },
}

impl MultiplicityMode {
    pub fn tag(&self) -> &'static str {
        match self {
            MultiplicityMode::Compact => "compact",
            MultiplicityMode::MaximallySplit => "maximally_split",
            MultiplicityMode::UserSupplied { .. } => "user_supplied",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicityAssignment {
    pub mode: String,
    /// Weyl label to multiplicity, in Weyl-group order.
    pub values: Vec<(String, i32)>,
    /// Global orientation sign used in split mode.
    pub s0: i32,
    /// `"det(w) * s0"`, `"constant"`, or `"user"`.
    pub convention: String,
}

impl MultiplicityAssignment {
    pub fn get(&self, label: &str) -> Option<i32> {
        self.values.iter().find(|(l, _)| l == label).map(|(_, d)| *d)
    }

    pub fn apply(&self, fixed_points: &mut [FixedPoint]) {
        for (fp, (_, d)) in fixed_points.iter_mut().zip(&self.values) {
            fp.multiplicity = *d;
        }
    }
}

/// Multiplicities for the given mode. Off-support values are always 0.
pub fn assign_multiplicities(
    family: Family,
    fixed_points: &[FixedPoint],
    support: &[bool],
    mode: &MultiplicityMode,
    s0: i32,
) -> Result<MultiplicityAssignment> {
    if s0 != 1 && s0 != -1 {
        return Err(Error::InvalidMultiplicity(format!("s0 must be +1 or -1, got {s0}")));
    }
    let (convention, raw): (&str, Vec<i32>) = match mode {
        MultiplicityMode::Compact => {
            if family != Family::Su {
                return Err(Error::UnsupportedRealForm("compact mode needs the su family".into()));
            }
            ("constant", vec![1; fixed_points.len()])
        }
        MultiplicityMode::MaximallySplit => {
            if family != Family::SlReal {
                return Err(Error::UnsupportedRealForm("maximally split mode needs the sl_real family".into()));
            }
            ("det(w) * s0", fixed_points.iter().map(|fp| fp.sign * s0).collect())
        }
        MultiplicityMode::UserSupplied { values } => {
            for (label, v) in values {
                if !fixed_points.iter().any(|fp| &fp.label == label) {
                    return Err(Error::InvalidMultiplicity(format!("unknown Weyl label `{label}`")));
                }
                if !v.is_finite() || v.fract() != 0.0 {
                    return Err(Error::InvalidMultiplicity(format!("`{label}` = {v} is not an integer")));
                }
            }
            (
                "user",
                fixed_points
                    .iter()
                    .map(|fp| values.get(&fp.label).map(|v| *v as i32).unwrap_or(0))
                    .collect(),
            )
        }
    };
    let values = fixed_points
        .iter()
        .zip(raw)
        .zip(support)
        .map(|((fp, d), &on)| (fp.label.clone(), if on { d } else { 0 }))
        .collect();
    Ok(MultiplicityAssignment {
        mode: mode.tag().to_string(),
        values,
        s0,
        convention: convention.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{real_matrix, AlgebraSpec};
    use crate::cartan::cartan_of;
    use crate::linalg::c;
    use std::sync::Arc;

    fn standard(f: Family, n: usize) -> CartanDatum {
        CartanDatum::standard_upper(Arc::new(AlgebraSpec::build(f, n).unwrap())).unwrap()
    }

    fn lam(v: &[f64]) -> DVector<C64> {
        DVector::from_iterator(v.len(), v.iter().map(|x| c(*x, 0.0)))
    }

    #[test]
    fn counts_match_weyl_order() {
        assert_eq!(enumerate_fixed_points(&standard(Family::Su, 2), &lam(&[0.7])).unwrap().len(), 2);
        assert_eq!(
            enumerate_fixed_points(&standard(Family::SlReal, 3), &lam(&[1.0, 0.4])).unwrap().len(),
            6
        );
    }

    #[test]
    fn base_point_has_negative_roots() {
        let t = standard(Family::SlReal, 3);
        let fps = enumerate_fixed_points(&t, &lam(&[1.0, 0.4])).unwrap();
        assert_eq!(fps[0].label, "e");
        assert_eq!(fps[0].borel_roots, t.negative_roots());
        for fp in &fps {
            let mut all: Vec<usize> = fp.borel_roots.clone();
            for &a in &fp.borel_roots {
                all.push(t.find_root(&(-&t.roots()[a].coords)).unwrap());
            }
            all.sort();
            assert_eq!(all, (0..6).collect::<Vec<_>>());
        }
    }

    #[test]
    fn non_regular_lambda_rejected() {
        // lambda(H2) = 0 pairs to zero with the root e_2 - e_3
        let t = standard(Family::SlReal, 3);
        assert!(matches!(
            enumerate_fixed_points(&t, &lam(&[1.0, 0.0])),
            Err(Error::NonRegularLambda(_))
        ));
    }

    #[test]
    fn split_sl2() {
        let a = Arc::new(AlgebraSpec::build(Family::SlReal, 2).unwrap());
        let t = CartanDatum::standard_upper(a).unwrap();
        let (p1, p2) = split_positive_system(&t, &lam(&[1.0]), &t.positive_roots());
        assert!(p1.is_empty());
        assert_eq!(p2, t.positive_roots());
        let (q1, q2) = split_positive_system(&t, &lam(&[-1.0]), &t.positive_roots());
        assert_eq!((q1, q2), (p2, p1));
    }

    #[test]
    fn multiplicities() {
        let t = standard(Family::Su, 2);
        let fps = enumerate_fixed_points(&t, &lam(&[0.7])).unwrap();
        let sup = closed_orbit_support(&t, &fps).unwrap();
        let m = assign_multiplicities(Family::Su, &fps, &sup, &MultiplicityMode::Compact, 1).unwrap();
        assert_eq!(m.values, vec![("e".into(), 1), ("s1".into(), 1)]);

        let t = standard(Family::SlReal, 2);
        let fps = enumerate_fixed_points(&t, &lam(&[0.7])).unwrap();
        let sup = closed_orbit_support(&t, &fps).unwrap();
        assert_eq!(sup, vec![true, true]);
        let m = assign_multiplicities(Family::SlReal, &fps, &sup, &MultiplicityMode::MaximallySplit, 1).unwrap();
        assert_eq!(m.values, vec![("e".into(), 1), ("s1".into(), -1)]);
        let m2 = assign_multiplicities(Family::SlReal, &fps, &sup, &MultiplicityMode::MaximallySplit, -1).unwrap();
        assert_eq!(m2.values, vec![("e".into(), -1), ("s1".into(), 1)]);
        let m3 = assign_multiplicities(Family::SlReal, &fps, &[true, false], &MultiplicityMode::MaximallySplit, 1).unwrap();
        assert_eq!(m3.get("s1"), Some(0));
    }

    #[test]
    fn user_supplied_validation() {
        let t = standard(Family::SlReal, 2);
        let fps = enumerate_fixed_points(&t, &lam(&[0.7])).unwrap();
        let bad = MultiplicityMode::UserSupplied {
            values: [("e".to_string(), 0.5)].into_iter().collect(),
        };
        assert!(assign_multiplicities(Family::SlReal, &fps, &[true, true], &bad, 1).is_err());
        let unknown = MultiplicityMode::UserSupplied {
            values: [("s7".to_string(), 1.0)].into_iter().collect(),
        };
        assert!(assign_multiplicities(Family::SlReal, &fps, &[true, true], &unknown, 1).is_err());
        let ok = MultiplicityMode::UserSupplied {
            values: [("e".to_string(), 2.0)].into_iter().collect(),
        };
        let m = assign_multiplicities(Family::SlReal, &fps, &[true, true], &ok, 1).unwrap();
        assert_eq!(m.values, vec![("e".into(), 2), ("s1".into(), 0)]);
    }

    #[test]
    fn elliptic_cartan_borels_are_not_real() {
        let a = Arc::new(AlgebraSpec::build(Family::SlReal, 2).unwrap());
        let x = a.element_from_matrix(&real_matrix(2, &[0.0, 1.0, -1.0, 0.0])).unwrap();
        let t = cartan_of(a, &x).unwrap();
        let fps = enumerate_fixed_points(&t, &lam(&[0.7])).unwrap();
        assert_eq!(closed_orbit_support(&t, &fps).unwrap(), vec![false, false]);
    }
}
