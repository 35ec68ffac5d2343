//! Separately semi-modular and semi-additive set functions on products of two
//! semilattices, and their unique extensions: sectionwise to the product of
//! the generated lattices, and strongly additively to the ring generated by
//! the rectangles, realized concretely on the product ground set.

use crate::linalg::{self, Solve};
use crate::semimodular::{
    deciders, extend_to_lattice, is_semiadditive, EnumWitness, SemimodularDecider, SetFunction,
    SolverDecider,
};
use crate::set_core::{generate_lattice, generate_ring, GroundSet, SetFamily, SubsetMask};
use crate::value::Value;
use crate::{Error, Result};
use num::rational::BigRational;
use num::Zero;
use std::collections::BTreeMap;

pub const PRODUCT_GROUND_CAP: usize = 16;

/// Product of two semilattice families; rectangles are indexed member pairs.
#[derive(Debug, Clone)]
pub struct ProductFamily {
    pub left: SetFamily,
    pub right: SetFamily,
}

impl ProductFamily {
    pub fn new(left: SetFamily, right: SetFamily) -> Result<Self> {
        if !left.is_semilattice() || !right.is_semilattice() {
            return Err(Error::NotSemilattice);
        }
        Ok(ProductFamily { left, right })
    }

    pub fn rectangles(&self) -> impl Iterator<Item = (SubsetMask, SubsetMask)> + '_ {
        self.left
            .sets
            .iter()
            .flat_map(move |a| self.right.sets.iter().map(move |b| (*a, *b)))
    }
}

/// A set function on the rectangles of a product family.
#[derive(Debug, Clone)]
pub struct ProductSetFunction {
    pub base: ProductFamily,
    pub values: BTreeMap<(SubsetMask, SubsetMask), Value>,
    pub dim: usize,
}

impl ProductSetFunction {
    pub fn new(
        base: ProductFamily,
        values: BTreeMap<(SubsetMask, SubsetMask), Value>,
        dim: usize,
    ) -> Result<Self> {
        for (a, b) in base.rectangles() {
            match values.get(&(a, b)) {
                None => {
                    return Err(Error::PartialDomain(format!(
                        "no value at rectangle {a:?} x {b:?}"
                    )))
                }
                Some(v) => v.check_dim(dim)?,
            }
        }
        Ok(ProductSetFunction { base, values, dim })
    }

    pub fn value(&self, a: SubsetMask, b: SubsetMask) -> &Value {
        &self.values[&(a, b)]
    }

    /// Section with the left coordinate frozen at `a`.
    pub fn section_left(&self, a: SubsetMask) -> SetFunction {
        let values = self
            .base
            .right
            .sets
            .iter()
            .map(|b| (*b, self.value(a, *b).clone()))
            .collect();
        SetFunction::new(self.base.right.clone(), values, self.dim).unwrap()
    }

    /// Section with the right coordinate frozen at `b`.
    pub fn section_right(&self, b: SubsetMask) -> SetFunction {
        let values = self
            .base
            .left
            .sets
            .iter()
            .map(|a| (*a, self.value(*a, b).clone()))
            .collect();
        SetFunction::new(self.base.left.clone(), values, self.dim).unwrap()
    }
}

/// Which coordinate a sectional certificate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coordinate {
    Left,
    Right,
}

#[derive(Debug, Clone)]
pub struct SectionCertificate {
    pub separately: bool,
    /// On failure: the frozen coordinate, the member it was frozen at, and
    /// the witness produced by the sectional decider.
    pub failing: Option<(Coordinate, SubsetMask, Option<EnumWitness>)>,
}

/// Runs both semi-modularity deciders on every section and checks agreement.
pub fn is_separately_semimodular(f: &ProductSetFunction) -> Result<SectionCertificate> {
    let all = deciders();
    for a in &f.base.left.sets {
        let sec = f.section_left(*a);
        for d in &all {
            let cert = d.decide(&sec)?;
            if !cert.semimodular {
                return Ok(SectionCertificate {
                    separately: false,
                    failing: Some((Coordinate::Left, *a, cert.witness)),
                });
            }
        }
    }
    for b in &f.base.right.sets {
        let sec = f.section_right(*b);
        for d in &all {
            let cert = d.decide(&sec)?;
            if !cert.semimodular {
                return Ok(SectionCertificate {
                    separately: false,
                    failing: Some((Coordinate::Right, *b, cert.witness)),
                });
            }
        }
    }
    Ok(SectionCertificate {
        separately: true,
        failing: None,
    })
}

pub fn is_separately_semiadditive(f: &ProductSetFunction) -> Result<SectionCertificate> {
    let sm = is_separately_semimodular(f)?;
    if !sm.separately {
        return Ok(sm);
    }
    for a in &f.base.left.sets {
        let rep = is_semiadditive(&f.section_left(*a))?;
        if !rep.semiadditive {
            return Ok(SectionCertificate {
                separately: false,
                failing: Some((Coordinate::Left, *a, rep.witness)),
            });
        }
    }
    for b in &f.base.right.sets {
        let rep = is_semiadditive(&f.section_right(*b))?;
        if !rep.semiadditive {
            return Ok(SectionCertificate {
                separately: false,
                failing: Some((Coordinate::Right, *b, rep.witness)),
            });
        }
    }
    Ok(SectionCertificate {
        separately: true,
        failing: None,
    })
}

/// Sectionwise extension to the product of the generated lattices. Both pass
/// orders are computed and must agree exactly.
pub fn product_extend_lattice(f: &ProductSetFunction) -> Result<ProductSetFunction> {
    let cert = is_separately_semimodular(f)?;
    if !cert.separately {
        return Err(Error::NotSemimodular(format!(
            "a section fails: {:?}",
            cert.failing
        )));
    }
    let left_lat = generate_lattice(&f.base.left)?;
    let right_lat = generate_lattice(&f.base.right)?;
    let left_first = extend_pass(f, true, &left_lat, &right_lat)?;
    let right_first = extend_pass(f, false, &left_lat, &right_lat)?;
    if left_first != right_first {
        return Err(Error::Internal(
            "sectionwise extension depends on the pass order".into(),
        ));
    }
    let base = ProductFamily::new(left_lat, right_lat)?;
    let out = ProductSetFunction::new(base, left_first, f.dim)?;
    for (a, b) in f.base.rectangles() {
        if out.value(a, b) != f.value(a, b) {
            return Err(Error::Internal(
                "lattice extension does not restrict to the input".into(),
            ));
        }
    }
    Ok(out)
}

fn extend_pass(
    f: &ProductSetFunction,
    left_first: bool,
    left_lat: &SetFamily,
    right_lat: &SetFamily,
) -> Result<BTreeMap<(SubsetMask, SubsetMask), Value>> {
    let mut stage = BTreeMap::new();
    if left_first {
        // extend each right-frozen section across the left lattice
        for b in &f.base.right.sets {
            let ext = extend_to_lattice(&f.section_right(*b))?;
            for a in &left_lat.sets {
                stage.insert((*a, *b), ext.value(*a).clone());
            }
        }
        // then extend each left-frozen section across the right lattice
        let mut out = BTreeMap::new();
        for a in &left_lat.sets {
            let values: BTreeMap<SubsetMask, Value> = f
                .base
                .right
                .sets
                .iter()
                .map(|b| (*b, stage[&(*a, *b)].clone()))
                .collect();
            let sec = SetFunction::new(f.base.right.clone(), values, f.dim)?;
            let ext = extend_to_lattice(&sec)?;
            for b in &right_lat.sets {
                out.insert((*a, *b), ext.value(*b).clone());
            }
        }
        Ok(out)
    } else {
        for a in &f.base.left.sets {
            let ext = extend_to_lattice(&f.section_left(*a))?;
            for b in &right_lat.sets {
                stage.insert((*a, *b), ext.value(*b).clone());
            }
        }
        let mut out = BTreeMap::new();
        for b in &right_lat.sets {
            let values: BTreeMap<SubsetMask, Value> = f
                .base
                .left
                .sets
                .iter()
                .map(|a| (*a, stage[&(*a, *b)].clone()))
                .collect();
            let sec = SetFunction::new(f.base.left.clone(), values, f.dim)?;
            let ext = extend_to_lattice(&sec)?;
            for a in &left_lat.sets {
                out.insert((*a, *b), ext.value(*a).clone());
            }
        }
        Ok(out)
    }
}

/// The strongly additive extension to the ring generated by the rectangles,
/// realized on the product ground set (pairs of ground elements). Ring
/// members are exactly the unions of atoms; values are evaluated on demand.
#[derive(Debug, Clone)]
pub struct ProductRingExtension {
    /// Ground set of pairs, lexicographic by (left element, right element).
    pub ground: GroundSet,
    /// Atom masks (pairs of factor-ring atoms) and their values.
    pub atoms: Vec<SubsetMask>,
    pub atom_values: Vec<Value>,
    pub dim: usize,
}

impl ProductRingExtension {
    pub fn rectangle_mask(
        left: &SetFamily,
        a: SubsetMask,
        right: &SetFamily,
        b: SubsetMask,
    ) -> SubsetMask {
        let nr = right.ground.len();
        let mut m = 0u32;
        for i in 0..left.ground.len() {
            if a.contains(i) {
                for j in 0..nr {
                    if b.contains(j) {
                        m |= 1 << (i * nr + j);
                    }
                }
            }
        }
        SubsetMask(m)
    }

    /// Value at a ring member (a union of atoms). Masks that are not unions
    /// of atoms are outside the generated ring and rejected.
    pub fn value(&self, m: SubsetMask) -> Result<Value> {
        let mut covered = SubsetMask::EMPTY;
        let mut v = Value::zero(self.dim);
        for (atom, av) in self.atoms.iter().zip(&self.atom_values) {
            if atom.subset_of(m) {
                covered = covered.union(*atom);
                v += av;
            }
        }
        if covered != m {
            return Err(Error::Invalid(format!(
                "{m:?} is not in the ring generated by the rectangles"
            )));
        }
        Ok(v)
    }
}

/// Extend a separately semi-additive product function to the generated ring.
///
/// Three routes are computed — left-first, right-first, and a direct rational
/// solve for the atom values on the product ground — and must agree exactly.
pub fn product_extend_ring(f: &ProductSetFunction) -> Result<ProductRingExtension> {
    let cert = is_separately_semiadditive(f)?;
    if !cert.separately {
        return Err(Error::NotSemimodular(format!(
            "a section fails semi-additivity: {:?}",
            cert.failing
        )));
    }
    let nl = f.base.left.ground.len();
    let nr = f.base.right.ground.len();
    if nl * nr > PRODUCT_GROUND_CAP {
        return Err(Error::CapExceeded(format!(
            "product ground has {} elements, cap is {PRODUCT_GROUND_CAP}",
            nl * nr
        )));
    }
    let labels: Vec<String> = f
        .base
        .left
        .ground
        .labels()
        .iter()
        .flat_map(|l| {
            f.base
                .right
                .ground
                .labels()
                .iter()
                .map(move |r| format!("{l}*{r}"))
        })
        .collect();
    let ground = GroundSet::with_cap(labels, PRODUCT_GROUND_CAP)?;

    // Factor rings and sectionwise atom values, left-first and right-first.
    let left_ring = generate_ring(&f.base.left)?;
    let right_ring = generate_ring(&f.base.right)?;
    let route_left = sectional_atom_tensor(f, true)?;
    let route_right = sectional_atom_tensor(f, false)?;
    if route_left != route_right {
        return Err(Error::Internal(
            "sectional ring extension depends on the pass order".into(),
        ));
    }

    // Direct route: rectangles as masks on the product ground, one rational
    // solve for additive atom values.
    let rect_masks: Vec<(SubsetMask, SubsetMask, SubsetMask)> = f
        .base
        .rectangles()
        .map(|(a, b)| {
            (
                a,
                b,
                ProductRingExtension::rectangle_mask(&f.base.left, a, &f.base.right, b),
            )
        })
        .collect();
    let mut atoms = Vec::new();
    let mut atom_pairs = Vec::new();
    for (i, la) in left_ring.atoms.iter().enumerate() {
        for (j, rb) in right_ring.atoms.iter().enumerate() {
            atoms.push(ProductRingExtension::rectangle_mask(
                &f.base.left,
                *la,
                &f.base.right,
                *rb,
            ));
            atom_pairs.push((i, j));
        }
    }
    let rows: Vec<Vec<BigRational>> = rect_masks
        .iter()
        .map(|(_, _, rm)| {
            atoms
                .iter()
                .map(|atom| {
                    if atom.subset_of(*rm) {
                        BigRational::from_integer(1.into())
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    let mut direct: Vec<Value> = Vec::with_capacity(atoms.len());
    let mut per_atom: Vec<Vec<BigRational>> = vec![Vec::with_capacity(f.dim); atoms.len()];
    for coord in 0..f.dim {
        let rhs: Vec<BigRational> = rect_masks
            .iter()
            .map(|(a, b, _)| f.value(*a, *b).coord(coord).clone())
            .collect();
        match linalg::solve(&rows, &rhs) {
            Solve::Solution(x) => {
                for (slot, xi) in per_atom.iter_mut().zip(x) {
                    slot.push(xi);
                }
            }
            Solve::Inconsistent(_) => {
                return Err(Error::Internal(
                    "separately semi-additive input yields an infeasible product system".into(),
                ))
            }
        }
    }
    for coords in per_atom {
        direct.push(Value(coords));
    }
    for (k, (i, j)) in atom_pairs.iter().enumerate() {
        if direct[k] != route_left[&(left_ring.atoms[*i], right_ring.atoms[*j])] {
            return Err(Error::Internal(
                "direct product solve disagrees with the sectional routes".into(),
            ));
        }
    }

    let out = ProductRingExtension {
        ground,
        atoms,
        atom_values: direct,
        dim: f.dim,
    };
    // Restriction to the rectangles.
    for (a, b, m) in &rect_masks {
        if out.value(*m)? != *f.value(*a, *b) {
            return Err(Error::Internal(
                "product ring extension does not restrict to the rectangles".into(),
            ));
        }
    }
    Ok(out)
}

/// Atom tensor via sectionwise ring extensions, in one pass order.
fn sectional_atom_tensor(
    f: &ProductSetFunction,
    left_first: bool,
) -> Result<BTreeMap<(SubsetMask, SubsetMask), Value>> {
    let left_ring = generate_ring(&f.base.left)?;
    let right_ring = generate_ring(&f.base.right)?;
    let mut out = BTreeMap::new();
    if left_first {
        // left-atom values per right member, then extend across the right
        let mut stage: BTreeMap<(SubsetMask, SubsetMask), Value> = BTreeMap::new();
        for b in &f.base.right.sets {
            let ext = crate::semimodular::extend_to_ring(&f.section_right(*b))?;
            for (i, la) in left_ring.atoms.iter().enumerate() {
                stage.insert((*la, *b), ext.atom_values[i].clone());
            }
        }
        for la in &left_ring.atoms {
            let values: BTreeMap<SubsetMask, Value> = f
                .base
                .right
                .sets
                .iter()
                .map(|b| (*b, stage[&(*la, *b)].clone()))
                .collect();
            let sec = SetFunction::new(f.base.right.clone(), values, f.dim)?;
            // sections of a separately semi-additive extension stay semi-modular
            let cert = SolverDecider.decide(&sec)?;
            if !cert.semimodular {
                return Err(Error::Internal(
                    "left-atom section lost semi-modularity".into(),
                ));
            }
            let ext = crate::semimodular::extend_to_ring(&sec)?;
            for (j, rb) in right_ring.atoms.iter().enumerate() {
                out.insert((*la, *rb), ext.atom_values[j].clone());
            }
        }
    } else {
        let mut stage: BTreeMap<(SubsetMask, SubsetMask), Value> = BTreeMap::new();
        for a in &f.base.left.sets {
            let ext = crate::semimodular::extend_to_ring(&f.section_left(*a))?;
            for (j, rb) in right_ring.atoms.iter().enumerate() {
                stage.insert((*a, *rb), ext.atom_values[j].clone());
            }
        }
        for rb in &right_ring.atoms {
            let values: BTreeMap<SubsetMask, Value> = f
                .base
                .left
                .sets
                .iter()
                .map(|a| (*a, stage[&(*a, *rb)].clone()))
                .collect();
            let sec = SetFunction::new(f.base.left.clone(), values, f.dim)?;
            let cert = SolverDecider.decide(&sec)?;
            if !cert.semimodular {
                return Err(Error::Internal(
                    "right-atom section lost semi-modularity".into(),
                ));
            }
            let ext = crate::semimodular::extend_to_ring(&sec)?;
            for (i, la) in left_ring.atoms.iter().enumerate() {
                out.insert((*la, *rb), ext.atom_values[i].clone());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set_core::masks;
    use crate::value::rat;

    /// FIXTURE-A as a factor: domain {1},{1,2},{1,3} with values 1,2,3.
    fn factor() -> (SetFamily, Vec<(u32, BigRational)>) {
        let g = GroundSet::of_size(3);
        let fam = SetFamily::new(g, masks(&[0b001, 0b011, 0b101])).unwrap();
        (
            fam,
            vec![(0b001, rat(1, 1)), (0b011, rat(2, 1)), (0b101, rat(3, 1))],
        )
    }

    fn tensor_fixture() -> ProductSetFunction {
        let (fam, vals) = factor();
        let base = ProductFamily::new(fam.clone(), fam).unwrap();
        let lookup: BTreeMap<u32, BigRational> = vals.into_iter().collect();
        let values = base
            .rectangles()
            .map(|(a, b)| {
                (
                    (a, b),
                    Value::scalar(&lookup[&a.0] * &lookup[&b.0]),
                )
            })
            .collect();
        ProductSetFunction::new(base, values, 1).unwrap()
    }

    #[test]
    fn product_of_scalars_is_separately_semimodular() {
        let f = tensor_fixture();
        assert!(is_separately_semimodular(&f).unwrap().separately);
        assert!(is_separately_semiadditive(&f).unwrap().separately);
    }

    #[test]
    fn failing_section_is_named() {
        // embed a non-modular section: left factor a full lattice, right factor
        // a chain; poison the section at right member {1}
        let g2 = GroundSet::of_size(2);
        let left = SetFamily::new(g2.clone(), masks(&[0b00, 0b01, 0b10, 0b11])).unwrap();
        let right = SetFamily::new(g2, masks(&[0b01, 0b11])).unwrap();
        let base = ProductFamily::new(left.clone(), right).unwrap();
        let values = base
            .rectangles()
            .map(|(a, b)| {
                let v = if b == SubsetMask(0b01) && a == SubsetMask(0b11) {
                    rat(1, 1)
                } else {
                    rat(0, 1)
                };
                ((a, b), Value::scalar(v))
            })
            .collect();
        let f = ProductSetFunction::new(base, values, 1).unwrap();
        let cert = is_separately_semimodular(&f).unwrap();
        assert!(!cert.separately);
        let (coord, frozen, _) = cert.failing.unwrap();
        assert_eq!(coord, Coordinate::Right);
        assert_eq!(frozen, SubsetMask(0b01));
    }

    #[test]
    fn lattice_extension_of_tensor() {
        let f = tensor_fixture();
        let ext = product_extend_lattice(&f).unwrap();
        // value at ({1,2,3}, {1,2,3}) = 4 * 4
        let full = SubsetMask(0b111);
        assert_eq!(ext.value(full, full), &Value::from_ints(&[16]));
    }

    #[test]
    fn zero_function_extends_to_zero() {
        let (fam, _) = factor();
        let base = ProductFamily::new(fam.clone(), fam).unwrap();
        let values = base
            .rectangles()
            .map(|r| (r, Value::zero(1)))
            .collect();
        let f = ProductSetFunction::new(base, values, 1).unwrap();
        let ext = product_extend_lattice(&f).unwrap();
        assert!(ext.values.values().all(|v| v.is_zero()));
    }

    #[test]
    fn ring_extension_atom_tensor_and_lshape() {
        // probability-like factors on 2-element grounds
        let g = GroundSet::of_size(2);
        let fam = SetFamily::new(g, masks(&[0b01, 0b11])).unwrap();
        let base = ProductFamily::new(fam.clone(), fam.clone()).unwrap();
        let pv: BTreeMap<u32, BigRational> =
            [(0b01u32, rat(1, 3)), (0b11, rat(1, 1))].into_iter().collect();
        let values = base
            .rectangles()
            .map(|(a, b)| ((a, b), Value::scalar(&pv[&a.0] * &pv[&b.0])))
            .collect();
        let f = ProductSetFunction::new(base, values, 1).unwrap();
        let ext = product_extend_ring(&f).unwrap();
        // atoms are the four pairs of factor atoms with tensor values
        let expect: BTreeMap<(u32, u32), BigRational> = [
            ((0b01u32, 0b01u32), rat(1, 9)),
            ((0b01, 0b10), rat(2, 9)),
            ((0b10, 0b01), rat(2, 9)),
            ((0b10, 0b10), rat(4, 9)),
        ]
        .into_iter()
        .collect();
        for (k, atom) in ext.atoms.iter().enumerate() {
            let found = expect.iter().any(|((a, b), v)| {
                ProductRingExtension::rectangle_mask(
                    &f.base.left,
                    SubsetMask(*a),
                    &f.base.right,
                    SubsetMask(*b),
                ) == *atom
                    && Value::scalar(v.clone()) == ext.atom_values[k]
            });
            assert!(found, "atom {atom:?} has unexpected value");
        }

        // L-shaped region: ({1} x {1,2}) union ({1,2} x {1})
        let r1 = ProductRingExtension::rectangle_mask(
            &f.base.left,
            SubsetMask(0b01),
            &f.base.right,
            SubsetMask(0b11),
        );
        let r2 = ProductRingExtension::rectangle_mask(
            &f.base.left,
            SubsetMask(0b11),
            &f.base.right,
            SubsetMask(0b01),
        );
        let l = r1.union(r2);
        let got = ext.value(l).unwrap();
        let want = Value::scalar(
            &pv[&0b01u32] * &pv[&0b11u32] + &pv[&0b11u32] * &pv[&0b01u32]
                - &pv[&0b01u32] * &pv[&0b01u32],
        );
        assert_eq!(got, want);
    }
}
