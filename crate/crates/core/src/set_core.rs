//! Ground-set combinatorics: the signed inclusion–exclusion weight, interval
//! sums and inversion on the subset order, set families with exact closure
//! flags, and generated lattices/rings with atoms and difference witnesses.

use crate::{Error, Result};
use num::rational::BigRational;
use num::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub const DEFAULT_GROUND_CAP: usize = 16;
pub const MAX_GROUND_CAP: usize = 24;

/// A finite labelled ground set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundSet {
    labels: Vec<String>,
}

impl GroundSet {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        Self::with_cap(labels, DEFAULT_GROUND_CAP)
    }

    pub fn with_cap(labels: Vec<String>, cap: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Invalid("ground set must be nonempty".into()));
        }
        let cap = cap.min(MAX_GROUND_CAP);
        if labels.len() > cap {
            return Err(Error::CapExceeded(format!(
                "ground set has {} elements, cap is {cap}",
                labels.len()
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(Error::Invalid(format!("duplicate label {l:?}")));
            }
        }
        Ok(GroundSet { labels })
    }

    pub fn of_size(n: usize) -> Self {
        GroundSet::new((1..=n).map(|i| format!("{i}")).collect()).unwrap()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Invalid(format!("unknown label {label:?}")))
    }

    pub fn full_mask(&self) -> SubsetMask {
        SubsetMask(((1u64 << self.len()) - 1) as u32)
    }

    pub fn mask_of_labels(&self, labels: &[String]) -> Result<SubsetMask> {
        let mut m = 0u32;
        for l in labels {
            m |= 1 << self.index_of(l)?;
        }
        Ok(SubsetMask(m))
    }

    pub fn labels_of_mask(&self, m: SubsetMask) -> Vec<String> {
        (0..self.len())
            .filter(|i| m.contains(*i))
            .map(|i| self.labels[i].clone())
            .collect()
    }
}

/// A subset of a ground set, as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubsetMask(pub u32);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    pub fn union(self, o: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 | o.0)
    }
    pub fn inter(self, o: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 & o.0)
    }
    pub fn diff(self, o: SubsetMask) -> SubsetMask {
        SubsetMask(self.0 & !o.0)
    }
    pub fn complement(self, ground: &GroundSet) -> SubsetMask {
        ground.full_mask().diff(self)
    }
    pub fn subset_of(self, o: SubsetMask) -> bool {
        self.0 & !o.0 == 0
    }
    pub fn contains(self, bit: usize) -> bool {
        self.0 >> bit & 1 == 1
    }
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let elems: Vec<String> = (0..32)
            .filter(|i| self.contains(*i))
            .map(|i| (i + 1).to_string())
            .collect();
        write!(f, "{{{}}}", elems.join(","))
    }
}

/// A finite subset of positive integers 1..=N, as a bitmask (bit i = integer i+1).
pub type IndexSet = SubsetMask;

/// Signed inclusion–exclusion weight: `(-1)^(1+|b|)`.
pub fn nu(b: IndexSet) -> BigRational {
    BigRational::from_integer(nu_i64(b).into())
}

pub(crate) fn nu_i64(b: IndexSet) -> i64 {
    if b.len() % 2 == 0 {
        -1
    } else {
        1
    }
}

/// Iterate all subsets of `sup` that contain `sub`.
pub fn interval_subsets(sub: SubsetMask, sup: SubsetMask) -> Vec<SubsetMask> {
    assert!(sub.subset_of(sup));
    let free = sup.diff(sub).0;
    let mut out = Vec::with_capacity(1 << free.count_ones());
    // Standard submask enumeration of the free bits.
    let mut s = free;
    loop {
        out.push(SubsetMask(s | sub.0));
        if s == 0 {
            break;
        }
        s = (s - 1) & free;
    }
    out.reverse();
    out
}

/// Sum of the weight over the subset interval `[a, b]`.
///
/// Equals `nu(a)` when `a == b` and `0` whenever `a` is a strict subset of `b`.
pub fn mobius_interval_sum(a: IndexSet, b: IndexSet) -> Result<BigRational> {
    if !a.subset_of(b) {
        return Err(Error::Invalid(format!("{a:?} is not a subset of {b:?}")));
    }
    let mut total = 0i64;
    for x in interval_subsets(a, b) {
        total += nu_i64(x);
    }
    Ok(BigRational::from_integer(total.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InversionDirection {
    Lower,
    Upper,
}

/// Interval-sum inversion on the subset order of `[n]`.
///
/// With `F(a,b) = sum of f over [a,b]`, computes for every set in the relevant
/// interval the weighted sum that the inversion identity equates to
/// `nu(b) f(b)` (direction `Lower`, anchor below) or `nu(a) f(a)` (`Upper`,
/// anchor above), and returns the recovered values of `f`.
pub fn mobius_invert(
    f: &BTreeMap<IndexSet, BigRational>,
    n: usize,
    anchor: IndexSet,
    direction: InversionDirection,
) -> Result<BTreeMap<IndexSet, BigRational>> {
    let full = SubsetMask(((1u64 << n) - 1) as u32);
    if !anchor.subset_of(full) {
        return Err(Error::Invalid("anchor outside [n]".into()));
    }
    for s in interval_subsets(SubsetMask::EMPTY, full) {
        if !f.contains_key(&s) {
            return Err(Error::PartialDomain(format!("f missing at {s:?}")));
        }
    }
    let interval_sum = |lo: SubsetMask, hi: SubsetMask| -> BigRational {
        let mut t = BigRational::zero();
        for y in interval_subsets(lo, hi) {
            t += &f[&y];
        }
        t
    };
    let mut out = BTreeMap::new();
    match direction {
        InversionDirection::Lower => {
            for b in interval_subsets(anchor, full) {
                let mut s = BigRational::zero();
                for y in interval_subsets(anchor, b) {
                    s += interval_sum(anchor, y) * nu(y);
                }
                // nu(b) is ±1, so dividing recovers f(b) exactly.
                let recovered = s / nu(b);
                if recovered != f[&b] {
                    return Err(Error::Internal(format!(
                        "inversion identity fails at {b:?}: got {recovered}, expected {}",
                        f[&b]
                    )));
                }
                out.insert(b, recovered);
            }
        }
        InversionDirection::Upper => {
            for a in interval_subsets(SubsetMask::EMPTY, anchor) {
                let mut s = BigRational::zero();
                for y in interval_subsets(a, anchor) {
                    s += interval_sum(y, anchor) * nu(y);
                }
                let recovered = s / nu(a);
                if recovered != f[&a] {
                    return Err(Error::Internal(format!(
                        "inversion identity fails at {a:?}: got {recovered}, expected {}",
                        f[&a]
                    )));
                }
                out.insert(a, recovered);
            }
        }
    }
    Ok(out)
}

/// Pointwise check of the indicator identities
/// `1_{inter A_n} = sum over nonempty b of nu(b) 1_{union over b}` and its
/// dual with union and intersection exchanged.
///
/// These hold for every family; a `false` return indicates a fault in the
/// caller's masks or in this implementation.
pub fn indicator_identity_check(ground: &GroundSet, family: &[SubsetMask]) -> Result<bool> {
    if family.is_empty() {
        return Err(Error::Invalid("empty family".into()));
    }
    let n = family.len();
    if n > 20 {
        return Err(Error::CapExceeded("family too large for 2^N enumeration".into()));
    }
    let full = SubsetMask(((1u64 << n) - 1) as u32);
    for x in 0..ground.len() {
        let mut lhs_inter = true;
        let mut lhs_union = false;
        for a in family {
            lhs_inter &= a.contains(x);
            lhs_union |= a.contains(x);
        }
        let mut sum_inter = 0i64; // dual side: sum nu(b) 1_{inter over b}
        let mut sum_union = 0i64; // primal side: sum nu(b) 1_{union over b}
        for b in interval_subsets(SubsetMask::EMPTY, full) {
            if b.is_empty() {
                continue;
            }
            let mut in_inter = true;
            let mut in_union = false;
            for (i, a) in family.iter().enumerate() {
                if b.contains(i) {
                    in_inter &= a.contains(x);
                    in_union |= a.contains(x);
                }
            }
            let w = nu_i64(b);
            if in_union {
                sum_union += w;
            }
            if in_inter {
                sum_inter += w;
            }
        }
        if (lhs_inter as i64) != sum_union || (lhs_union as i64) != sum_inter {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A finite collection of subsets with computed closure flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetFamily {
    pub ground: GroundSet,
    /// Deduplicated, ascending by mask value.
    pub sets: Vec<SubsetMask>,
    pub cap_closed: bool,
    pub cup_closed: bool,
}

impl SetFamily {
    pub fn new(ground: GroundSet, sets: Vec<SubsetMask>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::Invalid("set family must be nonempty".into()));
        }
        let full = ground.full_mask();
        for s in &sets {
            if !s.subset_of(full) {
                return Err(Error::GroundMismatch(format!(
                    "{s:?} has bits outside the {}-element ground set",
                    ground.len()
                )));
            }
        }
        let mut sets = sets;
        sets.sort();
        sets.dedup();
        let member = |m: SubsetMask| sets.binary_search(&m).is_ok();
        let mut cap_closed = true;
        let mut cup_closed = true;
        for i in 0..sets.len() {
            for j in i + 1..sets.len() {
                cap_closed &= member(sets[i].inter(sets[j]));
                cup_closed &= member(sets[i].union(sets[j]));
            }
        }
        Ok(SetFamily {
            ground,
            sets,
            cap_closed,
            cup_closed,
        })
    }

    pub fn contains(&self, m: SubsetMask) -> bool {
        self.sets.binary_search(&m).is_ok()
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn is_semilattice(&self) -> bool {
        self.cap_closed || self.cup_closed
    }
}

/// Closure report for a raw list of masks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyClassification {
    pub cap_closed: bool,
    pub cup_closed: bool,
    /// Whether every union of members that lies in the family already equals
    /// one of the members of the uniting collection (checked over antichain
    /// subcollections, exhaustively for small families).
    pub union_membership_property: bool,
    pub exhaustive: bool,
}

/// Deduplicate, compute closure flags, and test the union-membership property.
pub fn classify_family(family: &SetFamily) -> FamilyClassification {
    let sets = &family.sets;
    let n = sets.len();
    let exhaustive = n <= 12;
    let cap = if exhaustive { n } else { 4 };
    let mut property = true;
    // Antichain subcollections suffice: adding a comparable member changes
    // neither the union nor which member could realize it.
    let antichains = antichain_subcollections(sets, cap);
    'outer: for ac in &antichains {
        if ac.len() < 2 {
            continue;
        }
        let mut u = SubsetMask::EMPTY;
        for &i in ac {
            u = u.union(sets[i]);
        }
        if family.contains(u) && !ac.iter().any(|&i| sets[i] == u) {
            property = false;
            break 'outer;
        }
    }
    FamilyClassification {
        cap_closed: family.cap_closed,
        cup_closed: family.cup_closed,
        union_membership_property: property,
        exhaustive,
    }
}

/// All index subcollections of `sets` of size `2..=cap` that form antichains.
pub fn antichain_subcollections(sets: &[SubsetMask], cap: usize) -> Vec<Vec<usize>> {
    let n = sets.len();
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn rec(
        sets: &[SubsetMask],
        start: usize,
        cap: usize,
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if stack.len() >= 2 {
            out.push(stack.clone());
        }
        if stack.len() == cap {
            return;
        }
        for i in start..sets.len() {
            if stack
                .iter()
                .all(|&j| !sets[j].subset_of(sets[i]) && !sets[i].subset_of(sets[j]))
            {
                stack.push(i);
                rec(sets, i + 1, cap, stack, out);
                stack.pop();
            }
        }
    }
    rec(sets, 0, cap.min(n), &mut stack, &mut out);
    out
}

/// `{A^c : A in family}`; the closure flags swap.
pub fn complement_family(family: &SetFamily) -> SetFamily {
    let sets = family
        .sets
        .iter()
        .map(|s| s.complement(&family.ground))
        .collect();
    let out = SetFamily::new(family.ground.clone(), sets).unwrap();
    debug_assert_eq!(out.cap_closed, family.cup_closed);
    debug_assert_eq!(out.cup_closed, family.cap_closed);
    out
}

/// The lattice generated by `family` together with the empty set: all finite
/// unions (cap-closed input) or intersections (cup-closed input), closed under
/// both operations.
pub fn generate_lattice(family: &SetFamily) -> Result<SetFamily> {
    if !family.is_semilattice() {
        return Err(Error::NotSemilattice);
    }
    let mut members: Vec<SubsetMask> = family.sets.clone();
    members.push(SubsetMask::EMPTY);
    members.sort();
    members.dedup();
    loop {
        let mut added = false;
        let snapshot = members.clone();
        for i in 0..snapshot.len() {
            for j in i + 1..snapshot.len() {
                for m in [
                    snapshot[i].union(snapshot[j]),
                    snapshot[i].inter(snapshot[j]),
                ] {
                    if members.binary_search(&m).is_err() {
                        let pos = members.binary_search(&m).unwrap_err();
                        members.insert(pos, m);
                        added = true;
                    }
                }
            }
        }
        if !added {
            break;
        }
    }
    SetFamily::new(family.ground.clone(), members)
}

/// One disjoint-difference piece of a ring member: `big \ small` with both in
/// the generated lattice and `small` contained in `big`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferenceWitness {
    pub big: SubsetMask,
    pub small: SubsetMask,
}

/// The ring generated by a semi-lattice: closed under union, intersection and
/// difference, with atoms and per-member disjoint-difference witnesses.
#[derive(Debug, Clone)]
pub struct RingStructure {
    pub family: SetFamily,
    pub lattice: SetFamily,
    /// Minimal nonempty members, pairwise disjoint, ascending.
    pub atoms: Vec<SubsetMask>,
    /// For each ring member (by index into `family.sets`), the indices of its atoms.
    pub atom_of: Vec<Vec<usize>>,
    /// For each ring member, a disjoint union of lattice differences equal to it.
    pub witnesses: Vec<Vec<DifferenceWitness>>,
}

impl RingStructure {
    pub fn atom_indices_of(&self, m: SubsetMask) -> Result<&[usize]> {
        let idx = self
            .family
            .sets
            .binary_search(&m)
            .map_err(|_| Error::Invalid(format!("{m:?} is not a ring member")))?;
        Ok(&self.atom_of[idx])
    }
}

/// Fixpoint closure of the generated lattice under union, intersection and
/// difference, plus atom extraction and difference witnesses.
pub fn generate_ring(family: &SetFamily) -> Result<RingStructure> {
    let lattice = generate_lattice(family)?;
    let mut members: Vec<SubsetMask> = lattice.sets.clone();
    loop {
        let mut added = false;
        let snapshot = members.clone();
        for &a in &snapshot {
            for &b in &snapshot {
                for m in [a.union(b), a.inter(b), a.diff(b)] {
                    if members.binary_search(&m).is_err() {
                        let pos = members.binary_search(&m).unwrap_err();
                        members.insert(pos, m);
                        added = true;
                    }
                }
            }
        }
        if !added {
            break;
        }
    }
    let ring = SetFamily::new(family.ground.clone(), members)?;

    // Atom of a covered point x: intersection of all members containing x.
    let coverage = ring.sets.iter().fold(SubsetMask::EMPTY, |u, s| u.union(*s));
    let mut atoms: Vec<SubsetMask> = Vec::new();
    for x in 0..ring.ground.len() {
        if !coverage.contains(x) {
            continue;
        }
        let mut a = coverage;
        for s in &ring.sets {
            if s.contains(x) {
                a = a.inter(*s);
            }
        }
        if atoms.binary_search(&a).is_err() {
            let pos = atoms.binary_search(&a).unwrap_err();
            atoms.insert(pos, a);
        }
    }
    for (i, a) in atoms.iter().enumerate() {
        for b in atoms.iter().skip(i + 1) {
            if !a.inter(*b).is_empty() {
                return Err(Error::Internal(format!("atoms {a:?} and {b:?} overlap")));
            }
        }
        if !ring.contains(*a) {
            return Err(Error::Internal(format!("atom {a:?} escaped the ring")));
        }
    }

    let mut atom_of = Vec::with_capacity(ring.sets.len());
    for s in &ring.sets {
        let idx: Vec<usize> = atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| a.subset_of(*s))
            .map(|(i, _)| i)
            .collect();
        let rebuilt = idx
            .iter()
            .fold(SubsetMask::EMPTY, |u, &i| u.union(atoms[i]));
        if rebuilt != *s {
            return Err(Error::Internal(format!(
                "{s:?} is not the union of its atoms"
            )));
        }
        atom_of.push(idx);
    }

    // Witness per atom: minimal lattice member containing it, minus the rest.
    let mut atom_witness: Vec<DifferenceWitness> = Vec::with_capacity(atoms.len());
    for a in &atoms {
        let mut big = lattice
            .sets
            .iter()
            .copied()
            .filter(|l| a.subset_of(*l))
            .fold(ring.ground.full_mask(), |acc, l| acc.inter(l));
        if !lattice.contains(big) {
            return Err(Error::Internal("lattice not closed under intersection".into()));
        }
        let mut small = big.diff(*a);
        if !lattice.contains(small) {
            // Fall back to searching any nested lattice pair realizing the atom.
            let mut found = None;
            'search: for &b in &lattice.sets {
                if !a.subset_of(b) {
                    continue;
                }
                let c = b.diff(*a);
                if lattice.contains(c) {
                    found = Some((b, c));
                    break 'search;
                }
            }
            let (b, c) = found.ok_or_else(|| {
                Error::Internal(format!("no lattice difference realizes atom {a:?}"))
            })?;
            big = b;
            small = c;
        }
        atom_witness.push(DifferenceWitness { big, small });
    }
    let witnesses: Vec<Vec<DifferenceWitness>> = atom_of
        .iter()
        .map(|idx| idx.iter().map(|&i| atom_witness[i].clone()).collect())
        .collect();

    // Closure sanity: verified pairwise once more on the final member list.
    for &a in &ring.sets {
        for &b in &ring.sets {
            for m in [a.union(b), a.inter(b), a.diff(b)] {
                if !ring.contains(m) {
                    return Err(Error::Internal("ring closure check failed".into()));
                }
            }
        }
    }

    Ok(RingStructure {
        family: ring,
        lattice,
        atoms,
        atom_of,
        witnesses,
    })
}

pub fn masks(bits: &[u32]) -> Vec<SubsetMask> {
    bits.iter().map(|&b| SubsetMask(b)).collect()
}
