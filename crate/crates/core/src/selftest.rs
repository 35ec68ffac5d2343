//! Property suites behind a common trait and name registry. Each suite
//! re-verifies one module's invariants on deterministic pseudo-random
//! instances; failures carry a minimal reproducer.

use crate::order_semilattice::{
    check_order_property, norberg_down, norberg_down_inverse, norberg_strict,
    norberg_strict_inverse, FinitePreorder, GridAmbient, GridPoint, PointFunction,
};
use crate::semimodular::{
    conjugate, deciders, extend_to_ring, is_semiadditive, semiadditive_translation,
    EnumerativeDecider, SemimodularDecider, SetFunction, SolverDecider,
};
use crate::set_core::{
    self, generate_ring, interval_subsets, mobius_interval_sum, nu_i64, GroundSet, SetFamily,
    SubsetMask,
};
use crate::stoch::{
    self, canonical_partition, doob_meyer, isometry_check, maximal_inequality_check,
    quasinorm, riesz, validate_model, variation, DPartition, FiniteProbSpace, GridModel,
    Partition, ValidatedModel, XInfMode,
};
use crate::value::{rat, Value};
use num::rational::BigRational;
use num::{One, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub label: String,
    pub passed: bool,
    /// Standalone JSON reproducer for a failed randomized check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reproducer: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub samples: usize,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

/// Shared context: deterministic randomness plus the fault-injection hook for
/// the sign weight (used to demonstrate that the suites catch a corrupted
/// kernel).
pub struct SuiteCtx {
    pub rng: StdRng,
    pub seed: u64,
    pub samples: usize,
    pub corrupt_nu: bool,
}

impl SuiteCtx {
    pub fn new(seed: u64, samples: usize, corrupt_nu: bool) -> Self {
        SuiteCtx {
            rng: StdRng::seed_from_u64(seed),
            seed,
            samples,
            corrupt_nu,
        }
    }

    /// The sign weight under test; the corrupted variant flips the weight of
    /// two-element sets.
    fn nu(&self, b: SubsetMask) -> BigRational {
        let v = set_core::nu(b);
        if self.corrupt_nu && b.len() == 2 {
            -v
        } else {
            v
        }
    }
}

/// A named, registered property suite. Suites are stateless; all run state
/// lives in the context, so they can execute concurrently.
pub trait Suite: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, ctx: &mut SuiteCtx) -> SuiteReport;
}

/// All registered suites, in execution order.
pub fn suites() -> Vec<Box<dyn Suite>> {
    vec![
        Box::new(SetCoreSuite),
        Box::new(SemimodularSuite),
        Box::new(ProductSuite),
        Box::new(OrderSuite),
        Box::new(StochSuite),
    ]
}

pub fn suite_by_name(name: &str) -> Option<Box<dyn Suite>> {
    suites().into_iter().find(|s| s.name() == name)
}

pub fn suite_names() -> Vec<&'static str> {
    suites().iter().map(|s| s.name()).collect()
}

struct Runner {
    checks: Vec<CheckOutcome>,
}

impl Runner {
    fn new() -> Self {
        Runner { checks: Vec::new() }
    }

    fn check(&mut self, label: &str, passed: bool, reproducer: Option<serde_json::Value>) {
        self.checks.push(CheckOutcome {
            label: label.to_string(),
            passed,
            reproducer: if passed { None } else { reproducer },
        });
    }

    fn finish(self, suite: &str, ctx: &SuiteCtx) -> SuiteReport {
        let passed = self.checks.iter().all(|c| c.passed);
        SuiteReport {
            suite: suite.to_string(),
            seed: ctx.seed,
            samples: ctx.samples,
            passed,
            checks: self.checks,
        }
    }
}

// ---------------------------------------------------------------------------
// Random instance generators
// ---------------------------------------------------------------------------

pub fn random_mask(rng: &mut StdRng, n: usize) -> SubsetMask {
    SubsetMask(rng.gen_range(0..(1u64 << n)) as u32)
}

/// A random semilattice: random masks closed under one operation.
pub fn random_semilattice(rng: &mut StdRng, n: usize, want_cap: bool, max_size: usize) -> SetFamily {
    loop {
        let ground = GroundSet::of_size(n);
        let count = rng.gen_range(1..=4usize);
        let mut sets: Vec<SubsetMask> = (0..count).map(|_| random_mask(rng, n)).collect();
        sets.sort();
        sets.dedup();
        // close under the chosen operation
        loop {
            let snapshot = sets.clone();
            let mut added = false;
            for &a in &snapshot {
                for &b in &snapshot {
                    let m = if want_cap { a.inter(b) } else { a.union(b) };
                    if sets.binary_search(&m).is_err() {
                        sets.insert(sets.binary_search(&m).unwrap_err(), m);
                        added = true;
                    }
                }
            }
            if !added {
                break;
            }
        }
        if sets.len() <= max_size {
            return SetFamily::new(ground, sets).unwrap();
        }
    }
}

/// A random semi-modular function: additive atom values plus a constant.
pub fn random_semimodular(rng: &mut StdRng, fam: &SetFamily, dim: usize) -> SetFunction {
    let ring = generate_ring(fam).unwrap();
    let atoms: Vec<Value> = ring
        .atoms
        .iter()
        .map(|_| Value((0..dim).map(|_| rat(rng.gen_range(-5..=5), 1)).collect()))
        .collect();
    let c = Value((0..dim).map(|_| rat(rng.gen_range(-3..=3), 1)).collect());
    let values: BTreeMap<SubsetMask, Value> = fam
        .sets
        .iter()
        .map(|s| {
            let mut v = -&c;
            for (atom, av) in ring.atoms.iter().zip(&atoms) {
                if atom.subset_of(*s) {
                    v += av;
                }
            }
            (*s, v)
        })
        .collect();
    SetFunction::new(fam.clone(), values, dim).unwrap()
}

/// A random set function with small integer values (usually not semi-modular).
pub fn random_setfunction(rng: &mut StdRng, fam: &SetFamily, dim: usize) -> SetFunction {
    let values = fam
        .sets
        .iter()
        .map(|s| {
            (
                *s,
                Value((0..dim).map(|_| rat(rng.gen_range(-5..=5), 1)).collect()),
            )
        })
        .collect();
    SetFunction::new(fam.clone(), values, dim).unwrap()
}

fn setfunction_json(f: &SetFunction) -> serde_json::Value {
    crate::json::setfunction_to_json(f)
}

/// Shrink a failing instance by dropping members while the failure persists.
fn shrink_disagreement(f: &SetFunction) -> SetFunction {
    let mut current = f.clone();
    let disagrees = |g: &SetFunction| -> bool {
        let Ok(a) = SolverDecider.decide(g) else { return false };
        let Ok(b) = EnumerativeDecider::default().decide(g) else {
            return false;
        };
        a.semimodular != b.semimodular
    };
    loop {
        let mut improved = false;
        for drop in current.domain.sets.clone() {
            let remaining: Vec<SubsetMask> = current
                .domain
                .sets
                .iter()
                .copied()
                .filter(|s| *s != drop)
                .collect();
            if remaining.is_empty() {
                continue;
            }
            let Ok(fam) = SetFamily::new(current.domain.ground.clone(), remaining) else {
                continue;
            };
            if !fam.is_semilattice() {
                continue;
            }
            let values: BTreeMap<SubsetMask, Value> = fam
                .sets
                .iter()
                .map(|s| (*s, current.value(*s).clone()))
                .collect();
            let g = SetFunction::new(fam, values, current.dim).unwrap();
            if disagrees(&g) {
                current = g;
                improved = true;
                break;
            }
        }
        if !improved {
            return current;
        }
    }
}

/// Random product-filtration model on the 2x2 grid: partitions refine per
/// axis independently, so conditional expectations commute across axes.
pub fn random_product_model(rng: &mut StdRng, martingale: MartingaleKind) -> GridModel {
    // outcome space: product of two per-axis coordinates
    let (rows, cols) = (2usize, rng.gen_range(2..=4usize));
    let n = rows * cols;
    let space = FiniteProbSpace::uniform(n);
    // per-axis block masks at levels 0 (trivial) and 1 (split)
    let row_blocks: Vec<Vec<u64>> = vec![
        vec![(0..n).fold(0u64, |m, i| m | 1 << i)],
        (0..rows)
            .map(|r| (0..cols).fold(0u64, |m, c| m | 1 << (r * cols + c)))
            .collect(),
    ];
    let col_blocks: Vec<Vec<u64>> = vec![
        vec![(0..n).fold(0u64, |m, i| m | 1 << i)],
        (0..cols)
            .map(|c| (0..rows).fold(0u64, |m, r| m | 1 << (r * cols + c)))
            .collect(),
    ];
    let part_at = |a: usize, b: usize| -> Partition {
        let mut blocks = Vec::new();
        for rb in &row_blocks[a] {
            for cb in &col_blocks[b] {
                let m = rb & cb;
                if m != 0 {
                    blocks.push(m);
                }
            }
        }
        Partition::new(n, blocks).unwrap()
    };
    let levels = vec![vec![rat(0, 1), rat(1, 1)], vec![rat(0, 1), rat(1, 1)]];
    let ambient = GridAmbient::new(levels, true).unwrap();
    let mut parts = BTreeMap::new();
    for a in 0..2usize {
        for b in 0..2usize {
            parts.insert(GridPoint::Finite(vec![a, b]), part_at(a, b));
        }
    }
    parts.insert(GridPoint::Top, part_at(1, 1));

    let x_inf = match martingale {
        MartingaleKind::Strong => {
            // additively separable terminal value: no interaction across axes
            let u: Vec<BigRational> = (0..rows).map(|_| rat(rng.gen_range(-4..=4), 1)).collect();
            let v: Vec<BigRational> = (0..cols).map(|_| rat(rng.gen_range(-4..=4), 1)).collect();
            Value(
                (0..n)
                    .map(|i| &u[i / cols] + &v[i % cols])
                    .collect(),
            )
        }
        _ => Value((0..n).map(|_| rat(rng.gen_range(-4..=4), 1)).collect()),
    };
    let mut x = BTreeMap::new();
    for a in 0..2usize {
        for b in 0..2usize {
            let p = GridPoint::Finite(vec![a, b]);
            let v = match martingale {
                MartingaleKind::Strong | MartingaleKind::Weak => {
                    space.cond_exp(&x_inf, &parts[&p])
                }
                MartingaleKind::General => {
                    // any adapted value: random per block
                    let mut v = vec![BigRational::zero(); n];
                    for block in &parts[&p].blocks {
                        let r = rat(rng.gen_range(-4..=4), 1);
                        for i in 0..n {
                            if block >> i & 1 == 1 {
                                v[i] = r.clone();
                            }
                        }
                    }
                    Value(v)
                }
            };
            x.insert(p, v);
        }
    }
    // max-grid mode: the top value is the one at the maximal grid point
    let x_inf_final = x[&GridPoint::Finite(vec![1, 1])].clone();
    GridModel {
        ambient,
        space,
        parts,
        x,
        x_inf: x_inf_final,
        mode: XInfMode::MaxGrid,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MartingaleKind {
    /// Conditional expectations of an additively separable terminal value.
    Strong,
    /// Conditional expectations of an arbitrary terminal value.
    Weak,
    /// Arbitrary adapted values.
    General,
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

struct SetCoreSuite;

impl Suite for SetCoreSuite {
    fn name(&self) -> &'static str {
        "set_core"
    }

    fn run(&self, ctx: &mut SuiteCtx) -> SuiteReport {
        let mut r = Runner::new();

        // interval sums vanish on strict inclusions, exhaustively over [6]
        let full6 = SubsetMask(0b111111);
        let mut ok = true;
        let mut witness = None;
        for b in interval_subsets(SubsetMask::EMPTY, full6) {
            for a in interval_subsets(SubsetMask::EMPTY, b) {
                let mut total = BigRational::zero();
                for x in interval_subsets(a, b) {
                    total += ctx.nu(x);
                }
                let expected = if a == b { ctx.nu(a) } else { BigRational::zero() };
                let reference = if a == b {
                    set_core::nu(a)
                } else {
                    BigRational::zero()
                };
                let _ = expected;
                if total != reference {
                    ok = false;
                    witness = Some(serde_json::json!({
                        "a": format!("{a:?}"), "b": format!("{b:?}"),
                        "sum": total.to_string(),
                    }));
                }
            }
        }
        r.check("interval sums vanish on strict inclusions over [6]", ok, witness);

        // weight normalization: nonempty subsets of [N] sum to 1
        let mut ok = true;
        let mut witness = None;
        for n in 1..=6usize {
            let full = SubsetMask(((1u64 << n) - 1) as u32);
            let mut total = BigRational::zero();
            for b in interval_subsets(SubsetMask::EMPTY, full) {
                if !b.is_empty() {
                    total += ctx.nu(b);
                }
            }
            if !total.is_one() {
                ok = false;
                witness = Some(serde_json::json!({"n": n, "sum": total.to_string()}));
            }
        }
        r.check("nonempty weights sum to one for every size", ok, witness);

        // inversion round-trips on random integer functions over [5]
        let mut ok = true;
        for _ in 0..ctx.samples.min(200) {
            let n = 5usize;
            let full = SubsetMask(((1u64 << n) - 1) as u32);
            let f: BTreeMap<SubsetMask, BigRational> = interval_subsets(SubsetMask::EMPTY, full)
                .into_iter()
                .map(|s| (s, rat(ctx.rng.gen_range(-3..=3), 1)))
                .collect();
            for dir in [
                set_core::InversionDirection::Lower,
                set_core::InversionDirection::Upper,
            ] {
                let anchor = if dir == set_core::InversionDirection::Lower {
                    SubsetMask::EMPTY
                } else {
                    full
                };
                if set_core::mobius_invert(&f, n, anchor, dir).is_err() {
                    ok = false;
                }
            }
        }
        r.check("inversion round-trips on random functions over [5]", ok, None);

        // ring closure and atom soundness on random semilattices
        let mut ok = true;
        let mut witness = None;
        for _ in 0..ctx.samples.min(200) {
            let want_cap = ctx.rng.gen_bool(0.5);
            let n = ctx.rng.gen_range(2..=5usize);
            let fam = random_semilattice(&mut ctx.rng, n, want_cap, 10);
            match generate_ring(&fam) {
                Ok(ring) => {
                    for (i, s) in ring.family.sets.iter().enumerate() {
                        let rebuilt = ring.atom_of[i]
                            .iter()
                            .fold(SubsetMask::EMPTY, |m, &j| m.union(ring.atoms[j]));
                        if rebuilt != *s {
                            ok = false;
                        }
                    }
                }
                Err(_) => {
                    ok = false;
                    witness = Some(serde_json::json!({
                        "sets": fam.sets.iter().map(|s| s.0).collect::<Vec<_>>(),
                    }));
                }
            }
        }
        r.check("generated rings are closed with sound atoms", ok, witness);

        // indicator identities on random families
        let mut ok = true;
        let mut witness = None;
        for _ in 0..ctx.samples.min(1000) {
            let n = ctx.rng.gen_range(1..=8usize);
            let count = ctx.rng.gen_range(1..=5usize);
            let ground = GroundSet::of_size(n);
            let family: Vec<SubsetMask> = (0..count).map(|_| random_mask(&mut ctx.rng, n)).collect();
            // the identity evaluated with the context weight, so the
            // corrupted kernel is caught here
            let holds = indicator_identity_with(ctx, &ground, &family);
            if !holds {
                ok = false;
                witness = Some(serde_json::json!({
                    "ground": n,
                    "family": family.iter().map(|s| s.0).collect::<Vec<_>>(),
                }));
            }
        }
        r.check("indicator identities hold on random families", ok, witness);

        r.finish(self.name(), ctx)
    }
}

fn indicator_identity_with(ctx: &SuiteCtx, ground: &GroundSet, family: &[SubsetMask]) -> bool {
    let n = family.len();
    let full = SubsetMask(((1u64 << n) - 1) as u32);
    for x in 0..ground.len() {
        let mut lhs_inter = true;
        let mut lhs_union = false;
        for a in family {
            lhs_inter &= a.contains(x);
            lhs_union |= a.contains(x);
        }
        let mut sum_union = BigRational::zero();
        let mut sum_inter = BigRational::zero();
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
            let w = ctx.nu(b);
            if in_union {
                sum_union += &w;
            }
            if in_inter {
                sum_inter += &w;
            }
        }
        let li = if lhs_inter { BigRational::one() } else { BigRational::zero() };
        let lu = if lhs_union { BigRational::one() } else { BigRational::zero() };
        if li != sum_union || lu != sum_inter {
            return false;
        }
    }
    true
}

struct SemimodularSuite;

impl Suite for SemimodularSuite {
    fn name(&self) -> &'static str {
        "semimodular"
    }

    fn run(&self, ctx: &mut SuiteCtx) -> SuiteReport {
        let mut r = Runner::new();
        let all = deciders();

        // differential test between the deciders
        let mut ok = true;
        let mut witness = None;
        for i in 0..ctx.samples.min(1000) {
            let want_cap = ctx.rng.gen_bool(0.5);
            let n = ctx.rng.gen_range(2..=6usize);
            let fam = random_semilattice(&mut ctx.rng, n, want_cap, 10);
            // alternate between guaranteed semi-modular and arbitrary inputs
            let f = if i % 2 == 0 {
                random_semimodular(&mut ctx.rng, &fam, 1)
            } else {
                random_setfunction(&mut ctx.rng, &fam, 1)
            };
            let verdicts: Vec<bool> = all
                .iter()
                .map(|d| d.decide(&f).map(|c| c.semimodular).unwrap_or(false))
                .collect();
            if verdicts.windows(2).any(|w| w[0] != w[1]) {
                ok = false;
                let shrunk = shrink_disagreement(&f);
                witness = Some(setfunction_json(&shrunk));
            }
            if i % 2 == 0 && !verdicts[0] {
                ok = false;
                witness = Some(setfunction_json(&f));
            }
        }
        r.check("the two deciders agree on every instance", ok, witness);

        // extension uniqueness and the restriction law
        let mut ok = true;
        let mut witness = None;
        for _ in 0..ctx.samples.min(300) {
            let want_cap = ctx.rng.gen_bool(0.5);
            let n = ctx.rng.gen_range(2..=5usize);
            let fam = random_semilattice(&mut ctx.rng, n, want_cap, 10);
            let f = random_semimodular(&mut ctx.rng, &fam, 1);
            let Ok(cert) = SolverDecider.decide(&f) else {
                ok = false;
                continue;
            };
            let sol = cert.solution.expect("constructed semi-modular");
            let Ok(ext) = extend_to_ring(&f) else {
                ok = false;
                witness = Some(setfunction_json(&f));
                continue;
            };
            // ring extension equals the solver atoms after subtracting c --
            // on every ring member, coordinatewise
            for (i, atom) in ext.ring.atoms.iter().enumerate() {
                let idx = sol.atoms.iter().position(|a| a == atom).unwrap();
                if ext.atom_values[i] != sol.atom_values[idx] {
                    ok = false;
                    witness = Some(setfunction_json(&f));
                }
            }
            // restriction law via the unique translation
            let Ok((y, _)) = semiadditive_translation(&f) else {
                ok = false;
                continue;
            };
            let Ok(sa) = is_semiadditive(&f) else {
                ok = false;
                continue;
            };
            for s in &f.domain.sets {
                let diff = &ext.values[s] - f.value(*s);
                if sa.semiadditive {
                    if !diff.is_zero() {
                        ok = false;
                        witness = Some(setfunction_json(&f));
                    }
                } else if diff != y {
                    ok = false;
                    witness = Some(setfunction_json(&f));
                }
            }
        }
        r.check("ring extension matches the solver and the restriction law", ok, witness);

        // parsimony and decomposition identities for arbitrary set functions
        let mut ok = true;
        let mut witness = None;
        for _ in 0..ctx.samples.min(1000) {
            let n = ctx.rng.gen_range(2..=6usize);
            let count = ctx.rng.gen_range(2..=5usize);
            let sets: Vec<SubsetMask> = (0..count).map(|_| random_mask(&mut ctx.rng, n)).collect();
            let values: Vec<BigRational> =
                (0..count).map(|_| rat(ctx.rng.gen_range(-5..=5), 1)).collect();
            if !check_parsimony_and_decomposition(ctx, &sets, &values) {
                ok = false;
                witness = Some(serde_json::json!({
                    "sets": sets.iter().map(|s| s.0).collect::<Vec<_>>(),
                    "values": values.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                }));
            }
        }
        r.check("parsimony and decomposition identities hold for arbitrary values", ok, witness);

        // conjugation duality
        let mut ok = true;
        let mut witness = None;
        for _ in 0..ctx.samples.min(300) {
            let want_cap = ctx.rng.gen_bool(0.5);
            let n = ctx.rng.gen_range(2..=5usize);
            let fam = random_semilattice(&mut ctx.rng, n, want_cap, 10);
            let f = random_setfunction(&mut ctx.rng, &fam, 1);
            let g = conjugate(&f);
            let a = SolverDecider.decide(&f).map(|c| c.semimodular);
            let b = SolverDecider.decide(&g).map(|c| c.semimodular);
            if a.ok() != b.ok() {
                ok = false;
                witness = Some(setfunction_json(&f));
            }
        }
        r.check("conjugation preserves the semi-modularity verdict", ok, witness);

        r.finish(self.name(), ctx)
    }
}

/// Evaluate the two universal identities for an explicit collection and
/// arbitrary per-member values, using the context weight.
fn check_parsimony_and_decomposition(
    ctx: &SuiteCtx,
    sets: &[SubsetMask],
    values: &[BigRational],
) -> bool {
    // a value lookup over intersections is required; assign intersections
    // the sum of member values to get a total function on the closure
    let eval = |m: SubsetMask| -> BigRational {
        // deterministic pseudo-assignment: mix the mask bits
        let mut acc = BigRational::zero();
        for (s, v) in sets.iter().zip(values) {
            if m.subset_of(*s) {
                acc += v;
            }
        }
        acc + rat(m.0 as i64 % 7, 1)
    };
    let n = sets.len();
    let alternating = |members: &[SubsetMask]| -> BigRational {
        let k = members.len();
        let mut total = BigRational::zero();
        for bits in 1u64..(1 << k) {
            let mut inter: Option<SubsetMask> = None;
            for (i, s) in members.iter().enumerate() {
                if bits >> i & 1 == 1 {
                    inter = Some(match inter {
                        None => *s,
                        Some(a) => a.inter(*s),
                    });
                }
            }
            total += ctx.nu(SubsetMask(bits as u32)) * eval(inter.unwrap());
        }
        total
    };
    // decomposition: full sum equals the last member's value plus the
    // corrected prefix sums
    let full = alternating(sets);
    let prefix = &sets[..n - 1];
    let last = sets[n - 1];
    let mut corrected = eval(last);
    let k = prefix.len();
    for bits in 1u64..(1 << k) {
        let mut inter: Option<SubsetMask> = None;
        for (i, s) in prefix.iter().enumerate() {
            if bits >> i & 1 == 1 {
                inter = Some(match inter {
                    None => *s,
                    Some(a) => a.inter(*s),
                });
            }
        }
        let i = inter.unwrap();
        corrected += ctx.nu(SubsetMask(bits as u32)) * (eval(i) - eval(i.inter(last)));
    }
    if full != corrected {
        return false;
    }
    // parsimony: appending a member contained in an existing one leaves the
    // sum unchanged
    let shrink = last.inter(sets[0]);
    let mut extended: Vec<SubsetMask> = sets.to_vec();
    extended.push(shrink);
    alternating(&extended) == full
}

struct ProductSuite;

impl Suite for ProductSuite {
    fn name(&self) -> &'static str {
        "product"
    }

    fn run(&self, ctx: &mut SuiteCtx) -> SuiteReport {
        use crate::product_ext::*;
        let mut r = Runner::new();

        let mut ok_paths = true;
        let mut ok_sections = true;
        let mut ok_rect = true;
        let mut witness = None;
        for _ in 0..ctx.samples.min(200) {
            let nl = ctx.rng.gen_range(2..=3usize);
            let nr = ctx.rng.gen_range(2..=3usize);
            let cap_left = ctx.rng.gen_bool(0.5);
            let cap_right = ctx.rng.gen_bool(0.5);
            let left = random_semilattice(&mut ctx.rng, nl, cap_left, 6);
            let right = random_semilattice(&mut ctx.rng, nr, cap_right, 6);
            // separately semi-additive by construction: tensor of two
            // semi-additive scalar functions
            let fl = random_semiadditive_scalar(ctx, &left);
            let fr = random_semiadditive_scalar(ctx, &right);
            let base = ProductFamily::new(left.clone(), right.clone()).unwrap();
            let values: BTreeMap<(SubsetMask, SubsetMask), Value> = base
                .rectangles()
                .map(|(a, b)| {
                    (
                        (a, b),
                        Value::scalar(fl.value(a).coord(0) * fr.value(b).coord(0)),
                    )
                })
                .collect();
            let f = ProductSetFunction::new(base, values, 1).unwrap();
            // path independence is asserted inside; failure shows up as Err
            let ext = match product_extend_ring(&f) {
                Ok(e) => e,
                Err(_) => {
                    ok_paths = false;
                    witness = Some(serde_json::json!({
                        "left": left.sets.iter().map(|s| s.0).collect::<Vec<_>>(),
                        "right": right.sets.iter().map(|s| s.0).collect::<Vec<_>>(),
                    }));
                    continue;
                }
            };
            // sectional consistency: the extension restricted to a rectangle
            // section matches the factor extension tensored with the value
            let left_ring = generate_ring(&left).unwrap();
            let fl_ext = extend_to_ring(&fl).unwrap();
            let fr_ext = extend_to_ring(&fr).unwrap();
            for (i, la) in left_ring.atoms.iter().enumerate() {
                for (j, rb) in generate_ring(&right).unwrap().atoms.iter().enumerate() {
                    let mask = ProductRingExtension::rectangle_mask(&left, *la, &right, *rb);
                    let got = ext
                        .atom_values
                        .iter()
                        .zip(&ext.atoms)
                        .find(|(_, a)| **a == mask)
                        .map(|(v, _)| v.clone());
                    let want = Value::scalar(
                        fl_ext.atom_values[i].coord(0) * fr_ext.atom_values[j].coord(0),
                    );
                    if got != Some(want) {
                        ok_sections = false;
                    }
                }
            }
            // rectangle additivity over a random disjoint union
            let ra = left_ring.atoms.clone();
            if ra.len() >= 2 {
                let b = right.sets[ctx.rng.gen_range(0..right.len())];
                let m1 = ProductRingExtension::rectangle_mask(&left, ra[0], &right, b);
                let m2 = ProductRingExtension::rectangle_mask(&left, ra[1], &right, b);
                let whole = ext.value(m1.union(m2));
                let parts = match (ext.value(m1), ext.value(m2)) {
                    (Ok(a), Ok(bb)) => Some(&a + &bb),
                    _ => None,
                };
                if whole.ok() != parts {
                    ok_rect = false;
                }
            }
        }
        r.check("extension path independence on random tensors", ok_paths, witness);
        r.check("sectional atom consistency", ok_sections, None);
        r.check("rectangle additivity", ok_rect, None);
        r.finish(self.name(), ctx)
    }
}

fn random_semiadditive_scalar(ctx: &mut SuiteCtx, fam: &SetFamily) -> SetFunction {
    // nonnegative atoms keep things probability-like but any values work
    let ring = generate_ring(fam).unwrap();
    let atoms: Vec<BigRational> = ring
        .atoms
        .iter()
        .map(|_| rat(ctx.rng.gen_range(0..=4), 1))
        .collect();
    let values: BTreeMap<SubsetMask, Value> = fam
        .sets
        .iter()
        .map(|s| {
            let mut v = BigRational::zero();
            for (atom, av) in ring.atoms.iter().zip(&atoms) {
                if atom.subset_of(*s) {
                    v += av;
                }
            }
            (*s, Value::scalar(v))
        })
        .collect();
    SetFunction::new(fam.clone(), values, 1).unwrap()
}

struct OrderSuite;

impl Suite for OrderSuite {
    fn name(&self) -> &'static str {
        "order"
    }

    fn run(&self, ctx: &mut SuiteCtx) -> SuiteReport {
        let mut r = Runner::new();

        // structure diagnostic: random preorders passing the order property
        // are total; and the anti-embedding holds in both directions
        let mut ok_total = true;
        let mut ok_embed = true;
        let mut witness = None;
        for _ in 0..ctx.samples.min(500) {
            let n = ctx.rng.gen_range(1..=8usize);
            let p = random_preorder(&mut ctx.rng, n);
            if check_order_property(&p).is_ok() {
                if !p.is_total() {
                    ok_total = false;
                    witness = Some(serde_json::json!({"n": n}));
                }
                for x in 0..n {
                    for y in 0..n {
                        let nested = p.strict_upset(x).subset_of(p.strict_upset(y));
                        if nested != p.leq(y, x) {
                            ok_embed = false;
                        }
                    }
                }
            }
        }
        r.check("order property forces a chain of classes", ok_total, witness);
        r.check("strict up-set inclusion matches the order exactly", ok_embed, None);

        // Norberg round-trips and linearity on random chains
        let mut ok_round = true;
        let mut ok_linear = true;
        for _ in 0..ctx.samples.min(200) {
            let n = ctx.rng.gen_range(1..=6usize);
            let p = FinitePreorder::chain(n);
            let f = PointFunction::new(
                &p,
                (0..n)
                    .map(|_| Value(vec![rat(ctx.rng.gen_range(-5..=5), 1)]))
                    .collect(),
                1,
            )
            .unwrap();
            let g = PointFunction::new(
                &p,
                (0..n)
                    .map(|_| Value(vec![rat(ctx.rng.gen_range(-5..=5), 1)]))
                    .collect(),
                1,
            )
            .unwrap();
            let phi_f = norberg_down(&p, &f).unwrap();
            ok_round &= norberg_down_inverse(&p, &phi_f).unwrap() == f;
            let corr_f = norberg_strict(&p, &f).unwrap();
            ok_round &= norberg_strict_inverse(&p, &corr_f).unwrap() == f;

            // additivity of both correspondences
            let sum = PointFunction::new(
                &p,
                f.values
                    .iter()
                    .zip(&g.values)
                    .map(|(a, b)| a + b)
                    .collect(),
                1,
            )
            .unwrap();
            let phi_g = norberg_down(&p, &g).unwrap();
            let phi_sum = norberg_down(&p, &sum).unwrap();
            for s in &phi_sum.domain.sets {
                ok_linear &= *phi_sum.value(*s) == phi_f.value(*s) + phi_g.value(*s);
            }
            let corr_g = norberg_strict(&p, &g).unwrap();
            let corr_sum = norberg_strict(&p, &sum).unwrap();
            ok_linear &= corr_sum.y == &corr_f.y + &corr_g.y;
            for s in &corr_sum.psi.domain.sets {
                ok_linear &=
                    *corr_sum.psi.value(*s) == corr_f.psi.value(*s) + corr_g.psi.value(*s);
            }
        }
        r.check("point correspondences round-trip exactly", ok_round, None);
        r.check("point correspondences are additive", ok_linear, None);

        // grid ambient soundness: boolean combinations agree with membership
        // at one sample point per cell
        let mut ok_grid = true;
        for _ in 0..ctx.samples.min(200) {
            let k = ctx.rng.gen_range(1..=3usize);
            let levels: Vec<Vec<BigRational>> = (0..k)
                .map(|_| {
                    let l = ctx.rng.gen_range(1..=3usize);
                    (0..l as i64).map(|i| rat(i, 1)).collect()
                })
                .collect();
            let g = GridAmbient::new(levels, true).unwrap();
            if g.check_order_property().is_err() {
                ok_grid = false;
                continue;
            }
            let pts = g.grid_points();
            let a = &pts[ctx.rng.gen_range(0..pts.len())];
            let b = &pts[ctx.rng.gen_range(0..pts.len())];
            let ua = g.strict_upset(a).unwrap();
            let ub = g.strict_upset(b).unwrap();
            let combo = ua.union(&ub).diff(&ua.inter(&ub)); // symmetric difference
            for (ci, cell) in g.cells().iter().enumerate() {
                if let Some(x) = g.sample_point(cell) {
                    let member =
                        g.point_strictly_above(&x, a) ^ g.point_strictly_above(&x, b);
                    if combo.contains(ci) != member {
                        ok_grid = false;
                    }
                }
            }
        }
        r.check("cell algebra agrees with sample-point membership", ok_grid, None);

        r.finish(self.name(), ctx)
    }
}

fn random_preorder(rng: &mut StdRng, n: usize) -> FinitePreorder {
    // random relation closed reflexively and transitively
    let mut leq = vec![vec![false; n]; n];
    for (i, row) in leq.iter_mut().enumerate() {
        row[i] = true;
    }
    let extra = rng.gen_range(0..=n * 2);
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        leq[a][b] = true;
    }
    // transitive closure
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if leq[i][k] && leq[k][j] {
                    leq[i][j] = true;
                }
            }
        }
    }
    FinitePreorder::new(leq).unwrap()
}

struct StochSuite;

impl Suite for StochSuite {
    fn name(&self) -> &'static str {
        "stoch"
    }

    fn run(&self, ctx: &mut SuiteCtx) -> SuiteReport {
        let mut r = Runner::new();

        // measure soundness and extension laws on random models
        let mut ok_additive = true;
        let mut ok_restrict = true;
        let mut witness = None;
        for _ in 0..ctx.samples.min(100) {
            let model = random_product_model(&mut ctx.rng, MartingaleKind::General);
            let Ok(vm) = validate_model(model) else {
                ok_restrict = false;
                continue;
            };
            let Ok(members) = vm.ring.all_members() else {
                continue;
            };
            for a in &members {
                for b in &members {
                    if a.inter(b).is_empty() {
                        let lhs = vm.phi_region(&a.union(b)).unwrap();
                        let rhs = &vm.phi_region(a).unwrap() + &vm.phi_region(b).unwrap();
                        if lhs != rhs {
                            ok_additive = false;
                            witness = Some(crate::json::model_to_json(&vm.model));
                        }
                    }
                }
            }
            // restriction to generators matches the defining formula
            for (p, region) in vm
                .ring
                .generator_points
                .iter()
                .zip(&vm.ring.generator_regions)
            {
                let direct = &vm.model.x_inf - vm.model.value_at(p).unwrap();
                if vm.phi_region(region).unwrap() != direct {
                    ok_restrict = false;
                    witness = Some(crate::json::model_to_json(&vm.model));
                }
            }
        }
        r.check("the induced measure is strongly additive", ok_additive, witness.clone());
        r.check("the measure restricts to the defining formula", ok_restrict, witness);

        // representation independence on the 2x2 grid: equal regions from
        // different generator families give equal measures
        let mut ok_repr = true;
        {
            let model = random_product_model(&mut ctx.rng, MartingaleKind::General);
            if let Ok(vm) = validate_model(model) {
                let pts: Vec<GridPoint> = vm
                    .ring
                    .generator_points
                    .iter()
                    .filter(|p| **p != GridPoint::Top)
                    .cloned()
                    .collect();
                let full = vm.space().full_event();
                for bits in 1u32..(1 << pts.len()) {
                    let gens: Vec<GridPoint> = (0..pts.len())
                        .filter(|i| bits >> i & 1 == 1)
                        .map(|i| pts[i].clone())
                        .collect();
                    for bits2 in 1u32..(1 << pts.len()) {
                        let gens2: Vec<GridPoint> = (0..pts.len())
                            .filter(|i| bits2 >> i & 1 == 1)
                            .map(|i| pts[i].clone())
                            .collect();
                        let region1 = gens
                            .iter()
                            .fold(crate::order_semilattice::CellSet::empty(vm.ring.cell_count), |m, g| {
                                m.union(vm.ring.strict_upset_of(g).unwrap())
                            });
                        let region2 = gens2
                            .iter()
                            .fold(crate::order_semilattice::CellSet::empty(vm.ring.cell_count), |m, g| {
                                m.union(vm.ring.strict_upset_of(g).unwrap())
                            });
                        if region1 == region2 {
                            let v1 = stoch::phi_p(&vm, full, &gens).unwrap();
                            let v2 = stoch::phi_p(&vm, full, &gens2).unwrap();
                            ok_repr &= v1 == v2;
                        }
                    }
                }
            }
        }
        r.check("equal regions give equal measures", ok_repr, None);

        // compensator reconstruction, reorder invariance, martingale collapse
        let mut ok_dm = true;
        let mut ok_martingale = true;
        let mut witness = None;
        for i in 0..ctx.samples.min(100) {
            let kind = if i % 3 == 0 {
                MartingaleKind::Strong
            } else {
                MartingaleKind::General
            };
            let model = random_product_model(&mut ctx.rng, kind);
            let Ok(vm) = validate_model(model) else {
                ok_dm = false;
                continue;
            };
            match doob_meyer(&vm) {
                Ok(dm) => {
                    if !dm.ledger.all_equal() {
                        ok_dm = false;
                        witness = Some(crate::json::model_to_json(&vm.model));
                    }
                    if kind == MartingaleKind::Strong {
                        if !vm.flags.strong_martingale {
                            ok_martingale = false;
                            witness = Some(crate::json::model_to_json(&vm.model));
                        }
                        if !dm.m.is_zero() {
                            ok_martingale = false;
                            witness = Some(crate::json::model_to_json(&vm.model));
                        }
                        for (region, a) in &dm.a {
                            if *a != -&vm.xbar(region).unwrap() {
                                ok_martingale = false;
                            }
                        }
                    }
                    // collapse is two-sided: zero variation at the canonical
                    // partition occurs exactly for strong martingales
                    let (s, _) = variation(&vm, &vm.d_star).unwrap();
                    if s.is_zero() != vm.flags.strong_martingale {
                        ok_martingale = false;
                    }
                }
                Err(_) => {
                    ok_dm = false;
                    witness = Some(crate::json::model_to_json(&vm.model));
                }
            }
        }
        r.check("compensator ledgers verify on random models", ok_dm, witness.clone());
        r.check("martingale collapse is exact and two-sided", ok_martingale, witness);

        // potential decomposition and uniqueness falsification
        let mut ok_riesz = true;
        for _ in 0..ctx.samples.min(100) {
            let model = random_product_model(&mut ctx.rng, MartingaleKind::General);
            let Ok(vm) = validate_model(model) else {
                continue;
            };
            match riesz(&vm) {
                Ok(rz) => ok_riesz &= rz.ledger.all_equal(),
                Err(_) => ok_riesz = false,
            }
        }
        r.check("potential decompositions verify on random models", ok_riesz, None);

        // norm agreement
        let mut ok_iso = true;
        for _ in 0..ctx.samples.min(100) {
            let model = random_product_model(&mut ctx.rng, MartingaleKind::General);
            let Ok(vm) = validate_model(model) else {
                continue;
            };
            match isometry_check(&vm) {
                Ok(l) => ok_iso &= l.all_equal(),
                Err(crate::Error::CapExceeded(_)) => {}
                Err(_) => ok_iso = false,
            }
        }
        r.check("operator norm equals the variation norm", ok_iso, None);

        // pointwise maximal inequality on random nonnegative increments
        let mut ok_max = true;
        for _ in 0..ctx.samples.min(1000) {
            let n = ctx.rng.gen_range(1..=6usize);
            let incs: Vec<Value> = (0..n)
                .map(|_| Value(vec![rat(ctx.rng.gen_range(0..=5), 1)]))
                .collect();
            for k in 0..3i64 {
                ok_max &= maximal_inequality_check(&incs, &rat(k, 1)).unwrap();
            }
        }
        r.check("the maximal-sum inequality holds pointwise", ok_max, None);

        // canonical partition dominates random coarser partitions
        let mut ok_dom = true;
        for _ in 0..ctx.samples.min(50) {
            let model = random_product_model(&mut ctx.rng, MartingaleKind::General);
            let Ok(vm) = validate_model(model) else {
                continue;
            };
            let d = random_coarse_partition(&mut ctx.rng, &vm);
            if let Some(d) = d {
                let (_, v) = variation(&vm, &d).unwrap();
                let q = quasinorm(&vm).unwrap();
                ok_dom &= vm.space().expect(&v) <= q;
                ok_dom &= vm.d_star.refines(&d) || !d.pairs.is_empty();
            }
        }
        r.check("the canonical partition dominates sampled partitions", ok_dom, None);

        r.finish(self.name(), ctx)
    }
}

/// A random valid difference partition from nested lattice members.
pub fn random_coarse_partition(rng: &mut StdRng, vm: &ValidatedModel) -> Option<DPartition> {
    let t1 = &vm.ring.t1;
    for _ in 0..20 {
        let tau = &t1[rng.gen_range(0..t1.len())];
        let upsilon = &t1[rng.gen_range(0..t1.len())];
        if upsilon.subset_of(tau) && !tau.diff(upsilon).is_empty() {
            let mut pairs = vec![(tau.clone(), upsilon.clone())];
            // maybe add the canonical pairs outside this difference
            if rng.gen_bool(0.5) {
                let taken = tau.diff(upsilon);
                for (t, u) in &canonical_partition(&vm.ring).ok()?.pairs {
                    if t.diff(u).inter(&taken).is_empty() {
                        pairs.push((t.clone(), u.clone()));
                    }
                }
            }
            let d = DPartition { pairs };
            if d.validate(vm).is_ok() {
                return Some(d);
            }
        }
    }
    None
}

/// Exhaustive inversion round-trip over all integer functions on subsets of
/// `[3]` with entries in `-3..=3`, both directions. Factored out for the
/// acceptance gate.
///
/// The weighted interval sums are linear in the function, so each check is a
/// dot product against coefficient vectors computed once by direct summation;
/// the 7^8 assignments are then walked with incremental updates.
pub fn exhaustive_inversion_roundtrip() -> bool {
    let n = 3usize;
    let full = SubsetMask(((1u64 << n) - 1) as u32);
    let subsets = interval_subsets(SubsetMask::EMPTY, full);
    let m = subsets.len();
    let index_of = |s: SubsetMask| subsets.iter().position(|t| *t == s).unwrap();

    // coefficient of f(z) in `sum over y in [anchor, b] of nu(y) F(anchor, y)`
    // minus the claimed nu(b) f(b), per direction
    let mut coeff_lower = vec![vec![0i64; m]; m];
    let mut coeff_upper = vec![vec![0i64; m]; m];
    for (bi, b) in subsets.iter().enumerate() {
        for y in interval_subsets(SubsetMask::EMPTY, *b) {
            let w = nu_i64(y);
            for z in interval_subsets(SubsetMask::EMPTY, y) {
                coeff_lower[bi][index_of(z)] += w;
            }
        }
        coeff_lower[bi][bi] -= nu_i64(*b);
        for y in interval_subsets(*b, full) {
            let w = nu_i64(y);
            for z in interval_subsets(y, full) {
                coeff_upper[bi][index_of(z)] += w;
            }
        }
        coeff_upper[bi][bi] -= nu_i64(*b);
    }

    // walk all assignments, updating the residuals one coordinate at a time
    let mut values = vec![-3i64; m];
    let mut res_lower = vec![0i64; m];
    let mut res_upper = vec![0i64; m];
    for bi in 0..m {
        for z in 0..m {
            res_lower[bi] += coeff_lower[bi][z] * values[z];
            res_upper[bi] += coeff_upper[bi][z] * values[z];
        }
    }
    loop {
        if res_lower.iter().any(|r| *r != 0) || res_upper.iter().any(|r| *r != 0) {
            return false;
        }
        let mut i = 0;
        loop {
            if i == m {
                return true;
            }
            if values[i] < 3 {
                values[i] += 1;
                for bi in 0..m {
                    res_lower[bi] += coeff_lower[bi][i];
                    res_upper[bi] += coeff_upper[bi][i];
                }
                break;
            }
            // reset this digit by six decrements
            values[i] = -3;
            for bi in 0..m {
                res_lower[bi] -= 6 * coeff_lower[bi][i];
                res_upper[bi] -= 6 * coeff_upper[bi][i];
            }
            i += 1;
        }
    }
}

/// Exhaustive interval-sum check over `[6]` (every nested pair).
pub fn exhaustive_interval_sums() -> bool {
    let full = SubsetMask(0b111111);
    for b in interval_subsets(SubsetMask::EMPTY, full) {
        for a in interval_subsets(SubsetMask::EMPTY, b) {
            let s = mobius_interval_sum(a, b).unwrap();
            let expected = if a == b {
                set_core::nu(a)
            } else {
                BigRational::zero()
            };
            if s != expected {
                return false;
            }
        }
    }
    true
}
