//! Cross-module workflows: the zero-at-infinity convention on chain models,
//! the decomposition identity where its preconditions hold, the classical
//! one-parameter compensator as an oracle, and end-to-end pipelines from
//! point functions down to ring extensions.

use num::rational::BigRational;
use num::Signed;
use semimeas::order_semilattice::{CellSet, GridAmbient, GridPoint};
use semimeas::semimodular::{extend_to_ring, SetFunction};
use semimeas::set_core::{masks, GroundSet, SetFamily};
use semimeas::stoch::{
    doob_meyer, mu_alpha, quasinorm, stopping_diagnostics, validate_model, DPartition,
    FiniteProbSpace, GridModel, Partition, SimpleStoppingTime, ValidatedModel, XInfMode,
};
use semimeas::value::{rat, Value};
use std::collections::BTreeMap;

/// A three-level chain model: four outcomes, binary split at level 1,
/// full split at level 2.
fn chain_model(x0: [i64; 4], x1: [i64; 4], x2: [i64; 4], mode: XInfMode) -> GridModel {
    let space = FiniteProbSpace::uniform(4);
    let levels = vec![vec![rat(0, 1), rat(1, 1), rat(2, 1)]];
    let ambient = GridAmbient::new(levels, true).unwrap();
    let mut parts = BTreeMap::new();
    parts.insert(GridPoint::Finite(vec![0]), Partition::trivial(4));
    parts.insert(
        GridPoint::Finite(vec![1]),
        Partition::new(4, vec![0b0011, 0b1100]).unwrap(),
    );
    parts.insert(GridPoint::Finite(vec![2]), Partition::discrete(4));
    parts.insert(GridPoint::Top, Partition::discrete(4));
    let mut x = BTreeMap::new();
    x.insert(GridPoint::Finite(vec![0]), Value::from_ints(&x0));
    x.insert(GridPoint::Finite(vec![1]), Value::from_ints(&x1));
    x.insert(GridPoint::Finite(vec![2]), Value::from_ints(&x2));
    let x_inf = match mode {
        XInfMode::MaxGrid => Value::from_ints(&x2),
        XInfMode::ZeroAtInfinity => Value::zero(4),
    };
    GridModel {
        ambient,
        space,
        parts,
        x,
        x_inf,
        mode,
    }
}

fn upset(vm: &ValidatedModel, level: usize) -> CellSet {
    vm.ring
        .strict_upset_of(&GridPoint::Finite(vec![level]))
        .unwrap()
        .clone()
}

#[test]
fn zero_at_infinity_chain_validates_and_extends() {
    // a supermartingale under the added-point convention
    let model = chain_model([6, 6, 6, 6], [5, 5, 3, 3], [4, 2, 2, 0], XInfMode::ZeroAtInfinity);
    let vm = validate_model(model).unwrap();
    assert!(vm.flags.supermartingale);
    // extension at a difference region is the process increment
    let d01 = upset(&vm, 0).diff(&upset(&vm, 1));
    // value = x(0) - x(1) under the zero convention
    let got = vm.xbar(&d01).unwrap();
    assert_eq!(got, Value::from_ints(&[1, 1, 3, 3]));
    // the difference value carries right-endpoint information: measurable at
    // the partition of level 1, not at the region's (left-anchored) filtration
    assert!(vm.model.parts[&GridPoint::Finite(vec![1])].measurable(&got));
    assert_eq!(vm.filtration_at(&d01).unwrap(), Partition::trivial(4));
    // on lattice regions the extension is adapted
    for region in &vm.ring.t1 {
        let v = vm.xbar(region).unwrap();
        assert!(vm.filtration_at(region).unwrap().measurable(&v));
    }
}

#[test]
fn decomposition_identity_asserted_on_zero_mode_chains() {
    let model = chain_model([6, 6, 6, 6], [5, 5, 3, 3], [4, 2, 2, 0], XInfMode::ZeroAtInfinity);
    let vm = validate_model(model).unwrap();
    let tau = upset(&vm, 1);
    for event in [0b1111u64, 0b0011, 0b0101, 0b0001] {
        let rep = mu_alpha(&vm, &vm.d_star, &tau, event).unwrap();
        assert!(rep.anchors_comparable);
        assert!(rep.identity_asserted);
        assert!(rep.ledger.all_equal(), "{:?}", rep.ledger.first_failure());
    }
}

#[test]
fn max_grid_chains_record_the_identity_without_asserting() {
    let model = chain_model([4, 4, 4, 4], [5, 5, 3, 3], [6, 4, 4, 2], XInfMode::MaxGrid);
    let vm = validate_model(model).unwrap();
    let tau = upset(&vm, 1);
    let rep = mu_alpha(&vm, &vm.d_star, &tau, 0b1111).unwrap();
    assert!(rep.anchors_comparable);
    assert!(!rep.identity_asserted);
    // the two-route agreement for the first measure is always exact
    assert!(rep.ledger.entries[0].equal);
}

#[test]
fn chain_compensator_matches_the_classical_construction() {
    // strict supermartingale on the chain
    let model = chain_model([6, 6, 6, 6], [5, 5, 3, 3], [4, 2, 2, 0], XInfMode::MaxGrid);
    let vm = validate_model(model).unwrap();
    assert!(vm.flags.supermartingale && !vm.flags.martingale);
    let dm = doob_meyer(&vm).unwrap();
    assert!(dm.ledger.all_equal());

    // classical construction: M is the total conditional-increment sum at
    // the terminal algebra, and the compensator at a level region is
    // E[M | F_level] - x(level)
    let space = vm.space();
    let x = |l: usize| vm.model.x[&GridPoint::Finite(vec![l])].clone();
    let p = |l: usize| vm.model.parts[&GridPoint::Finite(vec![l])].clone();
    let mut total = Value::zero(4);
    for l in 0..2 {
        let inc = &space.cond_exp(&x(l + 1), &p(l)) - &x(l);
        total += &inc;
    }
    let m_classical = space.cond_exp(&total, vm.terminal());
    assert_eq!(dm.m, m_classical);
    for l in 0..3 {
        let region = upset(&vm, l);
        let expect = &space.cond_exp(&dm.m, &p(l)) - &x(l);
        assert_eq!(dm.a[&region], expect);
    }
    // supermartingales compensate upward along the predictable order
    assert_eq!(dm.monotone_pattern.as_deref(), Some("increasing"));

    // stopped-value diagnostics on the chain verify the class inequalities
    let sigmas: Vec<SimpleStoppingTime> = (0..3)
        .map(|l| SimpleStoppingTime {
            arms: vec![(upset(&vm, l), vm.space().full_event())],
        })
        .collect();
    let rep = stopping_diagnostics(&vm, &sigmas).unwrap();
    assert!(rep.ledger.all_equal(), "{:?}", rep.ledger.first_failure());
}

#[test]
fn chain_quasinorm_is_the_expected_total_compensator_rise() {
    let model = chain_model([6, 6, 6, 6], [5, 5, 3, 3], [4, 2, 2, 0], XInfMode::MaxGrid);
    let vm = validate_model(model).unwrap();
    // conditional increments: E[x1|F0] - x0 = -2, E[x2|F1] - x1 = -2
    assert_eq!(quasinorm(&vm).unwrap(), rat(4, 1));

    // a coarser partition gives a smaller expected variation
    let d = DPartition {
        pairs: vec![(upset(&vm, 0), upset(&vm, 2))],
    };
    let (_, v) = semimeas::stoch::variation(&vm, &d).unwrap();
    assert!(vm.space().expect(&v) <= rat(4, 1));
}

#[test]
fn point_function_to_ring_extension_pipeline() {
    // values on a nested family, extended to the ring, stay consistent with
    // the atoms reported by the decision procedure
    let g = GroundSet::of_size(4);
    let fam = SetFamily::new(g, masks(&[0b0001, 0b0011, 0b0111, 0b1111])).unwrap();
    let f = SetFunction::scalar(
        fam,
        &[
            (0b0001, rat(1, 2)),
            (0b0011, rat(3, 2)),
            (0b0111, rat(3, 1)),
            (0b1111, rat(5, 1)),
        ],
    )
    .unwrap();
    let ext = extend_to_ring(&f).unwrap();
    assert!(ext.restricts);
    let atoms: Vec<BigRational> = ext
        .atom_values
        .iter()
        .map(|v| v.coord(0).clone())
        .collect();
    assert_eq!(atoms, vec![rat(1, 2), rat(1, 1), rat(3, 2), rat(2, 1)]);
    assert!(atoms.iter().all(|a| a.is_positive()));
}
