//! Reference values from an independent high-precision computation using
//! closed-form inverse branches and a dense eigen-solve.

use std::f64::consts::{LN_2, PI};

use thermoform::{
    equilibrium_with_measure, leading_eigendata, tree_pressure_series, ulam_operator, EigenParams,
    Interval, IntervalMap, Potential,
};

const CHEB2_COS03_AT_075: [f64; 12] = [
    LN_2,
    0.7662729223763237,
    0.7778303363240063,
    0.7824857147530282,
    0.7851527567929965,
    0.7869164897723773,
    0.788174620194439,
    0.7891180170436228,
    0.7898517457013303,
    0.7904387256165896,
    0.7909189815363193,
    0.7913191947557736,
];

const CHEB3_COS02_AT_03: [f64; 7] = [
    1.1692165512483585,
    1.1693725773561843,
    1.1694218698912984,
    1.169446566510666,
    1.1694613834860101,
    1.1694712614901068,
    1.1694783172068834,
];

#[test]
fn tree_pressure_cheb2_cosine() {
    let map = IntervalMap::chebyshev2();
    let phi = Potential::cosine(0.3, Interval::new(0.0, 1.0));
    let s = tree_pressure_series(&map, &phi, 0.75, 12).unwrap();
    for (n, (got, want)) in s.values.iter().zip(CHEB2_COS03_AT_075).enumerate() {
        assert!((got - want).abs() < 1e-12, "p_{} = {got}, expected {want}", n + 1);
    }
}

#[test]
fn tree_pressure_cheb3_cosine() {
    let map = IntervalMap::chebyshev3();
    let phi = Potential::cosine(0.2, Interval::new(-1.0, 1.0));
    let s = tree_pressure_series(&map, &phi, 0.3, 7).unwrap();
    for (n, (got, want)) in s.values.iter().zip(CHEB3_COS02_AT_03).enumerate() {
        assert!((got - want).abs() < 1e-12, "p_{} = {got}, expected {want}", n + 1);
    }
}

#[test]
fn ulam_64_cells() {
    let map = IntervalMap::chebyshev2();
    let params = EigenParams::default();

    let zero = ulam_operator(&map, &Potential::zero(), 64).unwrap();
    let e = leading_eigendata(&zero, &params).unwrap();
    assert!((e.eigenvalue - 2.0).abs() < 1e-10);
    let (r, measure) = equilibrium_with_measure(&map, &Potential::zero(), 64, 2f64.ln()).unwrap();
    assert!((r.lyapunov - 0.6989288001195586).abs() < 1e-9);
    assert!((measure.mass_in(&Interval::new(0.0, 0.5)) - 0.5).abs() < 1e-9);

    let phi = Potential::cosine(0.3, Interval::new(0.0, 1.0));
    let e = leading_eigendata(&ulam_operator(&map, &phi, 64).unwrap(), &params).unwrap();
    assert!((e.eigenvalue - 2.216302722603963).abs() < 1e-10);
    let (r, measure) = equilibrium_with_measure(&map, &phi, 64, e.eigenvalue.ln()).unwrap();
    assert!((r.lyapunov - 0.7369658831753432).abs() < 1e-9);
    assert!((r.int_phi - 0.11547419465092648).abs() < 1e-9);
    assert!((measure.mass_in(&Interval::new(0.0, 0.5)) - 0.5713674469028307).abs() < 1e-9);
}

#[test]
fn cheb2_period_three_orbits() {
    let map = IntervalMap::chebyshev2();
    let orbits: Vec<_> = map
        .periodic_points(3)
        .unwrap()
        .into_iter()
        .filter(|o| o.period == 3)
        .collect();
    assert_eq!(orbits.len(), 2);

    // sin²(πθ) with θ ∈ {j/7} ∪ {j/9}, up to θ ↦ 1 − θ and without the fixed point 3/4.
    let mut expected: Vec<f64> = [1, 2, 3]
        .map(|j| (PI * j as f64 / 7.0).sin().powi(2))
        .into_iter()
        .chain([1, 2, 4].map(|j| (PI * j as f64 / 9.0).sin().powi(2)))
        .collect();
    expected.sort_by(f64::total_cmp);
    let mut found: Vec<f64> = orbits.iter().flat_map(|o| o.orbit.clone()).collect();
    found.sort_by(f64::total_cmp);
    assert_eq!(found.len(), expected.len());
    for (a, b) in found.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    for o in &orbits {
        assert!((o.multiplier.abs() - 8.0).abs() < 1e-7);
    }
}
