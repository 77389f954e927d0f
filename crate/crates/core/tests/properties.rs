use pmap_core::exact::{entropy, kl_divergence, summarize, summarize_with_cap};
use pmap_core::solver::{solve_exhaustive, solve_icm, Exhaustive, MapSolver};
use pmap_core::tricks::{Target, Trick};
use pmap_core::*;
use proptest::prelude::*;

fn small_model() -> impl Strategy<Value = GraphicalModel> {
    (1usize..=4)
        .prop_flat_map(|n| {
            let cards = prop::collection::vec(1usize..=3, n);
            (Just(n), cards)
        })
        .prop_flat_map(|(n, cards)| {
            // one unary per variable plus pairwise factors between neighbours
            let mut tables = Vec::new();
            for &c in &cards {
                tables.push(prop::collection::vec(-2.0f64..2.0, c));
            }
            for i in 1..n {
                tables.push(prop::collection::vec(-2.0f64..2.0, cards[i - 1] * cards[i]));
            }
            (Just(cards), tables)
        })
        .prop_map(|(cards, tables)| {
            let n = cards.len();
            let mut factors = Vec::new();
            for (k, t) in tables.into_iter().enumerate() {
                let scope = if k < n { vec![k] } else { vec![k - n, k - n + 1] };
                factors.push(Factor::new(scope, t));
            }
            GraphicalModel::new(cards, factors).unwrap()
        })
}

fn offsets_for(model: &GraphicalModel, raw: &[f64], scale: f64) -> UnaryOffsets {
    let mut o = UnaryOffsets::zeros(model.cardinalities(), scale).unwrap();
    for (v, r) in o.values_mut().iter_mut().zip(raw.iter().cycle()) {
        *v = *r;
    }
    o
}

fn normalized(raw: &[f64]) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clamp_preserves_potential(model in small_model(), k in 0usize..=4, pick in 0usize..1000) {
        let n = model.variable_count();
        let k = k.min(n);
        let total = model.configuration_count() as usize;
        let x = model.configuration_at(pick % total);
        let clamped = model.clamp(&x.as_slice()[..k]).unwrap();
        let lhs = model.potential(x.as_slice());
        let rhs = clamped.model.potential(&x.as_slice()[k..]) + clamped.constant;
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn clamp_log_partition_matches_slice_sum(model in small_model(), k in 0usize..=4) {
        let k = k.min(model.variable_count());
        let total = model.configuration_count() as usize;
        for i in 0..total {
            let x = model.configuration_at(i);
            let prefix = &x.as_slice()[..k];
            if x.as_slice()[k..].iter().any(|&s| s != 0) {
                continue;
            }
            let clamped = model.clamp(prefix).unwrap();
            let z = summarize(&clamped.model).unwrap().log_partition + clamped.constant;
            let direct: Vec<f64> = (0..total)
                .map(|j| model.configuration_at(j))
                .filter(|y| &y.as_slice()[..k] == prefix)
                .map(|y| model.potential(y.as_slice()))
                .collect();
            prop_assert!((z - pmap_core::math::log_sum_exp(&direct)).abs() < 1e-12);
        }
    }

    #[test]
    fn uai_round_trip_is_bit_exact(model in small_model()) {
        let once = load_uai(&save_uai(&model)).unwrap();
        let twice = load_uai(&save_uai(&once)).unwrap();
        prop_assert_eq!(&once, &twice);
        for (a, b) in model.factors().iter().zip(once.factors()) {
            for (x, y) in a.log_table().iter().zip(b.log_table()) {
                prop_assert!((x - y).abs() <= 1e-15 * x.abs().max(1.0));
            }
        }
    }

    #[test]
    fn solvers_are_self_consistent(model in small_model(), raw in prop::collection::vec(-3.0f64..3.0, 12), avg in any::<bool>(), seed in any::<u64>()) {
        let scale = if avg { 1.0 / model.variable_count() as f64 } else { 1.0 };
        let o = offsets_for(&model, &raw, scale);
        let ex = solve_exhaustive(&model, &o).unwrap();
        let icm = solve_icm(&model, &o, 3, seed).unwrap();
        for r in [&ex, &icm] {
            let recomputed = model.potential(r.config.as_slice()) + scale * o.total(r.config.as_slice());
            prop_assert!((r.value - recomputed).abs() < 1e-12);
        }
        prop_assert!(icm.value <= ex.value + 1e-12);
        prop_assert_eq!(icm, solve_icm(&model, &o, 3, seed).unwrap());
    }

    #[test]
    fn shifting_first_offsets_shifts_value(model in small_model(), raw in prop::collection::vec(-3.0f64..3.0, 12), k in -5.0f64..5.0, seed in any::<u64>()) {
        let o = offsets_for(&model, &raw, 0.5);
        let mut shifted = o.clone();
        shifted.table_mut(0).iter_mut().for_each(|v| *v += k);
        let a = solve_exhaustive(&model, &o).unwrap();
        let b = solve_exhaustive(&model, &shifted).unwrap();
        prop_assert!((b.value - a.value - 0.5 * k).abs() < 1e-12);
        prop_assert_eq!(a.config, b.config);
        let a = solve_icm(&model, &o, 2, seed).unwrap();
        let b = solve_icm(&model, &shifted, 2, seed).unwrap();
        prop_assert!((b.value - a.value - 0.5 * k).abs() < 1e-12);
    }

    #[test]
    fn entropy_of_gibbs_is_at_most_log_size(model in small_model()) {
        let s = summarize(&model).unwrap();
        let h = entropy(&s.gibbs).unwrap();
        prop_assert!(h <= (s.gibbs.len() as f64).ln() + 1e-12);
        prop_assert!(h >= 0.0);
        prop_assert!((s.gibbs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f_inverse_undoes_f(alpha in -0.99f64..3.0, t in 0.05f64..3.0) {
        let mut tricks = vec![Trick::Gumbel, Trick::Exponential, Trick::Pareto, Trick::Tail(t)];
        if alpha != 0.0 {
            tricks.push(Trick::from_alpha(alpha).unwrap());
        }
        for trick in tricks {
            for z in [0.5, 1.0, 6.0] {
                let Ok(m) = trick.f_of_z(z) else { continue };
                let back = trick.f_inverse(m).unwrap();
                prop_assert!((back - z).abs() < 1e-10 * z.max(1.0), "{} {} {}", trick, z, back);
            }
        }
    }
}

#[test]
fn kl_is_non_negative_on_random_pairs() {
    use rand::Rng;
    let mut rng = pmap_core::rng::stream(77, &[]);
    for _ in 0..1000 {
        let k = rng.random_range(1..8);
        let q: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let p: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
        let kl = kl_divergence(&normalized(&q), &normalized(&p)).unwrap();
        assert!(kl >= 0.0);
    }
}

#[test]
fn entropy_equals_log_size_only_for_constant_potential() {
    let flat = GraphicalModel::new(vec![2, 3], vec![Factor::new(vec![0, 1], vec![0.7; 6])]).unwrap();
    let h = entropy(&summarize(&flat).unwrap().gibbs).unwrap();
    assert!((h - 6f64.ln()).abs() < 1e-12);
    let tilted = GraphicalModel::new(vec![2, 3], vec![Factor::new(vec![0], vec![0.0, 0.1])]).unwrap();
    let h = entropy(&summarize(&tilted).unwrap().gibbs).unwrap();
    assert!(h < 6f64.ln() - 1e-6);
}

#[test]
fn spin_glass_is_deterministic() {
    for mode in [Coupling::Attractive, Coupling::Mixed] {
        assert_eq!(
            spin_glass_grid(3, 4, 1.5, mode, 99).unwrap(),
            spin_glass_grid(3, 4, 1.5, mode, 99).unwrap()
        );
    }
}

#[test]
fn exhaustive_paths_agree_on_larger_space() {
    // 4x4 grid exceeds the direct lookup limit and uses the split scan
    let m = spin_glass_grid(4, 4, 2.0, Coupling::Mixed, 3).unwrap();
    let solver = Exhaustive::new(&m, 1 << 16).unwrap();
    let table = m.potential_table(1 << 16).unwrap();
    let mut rng = pmap_core::rng::stream(4, &[]);
    for _ in 0..5 {
        let mut o = UnaryOffsets::zeros(m.cardinalities(), 1.0).unwrap();
        for v in o.values_mut() {
            *v = pmap_core::tricks::sample_gumbel(&mut rng);
        }
        let r = solver.solve(&o, 0);
        let (bi, bv) = table
            .iter()
            .enumerate()
            .map(|(i, &p)| (i, p + o.total(m.configuration_at(i).as_slice())))
            .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        assert_eq!(m.index_of(r.config.as_slice()), bi);
        assert!((r.value - bv).abs() < 1e-12);
    }
}

#[test]
fn enumeration_cap_is_enforced() {
    let m = spin_glass_grid(3, 3, 1.0, Coupling::Mixed, 1).unwrap();
    assert!(matches!(summarize_with_cap(&m, 100), Err(Error::EnumerationCap { .. })));
    assert!(Exhaustive::new(&m, 100).is_err());
}

#[test]
fn estimate_targets_are_consistent() {
    let values = [0.3, 1.2, -0.4, 0.8, 0.1];
    for trick in [Trick::Gumbel, Trick::Exponential, Trick::Weibull(0.5), Trick::Frechet(-0.2)] {
        let z = pmap_core::tricks::estimate(trick, &values, Target::Z, false).unwrap();
        let ln_z = pmap_core::tricks::estimate(trick, &values, Target::LnZ, false).unwrap();
        assert!((z.estimate.ln() - ln_z.estimate).abs() < 1e-12);
        assert!((ln_z.std_error - z.std_error / z.estimate).abs() < 1e-12);
    }
}
