use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use blindbeam::beamforming::{cpp_decide, cpp_target, csm_decide, exact_csm_small, CsmAccumulator};
use blindbeam::channel::{
    eval_effective_chain, eval_effective_dense, expand_links_to_tensor, CMatrix, CascadedChannel, LinkChannelGraph,
    RadioParams,
};
use blindbeam::conditions::make_single_instance;
use blindbeam::experiment::{parse_csv, render_csv, RunRecord};
use blindbeam::phase::{wrap_angle, PhaseAssignment, PhaseGrid};

fn c(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
}

fn graph(l: usize, n: usize, rng: &mut ChaCha8Rng) -> LinkChannelGraph {
    let tx = (0..l).map(|_| (0..n).map(|_| c(rng)).collect()).collect();
    let rx = (0..l).map(|_| (0..n).map(|_| c(rng)).collect()).collect();
    let between = (0..l)
        .map(|a| (a + 1..l).map(|_| CMatrix::from_fn(n, n, |_, _| c(rng))).collect())
        .collect();
    LinkChannelGraph::new(c(rng), tx, rx, between).unwrap()
}

fn assignment(levels: &[usize], n: usize, rng: &mut ChaCha8Rng) -> PhaseAssignment {
    let grids: Vec<PhaseGrid> = levels.iter().map(|&k| PhaseGrid::new(k).unwrap()).collect();
    let rows = levels.iter().map(|&k| (0..n).map(|_| rng.random_range(0..k)).collect()).collect();
    PhaseAssignment::new(grids, rows).unwrap()
}

proptest! {
    #[test]
    fn chain_equals_dense(seed in any::<u64>(), l in 1usize..=3, n in 1usize..=4, k in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = graph(l, n, &mut rng);
        let p = assignment(&vec![k; l], n, &mut rng);
        let chain = eval_effective_chain(&g, &p).unwrap();
        let dense = eval_effective_dense(&expand_links_to_tensor(&g).unwrap(), &p).unwrap();
        prop_assert!((chain - dense).norm() <= 1e-10 * dense.norm().max(1e-300));
    }

    #[test]
    fn effective_gain_is_bounded_by_abs_sum(seed in any::<u64>(), l in 1usize..=3, n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tensor = expand_links_to_tensor(&graph(l, n, &mut rng)).unwrap();
        let p = assignment(&vec![4; l], n, &mut rng);
        prop_assert!(tensor.effective(&p).unwrap().norm() <= tensor.abs_sum() * (1.0 + 1e-12));
    }

    #[test]
    fn full_turn_weights_leave_gain_unchanged(seed in any::<u64>(), l in 1usize..=3, n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = graph(l, n, &mut rng);
        let p = assignment(&vec![4; l], n, &mut rng);
        let turned: Vec<Vec<Complex64>> = (0..l)
            .map(|i| (0..n).map(|e| Complex64::from_polar(1.0, p.phase(i, e) + 2.0 * PI)).collect())
            .collect();
        let a = g.effective(&p).unwrap();
        let b = g.effective_weighted(&turned).unwrap();
        prop_assert!((a - b).norm() <= 1e-9 * a.norm().max(1e-300));
    }

    #[test]
    fn rounding_error_is_at_most_half_a_step(angle in -10.0f64..10.0, k in 2usize..=16) {
        let grid = PhaseGrid::new(k).unwrap();
        let err = wrap_angle(angle - grid.phase(grid.nearest(angle))).abs();
        prop_assert!(err <= PI / k as f64 + 1e-12);
    }

    #[test]
    fn wrap_is_periodic(angle in -10.0f64..10.0, turns in -5i32..=5) {
        let a = wrap_angle(angle);
        let b = wrap_angle(angle + 2.0 * PI * turns as f64);
        prop_assert!(wrap_angle(a - b).abs() < 1e-9);
        prop_assert!(a > -PI && a <= PI);
    }

    #[test]
    fn cpp_decision_ignores_a_common_rotation(seed in any::<u64>(), k in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = PhaseGrid::new(k).unwrap();
        let (d, r) = (c(&mut rng), c(&mut rng));
        let spin = Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI);
        // away from a rounding boundary the rotated problem rounds the same way
        let off = wrap_angle(cpp_target(d, r) - grid.phase(grid.nearest(cpp_target(d, r)))).abs();
        prop_assume!((off - PI / k as f64).abs() > 1e-6);
        prop_assert_eq!(cpp_decide(d, r, grid), cpp_decide(d * spin, r * spin, grid));
    }

    #[test]
    fn csm_argmax_is_scale_invariant(seed in any::<u64>(), n in 1usize..=6, k in 2usize..=6, scale in 1e-6f64..1e6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = PhaseGrid::new(k).unwrap();
        let mut plain = CsmAccumulator::new(n, grid);
        let mut scaled = CsmAccumulator::new(n, grid);
        // enough rows that every (element, index) group is visited
        for _ in 0..40 * k {
            let row: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let p = rng.random::<f64>();
            plain.add(&row, p).unwrap();
            scaled.add(&row, p * scale).unwrap();
        }
        let (a, b) = (plain.finish(None), scaled.finish(None));
        prop_assume!(a.is_ok() && b.is_ok());
        prop_assert_eq!(csm_decide(&a.unwrap()), csm_decide(&b.unwrap()));
    }

    #[test]
    fn single_irs_exact_csm_is_cpp(seed in any::<u64>(), n in 1usize..=4, k in 3usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = PhaseGrid::new(k).unwrap();
        let tensor = make_single_instance(n, &mut rng).unwrap();
        let res = exact_csm_small(&tensor, &[grid], &RadioParams::unit()).unwrap();
        let direct = tensor.get(&[0]);
        for e in 0..n {
            let r = tensor.get(&[e + 1]);
            let t = cpp_target(direct, r);
            let off = wrap_angle(t - grid.phase(grid.nearest(t))).abs();
            if (off - PI / k as f64).abs() > 1e-9 {
                prop_assert_eq!(res.assignment.irs(0)[e], cpp_decide(direct, r, grid));
            }
        }
    }

    #[test]
    fn csv_round_trips(
        trial in 0u64..1000,
        n in 1usize..1000,
        value in prop_oneof![-1e12f64..1e12, Just(0.0), 1e-300f64..1e-290],
        method in "[a-z][a-z/@=.0-9-]{0,15}",
        wall in proptest::option::of(0.0f64..100.0),
    ) {
        let r = RunRecord {
            experiment: "scaling".into(),
            seed: 7,
            trial,
            method,
            num_irs: 2,
            n,
            k: "4".into(),
            t: 10,
            metric_kind: "boost_linear".into(),
            metric_value: value,
            // the CSV keeps six decimals of wall time
            wall_s: wall.map(|w| (w * 1e6).round() / 1e6),
        };
        let back = parse_csv(&render_csv(std::slice::from_ref(&r), &[])).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(back[0].metric_value, r.metric_value);
        prop_assert_eq!(&back[0].method, &r.method);
        match (back[0].wall_s, r.wall_s) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9),
            (a, b) => prop_assert_eq!(a, b),
        }
    }
}
