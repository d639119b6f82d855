//! Property tests for invariants that hold for every network and parameter.

use flowergm::ffgrid::{ffgrid, linspace, TermGroup};
use flowergm::knockout::{apply_knockout, Knockout, KnockoutScenario};
use flowergm::metrics::{compute_metrics, Grouping};
use flowergm::mple::{neg_log_pseudolikelihood, DEFAULT_PARTITION};
use flowergm::sampler::sample_networks;
use flowergm::terms::global_stat;
use flowergm::{
    change_stat, seeds, BoundModel, CountNetwork, Covariates, InitMode, ModelSpec, NodeTable, Predictor, SamplerConfig, TermKind, TermSpec,
};
use proptest::prelude::*;

const N: usize = 5;

fn covariates(p: &[f64], x: &[f64]) -> Covariates {
    let n = p.len();
    let mut t = NodeTable::numbered(n);
    t.set_positions((0..n).map(|i| 35.0 + i as f64).collect(), (0..n).map(|i| -100.0 + 2.0 * i as f64).collect()).unwrap();
    t.set_population((0..n).map(|i| 100.0 * (i + 1) as f64).collect()).unwrap();
    t.set_numeric("p_a", p.to_vec()).unwrap();
    t.set_numeric("x_b", x.to_vec()).unwrap();
    t.set_categorical("region", (0..n).map(|i| ["A", "B"][i % 2].to_string()).collect()).unwrap();
    Covariates::bare(t)
}

fn network(n: usize, cells: &[u64]) -> CountNetwork {
    let mut c = cells.iter();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                edges.push((i, j, *c.next().unwrap()));
            }
        }
    }
    CountNetwork::from_indexed(n, edges).unwrap()
}

fn terms() -> Vec<TermSpec> {
    vec![
        TermSpec::new(TermKind::Sum),
        TermSpec::new(TermKind::Nonzero),
        TermSpec::new(TermKind::Mutuality),
        TermSpec::new(TermKind::WaypointFlow),
        TermSpec::on(TermKind::NodeOrigin, "x_b"),
        TermSpec::on(TermKind::NodeDestination, "x_b"),
        TermSpec::on(TermKind::AbsDissimilarity, "p_a"),
        TermSpec::on(TermKind::SignDirection, "p_a"),
        TermSpec::on(TermKind::Difference, "x_b"),
        TermSpec::on(TermKind::DyadCovariate, "log_distance"),
        TermSpec::on(TermKind::DyadCovariate, "same_region"),
        TermSpec::category(TermKind::CategoryOrigin, "region", "A"),
    ]
}

prop_compose! {
    fn fixture()(
        p in prop::collection::vec(0.0f64..1.0, N),
        x in prop::collection::vec(-2.0f64..2.0, N),
        cells in prop::collection::vec(0u64..6, N * (N - 1)),
    ) -> (Covariates, CountNetwork) {
        (covariates(&p, &x), network(N, &cells))
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn change_stat_is_global_difference((x, net) in fixture(), i in 0..N, j in 0..N, new in 0u64..8) {
        prop_assume!(i != j);
        let mut after = net.clone();
        after.set_edge(i, j, new).unwrap();
        for t in terms() {
            let diff = global_stat(&t, &after, &x).unwrap() - global_stat(&t, &net, &x).unwrap();
            let cs = change_stat(&t, &net, &x, i, j, net.get(i, j), new).unwrap();
            prop_assert!(close(cs, diff, 1e-12), "{:?}: {} vs {}", t.kind, cs, diff);
        }
    }

    #[test]
    fn change_stats_add_along_a_path((x, net) in fixture(), i in 0..N, j in 0..N, path in prop::collection::vec(0u64..8, 1..6)) {
        prop_assume!(i != j);
        for t in terms() {
            let mut cur = net.clone();
            let mut total = 0.0;
            for &k in &path {
                total += change_stat(&t, &cur, &x, i, j, cur.get(i, j), k).unwrap();
                cur.set_edge(i, j, k).unwrap();
            }
            let direct = change_stat(&t, &net, &x, i, j, net.get(i, j), *path.last().unwrap()).unwrap();
            prop_assert!(close(total, direct, 1e-12));
        }
    }

    #[test]
    fn structural_stats_are_transpose_invariant((x, net) in fixture()) {
        let t = net.transpose();
        for kind in [TermKind::Sum, TermKind::Nonzero, TermKind::Mutuality, TermKind::WaypointFlow] {
            let spec = TermSpec::new(kind);
            prop_assert_eq!(global_stat(&spec, &net, &x).unwrap(), global_stat(&spec, &t, &x).unwrap());
        }
        let origin = global_stat(&TermSpec::on(TermKind::NodeOrigin, "x_b"), &net, &x).unwrap();
        let dest = global_stat(&TermSpec::on(TermKind::NodeDestination, "x_b"), &t, &x).unwrap();
        prop_assert!(close(origin, dest, 1e-12));
        let sign = global_stat(&TermSpec::on(TermKind::SignDirection, "p_a"), &net, &x).unwrap();
        let flipped = global_stat(&TermSpec::on(TermKind::SignDirection, "p_a"), &t, &x).unwrap();
        prop_assert_eq!(sign, -flipped);
    }

    #[test]
    fn hessian_is_symmetric_psd((x, net) in fixture(), theta in prop::collection::vec(-0.5f64..0.5, 7), v in prop::collection::vec(-1.0f64..1.0, 7)) {
        let spec = ModelSpec::new(vec![
            TermSpec::new(TermKind::Sum),
            TermSpec::new(TermKind::Nonzero),
            TermSpec::new(TermKind::Mutuality),
            TermSpec::new(TermKind::WaypointFlow),
            TermSpec::on(TermKind::NodeOrigin, "x_b"),
            TermSpec::on(TermKind::AbsDissimilarity, "p_a"),
            TermSpec::on(TermKind::DyadCovariate, "log_distance"),
        ]).unwrap();
        let bound = BoundModel::bind(&spec, &x).unwrap();
        let h = neg_log_pseudolikelihood(&bound, &theta, &net, DEFAULT_PARTITION).unwrap().hessian;
        let scale = (0..7).map(|k| h.get(k, k).abs()).fold(1.0, f64::max);
        prop_assert!(h.max_asymmetry() <= 1e-12 * scale);
        let quad: f64 = (0..7).flat_map(|r| (0..7).map(move |c| (r, c))).map(|(r, c)| v[r] * h.get(r, c) * v[c]).sum();
        prop_assert!(quad >= -1e-9 * scale);
    }

    #[test]
    fn objective_ignores_partition_size((x, net) in fixture(), theta in prop::collection::vec(-0.5f64..0.5, 4), part in 1usize..30) {
        let spec = ModelSpec::new(vec![
            TermSpec::new(TermKind::Sum),
            TermSpec::new(TermKind::Mutuality),
            TermSpec::on(TermKind::SignDirection, "p_a"),
            TermSpec::on(TermKind::DyadCovariate, "log_distance"),
        ]).unwrap();
        let bound = BoundModel::bind(&spec, &x).unwrap();
        let a = neg_log_pseudolikelihood(&bound, &theta, &net, DEFAULT_PARTITION).unwrap();
        let b = neg_log_pseudolikelihood(&bound, &theta, &net, part).unwrap();
        prop_assert!(close(a.value, b.value, 1e-12));
        for (ga, gb) in a.gradient.iter().zip(&b.gradient) {
            prop_assert!(close(*ga, *gb, 1e-10));
        }
        let again = neg_log_pseudolikelihood(&bound, &theta, &net, part).unwrap();
        prop_assert_eq!(b.value.to_bits(), again.value.to_bits());
    }

    #[test]
    fn metric_invariants(n in 2usize..9, cells in prop::collection::vec(0u64..10, 72), groups in prop::collection::vec(0usize..3, 8)) {
        let net = network(n, &cells[..n * (n - 1)]);
        let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let labels: Vec<Option<String>> = (0..n).map(|i| Some(format!("G{}", groups[i]))).collect();
        let grouping = Grouping::from_labels(&ids, &labels, &vec![10.0; n]).unwrap();
        let r = compute_metrics(&net, &grouping).unwrap();
        prop_assert!(r.node_asymmetry <= r.dyad_asymmetry);
        prop_assert_eq!(r.groups.iter().map(|g| g.net_count).sum::<i64>(), 0);
        for g in &r.groups {
            if let Some(m) = g.mii {
                prop_assert!((-1.0..=1.0).contains(&m));
            }
        }
        let upper = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        let sym = CountNetwork::from_indexed(n, upper.flat_map(|(i, j)| [(i, j, net.get(i, j)), (j, i, net.get(i, j))])).unwrap();
        let s = compute_metrics(&sym, &grouping).unwrap();
        prop_assert_eq!((s.dyad_asymmetry, s.node_asymmetry), (0.0, 0.0));
    }

    #[test]
    fn composite_grid_is_product_of_components(coefs in prop::collection::vec(-1.0f64..1.0, 5), x0 in 0.0f64..1.0) {
        let kinds = [TermKind::NodeOrigin, TermKind::NodeDestination, TermKind::AbsDissimilarity, TermKind::SignDirection, TermKind::Difference];
        let specs: Vec<TermSpec> = kinds.iter().zip(&coefs).map(|(&k, &c)| TermSpec::on(k, "p_a").with_coef(c)).collect();
        let g = TermGroup::new(&specs).unwrap();
        let axis = linspace(0.0, 1.0, 11);
        let full = ffgrid(&g, &axis, &axis, x0);
        let parts: Vec<_> = g.components().iter().map(|c| ffgrid(c, &axis, &axis, x0)).collect();
        for (k, &v) in full.ratios.iter().enumerate() {
            let prod: f64 = parts.iter().map(|p| p.ratios[k]).product();
            prop_assert!(close(v, prod, 1e-12));
        }
    }

    #[test]
    fn knockouts_are_idempotent((x, _) in fixture(), which in 0usize..4) {
        let name = ["p_a", "x_b", "population", "log_distance"][which];
        let s = KnockoutScenario::new("k", vec![Knockout::new(name)]);
        let once = apply_knockout(&s, &x).unwrap();
        let twice = apply_knockout(&s, &once).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn sampling_is_a_function_of_the_seed(seed in any::<u64>(), theta in prop::collection::vec(-0.5f64..0.5, 3)) {
        let x = covariates(&[0.1, 0.4, 0.6, 0.9], &[0.0, 1.0, -1.0, 0.5]);
        let spec = ModelSpec::new(vec![
            TermSpec::new(TermKind::Sum),
            TermSpec::new(TermKind::Mutuality),
            TermSpec::on(TermKind::AbsDissimilarity, "p_a"),
        ]).unwrap();
        let bound = BoundModel::bind(&spec, &x).unwrap();
        let pred = Predictor::new(&bound, &theta).unwrap();
        let cfg = |s| SamplerConfig { burn_in_sweeps: 5, thin_sweeps: 2, n_samples: 4, seed: s, init: InitMode::Empty, support_cap: None };
        let empty = CountNetwork::empty(4);
        let a = sample_networks(&pred, &empty, &cfg(seed)).unwrap();
        let b = sample_networks(&pred, &empty, &cfg(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_ne!(seeds::derive(seed, 0), seeds::derive(seed, 1));
    }
}
