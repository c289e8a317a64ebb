use exdyn::models::{transition_operator, transition_operator_direct, ModelSpec};
use exdyn::scalar::{parse_rational, ratio};
use exdyn::simulate::{run, Graph, GraphModel};
use exdyn::suite;
use exdyn::verify::{check_detailed_balance, check_self_duality, Verdict};
use exdyn::{Rational, Scalar};
use proptest::prelude::*;

type Q = Rational;

fn positive_rational() -> impl Strategy<Value = Rational> {
    (1i64..=9, 1i64..=4).prop_map(|(p, q)| ratio(p, q))
}

fn iem_equal_s() -> impl Strategy<Value = ModelSpec> {
    (positive_rational(), positive_rational(), positive_rational())
        .prop_map(|(s, t1, t2)| ModelSpec::iem(s.clone(), t1, s, t2).unwrap())
}

fn any_model() -> impl Strategy<Value = ModelSpec> {
    prop_oneof![
        (positive_rational(), positive_rational(), positive_rational(), positive_rational())
            .prop_map(|(a, b, c, d)| ModelSpec::iem(a, b, c, d).unwrap()),
        (1u32..=3, 1u32..=3, 1u32..=3).prop_map(|(g, d1, d2)| ModelSpec::riem(g, d1, g, d2).unwrap()),
        Just(ModelSpec::Rw),
        (positive_rational(), positive_rational()).prop_map(|(a, b)| ModelSpec::piem(a, b).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transition_rows_are_probability_vectors(spec in any_model()) {
        let pi = transition_operator::<Q>(&spec, 4).unwrap();
        prop_assert!(pi.first_non_stochastic_row(0.0).is_none());
        for block in pi.blocks().values() {
            for i in 0..block.nrows() {
                prop_assert!(block.row(i).iter().all(|(_, v)| *v >= Q::from_u64(0)));
            }
        }
    }

    #[test]
    fn lumped_and_enumerated_agree(spec in any_model()) {
        let a = transition_operator::<Q>(&spec, 4).unwrap();
        let b = transition_operator_direct::<Q>(&spec, 4).unwrap();
        prop_assert_eq!(a.first_mismatch(&b, 0.0), None);
    }

    #[test]
    fn equal_s_is_self_dual_and_reversible(spec in iem_equal_s()) {
        let pi = transition_operator::<Q>(&spec, 4).unwrap();
        let r = check_self_duality("p", &pi, &spec.duality_function(), 4, 0.0).unwrap();
        prop_assert_eq!(r.verdict, Verdict::Pass, "{}", r);
        let mu = spec.pair_stationary::<Q>(pi.rows()).unwrap();
        prop_assert_eq!(check_detailed_balance("p", &pi, &mu, 0.0).unwrap().verdict, Verdict::Pass);
    }

    #[test]
    fn float_path_matches_exact(spec in any_model()) {
        let exact = suite::self_duality::<Q>(&spec, 3, 0.0).unwrap();
        let float = suite::self_duality::<f64>(&spec, 3, 1e-12).unwrap();
        prop_assert_eq!(exact.verdict, float.verdict);
    }

    #[test]
    fn rational_literals_round_trip(p in -500i64..500, q in 1i64..60) {
        let r = ratio(p, q);
        prop_assert_eq!(parse_rational(&r.render()), Some(r));
    }

    #[test]
    fn simulation_conserves_mass(
        n in 2usize..6,
        wealth in proptest::collection::vec(0u32..6, 6),
        seed in any::<u64>(),
    ) {
        let graph = Graph::complete(n);
        let init: Vec<u32> = wealth[..n].to_vec();
        let total: u32 = init.iter().sum();
        let model = GraphModel::new(&ModelSpec::Rw, &graph, total).unwrap();
        let traj = run(&model, &init, 5.0, seed).unwrap();
        let mut config = init.clone();
        let mut last = 0.0;
        for e in &traj.events {
            prop_assert!(e.time > last && e.time <= 5.0);
            last = e.time;
            let (u, v) = graph.edges()[e.edge];
            config[u] = e.wealth.0;
            config[v] = e.wealth.1;
            prop_assert_eq!(config.iter().sum::<u32>(), total);
        }
    }
}

#[test]
fn edge_list_round_trip() {
    let g = Graph::complete(5);
    let text: String = g.edges().iter().map(|(u, v)| format!("{u} {v}\n")).collect();
    assert_eq!(Graph::parse_edge_list(&text, None).unwrap(), g);
}

#[test]
fn riem_on_unequal_capacities_is_rejected_for_simulation() {
    let spec = ModelSpec::riem(2, 1, 3, 1).unwrap();
    assert!(GraphModel::new(&spec, &Graph::path(2), 3).is_err());
}
