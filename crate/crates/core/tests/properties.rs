//! Randomized invariants over tiny instances and generated workloads.

mod common;

use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use sfcplace::cost::{self, penalty_value};
use sfcplace::heuristics::{greedy_place, simple_placement, Algorithm, HeuristicConfig};
use sfcplace::state::{self, PlacementState, Usage};
use sfcplace::tiny::{tiny_instance, TinyConfig};
use sfcplace::topology::{load_topology, CatalogConfig, NetworkModel, NET7};
use sfcplace::workload::{generate_scenario, parse_scenario, write_scenario, ChainMode, ScenarioParams, CT, VM};

fn net7() -> Arc<NetworkModel<f64>> {
    static NET: OnceLock<Arc<NetworkModel<f64>>> = OnceLock::new();
    NET.get_or_init(|| Arc::new(load_topology(NET7, CatalogConfig::default()).unwrap())).clone()
}

fn config(ample: bool, with_snapshot: bool) -> TinyConfig {
    TinyConfig { ample, with_snapshot, ..TinyConfig::default() }
}

fn mode() -> impl Strategy<Value = ChainMode> {
    prop_oneof![Just(ChainMode::VmOnly), Just(ChainMode::CtOnly), Just(ChainMode::VmCt)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heuristic_states_pass_every_check(seed in 0u64..5000, ample: bool, snap: bool) {
        let inst = tiny_instance::<f64>(seed, config(ample, snap));
        let (scn, template) = (&inst.scenario, &inst.template);
        let mut states = Vec::new();
        for alg in [Algorithm::Ff, Algorithm::Rf] {
            states.extend(simple_placement(scn, template, alg, seed).ok());
        }
        let grd = HeuristicConfig::new(Algorithm::Grd, seed);
        states.extend(greedy_place(scn, template, &inst.partition, inst.prior.as_ref(), &grd).ok());
        for st in &states {
            prop_assert!(state::validate_all(scn, st).is_empty());
            prop_assert!(common::literal::violations(scn, st).is_empty());
            prop_assert_eq!(&st.scope, &template.scope);
            prop_assert_eq!(st.demand_route.len(), st.scope.len());
            let c = cost::total_cost(scn, st).unwrap();
            prop_assert_eq!(c.total, (c.edge_opex + c.cloud_charges) + c.penalties);
            prop_assert_eq!(c.n_rep, state::count_replications(scn, st));
            if st.initial_snapshot.is_some() {
                prop_assert_eq!(c.n_mgr, state::count_migrations(scn, st).unwrap());
            } else {
                prop_assert_eq!(c.n_mgr, 0);
            }
            let lit = common::literal::cost(scn, st);
            prop_assert!(common::literal::close(c.total, lit.total, 1e-12));
        }
    }

    #[test]
    fn local_search_never_worsens(seed in 0u64..5000, ample: bool, snap: bool, sweeps in 1usize..4) {
        let inst = tiny_instance::<f64>(seed, config(ample, snap));
        let (scn, template) = (&inst.scenario, &inst.template);
        let run = |sweeps| {
            let c = HeuristicConfig { sweeps: Some(sweeps), ..HeuristicConfig::new(Algorithm::Grd, seed) };
            greedy_place(scn, template, &inst.partition, inst.prior.as_ref(), &c).map(|st| cost::total_cost(scn, &st).unwrap().total)
        };
        if let (Ok(start), Ok(end)) = (run(0), run(sweeps)) {
            prop_assert!(end <= start);
        }
    }

    #[test]
    fn heuristics_are_deterministic(seed in 0u64..5000, snap: bool) {
        let inst = tiny_instance::<f64>(seed, config(false, snap));
        let (scn, template) = (&inst.scenario, &inst.template);
        prop_assert_eq!(simple_placement(scn, template, Algorithm::Rf, seed), simple_placement(scn, template, Algorithm::Rf, seed));
        let c = HeuristicConfig::new(Algorithm::Grd, seed);
        prop_assert_eq!(
            greedy_place(scn, template, &inst.partition, inst.prior.as_ref(), &c),
            greedy_place(scn, template, &inst.partition, inst.prior.as_ref(), &c)
        );
    }

    #[test]
    fn incremental_usage_matches_rebuild(seed in 0u64..5000, ample: bool) {
        let inst = tiny_instance::<f64>(seed, config(ample, false));
        let scn = &inst.scenario;
        let st = common::random_state(scn, &inst.template, &mut common::rng(seed, 7));
        let mut u = Usage::empty(scn, &st.scope);
        for (&d, &p) in &st.demand_route {
            u.add_demand(scn, d, p, &st.servers_of(d));
        }
        for (k, &p) in &st.sync_route {
            u.add_sync(scn, k, p);
        }
        let fresh = Usage::from_state(scn, &st);
        prop_assert_eq!(&u.instances, &fresh.instances);
        prop_assert_eq!(&u.hosted, &fresh.hosted);
        prop_assert_eq!(&u.path_use, &fresh.path_use);
        for (a, b) in u.link_load.iter().zip(&fresh.link_load).chain(u.server_load.iter().zip(&fresh.server_load)) {
            prop_assert!((a - b).abs() <= 1e-9);
        }

        // taking the first demand back out gives the usage of the smaller state
        let Some((&d, &p)) = st.demand_route.iter().next() else { return Ok(()) };
        for (k, &q) in &st.sync_route {
            u.remove_sync(scn, k, q);
        }
        u.remove_demand(scn, d, p, &st.servers_of(d));
        let mut smaller = st.clone();
        smaller.unplace_demand(d);
        smaller.sync_route.clear();
        let fresh = Usage::from_state(scn, &smaller);
        prop_assert_eq!(&u.instances, &fresh.instances);
        prop_assert_eq!(&u.hosted, &fresh.hosted);
        for (a, b) in u.link_load.iter().zip(&fresh.link_load).chain(u.server_load.iter().zip(&fresh.server_load)) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn dropping_sync_routes_never_raises_link_load(seed in 0u64..5000) {
        let inst = tiny_instance::<f64>(seed, config(true, false));
        let scn = &inst.scenario;
        let st = common::random_state(scn, &inst.template, &mut common::rng(seed, 3));
        let mut bare = st.clone();
        bare.sync_route.clear();
        for (a, b) in state::link_utilization(scn, &bare).iter().zip(state::link_utilization(scn, &st)) {
            prop_assert!(*a <= b);
        }
    }

    #[test]
    fn containers_never_load_more_than_vms(seed in 0u64..5000) {
        let inst = tiny_instance::<f64>(seed, config(true, false));
        let Ok(st) = simple_placement(&inst.scenario, &inst.template, Algorithm::Ff, seed) else { return Ok(()) };
        let mut cts = inst.scenario.clone();
        for s in &mut cts.sfcs {
            s.vnf_chain.iter_mut().for_each(|t| if *t == VM { *t = CT });
        }
        let (load_vm, util_vm) = state::server_load(&inst.scenario, &st);
        let (load_ct, util_ct) = state::server_load(&cts, &st);
        for x in 0..load_vm.len() {
            prop_assert!(load_ct[x] <= load_vm[x] && util_ct[x] <= util_vm[x]);
        }
        let (opex_vm, _) = cost::edge_opex(&inst.scenario, &st);
        let (opex_ct, _) = cost::edge_opex(&cts, &st);
        for x in 0..opex_vm.len() {
            prop_assert!(opex_ct[x] <= opex_vm[x]);
            if !inst.scenario.network.servers()[x].is_cloud {
                prop_assert_eq!(opex_vm[x] == 0.0, !st.vnf_assignment.values().any(|y| y.0 == x));
            }
        }
    }

    #[test]
    fn placement_documents_round_trip(seed in 0u64..5000, snap: bool) {
        let inst = tiny_instance::<f64>(seed, config(seed % 2 == 0, snap));
        let mut st = common::random_state(&inst.scenario, &inst.template, &mut common::rng(seed, 5));
        st.single_instance = seed % 3 == 0;
        let text = state::write_placement(&st);
        prop_assert_eq!(state::parse_placement(&text).unwrap(), st);
    }

    #[test]
    fn scenario_documents_round_trip(len in 1usize..6, mode in mode(), seed in 0u64..1000) {
        let scn = generate_scenario(net7(), ScenarioParams::<f64>::new(len, mode, seed)).unwrap();
        let back = parse_scenario(&write_scenario(&scn), net7()).unwrap();
        prop_assert_eq!(&back.sfcs, &scn.sfcs);
        prop_assert_eq!(&back.demands, &scn.demands);
        prop_assert_eq!(&back.vnf_catalog, &scn.vnf_catalog);
        prop_assert_eq!(&back.params, &scn.params);
    }

    #[test]
    fn generated_bounds_differ_by_the_downtimes(len in 1usize..11, mode in mode(), seed in 0u64..1000) {
        let scn = generate_scenario(net7(), ScenarioParams::<f64>::new(len, mode, seed)).unwrap();
        for s in &scn.sfcs {
            prop_assert_eq!(s.d_hat_max - s.d_max, len as f64 * 27.5);
            prop_assert!((1..=3).contains(&s.demands.len()));
        }
        prop_assert_eq!(generate_scenario(net7(), ScenarioParams::<f64>::new(len, mode, seed)).unwrap().demands, scn.demands);
    }

    #[test]
    fn penalty_is_zero_then_linear(len in 1usize..5, over in 0.0f64..3.0, seed in 0u64..100) {
        let scn = generate_scenario(net7(), ScenarioParams::<f64>::new(len, ChainMode::VmCt, seed)).unwrap();
        let s = &scn.sfcs[0];
        prop_assert_eq!(penalty_value(s, s.d_max * (1.0 - over / 3.0)), 0.0);
        let q = penalty_value(s, s.d_max * (1.0 + over));
        prop_assert!((q - over * s.penalty_rate).abs() <= 1e-12 * s.penalty_rate.max(1.0));
    }

    #[test]
    fn single_precision_tracks_double(seed in 0u64..5000, ample: bool) {
        let conf = config(ample, false);
        let wide = tiny_instance::<f64>(seed, conf);
        let narrow = tiny_instance::<f32>(seed, conf);
        prop_assert_eq!(&wide.template, &narrow.template);
        let Ok(st) = simple_placement(&wide.scenario, &wide.template, Algorithm::Ff, seed) else { return Ok(()) };
        let a = cost::total_cost(&wide.scenario, &st).unwrap();
        let b = cost::total_cost(&narrow.scenario, &st).unwrap();
        for (x, y) in [(a.edge_opex, b.edge_opex), (a.cloud_charges, b.cloud_charges), (a.penalties, b.penalties), (a.total, b.total)] {
            prop_assert!((x - y as f64).abs() <= 1e-5 * x.abs().max(1e-2), "{} vs {}", x, y);
        }
    }
}

#[test]
fn empty_state_has_no_load() {
    let inst = tiny_instance::<f64>(3, TinyConfig::default());
    let st = PlacementState::new(inst.template.scope.clone());
    let (load, util) = state::server_load(&inst.scenario, &st);
    assert!(load.iter().chain(&util).all(|v| *v == 0.0));
    assert!(state::validate_capacities(&inst.scenario, &st).is_empty());
}

#[test]
fn catalog_paths_are_consistent() {
    let net = net7();
    for p in net.paths() {
        let sum: f64 = p.links.iter().map(|l| net.link(*l).prop_delay).sum();
        assert_eq!(p.total_prop_delay, sum);
        if !p.traverses_cloud {
            assert!(p.nodes.iter().all(|n| !net.node(*n).is_cloud));
        }
    }
    let again = load_topology::<f64>(NET7, CatalogConfig::default()).unwrap();
    assert_eq!(again.paths(), net.paths());
}
