use forge_core::allocator::{
    build_problem, check_feasible, objectives, select_solution, solve_exact, solve_nsga2, AllocError,
    AllocationProblem, Nsga2Params, ObjectiveVector, ParetoPoint, ParetoSet, SolveOutcome, ViolationKind,
    DEFAULT_ENUMERATION_CAP,
};
use forge_core::model::{load_instance_model, AllocationMatrix, HardwareNode, InstanceId, InstanceModel};
use forge_testkit::alloc_oracle::{all_assignments, oracle_front, oracle_route};
use forge_testkit::gen::random_alloc_model;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ALLOC_MINI: &str = include_str!("../../../fixtures/alloc_mini.json");
const DEMO_BRAKE: &str = include_str!("../../../fixtures/demo_brake.json");

fn mini() -> InstanceModel {
    load_instance_model(ALLOC_MINI).unwrap()
}

fn demo() -> InstanceModel {
    load_instance_model(DEMO_BRAKE).unwrap()
}

fn problem(model: &InstanceModel) -> AllocationProblem<f64> {
    build_problem(model, &[]).unwrap()
}

fn matrix(pairs: &[(&str, &str)]) -> AllocationMatrix {
    pairs
        .iter()
        .map(|(i, n)| (i.parse::<InstanceId>().unwrap(), n.to_string()))
        .collect()
}

fn obj(p: f64, c: f64, t: f64) -> ObjectiveVector<f64> {
    ObjectiveVector {
        power_w: p,
        cost: c,
        traffic_bps: t,
    }
}

fn points(front: &ParetoSet<f64>) -> Vec<[f64; 3]> {
    front.points.iter().map(|p| p.objectives.as_array()).collect()
}

#[test]
fn alloc_mini_objectives() {
    let p = problem(&mini());
    let both = objectives(&p, &matrix(&[("f1#0", "n1"), ("f2#0", "n1")])).unwrap();
    assert_eq!(both, obj(7.0, 10.0, 0.0));
    let split = objectives(&p, &matrix(&[("f1#0", "n1"), ("f2#0", "n2")])).unwrap();
    assert_eq!(split, obj(10.0, 15.0, 80_000.0));
}

#[test]
fn empty_problem_has_zero_objectives() {
    let p = problem(&InstanceModel::default());
    assert_eq!(objectives(&p, &AllocationMatrix::new()).unwrap(), obj(0.0, 0.0, 0.0));
    let SolveOutcome::Front(front) = solve_exact(&p, DEFAULT_ENUMERATION_CAP).unwrap() else {
        panic!("empty problem is trivially feasible")
    };
    assert_eq!(points(&front), vec![[0.0, 0.0, 0.0]]);
}

#[test]
fn partial_matrix_is_a_totality_error() {
    let p = problem(&mini());
    let err = objectives(&p, &matrix(&[("f1#0", "n1")])).unwrap_err();
    assert!(matches!(err, AllocError::Totality(_)));
    assert!(matches!(check_feasible(&p, &matrix(&[("f1#0", "n1")])), Err(AllocError::Totality(_))));
}

#[test]
fn demo_brake_problem_shape() {
    let p = problem(&demo());
    let ids: Vec<String> = p.instances.iter().map(|i| i.id.to_string()).collect();
    assert_eq!(ids, ["brake_ctrl#0", "brake_ctrl#1", "speed_sense#0"]);
    let flows: Vec<(String, String)> = p
        .flows
        .iter()
        .map(|f| (p.instances[f.src].id.to_string(), p.instances[f.dst].id.to_string()))
        .collect();
    assert_eq!(
        flows,
        [
            ("speed_sense#0".to_string(), "brake_ctrl#0".to_string()),
            ("speed_sense#0".to_string(), "brake_ctrl#1".to_string())
        ]
    );
    let route = p.routes[0][1].as_ref().unwrap();
    assert_eq!(route.hops(), 1);
    assert_eq!(route.latency_ms, 2.0);
}

#[test]
fn single_node_routes_are_empty() {
    let mut m = mini();
    m.hardware.retain(|n| n.id == "n1");
    m.links.clear();
    let p = problem(&m);
    assert_eq!(p.routes[0][0].as_ref().unwrap().hops(), 0);
}

#[test]
fn disconnected_nodes_make_split_assignments_infeasible() {
    let mut m = mini();
    m.links.clear();
    let p = problem(&m);
    assert!(p.routes[0][1].is_none());
    let vs = check_feasible(&p, &matrix(&[("f1#0", "n1"), ("f2#0", "n2")])).unwrap();
    assert_eq!(vs.len(), 1);
    assert_eq!(vs[0].kind, ViolationKind::Unroutable);
    assert!(check_feasible(&p, &matrix(&[("f1#0", "n1"), ("f2#0", "n1")])).unwrap().is_empty());
}

#[test]
fn demo_brake_check_examples() {
    let p = problem(&demo());
    let vs = check_feasible(
        &p,
        &matrix(&[("brake_ctrl#0", "n1"), ("brake_ctrl#1", "n1"), ("speed_sense#0", "n2")]),
    )
    .unwrap();
    assert_eq!(vs.len(), 1);
    assert_eq!(vs[0].kind, ViolationKind::AntiAffinity);
    assert_eq!(vs[0].subjects, ["brake_ctrl", "n1"]);

    let vs = check_feasible(
        &p,
        &matrix(&[("brake_ctrl#0", "n2"), ("brake_ctrl#1", "n1"), ("speed_sense#0", "n1")]),
    )
    .unwrap();
    assert!(vs.iter().any(|v| v.kind == ViolationKind::Asil && v.subjects[0] == "brake_ctrl#0"));
}

#[test]
fn demo_brake_every_assignment_breaks_asil_or_anti_affinity() {
    let model = demo();
    let p = problem(&model);
    let all = all_assignments(&model);
    assert_eq!(all.len(), 8);
    for a in all {
        let m: AllocationMatrix = a.into_iter().collect();
        let vs = check_feasible(&p, &m).unwrap();
        assert!(
            vs.iter()
                .any(|v| matches!(v.kind, ViolationKind::Asil | ViolationKind::AntiAffinity)),
            "{m:?}"
        );
    }
}

#[test]
fn exact_fixture_fronts() {
    let SolveOutcome::Front(front) = solve_exact(&problem(&mini()), DEFAULT_ENUMERATION_CAP).unwrap() else {
        panic!("alloc-mini is feasible")
    };
    assert_eq!(points(&front), vec![[7.0, 10.0, 0.0]]);
    assert_eq!(front.points[0].assignment, matrix(&[("f1#0", "n1"), ("f2#0", "n1")]));

    let SolveOutcome::Empty(inf) = solve_exact(&problem(&demo()), DEFAULT_ENUMERATION_CAP).unwrap() else {
        panic!("demo-brake is infeasible")
    };
    assert!(inf.best.is_some());
    assert!(inf.violations.iter().any(|v| matches!(v.kind, ViolationKind::Asil | ViolationKind::AntiAffinity)
        && v.subjects.iter().any(|s| s.starts_with("brake_ctrl"))));
}

#[test]
fn exact_single_forced_instance() {
    let mut m = mini();
    m.functions.retain(|f| f.id == "f1");
    m.edges.clear();
    m.hardware.retain(|n| n.id == "n2");
    m.links.clear();
    let SolveOutcome::Front(front) = solve_exact(&problem(&m), DEFAULT_ENUMERATION_CAP).unwrap() else {
        panic!()
    };
    assert_eq!(front.points.len(), 1);
    assert_eq!(front.points[0].assignment, matrix(&[("f1#0", "n2")]));
}

#[test]
fn exact_size_cap() {
    let p = problem(&demo());
    assert!(matches!(solve_exact(&p, 7), Err(AllocError::Size { .. })));
}

#[test]
fn pins_are_respected() {
    let m = mini();
    let pins = vec![("f2#0".parse().unwrap(), "n2".to_string())];
    let p: AllocationProblem<f64> = build_problem(&m, &pins).unwrap();
    let SolveOutcome::Front(front) = solve_exact(&p, DEFAULT_ENUMERATION_CAP).unwrap() else {
        panic!()
    };
    for point in &front.points {
        assert_eq!(point.assignment.node_of(&"f2#0".parse().unwrap()), Some("n2"));
    }
    let bad = vec![("ghost#0".parse().unwrap(), "n2".to_string())];
    assert!(build_problem::<f64>(&m, &bad).is_err());
}

#[test]
fn nsga2_matches_exact_on_alloc_mini() {
    let p = problem(&mini());
    let params = Nsga2Params {
        population: 16,
        generations: 50,
        seed: 42,
        ..Nsga2Params::default()
    };
    let SolveOutcome::Front(front) = solve_nsga2(&p, &params).unwrap() else {
        panic!()
    };
    let SolveOutcome::Front(exact) = solve_exact(&p, DEFAULT_ENUMERATION_CAP).unwrap() else {
        panic!()
    };
    assert_eq!(front, exact);
    let again = solve_nsga2(&p, &params).unwrap();
    assert_eq!(again.front().unwrap().to_json(), front.to_json());
}

#[test]
fn nsga2_rejects_bad_population() {
    let p = problem(&mini());
    for population in [2, 7] {
        let params = Nsga2Params {
            population,
            ..Nsga2Params::default()
        };
        assert!(matches!(solve_nsga2(&p, &params), Err(AllocError::Params(_))));
    }
}

#[test]
fn nsga2_reports_infeasibility() {
    let SolveOutcome::Empty(inf) = solve_nsga2(&problem(&demo()), &Nsga2Params::default()).unwrap() else {
        panic!()
    };
    assert!(!inf.violations.is_empty());
}

#[test]
fn generic_over_f32() {
    let p: AllocationProblem<f32> = build_problem(&mini(), &[]).unwrap();
    let SolveOutcome::Front(front) = solve_exact(&p, DEFAULT_ENUMERATION_CAP).unwrap() else {
        panic!()
    };
    assert_eq!(front.points[0].objectives.as_array(), [7.0f32, 10.0, 0.0]);
    assert_eq!(front.to_json(), {
        let p64 = problem(&mini());
        solve_exact(&p64, DEFAULT_ENUMERATION_CAP).unwrap().front().unwrap().to_json()
    });
}

fn two_point_front() -> ParetoSet<f64> {
    ParetoSet {
        points: vec![
            ParetoPoint {
                assignment: matrix(&[("f1#0", "n1"), ("f2#0", "n1")]),
                objectives: obj(7.0, 10.0, 0.0),
            },
            ParetoPoint {
                assignment: matrix(&[("f1#0", "n1"), ("f2#0", "n2")]),
                objectives: obj(10.0, 15.0, 80_000.0),
            },
        ],
    }
}

#[test]
fn select_examples() {
    let front = two_point_front();
    let chosen = select_solution(&front, [1.0, 0.0, 0.0]).unwrap();
    assert_eq!(chosen.objectives, obj(7.0, 10.0, 0.0));
    let single = ParetoSet {
        points: vec![front.points[1].clone()],
    };
    assert_eq!(select_solution(&single, [0.0, 0.0, 1.0]).unwrap(), &front.points[1]);
    assert!(matches!(
        select_solution(&ParetoSet::<f64>::default(), [1.0, 1.0, 1.0]),
        Err(AllocError::EmptyFront)
    ));
    assert!(matches!(select_solution(&front, [0.0, 0.0, 0.0]), Err(AllocError::Weights)));
    assert!(matches!(select_solution(&front, [-1.0, 0.0, 0.0]), Err(AllocError::Weights)));
}

#[test]
fn front_json_shape() {
    let json: serde_json::Value = serde_json::from_str(&two_point_front().to_json()).unwrap();
    assert_eq!(json[0]["assignment"]["f2#0"], "n1");
    assert_eq!(json[1]["objectives"]["traffic_bps"], 80000);
}

fn random_problem(seed: u64) -> (InstanceModel, AllocationProblem<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = random_alloc_model(&mut rng, 5, 4);
    let p = problem(&model);
    (model, p)
}

fn assert_sound(p: &AllocationProblem<f64>, front: &ParetoSet<f64>) {
    for point in &front.points {
        assert!(check_feasible(p, &point.assignment).unwrap().is_empty());
        assert_eq!(objectives(p, &point.assignment).unwrap(), point.objectives);
    }
    for a in &front.points {
        for b in &front.points {
            assert!(!a.objectives.dominates(&b.objectives));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn exact_front_equals_oracle(seed in any::<u64>()) {
        let (model, p) = random_problem(seed);
        let expected = oracle_front(&model);
        match solve_exact(&p, DEFAULT_ENUMERATION_CAP).unwrap() {
            SolveOutcome::Front(front) => {
                assert_sound(&p, &front);
                prop_assert_eq!(points(&front), expected);
            }
            SolveOutcome::Empty(inf) => {
                prop_assert!(expected.is_empty());
                prop_assert!(!inf.violations.is_empty());
            }
        }
    }

    #[test]
    fn routes_match_path_enumeration_and_are_symmetric(seed in any::<u64>()) {
        let (model, p) = random_problem(seed);
        for a in 0..p.nodes.len() {
            for b in 0..p.nodes.len() {
                let ours = p.routes[a][b].as_ref();
                let theirs = oracle_route(&model, &p.nodes[a].id, &p.nodes[b].id);
                prop_assert_eq!(ours.map(|r| r.latency_units), theirs.as_ref().map(|t| t.0));
                if let (Some(r), Some(back)) = (ours, p.routes[b][a].as_ref()) {
                    let mut rev = back.nodes.clone();
                    rev.reverse();
                    prop_assert_eq!(&r.nodes, &rev);
                }
            }
        }
    }

    #[test]
    fn adding_hardware_keeps_feasible_assignments(seed in any::<u64>()) {
        let (model, p) = random_problem(seed);
        let mut bigger = model.clone();
        bigger.hardware.push(HardwareNode {
            id: "zz_extra".into(),
            cpu_cap: 8,
            mem_cap: 1024,
            base_power: 1.0,
            cost: 1.0,
            asil_cap: forge_core::model::AsilLevel::D,
        });
        let q = problem(&bigger);
        for a in all_assignments(&model) {
            let m: AllocationMatrix = a.into_iter().collect();
            if check_feasible(&p, &m).unwrap().is_empty() {
                prop_assert!(check_feasible(&q, &m).unwrap().is_empty());
                prop_assert_eq!(objectives(&q, &m).unwrap(), objectives(&p, &m).unwrap());
            }
        }
    }

    #[test]
    fn cpu_overload_magnitude_is_exact(k in 1u64..20) {
        let mut m = mini();
        m.functions[1].cpu_req = 4 - m.functions[0].cpu_req + k;
        let p = problem(&m);
        let vs = check_feasible(&p, &matrix(&[("f1#0", "n1"), ("f2#0", "n1")])).unwrap();
        let cpu: Vec<_> = vs.iter().filter(|v| v.kind == ViolationKind::CpuCapacity).collect();
        prop_assert_eq!(cpu.len(), 1);
        prop_assert_eq!(cpu[0].magnitude, k as f64);
    }

    #[test]
    fn selection_is_scale_invariant(seed in any::<u64>(), w in prop::array::uniform3(0.0f64..5.0), scale in 0.01f64..1000.0) {
        prop_assume!(w.iter().any(|x| *x > 0.0));
        let (_, p) = random_problem(seed);
        if let SolveOutcome::Front(front) = solve_exact(&p, DEFAULT_ENUMERATION_CAP).unwrap() {
            let a = select_solution(&front, w).unwrap();
            let b = select_solution(&front, [w[0] * scale, w[1] * scale, w[2] * scale]).unwrap();
            prop_assert_eq!(&a.assignment, &b.assignment);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn nsga2_fronts_are_sound_and_seeded(seed in any::<u64>()) {
        let (_, p) = random_problem(seed);
        let params = Nsga2Params { population: 32, generations: 40, seed, ..Nsga2Params::default() };
        let a = solve_nsga2(&p, &params).unwrap();
        let b = solve_nsga2(&p, &params).unwrap();
        prop_assert_eq!(&a, &b);
        if let SolveOutcome::Front(front) = a {
            assert_sound(&p, &front);
        }
    }
}
