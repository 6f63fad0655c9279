use forge_core::constraint::{evaluate, parse_constraints, print_constraints, ConstraintSet, Verdict};
use forge_testkit::gen::{random_constraint, random_model};
use forge_testkit::reference_eval::reference_report;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn production(cs: &ConstraintSet, model: &forge_core::model::InstanceModel) -> Vec<(String, String, String, Verdict)> {
    evaluate(cs, model)
        .entries
        .into_iter()
        .map(|e| (e.constraint, e.context, e.element, e.verdict))
        .collect()
}

#[test]
fn differential_against_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut seen = [0usize; 3];
    for i in 0..300 {
        let model = random_model(&mut rng);
        let cs = ConstraintSet {
            constraints: vec![random_constraint(&mut rng, &format!("C{i}"))],
        };
        let prod = production(&cs, &model);
        let reference = reference_report(&cs, &model);
        assert_eq!(prod, reference, "{}", print_constraints(&cs));
        for (_, _, _, v) in &prod {
            seen[*v as usize] += 1;
        }
    }
    assert!(seen.iter().all(|&n| n > 0), "verdict mix {seen:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_parse_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cs = ConstraintSet { constraints: vec![random_constraint(&mut rng, "R")] };
        let printed = print_constraints(&cs);
        let reparsed = parse_constraints(&printed).unwrap();
        prop_assert_eq!(&reparsed, &cs, "{}", printed);
        prop_assert_eq!(print_constraints(&reparsed), printed);
    }

    #[test]
    fn evaluation_is_pure_and_covers_every_element(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng);
        let cs = ConstraintSet {
            constraints: (0..3).map(|i| random_constraint(&mut rng, &format!("C{i}"))).collect(),
        };
        let a = evaluate(&cs, &model);
        let b = evaluate(&cs, &model);
        prop_assert_eq!(&a, &b);
        let expected: usize = cs
            .constraints
            .iter()
            .map(|c| forge_core::constraint::context_elements(&model, c.context).len())
            .sum();
        prop_assert_eq!(a.entries.len(), expected);
    }
}
