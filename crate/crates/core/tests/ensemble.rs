use irseg_core::ensemble::{candidate_subsets, select_subset, vote};
use irseg_core::eval::{default_lambda_grid, tune_lambda};
use proptest::prelude::*;

fn maps(k: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..=1.0, n), k)
}

proptest! {
    #[test]
    fn vote_is_order_free_and_bounded(m in maps(4, 30), rot in 0usize..4) {
        let a: Vec<&[f64]> = m.iter().map(Vec::as_slice).collect();
        let mut b = a.clone();
        b.rotate_left(rot);
        let va = vote(&a).unwrap();
        prop_assert_eq!(&va, &vote(&b).unwrap());
        for (i, v) in va.iter().enumerate() {
            let lo = m.iter().map(|r| r[i]).fold(f64::INFINITY, f64::min);
            let hi = m.iter().map(|r| r[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= *v && *v <= hi);
        }
    }

    #[test]
    fn vote_of_one_map_is_identity(m in maps(1, 30)) {
        prop_assert_eq!(vote(&[m[0].as_slice()]).unwrap(), m[0].clone());
    }

    #[test]
    fn selection_is_argmax_of_evaluated(m in maps(4, 40), y in prop::collection::vec(0u8..2, 40)) {
        let mut y = y;
        y[0] = 0;
        y[1] = 1;
        let refs: Vec<&[f64]> = m.iter().map(Vec::as_slice).collect();
        let grid = default_lambda_grid();
        let sel = select_subset(&refs, &y, &grid).unwrap();
        prop_assert_eq!(sel.evaluated.len(), candidate_subsets(4).len());
        prop_assert!(sel.evaluated.iter().all(|(_, j)| *j <= sel.tuned.j));
        let maps: Vec<&[f64]> = sel.ensemble.members.iter().map(|&i| refs[i]).collect();
        prop_assert_eq!(tune_lambda(&vote(&maps).unwrap(), &y, &grid).unwrap().j, sel.tuned.j);
    }
}

#[test]
fn subsets_have_at_least_two_members() {
    let s = candidate_subsets(5);
    assert_eq!(s.len(), 32 - 5 - 1);
    assert!(s.iter().all(|m| m.len() >= 2));
}
