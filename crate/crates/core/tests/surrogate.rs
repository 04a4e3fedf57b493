mod common;

use abmcal::ks::Label;
use abmcal::surrogate::*;
use common::*;

#[test]
fn tree_resubstitution_is_exact() {
    let hyper = TreeHyper {
        max_depth: usize::MAX,
        ..Default::default()
    };
    for seed in 0..3 {
        let data = conflict_free(seed, 300);
        let m = train_decision_tree(&data, hyper).unwrap();
        for i in 0..data.len() {
            assert_eq!(m.predict(data.row(i)).unwrap(), data.label(i));
        }
    }
}

#[test]
fn gbt_training_loss_never_increases() {
    for data in gbt_datasets() {
        let (_, trace) = train_gbt_with_trace(&data, GbtHyper::default()).unwrap();
        assert_eq!(trace.len(), 101);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn gbt_single_leaf_matches_fold() {
    for (i, data) in gbt_datasets().iter().enumerate() {
        let lambda = 0.5 + i as f64;
        let hyper = GbtHyper {
            n_rounds: 1,
            max_depth: 0,
            lambda_l2: lambda,
            ..Default::default()
        };
        let m = train_gbt(data, hyper).unwrap();
        let RegressionNode::Leaf { weight } = m.trees[0].nodes[0] else {
            panic!("expected a leaf");
        };
        assert!((weight - single_leaf_weight(data.labels(), lambda)).abs() < 1e-10);
    }
}

#[test]
fn svm_fits_separable_sets() {
    for seed in 0..3 {
        let data = separable(seed, 200);
        let m = train_svm(&data, SvmHyper::default(), &[(0.0, 1.0); 2], seed).unwrap();
        let correct = (0..data.len())
            .filter(|&i| m.predict(data.row(i)).unwrap() == data.label(i))
            .count();
        assert_eq!(correct, data.len());
    }
}

#[test]
fn f1_half_case() {
    use Label::{Negative as N, Positive as P};
    let r = f1_score(&[P, P, N, N], &[P, N, P, N]).unwrap();
    assert_eq!(r.f1, 0.5);
}

#[test]
fn balanced_weights_still_train() {
    let data = separable(9, 100);
    let hyper = SurrogateHyper {
        decision_tree: TreeHyper {
            class_weight: ClassWeight::Balanced,
            ..Default::default()
        },
        gradient_boosted: GbtHyper {
            class_weight: ClassWeight::Balanced,
            ..Default::default()
        },
        linear_svm: SvmHyper {
            class_weight: ClassWeight::Balanced,
            ..Default::default()
        },
    };
    for kind in [SurrogateKind::DecisionTree, SurrogateKind::GradientBoosted, SurrogateKind::LinearSvm] {
        let (_, report) = fit_and_validate(kind, &data, &hyper, &[(0.0, 1.0); 2], 0.8, 1).unwrap();
        assert!(report.f1 > 0.8, "{kind:?}: {report:?}");
    }
}
