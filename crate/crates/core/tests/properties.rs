//! Randomized invariants of the transforms, the classifier and the dataset
//! utilities.

use metasets::data::{build_target_domain, generate_synthetic_dataset, split_train_val, ShapeFamily};
use metasets::geometry::{
    apply_transform, normalize_unit_ball, round_half_up_count, Point3, PointCloud, TransformSpec,
};
use metasets::nn::{
    decode_checkpoint, encode_checkpoint, forward, init_params_seeded, loss_and_grad, loss_batch, AdamState,
    Architecture,
};
use metasets::rng::seeded;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point3> {
    [-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0]
}

fn cloud(min: usize, max: usize) -> impl Strategy<Value = PointCloud> {
    (prop::collection::vec(point(), min..max), 0usize..5).prop_map(|(points, label)| PointCloud::new(points, label))
}

fn spec() -> impl Strategy<Value = TransformSpec> {
    prop_oneof![
        Just(TransformSpec::Identity),
        (1.01f64..3.0).prop_map(|g| TransformSpec::density(g).unwrap()),
        (1.0f64..90.0).prop_map(|x| TransformSpec::dropping(x).unwrap()),
        (0.005f64..2.0).prop_map(|w| TransformSpec::occlusion(w).unwrap()),
    ]
}

fn small_arch() -> Architecture {
    Architecture {
        point_widths: vec![8, 16],
        head_widths: vec![8],
        classes: 5,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn transforms_only_delete_points(c in cloud(10, 120), s in spec(), seed in any::<u64>()) {
        let out = apply_transform(&s, &c, &mut seeded(seed)).unwrap();
        prop_assert_eq!(out.label, c.label);
        let mut rest = c.points.iter();
        prop_assert!(out.points.iter().all(|p| rest.any(|q| q == p)));
    }

    #[test]
    fn transforms_are_deterministic(c in cloud(10, 120), s in spec(), seed in any::<u64>()) {
        let a = apply_transform(&s, &c, &mut seeded(seed)).unwrap();
        let b = apply_transform(&s, &c, &mut seeded(seed)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn dropping_removes_exact_count(c in cloud(1, 200), x in 0.1f64..99.0, seed in any::<u64>()) {
        let m = round_half_up_count(c.len(), x);
        prop_assume!(m < c.len());
        let out = apply_transform(&TransformSpec::dropping(x).unwrap(), &c, &mut seeded(seed)).unwrap();
        prop_assert_eq!(out.len(), c.len() - m);
    }

    #[test]
    fn normalization_is_idempotent(c in cloud(2, 60)) {
        let once = normalize_unit_ball(&c).unwrap();
        let twice = normalize_unit_ball(&once).unwrap();
        prop_assert!(once.max_norm() <= 1.0 + 1e-12);
        for (a, b) in once.points.iter().zip(&twice.points) {
            for k in 0..3 {
                prop_assert!((a[k] - b[k]).abs() < 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_ignores_point_order(c in cloud(1, 40), seed in any::<u64>()) {
        let params = init_params_seeded(&small_arch(), seed).unwrap();
        let mut shuffled = c.clone();
        shuffled.points.reverse();
        shuffled.points.rotate_left(seed as usize % c.len());
        prop_assert_eq!(forward(&params, &c).unwrap(), forward(&params, &shuffled).unwrap());
    }

    #[test]
    fn batch_loss_ignores_batch_order(batch in prop::collection::vec(cloud(1, 20), 2..6), seed in any::<u64>()) {
        let params = init_params_seeded(&small_arch(), seed).unwrap();
        let mut reversed = batch.clone();
        reversed.reverse();
        let a = loss_batch(&params, &batch).unwrap();
        let b = loss_batch(&params, &reversed).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn checkpoints_round_trip_bit_exactly(seed in any::<u64>(), steps in 0usize..3) {
        let arch = small_arch();
        let mut params = init_params_seeded(&arch, seed).unwrap();
        let mut adam = AdamState::new(&arch);
        let batch = vec![PointCloud::new(vec![[0.1, 0.2, 0.3], [-0.4, 0.5, 0.0]], 1)];
        for _ in 0..steps {
            let (_, g) = loss_and_grad(&params, &batch).unwrap();
            adam.update(&mut params, &g, 0.01).unwrap();
        }
        let (p, a) = decode_checkpoint(&encode_checkpoint(&params, &adam).unwrap()).unwrap();
        prop_assert_eq!(p, params);
        prop_assert_eq!(a, adam);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn split_keeps_five_to_one_per_class(classes in 2usize..=5, per_class in 3usize..40, seed in any::<u64>()) {
        let families = ShapeFamily::first(classes).unwrap();
        let source = generate_synthetic_dataset(&families, per_class, 64, seed).unwrap();
        let (train, val) = split_train_val(&source, seed ^ 1).unwrap();
        for (t, v) in train.class_histogram().into_iter().zip(val.class_histogram()) {
            prop_assert_eq!(t + v, per_class);
            prop_assert!((v as f64 - per_class as f64 / 6.0).abs() <= 1.0, "train {} val {}", t, v);
        }
    }

    #[test]
    fn target_domain_keeps_labels(per_class in 1usize..8, w in 0.05f64..0.5, x in 5.0f64..60.0, seed in any::<u64>()) {
        let source = generate_synthetic_dataset(&ShapeFamily::first(5).unwrap(), per_class, 64, seed).unwrap();
        let held_out = [TransformSpec::occlusion(w).unwrap(), TransformSpec::dropping(x).unwrap()];
        let target = build_target_domain(&source, &held_out, &[], seed).unwrap();
        prop_assert_eq!(target.len(), source.len());
        for (t, s) in target.items.iter().zip(&source.items) {
            prop_assert_eq!(t.label, s.label);
        }
    }
}
