use approx::assert_abs_diff_eq;
use ganlab::combination::{build_dcom, check_margin, combine, convex_mix, lipschitz_upper_bound, sibling_dcom, CombOp};
use ganlab::geometry::{count_rectangles, generate_paired, generate_toy_pair, pgm, BinaryImage, DEFAULT_RECT};
use ganlab::rng;
use ganlab::tinygan::{Activation, DenseNet};
use proptest::prelude::*;

fn count(img: &BinaryImage) -> (usize, bool) {
    let c = count_rectangles(img, DEFAULT_RECT, DEFAULT_RECT);
    (c.count, c.clean)
}

#[test]
fn paired_dataset_shape() {
    let ds = generate_paired(32, 3).unwrap();
    assert_eq!(ds.len(), 64);
    assert_eq!(ds.target_count, 2);
    assert!(ds.images.iter().all(|img| count(img) == (2, true)));
    assert_eq!(ds.sibling_pairs.len(), 32);
}

#[test]
fn toy_pair_combinations() {
    let ds = generate_toy_pair(5).unwrap();
    assert_eq!(ds.len(), 2);
    let (a, b) = (&ds.images[0], &ds.images[1]);
    assert_eq!(count(&combine(a, b, CombOp::And).unwrap()), (2, true));
    assert_eq!(count(&combine(a, b, CombOp::Or).unwrap()), (4, true));
}

#[test]
fn dataset_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_paired(6, 8).unwrap();
    let written = pgm::save_dataset(dir.path(), &ds).unwrap();
    assert_eq!(written.len(), 13);
    let back = pgm::load_dataset(dir.path()).unwrap();
    assert_eq!(back.images, ds.images);
    assert_eq!(back.sibling_pairs, ds.sibling_pairs);
}

#[test]
fn all_pair_pool_is_capped_and_seeded() {
    let ds = generate_paired(20, 1).unwrap();
    let a = build_dcom(&ds.images, CombOp::Or, 50, 9).unwrap();
    let b = build_dcom(&ds.images, CombOp::Or, 50, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 50);
    assert!(a.source_pairs.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(build_dcom(&ds.images, CombOp::And, usize::MAX, 0).unwrap().len(), 40 * 39 / 2);
}

#[test]
fn average_of_disjoint_images_is_not_binary() {
    let ds = generate_paired(1, 2).unwrap();
    let avg = combine(&ds.images[0], &ds.images[1], CombOp::Average).unwrap();
    assert!(avg.first_non_binary().is_some());
    assert!(combine(&avg, &ds.images[0], CombOp::Or).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sibling_combinations_hold_three_and_one(seed in any::<u64>()) {
        let ds = generate_paired(4, seed).unwrap();
        for img in sibling_dcom(&ds, CombOp::Or).unwrap().images {
            prop_assert_eq!(count(&img), (3, true));
        }
        for img in sibling_dcom(&ds, CombOp::And).unwrap().images {
            prop_assert_eq!(count(&img), (1, true));
        }
    }

    #[test]
    fn combinations_commute(seed in any::<u64>(), op in prop_oneof![Just(CombOp::And), Just(CombOp::Or), Just(CombOp::Average)]) {
        let ds = generate_paired(2, seed).unwrap();
        let (a, b) = (&ds.images[0], &ds.images[3]);
        prop_assert_eq!(combine(a, b, op).unwrap(), combine(b, a, op).unwrap());
    }

    #[test]
    fn mixture_distances_split_by_lambda(seed in any::<u64>(), lambda in 0.0..=1.0f64) {
        let ds = generate_paired(2, seed).unwrap();
        let (a, b) = (&ds.images[0], &ds.images[2]);
        let mix = convex_mix(a, b, lambda).unwrap();
        let d = a.distance(b).unwrap();
        assert_abs_diff_eq!(mix.distance(a).unwrap(), (1.0 - lambda) * d, epsilon = 1e-9);
        assert_abs_diff_eq!(mix.distance(b).unwrap(), lambda * d, epsilon = 1e-9);
    }

    #[test]
    fn lipschitz_bound_holds_for_random_critics(seed in any::<u64>(), lambda in 0.0..=1.0f64) {
        let mut r = rng::stream(seed, 0);
        let net = DenseNet::new(&[1024, 16, 8, 1], Activation::LeakyRelu(0.2), Activation::Identity, &mut r);
        let l = lipschitz_upper_bound(&net).unwrap();
        let ds = generate_paired(2, seed).unwrap();
        let m = check_margin(&net, &ds.images[0], &ds.images[3], lambda, l).unwrap();
        prop_assert!(m.holds, "{:?}", m);
        prop_assert!(m.positivity_consistent());
    }

    #[test]
    fn pgm_round_trip(seed in any::<u64>()) {
        let ds = generate_paired(1, seed).unwrap();
        let img = &ds.images[1];
        prop_assert_eq!(&pgm::decode(&pgm::encode(img)).unwrap(), img);
    }
}
