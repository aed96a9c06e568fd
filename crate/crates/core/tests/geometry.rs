use pcdforge_core::geometry::ply::{read_ply, write_ply};
use pcdforge_core::geometry::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(n: usize, seed: u64) -> Vec<Point3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)])
        .collect()
}

fn dist(a: &Point3, b: &Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn brute_chamfer(a: &[Point3], b: &[Point3]) -> f64 {
    let dir = |x: &[Point3], y: &[Point3]| {
        x.iter()
            .map(|p| y.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
            .sum::<f64>()
            / x.len() as f64
    };
    0.5 * (dir(a, b) + dir(b, a))
}

#[test]
fn chamfer_matches_brute_force_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..40 {
        let (na, nb) = (rng.random_range(50..500), rng.random_range(50..500));
        let a = cloud(na, 2 * i);
        let b = cloud(nb, 2 * i + 1);
        let got = chamfer(&a, &b).unwrap();
        let want = brute_chamfer(&a, &b);
        assert!((got - want).abs() < 1e-12, "pair {i}: {got} vs {want}");
        assert_eq!(got, chamfer(&b, &a).unwrap());
        assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
    }
}

#[test]
fn chamfer_of_shifted_copy_is_the_shift() {
    // Shift smaller than half the minimum spacing of a lattice.
    let mut a = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            for k in 0..5 {
                a.push([i as f64, j as f64, k as f64]);
            }
        }
    }
    let b: Vec<Point3> = a.iter().map(|p| [p[0] + 0.1, p[1], p[2]]).collect();
    assert!((chamfer(&a, &b).unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn chamfer_rejects_empty() {
    assert!(chamfer(&[], &[[0.0; 3]]).is_err());
    assert!(KdTree::build(&[]).is_err());
}

#[test]
fn per_class_requires_all_classes() {
    let a = MultiClassPointCloud::from_classes([cloud(5, 1), cloud(5, 2), cloud(5, 3)]);
    let missing = MultiClassPointCloud::from_classes([cloud(5, 1), cloud(5, 2), vec![]]);
    assert!(per_class_chamfer(&a, &a).unwrap().iter().all(|&v| v == 0.0));
    assert!(matches!(per_class_chamfer(&a, &missing), Err(GeometryError::MissingClass(_))));
}

#[test]
fn ply_round_trip_is_exact() {
    let c = MultiClassPointCloud::from_classes([cloud(40, 1), cloud(30, 2), cloud(20, 3)]);
    let mut buf = Vec::new();
    write_ply(&mut buf, &c).unwrap();
    let back = read_ply(buf.as_slice()).unwrap();
    assert_eq!(back, c);
    let mut again = Vec::new();
    write_ply(&mut again, &back).unwrap();
    assert_eq!(buf, again);
}

#[test]
fn ply_rejects_bad_labels_and_truncation() {
    let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nproperty double y\nproperty double z\nproperty uchar class\nend_header\n0 0 0 0\n1 1 1 7\n";
    assert!(matches!(read_ply(text.as_bytes()), Err(GeometryError::UnknownClass(7)) | Err(GeometryError::PlyParse { .. })));
    let short = "ply\nformat ascii 1.0\nelement vertex 3\nproperty double x\nproperty double y\nproperty double z\nproperty uchar class\nend_header\n0 0 0 0\n";
    assert!(read_ply(short.as_bytes()).is_err());
}

#[test]
fn normalization_fit_and_inverse() {
    let a = MultiClassPointCloud::from_classes([cloud(30, 1), cloud(30, 2), cloud(30, 3)]);
    let b = a.map_points(|_, p| [p[0] * 2.0 + 10.0, p[1] * 2.0, p[2] * 2.0 - 4.0]);
    let t = NormalizationTransform::fit([&a, &b]).unwrap();
    let want_scale = 0.5 * (a.bbox_diagonal() + b.bbox_diagonal());
    assert!((t.scale - want_scale).abs() < 1e-12);
    for d in 0..3 {
        assert!((t.translation[d] - 0.5 * (a.centroid()[d] + b.centroid()[d])).abs() < 1e-12);
    }
    let back = t.denormalize(&t.normalize(&a));
    for (p, q) in back.points().iter().zip(a.points()) {
        assert!(dist(p, q) < 1e-12);
    }
    assert!(NormalizationTransform::new([0.0; 3], 0.0).is_err());
}

proptest! {
    #[test]
    fn kdtree_nearest_matches_linear_scan(
        n in 1usize..300,
        leaf in 1usize..32,
        seed in 0u64..10_000,
    ) {
        let pts = cloud(n, seed);
        let tree = KdTree::with_leaf_size(&pts, leaf).unwrap();
        for q in cloud(20, seed + 1) {
            let got = tree.nearest(&q);
            let (mut best, mut idx) = (f64::INFINITY, 0);
            for (i, p) in pts.iter().enumerate() {
                let d = dist(&q, p);
                if d < best {
                    best = d;
                    idx = i;
                }
            }
            prop_assert!((got.distance - best).abs() < 1e-12);
            prop_assert_eq!(got.index, idx);
        }
    }

    #[test]
    fn chamfer_invariants(na in 1usize..120, nb in 1usize..120, seed in 0u64..10_000) {
        let a = cloud(na, seed);
        let b = cloud(nb, seed + 1);
        let ab = chamfer(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, chamfer(&b, &a).unwrap());
        prop_assert!((ab - brute_chamfer(&a, &b)).abs() < 1e-12);
        prop_assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
        // Reordering either set leaves the value unchanged up to summation order.
        let mut rev = b.clone();
        rev.reverse();
        prop_assert!((chamfer(&a, &rev).unwrap() - ab).abs() < 1e-12);
    }
}
