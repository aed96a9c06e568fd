use pcdforge_core::autodiff::Tensor;
use pcdforge_core::geometry::{MultiClassPointCloud, NormalizationTransform, Point3};
use pcdforge_core::network::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(per_class: usize, seed: u64) -> MultiClassPointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = || -> Vec<Point3> {
        (0..per_class)
            .map(|_| [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)])
            .collect()
    };
    MultiClassPointCloud::from_classes([set(), set(), set()])
}

fn toy() -> PcdNet {
    PcdNet::init(ArchitectureConfig::toy(), NormalizationTransform::identity()).unwrap()
}

#[test]
fn output_shapes_follow_config() {
    for arch in [ArchitectureConfig::toy(), ArchitectureConfig::desk()] {
        let net = PcdNet::init(arch.clone(), NormalizationTransform::identity()).unwrap();
        let pred = net.predict(&cloud(arch.input_points_per_class, 1)).unwrap();
        for c in 0..3 {
            assert_eq!(pred.coarse[c].len(), arch.coarse_points);
            assert_eq!(pred.dense[c].len(), arch.coarse_points * arch.grid_side * arch.grid_side);
        }
        assert!(pred.is_finite());
        assert_eq!(net.encode(&cloud(10, 2)).unwrap().len(), arch.latent_dim);
        let shapes = expected_shapes(&arch);
        assert_eq!(shapes.len(), net.parameters().len());
        let total: usize = shapes.iter().map(|(_, s)| s.iter().product::<usize>()).sum();
        assert_eq!(total, net.parameter_count());
        assert_eq!(total, arch.parameter_count());
    }
}

#[test]
fn encoder_accepts_any_point_count() {
    let net = toy();
    for n in [1, 5, 32, 100] {
        assert_eq!(net.encode(&cloud(n, n as u64)).unwrap().len(), 8);
    }
}

#[test]
fn latent_and_prediction_are_permutation_invariant() {
    let net = toy();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for c in 0..5 {
        let x = cloud(32, 100 + c);
        let z = net.encode(&x).unwrap();
        let pred = net.predict(&x).unwrap();
        for _ in 0..10 {
            let mut order: Vec<usize> = (0..x.len()).collect();
            order.shuffle(&mut rng);
            let y = x.permuted(&order);
            assert_eq!(net.encode(&y).unwrap(), z);
            assert_eq!(net.predict(&y).unwrap(), pred);
        }
    }
}

#[test]
fn zero_final_fold_layer_repeats_parents() {
    let mut net = toy();
    net.zero_layer(&net.final_fold_layer()).unwrap();
    let pred = net.predict(&cloud(32, 4)).unwrap();
    let patch = net.config().patch_size();
    for c in 0..3 {
        for (k, p) in pred.dense[c].iter().enumerate() {
            assert_eq!(*p, pred.coarse[c][k / patch]);
        }
    }
    assert!(net.zero_layer("nope").is_err());
}

#[test]
fn grid_is_a_square_lattice() {
    let net = PcdNet::init(ArchitectureConfig::desk(), NormalizationTransform::identity()).unwrap();
    let g = net.grid_coordinates();
    let s = 4;
    let e = net.config().grid_extent;
    assert_eq!(g.len(), s * s);
    let step = 2.0 * e / (s - 1) as f64;
    for a in 0..s {
        for b in 0..s {
            let p = g[a * s + b];
            assert!((p[0] - (-e + step * a as f64)).abs() < 1e-15);
            assert!((p[1] - (-e + step * b as f64)).abs() < 1e-15);
        }
    }
}

#[test]
fn init_is_seeded() {
    let a = toy();
    let b = toy();
    assert_eq!(a.parameters(), b.parameters());
    let mut cfg = ArchitectureConfig::toy();
    cfg.init_seed = 1;
    let c = PcdNet::init(cfg, NormalizationTransform::identity()).unwrap();
    assert_ne!(a.parameters(), c.parameters());
    // Biases start at zero.
    for (name, t) in a.parameter_names().iter().zip(a.parameters()) {
        if name.ends_with(".bias") {
            assert!(t.data().iter().all(|&v| v == 0.0));
        }
    }
}

#[test]
fn invalid_architecture_rejected() {
    let mut cfg = ArchitectureConfig::toy();
    cfg.latent_dim = 0;
    assert!(PcdNet::init(cfg, NormalizationTransform::identity()).is_err());
    let mut cfg = ArchitectureConfig::toy();
    cfg.grid_side = 0;
    assert!(PcdNet::init(cfg, NormalizationTransform::identity()).is_err());
}

#[test]
fn checkpoint_round_trip_is_bitwise() {
    let net = PcdNet::init(
        ArchitectureConfig::toy(),
        NormalizationTransform::new([1.5, -2.0, 3.25], 137.0).unwrap(),
    )
    .unwrap();
    let ckpt = Checkpoint::new(Direction::Es2Ed, net);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.pcdn");
    ckpt.save_atomic(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back.direction, Direction::Es2Ed);
    assert_eq!(back.model.parameters(), ckpt.model.parameters());
    assert_eq!(back.model.normalization(), ckpt.model.normalization());
    assert_eq!(back.to_bytes(), ckpt.to_bytes());
    let x = cloud(32, 9);
    assert_eq!(back.model.predict_mm(&x).unwrap(), ckpt.model.predict_mm(&x).unwrap());
}

#[test]
fn corrupt_checkpoints_rejected() {
    let bytes = Checkpoint::new(Direction::Ed2Es, toy()).to_bytes();
    assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 8]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(Checkpoint::from_bytes(&bad).is_err());
    assert!(Checkpoint::from_bytes(&[]).is_err());
}

#[test]
fn from_parts_checks_shapes() {
    let net = toy();
    let mut named: Vec<(String, Tensor)> = net
        .parameter_names()
        .iter()
        .cloned()
        .zip(net.parameters().iter().cloned())
        .collect();
    let rebuilt = PcdNet::from_parts(ArchitectureConfig::toy(), NormalizationTransform::identity(), named.clone()).unwrap();
    assert_eq!(rebuilt.parameters(), net.parameters());
    named[0].1 = Tensor::zeros(vec![1, 1]).unwrap();
    assert!(PcdNet::from_parts(ArchitectureConfig::toy(), NormalizationTransform::identity(), named).is_err());
}

#[test]
fn predict_mm_round_trips_units() {
    let t = NormalizationTransform::new([10.0, 20.0, -5.0], 100.0).unwrap();
    let net = PcdNet::init(ArchitectureConfig::toy(), t).unwrap();
    let x = cloud(32, 5).map_points(|_, p| [p[0] * 100.0 + 10.0, p[1] * 100.0 + 20.0, p[2] * 100.0 - 5.0]);
    let mm = net.predict_mm(&x).unwrap();
    let norm = net.predict(&t.normalize(&x)).unwrap();
    for c in 0..3 {
        for (a, b) in mm.dense[c].iter().zip(&norm.dense[c]) {
            let back = t.denormalize_point(b);
            for d in 0..3 {
                assert!((a[d] - back[d]).abs() < 1e-9);
            }
        }
    }
    assert_eq!("ed2es".parse::<Direction>().unwrap(), Direction::Ed2Es);
    assert!("sideways".parse::<Direction>().is_err());
}
