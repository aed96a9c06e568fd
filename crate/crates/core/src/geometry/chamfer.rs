use super::{AnatomicalClass, GeometryError, KdTree, MultiClassPointCloud, Point3};

/// Mean over `from` of the distance to the nearest point of `to`.
pub fn directed_mean_distance(from: &[Point3], to: &KdTree) -> f64 {
    let total: f64 = from.iter().map(|p| to.nearest(p).distance).sum();
    total / from.len() as f64
}

/// Index into `to` of the nearest neighbour of every point of `from`.
pub fn nearest_indices(from: &[Point3], to: &KdTree) -> Vec<usize> {
    from.iter().map(|p| to.nearest(p).index).collect()
}

/// Symmetric Chamfer distance: the average of the two directed mean
/// nearest-neighbour distances (un-squared Euclidean).
pub fn chamfer(a: &[Point3], b: &[Point3]) -> Result<f64, GeometryError> {
    let ta = KdTree::build(a)?;
    let tb = KdTree::build(b)?;
    Ok(chamfer_indexed(a, &ta, b, &tb))
}

/// Chamfer distance with prebuilt indexes for both sets.
pub fn chamfer_indexed(a: &[Point3], index_a: &KdTree, b: &[Point3], index_b: &KdTree) -> f64 {
    let ab = directed_mean_distance(a, index_b);
    let ba = directed_mean_distance(b, index_a);
    0.5 * (ab + ba)
}

/// Chamfer distance computed independently for each anatomical class.
pub fn per_class_chamfer(
    predicted: &MultiClassPointCloud,
    gold: &MultiClassPointCloud,
) -> Result<[f64; 3], GeometryError> {
    predicted.validate_complete()?;
    gold.validate_complete()?;
    let p = predicted.split_by_class();
    let g = gold.split_by_class();
    let mut out = [0.0; 3];
    for class in AnatomicalClass::ALL {
        let i = class.index();
        out[i] = chamfer(&p[i], &g[i])?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_sets_have_zero_distance() {
        let a = vec![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0], [-1.0, 0.0, 2.0]];
        assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn hand_enumerated_example() {
        let a = vec![[0.0, 0.0, 0.0]];
        let b = vec![[1.0, 0.0, 0.0], [3.0, 0.0, 0.0]];
        // 0.5 * (1 + (1 + 3) / 2)
        assert_eq!(chamfer(&a, &b).unwrap(), 1.5);
        assert_eq!(chamfer(&b, &a).unwrap(), 1.5);
    }

    #[test]
    fn empty_set_is_an_error() {
        assert!(chamfer(&[], &[[0.0; 3]]).is_err());
        assert!(chamfer(&[[0.0; 3]], &[]).is_err());
    }

    #[test]
    fn per_class_translation_offsets() {
        let gold = MultiClassPointCloud::from_classes([
            vec![[0.0, 0.0, 0.0]],
            vec![[10.0, 0.0, 0.0]],
            vec![[0.0, 10.0, 0.0]],
        ]);
        let pred = MultiClassPointCloud::from_classes([
            vec![[0.5, 0.0, 0.0]],
            vec![[10.0, 2.0, 0.0]],
            vec![[0.0, 10.0, -3.0]],
        ]);
        assert_eq!(per_class_chamfer(&pred, &gold).unwrap(), [0.5, 2.0, 3.0]);
        assert_eq!(per_class_chamfer(&gold, &gold).unwrap(), [0.0; 3]);
    }

    #[test]
    fn per_class_requires_all_classes() {
        let full = MultiClassPointCloud::from_classes([vec![[0.0; 3]], vec![[0.0; 3]], vec![[0.0; 3]]]);
        let partial = MultiClassPointCloud::from_classes([vec![[0.0; 3]], vec![[0.0; 3]], vec![]]);
        assert!(matches!(
            per_class_chamfer(&full, &partial),
            Err(GeometryError::MissingClass(AnatomicalClass::RvEndo))
        ));
    }
}
