use perclab_core::oracle::{naive_clusters, OraclePartition};
use perclab_core::*;
use proptest::prelude::*;

fn partition(l: &ClusterLabeling) -> Vec<Vec<usize>> {
    let mut b = l.blocks();
    for x in &mut b {
        x.sort_unstable();
    }
    b.sort();
    b
}

fn oracle_partition(p: &OraclePartition) -> Vec<Vec<usize>> {
    let mut b = p.blocks.clone();
    for x in &mut b {
        x.sort_unstable();
    }
    b.sort();
    b
}

fn uniform(m: usize, side: f64, count: usize, seed: u64) -> PointSet {
    use rand::Rng;
    let bbox = Aabb::centered_cube(m, side).unwrap();
    let mut rng = derive_stream(seed, 3);
    let pts: Vec<Vec<f64>> = (0..count)
        .map(|_| {
            (0..m)
                .map(|_| rng.random_range(-side / 2.0..side / 2.0))
                .collect()
        })
        .collect();
    PointSet::new(bbox, &pts).unwrap()
}

#[test]
fn matches_oracle_on_mixed_densities() {
    for k in 0..40u64 {
        let m = 2 + (k % 2) as usize;
        let count = 50 + (k as usize * 37) % 450;
        let side = [6.0, 10.0, 16.0, 24.0][(k % 4) as usize];
        let ps = uniform(m, side, count, k);
        let fast = find_clusters(&ps, 1.0).unwrap();
        let slow = naive_clusters(&ps, 1.0).unwrap();
        assert_eq!(partition(&fast), oracle_partition(&slow), "instance {k}");
        for i in 0..ps.len() {
            let block = slow.blocks.iter().position(|b| b.contains(&i)).unwrap();
            let same: Vec<usize> = (0..ps.len())
                .filter(|&j| cluster_of(&fast, j).unwrap() == cluster_of(&fast, i).unwrap())
                .collect();
            let mut want = slow.blocks[block].clone();
            want.sort_unstable();
            assert_eq!(same, want);
        }
    }
}

#[test]
fn exact_radius_pairs_split_and_near_pairs_join() {
    let b = Aabb::centered_cube(2, 10.0).unwrap();
    for (dx, dy) in [(1.0, 0.0), (0.0, 1.0), (0.6, 0.8), (-0.8, 0.6)] {
        let at_r = PointSet::new(b.clone(), &[vec![0.0, 0.0], vec![dx, dy]]).unwrap();
        assert_eq!(find_clusters(&at_r, 1.0).unwrap().num_components(), 2);
    }
    let near = PointSet::new(b, &[vec![0.0, 0.0], vec![0.0, 1.0 - 1e-9]]).unwrap();
    assert_eq!(find_clusters(&near, 1.0).unwrap().num_components(), 1);
}

#[test]
fn top_clusters_on_poisson_sample() {
    let b = Aabb::centered_cube(2, 30.0).unwrap();
    let ps = sample_poisson(&b, 2.0, &mut derive_stream(11, 0)).unwrap();
    let top = top_clusters(&find_clusters(&ps, 1.0).unwrap());
    let slow = naive_clusters(&ps, 1.0).unwrap();
    assert_eq!(top.largest_size, slow.largest());
    assert_eq!(top.second_size, slow.second());
    assert!(top.largest_size as f64 > 0.5 * ps.len() as f64);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partition_is_permutation_invariant(seed in 0u64..1000, count in 1usize..300, shift in 0usize..300) {
        let ps = uniform(2, 12.0, count, seed);
        let perm: Vec<usize> = (0..count).map(|i| (i + shift) % count).collect();
        let moved = ps.permuted(&perm).unwrap();
        let a = partition(&find_clusters(&ps, 1.0).unwrap());
        // map blocks of the permuted set back to original indices
        let mut b: Vec<Vec<usize>> = find_clusters(&moved, 1.0)
            .unwrap()
            .blocks()
            .into_iter()
            .map(|blk| { let mut v: Vec<usize> = blk.into_iter().map(|j| perm[j]).collect(); v.sort_unstable(); v })
            .collect();
        b.sort();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn partition_is_scale_invariant(seed in 0u64..1000, count in 1usize..300, pow in -3i32..4, dim in 2usize..4) {
        let ps = uniform(dim, 8.0, count, seed);
        let c = 2f64.powi(pow);
        let scaled = ps.scaled(c).unwrap();
        prop_assert_eq!(
            partition(&find_clusters(&ps, 1.0).unwrap()),
            partition(&find_clusters(&scaled, c).unwrap())
        );
    }
}
