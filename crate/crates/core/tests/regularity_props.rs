mod common;

use cyldisc::cylinder::{enumerate_cis, CylinderIntersection, Homogeneity, ProductSpace, Relation};
use cyldisc::discrepancy::{GipSpec, DEFAULT_POINT_BUDGET};
use cyldisc::finfield::FieldSpec;
use cyldisc::rational::{int, ratio, Rational};
use cyldisc::regularity::*;
use cyldisc::Execution;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `Σ_{x ∈ C} Π_i μ_i(x_i)` computed from decoded coordinates.
fn naive_measure(space: &ProductSpace, measures: &[WeightedMeasure], ci: &CylinderIntersection) -> Rational {
    ci.members(space)
        .iter()
        .map(|x| {
            space
                .decode(x)
                .iter()
                .zip(measures)
                .map(|(&c, m)| m.weights()[c].clone())
                .product::<Rational>()
        })
        .sum()
}

/// Defect by visiting every cell of the index grid.
fn naive_defect(part: &GridPartition, rel: &Relation, measures: &[WeightedMeasure]) -> (Rational, usize) {
    let counts = part.block_counts();
    let cells: usize = counts.iter().product();
    let mut defect = Rational::zero();
    let mut mixed = 0;
    for c in 0..cells {
        let mut rest = c;
        let mut cell = vec![0; counts.len()];
        for (slot, &n) in cell.iter_mut().zip(&counts).rev() {
            *slot = rest % n;
            rest /= n;
        }
        let ci = part.cell(&rel.space, &cell).unwrap();
        if ci.homogeneity(rel) == Homogeneity::Mixed {
            defect += naive_measure(&rel.space, measures, &ci);
            mixed += 1;
        }
    }
    (defect, mixed)
}

const SMALL_SPACES: [&[usize]; 6] = [&[2, 2], &[3, 3], &[2, 4], &[2, 2, 2], &[3, 3, 3], &[1, 3, 3]];

#[test]
fn defect_matches_cell_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..200 {
        let factors = SMALL_SPACES[rng.gen_range(0..SMALL_SPACES.len())];
        let rel = common::random_relation(&mut rng, factors);
        let measures = common::random_measures(&mut rng, &rel.space);
        let part = common::partition(&rel.space, &common::random_partition(&mut rng, &rel.space, 4));
        let report = regularity_defect(&part, &rel, &measures, DEFAULT_GRID_BUDGET).unwrap();
        let (defect, mixed) = naive_defect(&part, &rel, &measures);
        assert_eq!(report.defect, defect);
        assert_eq!(report.bad_cells.len(), mixed);
        assert!(report.defect >= int(0) && report.defect <= int(1));
        // with full-support measures, zero defect means no Mixed cell
        let uniform = uniform_measures(&rel.space);
        let u = regularity_defect(&part, &rel, &uniform, DEFAULT_GRID_BUDGET).unwrap();
        assert_eq!(u.defect.is_zero(), u.bad_cells.is_empty());
    }
}

#[test]
fn refinement_never_increases_defect() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut checked = 0;
    while checked < 200 {
        let factors = SMALL_SPACES[rng.gen_range(0..SMALL_SPACES.len())];
        let rel = common::random_relation(&mut rng, factors);
        let measures = common::random_measures(&mut rng, &rel.space);
        let lists = common::random_partition(&mut rng, &rel.space, 3);
        let Some(child_lists) = common::random_split(&mut rng, &lists) else { continue };
        let parent = common::partition(&rel.space, &lists);
        let child = common::partition(&rel.space, &child_lists);
        assert!(child.refines(&parent));
        let dp = regularity_defect(&parent, &rel, &measures, DEFAULT_GRID_BUDGET).unwrap().defect;
        let dc = regularity_defect(&child, &rel, &measures, DEFAULT_GRID_BUDGET).unwrap().defect;
        assert!(dc <= dp);
        checked += 1;
    }
}

#[test]
fn defect_examples() {
    let hg = make_halfgraph(4).unwrap();
    let u = uniform_measures(&hg.space);
    let single = regularity_defect(&GridPartition::singletons(&hg.space), &hg, &u, DEFAULT_GRID_BUDGET).unwrap();
    assert_eq!(single.defect, int(0));
    let trivial = regularity_defect(&GridPartition::trivial(&hg.space), &hg, &u, DEFAULT_GRID_BUDGET).unwrap();
    assert_eq!(trivial.defect, int(1));
    let halves = GridPartition::from_lists(&hg.space, &[vec![vec![0, 1], vec![2, 3]], vec![vec![0, 1], vec![2, 3]]]).unwrap();
    let r = regularity_defect(&halves, &hg, &u, DEFAULT_GRID_BUDGET).unwrap();
    // the two diagonal 2×2 blocks are Mixed, the off-diagonal ones are not
    assert_eq!(r.defect, ratio(1, 2));
    assert_eq!(r.defect, naive_defect(&halves, &hg, &u).0);
    let err = regularity_defect(&GridPartition::singletons(&hg.space), &hg, &u, 15).unwrap_err();
    assert_eq!(err.kind(), cyldisc::ErrorKind::Budget);
}

#[test]
fn greedy_refine_examples() {
    let full = Relation::full(ProductSpace::new(vec![3, 3]).unwrap());
    let out = greedy_refine(&full, &uniform_measures(&full.space), &ratio(1, 10), 4, DEFAULT_GRID_BUDGET).unwrap();
    assert!(out.converged());
    assert_eq!(out.refinement().splits, 0);
    assert_eq!(out.refinement().defect, int(0));

    let hg = make_halfgraph(8).unwrap();
    let u = uniform_measures(&hg.space);
    let out = greedy_refine(&hg, &u, &ratio(1, 4), 8, DEFAULT_GRID_BUDGET).unwrap();
    assert!(out.converged());
    let r = out.refinement();
    assert!(r.defect < ratio(1, 4));
    assert!(r.partition.block_counts().iter().all(|&n| n <= 8));
    assert_eq!(regularity_defect(&r.partition, &hg, &u, DEFAULT_GRID_BUDGET).unwrap().defect, r.defect);

    let spec = GipSpec::new(FieldSpec::prime(2).unwrap(), 2, 2).unwrap();
    let zero = make_gip_zero(&spec, DEFAULT_POINT_BUDGET).unwrap();
    let u = uniform_measures(&zero.space);
    let out = greedy_refine(&zero, &u, &ratio(1, 100), 2, DEFAULT_GRID_BUDGET).unwrap();
    assert!(!out.converged());
    let r = out.refinement();
    assert!(r.defect >= ratio(1, 100));
    assert_eq!(regularity_defect(&r.partition, &zero, &u, DEFAULT_GRID_BUDGET).unwrap().defect, r.defect);
}

/// Best homogeneous nonempty rectangle by brute force over row and
/// column subsets.
fn rectangle_oracle(rel: &Relation, measures: &[WeightedMeasure]) -> Rational {
    let (n0, n1) = (rel.space.factors()[0], rel.space.factors()[1]);
    let mut best = Rational::zero();
    for rows in 1u32..1 << n0 {
        for cols in 1u32..1 << n1 {
            let pts: Vec<(usize, usize)> = (0..n0)
                .filter(|i| rows >> i & 1 == 1)
                .flat_map(|i| (0..n1).filter(move |j| cols >> j & 1 == 1).map(move |j| (i, j)))
                .collect();
            let edges = pts.iter().filter(|&&(i, j)| rel.edges.contains(i * n1 + j)).count();
            if edges == 0 || edges == pts.len() {
                let m: Rational = pts
                    .iter()
                    .map(|&(i, j)| measures[0].weights()[i].clone() * measures[1].weights()[j].clone())
                    .sum();
                best = best.max(m);
            }
        }
    }
    best
}

#[test]
fn exact_search_matches_rectangle_oracle_and_bounds_greedy() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..60 {
        let factors: &[usize] = [&[2, 2][..], &[3, 3], &[2, 4], &[4, 3]][rng.gen_range(0..4)];
        let rel = common::random_relation(&mut rng, factors);
        let measures = common::random_measures(&mut rng, &rel.space);
        let exact = seh_best_exact(&rel, &measures, 1 << 20, Execution::Parallel).unwrap().unwrap();
        assert_eq!(exact.measure, rectangle_oracle(&rel, &measures));
        let ci = CylinderIntersection::from_base_lists(&rel.space, &exact.bases).unwrap();
        assert!(ci.homogeneity(&rel).is_homogeneous());
        assert_eq!(naive_measure(&rel.space, &measures, &ci), exact.measure);

        let greedy = seh_best_greedy(&rel, &measures, rng.gen(), 8, Execution::Parallel).unwrap().unwrap();
        let gci = CylinderIntersection::from_base_lists(&rel.space, &greedy.bases).unwrap();
        assert_eq!(gci.homogeneity(&rel), greedy.homogeneity);
        assert!(greedy.homogeneity.is_homogeneous());
        assert!(greedy.measure <= exact.measure);
        assert_eq!(naive_measure(&rel.space, &measures, &gci), greedy.measure);
    }
}

#[test]
fn greedy_is_sound_on_ternary_relations() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..20 {
        let rel = common::random_relation(&mut rng, &[2, 2, 2]);
        let u = uniform_measures(&rel.space);
        let exact = seh_best_exact(&rel, &u, 1 << 20, Execution::Parallel).unwrap().unwrap();
        let greedy = seh_best_greedy(&rel, &u, 7, 16, Execution::Sequential).unwrap().unwrap();
        assert!(greedy.homogeneity.is_homogeneous());
        assert!(greedy.measure <= exact.measure);
    }
}

#[test]
fn trivial_relations_give_full_ci() {
    let space = ProductSpace::new(vec![3, 4]).unwrap();
    for (rel, h) in [
        (Relation::full(space.clone()), Homogeneity::Positive),
        (Relation::empty(space.clone()), Homogeneity::Negative),
    ] {
        let u = uniform_measures(&space);
        for seed in [0, 1, 99] {
            let g = seh_search_greedy(&rel, &u, &int(1), seed, 4, Execution::Parallel).unwrap().unwrap();
            assert_eq!((g.measure, g.homogeneity, g.size), (int(1), h, 12));
        }
        let e = seh_search_exact(&rel, &u, &int(1), 1 << 20, Execution::Parallel).unwrap().unwrap();
        assert_eq!(e.measure, int(1));
    }
}

#[test]
fn halfgraph_searches() {
    for n in [4, 6, 8] {
        let hg = make_halfgraph(n).unwrap();
        let u = uniform_measures(&hg.space);
        let exact = seh_search_exact(&hg, &u, &ratio(1, 4), 1 << 20, Execution::Parallel).unwrap().unwrap();
        assert!(exact.measure >= ratio(1, 4));
        let greedy = seh_search_greedy(&hg, &u, &ratio(1, 4), 0, 32, Execution::Parallel).unwrap().unwrap();
        assert!(greedy.measure >= ratio(1, 4) && greedy.measure <= exact.measure);
    }
    let hg = make_halfgraph(4).unwrap();
    let u = uniform_measures(&hg.space);
    assert_eq!(seh_best_exact(&hg, &u, 1 << 20, Execution::Parallel).unwrap().unwrap().measure, ratio(3, 8));
    let block = CylinderIntersection::rectangle(&hg.space, &[0, 1], &[2, 3]).unwrap();
    assert_eq!(block.homogeneity(&hg), Homogeneity::Positive);
    assert_eq!(product_measure(&hg.space, &u, &block).unwrap(), ratio(1, 4));
}

#[test]
fn diagonal_has_no_dense_homogeneous_rectangle() {
    let diag = Relation::from_tuples(vec![3, 3], &[vec![0, 0], vec![1, 1], vec![2, 2]]).unwrap();
    let u = uniform_measures(&diag.space);
    assert!(seh_search_exact(&diag, &u, &ratio(1, 2), 1 << 20, Execution::Parallel).unwrap().is_none());
    let best = seh_best_exact(&diag, &u, 1 << 20, Execution::Parallel).unwrap().unwrap();
    assert_eq!(best.measure, ratio(2, 9));
    assert_eq!(best.homogeneity, Homogeneity::Negative);
}

#[test]
fn gip_zero_sets_respect_the_ceiling() {
    for (p, s, k) in [(2, 1, 2), (2, 2, 2), (3, 1, 2), (2, 1, 3)] {
        let spec = GipSpec::new(FieldSpec::prime(p).unwrap(), s, k).unwrap();
        let zero = make_gip_zero(&spec, DEFAULT_POINT_BUDGET).unwrap();
        let u = uniform_measures(&zero.space);
        let best = seh_best_exact(&zero, &u, 1 << 20, Execution::Parallel).unwrap().unwrap();
        let ceiling = spec.bound();
        assert!(ceiling.compare_exact(&(best.measure / int(p as i64))));
        // every homogeneous CI, not just the best one
        for ci in enumerate_cis(&zero.space, 1 << 20).unwrap().iter() {
            if ci.size(&zero.space) > 0 && ci.homogeneity(&zero).is_homogeneous() {
                let m = product_measure(&zero.space, &u, &ci).unwrap();
                assert!(ceiling.compare_exact(&(m / int(p as i64))));
            }
        }
    }
}

#[test]
fn generators_and_measures() {
    assert_eq!(make_halfgraph(2).unwrap().tuples(), vec![vec![0, 1]]);
    let f2 = FieldSpec::prime(2).unwrap();
    let nand = make_gip_zero(&GipSpec::new(f2.clone(), 1, 2).unwrap(), DEFAULT_POINT_BUDGET).unwrap();
    assert_eq!(nand.tuples(), vec![vec![0, 0], vec![0, 1], vec![1, 0]]);
    let and3 = make_gip_zero(&GipSpec::new(f2, 1, 3).unwrap(), DEFAULT_POINT_BUDGET).unwrap();
    assert_eq!(and3.edges.count(), 7);
    assert_eq!(default_gip_inner_length(2), 8);

    let space = ProductSpace::new(vec![2, 2]).unwrap();
    let u = uniform_measures(&space);
    assert_eq!(product_measure(&space, &u, &CylinderIntersection::full(&space)).unwrap(), int(1));
    let row = CylinderIntersection::rectangle(&space, &[0], &[0, 1]).unwrap();
    assert_eq!(product_measure(&space, &u, &row).unwrap(), ratio(1, 2));
    let w = [
        WeightedMeasure::new(vec![ratio(1, 3), ratio(2, 3)]).unwrap(),
        WeightedMeasure::new(vec![ratio(1, 4), ratio(3, 4)]).unwrap(),
    ];
    assert_eq!(product_measure_point(&space, &w, 3).unwrap(), ratio(1, 2));
    assert!(WeightedMeasure::new(vec![ratio(1, 2), ratio(1, 3)]).is_err());
    assert!(WeightedMeasure::new(vec![ratio(3, 2), ratio(-1, 2)]).is_err());
}
