mod common;

use cyldisc::boolalg::{self, extend_measure, extension_interval, is_determined, FiniteBooleanAlgebra};
use cyldisc::rational::Rational;
use cyldisc::Execution;
use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn generated_atoms_are_the_coarsest_partition_refining_the_generators() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let n = 1 + (rand::Rng::gen_range(&mut rng, 0..10));
        let alg = common::random_algebra(&mut rng, n);
        let atoms = alg.atoms();
        // partition of the ground set
        assert_eq!(atoms.iter().fold(0, |acc, a| acc | a), alg.ground());
        assert_eq!(atoms.iter().map(|a| a.count_ones()).sum::<u32>() as usize, n);
        assert!(atoms.len() <= 1 << alg.gens().len());
        // generators are unions of atoms
        assert!(alg.gens().iter().all(|&g| alg.contains(g)));
        // coarsest: any two points in different atoms are separated by a generator
        for x in 0..n {
            for y in 0..n {
                let same_atom = atoms.iter().any(|a| a >> x & 1 == 1 && a >> y & 1 == 1);
                let separated = alg.gens().iter().any(|g| (g >> x & 1) != (g >> y & 1));
                assert_eq!(same_atom, !separated);
            }
        }
    }
}

#[test]
fn interval_endpoints_are_attained_by_vertex_extensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let n = 1 + rand::Rng::gen_range(&mut rng, 0..8);
        let alg = common::random_algebra(&mut rng, n);
        let mu = common::random_measure(&mut rng, &alg);
        for set in 0..1u64 << n {
            let (lo, hi) = extension_interval(&alg, &mu, set);
            // vertex extensions: each straddling atom's mass goes wholly in or out
            let mut inside = Rational::zero();
            let mut straddle = Vec::new();
            for (&a, w) in alg.atoms().iter().zip(mu.weights()) {
                if a & set == a {
                    inside += w;
                } else if a & set != 0 {
                    straddle.push(w.clone());
                }
            }
            let values: Vec<Rational> = (0..1u32 << straddle.len())
                .map(|choice| {
                    straddle
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| choice >> i & 1 == 1)
                        .fold(inside.clone(), |acc, (_, w)| acc + w)
                })
                .collect();
            assert_eq!(values.iter().min().unwrap(), &lo);
            assert_eq!(values.iter().max().unwrap(), &hi);
        }
    }
}

#[test]
fn extensions_are_sound_at_interior_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let n = 1 + rand::Rng::gen_range(&mut rng, 0..7);
        let alg = common::random_algebra(&mut rng, n);
        let mu = common::random_measure(&mut rng, &alg);
        for set in 0..1u64 << n {
            let (lo, hi) = extension_interval(&alg, &mu, set);
            for t in 0..=4 {
                let alpha = &lo + (&hi - &lo) * cyldisc::rational::ratio(t, 4);
                let ext = extend_measure(&alg, &mu, set, &alpha).unwrap();
                assert_eq!(ext.measure.measure_of(&ext.algebra, set), Some(alpha));
                for &a in alg.atoms() {
                    assert_eq!(ext.measure.measure_of(&ext.algebra, a), mu.measure_of(&alg, a));
                }
            }
        }
    }
}

#[test]
fn determinacy_routes_agree_on_random_larger_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..60 {
        let n = 6 + rand::Rng::gen_range(&mut rng, 0..7);
        let alg = common::random_algebra(&mut rng, n);
        // concentrate mass on a few points so both verdicts occur
        let support = rand::Rng::gen_range(&mut rng, 1..=3);
        let mut raw = vec![cyldisc::rational::int(0); n];
        for _ in 0..support {
            let x = rand::Rng::gen_range(&mut rng, 0..n);
            raw[x] += cyldisc::rational::ratio(1, support as i64);
        }
        let report = is_determined(n, &raw, alg.gens(), Execution::Parallel).unwrap();
        // independent check: heavy atoms must be singletons
        let heavy_singletons = alg.atoms().iter().all(|&a| {
            let mass: Rational = boolalg::mask_to_points(a).iter().map(|&x| raw[x].clone()).sum();
            mass.is_zero() || a.count_ones() == 1
        });
        assert_eq!(report.verdict, heavy_singletons);
    }
}

proptest! {
    #[test]
    fn border_is_complement_invariant(n in 1usize..10, gens in prop::collection::vec(any::<u64>(), 0..4), set in any::<u64>()) {
        let mask = (1u64 << n) - 1;
        let gens: Vec<u64> = gens.into_iter().map(|g| g & mask).collect();
        let alg = FiniteBooleanAlgebra::new(n, gens).unwrap();
        let set = set & mask;
        prop_assert_eq!(alg.border(set), alg.border(!set & mask));
        prop_assert_eq!(alg.border(set).is_empty(), alg.contains(set));
    }
}
