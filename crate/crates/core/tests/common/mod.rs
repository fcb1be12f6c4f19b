#![allow(dead_code)]

use cyldisc::boolalg::{AtomMeasure, FiniteBooleanAlgebra, Mask};
use cyldisc::rational::{self, Rational};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A random subalgebra of `P({0..n-1})` with up to four generators.
pub fn random_algebra(rng: &mut ChaCha8Rng, n: usize) -> FiniteBooleanAlgebra {
    let gens: Vec<Mask> = (0..rng.gen_range(0..=4))
        .map(|_| rng.gen::<u64>() & ((1u64 << n) - 1))
        .collect();
    FiniteBooleanAlgebra::new(n, gens).unwrap()
}

/// Random non-negative integer weights normalised to a probability vector.
pub fn random_weights(rng: &mut ChaCha8Rng, len: usize) -> Vec<Rational> {
    loop {
        let raw: Vec<i64> = (0..len).map(|_| rng.gen_range(0..6)).collect();
        let total: i64 = raw.iter().sum();
        if total > 0 {
            return raw.iter().map(|&w| rational::ratio(w, total)).collect();
        }
    }
}

pub fn random_measure(rng: &mut ChaCha8Rng, alg: &FiniteBooleanAlgebra) -> AtomMeasure {
    AtomMeasure::new(alg, random_weights(rng, alg.atoms().len())).unwrap()
}

/// All set partitions of `{0..n-1}`, as lists of block masks.
pub fn set_partitions(n: usize) -> Vec<Vec<Mask>> {
    fn go(x: usize, n: usize, blocks: &mut Vec<Mask>, out: &mut Vec<Vec<Mask>>) {
        if x == n {
            out.push(blocks.clone());
            return;
        }
        for i in 0..blocks.len() {
            blocks[i] |= 1 << x;
            go(x + 1, n, blocks, out);
            blocks[i] &= !(1 << x);
        }
        blocks.push(1 << x);
        go(x + 1, n, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    go(0, n, &mut Vec::new(), &mut out);
    out
}

/// Every probability vector of length `n` whose entries are multiples of
/// `1/den`.
pub fn grid_measures(n: usize, den: i64) -> Vec<Vec<Rational>> {
    fn go(left: i64, slots: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if slots == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            go(left - v, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    go(den, n, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|v| v.into_iter().map(|c| rational::ratio(c, den)).collect())
        .collect()
}

use cyldisc::bitset::BitSet;
use cyldisc::cylinder::{ProductSpace, Relation};
use cyldisc::regularity::{GridPartition, WeightedMeasure};

pub fn random_relation(rng: &mut ChaCha8Rng, factors: &[usize]) -> Relation {
    let space = ProductSpace::new(factors.to_vec()).unwrap();
    let density = rng.gen_range(0.1..0.9);
    let edges = BitSet::from_indices(space.total(), (0..space.total()).filter(|_| rng.gen_bool(density)));
    Relation::new(space, edges).unwrap()
}

pub fn random_measures(rng: &mut ChaCha8Rng, space: &ProductSpace) -> Vec<WeightedMeasure> {
    space
        .factors()
        .iter()
        .map(|&n| WeightedMeasure::new(random_weights(rng, n)).unwrap())
        .collect()
}

/// Random per-direction partitions: each base point gets one of up to
/// `max_blocks` labels, empty labels are dropped.
pub fn random_partition(rng: &mut ChaCha8Rng, space: &ProductSpace, max_blocks: usize) -> Vec<Vec<Vec<usize>>> {
    (0..space.arity())
        .map(|i| {
            let len = space.base_len(i);
            let labels = rng.gen_range(1..=max_blocks.min(len));
            let mut blocks = vec![Vec::new(); labels];
            for b in 0..len {
                blocks[rng.gen_range(0..labels)].push(b);
            }
            blocks.retain(|blk| !blk.is_empty());
            blocks
        })
        .collect()
}

/// Splits one random block with at least two points into two nonempty
/// parts; `None` if every block is a singleton.
pub fn random_split(rng: &mut ChaCha8Rng, lists: &[Vec<Vec<usize>>]) -> Option<Vec<Vec<Vec<usize>>>> {
    let candidates: Vec<(usize, usize)> = lists
        .iter()
        .enumerate()
        .flat_map(|(d, blocks)| {
            blocks
                .iter()
                .enumerate()
                .filter(|(_, b)| b.len() >= 2)
                .map(move |(l, _)| (d, l))
        })
        .collect();
    if candidates.is_empty() {
        return None;
    }
    let (d, l) = candidates[rng.gen_range(0..candidates.len())];
    let block = &lists[d][l];
    let mut keep = Vec::new();
    let mut moved = Vec::new();
    for (j, &b) in block.iter().enumerate() {
        // guarantee both halves are nonempty
        if j == 0 || (j != 1 && rng.gen_bool(0.5)) {
            keep.push(b);
        } else {
            moved.push(b);
        }
    }
    let mut child = lists.to_vec();
    child[d][l] = keep;
    child[d].push(moved);
    Some(child)
}

pub fn partition(space: &ProductSpace, lists: &[Vec<Vec<usize>>]) -> GridPartition {
    GridPartition::from_lists(space, lists).unwrap()
}
