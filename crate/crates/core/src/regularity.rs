//! Finitely supported product measures, grid partitions and their
//! regularity defect, and the search for dense homogeneous cylinder
//! intersections.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bitset::BitSet;
use crate::cylinder::{
    self, CylinderIntersection, Homogeneity, ProductSpace, Projections, Relation,
};
use crate::discrepancy::{self, GipSpec};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rational::{self, Rational};

/// Default cap on the number of cells `Π k_i` of a grid partition.
pub const DEFAULT_GRID_BUDGET: u64 = 1 << 20;

/// A probability measure on one factor with exact rational weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeightedMeasure {
    #[serde(with = "rational::vec")]
    weights: Vec<Rational>,
}

impl WeightedMeasure {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("measure on an empty factor".into()));
        }
        if let Some(w) = weights.iter().find(|w| w.is_negative()) {
            return Err(Error::InvalidMeasure(format!(
                "negative weight {}",
                rational::format(w)
            )));
        }
        let total: Rational = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {}, not 1",
                rational::format(&total)
            )));
        }
        Ok(WeightedMeasure { weights })
    }

    pub fn uniform(n: usize) -> Self {
        WeightedMeasure {
            weights: vec![rational::ratio(1, n as i64); n],
        }
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| !self.weights[i].is_zero())
            .collect()
    }
}

/// The product of one measure per factor, held as integer point masses
/// over a common denominator so that sweeps stay in machine integers.
#[derive(Debug, Clone)]
pub struct ProductMeasure {
    den: u128,
    mass: Vec<u128>,
}

impl ProductMeasure {
    pub fn new(space: &ProductSpace, measures: &[WeightedMeasure]) -> Result<Self> {
        if measures.len() != space.arity() {
            return Err(Error::InvalidMeasure(format!(
                "{} measures for a {}-fold product",
                measures.len(),
                space.arity()
            )));
        }
        let too_fine = || Error::InvalidMeasure("common denominator exceeds 128 bits".into());
        let mut den: u128 = 1;
        let mut numerators: Vec<Vec<u128>> = Vec::new();
        for (i, m) in measures.iter().enumerate() {
            if m.weights.len() != space.factors()[i] {
                return Err(Error::InvalidMeasure(format!(
                    "factor {i} has {} points but its measure has {} weights",
                    space.factors()[i],
                    m.weights.len()
                )));
            }
            let d = m
                .weights
                .iter()
                .fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
            let nums = m
                .weights
                .iter()
                .map(|w| (w * Rational::from_integer(d.clone())).to_integer().to_u128())
                .collect::<Option<Vec<_>>>()
                .ok_or_else(too_fine)?;
            den = den.checked_mul(d.to_u128().ok_or_else(too_fine)?).ok_or_else(too_fine)?;
            numerators.push(nums);
        }
        let mass = (0..space.total())
            .map(|x| {
                space
                    .decode(x)
                    .iter()
                    .zip(&numerators)
                    .map(|(&c, nums)| nums[c])
                    .product()
            })
            .collect();
        Ok(ProductMeasure { den, mass })
    }

    pub fn uniform(space: &ProductSpace) -> Self {
        let measures: Vec<_> = space.factors().iter().map(|&n| WeightedMeasure::uniform(n)).collect();
        ProductMeasure::new(space, &measures).expect("uniform measures fit")
    }

    #[inline]
    pub fn point_mass(&self, x: usize) -> u128 {
        self.mass[x]
    }

    pub fn denominator(&self) -> u128 {
        self.den
    }

    pub fn to_rational(&self, numerator: u128) -> Rational {
        Rational::new(BigInt::from(numerator), BigInt::from(self.den))
    }

    pub fn of_point(&self, x: usize) -> Rational {
        self.to_rational(self.mass[x])
    }

    pub fn of_set(&self, set: &BitSet) -> Rational {
        self.to_rational(set.iter().map(|x| self.mass[x]).sum())
    }
}

/// `Π_i μ_i(x_i)` for the point `x`.
pub fn product_measure_point(
    space: &ProductSpace,
    measures: &[WeightedMeasure],
    x: usize,
) -> Result<Rational> {
    Ok(ProductMeasure::new(space, measures)?.of_point(x))
}

/// Product measure of the member points of `ci`.
pub fn product_measure(
    space: &ProductSpace,
    measures: &[WeightedMeasure],
    ci: &CylinderIntersection,
) -> Result<Rational> {
    Ok(ProductMeasure::new(space, measures)?.of_set(&ci.members(space)))
}

/// For each direction `i`, a partition of the complementary product
/// `Π_{j≠i} X_j` into nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridPartition {
    directions: Vec<Vec<BitSet>>,
    /// `block_of[i][b]`: block of direction `i` containing base point `b`.
    block_of: Vec<Vec<u32>>,
}

impl GridPartition {
    pub fn new(space: &ProductSpace, directions: Vec<Vec<BitSet>>) -> Result<Self> {
        if directions.len() != space.arity() {
            return Err(Error::Invalid(format!(
                "{} partitions for a {}-fold product",
                directions.len(),
                space.arity()
            )));
        }
        let mut block_of = Vec::with_capacity(directions.len());
        for (i, blocks) in directions.iter().enumerate() {
            let len = space.base_len(i);
            let mut owner = vec![u32::MAX; len];
            for (l, block) in blocks.iter().enumerate() {
                if block.len() != len {
                    return Err(Error::Invalid(format!(
                        "direction {i} block {l} is over {} points, expected {len}",
                        block.len()
                    )));
                }
                if block.is_empty() {
                    return Err(Error::Invalid(format!("direction {i} block {l} is empty")));
                }
                for b in block.iter() {
                    if owner[b] != u32::MAX {
                        return Err(Error::Invalid(format!(
                            "direction {i}: point {b} lies in blocks {} and {l}",
                            owner[b]
                        )));
                    }
                    owner[b] = l as u32;
                }
            }
            if let Some(b) = owner.iter().position(|&o| o == u32::MAX) {
                return Err(Error::Invalid(format!(
                    "direction {i}: point {b} is not covered"
                )));
            }
            block_of.push(owner);
        }
        Ok(GridPartition {
            directions,
            block_of,
        })
    }

    pub fn from_lists(space: &ProductSpace, lists: &[Vec<Vec<usize>>]) -> Result<Self> {
        if lists.len() != space.arity() {
            return Err(Error::Invalid(format!(
                "{} partitions for a {}-fold product",
                lists.len(),
                space.arity()
            )));
        }
        let directions = lists
            .iter()
            .enumerate()
            .map(|(i, blocks)| {
                let len = space.base_len(i);
                blocks
                    .iter()
                    .map(|block| match block.iter().find(|&&b| b >= len) {
                        Some(b) => Err(Error::Invalid(format!(
                            "direction {i}: point {b} outside a base of {len} points"
                        ))),
                        None => Ok(BitSet::from_indices(len, block.iter().copied())),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        GridPartition::new(space, directions)
    }

    /// One block per direction.
    pub fn trivial(space: &ProductSpace) -> Self {
        let dirs = (0..space.arity())
            .map(|i| vec![BitSet::full(space.base_len(i))])
            .collect();
        GridPartition::new(space, dirs).expect("trivial partition is valid")
    }

    /// Every block a single base point.
    pub fn singletons(space: &ProductSpace) -> Self {
        let dirs = (0..space.arity())
            .map(|i| {
                let len = space.base_len(i);
                (0..len).map(|b| BitSet::from_indices(len, [b])).collect()
            })
            .collect();
        GridPartition::new(space, dirs).expect("singleton partition is valid")
    }

    pub fn directions(&self) -> &[Vec<BitSet>] {
        &self.directions
    }

    pub fn block_counts(&self) -> Vec<usize> {
        self.directions.iter().map(Vec::len).collect()
    }

    pub fn to_lists(&self) -> Vec<Vec<Vec<usize>>> {
        self.directions
            .iter()
            .map(|blocks| blocks.iter().map(|b| b.iter().collect()).collect())
            .collect()
    }

    /// The cell `⋀_i P^i_{ℓ_i}` as a cylinder intersection.
    pub fn cell(&self, space: &ProductSpace, cell: &[usize]) -> Result<CylinderIntersection> {
        let bases = cell
            .iter()
            .zip(&self.directions)
            .map(|(&l, blocks)| blocks[l].clone())
            .collect();
        CylinderIntersection::from_bases(space, bases)
    }

    /// Replaces block `l` of direction `dir` by the two given halves.
    fn split(&mut self, dir: usize, l: usize, first: BitSet, second: BitSet) {
        self.directions[dir][l] = first;
        self.directions[dir].insert(l + 1, second);
        for owner in self.block_of[dir].iter_mut() {
            if *owner as usize > l {
                *owner += 1;
            }
        }
        for b in self.directions[dir][l + 1].iter() {
            self.block_of[dir][b] = (l + 1) as u32;
        }
    }

    /// `true` iff every block of `self` lies inside a block of `coarse`.
    pub fn refines(&self, coarse: &GridPartition) -> bool {
        self.directions.len() == coarse.directions.len()
            && self
                .directions
                .iter()
                .zip(&coarse.directions)
                .all(|(fine, coarse)| {
                    fine.iter()
                        .all(|f| coarse.iter().any(|c| f.is_subset(c)))
                })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellStat {
    pub cell: Vec<usize>,
    #[serde(with = "rational")]
    pub measure: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DefectReport {
    #[serde(with = "rational")]
    pub defect: Rational,
    /// Mixed cells in index order with their measure.
    pub bad_cells: Vec<CellStat>,
    pub cells: u64,
}

struct CellSweep {
    grid: Vec<usize>,
    mixed: Vec<(u64, u128)>,
    defect: u128,
}

fn sweep_cells(
    partition: &GridPartition,
    rel: &Relation,
    pm: &ProductMeasure,
    proj: &Projections,
    grid_budget: u64,
) -> Result<CellSweep> {
    let grid = partition.block_counts();
    let cells = grid
        .iter()
        .try_fold(1u128, |acc, &n| acc.checked_mul(n as u128))
        .unwrap_or(u128::MAX);
    if cells > grid_budget as u128 {
        return Err(Error::GridTooLarge {
            what: "partition grid",
            required: cells,
            budget: grid_budget,
        });
    }
    let cells = cells as usize;
    // per cell: edge seen, non-edge seen, mass
    let mut seen_edge = vec![false; cells];
    let mut seen_non = vec![false; cells];
    let mut mass = vec![0u128; cells];
    let space = &rel.space;
    for x in 0..space.total() {
        let cell = (0..space.arity()).fold(0usize, |acc, i| {
            acc * grid[i] + partition.block_of[i][proj.get(i, x)] as usize
        });
        if rel.edges.contains(x) {
            seen_edge[cell] = true;
        } else {
            seen_non[cell] = true;
        }
        mass[cell] += pm.point_mass(x);
    }
    let mixed: Vec<(u64, u128)> = (0..cells)
        .filter(|&c| seen_edge[c] && seen_non[c])
        .map(|c| (c as u64, mass[c]))
        .collect();
    let defect = mixed.iter().map(|&(_, m)| m).sum();
    Ok(CellSweep {
        grid,
        mixed,
        defect,
    })
}

fn decode_cell(grid: &[usize], mut c: u64) -> Vec<usize> {
    let mut out = vec![0; grid.len()];
    for (slot, &n) in out.iter_mut().zip(grid).rev() {
        *slot = (c % n as u64) as usize;
        c /= n as u64;
    }
    out
}

/// Total product measure of the cells `⋀_i P^i_{ℓ_i}` that are not
/// homogeneous for `rel`.
pub fn regularity_defect(
    partition: &GridPartition,
    rel: &Relation,
    measures: &[WeightedMeasure],
    grid_budget: u64,
) -> Result<DefectReport> {
    check_partition(partition, &rel.space)?;
    let pm = ProductMeasure::new(&rel.space, measures)?;
    let proj = rel.space.projections();
    let sweep = sweep_cells(partition, rel, &pm, &proj, grid_budget)?;
    Ok(DefectReport {
        defect: pm.to_rational(sweep.defect),
        bad_cells: sweep
            .mixed
            .iter()
            .map(|&(c, m)| CellStat {
                cell: decode_cell(&sweep.grid, c),
                measure: pm.to_rational(m),
            })
            .collect(),
        cells: sweep.grid.iter().map(|&n| n as u64).product(),
    })
}

fn check_partition(partition: &GridPartition, space: &ProductSpace) -> Result<()> {
    let ok = partition.directions.len() == space.arity()
        && partition
            .directions
            .iter()
            .enumerate()
            .all(|(i, blocks)| blocks.iter().all(|b| b.len() == space.base_len(i)));
    if ok {
        Ok(())
    } else {
        Err(Error::Invalid("partition does not match the relation's space".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Refinement {
    pub partition: GridPartition,
    pub defect: Rational,
    pub splits: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RefineOutcome {
    /// Defect strictly below the target.
    Converged(Refinement),
    /// No admissible split remains; carries the last partition.
    BudgetExhausted(Refinement),
}

impl RefineOutcome {
    pub fn refinement(&self) -> &Refinement {
        match self {
            RefineOutcome::Converged(r) | RefineOutcome::BudgetExhausted(r) => r,
        }
    }

    pub fn converged(&self) -> bool {
        matches!(self, RefineOutcome::Converged(_))
    }
}

/// Greedy grid refinement until the defect drops below `epsilon`.
///
/// Each round visits the Mixed cells by decreasing measure (ties by cell
/// index) and splits, in the first cell that allows it, the largest of its
/// blocks (ties by direction) into the first and second half of its points
/// in index order. A direction may hold at most `max_blocks` blocks.
pub fn greedy_refine(
    rel: &Relation,
    measures: &[WeightedMeasure],
    epsilon: &Rational,
    max_blocks: usize,
    grid_budget: u64,
) -> Result<RefineOutcome> {
    if !epsilon.is_positive() {
        return Err(Error::Invalid("epsilon must be positive".into()));
    }
    let space = &rel.space;
    let pm = ProductMeasure::new(space, measures)?;
    let proj = space.projections();
    let mut partition = GridPartition::trivial(space);
    let mut splits = 0;
    loop {
        let sweep = sweep_cells(&partition, rel, &pm, &proj, grid_budget)?;
        let defect = pm.to_rational(sweep.defect);
        if &defect < epsilon {
            return Ok(RefineOutcome::Converged(Refinement {
                partition,
                defect,
                splits,
            }));
        }
        let mut order = sweep.mixed.clone();
        order.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let choice = order.iter().find_map(|&(c, _)| {
            let cell = decode_cell(&sweep.grid, c);
            (0..space.arity())
                .filter(|&i| partition.directions[i].len() < max_blocks)
                .map(|i| (i, cell[i], partition.directions[i][cell[i]].count()))
                .filter(|&(_, _, size)| size >= 2)
                .max_by(|a, b| a.2.cmp(&b.2).then(b.0.cmp(&a.0)))
        });
        let Some((dir, l, size)) = choice else {
            return Ok(RefineOutcome::BudgetExhausted(Refinement {
                partition,
                defect,
                splits,
            }));
        };
        let block = &partition.directions[dir][l];
        let len = block.len();
        let points: Vec<usize> = block.iter().collect();
        let half = size.div_ceil(2);
        let first = BitSet::from_indices(len, points[..half].iter().copied());
        let second = BitSet::from_indices(len, points[half..].iter().copied());
        partition.split(dir, l, first, second);
        splits += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SehWitness {
    /// Enumeration index for exact search, restart number for greedy.
    pub index: u64,
    pub bases: Vec<Vec<usize>>,
    pub homogeneity: Homogeneity,
    pub size: usize,
    #[serde(with = "rational")]
    pub measure: Rational,
}

/// The nonempty homogeneous cylinder intersection of largest product
/// measure, over the full enumeration; ties go to the smallest index.
pub fn seh_best_exact(
    rel: &Relation,
    measures: &[WeightedMeasure],
    ci_budget: u64,
    exec: Execution,
) -> Result<Option<SehWitness>> {
    let space = &rel.space;
    let pm = ProductMeasure::new(space, measures)?;
    let en = cylinder::enumerate_cis(space, ci_budget)?;
    let proj = space.projections();
    let best = par::best_in_range(
        exec,
        0..en.count(),
        || vec![0u64; space.arity()],
        |masks, idx| {
            en.masks(idx, masks);
            let mut edge = false;
            let mut non_edge = false;
            let mut mass = 0u128;
            let mut any = false;
            for x in 0..space.total() {
                if cylinder::mask_contains(&proj, masks, x) {
                    any = true;
                    if rel.edges.contains(x) {
                        edge = true;
                    } else {
                        non_edge = true;
                    }
                    if edge && non_edge {
                        return None;
                    }
                    mass += pm.point_mass(x);
                }
            }
            any.then_some(mass)
        },
    );
    Ok(best.map(|(idx, mass)| {
        let ci = en.ci(idx);
        SehWitness {
            index: idx,
            homogeneity: ci.homogeneity(rel),
            size: ci.size(space),
            bases: ci.base_lists(space),
            measure: pm.to_rational(mass),
        }
    }))
}

/// Exact search for a homogeneous cylinder intersection of measure at
/// least `alpha`; `None` when the optimum falls short.
pub fn seh_search_exact(
    rel: &Relation,
    measures: &[WeightedMeasure],
    alpha: &Rational,
    ci_budget: u64,
    exec: Execution,
) -> Result<Option<SehWitness>> {
    Ok(seh_best_exact(rel, measures, ci_budget, exec)?.filter(|w| &w.measure >= alpha))
}

/// One greedy restart from a random point: grow the bases round-robin
/// over directions, adding base points in shuffled order whenever the
/// intersection stays homogeneous, until a full round adds nothing.
fn greedy_restart(
    rel: &Relation,
    pm: &ProductMeasure,
    proj: &Projections,
    seed: u64,
) -> (Vec<BitSet>, u128) {
    let space = &rel.space;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.gen_range(0..space.total());
    let positive = rel.edges.contains(start);
    let mut bases: Vec<BitSet> = (0..space.arity())
        .map(|i| BitSet::from_indices(space.base_len(i), [proj.get(i, start)]))
        .collect();
    let mut mass = pm.point_mass(start);
    let mut fresh = Vec::new();
    loop {
        let mut grew = false;
        for dir in 0..space.arity() {
            let mut candidates: Vec<usize> = (0..space.base_len(dir))
                .filter(|&b| !bases[dir].contains(b))
                .collect();
            candidates.shuffle(&mut rng);
            for b in candidates {
                fresh.clear();
                let mut admissible = true;
                for t in 0..space.factors()[dir] {
                    let x = space.lift(b, dir, t);
                    let member = (0..space.arity())
                        .filter(|&j| j != dir)
                        .all(|j| bases[j].contains(proj.get(j, x)));
                    if member {
                        if rel.edges.contains(x) != positive {
                            admissible = false;
                            break;
                        }
                        fresh.push(x);
                    }
                }
                if admissible {
                    bases[dir].insert(b);
                    mass += fresh.iter().map(|&x| pm.point_mass(x)).sum::<u128>();
                    grew = true;
                }
            }
        }
        if !grew {
            return (bases, mass);
        }
    }
}

/// Seeded multi-start greedy search; restart `r` uses seed `seed + r`.
/// Returns the best restart (largest measure, then smallest restart).
pub fn seh_best_greedy(
    rel: &Relation,
    measures: &[WeightedMeasure],
    seed: u64,
    restarts: u64,
    exec: Execution,
) -> Result<Option<SehWitness>> {
    let space = &rel.space;
    let pm = ProductMeasure::new(space, measures)?;
    let proj = space.projections();
    let best = par::best_in_range(
        exec,
        0..restarts,
        || (),
        |_, r| Some(greedy_restart(rel, &pm, &proj, seed.wrapping_add(r)).1),
    );
    let Some((r, _)) = best else {
        return Ok(None);
    };
    let (bases, mass) = greedy_restart(rel, &pm, &proj, seed.wrapping_add(r));
    let ci = CylinderIntersection::from_bases(space, bases)?;
    let homogeneity = ci.homogeneity(rel);
    if !homogeneity.is_homogeneous() {
        return Err(Error::Invariant("greedy search produced a Mixed CI".into()));
    }
    Ok(Some(SehWitness {
        index: r,
        size: ci.size(space),
        bases: ci.base_lists(space),
        homogeneity,
        measure: pm.to_rational(mass),
    }))
}

pub fn seh_search_greedy(
    rel: &Relation,
    measures: &[WeightedMeasure],
    alpha: &Rational,
    seed: u64,
    restarts: u64,
    exec: Execution,
) -> Result<Option<SehWitness>> {
    Ok(seh_best_greedy(rel, measures, seed, restarts, exec)?.filter(|w| &w.measure >= alpha))
}

pub fn uniform_measures(space: &ProductSpace) -> Vec<WeightedMeasure> {
    space.factors().iter().map(|&n| WeightedMeasure::uniform(n)).collect()
}

/// The half-graph `{(i, j) : i < j}` on `[n] × [n]`.
pub fn make_halfgraph(n: usize) -> Result<Relation> {
    let space = ProductSpace::new(vec![n, n])?;
    let edges = BitSet::from_indices(
        space.total(),
        (0..n).flat_map(|i| (i + 1..n).map(move |j| i * n + j)),
    );
    Relation::new(space, edges)
}

/// The zero set of `GIP_{q,s,k}` as a `k`-ary relation.
pub fn make_gip_zero(spec: &GipSpec, point_budget: u64) -> Result<Relation> {
    let table = discrepancy::gip_function(spec, point_budget)?;
    let edges = BitSet::from_indices(
        table.space.total(),
        (0..table.space.total()).filter(|&x| table.function.value(x) == 0),
    );
    Relation::new(table.space, edges)
}

/// Default inner length for the GIP zero-set generator: `s = 2^{k+1}`.
pub fn default_gip_inner_length(k: usize) -> usize {
    1 << (k + 1)
}
