//! Product spaces, cylinders, cylinder intersections and relations.
//!
//! Points of `X_1 × … × X_k` are indexed in mixed radix with factor 1 most
//! significant. A cylinder in direction `i` is described by its base, a set
//! of points of the complementary product `Π_{j≠i} X_j` (same radix order
//! with coordinate `i` dropped); a point `x` belongs to it iff its
//! projection `x_{-i}` lies in the base.

use serde::Serialize;

use crate::bitset::BitSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ProductSpace {
    factors: Vec<usize>,
    total: usize,
}

impl ProductSpace {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Invalid("product space needs at least one factor".into()));
        }
        if factors.contains(&0) {
            return Err(Error::Invalid("factor sizes must be >= 1".into()));
        }
        let total = factors
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .filter(|&t| t <= u32::MAX as usize)
            .ok_or_else(|| Error::Invalid(format!("product {factors:?} is too large")))?;
        Ok(ProductSpace { factors, total })
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    /// Number of directions `k`.
    pub fn arity(&self) -> usize {
        self.factors.len()
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Size of the complementary product `Π_{j≠dir} X_j`.
    pub fn base_len(&self, dir: usize) -> usize {
        self.total / self.factors[dir]
    }

    pub fn decode(&self, mut x: usize) -> Vec<usize> {
        let mut coords = vec![0; self.factors.len()];
        for (c, &n) in coords.iter_mut().zip(&self.factors).rev() {
            *c = x % n;
            x /= n;
        }
        coords
    }

    pub fn encode(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.factors.len() {
            return Err(Error::Invalid(format!(
                "point {coords:?} has {} coordinates, space has {}",
                coords.len(),
                self.factors.len()
            )));
        }
        coords
            .iter()
            .zip(&self.factors)
            .try_fold(0, |acc, (&c, &n)| {
                if c < n {
                    Ok(acc * n + c)
                } else {
                    Err(Error::Invalid(format!(
                        "coordinate {c} out of range in {coords:?} for factors {:?}",
                        self.factors
                    )))
                }
            })
    }

    /// `x_{-dir}`: the index of `x` in the complementary product.
    pub fn project(&self, x: usize, dir: usize) -> usize {
        let coords = self.decode(x);
        coords
            .iter()
            .zip(&self.factors)
            .enumerate()
            .filter(|&(j, _)| j != dir)
            .fold(0, |acc, (_, (&c, &n))| acc * n + c)
    }

    /// Inverse of [`project`](Self::project): the point with `x_{-dir} = base`
    /// and coordinate `dir` set to `t`.
    pub fn lift(&self, base: usize, dir: usize, t: usize) -> usize {
        let mut rest = base;
        let mut coords = vec![0; self.factors.len()];
        for j in (0..self.factors.len()).rev() {
            if j == dir {
                coords[j] = t;
            } else {
                coords[j] = rest % self.factors[j];
                rest /= self.factors[j];
            }
        }
        coords
            .iter()
            .zip(&self.factors)
            .fold(0, |acc, (&c, &n)| acc * n + c)
    }

    /// Decodes a complementary-product index to coordinates over the
    /// remaining factors.
    pub fn decode_base(&self, dir: usize, b: usize) -> Vec<usize> {
        let mut rest = b;
        let mut coords: Vec<usize> = self
            .factors
            .iter()
            .enumerate()
            .rev()
            .filter(|&(j, _)| j != dir)
            .map(|(_, &n)| {
                let c = rest % n;
                rest /= n;
                c
            })
            .collect();
        coords.reverse();
        coords
    }

    pub fn projections(&self) -> Projections {
        let table = (0..self.arity())
            .map(|dir| (0..self.total).map(|x| self.project(x, dir) as u32).collect())
            .collect();
        Projections { table }
    }
}

/// Precomputed `x ↦ x_{-i}` tables for every direction.
#[derive(Debug, Clone)]
pub struct Projections {
    table: Vec<Vec<u32>>,
}

impl Projections {
    #[inline]
    pub fn get(&self, dir: usize, x: usize) -> usize {
        self.table[dir][x] as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cylinder {
    pub dir: usize,
    pub base: BitSet,
}

/// One optional cylinder per direction; `None` is the full cylinder.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CylinderIntersection {
    slots: Vec<Option<Cylinder>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Homogeneity {
    Positive,
    Negative,
    Mixed,
}

impl Homogeneity {
    pub fn is_homogeneous(self) -> bool {
        self != Homogeneity::Mixed
    }

    pub fn flip(self) -> Self {
        match self {
            Homogeneity::Positive => Homogeneity::Negative,
            Homogeneity::Negative => Homogeneity::Positive,
            Homogeneity::Mixed => Homogeneity::Mixed,
        }
    }
}

impl CylinderIntersection {
    /// All slots full: the whole space.
    pub fn full(space: &ProductSpace) -> Self {
        CylinderIntersection {
            slots: vec![None; space.arity()],
        }
    }

    pub fn from_slots(space: &ProductSpace, slots: Vec<Option<Cylinder>>) -> Result<Self> {
        if slots.len() != space.arity() {
            return Err(Error::Invalid(format!(
                "{} cylinder slots for a {}-fold product",
                slots.len(),
                space.arity()
            )));
        }
        for (i, slot) in slots.iter().enumerate() {
            if let Some(c) = slot {
                if c.dir != i {
                    return Err(Error::Invalid(format!(
                        "cylinder in direction {} placed in slot {i}",
                        c.dir
                    )));
                }
                if c.base.len() != space.base_len(i) {
                    return Err(Error::Invalid(format!(
                        "direction {i} base has length {}, expected {}",
                        c.base.len(),
                        space.base_len(i)
                    )));
                }
            }
        }
        Ok(CylinderIntersection { slots })
    }

    /// Builds a CI with every slot present from per-direction base sets.
    pub fn from_bases(space: &ProductSpace, bases: Vec<BitSet>) -> Result<Self> {
        let slots = bases
            .into_iter()
            .enumerate()
            .map(|(dir, base)| Some(Cylinder { dir, base }))
            .collect();
        CylinderIntersection::from_slots(space, slots)
    }

    /// Builds a CI from per-direction lists of complementary-product indices.
    pub fn from_base_lists(space: &ProductSpace, bases: &[Vec<usize>]) -> Result<Self> {
        if bases.len() != space.arity() {
            return Err(Error::Invalid(format!(
                "{} bases for a {}-fold product",
                bases.len(),
                space.arity()
            )));
        }
        let sets = bases
            .iter()
            .enumerate()
            .map(|(dir, list)| {
                let len = space.base_len(dir);
                match list.iter().find(|&&b| b >= len) {
                    Some(b) => Err(Error::Invalid(format!(
                        "base index {b} out of range for direction {dir}"
                    ))),
                    None => Ok(BitSet::from_indices(len, list.iter().copied())),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        CylinderIntersection::from_bases(space, sets)
    }

    /// The combinatorial rectangle `rows × cols` of a 2-fold product.
    pub fn rectangle(space: &ProductSpace, rows: &[usize], cols: &[usize]) -> Result<Self> {
        if space.arity() != 2 {
            return Err(Error::Invalid("rectangles live in 2-fold products".into()));
        }
        // direction 0 ignores the row coordinate, so its base is the column set
        CylinderIntersection::from_base_lists(space, &[cols.to_vec(), rows.to_vec()])
    }

    pub fn slots(&self) -> &[Option<Cylinder>] {
        &self.slots
    }

    /// Per-direction bases with full slots materialised.
    pub fn bases(&self, space: &ProductSpace) -> Vec<BitSet> {
        self.slots
            .iter()
            .enumerate()
            .map(|(i, s)| match s {
                Some(c) => c.base.clone(),
                None => BitSet::full(space.base_len(i)),
            })
            .collect()
    }

    /// Per-direction sorted base index lists (the wire form of a witness).
    pub fn base_lists(&self, space: &ProductSpace) -> Vec<Vec<usize>> {
        self.bases(space).iter().map(|b| b.iter().collect()).collect()
    }

    pub fn contains(&self, space: &ProductSpace, x: usize) -> bool {
        self.slots.iter().enumerate().all(|(i, s)| match s {
            Some(c) => c.base.contains(space.project(x, i)),
            None => true,
        })
    }

    pub fn members(&self, space: &ProductSpace) -> BitSet {
        BitSet::from_indices(
            space.total(),
            (0..space.total()).filter(|&x| self.contains(space, x)),
        )
    }

    pub fn size(&self, space: &ProductSpace) -> usize {
        (0..space.total()).filter(|&x| self.contains(space, x)).count()
    }

    pub fn homogeneity(&self, rel: &Relation) -> Homogeneity {
        homogeneity_of(&self.members(&rel.space), &rel.edges)
    }
}

/// Homogeneity of a point set with respect to an edge set; the empty set
/// counts as positive.
pub fn homogeneity_of(points: &BitSet, edges: &BitSet) -> Homogeneity {
    let mut any_edge = false;
    let mut any_non_edge = false;
    for x in points.iter() {
        if edges.contains(x) {
            any_edge = true;
        } else {
            any_non_edge = true;
        }
        if any_edge && any_non_edge {
            return Homogeneity::Mixed;
        }
    }
    if any_non_edge {
        Homogeneity::Negative
    } else {
        Homogeneity::Positive
    }
}

/// A relation `E ⊆ X_1 × … × X_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub space: ProductSpace,
    pub edges: BitSet,
}

impl Relation {
    pub fn new(space: ProductSpace, edges: BitSet) -> Result<Self> {
        if edges.len() != space.total() {
            return Err(Error::Invalid(format!(
                "edge set over {} points for a space of {}",
                edges.len(),
                space.total()
            )));
        }
        Ok(Relation { space, edges })
    }

    pub fn from_tuples(factors: Vec<usize>, tuples: &[Vec<usize>]) -> Result<Self> {
        let space = ProductSpace::new(factors)?;
        let mut edges = BitSet::new(space.total());
        for t in tuples {
            edges.insert(space.encode(t)?);
        }
        Relation::new(space, edges)
    }

    pub fn full(space: ProductSpace) -> Self {
        let edges = BitSet::full(space.total());
        Relation { space, edges }
    }

    pub fn empty(space: ProductSpace) -> Self {
        let edges = BitSet::new(space.total());
        Relation { space, edges }
    }

    pub fn complement(&self) -> Self {
        Relation {
            space: self.space.clone(),
            edges: self.edges.complement(),
        }
    }

    pub fn tuples(&self) -> Vec<Vec<usize>> {
        self.edges.iter().map(|x| self.space.decode(x)).collect()
    }
}

/// Cylinder-intersection enumeration over a product whose complementary
/// products all have at most 63 points.
///
/// CI number `idx` is the mixed-radix number whose digit for direction `i`
/// (direction 0 most significant) is the base of slot `i` read as a bit
/// mask over the complementary product.
#[derive(Debug, Clone)]
pub struct CiEnumeration {
    space: ProductSpace,
    widths: Vec<u32>,
    count_log2: u32,
}

impl CiEnumeration {
    pub fn new(space: &ProductSpace, budget: u64) -> Result<Self> {
        let widths: Vec<u32> = (0..space.arity())
            .map(|i| space.base_len(i) as u32)
            .collect();
        let count_log2: u32 = widths.iter().sum();
        if count_log2 >= 64 || (1u64 << count_log2) > budget {
            return Err(Error::BudgetExceeded {
                what: "cylinder-intersection enumeration",
                required_log2: count_log2,
                budget,
            });
        }
        Ok(CiEnumeration {
            space: space.clone(),
            widths,
            count_log2,
        })
    }

    pub fn count(&self) -> u64 {
        1u64 << self.count_log2
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    /// Base masks of CI number `idx`, in direction order.
    pub fn masks(&self, idx: u64, out: &mut [u64]) {
        let mut rest = idx;
        for (slot, &w) in out.iter_mut().zip(&self.widths).rev() {
            *slot = rest & ((1u64 << w) - 1);
            rest >>= w;
        }
    }

    pub fn ci(&self, idx: u64) -> CylinderIntersection {
        let mut masks = vec![0; self.widths.len()];
        self.masks(idx, &mut masks);
        let bases = masks
            .iter()
            .zip(&self.widths)
            .map(|(&m, &w)| BitSet::from_mask(w as usize, m))
            .collect();
        CylinderIntersection::from_bases(&self.space, bases).expect("widths match the space")
    }

    pub fn iter(&self) -> impl Iterator<Item = CylinderIntersection> + '_ {
        (0..self.count()).map(|i| self.ci(i))
    }
}

/// Checks the enumeration budget and returns the full, ordered stream of
/// cylinder intersections.
pub fn enumerate_cis(space: &ProductSpace, budget: u64) -> Result<CiEnumeration> {
    CiEnumeration::new(space, budget)
}

/// Membership test against base masks, using precomputed projections.
#[inline]
pub(crate) fn mask_contains(proj: &Projections, masks: &[u64], x: usize) -> bool {
    masks
        .iter()
        .enumerate()
        .all(|(i, m)| m >> proj.get(i, x) & 1 == 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(f: &[usize]) -> ProductSpace {
        ProductSpace::new(f.to_vec()).unwrap()
    }

    #[test]
    fn mixed_radix_round_trip() {
        let s = space(&[2, 3, 4]);
        for x in 0..s.total() {
            assert_eq!(s.encode(&s.decode(x)).unwrap(), x);
            for dir in 0..3 {
                let b = s.project(x, dir);
                assert_eq!(s.lift(b, dir, s.decode(x)[dir]), x);
            }
        }
        assert_eq!(s.decode(23), vec![1, 2, 3]);
        assert_eq!(s.project(23, 1), 7);
        assert_eq!(s.decode_base(1, 7), vec![1, 3]);
        assert!(s.encode(&[2, 0, 0]).is_err());
    }

    #[test]
    fn rejects_degenerate_spaces() {
        assert!(ProductSpace::new(vec![]).is_err());
        assert!(ProductSpace::new(vec![2, 0]).is_err());
    }

    #[test]
    fn contains_examples() {
        let s = space(&[2, 2]);
        let full = CylinderIntersection::full(&s);
        assert!((0..4).all(|x| full.contains(&s, x)));

        let ci = CylinderIntersection::from_slots(
            &s,
            vec![
                Some(Cylinder {
                    dir: 0,
                    base: BitSet::from_indices(2, [0]),
                }),
                None,
            ],
        )
        .unwrap();
        let members: Vec<_> = (0..4).filter(|&x| ci.contains(&s, x)).map(|x| s.decode(x)).collect();
        assert_eq!(members, vec![vec![0, 0], vec![1, 0]]);

        let s3 = space(&[2, 2, 2]);
        let ci = CylinderIntersection::from_base_lists(&s3, &[vec![0], vec![0, 1, 2, 3], vec![0, 1, 2, 3]])
            .unwrap();
        let members: Vec<_> = (0..8).filter(|&x| ci.contains(&s3, x)).map(|x| s3.decode(x)).collect();
        assert_eq!(members, vec![vec![0, 0, 0], vec![1, 0, 0]]);
    }

    #[test]
    fn size_examples() {
        let s = space(&[3, 3]);
        assert_eq!(CylinderIntersection::full(&s).size(&s), 9);
        assert_eq!(CylinderIntersection::rectangle(&s, &[0, 1], &[2]).unwrap().size(&s), 2);
        let ci = CylinderIntersection::from_base_lists(&s, &[vec![0, 1, 2], vec![0, 2]]).unwrap();
        assert_eq!(ci.size(&s), 6);
    }

    #[test]
    fn homogeneity_examples() {
        let s = space(&[2, 2]);
        let full_rel = Relation::full(s.clone());
        assert_eq!(CylinderIntersection::full(&s).homogeneity(&full_rel), Homogeneity::Positive);
        let diag = Relation::from_tuples(vec![2, 2], &[vec![0, 0], vec![1, 1]]).unwrap();
        assert_eq!(CylinderIntersection::full(&s).homogeneity(&diag), Homogeneity::Mixed);
        let corner = CylinderIntersection::rectangle(&s, &[0], &[0]).unwrap();
        assert_eq!(corner.homogeneity(&diag), Homogeneity::Positive);
        let empty = CylinderIntersection::from_base_lists(&s, &[vec![], vec![0]]).unwrap();
        assert_eq!(empty.homogeneity(&diag), Homogeneity::Positive);
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_cis(&space(&[2, 2]), 1 << 20).unwrap().count(), 16);
        assert_eq!(enumerate_cis(&space(&[2, 2, 2]), 1 << 20).unwrap().count(), 4096);
        assert_eq!(enumerate_cis(&space(&[1, 1]), 1 << 20).unwrap().count(), 4);
        match enumerate_cis(&space(&[2, 2, 2]), 100) {
            Err(Error::BudgetExceeded { required_log2, .. }) => assert_eq!(required_log2, 12),
            other => panic!("{other:?}"),
        }
        assert_eq!(enumerate_cis(&space(&[9, 9]), 1 << 20).unwrap().count(), 1 << 18);
        assert!(enumerate_cis(&space(&[9, 9, 9]), u64::MAX).is_err());
    }

    #[test]
    fn enumeration_is_distinct_and_ordered() {
        let s = space(&[2, 3]);
        let e = enumerate_cis(&s, 1 << 20).unwrap();
        let all: Vec<_> = e.iter().collect();
        assert_eq!(all.len(), 1 << 5);
        let distinct: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(distinct.len(), all.len());
        // direction 0 is the most significant digit
        assert_eq!(e.ci(1).base_lists(&s), vec![vec![], vec![0]]);
        assert_eq!(e.ci(4).base_lists(&s), vec![vec![0], vec![]]);
    }
}
