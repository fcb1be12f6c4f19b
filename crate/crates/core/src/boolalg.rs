//! Finite Boolean algebras of subsets of `{0..n-1}`, measures on their
//! atoms, extension intervals, borders, and the determinacy test.
//!
//! The full algebra 𝔅 is the power set of the ground set; a subalgebra 𝔄
//! is given by generators and represented by its atoms. Subsets are `u64`
//! masks, so `n <= 64`. All measure arithmetic is exact.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::rational::{self, Rational};

pub const MAX_GROUND: usize = 64;

/// Largest ground set for which determinacy sweeps every subset.
pub const EXHAUSTIVE_SWEEP_MAX: usize = 20;

pub type Mask = u64;

fn ground_mask(n: usize) -> Mask {
    if n == 64 {
        !0
    } else {
        (1u64 << n) - 1
    }
}

/// The subalgebra of `P({0..n-1})` generated by `gens`, with its atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteBooleanAlgebra {
    n: usize,
    gens: Vec<Mask>,
    atoms: Vec<Mask>,
}

/// Splits the ground set into classes of points that no generator
/// separates. Blocks are ordered by their smallest point.
pub fn generate_subalgebra(n: usize, gens: &[Mask]) -> Vec<Mask> {
    let ground = ground_mask(n);
    let mut blocks: Vec<Mask> = if n == 0 { Vec::new() } else { vec![ground] };
    for &g in gens {
        blocks = split_blocks(&blocks, g);
    }
    blocks
}

/// Refines `blocks` by `set`, keeping the blocks ordered by smallest point.
fn split_blocks(blocks: &[Mask], set: Mask) -> Vec<Mask> {
    let mut out: Vec<Mask> = blocks
        .iter()
        .flat_map(|&b| [b & set, b & !set])
        .filter(|&b| b != 0)
        .collect();
    out.sort_unstable_by_key(|b| b.trailing_zeros());
    out
}

impl FiniteBooleanAlgebra {
    pub fn new(n: usize, gens: Vec<Mask>) -> Result<Self> {
        if n > MAX_GROUND {
            return Err(Error::Invalid(format!(
                "ground set of size {n} exceeds {MAX_GROUND}"
            )));
        }
        if let Some(g) = gens.iter().find(|&&g| g & !ground_mask(n) != 0) {
            return Err(Error::Invalid(format!(
                "generator {g:#b} is not a subset of a {n}-point ground set"
            )));
        }
        let atoms = generate_subalgebra(n, &gens);
        Ok(FiniteBooleanAlgebra { n, gens, atoms })
    }

    /// The full power-set algebra, whose atoms are the singletons.
    pub fn discrete(n: usize) -> Result<Self> {
        FiniteBooleanAlgebra::new(n, (0..n).map(|x| 1 << x).collect())
    }

    pub fn from_point_lists(n: usize, gens: &[Vec<usize>]) -> Result<Self> {
        let masks = gens
            .iter()
            .map(|g| points_to_mask(n, g))
            .collect::<Result<Vec<_>>>()?;
        FiniteBooleanAlgebra::new(n, masks)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gens(&self) -> &[Mask] {
        &self.gens
    }

    pub fn atoms(&self) -> &[Mask] {
        &self.atoms
    }

    pub fn ground(&self) -> Mask {
        ground_mask(self.n)
    }

    /// `true` iff `set` is a union of atoms.
    pub fn contains(&self, set: Mask) -> bool {
        self.atoms
            .iter()
            .all(|&a| a & set == 0 || a & !set == 0)
    }

    /// Atoms meeting both `set` and its complement.
    pub fn border(&self, set: Mask) -> Vec<Mask> {
        self.atoms
            .iter()
            .copied()
            .filter(|&a| a & set != 0 && a & !set != 0)
            .collect()
    }

    /// The algebra generated by the current generators together with `set`.
    pub fn with_generator(&self, set: Mask) -> Result<Self> {
        self.check_mask(set)?;
        let mut gens = self.gens.clone();
        gens.push(set);
        Ok(FiniteBooleanAlgebra {
            n: self.n,
            gens,
            atoms: split_blocks(&self.atoms, set),
        })
    }

    fn check_mask(&self, set: Mask) -> Result<()> {
        if set & !self.ground() != 0 {
            return Err(Error::Invalid(format!(
                "set {set:#b} is not a subset of a {}-point ground set",
                self.n
            )));
        }
        Ok(())
    }
}

pub fn points_to_mask(n: usize, points: &[usize]) -> Result<Mask> {
    points.iter().try_fold(0, |mask, &x| {
        if x >= n || x >= MAX_GROUND {
            Err(Error::Invalid(format!("point {x} outside ground set of size {n}")))
        } else {
            Ok(mask | 1 << x)
        }
    })
}

pub fn mask_to_points(mask: Mask) -> Vec<usize> {
    (0..64).filter(|x| mask >> x & 1 == 1).collect()
}

/// A probability measure on a finite algebra: one weight per atom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AtomMeasure {
    #[serde(with = "rational::vec")]
    weights: Vec<Rational>,
}

impl AtomMeasure {
    /// Validates non-negativity and that the weights sum to exactly one.
    pub fn new(alg: &FiniteBooleanAlgebra, weights: Vec<Rational>) -> Result<Self> {
        if weights.len() != alg.atoms.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} weights for {} atoms",
                weights.len(),
                alg.atoms.len()
            )));
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
        Ok(AtomMeasure { weights })
    }

    pub fn uniform_on_atoms(alg: &FiniteBooleanAlgebra) -> Self {
        let k = alg.atoms.len() as i64;
        AtomMeasure {
            weights: vec![rational::ratio(1, k); alg.atoms.len()],
        }
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// Total weight of the atoms in the border of `set`.
    pub fn border_mass(&self, alg: &FiniteBooleanAlgebra, set: Mask) -> Rational {
        alg.atoms
            .iter()
            .zip(&self.weights)
            .filter(|(&a, _)| a & set != 0 && a & !set != 0)
            .map(|(_, w)| w.clone())
            .sum()
    }

    /// `μ(set)` when `set` belongs to the algebra.
    pub fn measure_of(&self, alg: &FiniteBooleanAlgebra, set: Mask) -> Option<Rational> {
        alg.contains(set).then(|| {
            alg.atoms
                .iter()
                .zip(&self.weights)
                .filter(|(a, _)| *a & set != 0)
                .map(|(_, w)| w.clone())
                .sum()
        })
    }

    /// Restriction of a measure on `fine` to the coarser algebra `coarse`.
    /// Every atom of `coarse` must be a union of atoms of `fine`.
    pub fn restrict(
        &self,
        fine: &FiniteBooleanAlgebra,
        coarse: &FiniteBooleanAlgebra,
    ) -> Result<AtomMeasure> {
        let weights = coarse
            .atoms
            .iter()
            .map(|&a| {
                self.measure_of(fine, a).ok_or_else(|| {
                    Error::Invalid(format!("atom {a:#b} is not in the finer algebra"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AtomMeasure { weights })
    }
}

/// Inner and outer approximations of `set` by the algebra:
/// `lo = μ(atoms inside set)`, `hi = μ(atoms meeting set)`.
pub fn extension_interval(
    alg: &FiniteBooleanAlgebra,
    mu: &AtomMeasure,
    set: Mask,
) -> (Rational, Rational) {
    let mut lo = Rational::zero();
    let mut hi = Rational::zero();
    for (&a, w) in alg.atoms.iter().zip(&mu.weights) {
        if a & set == 0 {
            continue;
        }
        hi += w;
        if a & !set == 0 {
            lo += w;
        }
    }
    (lo, hi)
}

/// An extension of a measure to the algebra generated by one more set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extension {
    pub algebra: FiniteBooleanAlgebra,
    pub measure: AtomMeasure,
    pub lo: Rational,
    pub hi: Rational,
}

/// Extends `mu` from `alg` to `⟨alg ∪ {set}⟩` so that the new measure
/// gives `set` exactly `alpha`.
///
/// Atoms inside or outside `set` keep their weight. The excess
/// `alpha - lo` is spread over the straddling atoms in proportion to
/// their weight: a straddling atom of weight `w` puts
/// `w * (alpha - lo) / (hi - lo)` on its part inside `set` and the rest
/// on its part outside.
pub fn extend_measure(
    alg: &FiniteBooleanAlgebra,
    mu: &AtomMeasure,
    set: Mask,
    alpha: &Rational,
) -> Result<Extension> {
    alg.check_mask(set)?;
    let (lo, hi) = extension_interval(alg, mu, set);
    if alpha < &lo || alpha > &hi {
        return Err(Error::AlphaOutOfRange {
            alpha: rational::format(alpha),
            lo: rational::format(&lo),
            hi: rational::format(&hi),
        });
    }
    let share = if hi == lo {
        Rational::zero()
    } else {
        (alpha - &lo) / (&hi - &lo)
    };
    let algebra = alg.with_generator(set)?;
    let mut weights = vec![Rational::zero(); algebra.atoms.len()];
    let slot = |part: Mask| {
        algebra
            .atoms
            .iter()
            .position(|&b| b == part)
            .expect("part of a split atom is an atom of the extension")
    };
    for (&a, w) in alg.atoms.iter().zip(&mu.weights) {
        let inside = a & set;
        let outside = a & !set;
        match (inside != 0, outside != 0) {
            (true, true) => {
                let w_in = w * &share;
                weights[slot(outside)] = w - &w_in;
                weights[slot(inside)] = w_in;
            }
            (true, false) => weights[slot(inside)] = w.clone(),
            (false, true) => weights[slot(outside)] = w.clone(),
            (false, false) => unreachable!("atoms are nonempty"),
        }
    }
    // non-negative and summing to one by construction
    let measure = AtomMeasure { weights };
    Ok(Extension {
        algebra,
        measure,
        lo,
        hi,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeterminacyReport {
    /// Border criterion: the restriction gives every border measure zero.
    pub border_method: bool,
    /// Oracle: every extension interval of the restriction is degenerate.
    pub interval_method: bool,
    pub verdict: bool,
    /// Whether every subset was swept or the singleton shortcut was used.
    pub exhaustive: bool,
    /// A set witnessing non-determinacy, when one was found.
    pub witness: Option<Vec<usize>>,
}

/// Decides whether `nu`, a measure on the full algebra over `n` points (one
/// weight per point), is determined by its restriction to the subalgebra
/// generated by `gens`.
///
/// Two independent routes are evaluated and must agree. For `n` up to
/// [`EXHAUSTIVE_SWEEP_MAX`] both sweep all `2^n` subsets; above that the
/// border route checks that every positive-mass atom is a singleton and the
/// interval route checks all singleton sets.
pub fn is_determined(
    n: usize,
    nu: &[Rational],
    gens: &[Mask],
    exec: Execution,
) -> Result<DeterminacyReport> {
    let full = FiniteBooleanAlgebra::discrete(n)?;
    let nu = AtomMeasure::new(&full, nu.to_vec())?;
    let sub = FiniteBooleanAlgebra::new(n, gens.to_vec())?;
    let mu = nu.restrict(&full, &sub)?;

    let border_null = |set: Mask| mu.border_mass(&sub, set).is_zero();
    let degenerate = |set: Mask| {
        let (lo, hi) = extension_interval(&sub, &mu, set);
        lo == hi
    };

    let exhaustive = n <= EXHAUSTIVE_SWEEP_MAX;
    let (border_method, interval_method) = if exhaustive {
        let range = 0..1u64 << n;
        (
            par::all_in_range(exec, range.clone(), border_null),
            par::all_in_range(exec, range, degenerate),
        )
    } else {
        let singletons_only = sub
            .atoms
            .iter()
            .zip(&mu.weights)
            .all(|(a, w)| w.is_zero() || a.count_ones() == 1);
        (singletons_only, (0..n).all(|x| degenerate(1 << x)))
    };

    if border_method != interval_method {
        return Err(Error::MethodDisagreement(format!(
            "n={n}, gens={gens:?}: border says {border_method}, intervals say {interval_method}"
        )));
    }
    let witness = (!border_method).then(|| {
        // a point of a positive-mass non-singleton atom
        let atom = sub
            .atoms
            .iter()
            .zip(&mu.weights)
            .find(|(a, w)| !w.is_zero() && a.count_ones() > 1)
            .map(|(a, _)| *a)
            .expect("non-determined measure has a heavy non-singleton atom");
        vec![atom.trailing_zeros() as usize]
    });
    Ok(DeterminacyReport {
        border_method,
        interval_method,
        verdict: border_method,
        exhaustive,
        witness,
    })
}
