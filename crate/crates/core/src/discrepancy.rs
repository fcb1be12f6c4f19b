//! Strong discrepancy, the generalized inner product, and the
//! Babai–Hayes–Kimmel bound on cylinder intersections.
//!
//! For `f: Z → B` and `S ⊆ Z`,
//!
//! ```text
//! Γ(f, S) = max_y |  |f⁻¹(y) ∩ S| − |S|/|B|  | / |Z|
//!         = max_y | |B|·|f⁻¹(y) ∩ S| − |S| | / (|B|·|Z|)
//! ```
//!
//! The second form keeps every sweep in integers; rationals are only built
//! for reported values.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::bitset::BitSet;
use crate::cylinder::{self, CylinderIntersection, ProductSpace};
use crate::error::{Error, Result};
use crate::finfield::{self, FieldElement, FieldSpec};
use crate::par::{self, Execution};
use crate::rational::{self, Rational};

/// Default cap on materialised points for [`gip_function`].
pub const DEFAULT_POINT_BUDGET: u64 = 1 << 20;

/// A function from `{0..|Z|-1}` to `{0..|B|-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteFunction {
    range_size: usize,
    values: Vec<u32>,
}

impl FiniteFunction {
    pub fn new(range_size: usize, values: Vec<u32>) -> Result<Self> {
        if range_size == 0 || values.is_empty() {
            return Err(Error::Invalid("domain and range must be nonempty".into()));
        }
        if let Some(v) = values.iter().find(|&&v| v as usize >= range_size) {
            return Err(Error::Invalid(format!(
                "value {v} outside range of size {range_size}"
            )));
        }
        Ok(FiniteFunction { range_size, values })
    }

    pub fn domain_size(&self) -> usize {
        self.values.len()
    }

    pub fn range_size(&self) -> usize {
        self.range_size
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    #[inline]
    pub fn value(&self, z: usize) -> usize {
        self.values[z] as usize
    }

    /// `|f⁻¹(y) ∩ S|` for every `y`.
    pub fn fiber_counts(&self, set: &BitSet) -> Vec<u64> {
        let mut counts = vec![0u64; self.range_size];
        for z in set.iter() {
            counts[self.value(z)] += 1;
        }
        counts
    }
}

/// Largest `| |B|·c_y − |S| |` over the fibers, with the first maximising `y`.
fn max_deviation(counts: &[u64], set_size: u64) -> (u64, usize) {
    let b = counts.len() as u64;
    counts
        .iter()
        .enumerate()
        .map(|(y, &c)| ((b * c).abs_diff(set_size), y))
        .fold((0, 0), |best, cur| if cur.0 > best.0 { cur } else { best })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Discrepancy {
    #[serde(with = "rational")]
    pub gamma: Rational,
    /// Smallest range index attaining the maximum.
    pub argmax: usize,
}

pub fn strong_discrepancy(f: &FiniteFunction, set: &BitSet) -> Discrepancy {
    let counts = f.fiber_counts(set);
    let (dev, argmax) = max_deviation(&counts, set.count() as u64);
    Discrepancy {
        gamma: gamma_from_deviation(dev, f.range_size, f.domain_size()),
        argmax,
    }
}

fn gamma_from_deviation(dev: u64, range: usize, domain: usize) -> Rational {
    Rational::new(BigInt::from(dev), BigInt::from(range as u64 * domain as u64))
}

/// The probabilistic form `(|S|/|Z|)·max_y |Pr_{z∼S}[f(z)=y] − 1/|B||`.
/// Defined for nonempty `S`.
pub fn strong_discrepancy_probabilistic(f: &FiniteFunction, set: &BitSet) -> Option<Rational> {
    let size = set.count() as i64;
    if size == 0 {
        return None;
    }
    let density = rational::ratio(size, f.domain_size() as i64);
    let uniform = rational::ratio(1, f.range_size as i64);
    f.fiber_counts(set)
        .iter()
        .map(|&c| {
            let diff = rational::ratio(c as i64, size) - &uniform;
            &density * if diff < Rational::zero() { -diff } else { diff }
        })
        .max()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiberLine {
    pub value: usize,
    pub count: u64,
    #[serde(with = "rational")]
    pub lower_bound: Rational,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiberReport {
    pub holds: bool,
    pub lines: Vec<FiberLine>,
    #[serde(with = "rational")]
    pub gamma: Rational,
    /// `|S| ≥ α|Z|` and `Γ < α/|B|` for the supplied `α`.
    pub trigger: bool,
    pub all_fibers_meet: bool,
}

/// Evaluates `|f⁻¹(y) ∩ S| ≥ |S|/|B| − Γ(f,S)·|Z|` for every `y`, and the
/// density trigger for `alpha` (if given) under which all fibers must meet
/// `S`.
pub fn fiber_bound_holds(f: &FiniteFunction, set: &BitSet, alpha: Option<&Rational>) -> FiberReport {
    let counts = f.fiber_counts(set);
    let gamma = strong_discrepancy(f, set).gamma;
    let size = set.count() as i64;
    let domain = f.domain_size() as i64;
    let range = f.range_size as i64;
    let floor = rational::ratio(size, range) - &gamma * rational::int(domain);
    let lines: Vec<FiberLine> = counts
        .iter()
        .enumerate()
        .map(|(y, &c)| FiberLine {
            value: y,
            count: c,
            holds: rational::int(c as i64) >= floor,
            lower_bound: floor.clone(),
        })
        .collect();
    let trigger = alpha.is_some_and(|a| {
        rational::int(size) >= a * rational::int(domain) && gamma < a / rational::int(range)
    });
    FiberReport {
        holds: lines.iter().all(|l| l.holds),
        all_fibers_meet: counts.iter().all(|&c| c > 0),
        lines,
        gamma,
        trigger,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AllValuesReport {
    pub attained: bool,
    pub missing: Vec<usize>,
    /// `Γ(f,C) < (|C|/|Z|)/|B|`, which forces every value to be attained.
    pub trigger: bool,
}

impl AllValuesReport {
    pub fn consistent(&self) -> bool {
        !self.trigger || self.attained
    }
}

pub fn all_values_attained(
    f: &FiniteFunction,
    space: &ProductSpace,
    ci: &CylinderIntersection,
) -> Result<AllValuesReport> {
    if space.total() != f.domain_size() {
        return Err(Error::Invalid(format!(
            "function over {} points, space has {}",
            f.domain_size(),
            space.total()
        )));
    }
    let members = ci.members(space);
    let counts = f.fiber_counts(&members);
    let (dev, _) = max_deviation(&counts, members.count() as u64);
    let missing: Vec<usize> = (0..counts.len()).filter(|&y| counts[y] == 0).collect();
    let report = AllValuesReport {
        attained: missing.is_empty(),
        missing,
        // Γ < (|C|/|Z|)/|B|  ⇔  dev/(|B||Z|) < |C|/(|B||Z|)
        trigger: dev < members.count() as u64,
    };
    if !report.consistent() {
        return Err(Error::Invariant(
            "density trigger fired but a value is missing".into(),
        ));
    }
    Ok(report)
}

/// `GIP_{q,s,k}` over a validated field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GipSpec {
    pub field: FieldSpec,
    pub s: usize,
    pub k: usize,
}

impl GipSpec {
    pub fn new(field: FieldSpec, s: usize, k: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::Invalid("inner length s must be >= 1".into()));
        }
        if !(2..=32).contains(&k) {
            return Err(Error::Invalid(format!("number of parties k={k} not in [2, 32]")));
        }
        Ok(GipSpec { field, s, k })
    }

    pub fn q(&self) -> u64 {
        self.field.q()
    }

    /// `q^s`, the size of each party's input set.
    pub fn factor_size(&self) -> Option<u64> {
        self.q().checked_pow(self.s as u32)
    }

    /// `|Z| = q^{sk}`, or `None` on overflow.
    fn domain_size(&self) -> Option<u64> {
        self.factor_size()?.checked_pow(self.k as u32)
    }

    pub fn bound(&self) -> BhkBound {
        BhkBound::new(self.q(), self.s as u64, self.k as u32)
    }
}

/// `Σ_{i<s} x_{1,i}·…·x_{k,i}`.
pub fn gip_eval(spec: &GipSpec, x: &[Vec<FieldElement>]) -> Result<FieldElement> {
    if x.len() != spec.k || x.iter().any(|row| row.len() != spec.s) {
        return Err(Error::Invalid(format!(
            "GIP input must be {} vectors of length {}",
            spec.k, spec.s
        )));
    }
    let f = &spec.field;
    let mut acc = f.zero();
    for i in 0..spec.s {
        let term = x[1..]
            .iter()
            .fold(x[0][i].clone(), |p, row| f.mul(&p, &row[i]));
        acc = f.add(&acc, &term);
    }
    Ok(acc)
}

/// The decoded GIP table over `Z = (F_q^s)^k`.
#[derive(Debug, Clone)]
pub struct GipTable {
    pub spec: GipSpec,
    pub space: ProductSpace,
    pub function: FiniteFunction,
}

/// Materialises `GIP_{q,s,k}` as a finite function on the product space
/// with `k` factors of size `q^s`. Within a factor, a point is the
/// mixed-radix word of `s` field-element indices, coordinate 1 most
/// significant. Range index = field enumeration index.
pub fn gip_function(spec: &GipSpec, point_budget: u64) -> Result<GipTable> {
    let factor = spec.factor_size();
    let total = spec.domain_size();
    let total = match (factor, total) {
        (Some(_), Some(t)) if t <= point_budget => t,
        _ => {
            let bits = (spec.s as f64 * spec.k as f64 * (spec.q() as f64).log2()).ceil() as u32;
            return Err(Error::BudgetExceeded {
                what: "GIP materialisation",
                required_log2: bits,
                budget: point_budget,
            });
        }
    };
    let factor = factor.expect("checked above") as usize;
    let space = ProductSpace::new(vec![factor; spec.k])?;
    let tables = spec.field.tables();
    let q = spec.q() as usize;
    let s = spec.s;
    let k = spec.k;
    let values = par::map_indices(Execution::default(), total, |x| {
        let coords = space.decode(x as usize);
        // digits[j][i] = field index of x_{j,i}
        let digits: Vec<Vec<u32>> = coords
            .iter()
            .map(|&c| {
                let mut rest = c;
                let mut d = vec![0u32; s];
                for slot in d.iter_mut().rev() {
                    *slot = (rest % q) as u32;
                    rest /= q;
                }
                d
            })
            .collect();
        (0..s).fold(0u32, |acc, i| {
            let prod = (1..k).fold(digits[0][i], |p, j| tables.mul(p, digits[j][i]));
            tables.add(acc, prod)
        })
    });
    let function = FiniteFunction::new(q, values)?;
    Ok(GipTable {
        spec: spec.clone(),
        space,
        function,
    })
}

/// `(1 − 1/q)·(1 − (1 − 1/q)^{k−1})^{s·2^{1−k}}` with an exact comparison.
///
/// Raising to the power `2^{k−1}` clears the fractional exponent, so
/// `γ ≤ bound ⇔ γ^{2^{k−1}} ≤ (1 − 1/q)^{2^{k−1}}·(1 − (1 − 1/q)^{k−1})^s`
/// for `γ ≥ 0`; both sides are rationals in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BhkBound {
    pub q: u64,
    pub s: u64,
    pub k: u32,
    /// Smallest f64 found that is provably `>=` the bound.
    pub value: f64,
    /// `value` equals the bound exactly.
    pub exact: bool,
}

impl BhkBound {
    pub fn new(q: u64, s: u64, k: u32) -> Self {
        assert!(q >= 2 && s >= 1 && k >= 2, "bound needs q >= 2, s >= 1, k >= 2");
        let r = 1.0 - 1.0 / q as f64;
        let exponent = s as f64 * 2f64.powi(1 - k as i32);
        let mut value = r * (1.0 - r.powi(k as i32 - 1)).powf(exponent);
        let mut bound = BhkBound {
            q,
            s,
            k,
            value,
            exact: false,
        };
        let rhs = bound.powered_rhs();
        loop {
            let lhs = powered(&Rational::from_float(value).expect("finite"), bound.power());
            if lhs >= rhs {
                bound.value = value;
                bound.exact = lhs == rhs;
                return bound;
            }
            value = value.next_up();
        }
    }

    /// `2^{k−1}`.
    fn power(&self) -> u32 {
        1 << (self.k - 1)
    }

    /// `(1 − 1/q)^{2^{k−1}}·(1 − (1 − 1/q)^{k−1})^s`.
    pub fn powered_rhs(&self) -> Rational {
        let r = Rational::one() - rational::ratio(1, self.q as i64);
        let inner = Rational::one() - powered(&r, self.k - 1);
        powered(&r, self.power()) * powered(&inner, self.s as u32)
    }

    /// `γ ≤ bound`, decided in exact arithmetic.
    pub fn compare_exact(&self, gamma: &Rational) -> bool {
        if gamma < &Rational::zero() {
            return true;
        }
        powered(gamma, self.power()) <= self.powered_rhs()
    }

    /// The bound as a rational, when the exponent `s·2^{1−k}` is an integer.
    pub fn exact_rational(&self) -> Option<Rational> {
        let power = self.power() as u64;
        (self.s % power == 0).then(|| {
            let r = Rational::one() - rational::ratio(1, self.q as i64);
            let inner = Rational::one() - powered(&r, self.k - 1);
            &r * powered(&inner, (self.s / power) as u32)
        })
    }

    /// Twelve significant digits, rounded up.
    pub fn display(&self) -> String {
        format_upper(self.value)
    }
}

pub fn bhk_bound(q: u64, s: u64, k: u32) -> BhkBound {
    BhkBound::new(q, s, k)
}

fn powered(x: &Rational, e: u32) -> Rational {
    num_traits::pow(x.clone(), e as usize)
}

/// Decimal rendering of a non-negative `v` with 12 significant digits,
/// rounded towards +∞; trailing zeros trimmed.
pub fn format_upper(v: f64) -> String {
    assert!(v.is_finite() && v >= 0.0);
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let mut exp: i32 = exp.parse().expect("exponent");
    let mut digits: u64 = mantissa.replace('.', "").parse().expect("mantissa");
    let exact = Rational::from_float(v).expect("finite");
    let shown = Rational::new(BigInt::from(digits), BigInt::one()) * pow10(exp - 11);
    if shown < exact {
        digits += 1;
        if digits == 1_000_000_000_000 {
            digits = 100_000_000_000;
            exp += 1;
        }
    }
    let text = digits.to_string();
    let point = exp + 1; // digits before the decimal point
    let body = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), text)
    } else if point as usize >= text.len() {
        format!("{}{}", text, "0".repeat(point as usize - text.len()))
    } else {
        format!("{}.{}", &text[..point as usize], &text[point as usize..])
    };
    if body.contains('.') {
        body.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        body
    }
}

fn pow10(e: i32) -> Rational {
    let ten = Rational::from_integer(BigInt::from(10));
    if e >= 0 {
        num_traits::pow(ten, e as usize)
    } else {
        Rational::one() / num_traits::pow(ten, (-e) as usize)
    }
}

/// Smallest prime power `q` with `q > (k−1)²/α`.
pub fn cor_threshold(k: u64, alpha: &Rational) -> Result<u64> {
    if k < 2 {
        return Err(Error::Invalid("k must be >= 2".into()));
    }
    if alpha <= &Rational::zero() || alpha > &Rational::one() {
        return Err(Error::Invalid(format!(
            "alpha {} not in (0, 1]",
            rational::format(alpha)
        )));
    }
    let threshold = rational::int(((k - 1) * (k - 1)) as i64) / alpha;
    let start = threshold.floor().to_integer().to_u64().ok_or_else(|| {
        Error::Invalid("threshold too large".into())
    })?;
    (start.max(2)..)
        .find(|&q| finfield::prime_power(q).is_some() && rational::int(q as i64) > threshold)
        .ok_or_else(|| Error::Invalid("no prime power found".into()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaxDiscrepancy {
    #[serde(with = "rational")]
    pub gamma: Rational,
    pub witness_index: u64,
    pub witness: Vec<Vec<usize>>,
    pub ci_count: u64,
}

/// Exact maximum of `Γ(f, C)` over every cylinder intersection `C` of
/// `space`; the witness is the first maximiser in enumeration order.
pub fn max_discrepancy_over_cis(
    f: &FiniteFunction,
    space: &ProductSpace,
    ci_budget: u64,
    exec: Execution,
) -> Result<MaxDiscrepancy> {
    check_domain(f, space)?;
    let en = cylinder::enumerate_cis(space, ci_budget)?;
    let proj = space.projections();
    let range = f.range_size;
    let best = par::best_in_range(
        exec,
        0..en.count(),
        || (vec![0u64; space.arity()], vec![0u64; range]),
        |(masks, counts), idx| {
            en.masks(idx, masks);
            counts.iter_mut().for_each(|c| *c = 0);
            let mut size = 0;
            for x in 0..space.total() {
                if cylinder::mask_contains(&proj, masks, x) {
                    counts[f.value(x)] += 1;
                    size += 1;
                }
            }
            Some(max_deviation(counts, size).0)
        },
    );
    let (idx, dev) = best.expect("at least one cylinder intersection");
    Ok(MaxDiscrepancy {
        gamma: gamma_from_deviation(dev, range, f.domain_size()),
        witness_index: idx,
        witness: en.ci(idx).base_lists(space),
        ci_count: en.count(),
    })
}

fn check_domain(f: &FiniteFunction, space: &ProductSpace) -> Result<()> {
    if f.domain_size() != space.total() {
        return Err(Error::Invalid(format!(
            "function over {} points, space has {}",
            f.domain_size(),
            space.total()
        )));
    }
    Ok(())
}

/// Everything one pass over all cylinder intersections of a GIP table
/// establishes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GipSweep {
    pub q: u64,
    pub s: usize,
    pub k: usize,
    pub ci_count: u64,
    #[serde(with = "rational")]
    pub gamma_max: Rational,
    pub witness_index: u64,
    pub witness: Vec<Vec<usize>>,
    pub bound: BhkBound,
    /// `gamma_max ≤ bound`, exact.
    pub bound_holds: bool,
    /// CIs with `Γ(f,C) < (|C|/|Z|)/q`.
    pub dense_low_discrepancy: u64,
    /// Of those, CIs missing some value (must be zero).
    pub all_values_violations: u64,
    /// Nonempty CIs homogeneous for the zero set of GIP.
    pub homogeneous: u64,
    /// Homogeneous CIs with `|C| > q·Γ(f,C)·|Z|` (must be zero).
    pub fiber_chain_violations: u64,
    pub homogeneous_max_size: u64,
    #[serde(with = "rational")]
    pub homogeneous_max_measure: Rational,
    pub homogeneous_max_index: Option<u64>,
    /// `homogeneous_max_measure ≤ q·bound`, exact.
    pub ceiling_holds: bool,
}

impl GipSweep {
    pub fn passed(&self) -> bool {
        self.bound_holds
            && self.ceiling_holds
            && self.all_values_violations == 0
            && self.fiber_chain_violations == 0
    }
}

#[derive(Debug, Clone, Default)]
struct SweepAcc {
    best: Option<(u64, u64)>,
    dense: u64,
    value_violations: u64,
    homogeneous: u64,
    chain_violations: u64,
    homog_best: Option<(u64, u64)>,
}

fn keep_max(a: Option<(u64, u64)>, b: Option<(u64, u64)>) -> Option<(u64, u64)> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a }),
    }
}

/// Exhaustive check of the discrepancy bound and its consequences for
/// `GIP_{q,s,k}`: the maximum of `Γ` over all cylinder intersections, the
/// all-values mechanism on every low-discrepancy CI, and the size ceiling
/// for CIs homogeneous with respect to the zero set.
pub fn gip_sweep(
    spec: &GipSpec,
    point_budget: u64,
    ci_budget: u64,
    exec: Execution,
) -> Result<GipSweep> {
    let table = gip_function(spec, point_budget)?;
    let space = &table.space;
    let f = &table.function;
    let en = cylinder::enumerate_cis(space, ci_budget)?;
    let proj = space.projections();
    let q = f.range_size;

    let acc = par::fold_range(
        exec,
        0..en.count(),
        || (vec![0u64; space.arity()], vec![0u64; q]),
        SweepAcc::default,
        |mut acc, (masks, counts), idx| {
            en.masks(idx, masks);
            counts.iter_mut().for_each(|c| *c = 0);
            let mut size = 0u64;
            for x in 0..space.total() {
                if cylinder::mask_contains(&proj, masks, x) {
                    counts[f.value(x)] += 1;
                    size += 1;
                }
            }
            let (dev, _) = max_deviation(counts, size);
            acc.best = keep_max(acc.best, Some((idx, dev)));
            if dev < size {
                acc.dense += 1;
                if counts.iter().any(|&c| c == 0) {
                    acc.value_violations += 1;
                }
            }
            let zeros = counts[0];
            if size > 0 && (zeros == size || zeros == 0) {
                acc.homogeneous += 1;
                // |C| ≤ q·Γ·|Z| = dev
                if size > dev {
                    acc.chain_violations += 1;
                }
                acc.homog_best = keep_max(acc.homog_best, Some((idx, size)));
            }
            acc
        },
        |a, b| SweepAcc {
            best: keep_max(a.best, b.best),
            dense: a.dense + b.dense,
            value_violations: a.value_violations + b.value_violations,
            homogeneous: a.homogeneous + b.homogeneous,
            chain_violations: a.chain_violations + b.chain_violations,
            homog_best: keep_max(a.homog_best, b.homog_best),
        },
    );

    let (idx, dev) = acc.best.expect("nonempty enumeration");
    let gamma_max = gamma_from_deviation(dev, q, f.domain_size());
    let bound = spec.bound();
    let bound_holds = bound.compare_exact(&gamma_max);
    let homog_size = acc.homog_best.map_or(0, |(_, s)| s);
    let homog_measure = rational::ratio(homog_size as i64, f.domain_size() as i64);
    let ceiling_holds = bound.compare_exact(&(&homog_measure / rational::int(q as i64)));
    Ok(GipSweep {
        q: spec.q(),
        s: spec.s,
        k: spec.k,
        ci_count: en.count(),
        gamma_max,
        witness_index: idx,
        witness: en.ci(idx).base_lists(space),
        bound,
        bound_holds,
        dense_low_discrepancy: acc.dense,
        all_values_violations: acc.value_violations,
        homogeneous: acc.homogeneous,
        fiber_chain_violations: acc.chain_violations,
        homogeneous_max_size: homog_size,
        homogeneous_max_measure: homog_measure,
        homogeneous_max_index: acc.homog_best.map(|(i, _)| i),
        ceiling_holds,
    })
}
