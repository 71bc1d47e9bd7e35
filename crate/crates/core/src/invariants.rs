//! The torsion-growth invariants of a product of elliptic curves.
//!
//! `alpha` maximizes 2 * (weighted dimension) / (Mumford-Tate dimension)
//! over nonempty subsets of the isogeny-class factors. `m_invariant`
//! maximizes an exact fractional functional over ordered exponent cones and
//! must agree with `alpha` (both bound the true torsion exponent from the
//! two sides). `achieved_ratio` evaluates how close a concrete exponent
//! profile gets inside the exact group model.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::galois::{
    log_torsion_size, product_degree, DegreeReport, FactorKind, FactorModel, GaloisError,
    ProductModel, SubgroupShape,
};
use crate::lp::maximize_on_polytope;
use crate::modular::{AlgebraError, Modulus};
use crate::rational::{rat_to_f64, BigRational};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvariantError {
    #[error("variety spec has no classes")]
    EmptySpec,
    #[error("duplicate class label `{0}`")]
    DuplicateLabel(String),
    #[error("class `{0}` has multiplicity 0")]
    ZeroMultiplicity(String),
    #[error("subset of classes is empty")]
    EmptySubset,
    #[error("class index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("class index {0} repeated in subset")]
    DuplicateIndex(usize),
    #[error("{exponents} exponents exceed the exact-optimization cap of {max}")]
    DimensionTooLarge { exponents: usize, max: usize },
    #[error("grid bound must be at least 1")]
    BoundZero,
    #[error("exponent profile is identically zero")]
    ZeroProfile,
    #[error("exponent profile is not integral")]
    NonIntegralProfile,
    #[error("profile does not match the variety spec: {0}")]
    ProfileSpecMismatch(String),
    #[error(transparent)]
    Galois(#[from] GaloisError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Largest number of exponent variables the exact optimizers accept.
pub const MAX_EXPONENTS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ClassKind {
    Cm,
    NonCm,
}

/// One isogeny class in the declared decomposition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassSpec {
    pub label: String,
    pub kind: ClassKind,
    pub multiplicity: u32,
}

/// Declared isogeny decomposition: pairwise distinct classes with
/// multiplicities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VarietySpec {
    classes: Vec<ClassSpec>,
}

impl VarietySpec {
    pub fn new(classes: Vec<ClassSpec>) -> Result<Self, InvariantError> {
        if classes.is_empty() {
            return Err(InvariantError::EmptySpec);
        }
        let mut seen = BTreeSet::new();
        for c in &classes {
            if c.multiplicity == 0 {
                return Err(InvariantError::ZeroMultiplicity(c.label.clone()));
            }
            if !seen.insert(c.label.clone()) {
                return Err(InvariantError::DuplicateLabel(c.label.clone()));
            }
        }
        Ok(VarietySpec { classes })
    }

    pub fn classes(&self) -> &[ClassSpec] {
        &self.classes
    }

    fn of_kind(&self, kind: ClassKind) -> Vec<&ClassSpec> {
        self.classes.iter().filter(|c| c.kind == kind).collect()
    }
}

/// Mumford-Tate dimension of the sub-product indexed by `subset`:
/// 1 + 3 per non-CM class + 1 per CM class; multiplicities are irrelevant.
pub fn mt_dimension(spec: &VarietySpec, subset: &[usize]) -> Result<u64, InvariantError> {
    if subset.is_empty() {
        return Err(InvariantError::EmptySubset);
    }
    let mut seen = BTreeSet::new();
    let mut dim = 1u64;
    for &i in subset {
        let class = spec
            .classes
            .get(i)
            .ok_or(InvariantError::IndexOutOfRange(i))?;
        if !seen.insert(i) {
            return Err(InvariantError::DuplicateIndex(i));
        }
        dim += match class.kind {
            ClassKind::NonCm => 3,
            ClassKind::Cm => 1,
        };
    }
    Ok(dim)
}

/// A subset achieving alpha, with its exact value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubsetWitness {
    pub labels: Vec<String>,
    #[serde(serialize_with = "crate::rational::serde_exact::rational")]
    pub value: BigRational,
}

fn subset_value(spec: &VarietySpec, subset: &[usize]) -> BigRational {
    let mult: u64 = subset
        .iter()
        .map(|&i| spec.classes[i].multiplicity as u64)
        .sum();
    let dim = mt_dimension(spec, subset).expect("validated subset");
    BigRational::new(BigInt::from(2 * mult), BigInt::from(dim))
}

/// Witness ordering: larger value, then fewer classes, then
/// lexicographically smaller label list.
fn better_subset(value: &BigRational, labels: &[String], best: &Option<SubsetWitness>) -> bool {
    use std::cmp::Ordering;
    let Some(b) = best else { return true };
    match value.cmp(&b.value) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match labels.len().cmp(&b.labels.len()) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => labels < b.labels.as_slice(),
        },
    }
}

/// Exhaustive alpha: every nonempty subset of the classes.
pub fn alpha_exhaustive(spec: &VarietySpec) -> Result<SubsetWitness, InvariantError> {
    let k = spec.classes.len();
    let mut best: Option<SubsetWitness> = None;
    for mask in 1u64..(1u64 << k) {
        let subset: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
        let value = subset_value(spec, &subset);
        let mut labels: Vec<String> = subset
            .iter()
            .map(|&i| spec.classes[i].label.clone())
            .collect();
        labels.sort();
        if better_subset(&value, &labels, &best) {
            best = Some(SubsetWitness { labels, value });
        }
    }
    best.ok_or(InvariantError::EmptySpec)
}

/// Greedy alpha: for each pair of per-kind subset sizes, the optimum takes
/// the top-multiplicity classes of each kind, so scanning size profiles is
/// exact.
pub fn alpha_greedy(spec: &VarietySpec) -> Result<SubsetWitness, InvariantError> {
    let mut noncm: Vec<(u32, &str)> = spec
        .of_kind(ClassKind::NonCm)
        .iter()
        .map(|c| (c.multiplicity, c.label.as_str()))
        .collect();
    let mut cm: Vec<(u32, &str)> = spec
        .of_kind(ClassKind::Cm)
        .iter()
        .map(|c| (c.multiplicity, c.label.as_str()))
        .collect();
    // top multiplicity first; label ascending on ties for determinism
    noncm.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
    cm.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
    let mut best: Option<SubsetWitness> = None;
    for i in 0..=noncm.len() {
        for j in 0..=cm.len() {
            if i + j == 0 {
                continue;
            }
            let mult: u64 = noncm[..i]
                .iter()
                .chain(&cm[..j])
                .map(|&(u, _)| u as u64)
                .sum();
            let dim = 1 + 3 * i as u64 + j as u64;
            let value = BigRational::new(BigInt::from(2 * mult), BigInt::from(dim));
            let mut labels: Vec<String> = noncm[..i]
                .iter()
                .chain(&cm[..j])
                .map(|&(_, l)| l.to_string())
                .collect();
            labels.sort();
            if better_subset(&value, &labels, &best) {
                best = Some(SubsetWitness { labels, value });
            }
        }
    }
    best.ok_or(InvariantError::EmptySpec)
}

/// alpha(A): exhaustive up to 20 classes, greedy beyond (the greedy scan is
/// exact; exhaustive search remains the oracle of record where it runs).
pub fn alpha(spec: &VarietySpec) -> Result<SubsetWitness, InvariantError> {
    if spec.classes.len() <= 20 {
        alpha_exhaustive(spec)
    } else {
        alpha_greedy(spec)
    }
}

/// One class slot of an exponent profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProfileEntry {
    pub label: String,
    pub multiplicity: u32,
    #[serde(serialize_with = "crate::rational::serde_exact::rational")]
    pub lower: BigRational,
    #[serde(serialize_with = "crate::rational::serde_exact::rational")]
    pub upper: BigRational,
}

/// Exponent profile over the ordered cone: per-kind slots sorted by lower
/// exponent, lower <= upper within each slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentProfile {
    pub noncm: Vec<ProfileEntry>,
    pub cm: Vec<ProfileEntry>,
}

impl Serialize for ExponentProfile {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let strings = |v: Vec<BigRational>| v.iter().map(|r| r.to_string()).collect::<Vec<_>>();
        let mut st = serializer.serialize_struct("ExponentProfile", 5)?;
        st.serialize_field("c", &strings(self.c_values()))?;
        st.serialize_field("b", &strings(self.b_values()))?;
        st.serialize_field("beta", &self.beta().to_string())?;
        st.serialize_field("noncm", &self.noncm)?;
        st.serialize_field("cm", &self.cm)?;
        st.end()
    }
}

impl ExponentProfile {
    fn canonicalize(mut self) -> Self {
        fn key(e: &ProfileEntry) -> (BigRational, BigRational, String) {
            (e.lower.clone(), e.upper.clone(), e.label.clone())
        }
        self.noncm.sort_by_key(key);
        self.cm.sort_by_key(key);
        self
    }

    pub fn validate(&self) -> Result<(), InvariantError> {
        for block in [&self.noncm, &self.cm] {
            let mut prev: Option<&BigRational> = None;
            for e in block {
                if e.lower.is_negative() || e.upper < e.lower {
                    return Err(InvariantError::ProfileSpecMismatch(format!(
                        "entry {} violates 0 <= lower <= upper",
                        e.label
                    )));
                }
                if let Some(p) = prev {
                    if &e.lower < p {
                        return Err(InvariantError::ProfileSpecMismatch(
                            "lower exponents not sorted".into(),
                        ));
                    }
                }
                prev = Some(&e.lower);
            }
        }
        Ok(())
    }

    /// Flattened non-CM exponents: lowers in slot order, then uppers.
    pub fn c_values(&self) -> Vec<BigRational> {
        self.noncm
            .iter()
            .map(|e| e.lower.clone())
            .chain(self.noncm.iter().map(|e| e.upper.clone()))
            .collect()
    }

    /// Flattened CM exponents, same layout.
    pub fn b_values(&self) -> Vec<BigRational> {
        self.cm
            .iter()
            .map(|e| e.lower.clone())
            .chain(self.cm.iter().map(|e| e.upper.clone()))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.noncm
            .iter()
            .chain(&self.cm)
            .all(|e| e.lower.is_zero() && e.upper.is_zero())
    }

    pub fn is_integral(&self) -> bool {
        self.noncm
            .iter()
            .chain(&self.cm)
            .all(|e| e.lower.is_integer() && e.upper.is_integer())
    }

    fn top_lower(block: &[ProfileEntry]) -> Option<BigRational> {
        block.iter().map(|e| e.lower.clone()).max()
    }

    /// beta = min of the two top lower exponents; 0 when either side is
    /// absent.
    pub fn beta(&self) -> BigRational {
        match (Self::top_lower(&self.noncm), Self::top_lower(&self.cm)) {
            (Some(c), Some(b)) => c.min(b),
            _ => BigRational::zero(),
        }
    }

    /// Numerator of the fractional functional: the exact log torsion size.
    pub fn torsion_numerator(&self) -> BigRational {
        self.noncm
            .iter()
            .chain(&self.cm)
            .map(|e| {
                (&e.lower + &e.upper) * BigRational::from_integer(BigInt::from(e.multiplicity))
            })
            .sum()
    }

    /// Denominator: the exact degree lower bound
    /// c_top + sum(c_lo) + 2 sum(c_up) + sum(b_up) + b_top - beta.
    pub fn degree_denominator(&self) -> BigRational {
        let mut d = BigRational::zero();
        if !self.noncm.is_empty() {
            d += Self::top_lower(&self.noncm).unwrap();
            for e in &self.noncm {
                d += &e.lower;
                d += &e.upper + &e.upper;
            }
        }
        if !self.cm.is_empty() {
            d += Self::top_lower(&self.cm).unwrap();
            for e in &self.cm {
                d += &e.upper;
            }
        }
        d - self.beta()
    }

    /// Value of the functional, `None` on the excluded zero profile.
    pub fn ratio(&self) -> Option<BigRational> {
        let d = self.degree_denominator();
        if d.is_zero() {
            None
        } else {
            Some(self.torsion_numerator() / d)
        }
    }

    pub fn scaled(&self, factor: &BigRational) -> ExponentProfile {
        let map = |e: &ProfileEntry| ProfileEntry {
            label: e.label.clone(),
            multiplicity: e.multiplicity,
            lower: &e.lower * factor,
            upper: &e.upper * factor,
        };
        ExponentProfile {
            noncm: self.noncm.iter().map(map).collect(),
            cm: self.cm.iter().map(map).collect(),
        }
    }

    /// Smallest positive integer multiple clearing every denominator.
    pub fn cleared_to_integers(&self) -> ExponentProfile {
        let mut lcm = BigInt::one();
        for e in self.noncm.iter().chain(&self.cm) {
            lcm = num_integer::lcm(lcm.clone(), e.lower.denom().clone());
            lcm = num_integer::lcm(lcm.clone(), e.upper.denom().clone());
        }
        self.scaled(&BigRational::from_integer(lcm))
    }
}

type Arrangement = Vec<(u32, String)>;
type GridCandidate = (i64, i64, Vec<(i64, i64)>);
type LpCandidate = (BigRational, Vec<BigRational>, Arrangement, Arrangement);

/// Which branch of beta = min(c_top, b_top) the maximizer lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ActiveCase {
    /// No CM classes: beta = 0.
    NonCmOnly,
    /// No non-CM classes: beta = 0.
    CmOnly,
    /// Non-CM top lower is the minimum (beta = c_top).
    NonCmMin,
    /// CM top lower is the minimum (beta = b_top).
    CmMin,
    /// The maximizer has c_top = b_top: both regimes agree.
    Boundary,
}

/// Value and maximizer of the fractional functional.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RatioWitness {
    #[serde(serialize_with = "crate::rational::serde_exact::rational")]
    pub value: BigRational,
    pub profile: ExponentProfile,
    pub active_case: ActiveCase,
}

fn active_case_of(profile: &ExponentProfile) -> ActiveCase {
    let c = ExponentProfile::top_lower(&profile.noncm);
    let b = ExponentProfile::top_lower(&profile.cm);
    match (c, b) {
        (Some(_), None) => ActiveCase::NonCmOnly,
        (None, Some(_)) => ActiveCase::CmOnly,
        (Some(c), Some(b)) => {
            if c == b {
                ActiveCase::Boundary
            } else if c < b {
                ActiveCase::NonCmMin
            } else {
                ActiveCase::CmMin
            }
        }
        (None, None) => ActiveCase::Boundary,
    }
}

/// Distinct permutations of a class list, keyed by the multiplicity vector.
/// Which class carries which exponent pair matters, so the optimizer must
/// range over assignments, not just sorted profiles.
fn multiplicity_arrangements(classes: &[&ClassSpec]) -> Vec<Arrangement> {
    let mut base: Vec<(u32, String)> = classes
        .iter()
        .map(|c| (c.multiplicity, c.label.clone()))
        .collect();
    base.sort();
    let mut out: Vec<Vec<(u32, String)>> = Vec::new();
    let mut seen: BTreeSet<Vec<u32>> = BTreeSet::new();
    permute(&mut base, 0, &mut |arr| {
        let key: Vec<u32> = arr.iter().map(|(u, _)| *u).collect();
        if seen.insert(key) {
            out.push(arr.to_vec());
        }
    });
    out
}

fn permute<F: FnMut(&[(u32, String)])>(items: &mut Arrangement, from: usize, visit: &mut F) {
    if from == items.len() {
        visit(items);
        return;
    }
    for i in from..items.len() {
        items.swap(from, i);
        permute(items, from + 1, visit);
        items.swap(from, i);
    }
}

struct Regime {
    /// extra inequality rows
    extra: Vec<Vec<BigRational>>,
    /// D coefficients with the beta term substituted
    normalizer: Vec<BigRational>,
}

fn build_cone(n: usize, m: usize) -> Vec<Vec<BigRational>> {
    let d = 2 * (n + m);
    let mut rows = Vec::new();
    let unit = |i: usize, s: i64| {
        let mut row = vec![BigRational::zero(); d];
        row[i] = BigRational::from_integer(BigInt::from(s));
        row
    };
    let c_lo = |i: usize| i;
    let c_up = move |i: usize| n + i;
    let b_lo = move |i: usize| 2 * n + i;
    let b_up = move |i: usize| 2 * n + m + i;
    if n > 0 {
        rows.push(unit(c_lo(0), 1));
        for i in 1..n {
            let mut row = unit(c_lo(i), 1);
            row[c_lo(i - 1)] = BigRational::from_integer(BigInt::from(-1));
            rows.push(row);
        }
        for i in 0..n {
            let mut row = unit(c_up(i), 1);
            row[c_lo(i)] = BigRational::from_integer(BigInt::from(-1));
            rows.push(row);
        }
    }
    if m > 0 {
        rows.push(unit(b_lo(0), 1));
        for i in 1..m {
            let mut row = unit(b_lo(i), 1);
            row[b_lo(i - 1)] = BigRational::from_integer(BigInt::from(-1));
            rows.push(row);
        }
        for i in 0..m {
            let mut row = unit(b_up(i), 1);
            row[b_lo(i)] = BigRational::from_integer(BigInt::from(-1));
            rows.push(row);
        }
    }
    rows
}

fn regimes(n: usize, m: usize) -> Vec<Regime> {
    let d = 2 * (n + m);
    let one = || BigRational::one();
    let two = || BigRational::from_integer(BigInt::from(2));
    let c_lo = |i: usize| i;
    let c_up = |i: usize| n + i;
    let b_lo = |i: usize| 2 * n + i;
    let b_up = |i: usize| 2 * n + m + i;
    // shared D parts: sum(c_lo) + 2 sum(c_up) + sum(b_up)
    let mut shared = vec![BigRational::zero(); d];
    for i in 0..n {
        shared[c_lo(i)] += one();
        shared[c_up(i)] += two();
    }
    for i in 0..m {
        shared[b_up(i)] += one();
    }
    if n == 0 {
        // pure CM: D = sum(b_up) + b_top
        let mut norm = shared;
        norm[b_lo(m - 1)] += one();
        return vec![Regime {
            extra: vec![],
            normalizer: norm,
        }];
    }
    if m == 0 {
        // pure non-CM: D = c_top + sum(c_lo) + 2 sum(c_up)
        let mut norm = shared;
        norm[c_lo(n - 1)] += one();
        return vec![Regime {
            extra: vec![],
            normalizer: norm,
        }];
    }
    // mixed: split on beta = min(c_top, b_top)
    let mut le = vec![BigRational::zero(); d]; // b_top - c_top >= 0
    le[b_lo(m - 1)] = one();
    le[c_lo(n - 1)] = -one();
    let mut norm_a = shared.clone(); // beta = c_top cancels c_top
    norm_a[b_lo(m - 1)] += one();
    let mut ge = vec![BigRational::zero(); d]; // c_top - b_top >= 0
    ge[c_lo(n - 1)] = one();
    ge[b_lo(m - 1)] = -one();
    let mut norm_b = shared; // beta = b_top cancels b_top
    norm_b[c_lo(n - 1)] += one();
    vec![
        Regime {
            extra: vec![le],
            normalizer: norm_a,
        },
        Regime {
            extra: vec![ge],
            normalizer: norm_b,
        },
    ]
}

/// m(A): exact supremum of the fractional functional over the ordered
/// exponent cone, by exact LPs over the beta regimes and the multiplicity
/// assignments, with an achieving ray.
pub fn m_invariant(spec: &VarietySpec) -> Result<RatioWitness, InvariantError> {
    let noncm = spec.of_kind(ClassKind::NonCm);
    let cm = spec.of_kind(ClassKind::Cm);
    let (n, m) = (noncm.len(), cm.len());
    let exponents = 2 * (n + m);
    if exponents > MAX_EXPONENTS {
        return Err(InvariantError::DimensionTooLarge {
            exponents,
            max: MAX_EXPONENTS,
        });
    }
    let cone = build_cone(n, m);
    let mut best: Option<LpCandidate> = None;
    for arr_u in multiplicity_arrangements(&noncm) {
        for arr_v in multiplicity_arrangements(&cm) {
            let mut objective = vec![BigRational::zero(); exponents];
            for (i, (u, _)) in arr_u.iter().enumerate() {
                objective[i] = BigRational::from_integer(BigInt::from(*u));
                objective[n + i] = BigRational::from_integer(BigInt::from(*u));
            }
            for (j, (v, _)) in arr_v.iter().enumerate() {
                objective[2 * n + j] = BigRational::from_integer(BigInt::from(*v));
                objective[2 * n + m + j] = BigRational::from_integer(BigInt::from(*v));
            }
            for regime in regimes(n, m) {
                let mut ineqs = cone.clone();
                ineqs.extend(regime.extra.iter().cloned());
                let Some((value, point)) =
                    maximize_on_polytope(&ineqs, &regime.normalizer, &objective)
                else {
                    continue;
                };
                let better = match &best {
                    None => true,
                    Some((bv, bp, _, _)) => value > *bv || (value == *bv && point > *bp),
                };
                if better {
                    best = Some((value, point, arr_u.clone(), arr_v.clone()));
                }
            }
        }
    }
    let (value, point, arr_u, arr_v) = best.ok_or(InvariantError::EmptySpec)?;
    let entry = |(mult, label): &(u32, String), lo: &BigRational, up: &BigRational| ProfileEntry {
        label: label.clone(),
        multiplicity: *mult,
        lower: lo.clone(),
        upper: up.clone(),
    };
    let profile = ExponentProfile {
        noncm: arr_u
            .iter()
            .enumerate()
            .map(|(i, a)| entry(a, &point[i], &point[n + i]))
            .collect(),
        cm: arr_v
            .iter()
            .enumerate()
            .map(|(j, a)| entry(a, &point[2 * n + j], &point[2 * n + m + j]))
            .collect(),
    }
    .canonicalize();
    debug_assert_eq!(profile.ratio().as_ref(), Some(&value));
    let active_case = active_case_of(&profile);
    Ok(RatioWitness {
        value,
        profile,
        active_case,
    })
}

/// Grid oracle for `m_invariant`: exact maximum of the same functional over
/// integer profiles in [0, bound]^(2n+2m) with lower <= upper per class.
/// Sorting the lowers is a relabeling, so scanning unsorted pairs with the
/// multiplicities fixed to their classes covers the full cone.
pub fn m_invariant_grid(spec: &VarietySpec, bound: u32) -> Result<RatioWitness, InvariantError> {
    if bound == 0 {
        return Err(InvariantError::BoundZero);
    }
    let k = spec.classes.len();
    if 2 * k > MAX_EXPONENTS {
        return Err(InvariantError::DimensionTooLarge {
            exponents: 2 * k,
            max: MAX_EXPONENTS,
        });
    }
    // all (lower, upper) pairs with lower <= upper <= bound
    let pairs: Vec<(i64, i64)> = (0..=bound as i64)
        .flat_map(|lo| (lo..=bound as i64).map(move |up| (lo, up)))
        .collect();
    let mults: Vec<i64> = spec.classes.iter().map(|c| c.multiplicity as i64).collect();
    let kinds: Vec<ClassKind> = spec.classes.iter().map(|c| c.kind).collect();

    let mut odometer = vec![0usize; k];
    // best (numerator, denominator, per-class profile)
    let mut best: Option<GridCandidate> = None;
    loop {
        let assignment: Vec<(i64, i64)> = odometer.iter().map(|&i| pairs[i]).collect();
        let mut num = 0i64;
        let mut c_sum_lo = 0i64;
        let mut c_sum_up = 0i64;
        let mut b_sum_up = 0i64;
        let mut c_top = -1i64;
        let mut b_top = -1i64;
        for i in 0..k {
            let (lo, up) = assignment[i];
            num += (lo + up) * mults[i];
            match kinds[i] {
                ClassKind::NonCm => {
                    c_sum_lo += lo;
                    c_sum_up += up;
                    c_top = c_top.max(lo);
                }
                ClassKind::Cm => {
                    b_sum_up += up;
                    b_top = b_top.max(lo);
                }
            }
        }
        let beta = if c_top >= 0 && b_top >= 0 {
            c_top.min(b_top)
        } else {
            0
        };
        let mut den = 0i64;
        if c_top >= 0 {
            den += c_top + c_sum_lo + 2 * c_sum_up;
        }
        if b_top >= 0 {
            den += b_sum_up + b_top;
        }
        den -= beta;
        if den > 0 {
            let better = match &best {
                None => true,
                Some((bn, bd, bp)) => {
                    let lhs = num as i128 * *bd as i128;
                    let rhs = *bn as i128 * den as i128;
                    lhs > rhs || (lhs == rhs && flattened_gt(&assignment, bp, &kinds))
                }
            };
            if better {
                best = Some((num, den, assignment));
            }
        }
        // advance
        let mut pos = k;
        loop {
            if pos == 0 {
                let (num, den, assignment) = best.ok_or(InvariantError::ZeroProfile)?;
                let value = BigRational::new(BigInt::from(num), BigInt::from(den));
                let to_entry = |i: usize| ProfileEntry {
                    label: spec.classes[i].label.clone(),
                    multiplicity: spec.classes[i].multiplicity,
                    lower: BigRational::from_integer(BigInt::from(assignment[i].0)),
                    upper: BigRational::from_integer(BigInt::from(assignment[i].1)),
                };
                let profile = ExponentProfile {
                    noncm: (0..k)
                        .filter(|&i| kinds[i] == ClassKind::NonCm)
                        .map(to_entry)
                        .collect(),
                    cm: (0..k)
                        .filter(|&i| kinds[i] == ClassKind::Cm)
                        .map(to_entry)
                        .collect(),
                }
                .canonicalize();
                debug_assert_eq!(profile.ratio().as_ref(), Some(&value));
                let active_case = active_case_of(&profile);
                return Ok(RatioWitness {
                    value,
                    profile,
                    active_case,
                });
            }
            pos -= 1;
            odometer[pos] += 1;
            if odometer[pos] < pairs.len() {
                break;
            }
            odometer[pos] = 0;
        }
    }
}

/// Canonical-form lexicographic comparison of integer grid profiles, to make
/// the grid witness deterministic and biased toward interior rays.
fn flattened_gt(a: &[(i64, i64)], b: &[(i64, i64)], kinds: &[ClassKind]) -> bool {
    let canon = |p: &[(i64, i64)]| {
        let mut non: Vec<(i64, i64)> = p
            .iter()
            .zip(kinds)
            .filter(|(_, k)| **k == ClassKind::NonCm)
            .map(|(x, _)| *x)
            .collect();
        let mut cm: Vec<(i64, i64)> = p
            .iter()
            .zip(kinds)
            .filter(|(_, k)| **k == ClassKind::Cm)
            .map(|(x, _)| *x)
            .collect();
        non.sort();
        cm.sort();
        (non, cm)
    };
    canon(a) > canon(b)
}

/// Integral worst-case profile: the achieving ray of `m_invariant` with
/// denominators cleared, scaled by t.
pub fn worst_case_profile(spec: &VarietySpec, t: u32) -> Result<ExponentProfile, InvariantError> {
    let witness = m_invariant(spec)?;
    let ray = witness.profile.cleared_to_integers();
    Ok(ray.scaled(&BigRational::from_integer(BigInt::from(t.max(1)))))
}

/// Exact model evaluation of a profile.
#[derive(Debug, Clone, Serialize)]
pub struct AchievedRatio {
    /// log|H| as an exact integer rational.
    #[serde(serialize_with = "crate::rational::serde_exact::rational")]
    pub log_torsion: BigRational,
    /// log|H| / v_l(degree), exact; `None` when the degree has trivial
    /// l-part.
    #[serde(serialize_with = "crate::rational::serde_exact::rational_opt")]
    pub ell_part: Option<BigRational>,
    /// log|H| / log_l(degree) including the unit-part correction.
    pub corrected: f64,
    pub degree: DegreeReport,
}

/// log torsion size over log degree for an integral profile, in the exact
/// group model at level N = the largest exponent. CM classes use the
/// split-torus model.
pub fn achieved_ratio(
    spec: &VarietySpec,
    profile: &ExponentProfile,
    ell: u64,
) -> Result<AchievedRatio, InvariantError> {
    profile.validate()?;
    if profile.is_zero() {
        return Err(InvariantError::ZeroProfile);
    }
    if !profile.is_integral() {
        return Err(InvariantError::NonIntegralProfile);
    }
    check_profile_matches_spec(spec, profile)?;

    let as_u32 = |r: &BigRational| -> Result<u32, InvariantError> {
        r.to_integer()
            .to_u32()
            .ok_or(InvariantError::NonIntegralProfile)
    };
    let mut factors = Vec::new();
    let mut shapes = Vec::new();
    let mut mults = Vec::new();
    let mut level = 0u32;
    for (entries, kind) in [
        (&profile.noncm, FactorKind::NonCm),
        (&profile.cm, FactorKind::CmSplit),
    ] {
        for e in entries.iter() {
            let lo = as_u32(&e.lower)?;
            let up = as_u32(&e.upper)?;
            level = level.max(up);
            factors.push(
                FactorModel::new(kind, e.multiplicity, e.label.clone())
                    .map_err(InvariantError::Galois)?,
            );
            shapes.push(SubgroupShape::new(lo, up).map_err(InvariantError::Galois)?);
            mults.push(e.multiplicity);
        }
    }
    let modulus = Modulus::new(ell, level)?;
    let model = ProductModel::new(factors, modulus)?;
    let report = product_degree(&model, &shapes)?;
    let log_torsion = log_torsion_size(&shapes, &mults)?;
    let log_h = rat_to_f64(&log_torsion);
    let log_degree = report.log_ell_degree_f64(ell);
    let corrected = if log_degree > 0.0 {
        log_h / log_degree
    } else {
        f64::INFINITY
    };
    let ell_part = if report.ell_exponent > 0 {
        Some(&log_torsion / BigRational::from_integer(BigInt::from(report.ell_exponent)))
    } else {
        None
    };
    Ok(AchievedRatio {
        log_torsion,
        ell_part,
        corrected,
        degree: report,
    })
}

fn check_profile_matches_spec(
    spec: &VarietySpec,
    profile: &ExponentProfile,
) -> Result<(), InvariantError> {
    let mut want: BTreeSet<(String, bool, u32)> = spec
        .classes
        .iter()
        .map(|c| (c.label.clone(), c.kind == ClassKind::Cm, c.multiplicity))
        .collect();
    for (entries, is_cm) in [(&profile.noncm, false), (&profile.cm, true)] {
        for e in entries.iter() {
            if !want.remove(&(e.label.clone(), is_cm, e.multiplicity)) {
                return Err(InvariantError::ProfileSpecMismatch(format!(
                    "unexpected entry `{}`",
                    e.label
                )));
            }
        }
    }
    if let Some((label, _, _)) = want.into_iter().next() {
        return Err(InvariantError::ProfileSpecMismatch(format!(
            "class `{label}` missing from profile"
        )));
    }
    Ok(())
}

/// Convenience: spec with r CM and s non-CM classes, all multiplicity 1.
pub fn uniform_spec(cm: usize, noncm: usize) -> VarietySpec {
    let mut classes = Vec::new();
    for i in 0..cm {
        classes.push(ClassSpec {
            label: format!("cm{}", i + 1),
            kind: ClassKind::Cm,
            multiplicity: 1,
        });
    }
    for i in 0..noncm {
        classes.push(ClassSpec {
            label: format!("nc{}", i + 1),
            kind: ClassKind::NonCm,
            multiplicity: 1,
        });
    }
    VarietySpec::new(classes).expect("nonempty")
}
