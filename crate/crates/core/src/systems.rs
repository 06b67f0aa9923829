//! Expanding interval maps described by their inverse branches.
//!
//! Every branch is defined on the whole hull (full-branch systems), so the
//! depth-`n` preimages of a point are indexed by words of `n` letters. Letters
//! are 1-based. For a word `w = (i₁, …, iₙ)` the preimage point is
//! `g_w(x) = g_{i₁} ∘ … ∘ g_{iₙ}(x)`, so the first letter is the outermost
//! branch and the map `T` acts by dropping it.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math::{abs, ceil, cos, hurwitz_zeta, sin};

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

/// Closed interval `[lo, hi]`, the hull of the state space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    /// Lower end.
    pub lo: f64,
    /// Upper end.
    pub hi: f64,
}

impl Interval {
    /// The unit interval.
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    /// Whether `x` lies in the interval.
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Midpoint.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Length.
    pub fn diameter(&self) -> f64 {
        self.hi - self.lo
    }

    /// `count` equispaced points including both ends (`count ≥ 2`), or the
    /// midpoint when `count == 1`.
    pub fn probe(&self, count: usize) -> Vec<f64> {
        match count {
            0 => Vec::new(),
            1 => vec![self.midpoint()],
            _ => {
                let step = self.diameter() / (count - 1) as f64;
                (0..count)
                    .map(|k| {
                        if k + 1 == count {
                            self.hi
                        } else {
                            self.lo + k as f64 * step
                        }
                    })
                    .collect()
            }
        }
    }

    pub(crate) fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::PointOutsideHull {
                x,
                lo: self.lo,
                hi: self.hi,
            })
        }
    }
}

/// Value of an inverse branch together with its signed derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoint {
    /// `g(x)`.
    pub y: f64,
    /// `g'(x)`.
    pub dy: f64,
}

/// A single inverse branch `g_i` of the map.
#[derive(Debug, Clone, PartialEq)]
pub enum Branch {
    /// `g(x) = slope·x + offset`.
    Affine {
        /// Slope (nonzero, absolute value below 1).
        slope: f64,
        /// Offset.
        offset: f64,
    },
    /// Solution `y` of `2y + ε·sin(2πy) = x + shift`.
    PerturbedDoubling {
        /// Perturbation size.
        epsilon: f64,
        /// 0 for the left branch, 1 for the right one.
        shift: f64,
    },
    /// `g(x) = 1/(n + x)`, the `n`-th continued-fraction branch.
    Gauss {
        /// Partial quotient, at least 1.
        n: u64,
    },
    /// `g_{b₁} ∘ … ∘ g_{bₘ}`, a branch of an iterate of the map.
    Composite(Vec<Branch>),
}

impl Branch {
    /// Evaluate the branch and its derivative at `x`.
    pub fn eval(&self, x: f64) -> BranchPoint {
        match *self {
            Branch::Affine { slope, offset } => BranchPoint {
                y: slope * x + offset,
                dy: slope,
            },
            Branch::PerturbedDoubling { epsilon, shift } => {
                let y = solve_perturbed(epsilon, x + shift);
                BranchPoint {
                    y,
                    dy: 1.0 / (2.0 + TWO_PI * epsilon * cos(TWO_PI * y)),
                }
            }
            Branch::Gauss { n } => {
                let y = 1.0 / (n as f64 + x);
                BranchPoint { y, dy: -y * y }
            }
            Branch::Composite(ref parts) => {
                let mut z = x;
                let mut dz = 1.0;
                for part in parts.iter().rev() {
                    let p = part.eval(z);
                    z = p.y;
                    dz *= p.dy;
                }
                BranchPoint { y: z, dy: dz }
            }
        }
    }

    /// `g(x)`.
    pub fn map(&self, x: f64) -> f64 {
        self.eval(x).y
    }

    /// Image of the hull under the branch.
    pub fn image(&self, hull: Interval) -> Interval {
        let a = self.map(hull.lo);
        let b = self.map(hull.hi);
        Interval {
            lo: a.min(b),
            hi: a.max(b),
        }
    }
}

/// Newton's method with a bisection safeguard for `2y + ε sin(2πy) = target`.
fn solve_perturbed(epsilon: f64, target: f64) -> f64 {
    let e = abs(epsilon);
    let mut lo = ((target - e) * 0.5).max(0.0);
    let mut hi = ((target + e) * 0.5).min(1.0);
    let residual = |y: f64| 2.0 * y + epsilon * sin(TWO_PI * y) - target;
    let mut y = (0.5 * target).clamp(lo, hi);
    for _ in 0..100 {
        let r = residual(y);
        if r == 0.0 {
            return y;
        }
        if r > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let slope = 2.0 + TWO_PI * epsilon * cos(TWO_PI * y);
        let mut next = y - r / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if abs(next - y) <= 4.0 * f64::EPSILON * abs(y).max(f64::MIN_POSITIVE) || lo == hi {
            return next;
        }
        y = next;
    }
    y
}

/// The inverse branches of a system.
#[derive(Debug, Clone, PartialEq)]
pub enum BranchFamily {
    /// Finitely many branches, letter `i` is entry `i − 1`.
    Finite(Vec<Branch>),
    /// The continued-fraction family `g_n(x) = 1/(n + x)`, `n ≥ 1`.
    Gauss,
}

/// Number of branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchCount {
    /// Finitely many.
    Finite(usize),
    /// Countably infinitely many.
    Countable,
}

/// Upper bound law for the weight of all branches beyond index `M`:
/// `Σ_{i > M} sup exp φ(g_i) ≤ scale · ζ(exponent, M + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailLaw {
    /// Power-law exponent, strictly greater than 1.
    pub exponent: f64,
    /// Multiplicative constant.
    pub scale: f64,
}

impl TailLaw {
    /// Bound on the tail beyond branch `m`.
    pub fn bound(&self, m: u64) -> f64 {
        self.scale * hurwitz_zeta(self.exponent, m as f64 + 1.0)
    }

    /// Smallest `M` whose tail bound is below `epsilon`.
    pub fn cutoff(&self, epsilon: f64) -> Result<u64> {
        const LIMIT: u64 = 1 << 40;
        if self.bound(0) < epsilon {
            return Ok(0);
        }
        let mut hi = 1u64;
        while self.bound(hi) >= epsilon {
            hi *= 2;
            if hi > LIMIT {
                return Err(Error::BudgetExceeded {
                    what: "branch cutoff for the requested tail accuracy",
                    requested: hi as u128,
                    cap: LIMIT as u128,
                });
            }
        }
        let mut lo = hi / 2;
        // bound(lo) ≥ ε > bound(hi)
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.bound(mid) < epsilon {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// How countable branch families are cut off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Words whose tail weight bound falls below this are dropped (or, where
    /// an analytic tail is available, summed in closed form).
    pub epsilon_tail: f64,
    /// Tail law used for enumerations that have no potential at hand.
    pub tail_law: Option<TailLaw>,
}

impl TruncationPolicy {
    /// Policy with the given tail accuracy and no enumeration law.
    pub fn new(epsilon_tail: f64) -> Self {
        TruncationPolicy {
            epsilon_tail,
            tail_law: None,
        }
    }

    /// Attach a tail law for preimage enumeration.
    pub fn with_law(mut self, law: TailLaw) -> Self {
        self.tail_law = Some(law);
        self
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy::new(1e-10)
    }
}

/// A finite sequence of 1-based branch letters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CylinderWord(pub Vec<u32>);

impl CylinderWord {
    /// The empty word.
    pub fn empty() -> Self {
        CylinderWord(Vec::new())
    }

    /// Number of letters.
    pub fn depth(&self) -> usize {
        self.0.len()
    }

    /// Letters in order.
    pub fn letters(&self) -> &[u32] {
        &self.0
    }

    /// The word with its first letter removed (the action of `T`).
    pub fn shift(&self) -> CylinderWord {
        CylinderWord(self.0.get(1..).unwrap_or(&[]).to_vec())
    }

    /// `self · other`.
    pub fn concat(&self, other: &CylinderWord) -> CylinderWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        CylinderWord(v)
    }

    /// First `k` letters.
    pub fn prefix(&self, k: usize) -> CylinderWord {
        CylinderWord(self.0[..k.min(self.0.len())].to_vec())
    }
}

impl From<Vec<u32>> for CylinderWord {
    fn from(v: Vec<u32>) -> Self {
        CylinderWord(v)
    }
}

impl From<&[u32]> for CylinderWord {
    fn from(v: &[u32]) -> Self {
        CylinderWord(v.to_vec())
    }
}

impl fmt::Display for CylinderWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, letter) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("-")?;
            }
            write!(f, "{letter}")?;
        }
        Ok(())
    }
}

/// An expanding map of an interval, given by its inverse branches.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    /// Catalog identifier.
    pub name: String,
    /// Parameters the system was built from.
    pub params: Vec<f64>,
    /// Hull of the state space.
    pub hull: Interval,
    /// Inverse branches.
    pub family: BranchFamily,
    /// Uniform lower bound `C` on `|T'|`.
    pub expansion_lower: f64,
    /// Whether every branch is affine (zero distortion).
    pub affine: bool,
}

/// Catalog names accepted by [`builtin_system`].
pub const CATALOG: [&str; 5] = [
    "doubling",
    "linear_cantor",
    "golden_cantor",
    "perturbed_doubling",
    "gauss",
];

/// Build a catalog system.
///
/// * `doubling`: `x/2`, `(x+1)/2`;
/// * `linear_cantor` with params `[N, r]`: `N` affine branches of slope `1/r`
///   with images spread evenly from 0 to 1;
/// * `golden_cantor`: `x/2`, `3/4 + x/4`;
/// * `perturbed_doubling` with params `[ε]`: inverse branches of
///   `x ↦ 2x + ε sin(2πx) mod 1`;
/// * `gauss`: `1/(n + x)` for `n ≥ 1`.
pub fn builtin_system(name: &str, params: &[f64]) -> Result<SystemSpec> {
    let arity = |expected: usize| -> Result<()> {
        if params.len() == expected {
            Ok(())
        } else {
            Err(Error::param(
                name,
                format!("expected {expected} parameter(s), got {}", params.len()),
            ))
        }
    };
    let affine = |slope: f64, offset: f64| Branch::Affine { slope, offset };
    let build = |family, expansion_lower, affine| SystemSpec {
        name: name.to_string(),
        params: params.to_vec(),
        hull: Interval::UNIT,
        family,
        expansion_lower,
        affine,
    };
    match name {
        "doubling" => {
            arity(0)?;
            Ok(build(
                BranchFamily::Finite(vec![affine(0.5, 0.0), affine(0.5, 0.5)]),
                2.0,
                true,
            ))
        }
        "linear_cantor" => {
            arity(2)?;
            let (count, ratio) = (params[0], params[1]);
            if !(count >= 1.0 && crate::math::floor(count) == count && count <= 4096.0) {
                return Err(Error::param(
                    "N",
                    "must be a positive integer (at most 4096)",
                ));
            }
            if !(ratio > 1.0 && ratio.is_finite()) {
                return Err(Error::param("r", "must exceed 1 for expansion"));
            }
            if count / ratio > 1.0 + 1e-15 {
                return Err(Error::param(
                    "N",
                    "N/r must not exceed 1 for disjoint images",
                ));
            }
            let n = count as usize;
            let slope = 1.0 / ratio;
            let branches = (0..n)
                .map(|k| {
                    let offset = if n == 1 {
                        0.0
                    } else {
                        k as f64 * (1.0 - slope) / (n - 1) as f64
                    };
                    affine(slope, offset)
                })
                .collect();
            Ok(build(BranchFamily::Finite(branches), ratio, true))
        }
        "golden_cantor" => {
            arity(0)?;
            Ok(build(
                BranchFamily::Finite(vec![affine(0.5, 0.0), affine(0.25, 0.75)]),
                2.0,
                true,
            ))
        }
        "perturbed_doubling" => {
            arity(1)?;
            let epsilon = params[0];
            let expansion = 2.0 - TWO_PI * abs(epsilon);
            if !(expansion > 1.0) {
                return Err(Error::param(
                    "epsilon",
                    "2 − 2π|ε| must exceed 1 for the map to stay expanding",
                ));
            }
            let branches = vec![
                Branch::PerturbedDoubling {
                    epsilon,
                    shift: 0.0,
                },
                Branch::PerturbedDoubling {
                    epsilon,
                    shift: 1.0,
                },
            ];
            Ok(build(
                BranchFamily::Finite(branches),
                expansion,
                epsilon == 0.0,
            ))
        }
        "gauss" => {
            arity(0)?;
            Ok(build(BranchFamily::Gauss, 1.0, false))
        }
        other => Err(Error::UnknownSystem(other.to_string())),
    }
}

impl SystemSpec {
    /// Number of branches.
    pub fn branch_count(&self) -> BranchCount {
        match &self.family {
            BranchFamily::Finite(b) => BranchCount::Finite(b.len()),
            BranchFamily::Gauss => BranchCount::Countable,
        }
    }

    /// Number of branches for finite systems.
    pub fn finite_count(&self) -> Option<usize> {
        match self.branch_count() {
            BranchCount::Finite(n) => Some(n),
            BranchCount::Countable => None,
        }
    }

    /// Whether the family is countably infinite.
    pub fn is_countable(&self) -> bool {
        matches!(self.family, BranchFamily::Gauss)
    }

    /// Whether `letter` names a branch.
    pub fn is_valid_letter(&self, letter: u32) -> bool {
        match &self.family {
            BranchFamily::Finite(b) => letter >= 1 && (letter as usize) <= b.len(),
            BranchFamily::Gauss => letter >= 1,
        }
    }

    /// The inverse branch with the given letter.
    pub fn branch(&self, letter: u32) -> Result<Branch> {
        if !self.is_valid_letter(letter) {
            return Err(Error::InvalidLetter(letter));
        }
        Ok(match &self.family {
            BranchFamily::Finite(b) => b[letter as usize - 1].clone(),
            BranchFamily::Gauss => Branch::Gauss { n: letter as u64 },
        })
    }

    /// Evaluate branch `letter` at `x` without cloning it. The letter must be valid.
    #[inline]
    pub fn point(&self, letter: u32, x: f64) -> BranchPoint {
        match &self.family {
            BranchFamily::Finite(b) => b[letter as usize - 1].eval(x),
            BranchFamily::Gauss => {
                let y = 1.0 / (letter as f64 + x);
                BranchPoint { y, dy: -y * y }
            }
        }
    }

    /// Check every letter of a word.
    pub fn check_word(&self, word: &CylinderWord) -> Result<()> {
        match word.0.iter().find(|&&l| !self.is_valid_letter(l)) {
            Some(&bad) => Err(Error::InvalidLetter(bad)),
            None => Ok(()),
        }
    }

    /// `g_w(x)`.
    pub fn word_point(&self, word: &[u32], x: f64) -> f64 {
        word.iter().rev().fold(x, |z, &l| self.point(l, z).y)
    }

    /// Build the `m`-fold iterate: its branches are the words of length `m`
    /// in lexicographic order.
    pub fn iterate(&self, m: usize, cap: usize) -> Result<SystemSpec> {
        if m == 0 {
            return Err(Error::param("m", "iterate order must be at least 1"));
        }
        let n = self.finite_count().ok_or_else(|| {
            Error::Unsupported("iterates of countable systems are not enumerable".into())
        })?;
        let total = (n as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
        if total > cap as u128 {
            return Err(Error::BudgetExceeded {
                what: "branches of the iterated system",
                requested: total,
                cap: cap as u128,
            });
        }
        let BranchFamily::Finite(base) = &self.family else {
            unreachable!()
        };
        let words = all_words(n as u32, m);
        let branches = words
            .into_iter()
            .map(|w| Branch::Composite(w.iter().map(|&l| base[l as usize - 1].clone()).collect()))
            .collect();
        let mut expansion = 1.0;
        for _ in 0..m {
            expansion *= self.expansion_lower;
        }
        Ok(SystemSpec {
            name: format!("{}^{}", self.name, m),
            params: self.params.clone(),
            hull: self.hull,
            family: BranchFamily::Finite(branches),
            expansion_lower: expansion,
            affine: self.affine,
        })
    }
}

/// All words of length `depth` over `1..=letters`, lexicographically.
pub fn all_words(letters: u32, depth: usize) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(out.len() * letters as usize);
        for w in &out {
            for l in 1..=letters {
                let mut v = w.clone();
                v.push(l);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Upper limit on enumerated preimages.
pub const PREIMAGE_CAP: usize = 1 << 24;

/// All depth-`n` preimages of `x` in lexicographic word order.
///
/// Countable families keep letters up to the cutoff at which the tail law in
/// `trunc` drops below `epsilon_tail`.
pub fn preimages(
    sys: &SystemSpec,
    x: f64,
    n: usize,
    trunc: &TruncationPolicy,
) -> Result<Vec<(CylinderWord, f64)>> {
    sys.hull.check(x)?;
    let letters: u64 = match sys.branch_count() {
        BranchCount::Finite(k) => k as u64,
        BranchCount::Countable => {
            let law = trunc.tail_law.ok_or_else(|| {
                Error::TailBoundUnavailable(format!(
                    "preimages of `{}` need a tail law in the truncation policy",
                    sys.name
                ))
            })?;
            law.cutoff(trunc.epsilon_tail)?.max(1)
        }
    };
    let total = (letters as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > PREIMAGE_CAP as u128 {
        return Err(Error::BudgetExceeded {
            what: "preimage enumeration",
            requested: total,
            cap: PREIMAGE_CAP as u128,
        });
    }
    // Level k holds suffix words of length k with their points; prefixing a
    // letter in the outer loop keeps the listing lexicographic.
    let mut level: Vec<(Vec<u32>, f64)> = vec![(Vec::new(), x)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * letters as usize);
        for letter in 1..=letters as u32 {
            for (suffix, z) in &level {
                let mut w = Vec::with_capacity(suffix.len() + 1);
                w.push(letter);
                w.extend_from_slice(suffix);
                next.push((w, sys.point(letter, *z).y));
            }
        }
        level = next;
    }
    Ok(level
        .into_iter()
        .map(|(w, z)| (CylinderWord(w), z))
        .collect())
}

/// Absolute derivative of `g_w` at `x`, i.e. `1 / (Tⁿ)'(g_w(x))`.
pub(crate) fn word_contraction(sys: &SystemSpec, word: &[u32], x: f64) -> f64 {
    let mut z = x;
    let mut d = 1.0;
    for &l in word.iter().rev() {
        let p = sys.point(l, z);
        d *= abs(p.dy);
        z = p.y;
    }
    d
}

/// `(Tⁿ)'` at the preimage point `g_w(x)` via the chain rule.
pub fn derivative(sys: &SystemSpec, word: &CylinderWord, x: f64) -> Result<f64> {
    sys.check_word(word)?;
    sys.hull.check(x)?;
    Ok(1.0 / word_contraction(sys, &word.0, x))
}

/// Largest ratio of `(Tⁿ)'(g_w(x)) / (Tⁿ)'(g_w(y))` over probe pairs.
pub fn distortion_constant(sys: &SystemSpec, word: &CylinderWord, probe: &[f64]) -> Result<f64> {
    sys.check_word(word)?;
    if probe.is_empty() {
        return Err(Error::param("probe", "must be nonempty"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &x in probe {
        sys.hull.check(x)?;
        let d = 1.0 / word_contraction(sys, &word.0, x);
        lo = lo.min(d);
        hi = hi.max(d);
    }
    Ok(hi / lo)
}

/// Smallest explicit branch count for which every further branch point of
/// the Gauss family falls inside the first cell of a grid with spacing `step`.
pub(crate) fn gauss_explicit_branches(step: f64) -> u64 {
    (ceil(1.0 / step) as u64).max(64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(v: &[u32]) -> CylinderWord {
        CylinderWord(v.to_vec())
    }

    #[test]
    fn doubling_branches() {
        let s = builtin_system("doubling", &[]).unwrap();
        assert_eq!(s.branch_count(), BranchCount::Finite(2));
        assert_eq!(s.expansion_lower, 2.0);
        assert_eq!(s.point(1, 0.4).y, 0.2);
        assert_eq!(s.point(2, 0.4).y, 0.7);
    }

    #[test]
    fn middle_thirds_branches() {
        let s = builtin_system("linear_cantor", &[2.0, 3.0]).unwrap();
        assert_eq!(s.expansion_lower, 3.0);
        assert!((s.point(1, 0.9).y - 0.3).abs() < 1e-16);
        assert!((s.point(2, 0.0).y - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.point(2, 1.0).y - 1.0).abs() < 1e-16);
    }

    #[test]
    fn gauss_branch_values() {
        let s = builtin_system("gauss", &[]).unwrap();
        let p = s.point(5, 0.5);
        assert!((p.y - 1.0 / 5.5).abs() < 1e-16);
        assert!((p.dy.abs() - 1.0 / 30.25).abs() < 1e-16);
    }

    #[test]
    fn catalog_rejects_bad_parameters() {
        assert!(matches!(
            builtin_system("tent", &[]),
            Err(Error::UnknownSystem(_))
        ));
        assert!(builtin_system("perturbed_doubling", &[0.2]).is_err());
        assert!(builtin_system("linear_cantor", &[2.0, 1.0]).is_err());
        assert!(builtin_system("linear_cantor", &[4.0, 3.0]).is_err());
        assert!(builtin_system("linear_cantor", &[2.0]).is_err());
        assert!(builtin_system("perturbed_doubling", &[0.15]).is_ok());
    }

    #[test]
    fn perturbed_inverse_solves_forward_map() {
        let s = builtin_system("perturbed_doubling", &[0.05]).unwrap();
        for k in 0..=40 {
            let x = k as f64 / 40.0;
            for letter in 1..=2u32 {
                let p = s.point(letter, x);
                let forward = 2.0 * p.y + 0.05 * sin(TWO_PI * p.y);
                assert!((forward - (x + (letter - 1) as f64)).abs() < 1e-14);
                // derivative against a central difference
                let h = 1e-6;
                let lo = (x - h).max(0.0);
                let hi = (x + h).min(1.0);
                let fd = (s.point(letter, hi).y - s.point(letter, lo).y) / (hi - lo);
                assert!((fd - p.dy).abs() < 1e-8);
            }
        }
        assert_eq!(s.point(1, 0.0).y, 0.0);
        assert!((s.point(2, 1.0).y - 1.0).abs() < 1e-15);
    }

    #[test]
    fn preimages_of_doubling() {
        let s = builtin_system("doubling", &[]).unwrap();
        let pre = preimages(&s, 0.0, 2, &TruncationPolicy::default()).unwrap();
        let words: Vec<_> = pre.iter().map(|(w, _)| w.0.clone()).collect();
        assert_eq!(words, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
        let pts: Vec<_> = pre.iter().map(|p| p.1).collect();
        // g_{12}(0) = g_1(g_2(0)) = 0.25.
        assert_eq!(pts, vec![0.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn preimages_of_cantor() {
        let s = builtin_system("linear_cantor", &[2.0, 3.0]).unwrap();
        let pre = preimages(&s, 1.0, 1, &TruncationPolicy::default()).unwrap();
        assert!((pre[0].1 - 1.0 / 3.0).abs() < 1e-16);
        assert!((pre[1].1 - 1.0).abs() < 1e-16);
    }

    #[test]
    fn gauss_preimages_need_and_follow_tail_law() {
        let s = builtin_system("gauss", &[]).unwrap();
        assert!(matches!(
            preimages(&s, 0.5, 1, &TruncationPolicy::new(1e-3)),
            Err(Error::TailBoundUnavailable(_))
        ));
        let law = TailLaw {
            exponent: 2.0,
            scale: 1.0,
        };
        let trunc = TruncationPolicy::new(1e-3).with_law(law);
        let pre = preimages(&s, 0.5, 1, &trunc).unwrap();
        let m = pre.len() as u64;
        // Oracle: Σ_{i>M} i^{-2} by partial sums, the cutoff is the first M below 1e-3.
        let tail = |m: u64| -> f64 {
            let mut acc = 0.0;
            for i in (m + 1..m + 2_000_000).rev() {
                acc += 1.0 / (i as f64 * i as f64);
            }
            acc + 1.0 / (m as f64 + 2_000_000.0)
        };
        assert!(tail(m) < 1e-3 && tail(m - 1) >= 1e-3);
        for (k, (w, y)) in pre.iter().enumerate() {
            assert_eq!(w.0, vec![k as u32 + 1]);
            assert!((y - 1.0 / (k as f64 + 1.5)).abs() < 1e-16);
        }
    }

    #[test]
    fn derivative_examples() {
        let d = builtin_system("doubling", &[]).unwrap();
        assert_eq!(derivative(&d, &word(&[1, 2, 1]), 0.3).unwrap(), 8.0);
        let c = builtin_system("linear_cantor", &[2.0, 3.0]).unwrap();
        assert!((derivative(&c, &word(&[2, 2]), 0.7).unwrap() - 9.0).abs() < 1e-13);
        let g = builtin_system("gauss", &[]).unwrap();
        assert!((derivative(&g, &word(&[1]), 0.5).unwrap() - 2.25).abs() < 1e-14);
        assert!(derivative(&d, &word(&[3]), 0.5).is_err());
        assert!(derivative(&d, &word(&[1]), 1.5).is_err());
    }

    #[test]
    fn distortion_examples() {
        let c = builtin_system("linear_cantor", &[2.0, 3.0]).unwrap();
        let probe = c.hull.probe(33);
        assert_eq!(
            distortion_constant(&c, &word(&[1, 2, 2]), &probe).unwrap(),
            1.0
        );
        let p = builtin_system("perturbed_doubling", &[0.05]).unwrap();
        let m = distortion_constant(&p, &word(&[1]), &probe).unwrap();
        let bound = (2.0 + 0.1 * core::f64::consts::PI) / (2.0 - 0.1 * core::f64::consts::PI);
        assert!(m > 1.0 && m <= bound + 1e-12);
        // A finer probe can only find a larger ratio.
        let fine = distortion_constant(&p, &word(&[1]), &p.hull.probe(1025)).unwrap();
        assert!(fine >= m - 1e-15 && fine <= bound + 1e-12);
    }

    #[test]
    fn iterate_composes_branches() {
        let c = builtin_system("linear_cantor", &[2.0, 3.0]).unwrap();
        let c2 = c.iterate(2, 64).unwrap();
        assert_eq!(c2.finite_count(), Some(4));
        assert_eq!(c2.expansion_lower, 9.0);
        // branch 2 of the iterate is the word (1,2): x ↦ ((x+2)/3)/3
        assert!((c2.point(2, 0.0).y - 2.0 / 9.0).abs() < 1e-16);
        assert!(builtin_system("gauss", &[])
            .unwrap()
            .iterate(2, 64)
            .is_err());
        assert!(c.iterate(20, 64).is_err());
    }

    #[test]
    fn word_display() {
        assert_eq!(word(&[1, 2, 2, 1]).to_string(), "1-2-2-1");
        assert_eq!(word(&[]).to_string(), "");
        assert_eq!(word(&[3, 1]).shift(), word(&[1]));
    }
}
