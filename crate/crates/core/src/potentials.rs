//! Potentials `φ`, their Birkhoff sums, summability and regularity data.
//!
//! A potential is always evaluated through a branch: `evaluate(i, x)` is
//! `φ(g_i(x))`, which lets the geometric family use the exact branch
//! derivative instead of differentiating the forward map.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::math::{abs, cos, exp, ln, pairwise_sum, powf};
use crate::systems::{BranchFamily, BranchPoint, CylinderWord, SystemSpec, TailLaw};

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

/// Built-in potentials given by a closed formula `φ(y)` on the hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinPotential {
    /// `φ(y) = cos(2πy)`.
    Cos2Pi,
    /// `φ(y) = y`.
    Identity,
}

impl BuiltinPotential {
    /// Look up a builtin by name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "cos2pi" => Ok(BuiltinPotential::Cos2Pi),
            "identity" => Ok(BuiltinPotential::Identity),
            other => Err(Error::param(
                "potential.name",
                format!("unknown builtin potential `{other}` (expected cos2pi or identity)"),
            )),
        }
    }

    /// Catalog name.
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinPotential::Cos2Pi => "cos2pi",
            BuiltinPotential::Identity => "identity",
        }
    }

    fn value(&self, y: f64) -> f64 {
        match self {
            BuiltinPotential::Cos2Pi => cos(TWO_PI * y),
            BuiltinPotential::Identity => y,
        }
    }

    /// Hölder data shipped with the catalog entry.
    pub fn holder(&self) -> Holder {
        match self {
            BuiltinPotential::Cos2Pi => Holder {
                constant: TWO_PI,
                exponent: 1.0,
            },
            BuiltinPotential::Identity => Holder {
                constant: 1.0,
                exponent: 1.0,
            },
        }
    }
}

/// Hölder data `|φ(x) − φ(y)| ≤ L·|x − y|^σ` on each branch image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Holder {
    /// `L ≥ 0`.
    pub constant: f64,
    /// `σ ∈ (0, 1]`.
    pub exponent: f64,
}

/// The normalized potential `ψ = φ − log λ + log h − log h∘T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPotential {
    /// The potential `φ` being normalized.
    pub base: Potential,
    /// Leading eigenvalue `λ` of `L_φ`.
    pub lambda: f64,
    /// Positive eigenfunction `h`.
    pub density: GridFunction,
}

/// What a potential is.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `φ_t = −t·log |T'|`.
    Geometric {
        /// Exponent `t ≥ 0`.
        t: f64,
    },
    /// A constant value on each branch image.
    PerBranchConstant(Vec<f64>),
    /// A closed-form function of the point.
    Builtin(BuiltinPotential),
    /// A normalized potential derived from an eigen-triple.
    Normalized(Box<NormalizedPotential>),
}

/// A potential `φ` on branch domains.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    /// The defining data.
    pub kind: PotentialKind,
}

impl Potential {
    /// `φ_t = −t·log |T'|`.
    pub fn geometric(t: f64) -> Self {
        Potential {
            kind: PotentialKind::Geometric { t },
        }
    }

    /// Constant `values[i−1]` on the image of branch `i`.
    pub fn per_branch_constant(values: Vec<f64>) -> Self {
        Potential {
            kind: PotentialKind::PerBranchConstant(values),
        }
    }

    /// A catalog potential.
    pub fn builtin(b: BuiltinPotential) -> Self {
        Potential {
            kind: PotentialKind::Builtin(b),
        }
    }

    /// `ψ = φ − log λ + log h − log h∘T`.
    pub fn normalized(base: Potential, lambda: f64, density: GridFunction) -> Self {
        Potential {
            kind: PotentialKind::Normalized(Box::new(NormalizedPotential {
                base,
                lambda,
                density,
            })),
        }
    }

    /// The geometric exponent, if this is a geometric potential.
    pub fn geometric_t(&self) -> Option<f64> {
        match self.kind {
            PotentialKind::Geometric { t } => Some(t),
            _ => None,
        }
    }

    /// Reject combinations that are not defined.
    pub fn validate(&self, sys: &SystemSpec) -> Result<()> {
        match &self.kind {
            PotentialKind::Geometric { t } => {
                if !(t.is_finite() && *t >= 0.0) {
                    return Err(Error::param(
                        "potential.t",
                        "must be finite and nonnegative",
                    ));
                }
            }
            PotentialKind::PerBranchConstant(values) => match sys.finite_count() {
                Some(n) if n == values.len() => {
                    if values.iter().any(|v| !v.is_finite()) {
                        return Err(Error::param("potential.values", "must be finite"));
                    }
                }
                Some(n) => {
                    return Err(Error::param(
                        "potential.values",
                        format!("{} values for {} branches", values.len(), n),
                    ))
                }
                None => {
                    return Err(Error::Unsupported(
                        "per-branch constants on a countable family".to_string(),
                    ))
                }
            },
            PotentialKind::Builtin(b) => {
                if sys.is_countable() {
                    return Err(Error::TailBoundUnavailable(format!(
                        "builtin potential `{}` has no tail law",
                        b.name()
                    )));
                }
            }
            PotentialKind::Normalized(n) => {
                n.base.validate(sys)?;
                if !(n.lambda > 0.0) || n.density.min() <= 0.0 {
                    return Err(Error::NonpositiveEigenfunction { node: 0 });
                }
            }
        }
        Ok(())
    }

    /// `φ(g_i(x))` given the branch point `p = (g_i(x), g_i'(x))`.
    #[inline]
    pub(crate) fn eval_point(&self, letter: u32, x: f64, p: BranchPoint) -> f64 {
        match &self.kind {
            PotentialKind::Geometric { t } => {
                if *t == 0.0 {
                    0.0
                } else {
                    t * ln(abs(p.dy))
                }
            }
            PotentialKind::PerBranchConstant(values) => values[letter as usize - 1],
            PotentialKind::Builtin(b) => b.value(p.y),
            PotentialKind::Normalized(n) => {
                n.base.eval_point(letter, x, p) - ln(n.lambda) + ln(n.density.evaluate(p.y))
                    - ln(n.density.evaluate(x))
            }
        }
    }

    /// `φ(g_i(x))`.
    pub fn evaluate(&self, sys: &SystemSpec, letter: u32, x: f64) -> f64 {
        self.eval_point(letter, x, sys.point(letter, x))
    }

    /// Hölder data of `φ` on branch images, where the catalog provides it.
    pub fn holder(&self, sys: &SystemSpec) -> Option<Holder> {
        match &self.kind {
            PotentialKind::PerBranchConstant(_) => Some(Holder {
                constant: 0.0,
                exponent: 1.0,
            }),
            PotentialKind::Builtin(b) => Some(b.holder()),
            PotentialKind::Geometric { t } => {
                if sys.affine {
                    return Some(Holder {
                        constant: 0.0,
                        exponent: 1.0,
                    });
                }
                if sys.name == "perturbed_doubling" {
                    // |d/dy log(2 + 2πε cos 2πy)| ≤ 4π²|ε| / (2 − 2π|ε|)
                    let e = abs(sys.params[0]);
                    return Some(Holder {
                        constant: t * TWO_PI * TWO_PI * e / (2.0 - TWO_PI * e),
                        exponent: 1.0,
                    });
                }
                None
            }
            PotentialKind::Normalized(_) => None,
        }
    }

    /// Uniform bound on `|S_nφ(g_w x) − S_nφ(g_w y)|` over all `n`, when known.
    pub fn distortion_limit(&self, sys: &SystemSpec) -> Option<f64> {
        if let (PotentialKind::Geometric { t }, BranchFamily::Gauss) = (&self.kind, &sys.family) {
            // S_nφ_t(g_w x) = −2t·log(q_n + q_{n−1}x) and q_{n−1} ≤ q_n.
            return Some(2.0 * t * core::f64::consts::LN_2);
        }
        let holder = self.holder(sys)?;
        if holder.constant == 0.0 {
            return Some(0.0);
        }
        let c = powf(sys.expansion_lower, holder.exponent);
        if c <= 1.0 {
            return None;
        }
        Some(holder.constant * powf(sys.hull.diameter(), holder.exponent) / (c - 1.0))
    }

    /// Tail law of the branch weights on countable families; `None` for finite ones.
    pub fn tail_law(&self, sys: &SystemSpec) -> Result<Option<TailLaw>> {
        if !sys.is_countable() {
            return Ok(None);
        }
        match &self.kind {
            PotentialKind::Geometric { t } => {
                let exponent = 2.0 * t;
                if exponent <= 1.0 {
                    return Err(Error::Divergent(format!(
                        "Σ n^(-2t) diverges on `{}` for t = {t} ≤ 1/2",
                        sys.name
                    )));
                }
                Ok(Some(TailLaw {
                    exponent,
                    scale: 1.0,
                }))
            }
            PotentialKind::Normalized(n) => {
                let base = n.base.tail_law(sys)?.ok_or_else(|| {
                    Error::TailBoundUnavailable("normalized potential without base law".into())
                })?;
                Ok(Some(TailLaw {
                    exponent: base.exponent,
                    scale: base.scale * n.density.max() / (n.lambda * n.density.min()),
                }))
            }
            _ => Err(Error::TailBoundUnavailable(format!(
                "potential {self} on countable system `{}`",
                sys.name
            ))),
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PotentialKind::Geometric { t } => write!(f, "geometric(t={t})"),
            PotentialKind::PerBranchConstant(values) => {
                f.write_str("per_branch_constant(")?;
                for (k, v) in values.iter().enumerate() {
                    if k > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
            PotentialKind::Builtin(b) => write!(f, "builtin({})", b.name()),
            PotentialKind::Normalized(n) => write!(f, "normalized({})", n.base),
        }
    }
}

/// `S_nφ(g_w(x))`, accumulated from the innermost letter outwards.
pub fn birkhoff_sum(sys: &SystemSpec, pot: &Potential, word: &CylinderWord, x: f64) -> Result<f64> {
    sys.check_word(word)?;
    sys.hull.check(x)?;
    pot.validate(sys)?;
    Ok(birkhoff_walk(sys, pot, &word.0, x).0)
}

/// Birkhoff sum and the point `g_w(x)`; the word must be valid.
pub(crate) fn birkhoff_walk(sys: &SystemSpec, pot: &Potential, word: &[u32], x: f64) -> (f64, f64) {
    let mut z = x;
    let mut s = 0.0;
    for &l in word.iter().rev() {
        let p = sys.point(l, z);
        s += pot.eval_point(l, z, p);
        z = p.y;
    }
    (s, z)
}

/// Explicit branches summed before the tail law takes over.
const SUMMABILITY_EXPLICIT: u64 = 1000;

/// Upper estimate of `sup_x Σ_i exp φ(g_i(x))` over the probe.
pub fn summability_bound(sys: &SystemSpec, pot: &Potential, probe: &[f64]) -> Result<f64> {
    if probe.is_empty() {
        return Err(Error::param("probe", "must be nonempty"));
    }
    pot.validate(sys)?;
    let law = pot.tail_law(sys)?;
    let (explicit, tail) = match (sys.finite_count(), law) {
        (Some(n), _) => (n as u64, 0.0),
        (None, Some(law)) => (SUMMABILITY_EXPLICIT, law.bound(SUMMABILITY_EXPLICIT)),
        (None, None) => {
            return Err(Error::TailBoundUnavailable(sys.name.clone()));
        }
    };
    let mut sup = 0.0f64;
    let mut terms = Vec::with_capacity(explicit as usize);
    for &x in probe {
        sys.hull.check(x)?;
        terms.clear();
        for l in 1..=explicit as u32 {
            terms.push(exp(pot.evaluate(sys, l, x)));
        }
        sup = sup.max(pairwise_sum(&terms) + tail);
    }
    if !sup.is_finite() {
        return Err(Error::Divergent(format!(
            "branch sum of {pot} is not finite"
        )));
    }
    Ok(sup)
}

/// The Bowen sequence `K̂_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BowenSequence {
    /// `K̂_1, …, K̂_{n_max}`, made nondecreasing by running maxima.
    pub values: Vec<f64>,
    /// Per-depth maxima before the running maximum.
    pub raw: Vec<f64>,
    /// Whether a Hölder law or closed form bounds every `K_n` uniformly.
    pub sublinear: bool,
    /// The uniform bound, when one is known.
    pub limit_bound: Option<f64>,
    /// Letters explored per position on countable families.
    pub letter_cap: Option<u32>,
}

impl BowenSequence {
    /// `K̂_m`, falling back to the uniform bound beyond the measured depths.
    pub fn k(&self, m: usize) -> Option<f64> {
        if m == 0 {
            Some(0.0)
        } else if m <= self.values.len() {
            Some(self.values[m - 1])
        } else {
            self.limit_bound
        }
    }

    /// `K̂_m` or an error naming the missing depth.
    pub fn require(&self, m: usize) -> Result<f64> {
        self.k(m).ok_or(Error::MissingBowenData {
            needed: m,
            available: self.values.len(),
        })
    }

    /// Measured depth.
    pub fn depth(&self) -> usize {
        self.values.len()
    }
}

/// Options for [`bowen_constants_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BowenOptions {
    /// Letters per position explored on countable families.
    pub letter_cap: u32,
    /// Cap on (words × probe points) evaluated per depth.
    pub budget: usize,
}

impl Default for BowenOptions {
    fn default() -> Self {
        BowenOptions {
            letter_cap: 8,
            budget: 1 << 26,
        }
    }
}

/// `K̂_n` for `n ≤ n_max` by brute force over words and probe points.
pub fn bowen_constants(
    sys: &SystemSpec,
    pot: &Potential,
    n_max: usize,
    probe: &[f64],
) -> Result<BowenSequence> {
    bowen_constants_with(sys, pot, n_max, probe, &BowenOptions::default())
}

/// Deepest `n ≤ n_max` whose enumeration fits the budget of `opts` with
/// `probe_len` probe points (at least 1).
pub fn bowen_feasible_depth(
    sys: &SystemSpec,
    n_max: usize,
    probe_len: usize,
    opts: &BowenOptions,
) -> usize {
    let letters = sys
        .finite_count()
        .map_or(opts.letter_cap as u128, |n| n as u128);
    let mut cost = probe_len.max(1) as u128;
    let mut depth = 0;
    while depth < n_max {
        cost = cost.saturating_mul(letters);
        if cost > opts.budget as u128 {
            break;
        }
        depth += 1;
    }
    depth.max(1)
}

/// [`bowen_constants`] with explicit enumeration limits.
pub fn bowen_constants_with(
    sys: &SystemSpec,
    pot: &Potential,
    n_max: usize,
    probe: &[f64],
    opts: &BowenOptions,
) -> Result<BowenSequence> {
    if n_max == 0 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    if probe.is_empty() {
        return Err(Error::param("probe", "must be nonempty"));
    }
    pot.validate(sys)?;
    for &x in probe {
        sys.hull.check(x)?;
    }
    let (letters, letter_cap) = match sys.finite_count() {
        Some(n) => (n as u32, None),
        None => (opts.letter_cap, Some(opts.letter_cap)),
    };
    let width = probe.len();
    // Each suffix word keeps (point, partial sum) per probe point; prefixing a
    // letter extends the word by one step of T⁻¹.
    let mut points: Vec<f64> = probe.to_vec();
    let mut sums: Vec<f64> = vec![0.0; width];
    let mut raw = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        let words = points.len() / width * letters as usize;
        let cost = words as u128 * width as u128;
        if cost > opts.budget as u128 {
            return Err(Error::BudgetExceeded {
                what: "Bowen constant enumeration (words × probe points)",
                requested: cost,
                cap: opts.budget as u128,
            });
        }
        let mut next_points = Vec::with_capacity(words * width);
        let mut next_sums = Vec::with_capacity(words * width);
        let mut worst = 0.0f64;
        for letter in 1..=letters {
            for (zs, ss) in points.chunks(width).zip(sums.chunks(width)) {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for (&z, &s) in zs.iter().zip(ss) {
                    let p = sys.point(letter, z);
                    let total = s + pot.eval_point(letter, z, p);
                    lo = lo.min(total);
                    hi = hi.max(total);
                    next_points.push(p.y);
                    next_sums.push(total);
                }
                worst = worst.max(hi - lo);
            }
        }
        raw.push(worst);
        points = next_points;
        sums = next_sums;
    }
    let limit_bound = pot.distortion_limit(sys);
    let mut values = Vec::with_capacity(n_max);
    let mut running = 0.0f64;
    for &r in &raw {
        running = running.max(r);
        values.push(match limit_bound {
            Some(b) => running.min(b),
            None => running,
        });
    }
    Ok(BowenSequence {
        values,
        raw,
        sublinear: limit_bound.is_some(),
        limit_bound,
        letter_cap,
    })
}

/// `sup` over the probe of `Σ_i |exp φ(g_i x) − exp φ(g_i y)|` for neighbouring
/// probe points, divided by their distance: an empirical modulus for the
/// uniform continuity of the branch sum.
pub fn branch_sum_modulus(sys: &SystemSpec, pot: &Potential, probe: &[f64]) -> Result<f64> {
    pot.validate(sys)?;
    let explicit = match sys.finite_count() {
        Some(n) => n as u32,
        None => 256,
    };
    let mut worst = 0.0f64;
    for pair in probe.windows(2) {
        let (x, y) = (pair[0], pair[1]);
        let terms: Vec<f64> = (1..=explicit)
            .map(|l| abs(exp(pot.evaluate(sys, l, x)) - exp(pot.evaluate(sys, l, y))))
            .collect();
        let d = abs(y - x);
        if d > 0.0 {
            worst = worst.max(pairwise_sum(&terms) / d);
        }
    }
    Ok(worst)
}
