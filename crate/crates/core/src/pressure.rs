//! Topological pressure `P(T, φ) = lim (1/n) log Lⁿ_φ 1(a)` with brackets,
//! the pressure curve `t ↦ P(T, φ_t)`, and the Bowen root `P(T, φ_s) = 0`.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::math::{abs, ln};
use crate::potentials::{BowenSequence, Potential};
use crate::systems::{SystemSpec, TruncationPolicy};
use crate::transfer::TransferOperator;

/// A pressure estimate at one depth.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureEstimate {
    /// Description of the potential.
    pub potential: String,
    /// Depth `n`.
    pub depth: usize,
    /// `(1/n) log min_nodes Lⁿ1`.
    pub lower: f64,
    /// `(1/n) log Lⁿ1(a)`.
    pub point: f64,
    /// `(1/n) log max_nodes Lⁿ1`.
    pub upper: f64,
    /// Anchor `a`.
    pub anchor: f64,
    /// One-step growth rate `log(Lⁿ1(a) / Lⁿ⁻¹1(a))`. It converges to the
    /// pressure geometrically fast, while `point` carries an `O(1/n)` bias.
    pub growth: f64,
    /// Grid nodes used.
    pub grid_size: usize,
}

impl PressureEstimate {
    /// `upper − lower`.
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Whether `p` lies in `[lower − slack, upper + slack]`.
    pub fn contains(&self, p: f64, slack: f64) -> bool {
        p >= self.lower - slack && p <= self.upper + slack
    }
}

/// `log Lᵐ1` data for `m = 1..=n`, accumulated with per-step renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct LogIterates {
    /// `log min_nodes Lᵐ1`.
    pub log_min: Vec<f64>,
    /// `log max_nodes Lᵐ1`.
    pub log_max: Vec<f64>,
    /// `log Lᵐ1(a)` (linear interpolation at the anchor).
    pub log_anchor: Vec<f64>,
}

/// `log Lᵐ1` for `m = 1..=n` on an assembled operator.
pub fn log_iterates(op: &TransferOperator, n: usize, anchor: f64) -> Result<LogIterates> {
    let grid = *op.grid();
    let mut f = vec![1.0; grid.len()];
    let mut log_scale = 0.0;
    let mut out = LogIterates {
        log_min: Vec::with_capacity(n),
        log_max: Vec::with_capacity(n),
        log_anchor: Vec::with_capacity(n),
    };
    for _ in 0..n {
        f = op.apply_values(&f);
        let sup = f.iter().copied().fold(0.0, f64::max);
        if !(sup > 0.0) || !sup.is_finite() {
            return Err(Error::Underflow("iterates of the constant function"));
        }
        for v in f.iter_mut() {
            *v /= sup;
        }
        log_scale += ln(sup);
        let min = f.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            let node = f.iter().position(|&v| !(v > 0.0)).unwrap_or(0);
            return Err(Error::NonpositiveEigenfunction { node });
        }
        let at_anchor = GridFunction::new(grid, f.clone())?.evaluate(anchor);
        out.log_min.push(log_scale + ln(min));
        out.log_max.push(log_scale);
        out.log_anchor.push(log_scale + ln(at_anchor));
    }
    Ok(out)
}

fn estimate_from(
    pot: &Potential,
    logs: &LogIterates,
    n: usize,
    anchor: f64,
    grid_size: usize,
) -> PressureEstimate {
    let nf = n as f64;
    let prev = if n >= 2 { logs.log_anchor[n - 2] } else { 0.0 };
    PressureEstimate {
        potential: pot.to_string(),
        depth: n,
        lower: logs.log_min[n - 1] / nf,
        point: logs.log_anchor[n - 1] / nf,
        upper: logs.log_max[n - 1] / nf,
        anchor,
        growth: logs.log_anchor[n - 1] - prev,
        grid_size,
    }
}

/// Pressure estimate at depth `n` anchored at the hull midpoint.
pub fn pressure_at(
    sys: &SystemSpec,
    pot: &Potential,
    n: usize,
    grid_size: usize,
    trunc: &TruncationPolicy,
) -> Result<PressureEstimate> {
    pressure_at_anchor(sys, pot, n, grid_size, trunc, sys.hull.midpoint())
}

/// Pressure estimate at depth `n` with an explicit anchor.
pub fn pressure_at_anchor(
    sys: &SystemSpec,
    pot: &Potential,
    n: usize,
    grid_size: usize,
    trunc: &TruncationPolicy,
    anchor: f64,
) -> Result<PressureEstimate> {
    if n == 0 {
        return Err(Error::param("depth", "must be at least 1"));
    }
    sys.hull.check(anchor)?;
    let grid = Grid::uniform(sys.hull, grid_size)?;
    let op = TransferOperator::assemble(sys, pot, grid, trunc)?;
    let logs = log_iterates(&op, n, anchor)?;
    Ok(estimate_from(pot, &logs, n, anchor, grid_size))
}

/// Subadditive (Fekete) pressure estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceleratedPressure {
    /// The plain estimate at depth `n_max`.
    pub raw: PressureEstimate,
    /// `min_m (a_m + K_m + C) / m`.
    pub accelerated: f64,
    /// Smallest `C ≥ 0` with `a_{n+m} ≤ a_n + a_m + K_m + C` on the computed data.
    pub constant: f64,
    /// The minimizing `m`.
    pub best_m: usize,
}

impl AcceleratedPressure {
    /// The accelerated value lies above the lower bracket end (it is an upper
    /// estimate of the limit) and within the bracket up to `slack`.
    pub fn is_consistent(&self, slack: f64) -> bool {
        self.raw.contains(self.accelerated, slack)
    }
}

/// Combine `a_m = log Lᵐ1(a)` with the subadditive correction.
///
/// `C` is the smallest nonnegative constant making the subadditive inequality
/// hold on every computed pair, so exactly linear sequences (affine systems)
/// give `C = 0` and return the exact slope.
pub fn pressure_accelerated(
    sys: &SystemSpec,
    pot: &Potential,
    n_max: usize,
    grid_size: usize,
    trunc: &TruncationPolicy,
    bowen: &BowenSequence,
) -> Result<AcceleratedPressure> {
    if n_max == 0 {
        return Err(Error::param("n_max", "must be at least 1"));
    }
    let k: Vec<f64> = (1..=n_max)
        .map(|m| bowen.require(m))
        .collect::<Result<_>>()?;
    let grid = Grid::uniform(sys.hull, grid_size)?;
    let op = TransferOperator::assemble(sys, pot, grid, trunc)?;
    let anchor = sys.hull.midpoint();
    let logs = log_iterates(&op, n_max, anchor)?;
    let a = &logs.log_anchor;
    let mut constant = 0.0f64;
    for n in 1..n_max {
        for m in 1..=(n_max - n) {
            let excess = a[n + m - 1] - a[n - 1] - a[m - 1] - k[m - 1];
            constant = constant.max(excess);
        }
    }
    let mut best = f64::INFINITY;
    let mut best_m = 1;
    for m in 1..=n_max {
        let v = (a[m - 1] + k[m - 1] + constant) / m as f64;
        if v < best {
            best = v;
            best_m = m;
        }
    }
    Ok(AcceleratedPressure {
        raw: estimate_from(pot, &logs, n_max, anchor, grid_size),
        accelerated: best,
        constant,
        best_m,
    })
}

/// Result of comparing the pressure of `T^m` with `m` times that of `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateIdentity {
    /// `P̂(T^m, t)` at depth `n`.
    pub iterated: f64,
    /// `P̂(T, t)` at depth `m·n`.
    pub base: f64,
    /// `|P̂(T^m, t) − m·P̂(T, t)|`.
    pub difference: f64,
    /// Bracket width of `T^m` plus `m` times that of `T`.
    pub combined_width: f64,
}

/// Maximum branch count of an iterated system.
pub const ITERATE_BRANCH_CAP: usize = 1 << 12;

/// Check `P(T^m, t) = m·P(T, t)` for the geometric potential.
///
/// `T` is evaluated at depth `m·n` so both sides describe the same number of
/// applications of `T`.
pub fn iterate_identity_check(
    sys: &SystemSpec,
    t: f64,
    m: usize,
    n: usize,
    grid_size: usize,
) -> Result<IterateIdentity> {
    let composed = sys.iterate(m, ITERATE_BRANCH_CAP)?;
    let pot = Potential::geometric(t);
    let trunc = TruncationPolicy::default();
    let lhs = pressure_at(&composed, &pot, n, grid_size, &trunc)?;
    let rhs = pressure_at(sys, &pot, m * n, grid_size, &trunc)?;
    let mf = m as f64;
    Ok(IterateIdentity {
        iterated: lhs.point,
        base: rhs.point,
        difference: abs(lhs.point - mf * rhs.point),
        combined_width: lhs.width() + mf * rhs.width(),
    })
}

/// Which pressure statistic bisection targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// `(1/n) log Lⁿ1(a)`.
    #[default]
    Point,
    /// `log(Lⁿ1(a)/Lⁿ⁻¹1(a))`.
    Growth,
}

impl Estimator {
    fn pick(&self, e: &PressureEstimate) -> f64 {
        match self {
            Estimator::Point => e.point,
            Estimator::Growth => e.growth,
        }
    }
}

/// Outcome of [`bowen_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct BowenSolution {
    /// Midpoint of the final bracket.
    pub s_hat: f64,
    /// Final lower parameter (pressure positive).
    pub t_lo: f64,
    /// Final upper parameter (pressure nonpositive).
    pub t_hi: f64,
    /// Pressure estimate at `s_hat`.
    pub at_root: PressureEstimate,
    /// Pressure drop across the final parameter bracket.
    pub drop: f64,
    /// Whether the bracket at `s_hat` reaches 0 within its width plus the drop.
    pub certified: bool,
    /// Pressure evaluations performed.
    pub evaluations: usize,
}

/// Largest parameter tried while searching for a sign change.
pub const T_CAP: f64 = 1.0e6;

/// Bisection for the zero of `t ↦ P̂(T, −t log|T'|)`.
pub fn bowen_solve(
    sys: &SystemSpec,
    t_lo: f64,
    t_hi: f64,
    tol_t: f64,
    depth: usize,
    grid_size: usize,
    trunc: &TruncationPolicy,
) -> Result<BowenSolution> {
    bowen_solve_with(
        sys,
        t_lo,
        t_hi,
        tol_t,
        depth,
        grid_size,
        trunc,
        Estimator::Point,
    )
}

/// [`bowen_solve`] with a selectable estimator.
#[allow(clippy::too_many_arguments)]
pub fn bowen_solve_with(
    sys: &SystemSpec,
    t_lo: f64,
    t_hi: f64,
    tol_t: f64,
    depth: usize,
    grid_size: usize,
    trunc: &TruncationPolicy,
    estimator: Estimator,
) -> Result<BowenSolution> {
    if !(sys.expansion_lower > 1.0) {
        return Err(Error::ExpansionNotStrict(sys.name.clone()));
    }
    if !(tol_t > 0.0) || !(t_hi >= t_lo) || t_lo < 0.0 {
        return Err(Error::param(
            "t_lo/t_hi/tol_t",
            "need 0 ≤ t_lo ≤ t_hi and tol_t > 0",
        ));
    }
    let grid = Grid::uniform(sys.hull, grid_size)?;
    let anchor = sys.hull.midpoint();
    let mut evaluations = 0usize;
    let mut eval = |t: f64| -> Result<PressureEstimate> {
        evaluations += 1;
        let pot = Potential::geometric(t);
        let op = TransferOperator::assemble(sys, &pot, grid, trunc)?;
        let logs = log_iterates(&op, depth, anchor)?;
        Ok(estimate_from(&pot, &logs, depth, anchor, grid_size))
    };
    let tau = summability_threshold(sys, T_CAP, tol_t)?;
    let mut lo = t_lo;
    let p_lo = match eval(lo) {
        Ok(e) => estimator.pick(&e),
        Err(Error::Divergent(_)) => {
            return Err(Error::NoSignChange {
                t_hi: lo,
                pressure: None,
                tau,
            })
        }
        Err(e) => return Err(e),
    };
    if !(p_lo > 0.0) {
        return Err(Error::NoSignChange {
            t_hi: lo,
            pressure: Some(p_lo),
            tau,
        });
    }
    let mut p_lo = p_lo;
    let mut hi = t_hi.max(lo);
    let mut p_hi = estimator.pick(&eval(hi)?);
    while p_hi > 0.0 {
        lo = hi;
        p_lo = p_hi;
        hi = if hi > 0.0 { 2.0 * hi } else { 1.0 };
        if hi > T_CAP {
            return Err(Error::NoSignChange {
                t_hi: lo,
                pressure: Some(p_lo),
                tau,
            });
        }
        p_hi = estimator.pick(&eval(hi)?);
    }
    while hi - lo >= tol_t {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = estimator.pick(&eval(mid)?);
        if p > 0.0 {
            lo = mid;
            p_lo = p;
        } else {
            hi = mid;
            p_hi = p;
        }
    }
    let s_hat = 0.5 * (lo + hi);
    let at_root = eval(s_hat)?;
    let drop = p_lo - p_hi;
    let margin = at_root.width() + drop;
    let certified = at_root.lower - margin <= 0.0 && at_root.upper + margin >= 0.0;
    Ok(BowenSolution {
        s_hat,
        t_lo: lo,
        t_hi: hi,
        at_root,
        drop,
        certified,
        evaluations,
    })
}

/// Smallest `t` for which the geometric potential is summable, located by
/// bisection on the divergent/finite boundary (0 for finite systems).
pub fn summability_threshold(sys: &SystemSpec, t_max: f64, tol: f64) -> Result<f64> {
    let summable = |t: f64| Potential::geometric(t).tail_law(sys).is_ok();
    if summable(0.0) {
        return Ok(0.0);
    }
    if !summable(t_max) {
        return Ok(f64::INFINITY);
    }
    let (mut lo, mut hi) = (0.0, t_max);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if summable(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Pressure samples along the geometric family.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureCurve {
    /// System name.
    pub system: String,
    /// Depth of every sample.
    pub depth: usize,
    /// `(t, estimate)` with strictly increasing `t`.
    pub samples: Vec<(f64, PressureEstimate)>,
}

/// `count` equispaced values from `t_min` to `t_max` inclusive.
pub fn linspace(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![t_min],
        _ => (0..count)
            .map(|k| {
                if k + 1 == count {
                    t_max
                } else {
                    t_min + (t_max - t_min) * k as f64 / (count - 1) as f64
                }
            })
            .collect(),
    }
}

/// Sample `P̂(T, φ_t)` at the given parameters.
pub fn pressure_curve(
    sys: &SystemSpec,
    ts: &[f64],
    depth: usize,
    grid_size: usize,
    trunc: &TruncationPolicy,
) -> Result<PressureCurve> {
    if ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param(
            "t",
            "sample parameters must be strictly increasing",
        ));
    }
    let samples = ts
        .iter()
        .map(|&t| {
            Ok((
                t,
                pressure_at(sys, &Potential::geometric(t), depth, grid_size, trunc)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PressureCurve {
        system: sys.name.clone(),
        depth,
        samples,
    })
}

/// Shape diagnostics of a sampled pressure curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeReport {
    /// Largest increase `P̂(t_{k+1}) − P̂(t_k)` (≤ 0 for a nonincreasing curve).
    pub max_increase: f64,
    /// Largest convexity defect `P̂(t₂) − (P̂(t₁) + P̂(t₃))/2` over equispaced triples.
    pub max_convexity_defect: f64,
    /// Largest secant slope over consecutive samples.
    pub max_secant_slope: f64,
}

impl PressureCurve {
    /// Point estimates.
    pub fn points(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.1.point).collect()
    }

    /// Monotonicity, convexity and slope diagnostics of the point estimates.
    pub fn shape(&self) -> ShapeReport {
        let p = self.points();
        let t: Vec<f64> = self.samples.iter().map(|s| s.0).collect();
        let mut max_increase = f64::NEG_INFINITY;
        let mut max_secant_slope = f64::NEG_INFINITY;
        for k in 0..p.len().saturating_sub(1) {
            max_increase = max_increase.max(p[k + 1] - p[k]);
            max_secant_slope = max_secant_slope.max((p[k + 1] - p[k]) / (t[k + 1] - t[k]));
        }
        let mut max_convexity_defect = f64::NEG_INFINITY;
        for k in 1..p.len().saturating_sub(1) {
            max_convexity_defect = max_convexity_defect.max(p[k] - 0.5 * (p[k - 1] + p[k + 1]));
        }
        ShapeReport {
            max_increase,
            max_convexity_defect,
            max_secant_slope,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::builtin_system;

    #[test]
    fn doubling_pressure_is_log_two() {
        let d = builtin_system("doubling", &[]).unwrap();
        for n in [1, 5, 10] {
            let e =
                pressure_at(&d, &Potential::geometric(0.0), n, 33, &Default::default()).unwrap();
            assert_eq!(e.lower, e.upper);
            assert!((e.point - 2f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn cantor_pressure_closed_form() {
        let c = builtin_system("linear_cantor", &[2.0, 3.0]).unwrap();
        let e = pressure_at(&c, &Potential::geometric(1.0), 7, 65, &Default::default()).unwrap();
        let exact = (2.0f64 / 3.0).ln();
        for v in [e.lower, e.point, e.upper, e.growth] {
            assert!((v - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn perturbed_depths_agree() {
        let p = builtin_system("perturbed_doubling", &[0.05]).unwrap();
        let pot = Potential::geometric(1.0);
        let e12 = pressure_at(&p, &pot, 12, 257, &Default::default()).unwrap();
        let e24 = pressure_at(&p, &pot, 24, 257, &Default::default()).unwrap();
        assert!((e12.point - e24.point).abs() < 1e-3);
        // Lebesgue measure is conformal for −log|T'| on a full-branch circle map,
        // so the pressure is 0 and both brackets must contain it.
        assert!(e12.contains(0.0, 0.0) && e24.contains(0.0, 0.0));
        assert!(e24.width() < e12.width());
        assert!(e24.contains(e24.point, 0.0));
        assert!(e24.growth.abs() < 1e-7);
    }

    #[test]
    fn accelerated_exact_for_per_branch_constants() {
        let d = builtin_system("doubling", &[]).unwrap();
        let pot = Potential::per_branch_constant(vec![0.0, 2f64.ln()]);
        let k = crate::potentials::bowen_constants(&d, &pot, 4, &d.hull.probe(17)).unwrap();
        let acc = pressure_accelerated(&d, &pot, 4, 33, &Default::default(), &k).unwrap();
        assert!((acc.accelerated - 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn iterate_identity_exact_for_affine() {
        let c = builtin_system("linear_cantor", &[2.0, 3.0]).unwrap();
        let r = iterate_identity_check(&c, 1.0, 3, 4, 65).unwrap();
        assert!(r.difference < 1e-13);
        let d = builtin_system("doubling", &[]).unwrap();
        assert!(
            iterate_identity_check(&d, 0.0, 2, 5, 33)
                .unwrap()
                .difference
                < 1e-14
        );
    }

    #[test]
    fn bowen_roots_of_affine_systems() {
        let c = builtin_system("linear_cantor", &[2.0, 3.0]).unwrap();
        let s = bowen_solve(&c, 0.0, 1.0, 1e-10, 4, 33, &Default::default()).unwrap();
        assert!((s.s_hat - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
        assert!(s.certified);
        let d = builtin_system("doubling", &[]).unwrap();
        let s = bowen_solve(&d, 0.0, 0.5, 1e-9, 4, 33, &Default::default()).unwrap();
        assert!((s.s_hat - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gauss_refuses_bisection() {
        let g = builtin_system("gauss", &[]).unwrap();
        assert!(matches!(
            bowen_solve(&g, 0.0, 2.0, 1e-8, 8, 65, &Default::default()),
            Err(Error::ExpansionNotStrict(_))
        ));
        let tau = summability_threshold(&g, 10.0, 1e-9).unwrap();
        assert!((tau - 0.5).abs() < 1e-8);
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(0.0, 1.5, 21);
        assert_eq!(v.len(), 21);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[20], 1.5);
    }
}
