//! The invariant suite behind the `verify` command.
//!
//! Each check prints one line `PASS|FAIL|SKIP <name> <details>`. Numbers are
//! printed in a fixed format and nothing depends on timing or thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ruelle_core::grid::GridFunction;
use ruelle_core::measures::{
    build_eigenmeasure_with, default_test_functions, gibbs_verify, invariance_verify,
    invariant_measure, jacobian_verify, CylinderMeasure,
};
use ruelle_core::pressure::{bowen_solve, linspace, pressure_at_anchor, summability_threshold};
use ruelle_core::transfer::{
    fundamental_equation_check, normalization_defect, normalize_potential,
};
use ruelle_core::{Error, Potential};

use crate::commands::{
    bowen, conformal_measure, eigen_data, estimate, measure_options, trunc, CliError, Report,
};
use crate::config::RunConfig;

/// Largest `sup |L_ψⁿ f − λ^{−n} h^{−1} L_φⁿ(h f)|` accepted.
pub const FUNDAMENTAL_TOL: f64 = 1e-5;
/// Largest Jacobian discrepancy accepted.
pub const JACOBIAN_TOL: f64 = 1e-4;
/// Largest invariance gap accepted.
pub const INVARIANCE_TOL: f64 = 1e-3;

/// Outcome of one check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// The invariant holds.
    Pass,
    /// The invariant is violated.
    Fail,
    /// The invariant does not apply to this configuration.
    Skip,
}

/// One line of the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    /// Check name.
    pub name: &'static str,
    /// Outcome.
    pub status: Status,
    /// `key=value` details.
    pub detail: String,
}

impl Check {
    fn judged(name: &'static str, ok: bool, detail: String) -> Check {
        Check {
            name,
            status: if ok { Status::Pass } else { Status::Fail },
            detail,
        }
    }

    fn skip(name: &'static str, reason: &str) -> Check {
        Check {
            name,
            status: Status::Skip,
            detail: reason.to_string(),
        }
    }

    /// The printed line.
    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        format!("{tag} {} {}", self.name, self.detail)
    }
}

fn e(x: f64) -> String {
    format!("{x:.6e}")
}

/// Run every check on the configured system and potential.
pub fn checks(cfg: &RunConfig) -> Result<Vec<Check>, Error> {
    let sys = &cfg.system;
    let pot = &cfg.potential;
    let n = cfg.depth;
    let anchor = cfg.anchor_or_midpoint();
    let mut out = Vec::new();

    // Eigen-triple.
    let eig = eigen_data(cfg)?;
    out.push(Check::judged(
        "eigen_bracket",
        eig.cw_lower <= eig.lambda
            && eig.lambda <= eig.cw_upper
            && eig.h.min() > 0.0
            && eig.residual_h <= cfg.tol,
        format!(
            "lambda={} cw_lower={} cw_upper={} residual={} min_h={}",
            e(eig.lambda),
            e(eig.cw_lower),
            e(eig.cw_upper),
            e(eig.residual_h),
            e(eig.h.min())
        ),
    ));
    let normalized = normalize_potential(sys, pot, &eig);
    let defect = match &normalized {
        Ok(psi) => normalization_defect(sys, psi, *eig.h.grid())?,
        Err(Error::NormalizationFailed { defect, .. }) => *defect,
        Err(other) => return Err(other.clone()),
    };
    out.push(Check::judged(
        "normalization",
        normalized.is_ok(),
        format!("defect={}", e(defect)),
    ));
    let grid = *eig.h.grid();
    let mut worst = 0.0f64;
    for power in 0..3 {
        let f = GridFunction::from_fn(grid, |x| x.powi(power));
        for steps in 1..=4 {
            worst = worst.max(fundamental_equation_check(sys, pot, &eig, &f, steps)?);
        }
    }
    out.push(Check::judged(
        "fundamental_equation",
        worst <= FUNDAMENTAL_TOL,
        format!("max_gap={} tol={}", e(worst), e(FUNDAMENTAL_TOL)),
    ));

    // Pressure.
    let est = estimate(cfg)?;
    out.push(Check::judged(
        "pressure_bracket",
        est.lower <= est.point && est.point <= est.upper,
        format!(
            "lower={} point={} upper={}",
            e(est.lower),
            e(est.point),
            e(est.upper)
        ),
    ));
    let log_lambda = eig.lambda.ln();
    // Bracket width and residual, plus round-off for exactly solvable systems.
    let allowed = est.width() + eig.residual_h + 1e-12 * (1.0 + log_lambda.abs());
    out.push(Check::judged(
        "eigen_pressure_consistency",
        (est.point - log_lambda).abs() <= allowed,
        format!(
            "point={} log_lambda={} growth={} allowed={}",
            e(est.point),
            e(log_lambda),
            e(est.growth),
            e(allowed)
        ),
    ));
    let k = bowen(cfg, n)?;
    let kn = k.require(n)?;
    if n >= 2 {
        let half = n / 2;
        let coarse = pressure_at_anchor(sys, pot, half, cfg.grid_size, &trunc(cfg), anchor)?;
        let fine = pressure_at_anchor(sys, pot, 2 * half, cfg.grid_size, &trunc(cfg), anchor)?;
        let widen = k.require(2 * half)? / half as f64 + 1e-12;
        out.push(Check::judged(
            "bracket_nesting",
            fine.lower >= coarse.lower - widen && fine.upper <= coarse.upper + widen,
            format!(
                "depth={half}:[{},{}] depth={}:[{},{}] widen={}",
                e(coarse.lower),
                e(coarse.upper),
                2 * half,
                e(fine.lower),
                e(fine.upper),
                e(widen)
            ),
        ));
    } else {
        out.push(Check::skip("bracket_nesting", "depth 1"));
    }
    let mut anchor_gap = 0.0f64;
    for other in [sys.hull.lo, sys.hull.hi] {
        let p = pressure_at_anchor(sys, pot, n, cfg.grid_size, &trunc(cfg), other)?;
        anchor_gap = anchor_gap.max((p.point - est.point).abs());
    }
    let anchor_allowed = (kn + 1e-9) / n as f64;
    out.push(Check::judged(
        "anchor_independence",
        anchor_gap <= anchor_allowed,
        format!("max_gap={} allowed={}", e(anchor_gap), e(anchor_allowed)),
    ));
    out.push(shape_check(cfg)?);
    out.push(bowen_check(cfg)?);

    // Measures.
    let (mu, p_hat) = conformal_measure(cfg, n)?;
    let total: f64 = mu.cells.iter().map(|c| c.weight).sum();
    let positive = if sys.is_countable() {
        mu.cells.iter().all(|c| c.weight >= 0.0)
    } else {
        mu.cells.iter().all(|c| c.weight > 0.0)
    };
    out.push(Check::judged(
        "measure_normalized",
        (total - 1.0).abs() <= 1e-12 && positive,
        format!(
            "cells={} total_minus_one={} tail_mass={}",
            mu.cells.len(),
            e(total - 1.0),
            e(mu.tail_mass())
        ),
    ));
    let report = gibbs_verify(sys, pot, &mu, &k, p_hat)?;
    let (lo, hi) = report
        .levels
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), l| {
            (lo.min(l.min_ratio), hi.max(l.max_ratio))
        });
    out.push(Check::judged(
        "gibbs_sandwich",
        report.passed(),
        format!(
            "c_hat={} min_ratio={} max_ratio={} k_n={}",
            e(report.c_hat),
            e(lo),
            e(hi),
            e(kn)
        ),
    ));
    if n >= 2 {
        let d = jacobian_verify(sys, pot, &mu, eig.lambda)?;
        out.push(Check::judged(
            "jacobian",
            d <= JACOBIAN_TOL,
            format!("discrepancy={} tol={}", e(d), e(JACOBIAN_TOL)),
        ));
        out.push(refinement_check(cfg, &mu, p_hat, kn + k.require(n - 1)?)?);
    } else {
        out.push(Check::skip("jacobian", "depth 1"));
        out.push(Check::skip("refinement_consistency", "depth 1"));
    }
    let m = invariant_measure(&mu, &eig.h)?;
    let fns = default_test_functions();
    let refs: Vec<&(dyn Fn(f64) -> f64 + Sync)> = fns
        .iter()
        .map(|f| f as &(dyn Fn(f64) -> f64 + Sync))
        .collect();
    let gap = invariance_verify(&m, &refs);
    out.push(Check::judged(
        "invariance",
        gap <= INVARIANCE_TOL,
        format!("max_gap={} tol={}", e(gap), e(INVARIANCE_TOL)),
    ));
    out.push(no_atom_check(&mu));
    Ok(out)
}

/// Monotonicity, convexity and slope of `t ↦ P̂(t)` on 7 samples.
fn shape_check(cfg: &RunConfig) -> Result<Check, Error> {
    let sys = &cfg.system;
    if cfg.potential.geometric_t().is_none() {
        return Ok(Check::skip("pressure_shape", "needs the geometric family"));
    }
    let start = if sys.is_countable() {
        summability_threshold(sys, 10.0, 1e-6)? + 0.1
    } else {
        0.0
    };
    let ts = linspace(start, start + 1.5, 7);
    let anchor = cfg.anchor_or_midpoint();
    let est = ts
        .iter()
        .map(|&t| {
            pressure_at_anchor(
                sys,
                &Potential::geometric(t),
                cfg.depth,
                cfg.grid_size,
                &trunc(cfg),
                anchor,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let log_c = sys.expansion_lower.ln();
    let mut ok = true;
    let (mut worst_rise, mut worst_convexity, mut worst_slope) =
        (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..est.len() - 1 {
        let slack = 2.0 * (est[i].width() + est[i + 1].width()) + 1e-12;
        let rise = est[i + 1].point - est[i].point;
        let bound = -log_c * (ts[i + 1] - ts[i]);
        worst_rise = worst_rise.max(rise);
        worst_slope = worst_slope.max(rise / (ts[i + 1] - ts[i]));
        ok &= rise <= slack && rise <= bound + slack;
    }
    for i in 1..est.len() - 1 {
        let slack = 2.0 * (est[i - 1].width() + est[i].width() + est[i + 1].width()) + 1e-12;
        let defect = est[i].point - 0.5 * (est[i - 1].point + est[i + 1].point);
        worst_convexity = worst_convexity.max(defect);
        ok &= defect <= slack;
    }
    Ok(Check::judged(
        "pressure_shape",
        ok,
        format!(
            "t=[{},{}] max_rise={} max_convexity_defect={} max_slope={} minus_log_c={}",
            e(ts[0]),
            e(ts[ts.len() - 1]),
            e(worst_rise),
            e(worst_convexity),
            e(worst_slope),
            e(-log_c)
        ),
    ))
}

fn bowen_check(cfg: &RunConfig) -> Result<Check, Error> {
    if !(cfg.system.expansion_lower > 1.0) {
        return Ok(Check::skip("bowen_root", "expansion constant is 1"));
    }
    let sol = bowen_solve(
        &cfg.system,
        cfg.bowen.t_lo,
        cfg.bowen.t_hi,
        cfg.tol_t,
        cfg.depth,
        cfg.grid_size,
        &trunc(cfg),
    )?;
    Ok(Check::judged(
        "bowen_root",
        sol.certified,
        format!(
            "s_hat={} lower_at_s={} upper_at_s={}",
            e(sol.s_hat),
            e(sol.at_root.lower),
            e(sol.at_root.upper)
        ),
    ))
}

/// Marginals of `μ_n` against `μ_{n−1}` built directly, on every cylinder of
/// depth `≤ n−1` that both cell structures resolve.
fn refinement_check(
    cfg: &RunConfig,
    mu: &CylinderMeasure,
    p_hat: f64,
    k_sum: f64,
) -> Result<Check, Error> {
    let n = mu.depth;
    let direct = build_eigenmeasure_with(
        &cfg.system,
        &cfg.potential,
        n - 1,
        p_hat,
        &measure_options(cfg),
    )?;
    let (mut lo, mut hi, mut compared) = (f64::INFINITY, 0.0f64, 0usize);
    for m in 1..n {
        let marginal: BTreeMap<_, _> = mu.cylinder_masses(m).into_iter().collect();
        for (word, mass) in direct.cylinder_masses(m) {
            if let Some(&w) = marginal.get(&word) {
                let r = w / mass;
                lo = lo.min(r);
                hi = hi.max(r);
                compared += 1;
            }
        }
    }
    let bound = k_sum.exp();
    Ok(Check::judged(
        "refinement_consistency",
        compared > 0 && lo >= (1.0 - 1e-12) / bound && hi <= bound * (1.0 + 1e-12),
        format!(
            "cylinders={compared} min_ratio={} max_ratio={} bound={}",
            e(lo),
            e(hi),
            e(bound)
        ),
    ))
}

/// The largest cylinder mass shrinks with depth, over the depths the cell
/// structure resolves.
fn no_atom_check(mu: &CylinderMeasure) -> Check {
    let heaviest: Vec<(usize, f64)> = (1..=mu.depth)
        .filter_map(|m| {
            let masses = mu.cylinder_masses(m);
            (!masses.is_empty()).then(|| (m, masses.into_iter().fold(0.0f64, |a, (_, w)| a.max(w))))
        })
        .collect();
    let (first, last) = (heaviest[0], heaviest[heaviest.len() - 1]);
    let ok = heaviest
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12))
        && (heaviest.len() == 1 || last.1 < first.1);
    Check::judged(
        "no_atoms",
        ok,
        format!(
            "max_weight_depth{}={} max_weight_depth{}={}",
            first.0,
            e(first.1),
            last.0,
            e(last.1)
        ),
    )
}

/// The `verify` command.
pub fn run_suite(cfg: &RunConfig) -> Result<Report, CliError> {
    let checks = checks(cfg)?;
    let mut stdout = format!(
        "system={} potential={} depth={} grid_size={}\n",
        cfg.system.name, cfg.potential, cfg.depth, cfg.grid_size
    );
    for c in &checks {
        let _ = writeln!(stdout, "{}", c.line());
    }
    let passed = checks.iter().all(|c| c.status != Status::Fail);
    let failed = checks.iter().filter(|c| c.status == Status::Fail).count();
    let _ = writeln!(stdout, "{} checks, {failed} failed", checks.len());
    Ok(Report {
        files: cfg
            .output_path
            .iter()
            .map(|p| (p.clone(), stdout.clone()))
            .collect(),
        stdout,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn doubling_with_zero_potential_passes() {
        let cfg = parse_config(
            "system.name = doubling\npotential.t = 0\nrun.depth = 8\nrun.grid_size = 65",
        )
        .unwrap();
        let checks = checks(&cfg).unwrap();
        for c in &checks {
            assert_ne!(c.status, Status::Fail, "{}", c.line());
        }
        assert!(checks.iter().filter(|c| c.status == Status::Pass).count() >= 14);
    }
}
