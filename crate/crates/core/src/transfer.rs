//! The Ruelle transfer operator `(L_φ f)(x) = Σ_i f(g_i x)·exp φ(g_i x)` on
//! piecewise-linear grid functions, and its leading eigen-triple.
//!
//! Because `f` is represented by its linear interpolant, one application is a
//! fixed nonnegative matrix acting on node values. [`TransferOperator`]
//! assembles that matrix once; everything else is matrix-vector products.
//!
//! For the continued-fraction family the branches beyond the first few
//! hundred all land in the first grid cell, where the interpolant is linear,
//! so their total contribution is a combination of Hurwitz zeta values and is
//! summed in closed form rather than dropped.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::math::{abs, exp, hurwitz_zeta, ln, pairwise_sum, powf, sup_abs};
use crate::potentials::{Potential, PotentialKind};
use crate::systems::{gauss_explicit_branches, BranchFamily, SystemSpec};

pub use crate::systems::TruncationPolicy;

/// Power-law description of the far branches of the continued-fraction family:
/// `exp φ(g_i x) = (i + x)^{−exponent} · ρ(x, g_i x)`.
#[derive(Clone, Copy)]
struct PowerTail<'a> {
    exponent: f64,
    /// `ρ(x, z) = h(z) / (λ h(x))` for normalized potentials, `1` otherwise.
    density: Option<(&'a GridFunction, f64)>,
}

fn power_tail(pot: &Potential) -> Option<PowerTail<'_>> {
    match &pot.kind {
        PotentialKind::Geometric { t } => Some(PowerTail {
            exponent: 2.0 * t,
            density: None,
        }),
        PotentialKind::Normalized(n) => match n.base.kind {
            PotentialKind::Geometric { t } => Some(PowerTail {
                exponent: 2.0 * t,
                density: Some((&n.density, n.lambda)),
            }),
            _ => None,
        },
        _ => None,
    }
}

/// Row assembly context shared by the matrix and single-point rows.
struct Assembler<'a> {
    sys: &'a SystemSpec,
    pot: &'a Potential,
    grid: Grid,
    explicit: u32,
    tail: Option<PowerTail<'a>>,
}

impl<'a> Assembler<'a> {
    fn new(sys: &'a SystemSpec, pot: &'a Potential, grid: Grid) -> Result<Self> {
        pot.validate(sys)?;
        if grid.hull() != sys.hull {
            return Err(Error::Mismatch(
                "grid hull differs from the system hull".into(),
            ));
        }
        match &sys.family {
            BranchFamily::Finite(b) => Ok(Assembler {
                sys,
                pot,
                grid,
                explicit: b.len() as u32,
                tail: None,
            }),
            BranchFamily::Gauss => {
                // Surfaces DIVERGENT for non-summable exponents.
                pot.tail_law(sys)?;
                let tail = power_tail(pot).ok_or_else(|| {
                    Error::TailBoundUnavailable(format!("no power-law tail for {pot}"))
                })?;
                let mut explicit = gauss_explicit_branches(grid.step());
                if let Some((h, _)) = tail.density {
                    explicit = explicit.max(gauss_explicit_branches(h.grid().step()));
                }
                Ok(Assembler {
                    sys,
                    pot,
                    grid,
                    explicit: explicit as u32,
                    tail: Some(tail),
                })
            }
        }
    }

    /// Nonzero entries `(column, weight)` of the row for the point `x`, in
    /// ascending column order, plus the magnitude of the closed-form tail.
    fn row(&self, x: f64) -> (Vec<(u32, f64)>, f64) {
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(2 * self.explicit as usize + 2);
        for letter in 1..=self.explicit {
            let p = self.sys.point(letter, x);
            let w = exp(self.pot.eval_point(letter, x, p));
            let (k, theta) = self.grid.locate(p.y);
            if theta < 1.0 {
                entries.push((k as u32, w * (1.0 - theta)));
            }
            if theta > 0.0 {
                entries.push((k as u32 + 1, w * theta));
            }
        }
        let mut tail_mass = 0.0;
        if let Some(tail) = self.tail {
            let q = self.explicit as f64 + 1.0 + x;
            let s = tail.exponent;
            let step = self.grid.step();
            let m0 = hurwitz_zeta(s, q);
            let m1 = hurwitz_zeta(s + 1.0, q);
            let (c0, c1) = match tail.density {
                None => (m0 - m1 / step, m1 / step),
                Some((h, lambda)) => {
                    let m2 = hurwitz_zeta(s + 2.0, q);
                    let hv = h.values();
                    let a0 = hv[0];
                    let a1 = (hv[1] - hv[0]) / h.grid().step();
                    let scale = 1.0 / (lambda * h.evaluate(x));
                    (
                        scale * (a0 * m0 + (a1 - a0 / step) * m1 - (a1 / step) * m2),
                        scale * (a0 * m1 + a1 * m2) / step,
                    )
                }
            };
            tail_mass = c0 + c1;
            entries.push((0, c0));
            entries.push((1, c1));
        }
        // Stable sort keeps ascending branch order within each column.
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (col, w) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == col => last.1 += w,
                _ => merged.push((col, w)),
            }
        }
        (merged, tail_mass)
    }
}

/// The transfer operator discretized on a uniform grid, as a sparse
/// nonnegative matrix acting on node values.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    grid: Grid,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    weights: Vec<f64>,
    tail_error: f64,
    explicit_branches: u32,
}

impl TransferOperator {
    /// Assemble the matrix of `L_φ` on `grid`.
    pub fn assemble(
        sys: &SystemSpec,
        pot: &Potential,
        grid: Grid,
        trunc: &TruncationPolicy,
    ) -> Result<Self> {
        let asm = Assembler::new(sys, pot, grid)?;
        let nodes = grid.nodes();
        let rows = map_items(&nodes, |x| asm.row(x));
        let mut row_start = Vec::with_capacity(nodes.len() + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        let mut tail_mass = 0.0f64;
        row_start.push(0);
        for (row, mass) in rows {
            tail_mass = tail_mass.max(abs(mass));
            for (c, w) in row {
                cols.push(c);
                weights.push(w);
            }
            row_start.push(cols.len());
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Divergent(format!(
                "operator weights of {pot} are not finite"
            )));
        }
        // The closed-form tail is exact for the interpolant; what remains is
        // the rounding of its zeta evaluations.
        let tail_error = 64.0 * f64::EPSILON * tail_mass;
        if tail_error > trunc.epsilon_tail {
            return Err(Error::param(
                "trunc_epsilon",
                format!(
                    "tail evaluation error {tail_error:e} exceeds the requested {:e}",
                    trunc.epsilon_tail
                ),
            ));
        }
        Ok(TransferOperator {
            grid,
            row_start,
            cols,
            weights,
            tail_error,
            explicit_branches: asm.explicit,
        })
    }

    /// The grid the operator acts on.
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Estimated error of the closed-form branch tail (zero for finite systems).
    pub fn tail_error(&self) -> f64 {
        self.tail_error
    }

    /// Branches summed one by one at each node.
    pub fn explicit_branches(&self) -> u32 {
        self.explicit_branches
    }

    /// Row `j` as `(columns, weights)`.
    pub fn row(&self, j: usize) -> (&[u32], &[f64]) {
        let r = self.row_start[j]..self.row_start[j + 1];
        (&self.cols[r.clone()], &self.weights[r])
    }

    /// `L_φ` applied to node values.
    pub fn apply_values(&self, f: &[f64]) -> Vec<f64> {
        debug_assert_eq!(f.len(), self.grid.len());
        let rows: Vec<usize> = (0..self.grid.len()).collect();
        map_items(&rows, |j| {
            let (cols, ws) = self.row(j);
            let terms: Vec<f64> = cols
                .iter()
                .zip(ws)
                .map(|(&c, &w)| w * f[c as usize])
                .collect();
            pairwise_sum(&terms)
        })
    }

    /// The row vector `ℓ ↦ ℓ·A` (the discrete dual operator).
    pub fn apply_left(&self, ell: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (j, &lj) in ell.iter().enumerate() {
            if lj == 0.0 {
                continue;
            }
            let (cols, ws) = self.row(j);
            for (&c, &w) in cols.iter().zip(ws) {
                out[c as usize] += lj * w;
            }
        }
        out
    }

    /// `L_φ` applied to a grid function on the operator's grid.
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if *f.grid() != self.grid {
            return Err(Error::Mismatch("function and operator grids differ".into()));
        }
        GridFunction::new(self.grid, self.apply_values(f.values()))
    }
}

/// The operator row at an arbitrary hull point: `(L_φ f)(x) = Σ_c w_c f(x_c)`.
pub fn point_row(sys: &SystemSpec, pot: &Potential, grid: Grid, x: f64) -> Result<Vec<(u32, f64)>> {
    sys.hull.check(x)?;
    let asm = Assembler::new(sys, pot, grid)?;
    Ok(asm.row(x).0)
}

#[cfg(feature = "parallel")]
pub(crate) fn map_items<T: Copy + Sync, R: Send>(
    items: &[T],
    f: impl Fn(T) -> R + Sync + Send,
) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(|&x| f(x)).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_items<T: Copy, R>(items: &[T], f: impl Fn(T) -> R) -> Vec<R> {
    items.iter().map(|&x| f(x)).collect()
}

/// `(L_φ f)` node-wise on the grid of `f`.
pub fn apply(
    sys: &SystemSpec,
    pot: &Potential,
    f: &GridFunction,
    trunc: &TruncationPolicy,
) -> Result<GridFunction> {
    TransferOperator::assemble(sys, pot, *f.grid(), trunc)?.apply(f)
}

/// `Lⁿ_φ f`; `n = 0` returns `f`.
pub fn iterate(
    sys: &SystemSpec,
    pot: &Potential,
    f: &GridFunction,
    n: usize,
    trunc: &TruncationPolicy,
) -> Result<GridFunction> {
    if n == 0 {
        pot.validate(sys)?;
        return Ok(f.clone());
    }
    let op = TransferOperator::assemble(sys, pot, *f.grid(), trunc)?;
    let mut v = f.values().to_vec();
    for _ in 0..n {
        v = op.apply_values(&v);
    }
    GridFunction::new(*f.grid(), v)
}

/// Settings for [`solve_eigen_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Grid nodes.
    pub grid_size: usize,
    /// Tolerance on successive eigenvalues and on the residual.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Truncation policy for countable families.
    pub trunc: TruncationPolicy,
    /// Also solve on the half grid and report a Richardson-extrapolated λ.
    pub extrapolate: bool,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            grid_size: 257,
            tol: 1e-9,
            max_iter: 10_000,
            trunc: TruncationPolicy::default(),
            extrapolate: true,
        }
    }
}

/// The leading eigen-triple of the discretized operator.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenData {
    /// Leading eigenvalue λ of the discretized operator.
    pub lambda: f64,
    /// Positive eigenfunction, normalized by `μ̂(h) = 1`.
    pub h: GridFunction,
    /// Eigenmeasure on the grid: the left Perron vector, a probability vector
    /// with `μ̂(L_φ f) = λ μ̂(f)`.
    pub dual: Vec<f64>,
    /// `sup_nodes |L_φ h − λ h|` plus the branch-tail error.
    pub residual_h: f64,
    /// Collatz–Wielandt lower bound `min (L_φ h)/h`.
    pub cw_lower: f64,
    /// Collatz–Wielandt upper bound `max (L_φ h)/h`.
    pub cw_upper: f64,
    /// Power iterations performed.
    pub iterations: usize,
    /// Width of the Collatz–Wielandt bracket after each iteration.
    pub cw_widths: Vec<f64>,
    /// `(4 λ_N − λ_{N/2}) / 3` from the nested half grid, which cancels the
    /// leading `O(Δ²)` interpolation bias of λ.
    pub lambda_extrapolated: Option<f64>,
    /// Tolerance the solve was run with.
    pub tol: f64,
}

impl EigenData {
    /// `μ̂(f)` for a function on the eigen grid.
    pub fn dual_integral(&self, f: &GridFunction) -> Result<f64> {
        if f.grid() != self.h.grid() {
            return Err(Error::Mismatch("function and eigen grids differ".into()));
        }
        let terms: Vec<f64> = self
            .dual
            .iter()
            .zip(f.values())
            .map(|(m, v)| m * v)
            .collect();
        Ok(pairwise_sum(&terms))
    }

    /// The best available eigenvalue estimate: extrapolated when present.
    pub fn lambda_best(&self) -> f64 {
        self.lambda_extrapolated.unwrap_or(self.lambda)
    }
}

/// Power iteration for `(λ, h, μ̂)` from `f ≡ 1`.
pub fn solve_eigen(
    sys: &SystemSpec,
    pot: &Potential,
    grid_size: usize,
    tol: f64,
    max_iter: usize,
    trunc: &TruncationPolicy,
) -> Result<EigenData> {
    solve_eigen_with(
        sys,
        pot,
        &EigenOptions {
            grid_size,
            tol,
            max_iter,
            trunc: *trunc,
            extrapolate: true,
        },
    )
}

/// [`solve_eigen`] with all options.
pub fn solve_eigen_with(
    sys: &SystemSpec,
    pot: &Potential,
    opts: &EigenOptions,
) -> Result<EigenData> {
    if !(opts.tol > 0.0) {
        return Err(Error::param("tol", "must be positive"));
    }
    let grid = Grid::uniform(sys.hull, opts.grid_size)?;
    let op = TransferOperator::assemble(sys, pot, grid, &opts.trunc)?;
    let mut eig = power_iterate(&op, opts.tol, opts.max_iter)?;
    if opts.extrapolate {
        if let Some(coarse) = grid.coarsened() {
            let coarse_op = TransferOperator::assemble(sys, pot, coarse, &opts.trunc)?;
            let c = power_iterate(&coarse_op, opts.tol, opts.max_iter)?;
            eig.lambda_extrapolated = Some((4.0 * eig.lambda - c.lambda) / 3.0);
        }
    }
    Ok(eig)
}

/// Simultaneous right and left power iteration on an assembled operator.
pub fn power_iterate(op: &TransferOperator, tol: f64, max_iter: usize) -> Result<EigenData> {
    let n = op.grid().len();
    let mut f = vec![1.0; n];
    let mut nu = vec![1.0 / n as f64; n];
    let mut prev_lambda = f64::NAN;
    let mut widths = Vec::new();
    let mut trajectory = Vec::new();
    let mut residual = f64::INFINITY;
    for k in 1..=max_iter {
        let g = op.apply_values(&f);
        if let Some(node) = g.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::NonpositiveEigenfunction { node });
        }
        let sup_f = f.iter().copied().fold(0.0, f64::max);
        let sup_g = g.iter().copied().fold(0.0, f64::max);
        let lambda = sup_g / sup_f;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (gj, fj) in g.iter().zip(&f) {
            let r = gj / fj;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        widths.push(hi - lo);
        let diffs: Vec<f64> = g.iter().zip(&f).map(|(gj, fj)| gj - lambda * fj).collect();
        // Left vector: ν ← νA / |νA|₁.
        let nu_next = op.apply_left(&nu);
        let mass = pairwise_sum(&nu_next);
        let left_res: f64 = nu_next
            .iter()
            .zip(&nu)
            .map(|(a, b)| abs(a / mass - b))
            .fold(0.0, f64::max);
        // Normalization μ̂(h) = 1 rescales h by 1/⟨ν, f⟩.
        let pairing: Vec<f64> = nu.iter().zip(&f).map(|(a, b)| a * b).collect();
        let scale = 1.0 / pairwise_sum(&pairing);
        residual = sup_abs(&diffs) * scale;
        if k % 16 == 1 {
            trajectory.push(residual);
        }
        let converged =
            abs(lambda - prev_lambda) < tol && residual + op.tail_error() < tol && left_res < tol;
        if converged {
            let h: Vec<f64> = f.iter().map(|v| v * scale).collect();
            return Ok(EigenData {
                lambda,
                h: GridFunction::new(*op.grid(), h)?,
                dual: nu,
                residual_h: residual + op.tail_error(),
                cw_lower: lo,
                cw_upper: hi,
                iterations: k,
                cw_widths: widths,
                lambda_extrapolated: None,
                tol,
            });
        }
        prev_lambda = lambda;
        f = g.into_iter().map(|v| v / sup_g).collect();
        nu = nu_next.into_iter().map(|v| v / mass).collect();
    }
    trajectory.push(residual);
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
        trajectory,
    })
}

/// `ψ = φ − log λ + log h − log h∘T`, checked by `sup |L_ψ 1 − 1| ≤ 10·tol`.
pub fn normalize_potential(
    sys: &SystemSpec,
    pot: &Potential,
    eig: &EigenData,
) -> Result<Potential> {
    if let Some(node) = eig.h.values().iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonpositiveEigenfunction { node });
    }
    let psi = Potential::normalized(pot.clone(), eig.lambda, eig.h.clone());
    let defect = normalization_defect(sys, &psi, *eig.h.grid())?;
    let allowed = 10.0 * eig.tol.max(eig.residual_h);
    if defect > allowed {
        return Err(Error::NormalizationFailed { defect, allowed });
    }
    Ok(psi)
}

/// `sup_nodes |L_ψ 1 − 1|` on `grid`.
pub fn normalization_defect(sys: &SystemSpec, psi: &Potential, grid: Grid) -> Result<f64> {
    let op = TransferOperator::assemble(sys, psi, grid, &TruncationPolicy::new(f64::INFINITY))?;
    let ones = vec![1.0; grid.len()];
    Ok(op
        .apply_values(&ones)
        .iter()
        .fold(0.0, |m, v| m.max(abs(v - 1.0))))
}

/// `sup_nodes |L_ψⁿ f − λ^{−n} h^{−1} L_φⁿ(h f)|`.
pub fn fundamental_equation_check(
    sys: &SystemSpec,
    pot: &Potential,
    eig: &EigenData,
    f: &GridFunction,
    n: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let grid = *eig.h.grid();
    if *f.grid() != grid {
        return Err(Error::Mismatch(
            "test function must live on the eigen grid".into(),
        ));
    }
    let psi = normalize_potential(sys, pot, eig)?;
    let loose = TruncationPolicy::new(f64::INFINITY);
    let op_psi = TransferOperator::assemble(sys, &psi, grid, &loose)?;
    let op_phi = TransferOperator::assemble(sys, pot, grid, &loose)?;
    let mut lhs = f.values().to_vec();
    let mut rhs: Vec<f64> = f
        .values()
        .iter()
        .zip(eig.h.values())
        .map(|(a, b)| a * b)
        .collect();
    for _ in 0..n {
        lhs = op_psi.apply_values(&lhs);
        rhs = op_phi.apply_values(&rhs);
    }
    let scale = powf(eig.lambda, -(n as f64));
    Ok(lhs
        .iter()
        .zip(&rhs)
        .zip(eig.h.values())
        .fold(0.0, |m, ((l, r), h)| m.max(abs(l - scale * r / h))))
}

/// `sup_nodes |λ^{−n} L_φⁿ f − h·μ̂(f)|` for `n = 1..=n_max`.
pub fn uniform_convergence_profile(
    sys: &SystemSpec,
    pot: &Potential,
    eig: &EigenData,
    f: &GridFunction,
    n_max: usize,
) -> Result<Vec<f64>> {
    let grid = *eig.h.grid();
    let op = TransferOperator::assemble(sys, pot, grid, &TruncationPolicy::new(f64::INFINITY))?;
    let target = eig.dual_integral(f)?;
    let mut v = f.values().to_vec();
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        v = op.apply_values(&v);
        for x in v.iter_mut() {
            *x /= eig.lambda;
        }
        out.push(
            v.iter()
                .zip(eig.h.values())
                .fold(0.0f64, |m, (a, h)| m.max(abs(a - h * target))),
        );
    }
    Ok(out)
}

/// `log λ` with λ taken from [`EigenData::lambda_best`].
pub fn log_lambda(eig: &EigenData) -> f64 {
    ln(eig.lambda_best())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::builtin_system;

    fn unit(n: usize) -> Grid {
        Grid::uniform(crate::systems::Interval::UNIT, n).unwrap()
    }

    #[test]
    fn doubling_constants() {
        let d = builtin_system("doubling", &[]).unwrap();
        let one = GridFunction::constant(unit(33), 1.0);
        let t = TruncationPolicy::default();
        let zero = Potential::geometric(0.0);
        assert!(apply(&d, &zero, &one, &t)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 2.0));
        let leb = Potential::geometric(1.0);
        assert!(apply(&d, &leb, &one, &t)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 1.0));
        let it = iterate(&d, &zero, &one, 10, &t).unwrap();
        assert!(it.values().iter().all(|&v| v == 1024.0));
        assert_eq!(iterate(&d, &zero, &one, 0, &t).unwrap(), one);
    }

    #[test]
    fn cantor_iterate_closed_form() {
        let c = builtin_system("linear_cantor", &[2.0, 3.0]).unwrap();
        let one = GridFunction::constant(unit(65), 1.0);
        let v = iterate(
            &c,
            &Potential::geometric(1.0),
            &one,
            5,
            &TruncationPolicy::default(),
        )
        .unwrap();
        let expected = (2.0f64 / 3.0).powi(5);
        assert!(v.values().iter().all(|&x| (x - expected).abs() < 1e-15));
    }

    #[test]
    fn gauss_constant_at_zero_is_basel() {
        let g = builtin_system("gauss", &[]).unwrap();
        let one = GridFunction::constant(unit(257), 1.0);
        let v = apply(
            &g,
            &Potential::geometric(1.0),
            &one,
            &TruncationPolicy::default(),
        )
        .unwrap();
        let pi2_6 = core::f64::consts::PI.powi(2) / 6.0;
        assert!((v.values()[0] - pi2_6).abs() < 1e-13);
        // and at x = 1: ζ(2, 2)
        assert!((v.values()[256] - (pi2_6 - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn gauss_linear_function_tail_is_exact() {
        // L(x)(y) = Σ (n+y)^{-3} = ζ(3, 1+y) for the identity function,
        // which the interpolant reproduces exactly.
        let g = builtin_system("gauss", &[]).unwrap();
        let grid = unit(129);
        let f = GridFunction::from_fn(grid, |x| x);
        let v = apply(
            &g,
            &Potential::geometric(1.0),
            &f,
            &TruncationPolicy::default(),
        )
        .unwrap();
        for (k, &val) in v.values().iter().enumerate() {
            let y = grid.node(k);
            assert!((val - hurwitz_zeta(3.0, 1.0 + y)).abs() < 1e-13);
        }
    }

    #[test]
    fn gauss_divergent_below_half() {
        let g = builtin_system("gauss", &[]).unwrap();
        let one = GridFunction::constant(unit(17), 1.0);
        let r = apply(
            &g,
            &Potential::geometric(0.4),
            &one,
            &TruncationPolicy::default(),
        );
        assert!(matches!(r, Err(Error::Divergent(_))));
    }

    #[test]
    fn doubling_eigen_triple() {
        let d = builtin_system("doubling", &[]).unwrap();
        let e = solve_eigen(
            &d,
            &Potential::geometric(0.0),
            65,
            1e-12,
            100,
            &Default::default(),
        )
        .unwrap();
        assert_eq!(e.lambda, 2.0);
        assert!(e.h.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
        assert!(e.cw_lower <= e.lambda && e.lambda <= e.cw_upper);
        assert!((e.dual.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cantor_bowen_root_eigenvalue_is_one() {
        let c = builtin_system("linear_cantor", &[2.0, 3.0]).unwrap();
        let s = 2f64.ln() / 3f64.ln();
        let e = solve_eigen(
            &c,
            &Potential::geometric(s),
            129,
            1e-12,
            100,
            &Default::default(),
        )
        .unwrap();
        assert!((e.lambda - 1.0).abs() < 1e-14);
        assert!(e.h.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn gauss_eigenfunction_matches_closed_form() {
        let g = builtin_system("gauss", &[]).unwrap();
        let e = solve_eigen(
            &g,
            &Potential::geometric(1.0),
            257,
            1e-11,
            500,
            &Default::default(),
        )
        .unwrap();
        assert!((e.lambda - 1.0).abs() < 2e-6);
        let ext = e.lambda_extrapolated.unwrap();
        assert!((ext - 1.0).abs() < 1e-7, "{ext}");
        let ln2 = core::f64::consts::LN_2;
        let grid = *e.h.grid();
        for (k, &v) in e.h.values().iter().enumerate() {
            let x = grid.node(k);
            assert!((v - 1.0 / (ln2 * (1.0 + x))).abs() < 1e-4);
        }
        for w in e.cw_widths.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn normalized_doubling() {
        let d = builtin_system("doubling", &[]).unwrap();
        let phi = Potential::geometric(0.0);
        let e = solve_eigen(&d, &phi, 33, 1e-12, 100, &Default::default()).unwrap();
        let psi = normalize_potential(&d, &phi, &e).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert!((psi.evaluate(&d, 1, x) + 2f64.ln()).abs() < 1e-15);
        }
        let f = GridFunction::from_fn(*e.h.grid(), |x| x);
        assert!(fundamental_equation_check(&d, &phi, &e, &f, 3).unwrap() < 1e-15);
    }

    #[test]
    fn gauss_fundamental_equation() {
        let g = builtin_system("gauss", &[]).unwrap();
        let phi = Potential::geometric(1.0);
        let e = solve_eigen(&g, &phi, 257, 1e-11, 500, &Default::default()).unwrap();
        let psi = normalize_potential(&g, &phi, &e).unwrap();
        assert!(normalization_defect(&g, &psi, *e.h.grid()).unwrap() < 1e-9);
        let f = GridFunction::from_fn(*e.h.grid(), |x| x * x);
        assert!(fundamental_equation_check(&g, &phi, &e, &f, 2).unwrap() < 1e-5);
    }

    #[test]
    fn duality_at_fixed_point() {
        let p = builtin_system("perturbed_doubling", &[0.05]).unwrap();
        let phi = Potential::geometric(1.0);
        let e = solve_eigen(&p, &phi, 129, 1e-12, 500, &Default::default()).unwrap();
        let op = TransferOperator::assemble(&p, &phi, *e.h.grid(), &Default::default()).unwrap();
        let f = GridFunction::from_fn(*e.h.grid(), |x| (6.0 * x).sin());
        let lf = op.apply(&f).unwrap();
        let gap = e.dual_integral(&lf).unwrap() - e.lambda * e.dual_integral(&f).unwrap();
        assert!(gap.abs() < 1e-11);
    }

    #[test]
    fn point_row_matches_matrix_row_at_nodes() {
        let p = builtin_system("perturbed_doubling", &[0.05]).unwrap();
        let phi = Potential::geometric(1.0);
        let grid = unit(33);
        let op = TransferOperator::assemble(&p, &phi, grid, &Default::default()).unwrap();
        let row = point_row(&p, &phi, grid, grid.node(7)).unwrap();
        let (cols, ws) = op.row(7);
        assert_eq!(row.len(), cols.len());
        for ((c, w), (c2, w2)) in row.iter().zip(cols.iter().zip(ws)) {
            assert_eq!(c, c2);
            assert_eq!(w, w2);
        }
    }
}
