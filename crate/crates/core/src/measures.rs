//! Cylinder approximations of the conformal measure `μ` and the invariant
//! Gibbs measure `m = h·μ`.
//!
//! The depth-`n` measure gives each word `w` of length `n` the mass
//! `exp(S_nφ(g_w a) − nP̂)`, normalized, where `a` is the anchor. For finite
//! systems whose word count fits the budget every word becomes a leaf cell.
//!
//! Otherwise (and always for countable families) the measure is a tree of
//! cells. A cell of depth `k < n` stands for all of its depth-`n` refinements at
//! once, and a tail cell stands for every letter from some index on at its last
//! position. Their masses and integrals are exact sums over the refinements,
//! computed with the row vectors `ℓ_j = e_a·(e^{−P}A)^j` of the discretized
//! transfer operator: summing over the refinements of `w` is one application
//! of `L^{n−k}` to the function `y ↦ exp(S_kφ(g_w y) − kP)·G(g_w y, g_{σw} y)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::math::{abs, exp, hurwitz_zeta, pairwise_sum};
use crate::potentials::{BowenSequence, Potential, PotentialKind};
use crate::systems::{CylinderWord, SystemSpec, TruncationPolicy};
use crate::transfer::{map_items, point_row, TransferOperator};

/// How a cell relates to the depth-`n` words it represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    /// A single depth-`n` word.
    Leaf,
    /// All depth-`n` refinements of a shorter word.
    Collapsed,
    /// All words whose last explicit letter is at least the cell's last letter.
    Tail,
}

/// One cell of a cylinder measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// The word; for tail cells the last letter is the first one aggregated.
    pub word: CylinderWord,
    /// Cell kind.
    pub kind: CellKind,
    /// `g_w(a)`.
    pub representative: f64,
    /// `g_{σw}(a)`, the image of the representative under `T`.
    pub image: f64,
    /// Normalized mass.
    pub weight: f64,
    /// Unnormalized conformal mass.
    mu_raw: f64,
}

impl Cell {
    /// Label for reports: the dash-joined word, with `+` marking tail cells.
    pub fn label(&self) -> String {
        match self.kind {
            CellKind::Tail => format!("{}+", self.word),
            _ => format!("{}", self.word),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Settings for [`build_eigenmeasure_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureOptions {
    /// Anchor `a`; the hull midpoint when `None`.
    pub anchor: Option<f64>,
    /// Grid used for aggregated cells.
    pub grid_size: usize,
    /// Largest word count enumerated exhaustively.
    pub word_budget: usize,
    /// Cells lighter than this fraction of the total are not refined further.
    pub cell_floor: f64,
    /// Largest number of cells in a tree measure.
    pub max_cells: usize,
    /// Truncation policy for the transfer operator.
    pub trunc: TruncationPolicy,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions {
            anchor: None,
            grid_size: 257,
            word_budget: 1 << 18,
            cell_floor: 1e-3,
            max_cells: 1 << 20,
            trunc: TruncationPolicy::default(),
        }
    }
}

/// Vector-valued integrand `G(x, Tx)` writing one value per component.
pub type Integrand<'a> = dyn Fn(f64, f64, &mut [f64]) + Sync + 'a;

fn unit(_: f64, _: f64, out: &mut [f64]) {
    out[0] = 1.0;
}

/// Explicit letters summed in a tail cell before the power-law remainder.
const TAIL_WINDOW: u32 = 32;
/// Letters always enumerated under a node of a countable family.
const MIN_CHILDREN: u32 = 3;

/// Grid data for exact sums over the refinements of aggregated cells.
#[derive(Debug)]
struct Aggregator {
    grid: Grid,
    /// `ell[j]` for `j = 1..=n` (`ell[0]` is unused: level 0 is evaluation at `a`).
    ell: Vec<Vec<f64>>,
}

/// A cylinder measure of depth `n`.
#[derive(Debug, Clone)]
pub struct CylinderMeasure {
    /// Depth `n`.
    pub depth: usize,
    /// Anchor `a`.
    pub anchor: f64,
    /// The pressure `P̂` used in the weights.
    pub pressure_used: f64,
    /// Cells in lexicographic order of their words.
    pub cells: Vec<Cell>,
    /// Mass discarded by truncation (the closed-form tails keep this at 0).
    pub truncated_mass: f64,
    /// Density `h` for the invariant measure `m = h·μ`; `None` for `μ`.
    pub density: Option<GridFunction>,
    /// Sum of the unnormalized cell masses (density-weighted for `h·μ`).
    total: f64,
    system: SystemSpec,
    potential: Potential,
    aggregator: Option<Arc<Aggregator>>,
}

/// `(S_kφ(g_w y), g_w y, g_{σw} y)`.
fn walk(sys: &SystemSpec, pot: &Potential, word: &[u32], y: f64) -> (f64, f64, f64) {
    let mut z = y;
    let mut image = y;
    let mut s = 0.0;
    for &l in word.iter().rev() {
        image = z;
        let p = sys.point(l, z);
        s += pot.eval_point(l, z, p);
        z = p.y;
    }
    (s, z, image)
}

impl CylinderMeasure {
    /// The system the measure lives on.
    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    /// The potential of the weights.
    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// Whether every cell is a depth-`n` leaf.
    pub fn is_exhaustive(&self) -> bool {
        self.cells.iter().all(|c| c.kind == CellKind::Leaf)
    }

    /// Total normalized mass of tail cells.
    pub fn tail_mass(&self) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.kind == CellKind::Tail)
            .fold(0.0, |acc, c| acc + c.weight)
    }

    /// Largest single cell weight.
    pub fn max_weight(&self) -> f64 {
        self.cells.iter().fold(0.0, |m, c| m.max(c.weight))
    }

    /// Sum over refinements `u` (up to `e^{−nP}`) of `G(g_u a, g_{σu} a)`
    /// weighted by the conformal masses: the unnormalized `μ`-integrals of the
    /// `dim` components of `G` over the cell.
    fn cell_integral(&self, cell: &Cell, dim: usize, g: &Integrand<'_>) -> Vec<f64> {
        match cell.kind {
            CellKind::Leaf => {
                let mut out = vec![0.0; dim];
                g(cell.representative, cell.image, &mut out);
                for v in out.iter_mut() {
                    *v *= cell.mu_raw;
                }
                out
            }
            CellKind::Collapsed => {
                let agg = self
                    .aggregator
                    .as_ref()
                    .expect("aggregated cell without grid data");
                let k = cell.word.depth();
                let w = cell.word.letters();
                let shift = k as f64 * self.pressure_used;
                self.level_integral(agg, self.depth - k, dim, &|y, out| {
                    let (s, x, tx) = walk(&self.system, &self.potential, w, y);
                    g(x, tx, out);
                    let e = exp(s - shift);
                    for v in out.iter_mut() {
                        *v *= e;
                    }
                })
            }
            CellKind::Tail => {
                let agg = self
                    .aggregator
                    .as_ref()
                    .expect("tail cell without grid data");
                let k = cell.word.depth();
                self.level_integral(agg, self.depth - k, dim, &|y, out| {
                    self.tail_sum(&cell.word, y, g, out)
                })
            }
        }
    }

    /// `L^j` of the vector function `v` at the anchor, through the precomputed
    /// row vectors.
    fn level_integral(
        &self,
        agg: &Aggregator,
        j: usize,
        dim: usize,
        v: &dyn Fn(f64, &mut [f64]),
    ) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        if j == 0 {
            v(self.anchor, &mut out);
            return out;
        }
        let ell = &agg.ell[j];
        let mut columns = vec![Vec::with_capacity(ell.len()); dim];
        let mut buf = vec![0.0; dim];
        for (i, &l) in ell.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            v(agg.grid.node(i), &mut buf);
            for (col, b) in columns.iter_mut().zip(&buf) {
                col.push(l * b);
            }
        }
        for (o, col) in out.iter_mut().zip(&columns) {
            *o = pairwise_sum(col);
        }
        out
    }

    /// `Σ_{i ≥ i₀} exp(S_kφ(g_{p i} y) − kP)·G(g_{p i} y, g_{σ(p i)} y)` for the
    /// tail cell `p·i₀`, with a closed-form power-law remainder.
    fn tail_sum(&self, word: &CylinderWord, y: f64, g: &Integrand<'_>, out: &mut [f64]) {
        let dim = out.len();
        let letters = word.letters();
        let k = letters.len();
        let prefix = &letters[..k - 1];
        let first = letters[k - 1];
        let shift = k as f64 * self.pressure_used;
        let sys = &self.system;
        let pot = &self.potential;
        // R(z) = exp(S_{k−1}φ(g_p z) − kP)·G(g_p z, g_{σp} z), with g_{σp} z = y at k = 1.
        let r = |z: f64, buf: &mut [f64]| -> f64 {
            let (s, x, tx) = walk(sys, pot, prefix, z);
            let tx = if k == 1 { y } else { tx };
            g(x, tx, buf);
            exp(s - shift)
        };
        let mut columns = vec![Vec::with_capacity(TAIL_WINDOW as usize + 1); dim];
        let mut buf = vec![0.0; dim];
        for i in first..first + TAIL_WINDOW {
            let p = sys.point(i, y);
            let e = exp(pot.eval_point(i, y, p)) * r(p.y, &mut buf);
            for (col, b) in columns.iter_mut().zip(&buf) {
                col.push(e * b);
            }
        }
        // Beyond the window exp φ(g_i y) = (i + y)^{−2t} and the rest is the
        // smooth function R(z) of z = g_i(y) near 0; fit it by a quadratic.
        let t = match pot.kind {
            PotentialKind::Geometric { t } => t,
            _ => unreachable!("tail cells are only built for geometric potentials"),
        };
        let start = (first + TAIL_WINDOW) as f64;
        let z_max = 1.0 / (start + y);
        let hstep = 0.5 * z_max;
        let (mut b0, mut b1, mut b2) = (vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]);
        let e0 = r(0.0, &mut b0);
        let e1 = r(hstep, &mut b1);
        let e2 = r(z_max, &mut b2);
        let q = start + y;
        let s = 2.0 * t;
        let moments = [
            hurwitz_zeta(s, q),
            hurwitz_zeta(s + 1.0, q),
            hurwitz_zeta(s + 2.0, q),
        ];
        for (d, col) in columns.iter_mut().enumerate() {
            let (r0, r1, r2) = (e0 * b0[d], e1 * b1[d], e2 * b2[d]);
            let c2 = (r2 - 2.0 * r1 + r0) / (2.0 * hstep * hstep);
            let c1 = (r1 - r0) / hstep - c2 * hstep;
            col.push(r0 * moments[0] + c1 * moments[1] + c2 * moments[2]);
        }
        for (o, col) in out.iter_mut().zip(&columns) {
            *o = pairwise_sum(col);
        }
    }

    fn density_at(&self, x: f64) -> f64 {
        match &self.density {
            Some(h) => h.evaluate(x),
            None => 1.0,
        }
    }

    /// Unnormalized integrals of `ρ·G` per cell, with `ρ` the density (or 1).
    fn weighted_integrals(&self, dim: usize, g: &Integrand<'_>) -> Vec<Vec<f64>> {
        let indices: Vec<usize> = (0..self.cells.len()).collect();
        map_items(&indices, |i| {
            self.cell_integral(&self.cells[i], dim, &|x, tx, out: &mut [f64]| {
                g(x, tx, out);
                let rho = self.density_at(x);
                for v in out.iter_mut() {
                    *v *= rho;
                }
            })
        })
    }

    fn normalizer(&self) -> f64 {
        self.total
    }

    /// `∫ G_d(x, Tx) dν` for every component `d < dim` of `G`, summed exactly
    /// over aggregated cells.
    pub fn integrate_many(&self, dim: usize, g: &Integrand<'_>) -> Vec<f64> {
        let per_cell = self.weighted_integrals(dim, g);
        (0..dim)
            .map(|d| {
                let col: Vec<f64> = per_cell.iter().map(|v| v[d]).collect();
                pairwise_sum(&col) / self.normalizer()
            })
            .collect()
    }

    /// `∫ G(x, Tx) dν` for this measure `ν`.
    pub fn integrate_pair(&self, g: &(dyn Fn(f64, f64) -> f64 + Sync)) -> f64 {
        self.integrate_many(1, &|x, tx, out: &mut [f64]| out[0] = g(x, tx))[0]
    }

    /// Mass of the cylinder of `word` by direct summation over its refinements.
    pub fn cylinder_mass(&self, word: &CylinderWord) -> Result<f64> {
        self.system.check_word(word)?;
        let k = word.depth();
        if k == 0 {
            return Ok(1.0);
        }
        if k > self.depth {
            return Err(Error::param("word", "longer than the measure depth"));
        }
        if let Some(agg) = &self.aggregator {
            let cell = Cell {
                word: word.clone(),
                kind: if k == self.depth {
                    CellKind::Leaf
                } else {
                    CellKind::Collapsed
                },
                representative: 0.0,
                image: 0.0,
                weight: 0.0,
                mu_raw: 0.0,
            };
            let raw = if k == self.depth {
                let (s, x, _) = walk(&self.system, &self.potential, word.letters(), self.anchor);
                exp(s - k as f64 * self.pressure_used) * self.density_at(x)
            } else {
                let _ = agg;
                self.cell_integral(&cell, 1, &|x, _, out: &mut [f64]| {
                    out[0] = self.density_at(x)
                })[0]
            };
            return Ok(raw / self.normalizer());
        }
        // Exhaustive measures: sum the leaves under the word.
        Ok(self
            .cells
            .iter()
            .filter(|c| c.word.letters().starts_with(word.letters()))
            .map(|c| c.weight)
            .sum())
    }

    /// Masses of every complete cylinder of depth `m` present in the cell
    /// structure, in lexicographic order.
    pub fn cylinder_masses(&self, m: usize) -> Vec<(CylinderWord, f64)> {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for c in &self.cells {
            let explicit = match c.kind {
                CellKind::Tail => c.word.depth() - 1,
                _ => c.word.depth(),
            };
            if explicit >= m && m > 0 {
                *map.entry(c.word.letters()[..m].to_vec()).or_insert(0.0) += c.weight;
            }
        }
        map.into_iter().map(|(w, v)| (CylinderWord(w), v)).collect()
    }
}

/// Depth-`n` conformal-measure approximation with weights `∝ exp(S_nφ(g_w a) − nP̂)`.
pub fn build_eigenmeasure(
    sys: &SystemSpec,
    pot: &Potential,
    n: usize,
    p_hat: f64,
    trunc: &TruncationPolicy,
) -> Result<CylinderMeasure> {
    build_eigenmeasure_with(
        sys,
        pot,
        n,
        p_hat,
        &MeasureOptions {
            trunc: *trunc,
            ..MeasureOptions::default()
        },
    )
}

/// [`build_eigenmeasure`] with all options.
pub fn build_eigenmeasure_with(
    sys: &SystemSpec,
    pot: &Potential,
    n: usize,
    p_hat: f64,
    opts: &MeasureOptions,
) -> Result<CylinderMeasure> {
    if n == 0 {
        return Err(Error::param("depth", "must be at least 1"));
    }
    if !p_hat.is_finite() {
        return Err(Error::param("pressure", "must be finite"));
    }
    pot.validate(sys)?;
    let anchor = opts.anchor.unwrap_or_else(|| sys.hull.midpoint());
    sys.hull.check(anchor)?;
    let mut measure = CylinderMeasure {
        depth: n,
        anchor,
        pressure_used: p_hat,
        cells: Vec::new(),
        truncated_mass: 0.0,
        density: None,
        total: 0.0,
        system: sys.clone(),
        potential: pot.clone(),
        aggregator: None,
    };
    let exhaustive = sys
        .finite_count()
        .map(|k| {
            (k as u128)
                .checked_pow(n as u32)
                .is_some_and(|c| c <= opts.word_budget as u128)
        })
        .unwrap_or(false);
    if exhaustive {
        measure.cells = enumerate_leaves(sys, pot, n, p_hat, anchor);
    } else {
        if sys.is_countable() && pot.geometric_t().is_none() {
            return Err(Error::Unsupported(format!(
                "cylinder measures on countable families need a geometric potential, got {pot}"
            )));
        }
        let grid = Grid::uniform(sys.hull, opts.grid_size)?;
        let op = TransferOperator::assemble(sys, pot, grid, &opts.trunc)?;
        let factor = exp(-p_hat);
        let mut ell = vec![Vec::new(); n + 1];
        let mut first = vec![0.0; grid.len()];
        for (c, w) in point_row(sys, pot, grid, anchor)? {
            first[c as usize] += w * factor;
        }
        ell[1] = first;
        for j in 2..=n {
            let mut next = op.apply_left(&ell[j - 1]);
            for v in next.iter_mut() {
                *v *= factor;
            }
            ell[j] = next;
        }
        let total: f64 = pairwise_sum(&ell[n]);
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::Underflow("cylinder masses"));
        }
        measure.aggregator = Some(Arc::new(Aggregator { grid, ell }));
        let mut cells = Vec::new();
        grow_tree(
            &measure,
            &CylinderWord::empty(),
            total * opts.cell_floor,
            opts,
            &mut cells,
        )?;
        measure.cells = cells;
    }
    let total = pairwise_sum(&measure.cells.iter().map(|c| c.mu_raw).collect::<Vec<_>>());
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Underflow("cylinder weights"));
    }
    for c in measure.cells.iter_mut() {
        c.weight = c.mu_raw / total;
    }
    measure.total = total;
    Ok(measure)
}

/// Every depth-`n` word of a finite system, lexicographically.
fn enumerate_leaves(
    sys: &SystemSpec,
    pot: &Potential,
    n: usize,
    p_hat: f64,
    anchor: f64,
) -> Vec<Cell> {
    let letters = sys.finite_count().expect("finite system") as u32;
    // (suffix word, point, Birkhoff sum); prefixing in the outer loop keeps order.
    let mut level: Vec<(Vec<u32>, f64, f64)> = vec![(Vec::new(), anchor, 0.0)];
    let mut images: Vec<f64> = vec![anchor];
    for _ in 0..n {
        let mut next = Vec::with_capacity(level.len() * letters as usize);
        let mut next_images = Vec::with_capacity(level.len() * letters as usize);
        for l in 1..=letters {
            for (suffix, z, s) in &level {
                let p = sys.point(l, *z);
                let mut w = Vec::with_capacity(suffix.len() + 1);
                w.push(l);
                w.extend_from_slice(suffix);
                next.push((w, p.y, s + pot.eval_point(l, *z, p)));
                next_images.push(*z);
            }
        }
        level = next;
        images = next_images;
    }
    let shift = n as f64 * p_hat;
    level
        .into_iter()
        .zip(images)
        .map(|((w, x, s), image)| Cell {
            word: CylinderWord(w),
            kind: CellKind::Leaf,
            representative: x,
            image,
            weight: 0.0,
            mu_raw: exp(s - shift),
        })
        .collect()
}

/// Raw mass of the cylinder `word` (a leaf when it has full depth).
fn raw_mass(m: &CylinderMeasure, word: &CylinderWord) -> (f64, f64, f64) {
    let k = word.depth();
    let (s, x, tx) = walk(&m.system, &m.potential, word.letters(), m.anchor);
    if k == m.depth {
        return (exp(s - k as f64 * m.pressure_used), x, tx);
    }
    let cell = Cell {
        word: word.clone(),
        kind: CellKind::Collapsed,
        representative: x,
        image: tx,
        weight: 0.0,
        mu_raw: 0.0,
    };
    (m.cell_integral(&cell, 1, &unit)[0], x, tx)
}

fn grow_tree(
    m: &CylinderMeasure,
    parent: &CylinderWord,
    floor: f64,
    opts: &MeasureOptions,
    out: &mut Vec<Cell>,
) -> Result<()> {
    let child_depth = parent.depth() + 1;
    let push = |out: &mut Vec<Cell>, cell: Cell| -> Result<()> {
        if out.len() >= opts.max_cells {
            return Err(Error::BudgetExceeded {
                what: "cylinder measure cells",
                requested: out.len() as u128 + 1,
                cap: opts.max_cells as u128,
            });
        }
        out.push(cell);
        Ok(())
    };
    let finite = m.system.finite_count();
    let mut letter = 1u32;
    loop {
        if let Some(count) = finite {
            if letter as usize > count {
                return Ok(());
            }
        }
        let word = parent.concat(&CylinderWord(vec![letter]));
        let (mass, x, tx) = raw_mass(m, &word);
        if finite.is_none() && letter > MIN_CHILDREN && mass < floor {
            let mut tail = Cell {
                word,
                kind: CellKind::Tail,
                representative: x,
                image: tx,
                weight: 0.0,
                mu_raw: 0.0,
            };
            tail.mu_raw = m.cell_integral(&tail, 1, &unit)[0];
            return push(out, tail);
        }
        if child_depth == m.depth {
            push(
                out,
                Cell {
                    word,
                    kind: CellKind::Leaf,
                    representative: x,
                    image: tx,
                    weight: 0.0,
                    mu_raw: mass,
                },
            )?;
        } else if mass >= floor {
            grow_tree(m, &word, floor, opts, out)?;
        } else {
            push(
                out,
                Cell {
                    word,
                    kind: CellKind::Collapsed,
                    representative: x,
                    image: tx,
                    weight: 0.0,
                    mu_raw: mass,
                },
            )?;
        }
        letter += 1;
    }
}

/// `m = h·μ`: the same cells reweighted by the density.
pub fn invariant_measure(mu: &CylinderMeasure, h: &GridFunction) -> Result<CylinderMeasure> {
    if mu.density.is_some() {
        return Err(Error::Mismatch("measure already carries a density".into()));
    }
    if let Some(node) = h.values().iter().position(|&v| !(v > 0.0)) {
        return Err(Error::NonpositiveEigenfunction { node });
    }
    let mut m = mu.clone();
    m.density = Some(h.clone());
    let masses: Vec<f64> = m
        .weighted_integrals(1, &unit)
        .into_iter()
        .map(|v| v[0])
        .collect();
    let total = pairwise_sum(&masses);
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Underflow("invariant measure weights"));
    }
    for (c, w) in m.cells.iter_mut().zip(masses) {
        c.weight = w / total;
    }
    m.total = total;
    Ok(m)
}

/// `∫ f dν`; on leaf cells this is `Σ_w weight(w)·f(g_w a)`.
pub fn integrate(mu: &CylinderMeasure, f: &(dyn Fn(f64) -> f64 + Sync)) -> f64 {
    mu.integrate_pair(&|x, _| f(x))
}

/// `max_f |∫ f∘T dν − ∫ f dν|` over the test functions, with `T(g_w a)` the
/// depth-`(n−1)` representative `g_{σw} a`.
pub fn invariance_verify(m: &CylinderMeasure, test_fns: &[&(dyn Fn(f64) -> f64 + Sync)]) -> f64 {
    m.integrate_many(test_fns.len(), &|x, tx, out: &mut [f64]| {
        for (o, f) in out.iter_mut().zip(test_fns) {
            *o = f(tx) - f(x);
        }
    })
    .into_iter()
    .fold(0.0, |worst, gap| worst.max(abs(gap)))
}

/// The default test functions `1, x, x², sin 2πx`.
pub fn default_test_functions() -> [fn(f64) -> f64; 4] {
    fn one(_: f64) -> f64 {
        1.0
    }
    fn ident(x: f64) -> f64 {
        x
    }
    fn square(x: f64) -> f64 {
        x * x
    }
    fn wave(x: f64) -> f64 {
        crate::math::sin(2.0 * core::f64::consts::PI * x)
    }
    [one, ident, square, wave]
}

/// Per-depth summary of the Gibbs sandwich.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsLevel {
    /// Cylinder depth `m`.
    pub m: usize,
    /// Cylinders checked.
    pub count: usize,
    /// Smallest ratio `μ̂(cyl) / exp(S_mφ − mP̂)`.
    pub min_ratio: f64,
    /// Largest ratio.
    pub max_ratio: f64,
    /// `Ĉ e^{−K̂_m}`.
    pub lower_bound: f64,
    /// `e^{K̂_m}`.
    pub upper_bound: f64,
    /// Whether every ratio lies within the bounds (relative slack 1e-9).
    pub ok: bool,
}

/// Outcome of [`gibbs_verify`].
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsReport {
    /// Empirical constant `Ĉ` (smallest ratio at depth 1).
    pub c_hat: f64,
    /// One entry per depth resolved by the cell structure.
    pub levels: Vec<GibbsLevel>,
}

impl GibbsReport {
    /// Whether every level passed.
    pub fn passed(&self) -> bool {
        self.levels.iter().all(|l| l.ok)
    }
}

fn check_same_system(sys: &SystemSpec, mu: &CylinderMeasure) -> Result<()> {
    if *sys != mu.system {
        return Err(Error::Mismatch(format!(
            "measure built on `{}`, checked against `{}`",
            mu.system.name, sys.name
        )));
    }
    Ok(())
}

/// Check `Ĉ e^{−K̂_m} ≤ μ̂(cyl)/exp(S_mφ(g_w a) − mP̂) ≤ e^{K̂_m}` for all depths `m ≤ n`.
pub fn gibbs_verify(
    sys: &SystemSpec,
    pot: &Potential,
    mu: &CylinderMeasure,
    k: &BowenSequence,
    p_hat: f64,
) -> Result<GibbsReport> {
    check_same_system(sys, mu)?;
    const SLACK: f64 = 1e-9;
    let mut ratios_by_level = Vec::with_capacity(mu.depth);
    for m in 1..=mu.depth {
        let ratios: Vec<f64> = mu
            .cylinder_masses(m)
            .into_iter()
            .map(|(w, mass)| {
                let (s, _, _) = walk(sys, pot, w.letters(), mu.anchor);
                mass / exp(s - m as f64 * p_hat)
            })
            .collect();
        ratios_by_level.push(ratios);
    }
    let c_hat = ratios_by_level[0]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let mut levels = Vec::with_capacity(mu.depth);
    for (idx, ratios) in ratios_by_level.iter().enumerate() {
        // Aggregated cells may leave the deepest levels unresolved.
        if ratios.is_empty() {
            continue;
        }
        let m = idx + 1;
        let km = k.require(m)?;
        let lower_bound = c_hat * exp(-km);
        let upper_bound = exp(km);
        let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
        levels.push(GibbsLevel {
            m,
            count: ratios.len(),
            min_ratio,
            max_ratio,
            lower_bound,
            upper_bound,
            ok: min_ratio >= lower_bound * (1.0 - SLACK)
                && max_ratio <= upper_bound * (1.0 + SLACK),
        });
    }
    Ok(GibbsReport { c_hat, levels })
}

/// `max_A |μ̂(T A) − λ̂ ∫_A e^{−φ} dμ̂|` over cylinders `A` of depth `1..n−1`.
pub fn jacobian_verify(
    sys: &SystemSpec,
    pot: &Potential,
    mu: &CylinderMeasure,
    lambda_hat: f64,
) -> Result<f64> {
    check_same_system(sys, mu)?;
    if mu.density.is_some() {
        return Err(Error::Unsupported(
            "the Jacobian identity concerns μ, not h·μ".into(),
        ));
    }
    if mu.depth < 2 {
        return Err(Error::param(
            "depth",
            "the Jacobian check needs depth at least 2",
        ));
    }
    let normalizer = mu.normalizer();
    // ∫_cell e^{−φ(x)} dμ̂ with φ(x) = φ(g_{i₁}(Tx)) for the cell's first letter.
    let indices: Vec<usize> = (0..mu.cells.len()).collect();
    let contributions: Vec<f64> = map_items(&indices, |i| {
        let c = &mu.cells[i];
        let first = c.word.letters()[0];
        if c.kind == CellKind::Tail && c.word.depth() == 1 {
            return 0.0;
        }
        let g = |_: f64, tx: f64, out: &mut [f64]| out[0] = exp(-pot.evaluate(sys, first, tx));
        mu.cell_integral(c, 1, &g)[0] / normalizer
    });
    let mut worst = 0.0f64;
    for k in 1..mu.depth {
        let mut rhs: BTreeMap<&[u32], f64> = BTreeMap::new();
        for (c, v) in mu.cells.iter().zip(&contributions) {
            let explicit = match c.kind {
                CellKind::Tail => c.word.depth() - 1,
                _ => c.word.depth(),
            };
            if explicit >= k {
                *rhs.entry(&c.word.letters()[..k]).or_insert(0.0) += v;
            }
        }
        let images: BTreeMap<Vec<u32>, f64> = mu
            .cylinder_masses(k - 1)
            .into_iter()
            .map(|(w, v)| (w.0, v))
            .collect();
        for (word, integral) in rhs {
            let shifted = &word[1..];
            let image_mass = if shifted.is_empty() {
                1.0
            } else {
                match images.get(shifted) {
                    Some(&v) => v,
                    None => mu.cylinder_mass(&CylinderWord(shifted.to_vec()))?,
                }
            };
            worst = worst.max(abs(image_mass - lambda_hat * integral));
        }
    }
    Ok(worst)
}

/// Total-variation distance of two measures on the same system, restricted to
/// the partition formed by the depth-`m` cylinders resolved in both and one
/// cell holding the remaining mass.
///
/// Coarsening never increases the distance, so this is a lower bound for the
/// distance on depth-`m` cylinders; for exhaustive measures the two agree.
pub fn total_variation(a: &CylinderMeasure, b: &CylinderMeasure, m: usize) -> Result<f64> {
    if a.system != b.system {
        return Err(Error::Mismatch(format!(
            "measures live on `{}` and `{}`",
            a.system.name, b.system.name
        )));
    }
    if m == 0 || m > a.depth.min(b.depth) {
        return Err(Error::param(
            "depth",
            "must lie between 1 and both measure depths",
        ));
    }
    let theirs: BTreeMap<Vec<u32>, f64> = b
        .cylinder_masses(m)
        .into_iter()
        .map(|(w, mass)| (w.0, mass))
        .collect();
    let (mut gaps, mut covered_a, mut covered_b) = (Vec::new(), Vec::new(), Vec::new());
    for (w, mass) in a.cylinder_masses(m) {
        if let Some(&other) = theirs.get(&w.0) {
            gaps.push(abs(mass - other));
            covered_a.push(mass);
            covered_b.push(other);
        }
    }
    let rest = abs(pairwise_sum(&covered_b) - pairwise_sum(&covered_a));
    Ok(0.5 * (pairwise_sum(&gaps) + rest))
}
