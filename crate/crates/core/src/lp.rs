//! Dense two-phase simplex.
//!
//! The program is rewritten into standard form before solving: variables with
//! a finite lower bound are shifted, variables bounded only above are
//! mirrored, free variables are split into a difference of two nonnegative
//! columns, and finite upper bounds become explicit rows. Rows are sign
//! normalized so every right-hand side is nonnegative, then get a slack
//! (`<=`), a surplus plus an artificial (`>=`), or an artificial (`=`).
//!
//! Pricing is Dantzig (most negative reduced cost). After `stall_threshold`
//! consecutive degenerate pivots the solver switches to Bland's rule for the
//! rest of the phase, which cannot cycle.

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<F> {
    pub coeffs: Vec<F>,
    pub relation: Relation,
    pub rhs: F,
}

/// `optimize c^T x` subject to row constraints and per-variable bounds.
/// Variables default to `[0, +inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<F> {
    pub sense: Sense,
    pub objective: Vec<F>,
    pub constraints: Vec<Constraint<F>>,
    pub bounds: Vec<(F, F)>,
}

impl<F: Scalar> LinearProgram<F> {
    pub fn new(sense: Sense, objective: Vec<F>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
            bounds: vec![(F::zero(), F::infinity()); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coeffs: Vec<F>, relation: Relation, rhs: F) -> &mut Self {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: F, upper: F) -> &mut Self {
        self.bounds[var] = (lower, upper);
        self
    }

    pub fn free(&mut self, var: usize) -> &mut Self {
        self.set_bounds(var, F::neg_infinity(), F::infinity())
    }

    /// Resets every variable to `[0, +inf)`.
    pub fn nonnegative(&mut self) -> &mut Self {
        for b in &mut self.bounds {
            *b = (F::zero(), F::infinity());
        }
        self
    }

    pub fn evaluate(&self, x: &[F]) -> F {
        self.objective.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[F]) -> F {
        let mut worst = F::zero();
        for c in &self.constraints {
            let lhs: F = c.coeffs.iter().zip(x).map(|(&a, &v)| a * v).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (&(lo, hi), &v) in self.bounds.iter().zip(x) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }
}

/// Solver tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpConfig<F> {
    /// Smallest pivot element accepted in the ratio test.
    pub pivot_tol: F,
    /// A reduced cost must be below `-optimality_tol` to enter.
    pub optimality_tol: F,
    /// Phase-1 optimum above this means infeasible; also the residual
    /// tolerance (relative to row magnitude) used to accept the answer.
    pub feasibility_tol: F,
    pub stall_threshold: usize,
    pub max_iterations: usize,
}

impl<F: Scalar> Default for LpConfig<F> {
    fn default() -> Self {
        LpConfig {
            pivot_tol: F::tolerance(1e-9),
            optimality_tol: F::tolerance(1e-9),
            feasibility_tol: F::tolerance(1e-8),
            stall_threshold: 500,
            max_iterations: 50_000,
        }
    }
}

impl<F: Scalar> LpConfig<F> {
    pub fn with_max_iterations(mut self, cap: usize) -> Self {
        self.max_iterations = cap;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<F> {
    pub status: LpStatus,
    /// Objective at `primal` in the program's own sense; `±inf` when unbounded.
    pub objective: F,
    pub primal: Vec<F>,
    pub iterations: usize,
    /// Some nonbasic column had a zero reduced cost at the optimum, so other
    /// optimal vertices may exist.
    pub alternative_optima: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("iteration cap of {cap} reached (phase {phase}, objective {objective:e})")]
    IterationLimit {
        cap: usize,
        phase: u8,
        objective: f64,
    },
    #[error("solution violates constraints by {violation:e}")]
    Numerical { violation: f64 },
}

#[derive(Debug, Clone, Copy)]
enum VarMap<F> {
    Shifted { col: usize, lower: F },
    Mirrored { col: usize, upper: F },
    Split { pos: usize, neg: usize },
}

struct Tableau<F> {
    rows: usize,
    width: usize,
    data: Vec<F>,
    basis: Vec<usize>,
    /// Reduced costs per column; last slot holds `-objective`.
    cost: Vec<F>,
}

impl<F: Scalar> Tableau<F> {
    #[inline]
    fn at(&self, r: usize, c: usize) -> F {
        self.data[r * self.width + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> F {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.at(r, c);
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v /= p;
        }
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[c];
            if f != F::zero() {
                for (v, &pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[c] = F::zero();
            }
        }
        let f = self.cost[c];
        if f != F::zero() {
            for (v, &pv) in self.cost.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            self.cost[c] = F::zero();
        }
        self.basis[r] = c;
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.data.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.rows -= 1;
    }

    /// Sets reduced costs from column costs `c` (missing entries are zero).
    fn price(&mut self, c: &[F]) {
        let w = self.width;
        self.cost = vec![F::zero(); w];
        self.cost[..c.len()].copy_from_slice(c);
        for r in 0..self.rows {
            let cb = c.get(self.basis[r]).copied().unwrap_or_else(F::zero);
            if cb != F::zero() {
                for j in 0..w {
                    self.cost[j] -= cb * self.data[r * w + j];
                }
            }
        }
    }
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Simplex<'a, F> {
    cfg: &'a LpConfig<F>,
    iterations: usize,
}

impl<F: Scalar> Simplex<'_, F> {
    fn run(&mut self, t: &mut Tableau<F>, allowed: &[bool], phase: u8) -> Result<Outcome, LpError> {
        let cfg = self.cfg;
        let mut bland = false;
        let mut stalled = 0usize;
        loop {
            if self.iterations >= cfg.max_iterations {
                return Err(LpError::IterationLimit {
                    cap: cfg.max_iterations,
                    phase,
                    objective: (-t.cost[t.width - 1]).as_f64(),
                });
            }
            let ncols = t.width - 1;
            let mut entering = None;
            let mut best = -cfg.optimality_tol;
            for j in 0..ncols {
                if !allowed[j] {
                    continue;
                }
                let d = t.cost[j];
                if d < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(e) = entering else {
                return Ok(Outcome::Optimal);
            };

            let mut leave: Option<(usize, F)> = None;
            for r in 0..t.rows {
                let a = t.at(r, e);
                if a <= cfg.pivot_tol {
                    continue;
                }
                let ratio = t.rhs(r).max(F::zero()) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= F::epsilon() * (F::one() + lratio.abs());
                        let better = if tie {
                            if bland {
                                t.basis[r] < t.basis[lr]
                            } else {
                                a > t.at(lr, e)
                            }
                        } else {
                            ratio < lratio
                        };
                        if better {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((r, ratio)) = leave else {
                return Ok(Outcome::Unbounded);
            };
            if ratio <= F::epsilon() {
                stalled += 1;
                if stalled >= cfg.stall_threshold {
                    bland = true;
                }
            } else {
                stalled = 0;
            }
            t.pivot(r, e);
            self.iterations += 1;
            for rr in 0..t.rows {
                let idx = rr * t.width + t.width - 1;
                if t.data[idx] < F::zero() && t.data[idx] > -cfg.feasibility_tol {
                    t.data[idx] = F::zero();
                }
            }
        }
    }
}

/// Solves `lp`. Infeasible and unbounded programs are reported through
/// [`LpSolution::status`]; errors are reserved for malformed input,
/// the iteration cap, and answers that fail the final residual check.
pub fn solve<F: Scalar>(lp: &LinearProgram<F>, cfg: &LpConfig<F>) -> Result<LpSolution<F>, LpError> {
    let n = lp.num_vars();
    if lp.bounds.len() != n {
        return Err(LpError::Malformed(format!(
            "{} bounds for {n} variables",
            lp.bounds.len()
        )));
    }
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(LpError::Malformed(format!(
                "constraint {i} has {} coefficients, expected {n}",
                c.coeffs.len()
            )));
        }
        if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
            return Err(LpError::Malformed(format!("constraint {i} is not finite")));
        }
    }
    if lp.objective.iter().any(|v| !v.is_finite()) {
        return Err(LpError::Malformed("objective is not finite".into()));
    }

    // standard-form columns
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, F)> = Vec::new();
    for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
        if lo.is_nan() || hi.is_nan() || lo > hi || lo == F::infinity() || hi == F::neg_infinity() {
            return Err(LpError::Malformed(format!("variable {j} has bounds [{lo}, {hi}]")));
        }
        let m = if lo.is_finite() {
            if hi.is_finite() {
                bound_rows.push((ncols, hi - lo));
            }
            VarMap::Shifted { col: ncols, lower: lo }
        } else if hi.is_finite() {
            VarMap::Mirrored { col: ncols, upper: hi }
        } else {
            ncols += 1;
            VarMap::Split {
                pos: ncols - 1,
                neg: ncols,
            }
        };
        ncols += 1;
        maps.push(m);
    }
    let nstruct = ncols;

    // rows over structural columns
    let mut rows: Vec<(Vec<F>, Relation, F)> = Vec::with_capacity(lp.constraints.len() + bound_rows.len());
    for c in &lp.constraints {
        let mut a = vec![F::zero(); nstruct];
        let mut rhs = c.rhs;
        for (j, &v) in c.coeffs.iter().enumerate() {
            if v == F::zero() {
                continue;
            }
            match maps[j] {
                VarMap::Shifted { col, lower } => {
                    a[col] += v;
                    rhs -= v * lower;
                }
                VarMap::Mirrored { col, upper } => {
                    a[col] -= v;
                    rhs -= v * upper;
                }
                VarMap::Split { pos, neg } => {
                    a[pos] += v;
                    a[neg] -= v;
                }
            }
        }
        rows.push((a, c.relation, rhs));
    }
    for &(col, width) in &bound_rows {
        let mut a = vec![F::zero(); nstruct];
        a[col] = F::one();
        rows.push((a, Relation::Le, width));
    }
    for row in &mut rows {
        if row.2 < F::zero() {
            row.0.iter_mut().for_each(|v| *v = -*v);
            row.2 = -row.2;
            row.1 = match row.1 {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let nslack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let nart = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let art_start = nstruct + nslack;
    let width = art_start + nart + 1;
    let m = rows.len();
    let mut t = Tableau {
        rows: m,
        width,
        data: vec![F::zero(); m * width],
        basis: vec![0; m],
        cost: vec![F::zero(); width],
    };
    let (mut s, mut a) = (nstruct, art_start);
    for (r, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        let base = r * width;
        t.data[base..base + nstruct].copy_from_slice(coeffs);
        t.data[base + width - 1] = *rhs;
        match rel {
            Relation::Le => {
                t.data[base + s] = F::one();
                t.basis[r] = s;
                s += 1;
            }
            Relation::Ge => {
                t.data[base + s] = -F::one();
                s += 1;
                t.data[base + a] = F::one();
                t.basis[r] = a;
                a += 1;
            }
            Relation::Eq => {
                t.data[base + a] = F::one();
                t.basis[r] = a;
                a += 1;
            }
        }
    }

    let mut simplex = Simplex { cfg, iterations: 0 };
    let mut allowed = vec![true; width - 1];

    // phase 1
    if nart > 0 {
        let mut c1 = vec![F::zero(); width - 1];
        c1[art_start..].iter_mut().for_each(|v| *v = F::one());
        t.price(&c1);
        simplex.run(&mut t, &allowed, 1)?;
        let infeas = -t.cost[width - 1];
        if infeas > cfg.feasibility_tol {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: F::nan(),
                primal: vec![F::nan(); n],
                iterations: simplex.iterations,
                alternative_optima: false,
            });
        }
        // drive zero-level artificials out of the basis; drop redundant rows
        let mut r = 0;
        while r < t.rows {
            if t.basis[r] >= art_start {
                let col = (0..art_start)
                    .filter(|&j| t.at(r, j).abs() > cfg.pivot_tol)
                    .max_by(|&x, &y| t.at(r, x).abs().partial_cmp(&t.at(r, y).abs()).unwrap());
                match col {
                    Some(j) => {
                        t.pivot(r, j);
                        r += 1;
                    }
                    None => t.remove_row(r),
                }
            } else {
                r += 1;
            }
        }
        allowed[art_start..].iter_mut().for_each(|v| *v = false);
    }

    // phase 2 (always minimize internally)
    let flip = if lp.sense == Sense::Maximize { -F::one() } else { F::one() };
    let mut c2 = vec![F::zero(); width - 1];
    for (j, &cj) in lp.objective.iter().enumerate() {
        let cj = cj * flip;
        match maps[j] {
            VarMap::Shifted { col, .. } => c2[col] += cj,
            VarMap::Mirrored { col, .. } => c2[col] -= cj,
            VarMap::Split { pos, neg } => {
                c2[pos] += cj;
                c2[neg] -= cj;
            }
        }
    }
    t.price(&c2);
    let outcome = simplex.run(&mut t, &allowed, 2)?;

    let mut y = vec![F::zero(); width - 1];
    for r in 0..t.rows {
        y[t.basis[r]] = t.rhs(r).max(F::zero());
    }
    let x: Vec<F> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shifted { col, lower } => lower + y[col],
            VarMap::Mirrored { col, upper } => upper - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();

    if let Outcome::Unbounded = outcome {
        let inf = if lp.sense == Sense::Maximize {
            F::infinity()
        } else {
            F::neg_infinity()
        };
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            objective: inf,
            primal: x,
            iterations: simplex.iterations,
            alternative_optima: false,
        });
    }

    // accept the vertex only if it satisfies the original rows
    let xmag = x.iter().fold(F::one(), |acc, v| acc.max(v.abs()));
    for c in &lp.constraints {
        let lhs: F = c.coeffs.iter().zip(&x).map(|(&a, &v)| a * v).sum();
        let scale = c
            .coeffs
            .iter()
            .fold(c.rhs.abs(), |acc, a| acc.max(a.abs() * xmag))
            .max(F::one());
        let viol = match c.relation {
            Relation::Le => lhs - c.rhs,
            Relation::Ge => c.rhs - lhs,
            Relation::Eq => (lhs - c.rhs).abs(),
        };
        if viol > cfg.feasibility_tol * scale {
            return Err(LpError::Numerical {
                violation: viol.as_f64(),
            });
        }
    }

    let mut basic = vec![false; width - 1];
    for &b in &t.basis {
        basic[b] = true;
    }
    let mirror_basic = |j: usize| {
        maps.iter().any(|m| match *m {
            VarMap::Split { pos, neg } => (j == pos && basic[neg]) || (j == neg && basic[pos]),
            _ => false,
        })
    };
    let alternative_optima = (0..art_start)
        .any(|j| !basic[j] && t.cost[j].abs() <= cfg.optimality_tol && !mirror_basic(j));

    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.evaluate(&x),
        primal: x,
        iterations: simplex.iterations,
        alternative_optima,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> LpConfig<f64> {
        LpConfig::default()
    }

    #[test]
    fn single_upper_bound() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
        lp.constrain(vec![1.0], Relation::Le, 3.0);
        let s = solve(&lp, &cfg()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_equalities_are_infeasible() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![0.0]);
        lp.constrain(vec![1.0], Relation::Eq, 1.0);
        lp.constrain(vec![1.0], Relation::Eq, 2.0);
        assert_eq!(solve(&lp, &cfg()).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.constrain(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(solve(&lp, &cfg()).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_bounded_variables() {
        // min x - y, x free with x >= -5 via row, y in [-1, 2]
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, -1.0]);
        lp.free(0).set_bounds(1, -1.0, 2.0);
        lp.constrain(vec![1.0, 0.0], Relation::Ge, -5.0);
        let s = solve(&lp, &cfg()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.primal[0] + 5.0).abs() < 1e-12);
        assert!((s.primal[1] - 2.0).abs() < 1e-12);
        assert!((s.objective + 7.0).abs() < 1e-12);

        // only an upper bound
        let mut lp = LinearProgram::new(Sense::Maximize, vec![2.0]);
        lp.set_bounds(0, f64::NEG_INFINITY, 4.5);
        let s = solve(&lp, &cfg()).unwrap();
        assert!((s.objective - 9.0).abs() < 1e-12);
    }

    #[test]
    fn birth_death_dual_certificate() {
        // max H f  s.t. V f = 0, 1^T f = 0, ||f||_1 <= 1 with f = f+ - f-
        let v = [0.0, 1.0, 2.0];
        let h = [0.0, 1.0, 4.0];
        let mut obj = h.to_vec();
        obj.extend(h.iter().map(|x| -x));
        let mut lp = LinearProgram::new(Sense::Maximize, obj);
        let mut row = v.to_vec();
        row.extend(v.iter().map(|x| -x));
        lp.constrain(row, Relation::Eq, 0.0);
        lp.constrain(vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0], Relation::Eq, 0.0);
        lp.constrain(vec![1.0; 6], Relation::Le, 1.0);
        let s = solve(&lp, &cfg()).unwrap();
        assert!((s.objective - 0.5).abs() < 1e-12);
        let f: Vec<f64> = (0..3).map(|i| s.primal[i] - s.primal[i + 3]).collect();
        for (got, want) in f.iter().zip([0.25, -0.5, 0.25]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0, 2.0]);
        lp.constrain(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.constrain(vec![2.0, 2.0], Relation::Eq, 2.0);
        let s = solve(&lp, &cfg()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn alternative_optima_flag() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
        lp.constrain(vec![1.0, 1.0], Relation::Le, 1.0);
        assert!(solve(&lp, &cfg()).unwrap().alternative_optima);
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 2.0]);
        lp.constrain(vec![1.0, 1.0], Relation::Le, 1.0);
        assert!(!solve(&lp, &cfg()).unwrap().alternative_optima);
    }

    #[test]
    fn iteration_cap_is_an_error() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0, 1.0]);
        for i in 0..3 {
            let mut r = vec![0.0; 3];
            r[i] = 1.0;
            lp.constrain(r, Relation::Le, 1.0);
        }
        let err = solve(&lp, &cfg().with_max_iterations(1)).unwrap_err();
        assert!(matches!(err, LpError::IterationLimit { cap: 1, .. }));
    }

    #[test]
    fn malformed_programs() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0]);
        lp.constrain(vec![1.0, 1.0], Relation::Le, 1.0);
        assert!(matches!(solve(&lp, &cfg()), Err(LpError::Malformed(_))));
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0]);
        lp.constrain(vec![1.0], Relation::Le, f64::INFINITY);
        assert!(matches!(solve(&lp, &cfg()), Err(LpError::Malformed(_))));
        let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0]);
        lp.set_bounds(0, 2.0, 1.0);
        assert!(matches!(solve(&lp, &cfg()), Err(LpError::Malformed(_))));
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling instance under naive Dantzig pricing
        let mut lp = LinearProgram::new(Sense::Minimize, vec![-0.75, 150.0, -0.02, 6.0]);
        lp.constrain(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0);
        lp.constrain(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0);
        lp.constrain(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0);
        let mut c = cfg();
        c.stall_threshold = 3;
        let s = solve(&lp, &c).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-12);
    }

    #[test]
    fn random_feasible_programs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..7);
            let m = rng.gen_range(1..9);
            let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut lp = LinearProgram::new(Sense::Maximize, c);
            for _ in 0..m {
                let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let ax: f64 = a.iter().zip(&x0).map(|(a, x)| a * x).sum();
                match rng.gen_range(0..3) {
                    0 => lp.constrain(a, Relation::Le, ax + rng.gen_range(0.0..1.0)),
                    1 => lp.constrain(a, Relation::Ge, ax - rng.gen_range(0.0..1.0)),
                    _ => lp.constrain(a, Relation::Eq, ax),
                };
            }
            // bounded: box every variable
            for j in 0..n {
                let hi = x0[j] + rng.gen_range(0.5..4.0);
                lp.set_bounds(j, 0.0, hi);
            }
            let s = solve(&lp, &cfg()).unwrap();
            assert_eq!(s.status, LpStatus::Optimal);
            assert!(s.objective >= lp.evaluate(&x0) - 1e-9);
            assert!((s.objective - lp.evaluate(&s.primal)).abs() <= 1e-9);
            assert!(lp.max_violation(&s.primal) <= 1e-8);
        }
    }
}
