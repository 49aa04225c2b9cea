//! State box enumeration, the CME generator, and the moment matrices.
//!
//! States are enumerated row-major with the last species varying fastest, so
//! for two species on `[0,1]^2` the order is `(0,0), (0,1), (1,0), (1,1)`.
//! Column `j` of every matrix here refers to state `j` of that order.

use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView1};
use thiserror::Error;

use crate::linalg::{self, RANK_REL_TOL};
use crate::lp::{self, LinearProgram, LpStatus, Relation, Sense};
use crate::model::{advance, ModelError, ReactionNetwork};
use crate::poly::{monomial_basis, Monomial};
use crate::Scalar;

/// Cap on the total number of monomial rows (`V` plus `H`).
pub const DEFAULT_MOMENT_BUDGET: usize = 5_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateSpaceError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("closure order must be at least 1")]
    ZeroOrder,
    #[error("order {n} needs {rows} monomial rows, above the budget of {budget}")]
    MomentBudget { n: u32, rows: usize, budget: usize },
    #[error("monomials of degree {degree} overflow the scalar type on this box")]
    MomentOverflow { degree: u32 },
    #[error("stationary distribution not found (residual {residual:e})")]
    Stationary { residual: f64 },
    #[error(transparent)]
    Lp(#[from] lp::LpError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    bounds: Vec<u32>,
    states: Vec<Vec<i64>>,
}

impl StateSpace {
    pub fn enumerate<F: Scalar>(
        net: &ReactionNetwork<F>,
        cap: usize,
    ) -> Result<Self, StateSpaceError> {
        let p = net.state_count(cap)?;
        Ok(Self::from_bounds(net.upper_bounds(), p))
    }

    fn from_bounds(bounds: Vec<u32>, p: usize) -> Self {
        let mut states = Vec::with_capacity(p);
        let mut cur = vec![0i64; bounds.len()];
        for _ in 0..p {
            states.push(cur.clone());
            advance(&mut cur, &bounds);
        }
        StateSpace { bounds, states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[Vec<i64>] {
        &self.states
    }

    pub fn bounds(&self) -> &[u32] {
        &self.bounds
    }

    /// Position of `state` in the enumeration, or `None` outside the box.
    pub fn index_of(&self, state: &[i64]) -> Option<usize> {
        if state.len() != self.bounds.len() {
            return None;
        }
        let mut idx = 0usize;
        for (&k, &u) in state.iter().zip(&self.bounds) {
            if k < 0 || k > u as i64 {
                return None;
            }
            idx = idx * (u as usize + 1) + k as usize;
        }
        Some(idx)
    }

    /// Point mass at `state`.
    pub fn delta<F: Scalar>(&self, state: &[i64]) -> Option<Array1<F>> {
        let i = self.index_of(state)?;
        let mut p = Array1::zeros(self.len());
        p[i] = F::one();
        Some(p)
    }
}

/// CME generator with `dP/dt = G P`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator<F> {
    pub matrix: Array2<F>,
    /// Transitions with nonzero rate that were dropped because they leave the box.
    pub truncated: usize,
}

impl<F: Scalar> Generator<F> {
    /// Adds `a_j(k)` at `(k + gamma_j, k)` and subtracts it on the diagonal
    /// for every in-box `k` whose target is in the box. Targets outside the
    /// box are dropped entirely (both terms), which only matters for
    /// networks accepted under forced truncation.
    pub fn build(net: &ReactionNetwork<F>, ss: &StateSpace) -> Self {
        let p = ss.len();
        let mut g = Array2::zeros((p, p));
        let mut truncated = 0;
        for (col, k) in ss.states().iter().enumerate() {
            for r in net.reactions() {
                let a = r.rate(k).expect("arity checked at construction");
                if a == F::zero() {
                    continue;
                }
                let target: Vec<i64> = k.iter().zip(&r.stoichiometry).map(|(x, g)| x + g).collect();
                match ss.index_of(&target) {
                    Some(row) => {
                        g[[row, col]] += a;
                        g[[col, col]] -= a;
                    }
                    None => truncated += 1,
                }
            }
        }
        Generator {
            matrix: g,
            truncated,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest `|1^T G|` entry; zero for a conservative generator.
    pub fn column_sum_defect(&self) -> F {
        self.matrix
            .columns()
            .into_iter()
            .map(|c| c.sum().abs())
            .fold(F::zero(), F::max)
    }

    /// Finds `pi >= 0`, `sum pi = 1`, `G pi = 0`.
    pub fn stationary_distribution(&self) -> Result<Stationary<F>, StateSpaceError> {
        let p = self.dim();
        let nullity = p - linalg::rank(self.matrix.view(), RANK_REL_TOL);
        let tol = F::tolerance(1e-9);
        let pi = if nullity == 1 {
            self.stationary_by_solve()
        } else {
            None
        };
        let pi = match pi {
            Some(pi) => pi,
            None => self.stationary_by_lp()?,
        };
        let residual = linalg::max_abs(self.matrix.dot(&pi).insert_axis(ndarray::Axis(1)).view());
        if residual > tol {
            return Err(StateSpaceError::Stationary {
                residual: residual.as_f64(),
            });
        }
        Ok(Stationary {
            distribution: pi,
            multiplicity: nullity,
            residual,
        })
    }

    fn stationary_by_solve(&self) -> Option<Array1<F>> {
        let p = self.dim();
        let mut a = self.matrix.clone();
        a.row_mut(p - 1).fill(F::one());
        let mut rhs = Array2::zeros((p, 1));
        rhs[[p - 1, 0]] = F::one();
        let x = linalg::solve(&a, &rhs).ok()?;
        let mut pi = x.column(0).to_owned();
        if pi.iter().any(|&v| v < -F::tolerance(1e-10)) {
            return None;
        }
        pi.mapv_inplace(|v| v.max(F::zero()));
        let s = pi.sum();
        Some(pi / s)
    }

    fn stationary_by_lp(&self) -> Result<Array1<F>, StateSpaceError> {
        let p = self.dim();
        let mut prog = LinearProgram::new(Sense::Minimize, vec![F::zero(); p]);
        prog.nonnegative();
        for row in self.matrix.rows() {
            prog.constrain(row.to_vec(), Relation::Eq, F::zero());
        }
        prog.constrain(vec![F::one(); p], Relation::Eq, F::one());
        let sol = lp::solve(&prog, &lp::LpConfig::default())?;
        if sol.status != LpStatus::Optimal {
            return Err(StateSpaceError::Stationary {
                residual: f64::INFINITY,
            });
        }
        let mut pi = Array1::from(sol.primal);
        pi.mapv_inplace(|v| v.max(F::zero()));
        let s = pi.sum();
        Ok(pi / s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stationary<F> {
    pub distribution: Array1<F>,
    /// Dimension of the nullspace of `G`; above 1 the distribution returned
    /// is one valid element among many.
    pub multiplicity: usize,
    pub residual: F,
}

impl<F> Stationary<F> {
    pub fn is_unique(&self) -> bool {
        self.multiplicity == 1
    }
}

/// `V` maps `P` to the stacked moments of degrees `1..=n`; `H` maps `P` to
/// the stacked moments of degrees `n+1 ..= n+l-1` that the closure predicts.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrices<F> {
    pub v: Array2<F>,
    pub h: Array2<F>,
    pub v_basis: Vec<Monomial>,
    pub h_basis: Vec<Monomial>,
    /// Row range of each moment block `1..=n` inside `V`.
    pub blocks: Vec<Range<usize>>,
    pub n: u32,
    pub l: u32,
}

impl<F: Scalar> MomentMatrices<F> {
    pub fn build(
        net: &ReactionNetwork<F>,
        ss: &StateSpace,
        n: u32,
        budget: usize,
    ) -> Result<Self, StateSpaceError> {
        if n == 0 {
            return Err(StateSpaceError::ZeroOrder);
        }
        let q = net.species_count();
        let l = net.max_degree();
        let top = n + l.saturating_sub(1);
        let rows = (1..=top.max(n))
            .map(|d| count_monomials(q, d).unwrap_or(usize::MAX))
            .fold(0usize, usize::saturating_add);
        if rows > budget {
            return Err(StateSpaceError::MomentBudget { n, rows, budget });
        }
        let umax = ss.bounds().iter().copied().max().unwrap_or(0) as f64;
        let biggest = F::lit(umax).powi(top.max(n) as i32);
        if !biggest.is_finite() {
            return Err(StateSpaceError::MomentOverflow { degree: top });
        }

        let v_basis = monomial_basis(q, 1..=n);
        let h_basis = if l >= 2 {
            monomial_basis(q, n + 1..=top)
        } else {
            Vec::new()
        };
        let mut blocks = Vec::with_capacity(n as usize);
        let mut start = 0;
        for d in 1..=n {
            let len = count_monomials(q, d).expect("counted above");
            blocks.push(start..start + len);
            start += len;
        }
        Ok(MomentMatrices {
            v: evaluate_rows(&v_basis, ss),
            h: evaluate_rows(&h_basis, ss),
            v_basis,
            h_basis,
            blocks,
            n,
            l,
        })
    }

    /// Assembles matrices directly, for closure problems that do not come
    /// from a network. `blocks` default to one block covering all of `V`.
    pub fn from_parts(v: Array2<F>, h: Array2<F>) -> Self {
        let dv = v.nrows();
        MomentMatrices {
            v_basis: Vec::new(),
            h_basis: Vec::new(),
            blocks: vec![0..dv],
            n: 1,
            l: 2,
            v,
            h,
        }
    }

    pub fn dim_v(&self) -> usize {
        self.v.nrows()
    }

    pub fn dim_h(&self) -> usize {
        self.h.nrows()
    }

    pub fn states(&self) -> usize {
        self.v.ncols()
    }

    /// 0/1 matrix `c_i` with `c_i E = mu_i`, for block `i` in `1..=n`.
    pub fn selector(&self, block: usize) -> Array2<F> {
        let range = self.blocks[block - 1].clone();
        let mut c = Array2::zeros((range.len(), self.dim_v()));
        for (r, col) in range.enumerate() {
            c[[r, col]] = F::one();
        }
        c
    }

    pub fn moments(&self, p: ArrayView1<F>) -> Array1<F> {
        self.v.dot(&p)
    }

    pub fn rank_v(&self) -> usize {
        linalg::rank(self.v.view(), RANK_REL_TOL)
    }

    /// Whether `V` has full row rank; a deficient `V` means some moments
    /// are functions of the others on this box (e.g. `s^2 = s` on `{0,1}`).
    pub fn v_full_row_rank(&self) -> bool {
        self.rank_v() == self.dim_v()
    }
}

fn evaluate_rows<F: Scalar>(basis: &[Monomial], ss: &StateSpace) -> Array2<F> {
    let mut m = Array2::zeros((basis.len(), ss.len()));
    for (r, mono) in basis.iter().enumerate() {
        for (c, k) in ss.states().iter().enumerate() {
            m[[r, c]] = mono.eval(k);
        }
    }
    m
}

fn count_monomials(nvars: usize, degree: u32) -> Option<usize> {
    // C(degree + nvars - 1, nvars - 1)
    let n = degree as u128 + nvars as u128 - 1;
    let k = (nvars as u128 - 1).min(degree as u128);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    usize::try_from(acc).ok()
}
