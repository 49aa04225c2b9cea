//! Optimal affine moment closure and its worst-case error.
//!
//! With `V` and `H` from [`MomentMatrices`], an affine closure predicts
//! `H P` by `K V P + K0`. Because `P` ranges over the probability simplex,
//! the worst-case error of a fixed `(K, K0)` is the largest entry of
//! `|H - (K V + K0 1^T)|` (see [`l1_linf_norm`]). Three linear programs
//! compute the optimal value independently:
//!
//! * the primal: minimize that largest entry over `(K, K0)`;
//! * the dual: maximize `H_i f` over `f` with `V f = 0`, `1^T f = 0`,
//!   `||f||_1 <= 1`;
//! * the unrestricted (nonlinear) closure value: half the largest spread of
//!   `H_i P` over two distributions with the same moments `V P`.
//!
//! All three agree, which is what makes affine closures optimal among all
//! closure functions in the worst case.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use thiserror::Error;

use crate::linalg;
use crate::lp::{self, LinearProgram, LpConfig, LpError, LpStatus, Relation, Sense};
use crate::statespace::MomentMatrices;
use crate::Scalar;

/// Agreement required between the three optimal values.
pub const AGREEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosureError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{problem} LP for row {row} ended {status:?}")]
    NotOptimal {
        problem: &'static str,
        row: usize,
        status: LpStatus,
    },
    #[error("{problem} LP for row {row}: {source}")]
    Lp {
        problem: &'static str,
        row: usize,
        #[source]
        source: LpError,
    },
}

/// `sup_{P in simplex} ||M P||_inf`, which equals `max_ij |m_ij|`.
pub fn l1_linf_norm<F: Scalar>(m: ArrayView2<F>) -> F {
    linalg::max_abs(m)
}

/// `H - (K V + K0 1^T)`.
pub fn residual_matrix<F: Scalar>(
    k: &Array2<F>,
    k0: &Array1<F>,
    mm: &MomentMatrices<F>,
) -> Result<Array2<F>, ClosureError> {
    if k.nrows() != mm.dim_h() || k.ncols() != mm.dim_v() || k0.len() != mm.dim_h() {
        return Err(ClosureError::Dimension(format!(
            "K is {}x{}, K0 has {} entries; expected {}x{} and {}",
            k.nrows(),
            k.ncols(),
            k0.len(),
            mm.dim_h(),
            mm.dim_v(),
            mm.dim_h()
        )));
    }
    let mut res = mm.h.clone();
    if mm.dim_h() > 0 {
        res = res - k.dot(&mm.v);
        res = res - k0.view().insert_axis(Axis(1));
    }
    Ok(res)
}

/// Worst-case error of the closure `(K, K0)` over all distributions.
pub fn rho_affine_eval<F: Scalar>(
    k: &Array2<F>,
    k0: &Array1<F>,
    mm: &MomentMatrices<F>,
) -> Result<F, ClosureError> {
    Ok(l1_linf_norm(residual_matrix(k, k0, mm)?.view()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineClosure<F> {
    pub k: Array2<F>,
    pub k0: Array1<F>,
    /// Optimal value `max_i gamma_i`.
    pub rho: F,
    /// Per-row optimum `gamma_i`.
    pub row_rho: Vec<F>,
    /// Some row LP had other optimal vertices; `K` is then one of many.
    pub alternative_optima: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate<F> {
    pub rho: F,
    /// Maximizer `f*` for the worst row.
    pub f: Array1<F>,
    pub row: Option<usize>,
    pub row_rho: Vec<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearBound<F> {
    pub rho: F,
    pub row: Option<usize>,
    /// Two distributions with equal `V P` whose `H_row P` differ by `2 rho`.
    pub p1: Array1<F>,
    pub p2: Array1<F>,
    pub row_rho: Vec<F>,
}

fn run<F: Scalar>(
    prog: &LinearProgram<F>,
    cfg: &LpConfig<F>,
    problem: &'static str,
    row: usize,
) -> Result<lp::LpSolution<F>, ClosureError> {
    let sol = lp::solve(prog, cfg).map_err(|source| ClosureError::Lp {
        problem,
        row,
        source,
    })?;
    if sol.status != LpStatus::Optimal {
        return Err(ClosureError::NotOptimal {
            problem,
            row,
            status: sol.status,
        });
    }
    Ok(sol)
}

/// First index attaining the maximum (within round-off).
fn argmax_first<F: Scalar>(vals: &[F]) -> Option<usize> {
    let best = vals.iter().copied().fold(F::neg_infinity(), F::max);
    let tol = F::tolerance(1e-12) * (F::one() + best.abs());
    vals.iter().position(|&v| v >= best - tol)
}

/// Minimizes the worst-case error over `(K, K0)`.
///
/// The program `min gamma` s.t. `-gamma <= [H - (K V + K0 1^T)]_ij <= gamma`
/// separates by rows of `H` (row `i` only involves `K_i`, `K0_i`), so each
/// row is solved on its own and `gamma = max_i gamma_i`. Every row therefore
/// gets its own best fit, not just the worst one.
pub fn optimal_affine<F: Scalar>(
    mm: &MomentMatrices<F>,
    cfg: &LpConfig<F>,
) -> Result<AffineClosure<F>, ClosureError> {
    let (dv, dh, p) = (mm.dim_v(), mm.dim_h(), mm.states());
    let mut k = Array2::zeros((dh, dv));
    let mut k0 = Array1::zeros(dh);
    let mut row_rho = Vec::with_capacity(dh);
    let mut alternative_optima = false;
    // variables: [gamma, K_i (dv), K0_i]
    let nv = dv + 2;
    for i in 0..dh {
        let mut obj = vec![F::zero(); nv];
        obj[0] = F::one();
        let mut prog = LinearProgram::new(Sense::Minimize, obj);
        for j in 1..nv {
            prog.free(j);
        }
        for s in 0..p {
            let hij = mm.h[[i, s]];
            // H_ij - K_i V_j - K0_i <= gamma
            let mut upper = vec![F::zero(); nv];
            upper[0] = -F::one();
            // H_ij - K_i V_j - K0_i >= -gamma
            let mut lower = vec![F::zero(); nv];
            lower[0] = F::one();
            for t in 0..dv {
                upper[1 + t] = -mm.v[[t, s]];
                lower[1 + t] = -mm.v[[t, s]];
            }
            upper[nv - 1] = -F::one();
            lower[nv - 1] = -F::one();
            prog.constrain(upper, Relation::Le, -hij);
            prog.constrain(lower, Relation::Ge, -hij);
        }
        let sol = run(&prog, cfg, "primal", i)?;
        alternative_optima |= sol.alternative_optima;
        row_rho.push(sol.primal[0].max(F::zero()));
        for t in 0..dv {
            k[[i, t]] = sol.primal[1 + t];
        }
        k0[i] = sol.primal[nv - 1];
    }
    let rho = row_rho.iter().copied().fold(F::zero(), F::max);
    Ok(AffineClosure {
        k,
        k0,
        rho,
        row_rho,
        alternative_optima,
    })
}

/// Maximizes `H_i f` subject to `V f = 0`, `1^T f = 0`, `||f||_1 <= 1`, one LP
/// per row, with `f = f+ - f-`.
pub fn optimal_affine_dual<F: Scalar>(
    mm: &MomentMatrices<F>,
    cfg: &LpConfig<F>,
) -> Result<DualCertificate<F>, ClosureError> {
    let (dv, dh, p) = (mm.dim_v(), mm.dim_h(), mm.states());
    let mut row_rho = Vec::with_capacity(dh);
    let mut certs = Vec::with_capacity(dh);
    for i in 0..dh {
        let mut obj = Vec::with_capacity(2 * p);
        obj.extend(mm.h.row(i).iter().copied());
        obj.extend(mm.h.row(i).iter().map(|&v| -v));
        let mut prog = LinearProgram::new(Sense::Maximize, obj);
        for t in 0..dv {
            let mut row = Vec::with_capacity(2 * p);
            row.extend(mm.v.row(t).iter().copied());
            row.extend(mm.v.row(t).iter().map(|&v| -v));
            prog.constrain(row, Relation::Eq, F::zero());
        }
        let mut mass = vec![F::one(); p];
        mass.extend(std::iter::repeat_n(-F::one(), p));
        prog.constrain(mass, Relation::Eq, F::zero());
        prog.constrain(vec![F::one(); 2 * p], Relation::Le, F::one());
        let sol = run(&prog, cfg, "dual", i)?;
        let f: Array1<F> = (0..p).map(|s| sol.primal[s] - sol.primal[p + s]).collect();
        row_rho.push(sol.objective.max(F::zero()));
        certs.push(f);
    }
    let row = argmax_first(&row_rho);
    let (rho, f) = match row {
        Some(r) => (row_rho[r], certs[r].clone()),
        None => (F::zero(), Array1::zeros(p)),
    };
    Ok(DualCertificate {
        rho,
        f,
        row,
        row_rho,
    })
}

/// Optimal worst-case error over all (possibly nonlinear) closures:
/// `1/2 max_i max { H_i (P1 - P2) : P1, P2 in simplex, V P1 = V P2 }`.
pub fn rho_nl<F: Scalar>(
    mm: &MomentMatrices<F>,
    cfg: &LpConfig<F>,
) -> Result<NonlinearBound<F>, ClosureError> {
    let (dv, dh, p) = (mm.dim_v(), mm.dim_h(), mm.states());
    let half = F::lit(0.5);
    let mut row_rho = Vec::with_capacity(dh);
    let mut pairs = Vec::with_capacity(dh);
    for i in 0..dh {
        let mut obj = Vec::with_capacity(2 * p);
        obj.extend(mm.h.row(i).iter().copied());
        obj.extend(mm.h.row(i).iter().map(|&v| -v));
        let mut prog = LinearProgram::new(Sense::Maximize, obj);
        for t in 0..dv {
            let mut row = Vec::with_capacity(2 * p);
            row.extend(mm.v.row(t).iter().copied());
            row.extend(mm.v.row(t).iter().map(|&v| -v));
            prog.constrain(row, Relation::Eq, F::zero());
        }
        let mut first = vec![F::one(); p];
        first.extend(std::iter::repeat_n(F::zero(), p));
        let mut second = vec![F::zero(); p];
        second.extend(std::iter::repeat_n(F::one(), p));
        prog.constrain(first, Relation::Eq, F::one());
        prog.constrain(second, Relation::Eq, F::one());
        let sol = run(&prog, cfg, "nonlinear", i)?;
        row_rho.push((half * sol.objective).max(F::zero()));
        let p1: Array1<F> = sol.primal[..p].iter().copied().collect();
        let p2: Array1<F> = sol.primal[p..].iter().copied().collect();
        pairs.push((p1, p2));
    }
    let row = argmax_first(&row_rho);
    let (rho, p1, p2) = match row {
        Some(r) => (row_rho[r], pairs[r].0.clone(), pairs[r].1.clone()),
        None => (F::zero(), Array1::zeros(p), Array1::zeros(p)),
    };
    Ok(NonlinearBound {
        rho,
        row,
        p1,
        p2,
        row_rho,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pointwise<F> {
    /// Midpoint of `[lower, upper]` per output row; zero when `!valid`.
    pub value: Array1<F>,
    pub lower: Array1<F>,
    pub upper: Array1<F>,
    /// `false` when no distribution on the box has moments `E`.
    pub valid: bool,
}

impl<F: Scalar> Pointwise<F> {
    /// Half the widest range; the error this closure can incur at `E`.
    pub fn half_width(&self) -> F {
        (&self.upper - &self.lower)
            .iter()
            .fold(F::zero(), |acc, &w| acc.max(w))
            * F::lit(0.5)
    }
}

/// Pointwise optimal closure at observed moments `E`: for each row `i`, the
/// midpoint of the range of `H_i P` over distributions `P` with `V P = E`.
pub fn nl_mcf_pointwise<F: Scalar>(
    mm: &MomentMatrices<F>,
    e: ArrayView1<F>,
    cfg: &LpConfig<F>,
) -> Result<Pointwise<F>, ClosureError> {
    let (dv, dh, p) = (mm.dim_v(), mm.dim_h(), mm.states());
    if e.len() != dv {
        return Err(ClosureError::Dimension(format!(
            "observed moments have {} entries, expected {dv}",
            e.len()
        )));
    }
    let mut lower = Array1::zeros(dh);
    let mut upper = Array1::zeros(dh);
    for i in 0..dh {
        for sense in [Sense::Maximize, Sense::Minimize] {
            let mut prog = LinearProgram::new(sense, mm.h.row(i).to_vec());
            for t in 0..dv {
                prog.constrain(mm.v.row(t).to_vec(), Relation::Eq, e[t]);
            }
            prog.constrain(vec![F::one(); p], Relation::Eq, F::one());
            let sol = lp::solve(&prog, cfg).map_err(|source| ClosureError::Lp {
                problem: "pointwise",
                row: i,
                source,
            })?;
            match sol.status {
                LpStatus::Optimal => {
                    if sense == Sense::Maximize {
                        upper[i] = sol.objective;
                    } else {
                        lower[i] = sol.objective;
                    }
                }
                LpStatus::Infeasible => {
                    return Ok(Pointwise {
                        value: Array1::zeros(dh),
                        lower: Array1::zeros(dh),
                        upper: Array1::zeros(dh),
                        valid: false,
                    });
                }
                status => {
                    return Err(ClosureError::NotOptimal {
                        problem: "pointwise",
                        row: i,
                        status,
                    })
                }
            }
        }
    }
    let value = (&lower + &upper) * F::lit(0.5);
    Ok(Pointwise {
        value,
        lower,
        upper,
        valid: true,
    })
}

/// Everything the closure stage reports.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureResult<F> {
    pub k: Array2<F>,
    pub k0: Array1<F>,
    /// Primal optimum `gamma*`.
    pub rho_affine: F,
    /// `rho_affine_eval(K, K0)`, the worst-case error of the returned `K`.
    pub rho_eval: F,
    pub rho_dual: F,
    pub rho_nl: F,
    pub dual_certificate: Array1<F>,
    pub worst_row: Option<usize>,
    pub alternative_optima: bool,
    pub residual: Array2<F>,
}

impl<F: Scalar> ClosureResult<F> {
    pub fn compute(mm: &MomentMatrices<F>, cfg: &LpConfig<F>) -> Result<Self, ClosureError> {
        let primal = optimal_affine(mm, cfg)?;
        let dual = optimal_affine_dual(mm, cfg)?;
        let nl = rho_nl(mm, cfg)?;
        let residual = residual_matrix(&primal.k, &primal.k0, mm)?;
        Ok(ClosureResult {
            rho_eval: l1_linf_norm(residual.view()),
            rho_affine: primal.rho,
            rho_dual: dual.rho,
            rho_nl: nl.rho,
            dual_certificate: dual.f,
            worst_row: dual.row,
            alternative_optima: primal.alternative_optima,
            k: primal.k,
            k0: primal.k0,
            residual,
        })
    }

    /// Largest pairwise disagreement among the primal, evaluated, dual and
    /// nonlinear values.
    pub fn agreement_gap(&self) -> F {
        let v = [self.rho_affine, self.rho_eval, self.rho_dual, self.rho_nl];
        let hi = v.iter().copied().fold(F::neg_infinity(), F::max);
        let lo = v.iter().copied().fold(F::infinity(), F::min);
        hi - lo
    }

    pub fn agrees(&self, tol: F) -> bool {
        self.agreement_gap() <= tol
    }

    /// Per row of `H`, how many states sit at `|residual| = rho` and whether
    /// both signs occur (the equioscillation signature of a minimax fit).
    pub fn extremal_states(&self, tol: F) -> Vec<Extremal> {
        self.residual
            .rows()
            .into_iter()
            .map(|row| {
                let top = row.iter().fold(F::zero(), |acc, v| acc.max(v.abs()));
                let hits: Vec<F> = row
                    .iter()
                    .copied()
                    .filter(|v| top > F::zero() && v.abs() >= top - tol)
                    .collect();
                Extremal {
                    count: hits.len(),
                    both_signs: hits.iter().any(|&v| v > F::zero()) && hits.iter().any(|&v| v < F::zero()),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extremal {
    pub count: usize,
    pub both_signs: bool,
}

/// Checks `V f = 0`, `1^T f = 0`, `||f||_1 <= 1 + tol` and
/// `H_row f = rho` for a dual certificate. Returns the largest defect.
pub fn certificate_defect<F: Scalar>(
    mm: &MomentMatrices<F>,
    cert: &DualCertificate<F>,
) -> F {
    let f = &cert.f;
    let mut worst = mm.v.dot(f).iter().fold(F::zero(), |acc, v| acc.max(v.abs()));
    worst = worst.max(f.sum().abs());
    let l1: F = f.iter().map(|v| v.abs()).sum();
    worst = worst.max(l1 - F::one());
    if let Some(r) = cert.row {
        worst = worst.max((mm.h.row(r).dot(f) - cert.rho).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::model::DEFAULT_STATE_CAP;
    use crate::statespace::{StateSpace, DEFAULT_MOMENT_BUDGET};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> LpConfig<f64> {
        LpConfig::default()
    }

    fn birth_death(n: u32) -> MomentMatrices<f64> {
        let net = gallery::birth_death(1.0, 1.0);
        let ss = StateSpace::enumerate(&net, DEFAULT_STATE_CAP).unwrap();
        MomentMatrices::build(&net, &ss, n, DEFAULT_MOMENT_BUDGET).unwrap()
    }

    fn random_simplex(rng: &mut ChaCha8Rng, p: usize) -> Array1<f64> {
        let raw: Array1<f64> = (0..p).map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
        let s = raw.sum();
        raw / s
    }

    #[test]
    fn lemma_norm_examples() {
        assert_eq!(l1_linf_norm(array![[1.0, -3.0], [2.0, 0.0]].view()), 3.0);
        assert_eq!(l1_linf_norm(Array2::<f64>::zeros((2, 3)).view()), 0.0);
    }

    #[test]
    fn lemma_norm_bounds_random_distributions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m: Array2<f64> = Array2::from_shape_fn((3, 5), |_| rng.gen_range(-4.0..4.0));
            let norm = l1_linf_norm(m.view());
            for _ in 0..100 {
                let p = random_simplex(&mut rng, 5);
                let v = m.dot(&p).iter().fold(0.0f64, |a, x| a.max(x.abs()));
                assert!(v <= norm + 1e-12);
            }
            // brute force over vertices e_j
            let best = (0..5)
                .map(|j| m.column(j).iter().fold(0.0f64, |a, x| a.max(x.abs())))
                .fold(0.0, f64::max);
            assert_eq!(best, norm);
        }
    }

    #[test]
    fn evaluated_error_of_given_closure() {
        let mm = birth_death(1);
        let k = array![[2.0]];
        let k0 = array![-0.5];
        let res = residual_matrix(&k, &k0, &mm).unwrap();
        assert_eq!(res, array![[0.5, -0.5, 0.5]]);
        assert_eq!(rho_affine_eval(&k, &k0, &mm).unwrap(), 0.5);
        let zero = rho_affine_eval(&array![[0.0]], &array![0.0], &mm).unwrap();
        assert_eq!(zero, 4.0);
        assert!(rho_affine_eval(&array![[1.0, 2.0]], &array![0.0], &mm).is_err());
    }

    #[test]
    fn birth_death_closure_is_the_chebyshev_line() {
        let mm = birth_death(1);
        // grid oracle over (K, K0)
        let mut best = f64::INFINITY;
        for a in 0..=400 {
            for b in 0..=400 {
                let k = a as f64 * 0.01;
                let k0 = -2.0 + b as f64 * 0.01;
                let err = [0.0f64, 1.0, 2.0]
                    .iter()
                    .map(|&s| (s * s - k * s - k0).abs())
                    .fold(0.0, f64::max);
                best = best.min(err);
            }
        }
        assert!((best - 0.5).abs() < 1e-12);

        let c = optimal_affine(&mm, &cfg()).unwrap();
        assert!((c.rho - 0.5).abs() < 1e-9);
        assert!((c.k[[0, 0]] - 2.0).abs() < 1e-9);
        assert!((c.k0[0] + 0.5).abs() < 1e-9);
        assert!(!c.alternative_optima);

        let d = optimal_affine_dual(&mm, &cfg()).unwrap();
        assert!((d.rho - 0.5).abs() < 1e-9);
        for (got, want) in d.f.iter().zip([0.25, -0.5, 0.25]) {
            assert!((got - want).abs() < 1e-9);
        }
        assert_eq!(d.row, Some(0));
        assert!(certificate_defect(&mm, &d) < 1e-9);

        let nl = rho_nl(&mm, &cfg()).unwrap();
        assert!((nl.rho - 0.5).abs() < 1e-9);
        let e1 = mm.v.dot(&nl.p1);
        let e2 = mm.v.dot(&nl.p2);
        assert!((e1[0] - e2[0]).abs() < 1e-9);
        assert!((mm.h.row(0).dot(&(&nl.p1 - &nl.p2)) - 1.0).abs() < 1e-9);

        let all = ClosureResult::compute(&mm, &cfg()).unwrap();
        assert!(all.agrees(AGREEMENT_TOL));
        let ex = all.extremal_states(1e-9);
        assert_eq!(ex, vec![Extremal { count: 3, both_signs: true }]);
    }

    #[test]
    fn degenerate_targets_give_zero() {
        // H is a row of V
        let v = array![[0.0, 1.0, 2.0], [0.0, 1.0, 4.0]];
        let h = array![[0.0, 1.0, 4.0]];
        let mm = MomentMatrices::from_parts(v, h);
        let c = ClosureResult::compute(&mm, &cfg()).unwrap();
        assert!(c.rho_affine.abs() < 1e-9);
        assert!((c.k[[0, 1]] - 1.0).abs() < 1e-9);
        assert!(c.agrees(AGREEMENT_TOL));

        // binary species: s^2 = s on {0, 1}
        let mm = MomentMatrices::from_parts(array![[0.0, 1.0]], array![[0.0, 1.0]]);
        let c = ClosureResult::compute(&mm, &cfg()).unwrap();
        assert!(c.rho_affine.abs() < 1e-12);
        assert!((c.k[[0, 0]] - 1.0).abs() < 1e-12);
        assert!(c.k0[0].abs() < 1e-12);
        assert!(c.rho_nl.abs() < 1e-12 && c.rho_dual.abs() < 1e-12);
    }

    #[test]
    fn moments_determine_distribution() {
        // [V; 1^T] invertible: only f = 0 is dual feasible
        let mm = birth_death(2);
        let d = optimal_affine_dual(&mm, &cfg()).unwrap();
        assert!(d.rho.abs() < 1e-12);
        assert!(rho_nl(&mm, &cfg()).unwrap().rho.abs() < 1e-12);
    }

    #[test]
    fn empty_target_is_trivially_closed() {
        let net = gallery::degradation::<f64>(3, 1.0);
        let ss = StateSpace::enumerate(&net, DEFAULT_STATE_CAP).unwrap();
        let mm = MomentMatrices::build(&net, &ss, 1, DEFAULT_MOMENT_BUDGET).unwrap();
        let c = ClosureResult::compute(&mm, &cfg()).unwrap();
        assert_eq!(c.rho_affine, 0.0);
        assert_eq!(c.worst_row, None);
        assert_eq!(c.k.dim(), (0, 1));
    }

    #[test]
    fn pointwise_closure() {
        let mm = birth_death(1);
        let pw = nl_mcf_pointwise(&mm, array![1.0].view(), &cfg()).unwrap();
        assert!(pw.valid);
        assert!((pw.lower[0] - 1.0).abs() < 1e-9);
        assert!((pw.upper[0] - 2.0).abs() < 1e-9);
        assert!((pw.value[0] - 1.5).abs() < 1e-9);

        let pw = nl_mcf_pointwise(&mm, array![0.0].view(), &cfg()).unwrap();
        assert!(pw.valid);
        assert!(pw.value[0].abs() < 1e-9);
        assert!(pw.half_width() < 1e-9);

        let pw = nl_mcf_pointwise(&mm, array![10.0].view(), &cfg()).unwrap();
        assert!(!pw.valid);
        assert!(pw.value.iter().all(|v| v.is_finite()));

        assert!(nl_mcf_pointwise(&mm, array![1.0, 2.0].view(), &cfg()).is_err());
    }

    #[test]
    fn sampled_distributions_respect_both_guarantees() {
        let net = gallery::dimer::<f64>();
        let ss = StateSpace::enumerate(&net, DEFAULT_STATE_CAP).unwrap();
        let mm = MomentMatrices::build(&net, &ss, 1, DEFAULT_MOMENT_BUDGET).unwrap();
        let c = ClosureResult::compute(&mm, &cfg()).unwrap();
        assert!(c.agrees(AGREEMENT_TOL), "{c:?}");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let p = random_simplex(&mut rng, mm.states());
            let e = mm.v.dot(&p);
            let truth = mm.h.dot(&p);
            let affine = c.k.dot(&e) + &c.k0;
            let err = (&truth - &affine).iter().fold(0.0f64, |a, x| a.max(x.abs()));
            assert!(err <= c.rho_eval + 1e-9);
            let pw = nl_mcf_pointwise(&mm, e.view(), &cfg()).unwrap();
            assert!(pw.valid);
            let err = (&truth - &pw.value).iter().fold(0.0f64, |a, x| a.max(x.abs()));
            assert!(err <= c.rho_nl + 1e-6);
        }
    }

    #[test]
    fn more_moments_never_hurt_a_fixed_target() {
        // fixed target: degree-4 block of the dimer network; inputs grow
        let net = gallery::dimer::<f64>();
        let ss = StateSpace::enumerate(&net, DEFAULT_STATE_CAP).unwrap();
        let full = MomentMatrices::build(&net, &ss, 3, DEFAULT_MOMENT_BUDGET).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..=3usize {
            let rows = full.blocks[k - 1].end;
            let v = full.v.slice(ndarray::s![..rows, ..]).to_owned();
            let mm = MomentMatrices::from_parts(v, full.h.clone());
            let rho = optimal_affine(&mm, &cfg()).unwrap().rho;
            assert!(rho <= last + 1e-9, "k={k}: {rho} > {last}");
            last = rho;
        }
    }

    #[test]
    fn dimension_checks() {
        let mm = birth_death(1);
        assert!(residual_matrix(&array![[1.0]], &array![1.0, 2.0], &mm).is_err());
    }
}
