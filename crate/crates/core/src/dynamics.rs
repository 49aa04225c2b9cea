//! Time evolution: the exact CME, the closed moment system, realized errors
//! and the a-priori error bound.
//!
//! Both the CME and the affinely closed moment system are linear with
//! constant coefficients, so every trajectory is propagated with the matrix
//! exponential evaluated at each grid time directly. Values at a given time
//! do not depend on how many other grid points are requested.

use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use thiserror::Error;

use crate::linalg::{self, LinalgError};
use crate::momenteq::MomentSystem;
use crate::statespace::MomentMatrices;
use crate::Scalar;

/// Quadrature intervals used when none are requested.
pub const DEFAULT_QUADRATURE: usize = 1000;
/// Grid points used when none are requested.
pub const DEFAULT_GRID_POINTS: usize = 500;
/// Horizon used when the closed-loop matrix is not stable.
pub const FALLBACK_HORIZON: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid time grid: {0}")]
    Grid(String),
    #[error("quadrature needs at least 2 intervals, got {0}")]
    Quadrature(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("initial distribution is not a probability vector (defect {0:e})")]
    NotProbability(f64),
    #[error("initial error is {0:e}, expected zero")]
    InitialMismatch(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring around a degree-13 Pade
/// approximant.
pub fn expm<F: Scalar>(m: &Array2<F>) -> Result<Array2<F>, DynamicsError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(DynamicsError::NotSquare {
            rows: n,
            cols: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFinite("expm input"));
    }
    let eye = Array2::<F>::eye(n);
    if n == 0 {
        return Ok(eye);
    }
    let norm = linalg::one_norm(m.view()).as_f64();
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = m.mapv(|v| v / F::lit(2f64.powi(squarings)));
    let c = |i: usize| F::lit(PADE13[i]);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let inner_u = &a6 * c(13) + &a4 * c(11) + &a2 * c(9);
    let u_poly = a6.dot(&inner_u) + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &eye * c(1);
    let u = a.dot(&u_poly);
    let inner_v = &a6 * c(12) + &a4 * c(10) + &a2 * c(8);
    let v = a6.dot(&inner_v) + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &eye * c(0);
    let mut r = linalg::solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFinite("expm result"));
    }
    Ok(r)
}

/// `points` uniform times from 0 to `t_end`; a single time when `t_end = 0`
/// or `points = 1`. The last time is exactly `t_end`.
pub fn uniform_grid<F: Scalar>(t_end: F, points: usize) -> Result<Vec<F>, DynamicsError> {
    if !t_end.is_finite() || t_end < F::zero() {
        return Err(DynamicsError::Grid(format!("horizon {t_end} must be finite and >= 0")));
    }
    if points == 0 {
        return Err(DynamicsError::Grid("at least one grid point is required".into()));
    }
    if t_end == F::zero() || points == 1 {
        return Ok(vec![F::zero()]);
    }
    let last = points - 1;
    Ok((0..points)
        .map(|k| {
            if k == last {
                t_end
            } else {
                t_end * F::from_count(k) / F::from_count(last)
            }
        })
        .collect())
}

fn check_grid<F: Scalar>(times: &[F]) -> Result<(), DynamicsError> {
    if times.is_empty() {
        return Err(DynamicsError::Grid("empty".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < F::zero()) {
        return Err(DynamicsError::Grid("times must be finite and >= 0".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(DynamicsError::Grid("times must be strictly increasing".into()));
    }
    Ok(())
}

/// Sampled solution, one column per time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<F> {
    pub times: Vec<F>,
    pub values: Array2<F>,
}

impl<F: Scalar> Trajectory<F> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn at(&self, k: usize) -> ArrayView1<'_, F> {
        self.values.column(k)
    }

    pub fn last(&self) -> ArrayView1<'_, F> {
        self.values.column(self.len() - 1)
    }

    /// Largest `|1^T P(t_k) - 1|` over the grid.
    pub fn mass_defect(&self) -> F {
        self.values
            .columns()
            .into_iter()
            .map(|c| (c.sum() - F::one()).abs())
            .fold(F::zero(), F::max)
    }

    /// Smallest entry over the grid.
    pub fn min_entry(&self) -> F {
        self.values.iter().copied().fold(F::infinity(), F::min)
    }

    /// Applies `m` to every sample.
    pub fn map_linear(&self, m: ArrayView2<F>) -> Trajectory<F> {
        Trajectory {
            times: self.times.clone(),
            values: m.dot(&self.values),
        }
    }
}

fn propagate<F: Scalar>(
    m: &Array2<F>,
    x0: ArrayView1<F>,
    times: &[F],
) -> Result<Array2<F>, DynamicsError> {
    check_grid(times)?;
    let mut out = Array2::zeros((x0.len(), times.len()));
    for (k, &t) in times.iter().enumerate() {
        let col = if t == F::zero() {
            x0.to_owned()
        } else {
            expm(&m.mapv(|v| v * t))?.dot(&x0)
        };
        out.column_mut(k).assign(&col);
    }
    Ok(out)
}

/// `P(t_k) = expm(G t_k) P0`.
pub fn integrate_cme<F: Scalar>(
    g: &Array2<F>,
    p0: ArrayView1<F>,
    times: &[F],
) -> Result<Trajectory<F>, DynamicsError> {
    if g.nrows() != g.ncols() || g.nrows() != p0.len() {
        return Err(DynamicsError::Dimension(format!(
            "generator is {}x{}, initial distribution has {} entries",
            g.nrows(),
            g.ncols(),
            p0.len()
        )));
    }
    let tol = F::tolerance(1e-9);
    let defect = (p0.sum() - F::one()).abs();
    if defect > tol || p0.iter().any(|&v| v < -tol || !v.is_finite()) {
        return Err(DynamicsError::NotProbability(defect.as_f64()));
    }
    Ok(Trajectory {
        times: times.to_vec(),
        values: propagate(g, p0, times)?,
    })
}

/// Augmented matrix `[[A + bK, bK0 + r], [0, 0]]` of the closed system.
pub fn closed_augmented<F: Scalar>(
    ms: &MomentSystem<F>,
    k: &Array2<F>,
    k0: &Array1<F>,
) -> Result<Array2<F>, DynamicsError> {
    let d = ms.dim();
    let dh = ms.b.ncols();
    if k.dim() != (dh, d) || k0.len() != dh {
        return Err(DynamicsError::Dimension(format!(
            "closure is {}x{} with {} offsets, system needs {dh}x{d}",
            k.nrows(),
            k.ncols(),
            k0.len()
        )));
    }
    let mut aug = Array2::zeros((d + 1, d + 1));
    aug.slice_mut(s![..d, ..d]).assign(&ms.closed_loop(k));
    let mut forcing = ms.r.clone();
    if dh > 0 {
        forcing = forcing + ms.b.dot(k0);
    }
    aug.slice_mut(s![..d, d]).assign(&forcing);
    Ok(aug)
}

/// `dnu/dt = (A + bK) nu + (b K0 + r)` from `nu(0) = e0`.
pub fn integrate_closed<F: Scalar>(
    ms: &MomentSystem<F>,
    k: &Array2<F>,
    k0: &Array1<F>,
    e0: ArrayView1<F>,
    times: &[F],
) -> Result<Trajectory<F>, DynamicsError> {
    let d = ms.dim();
    if e0.len() != d {
        return Err(DynamicsError::Dimension(format!(
            "initial moments have {} entries, system has {d}",
            e0.len()
        )));
    }
    let aug = closed_augmented(ms, k, k0)?;
    let mut x0 = Array1::ones(d + 1);
    x0.slice_mut(s![..d]).assign(&e0);
    let values = propagate(&aug, x0.view(), times)?;
    Ok(Trajectory {
        times: times.to_vec(),
        values: values.slice(s![..d, ..]).to_owned(),
    })
}

/// `e(t_k) = V P(t_k) - nu(t_k)`, one column per time.
pub fn error_series<F: Scalar>(
    mm: &MomentMatrices<F>,
    cme: &Trajectory<F>,
    closed: &Trajectory<F>,
) -> Result<Array2<F>, DynamicsError> {
    if cme.times != closed.times {
        return Err(DynamicsError::Grid("trajectories use different grids".into()));
    }
    if cme.values.nrows() != mm.states() || closed.values.nrows() != mm.dim_v() {
        return Err(DynamicsError::Dimension(format!(
            "trajectories have {} and {} rows; expected {} states and {} moments",
            cme.values.nrows(),
            closed.values.nrows(),
            mm.states(),
            mm.dim_v()
        )));
    }
    Ok(mm.v.dot(&cme.values) - &closed.values)
}

/// Per block `i`, `sup_k ||c_i e(t_k)||_inf`. The error at `t = 0` must vanish.
pub fn realized_error<F: Scalar>(
    mm: &MomentMatrices<F>,
    cme: &Trajectory<F>,
    closed: &Trajectory<F>,
) -> Result<Vec<F>, DynamicsError> {
    let e = error_series(mm, cme, closed)?;
    if cme.times[0] == F::zero() {
        let e0 = e.column(0).iter().fold(F::zero(), |a, v| a.max(v.abs()));
        let scale = F::one() + mm.v.dot(&cme.at(0)).iter().fold(F::zero(), |a, v| a.max(v.abs()));
        if e0 > F::tolerance(1e-9) * scale {
            return Err(DynamicsError::InitialMismatch(e0.as_f64()));
        }
    }
    Ok(block_sup(&e, &mm.blocks))
}

/// Per block, the largest absolute entry of each column, maximized over columns.
pub fn block_sup<F: Scalar>(e: &Array2<F>, blocks: &[Range<usize>]) -> Vec<F> {
    blocks
        .iter()
        .map(|b| linalg::max_abs(e.slice(s![b.clone(), ..])))
        .collect()
}

/// Per block, `max_i |e_i(t_k)|` at every time: `blocks x times`.
pub fn block_series<F: Scalar>(e: &Array2<F>, blocks: &[Range<usize>]) -> Array2<F> {
    let mut out = Array2::zeros((blocks.len(), e.ncols()));
    for (i, b) in blocks.iter().enumerate() {
        for k in 0..e.ncols() {
            out[[i, k]] = e
                .slice(s![b.clone(), k])
                .iter()
                .fold(F::zero(), |a, v| a.max(v.abs()));
        }
    }
    out
}

/// A-priori error bound per moment block.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCertificate<F> {
    pub bounds: Vec<F>,
    pub gain_integrals: Vec<F>,
    pub observed: Option<Vec<F>>,
    pub rho: F,
    pub horizon: F,
    pub quadrature_intervals: usize,
}

impl<F: Scalar> ErrorCertificate<F> {
    pub fn with_observed(mut self, observed: Vec<F>) -> Self {
        self.observed = Some(observed);
        self
    }

    /// `observed_i - bound_i` maximized over blocks; `None` without observations.
    pub fn worst_excess(&self) -> Option<F> {
        self.observed.as_ref().map(|obs| {
            obs.iter()
                .zip(&self.bounds)
                .map(|(&o, &b)| o - b)
                .fold(F::neg_infinity(), F::max)
        })
    }

    pub fn is_sound(&self, tol: F) -> bool {
        self.worst_excess().is_none_or(|x| x <= tol)
    }
}

/// Simpson weights on `n` uniform intervals of width `h`; the last three
/// intervals use the 3/8 rule when `n` is odd.
fn quadrature_weights<F: Scalar>(n: usize, h: F) -> Vec<F> {
    let mut w = vec![F::zero(); n + 1];
    for (start, len) in panels(n) {
        let pw = panel_weights(len, h);
        for (k, &v) in pw.iter().enumerate() {
            w[start + k] += v;
        }
    }
    w
}

/// Panels `(first node, intervals)`: pairs, closed by a triple when `n` is odd.
fn panels(n: usize) -> Vec<(usize, usize)> {
    let pairs_end = if n % 2 == 1 { n - 3 } else { n };
    let mut out: Vec<(usize, usize)> = (0..pairs_end).step_by(2).map(|i| (i, 2)).collect();
    if n % 2 == 1 {
        out.push((n - 3, 3));
    }
    out
}

fn panel_weights<F: Scalar>(len: usize, h: F) -> Vec<F> {
    if len == 2 {
        let t = h / F::lit(3.0);
        vec![t, F::lit(4.0) * t, t]
    } else {
        let e = F::lit(3.0) * h / F::lit(8.0);
        vec![e, F::lit(3.0) * e, F::lit(3.0) * e, e]
    }
}

/// Sub-intervals per interval on panels where the integrand has a kink.
const KINK_REFINEMENT: usize = 64;

/// Sign of every entry in the blocks and the row attaining each block norm.
/// A change between nodes marks a kink of the norm integrand.
fn norm_pattern<F: Scalar>(y: &Array2<F>, blocks: &[Range<usize>]) -> (Vec<i8>, Vec<usize>) {
    let mut signs = Vec::new();
    let mut rows = Vec::with_capacity(blocks.len());
    for b in blocks {
        let mut best = (b.start, F::neg_infinity());
        for r in b.clone() {
            let row = y.row(r);
            signs.extend(row.iter().map(|&v| {
                if v > F::zero() {
                    1i8
                } else if v < F::zero() {
                    -1
                } else {
                    0
                }
            }));
            let sum: F = row.iter().map(|v| v.abs()).sum();
            if sum > best.1 {
                best = (r, sum);
            }
        }
        rows.push(best.0);
    }
    (signs, rows)
}

fn block_norms<F: Scalar>(y: &Array2<F>, blocks: &[Range<usize>]) -> Vec<F> {
    blocks
        .iter()
        .map(|b| linalg::inf_norm(y.slice(s![b.clone(), ..])))
        .collect()
}

/// `int_0^T ||c_i e^{(A+bK)s} b||_inf ds` per block by composite Simpson.
/// Panels across which the norm changes its active signs or rows are
/// integrated on a finer uniform subgrid instead.
pub fn gain_integrals<F: Scalar>(
    ms: &MomentSystem<F>,
    k: &Array2<F>,
    blocks: &[Range<usize>],
    horizon: F,
    intervals: usize,
) -> Result<Vec<F>, DynamicsError> {
    if intervals < 2 {
        return Err(DynamicsError::Quadrature(intervals));
    }
    if !horizon.is_finite() || horizon < F::zero() {
        return Err(DynamicsError::Grid(format!("horizon {horizon} must be finite and >= 0")));
    }
    let d = ms.dim();
    if k.dim() != (ms.b.ncols(), d) {
        return Err(DynamicsError::Dimension(format!(
            "closure gain is {}x{}, system needs {}x{d}",
            k.nrows(),
            k.ncols(),
            ms.b.ncols()
        )));
    }
    if blocks.iter().any(|b| b.end > d) {
        return Err(DynamicsError::Dimension("block exceeds system dimension".into()));
    }
    if ms.b.ncols() == 0 || horizon == F::zero() {
        return Ok(vec![F::zero(); blocks.len()]);
    }
    let m = ms.closed_loop(k);
    let h = horizon / F::from_count(intervals);
    let step = expm(&m.mapv(|v| v * h))?;
    let fine_h = h / F::from_count(KINK_REFINEMENT);
    let fine_step = expm(&m.mapv(|v| v * fine_h))?;
    let fine_weights = quadrature_weights(KINK_REFINEMENT, fine_h);

    let mut acc = vec![F::zero(); blocks.len()];
    let mut y = ms.b.clone();
    for (_, len) in panels(intervals) {
        let mut nodes = vec![y.clone()];
        for _ in 0..len {
            let next = step.dot(nodes.last().expect("panel has a start node"));
            nodes.push(next);
        }
        let first = norm_pattern(&nodes[0], blocks);
        let smooth = nodes[1..].iter().all(|n| norm_pattern(n, blocks) == first);
        if smooth {
            for (node, w) in nodes.iter().zip(panel_weights(len, h)) {
                for (a, v) in acc.iter_mut().zip(block_norms(node, blocks)) {
                    *a += w * v;
                }
            }
        } else {
            for start in &nodes[..len] {
                let mut z = start.clone();
                for (j, &w) in fine_weights.iter().enumerate() {
                    if j > 0 {
                        z = fine_step.dot(&z);
                    }
                    for (a, v) in acc.iter_mut().zip(block_norms(&z, blocks)) {
                        *a += w * v;
                    }
                }
            }
        }
        y = nodes.pop().expect("panel has an end node");
    }
    if acc.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFinite("gain integral"));
    }
    Ok(acc)
}

/// `bound_i = gain_integral_i * rho`.
pub fn error_bound<F: Scalar>(
    ms: &MomentSystem<F>,
    k: &Array2<F>,
    blocks: &[Range<usize>],
    rho: F,
    horizon: F,
    intervals: usize,
) -> Result<ErrorCertificate<F>, DynamicsError> {
    let gains = gain_integrals(ms, k, blocks, horizon, intervals)?;
    Ok(ErrorCertificate {
        bounds: gains.iter().map(|&g| g * rho).collect(),
        gain_integrals: gains,
        observed: None,
        rho,
        horizon,
        quadrature_intervals: intervals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    pub t: f64,
    pub stable: bool,
    pub abscissa: Option<f64>,
}

/// `10 / |max Re lambda(A + bK)|` when the closed loop is stable, else
/// [`FALLBACK_HORIZON`] with `stable = false`.
pub fn default_horizon<F: Scalar>(
    ms: &MomentSystem<F>,
    k: &Array2<F>,
) -> Result<Horizon, DynamicsError> {
    let abscissa = linalg::spectral_abscissa(ms.closed_loop(k).view())?;
    Ok(match abscissa {
        Some(a) if a < -1e-12 => Horizon {
            t: 10.0 / a.abs(),
            stable: true,
            abscissa,
        },
        _ => Horizon {
            t: FALLBACK_HORIZON,
            stable: false,
            abscissa,
        },
    })
}

/// Fixed-step classical Runge-Kutta for `dx/dt = m x`, as an independent
/// check on [`expm`]. Returns `x(t_end)`.
pub fn rk4<F: Scalar>(
    m: &Array2<F>,
    x0: ArrayView1<F>,
    t_end: F,
    h: F,
) -> Result<Array1<F>, DynamicsError> {
    if !(h > F::zero()) || !t_end.is_finite() || t_end < F::zero() {
        return Err(DynamicsError::Grid(format!("step {h} and horizon {t_end} must be positive")));
    }
    let steps = (t_end / h).ceil().to_usize().unwrap_or(0);
    let mut x = x0.to_owned();
    if steps == 0 {
        return Ok(x);
    }
    let dt = t_end / F::from_count(steps);
    let half = F::lit(0.5) * dt;
    let sixth = dt / F::lit(6.0);
    for _ in 0..steps {
        let k1 = m.dot(&x);
        let k2 = m.dot(&(&x + &(&k1 * half)));
        let k3 = m.dot(&(&x + &(&k2 * half)));
        let k4 = m.dot(&(&x + &(&k3 * dt)));
        x = x + (k1 + (k2 + k3) * F::lit(2.0) + k4) * sixth;
    }
    Ok(x)
}

/// Central finite difference of `V P(t)` versus the moment drift at `t`.
pub fn derivative_defect<F: Scalar>(
    ms: &MomentSystem<F>,
    mm: &MomentMatrices<F>,
    g: &Array2<F>,
    p0: ArrayView1<F>,
    t: F,
    dt: F,
) -> Result<F, DynamicsError> {
    let times = [t - dt, t, t + dt];
    let traj = integrate_cme(g, p0, &times)?;
    let e = traj.map_linear(mm.v.view());
    let fd = (&e.at(2) - &e.at(0)) / (F::lit(2.0) * dt);
    let drift = ms.drift(mm, traj.at(1));
    Ok((&fd - &drift).iter().fold(F::zero(), |a, v| a.max(v.abs())))
}

/// Moments of block `i` from a moment-trajectory: `c_i values`.
pub fn block_rows<F: Scalar>(values: &Array2<F>, block: Range<usize>) -> Array2<F> {
    values.slice(s![block, ..]).to_owned()
}

/// Columns of `values` renormalized to unit mass, for reporting only.
pub fn renormalized<F: Scalar>(values: &Array2<F>) -> Array2<F> {
    let sums = values.sum_axis(Axis(0));
    values / &sums.insert_axis(Axis(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closure::{optimal_affine, ClosureResult};
    use crate::gallery;
    use crate::lp::LpConfig;
    use crate::model::DEFAULT_STATE_CAP;
    use crate::statespace::{Generator, StateSpace, DEFAULT_MOMENT_BUDGET};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        linalg::max_abs((a - b).view())
    }

    #[test]
    fn expm_trivial_cases() {
        let z = Array2::<f64>::zeros((3, 3));
        assert_eq!(expm(&z).unwrap(), Array2::eye(3));
        let d = array![[1.5, 0.0], [0.0, -2.0]];
        let e = expm(&d).unwrap();
        assert!((e[[0, 0]] - 1.5f64.exp()).abs() < 1e-13 * 1.5f64.exp());
        assert!((e[[1, 1]] - (-2.0f64).exp()).abs() < 1e-15);
        assert!(e[[0, 1]].abs() < 1e-15);
        let rot = array![[0.0, -1.0], [1.0, 0.0]];
        let r = expm(&rot).unwrap();
        assert!(close(&r, &array![[1f64.cos(), -1f64.sin()], [1f64.sin(), 1f64.cos()]]) < 1e-14);
        assert_eq!(expm(&Array2::<f64>::zeros((0, 0))).unwrap().dim(), (0, 0));
    }

    #[test]
    fn expm_rejects_bad_input() {
        assert!(matches!(
            expm(&Array2::<f64>::zeros((2, 3))),
            Err(DynamicsError::NotSquare { .. })
        ));
        assert!(matches!(
            expm(&array![[f64::NAN]]),
            Err(DynamicsError::NonFinite(_))
        ));
    }

    #[test]
    fn expm_inverse_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut m: Array2<f64> = Array2::from_shape_fn((10, 10), |_| rng.gen_range(-1.0..1.0));
            let scale = 5.0 * rng.gen_range(0.1..1.0) / linalg::inf_norm(m.view());
            m *= scale;
            let prod = expm(&m).unwrap().dot(&expm(&-&m).unwrap());
            assert!(close(&prod, &Array2::eye(10)) < 1e-9);
        }
    }

    #[test]
    fn expm_large_norm_and_f32() {
        let d = array![[-300.0, 0.0], [0.0, 4.0]];
        let e = expm(&d).unwrap();
        assert!((e[[1, 1]] / 4f64.exp() - 1.0).abs() < 1e-12);
        assert!(e[[0, 0]].abs() < 1e-100);
        let m32 = array![[0.0f32, 1.0], [-1.0, 0.0]];
        let r = expm(&m32).unwrap();
        assert!((r[[0, 0]] - 1f32.cos()).abs() < 1e-5);
    }

    #[test]
    fn grids() {
        assert_eq!(uniform_grid(0.0, 500).unwrap(), vec![0.0]);
        assert_eq!(uniform_grid(3.0, 1).unwrap(), vec![0.0]);
        let g = uniform_grid(10.0, 3).unwrap();
        assert_eq!(g, vec![0.0, 5.0, 10.0]);
        assert_eq!(*uniform_grid(0.7, 499).unwrap().last().unwrap(), 0.7);
        assert!(uniform_grid(-1.0, 3).is_err());
        assert!(uniform_grid(1.0, 0).is_err());
        let g = Array2::<f64>::zeros((1, 1));
        assert!(integrate_cme(&g, array![1.0].view(), &[1.0, 0.5]).is_err());
    }

    fn birth_death() -> (crate::model::ReactionNetwork<f64>, StateSpace, Generator<f64>) {
        let net = gallery::birth_death(1.0, 1.0);
        let ss = StateSpace::enumerate(&net, DEFAULT_STATE_CAP).unwrap();
        let g = Generator::build(&net, &ss);
        (net, ss, g)
    }

    #[test]
    fn cme_limits_and_conservation() {
        let (_, _, g) = birth_death();
        let p0 = array![1.0, 0.0, 0.0];
        let times = uniform_grid(50.0, 51).unwrap();
        let traj = integrate_cme(&g.matrix, p0.view(), &times).unwrap();
        assert!(traj.mass_defect() < 1e-9);
        assert!(traj.min_entry() > -1e-10);
        for (got, want) in traj.last().iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-8);
        }
        for &t in &[0.1, 1.0, 7.0] {
            let e = expm(&g.matrix.mapv(|v| v * t)).unwrap();
            for c in e.columns() {
                assert!((c.sum() - 1.0).abs() < 1e-12);
            }
        }
        let zero = Array2::<f64>::zeros((3, 3));
        let flat = integrate_cme(&zero, array![0.2, 0.3, 0.5].view(), &times).unwrap();
        for k in 0..flat.len() {
            assert_eq!(flat.at(k), array![0.2, 0.3, 0.5]);
        }
        assert!(matches!(
            integrate_cme(&g.matrix, array![0.5, 0.0, 0.0].view(), &times),
            Err(DynamicsError::NotProbability(_))
        ));
    }

    #[test]
    fn grid_size_does_not_change_values() {
        let (_, _, g) = birth_death();
        let p0 = array![1.0, 0.0, 0.0];
        let coarse = integrate_cme(&g.matrix, p0.view(), &uniform_grid(10.0, 2).unwrap()).unwrap();
        let fine = integrate_cme(&g.matrix, p0.view(), &uniform_grid(10.0, 500).unwrap()).unwrap();
        assert_eq!(coarse.last(), fine.last());
        assert_eq!(coarse.at(0), fine.at(0));
    }

    #[test]
    fn closed_birth_death_solution() {
        let ms = MomentSystem::derive(&gallery::birth_death::<f64>(1.0, 1.0), 1).unwrap();
        let k = array![[2.0]];
        let k0 = array![-0.5];
        let times = uniform_grid(10.0, 101).unwrap();
        let nu = integrate_closed(&ms, &k, &k0, array![0.0].view(), &times).unwrap();
        for (j, &t) in times.iter().enumerate() {
            assert!((nu.values[[0, j]] - (1.0 - (-3.0 * t).exp())).abs() < 1e-12);
        }
        assert!((nu.last()[0] - 1.0).abs() < 1e-9);
        let still = integrate_closed(&ms, &k, &k0, array![1.0].view(), &times).unwrap();
        assert!(still.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let h = default_horizon(&ms, &k).unwrap();
        assert!(h.stable);
        assert!((h.t - 10.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn bound_for_birth_death() {
        let (net, ss, g) = birth_death();
        let ms = MomentSystem::derive(&net, 1).unwrap();
        let mm = MomentMatrices::build(&net, &ss, 1, DEFAULT_MOMENT_BUDGET).unwrap();
        let c = ClosureResult::compute(&mm, &LpConfig::default()).unwrap();
        let cert = error_bound(&ms, &c.k, &mm.blocks, c.rho_eval, 10.0, DEFAULT_QUADRATURE).unwrap();
        assert!((cert.bounds[0] - 1.0 / 3.0).abs() < 1e-4);
        assert!((cert.gain_integrals[0] - 2.0 / 3.0).abs() < 1e-4);

        let times = uniform_grid(10.0, DEFAULT_GRID_POINTS).unwrap();
        let p0 = array![1.0, 0.0, 0.0];
        let cme = integrate_cme(&g.matrix, p0.view(), &times).unwrap();
        let e0 = mm.v.dot(&p0);
        let nu = integrate_closed(&ms, &c.k, &c.k0, e0.view(), &times).unwrap();
        let obs = realized_error(&mm, &cme, &nu).unwrap();
        assert!(obs[0] > 0.0);
        let cert = cert.with_observed(obs);
        assert!(cert.is_sound(1e-6));

        let zero = error_bound(&ms, &c.k, &mm.blocks, 0.0, 10.0, 100).unwrap();
        assert_eq!(zero.bounds, vec![0.0]);
        assert!(matches!(
            error_bound(&ms, &c.k, &mm.blocks, 0.5, 10.0, 1),
            Err(DynamicsError::Quadrature(1))
        ));
    }

    #[test]
    fn quadrature_rules() {
        // odd and even interval counts integrate cubics exactly
        for n in [2usize, 3, 4, 5, 7, 10] {
            let h = 2.0 / n as f64;
            let w = quadrature_weights(n, h);
            let integral: f64 = w
                .iter()
                .enumerate()
                .map(|(i, wi)| {
                    let x = i as f64 * h;
                    wi * (x * x * x - x + 1.0)
                })
                .sum();
            assert!((integral - 4.0).abs() < 1e-12, "n={n}: {integral}");
        }
    }

    #[test]
    fn quadrature_converges() {
        let net = gallery::dimer::<f64>();
        let ss = StateSpace::enumerate(&net, DEFAULT_STATE_CAP).unwrap();
        for n in 1..=2 {
            let ms = MomentSystem::derive(&net, n).unwrap();
            let mm = MomentMatrices::build(&net, &ss, n, DEFAULT_MOMENT_BUDGET).unwrap();
            let aff = optimal_affine(&mm, &LpConfig::default()).unwrap();
            let h = default_horizon(&ms, &aff.k).unwrap();
            let a = gain_integrals(&ms, &aff.k, &mm.blocks, h.t, 1000).unwrap();
            let b = gain_integrals(&ms, &aff.k, &mm.blocks, h.t, 2000).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() * aff.rho < 1e-6, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn linear_network_has_no_error() {
        let net = gallery::degradation::<f64>(4, 0.8);
        let ss = StateSpace::enumerate(&net, DEFAULT_STATE_CAP).unwrap();
        let g = Generator::build(&net, &ss);
        let ms = MomentSystem::derive(&net, 1).unwrap();
        let mm = MomentMatrices::build(&net, &ss, 1, DEFAULT_MOMENT_BUDGET).unwrap();
        let k = Array2::zeros((0, 1));
        let k0 = Array1::zeros(0);
        let mut p0 = Array1::zeros(5);
        p0[4] = 1.0;
        let times = uniform_grid(5.0, 50).unwrap();
        let cme = integrate_cme(&g.matrix, p0.view(), &times).unwrap();
        let nu = integrate_closed(&ms, &k, &k0, mm.v.dot(&p0).view(), &times).unwrap();
        let err = realized_error(&mm, &cme, &nu).unwrap();
        assert!(err[0] < 1e-9);
        let cert = error_bound(&ms, &k, &mm.blocks, 0.0, 5.0, 10).unwrap();
        assert_eq!(cert.bounds, vec![0.0]);
    }

    #[test]
    fn derivative_matches_moment_drift() {
        let net = gallery::dimer::<f64>();
        let ss = StateSpace::enumerate(&net, DEFAULT_STATE_CAP).unwrap();
        let g = Generator::build(&net, &ss);
        let ms = MomentSystem::derive(&net, 2).unwrap();
        let mm = MomentMatrices::build(&net, &ss, 2, DEFAULT_MOMENT_BUDGET).unwrap();
        let p0 = ss.delta::<f64>(&[0, 0]).unwrap();
        let d1 = derivative_defect(&ms, &mm, &g.matrix, p0.view(), 0.5, 1e-2).unwrap();
        let d2 = derivative_defect(&ms, &mm, &g.matrix, p0.view(), 0.5, 5e-3).unwrap();
        assert!(d1 < 1e-2);
        let ratio = d1 / d2;
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }

    #[test]
    fn rk4_agrees_with_expm() {
        let net = gallery::conversion::<f64>(3, 0.7, 1.2);
        let ss = StateSpace::enumerate(&net, DEFAULT_STATE_CAP).unwrap();
        let g = Generator::build(&net, &ss);
        let p0 = ss.delta::<f64>(&[3, 0]).unwrap();
        let h = 0.01 / linalg::inf_norm(g.matrix.view());
        let x = rk4(&g.matrix, p0.view(), 2.0, h).unwrap();
        let y = integrate_cme(&g.matrix, p0.view(), &[2.0]).unwrap();
        let diff = (&x - &y.at(0)).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(diff < 1e-7, "{diff}");
    }

    #[test]
    fn unstable_loop_falls_back() {
        let ms = MomentSystem {
            a: array![[0.5]],
            b: Array2::zeros((1, 0)),
            r: array![0.0],
            n: 1,
            l: 1,
        };
        let h = default_horizon(&ms, &Array2::zeros((0, 1))).unwrap();
        assert!(!h.stable);
        assert_eq!(h.t, FALLBACK_HORIZON);
    }
}
