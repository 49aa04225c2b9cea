//! Symbolic derivation of the open moment equations.
//!
//! For a monomial `m` the CME gives
//! `d/dt E[m(S)] = E[ sum_j a_j(S) (m(S + gamma_j) - m(S)) ]`.
//! Expanding the polynomial inside the expectation and reading off its
//! coefficients by degree yields `dE/dt = A E + b M + r`, where `E` stacks the
//! moments of degree `1..=n` and `M` those of degree `n+1 ..= n+l-1`.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::linalg;
use crate::model::ReactionNetwork;
use crate::poly::{monomial_basis, Monomial, Polynomial};
use crate::statespace::{Generator, MomentMatrices};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentError {
    #[error("closure order must be at least 1")]
    ZeroOrder,
    #[error("derivative of {monomial} has a term of degree {degree}, above n + l - 1 = {limit}")]
    DegreeOverflow {
        monomial: String,
        degree: u32,
        limit: u32,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// `dE/dt = A E + b M + r` with constant coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSystem<F> {
    pub a: Array2<F>,
    pub b: Array2<F>,
    pub r: Array1<F>,
    pub n: u32,
    pub l: u32,
}

impl<F: Scalar> MomentSystem<F> {
    pub fn derive(net: &ReactionNetwork<F>, n: u32) -> Result<Self, MomentError> {
        if n == 0 {
            return Err(MomentError::ZeroOrder);
        }
        let q = net.species_count();
        let l = net.max_degree();
        let top = n + l.saturating_sub(1);
        let v_basis = monomial_basis(q, 1..=n);
        let h_basis = if l >= 2 {
            monomial_basis(q, n + 1..=top)
        } else {
            Vec::new()
        };
        let v_index: HashMap<&Monomial, usize> =
            v_basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let h_index: HashMap<&Monomial, usize> =
            h_basis.iter().enumerate().map(|(i, m)| (m, i)).collect();

        let (dv, dh) = (v_basis.len(), h_basis.len());
        let mut a = Array2::zeros((dv, dv));
        let mut b = Array2::zeros((dv, dh));
        let mut r = Array1::zeros(dv);
        for (row, mono) in v_basis.iter().enumerate() {
            let m = Polynomial::monomial(mono.clone(), F::one());
            let mut drift = Polynomial::zero(q);
            for rxn in net.reactions() {
                let jump = m
                    .shift(&rxn.stoichiometry)
                    .and_then(|s| s.sub(&m))
                    .and_then(|d| rxn.propensity.mul(&d))
                    .map_err(|e| MomentError::Dimension(e.to_string()))?;
                drift = drift
                    .add(&jump)
                    .map_err(|e| MomentError::Dimension(e.to_string()))?;
            }
            for (term, c) in drift.terms() {
                let d = term.degree();
                if d == 0 {
                    r[row] += c;
                } else if let Some(&col) = v_index.get(term) {
                    a[[row, col]] += c;
                } else if let Some(&col) = h_index.get(term) {
                    b[[row, col]] += c;
                } else {
                    return Err(MomentError::DegreeOverflow {
                        monomial: mono.to_string(),
                        degree: d,
                        limit: top,
                    });
                }
            }
        }
        Ok(MomentSystem { a, b, r, n, l })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// The closed-loop matrix `A + b K`.
    pub fn closed_loop(&self, k: &Array2<F>) -> Array2<F> {
        if self.b.ncols() == 0 {
            return self.a.clone();
        }
        &self.a + &self.b.dot(k)
    }

    /// Largest entry of `|V G - (A V + b H + r 1^T)|`. Exact derivation on a
    /// box-consistent network makes this zero up to round-off.
    pub fn identity_residual(
        &self,
        mm: &MomentMatrices<F>,
        g: &Generator<F>,
    ) -> Result<F, MomentError> {
        if mm.dim_v() != self.dim() || mm.dim_h() != self.b.ncols() {
            return Err(MomentError::Dimension(format!(
                "system is {}x{} but matrices are {}x{}",
                self.dim(),
                self.b.ncols(),
                mm.dim_v(),
                mm.dim_h()
            )));
        }
        let lhs = mm.v.dot(&g.matrix);
        let mut rhs = self.a.dot(&mm.v);
        if mm.dim_h() > 0 {
            rhs = rhs + self.b.dot(&mm.h);
        }
        let ones = Array2::from_elem((1, mm.states()), F::one());
        let r_col = self.r.clone().insert_axis(ndarray::Axis(1));
        rhs = rhs + r_col.dot(&ones);
        Ok(linalg::max_abs((&lhs - &rhs).view()))
    }

    /// Right-hand side `A E + b M + r` at a distribution `p`.
    pub fn drift(&self, mm: &MomentMatrices<F>, p: ndarray::ArrayView1<F>) -> Array1<F> {
        let e = mm.v.dot(&p);
        let mut out = self.a.dot(&e) + &self.r;
        if mm.dim_h() > 0 {
            out = out + self.b.dot(&mm.h.dot(&p));
        }
        out
    }
}
