//! Sparse multivariate polynomials over species counts.
//!
//! Terms are kept in a `BTreeMap` keyed by [`Monomial`], whose ordering is the
//! canonical one used for every moment vector in the crate: graded by total
//! degree, then lexicographically *descending* exponent tuples. For two
//! variables and degree two that is `x1^2, x1 x2, x2^2`.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("variable count mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
}

/// Exponent tuple `(k_1, ..., k_q)` of `x_1^k_1 ... x_q^k_q`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    /// The constant monomial `1` in `nvars` variables.
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    /// `x_var` in `nvars` variables.
    pub fn var(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.nvars(), other.nvars());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Evaluates the monomial at an integer point.
    pub fn eval<F: Scalar>(&self, point: &[i64]) -> F {
        self.0
            .iter()
            .zip(point)
            .fold(F::one(), |acc, (&e, &k)| acc * F::from_int(k).powi(e as i32))
    }

    /// Short label such as `2_1` for `x1^2 x2`; used for CSV headers.
    pub fn label(&self) -> String {
        self.0
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join("_")
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.degree() == 0 {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            write!(f, "x{}", i + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// All monomials of total degree `degree` in `nvars` variables, in canonical
/// order. There are `C(degree + nvars - 1, nvars - 1)` of them.
pub fn monomials_of_degree(nvars: usize, degree: u32) -> Vec<Monomial> {
    fn fill(rest: u32, slot: usize, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if slot + 1 == cur.len() {
            cur[slot] = rest;
            out.push(Monomial(cur.clone()));
            return;
        }
        for e in (0..=rest).rev() {
            cur[slot] = e;
            fill(rest - e, slot + 1, cur, out);
        }
    }
    if nvars == 0 {
        return if degree == 0 { vec![Monomial(vec![])] } else { vec![] };
    }
    let mut out = Vec::new();
    fill(degree, 0, &mut vec![0; nvars], &mut out);
    out
}

/// Monomials of every degree in `degrees`, concatenated block by block.
pub fn monomial_basis(nvars: usize, degrees: std::ops::RangeInclusive<u32>) -> Vec<Monomial> {
    degrees
        .flat_map(|d| monomials_of_degree(nvars, d))
        .collect()
}

/// Polynomial with real coefficients; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<F> {
    nvars: usize,
    terms: BTreeMap<Monomial, F>,
}

impl<F: Scalar> Polynomial<F> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: F) -> Self {
        Self::from_terms(nvars, [(Monomial::one(nvars), c)])
            .expect("constant monomial has the right arity")
    }

    /// The coordinate polynomial `x_var`.
    pub fn var(nvars: usize, var: usize) -> Self {
        Self::monomial(Monomial::var(nvars, var), F::one())
    }

    pub fn monomial(m: Monomial, c: F) -> Self {
        let nvars = m.nvars();
        Self::from_terms(nvars, [(m, c)]).expect("monomial arity is nvars")
    }

    /// Builds a polynomial from `(monomial, coefficient)` pairs, summing
    /// repeated monomials and dropping exact zeros.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (Monomial, F)>,
    {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            if m.nvars() != nvars {
                return Err(PolyError::Dimension {
                    expected: nvars,
                    found: m.nvars(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, m: Monomial, c: F) {
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                if c != F::zero() {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == F::zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, F)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coeff(&self, m: &Monomial) -> F {
        self.terms.get(m).copied().unwrap_or_else(F::zero)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn check(&self, other: &Self) -> Result<(), PolyError> {
        if self.nvars != other.nvars {
            return Err(PolyError::Dimension {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, &c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.add(&other.scale(-F::one()))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check(other)?;
        let mut out = Self::zero(self.nvars);
        for (ma, &ca) in &self.terms {
            for (mb, &cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: F) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    /// Returns `p(x + shift)`, expanded with integer binomials (exact while
    /// they fit in `i128`, floating point beyond).
    pub fn shift(&self, shift: &[i64]) -> Result<Self, PolyError> {
        if shift.len() != self.nvars {
            return Err(PolyError::Dimension {
                expected: self.nvars,
                found: shift.len(),
            });
        }
        let q = self.nvars;
        let mut out = Self::zero(q);
        for (m, &c) in &self.terms {
            // (x_i + g_i)^e = sum_t C(e, t) g_i^(e - t) x_i^t, one factor per variable
            let mut acc = Self::constant(q, c);
            for (var, (&e, &g)) in m.exponents().iter().zip(shift).enumerate() {
                if e == 0 {
                    continue;
                }
                let mut factor = Self::zero(q);
                for t in 0..=e {
                    let coeff = binomial(e, t)
                        .zip((g as i128).checked_pow(e - t))
                        .and_then(|(b, p)| b.checked_mul(p))
                        .map_or_else(|| binomial_f64(e, t) * (g as f64).powi((e - t) as i32), |v| v as f64);
                    let mut exps = vec![0; q];
                    exps[var] = t;
                    factor.add_term(Monomial(exps), F::lit(coeff));
                }
                acc = acc.mul(&factor)?;
            }
            out = out.add(&acc)?;
        }
        Ok(out)
    }

    /// Evaluates at an integer point.
    pub fn eval(&self, point: &[i64]) -> Result<F, PolyError> {
        if point.len() != self.nvars {
            return Err(PolyError::Dimension {
                expected: self.nvars,
                found: point.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(m, &c)| c * m.eval::<F>(point))
            .sum())
    }

    /// Value at an integer point together with `sum |c_t m_t(point)|`.
    pub fn eval_with_magnitude(&self, point: &[i64]) -> Result<(F, F), PolyError> {
        let value = self.eval(point)?;
        let magnitude = self
            .terms
            .iter()
            .map(|(m, &c)| (c * m.eval::<F>(point)).abs())
            .sum();
        Ok((value, magnitude))
    }
}

impl<F: Scalar> fmt::Display for Polynomial<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if m.degree() == 0 {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}*{m}")?;
            }
        }
        Ok(())
    }
}

fn binomial(n: u32, k: u32) -> Option<i128> {
    let k = k.min(n - k);
    (0..k).try_fold(1i128, |acc, i| Some(acc.checked_mul((n - i) as i128)? / (i + 1) as i128))
}

fn binomial_f64(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type P = Polynomial<f64>;

    fn poly1(terms: &[(u32, f64)]) -> P {
        P::from_terms(1, terms.iter().map(|&(e, c)| (Monomial::new(vec![e]), c))).unwrap()
    }

    fn poly2(terms: &[((u32, u32), f64)]) -> P {
        P::from_terms(
            2,
            terms
                .iter()
                .map(|&((a, b), c)| (Monomial::new(vec![a, b]), c)),
        )
        .unwrap()
    }

    #[test]
    fn high_degree_shift_stays_finite() {
        // binomials of degree 200 overflow i128
        let p = poly1(&[(200, 1.0)]);
        let s = p.shift(&[1]).unwrap();
        let want = 2f64.powi(200);
        let got = s.eval(&[1]).unwrap();
        assert!(((got - want) / want).abs() < 1e-12);
    }

    #[test]
    fn add_like_terms_and_identity() {
        let x = P::var(2, 0);
        assert_eq!(x.add(&x).unwrap(), x.scale(2.0));
        assert_eq!(x.add(&P::zero(2)).unwrap(), x);
    }

    #[test]
    fn add_drops_cancelled_terms() {
        let p = poly2(&[((2, 0), 1.0), ((0, 1), -1.0)]);
        let q = poly2(&[((0, 1), 1.0)]);
        let s = p.add(&q).unwrap();
        assert_eq!(s, poly2(&[((2, 0), 1.0)]));
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn mismatched_arity_is_an_error() {
        let err = P::var(1, 0).add(&P::var(2, 0)).unwrap_err();
        assert_eq!(err, PolyError::Dimension { expected: 1, found: 2 });
        assert!(P::var(1, 0).mul(&P::var(2, 1)).is_err());
        assert!(P::var(2, 0).shift(&[1]).is_err());
        assert!(P::var(2, 0).eval(&[1]).is_err());
    }

    #[test]
    fn products() {
        let s = P::var(1, 0);
        assert_eq!(s.mul(&s).unwrap(), poly1(&[(2, 1.0)]));
        let s_minus_1 = poly1(&[(1, 1.0), (0, -1.0)]);
        assert_eq!(s.mul(&s_minus_1).unwrap(), poly1(&[(2, 1.0), (1, -1.0)]));
        let two_minus_s = poly1(&[(0, 2.0), (1, -1.0)]);
        assert_eq!(two_minus_s.mul(&P::constant(1, 1.0)).unwrap(), two_minus_s);
    }

    #[test]
    fn shifts() {
        let x2 = poly1(&[(2, 1.0)]);
        assert_eq!(
            x2.shift(&[1]).unwrap(),
            poly1(&[(2, 1.0), (1, 2.0), (0, 1.0)])
        );
        assert_eq!(
            P::var(1, 0).shift(&[-2]).unwrap(),
            poly1(&[(1, 1.0), (0, -2.0)])
        );
        // (x1 + 1)(x2 - 1)
        let x1x2 = poly2(&[((1, 1), 1.0)]);
        let expect = poly2(&[((1, 1), 1.0), ((1, 0), -1.0), ((0, 1), 1.0), ((0, 0), -1.0)]);
        let got = x1x2.shift(&[1, -1]).unwrap();
        assert_eq!(got, expect);
        for a in -3..4 {
            for b in -3..4 {
                let direct = x1x2.eval(&[a + 1, b - 1]).unwrap();
                assert_eq!(got.eval(&[a, b]).unwrap(), direct);
            }
        }
    }

    #[test]
    fn evaluations() {
        let s2_minus_s = poly1(&[(2, 1.0), (1, -1.0)]);
        assert_eq!(s2_minus_s.eval(&[2]).unwrap(), 2.0);
        let two_minus_s = poly1(&[(0, 2.0), (1, -1.0)]);
        assert_eq!(two_minus_s.eval(&[2]).unwrap(), 0.0);
        let x1x22 = poly2(&[((1, 2), 1.0)]);
        assert_eq!(x1x22.eval(&[2, 3]).unwrap(), 18.0);
    }

    #[test]
    fn canonical_order_matches_listing() {
        let m = monomials_of_degree(2, 2);
        let e: Vec<_> = m.iter().map(|m| m.exponents().to_vec()).collect();
        assert_eq!(e, vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        let m3 = monomials_of_degree(2, 3);
        let e3: Vec<_> = m3.iter().map(|m| m.exponents().to_vec()).collect();
        assert_eq!(e3, vec![vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]]);
    }

    #[test]
    fn monomial_counts_and_strict_order() {
        for q in 1..=4usize {
            for d in 0..=5u32 {
                let ms = monomials_of_degree(q, d);
                let expected = binomial(d + q as u32 - 1, q as u32 - 1).unwrap() as usize;
                assert_eq!(ms.len(), expected, "q={q} d={d}");
                assert!(ms.windows(2).all(|w| w[0] < w[1]));
                assert!(ms.iter().all(|m| m.degree() == d));
            }
        }
        let basis = monomial_basis(2, 1..=3);
        assert!(basis.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn display_is_readable() {
        let p = poly2(&[((1, 1), 3.0), ((0, 0), -1.0)]);
        assert_eq!(p.to_string(), "3*x1*x2 + -1");
        assert_eq!(P::zero(2).to_string(), "0");
    }

    fn small_poly(q: usize) -> impl Strategy<Value = P> {
        prop::collection::vec(
            (prop::collection::vec(0u32..3, q), -3i32..=3),
            0..5,
        )
        .prop_map(move |ts| {
            P::from_terms(q, ts.into_iter().map(|(e, c)| (Monomial::new(e), c as f64))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn shift_commutes_with_eval(
            p in small_poly(2),
            g in prop::collection::vec(-2i64..=2, 2),
            k in prop::collection::vec(-3i64..=3, 2),
        ) {
            let shifted = p.shift(&g).unwrap().eval(&k).unwrap();
            let direct = p.eval(&[k[0] + g[0], k[1] + g[1]]).unwrap();
            prop_assert_eq!(shifted, direct);
        }

        #[test]
        fn mul_commutative_associative(a in small_poly(2), b in small_poly(2), c in small_poly(2)) {
            let ab = a.mul(&b).unwrap();
            prop_assert_eq!(&ab, &b.mul(&a).unwrap());
            let l = ab.mul(&c).unwrap();
            let r = a.mul(&b.mul(&c).unwrap()).unwrap();
            for k0 in -2i64..=2 {
                for k1 in -2i64..=2 {
                    let x = l.eval(&[k0, k1]).unwrap();
                    let y = r.eval(&[k0, k1]).unwrap();
                    prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
                }
            }
        }
    }
}
