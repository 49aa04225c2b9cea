//! Small reference networks, plus a generator of random box-consistent
//! networks behind the `random` feature.

use crate::model::{Reaction, ReactionNetwork, Species};
use crate::poly::{Monomial, Polynomial};
use crate::Scalar;

fn poly<F: Scalar>(nvars: usize, terms: &[(&[u32], f64)]) -> Polynomial<F> {
    Polynomial::from_terms(
        nvars,
        terms
            .iter()
            .map(|(e, c)| (Monomial::new(e.to_vec()), F::lit(*c))),
    )
    .expect("literal arity")
}

/// One species on `{0, 1, 2}`: `a1 = k1 (2 - s)` with `+1`, and
/// `a2 = k2 s (s - 1)` with `-2`.
pub fn birth_death<F: Scalar>(k1: f64, k2: f64) -> ReactionNetwork<F> {
    ReactionNetwork::new(
        vec![Species::new("X", 2)],
        vec![
            Reaction::new(vec![1], poly(1, &[(&[0], 2.0 * k1), (&[1], -k1)])),
            Reaction::new(vec![-2], poly(1, &[(&[2], k2), (&[1], -k2)])),
        ],
    )
    .expect("well-formed")
}

/// `A <-> B` on the box `[0, total]^2`. Each direction carries a capacity
/// factor, `a1 = k1 s_A (total - s_B)` and `a2 = k2 s_B (total - s_A)`, so that
/// no transition leaves the box.
pub fn conversion<F: Scalar>(total: u32, k1: f64, k2: f64) -> ReactionNetwork<F> {
    let t = total as f64;
    ReactionNetwork::new(
        vec![Species::new("A", total), Species::new("B", total)],
        vec![
            Reaction::new(
                vec![-1, 1],
                poly(2, &[(&[1, 0], k1 * t), (&[1, 1], -k1)]),
            ),
            Reaction::new(
                vec![1, -1],
                poly(2, &[(&[0, 1], k2 * t), (&[1, 1], -k2)]),
            ),
        ],
    )
    .expect("well-formed")
}

/// Two species on `[0, 4] x [0, 2]`: bounded production of `A`, pairwise
/// loss `A + A -> 0`, `A`-driven production of `B`, and decay of `B`.
pub fn dimer<F: Scalar>() -> ReactionNetwork<F> {
    ReactionNetwork::new(
        vec![Species::new("A", 4), Species::new("B", 2)],
        vec![
            Reaction::new(vec![1, 0], poly(2, &[(&[0, 0], 4.0), (&[1, 0], -1.0)])),
            Reaction::new(vec![-2, 0], poly(2, &[(&[2, 0], 0.5), (&[1, 0], -0.5)])),
            Reaction::new(vec![0, 1], poly(2, &[(&[1, 0], 0.6), (&[1, 1], -0.3)])),
            Reaction::new(vec![0, -1], poly(2, &[(&[0, 1], 1.0)])),
        ],
    )
    .expect("well-formed")
}

/// First-order decay `a = k s` on `[0, upper]`; the first moment closes.
pub fn degradation<F: Scalar>(upper: u32, k: f64) -> ReactionNetwork<F> {
    ReactionNetwork::new(
        vec![Species::new("X", upper)],
        vec![Reaction::new(vec![-1], poly(1, &[(&[1], k)]))],
    )
    .expect("well-formed")
}

/// Product of `(upper - t - x)` or `(x - t)` factors that vanish exactly on
/// the states from which a step of `step` along `var` would leave `[0, upper]`.
#[cfg(any(feature = "random", test))]
fn vanishing_factor<F: Scalar>(nvars: usize, var: usize, step: i64, upper: u32) -> Polynomial<F> {
    let x = Polynomial::var(nvars, var);
    let mut acc = Polynomial::constant(nvars, F::one());
    for t in 0..step.unsigned_abs() as i64 {
        let f = if step > 0 {
            Polynomial::constant(nvars, F::from_int(upper as i64 - t)).sub(&x)
        } else {
            x.sub(&Polynomial::constant(nvars, F::from_int(t)))
        }
        .expect("same arity");
        acc = acc.mul(&f).expect("same arity");
    }
    acc
}

/// Random network with `q <= max_species` species, bounds in `1..=max_upper`,
/// and propensities of degree at most `max_degree` (1 or 2) that are
/// nonnegative and vanish wherever a reaction would leave the box.
#[cfg(feature = "random")]
pub fn random_network<F: Scalar, R: rand::Rng + ?Sized>(
    rng: &mut R,
    max_species: usize,
    max_upper: u32,
    max_degree: u32,
) -> ReactionNetwork<F> {
    use rand::seq::SliceRandom;

    let q = rng.gen_range(1..=max_species.max(1));
    let species: Vec<Species> = (0..q)
        .map(|i| Species::new(format!("S{}", i + 1), rng.gen_range(1..=max_upper.max(1))))
        .collect();
    let bounds: Vec<u32> = species.iter().map(|s| s.upper_bound).collect();

    // stoichiometries with sum |gamma_i| <= max_degree so the vanishing
    // factors alone never exceed the degree budget
    let mut candidates = Vec::new();
    enumerate_steps(q, max_degree as i64, &mut vec![0; q], 0, &mut candidates);

    let nreactions = rng.gen_range(1..=4);
    let mut reactions = Vec::with_capacity(nreactions);
    for _ in 0..nreactions {
        let gamma = candidates.choose(rng).expect("nonempty").clone();
        let mut a = Polynomial::constant(q, F::lit(rng.gen_range(0.2..2.0)));
        for (var, &step) in gamma.iter().enumerate() {
            if step != 0 {
                a = a
                    .mul(&vanishing_factor(q, var, step, bounds[var]))
                    .expect("same arity");
            }
        }
        // optionally spend leftover degree on a nonnegative modulating factor
        if a.degree() < max_degree && rng.gen_bool(0.5) {
            let var = rng.gen_range(0..q);
            let extra = Polynomial::var(q, var)
                .add(&Polynomial::constant(q, F::lit(rng.gen_range(0.0..2.0))))
                .expect("same arity");
            a = a.mul(&extra).expect("same arity");
        }
        reactions.push(Reaction::new(gamma, a));
    }
    ReactionNetwork::new(species, reactions).expect("well-formed")
}

#[cfg(feature = "random")]
fn enumerate_steps(q: usize, budget: i64, cur: &mut Vec<i64>, slot: usize, out: &mut Vec<Vec<i64>>) {
    if slot == q {
        let l1: i64 = cur.iter().map(|v| v.abs()).sum();
        if l1 > 0 {
            out.push(cur.clone());
        }
        return;
    }
    let used: i64 = cur[..slot].iter().map(|v| v.abs()).sum();
    let left = budget - used;
    for v in -left..=left {
        cur[slot] = v;
        enumerate_steps(q, budget, cur, slot + 1, out);
    }
    cur[slot] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundaryPolicy, DEFAULT_STATE_CAP};

    #[test]
    fn reference_networks_validate() {
        let nets: Vec<ReactionNetwork<f64>> = vec![
            birth_death(1.0, 1.0),
            conversion(1, 1.0, 1.0),
            conversion(3, 0.7, 1.3),
            dimer(),
            degradation(5, 0.5),
        ];
        for net in nets {
            let rep = net.validate(BoundaryPolicy::Reject, DEFAULT_STATE_CAP).unwrap();
            assert!(rep.accepted, "{rep:?}");
        }
    }

    #[test]
    fn vanishing_factor_zeros() {
        let f: Polynomial<f64> = vanishing_factor(1, 0, 2, 4);
        let zeros: Vec<i64> = (0..=4).filter(|&k| f.eval(&[k]).unwrap() == 0.0).collect();
        assert_eq!(zeros, vec![3, 4]);
        let g: Polynomial<f64> = vanishing_factor(1, 0, -2, 4);
        let zeros: Vec<i64> = (0..=4).filter(|&k| g.eval(&[k]).unwrap() == 0.0).collect();
        assert_eq!(zeros, vec![0, 1]);
    }
}
