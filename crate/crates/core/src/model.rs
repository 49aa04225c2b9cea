//! Reaction networks on a bounded box of molecule counts.
//!
//! Every species `i` is confined to `0..=U_i` and every propensity is a
//! polynomial in the counts. For the CME to conserve probability on the box,
//! a reaction must not fire from a state where it would leave the box; that
//! is what [`ReactionNetwork::validate`] checks.

use std::collections::HashSet;

use thiserror::Error;

use crate::poly::{PolyError, Polynomial};
use crate::Scalar;

/// Default cap on the number of box states.
pub const DEFAULT_STATE_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("network has no species")]
    NoSpecies,
    #[error("duplicate species name `{0}`")]
    DuplicateSpecies(String),
    #[error("reaction {reaction}: stoichiometry has length {found}, expected {expected}")]
    Stoichiometry {
        reaction: usize,
        expected: usize,
        found: usize,
    },
    #[error("reaction {reaction}: propensity has {found} variables, expected {expected}")]
    PropensityArity {
        reaction: usize,
        expected: usize,
        found: usize,
    },
    #[error("state space has more than {cap} states")]
    StateCap { cap: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Species {
    pub name: String,
    pub upper_bound: u32,
}

impl Species {
    pub fn new(name: impl Into<String>, upper_bound: u32) -> Self {
        Species {
            name: name.into(),
            upper_bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction<F> {
    pub stoichiometry: Vec<i64>,
    pub propensity: Polynomial<F>,
}

impl<F: Scalar> Reaction<F> {
    pub fn new(stoichiometry: Vec<i64>, propensity: Polynomial<F>) -> Self {
        Reaction {
            stoichiometry,
            propensity,
        }
    }

    /// Propensity at `state`, with cancellation noise below a few ulps of the
    /// term magnitudes set to exactly zero.
    pub fn rate(&self, state: &[i64]) -> Result<F, PolyError> {
        let (value, magnitude) = self.propensity.eval_with_magnitude(state)?;
        if value.abs() <= F::lit(64.0) * F::epsilon() * magnitude {
            Ok(F::zero())
        } else {
            Ok(value)
        }
    }
}

/// What to do with reactions that can fire out of the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryPolicy {
    /// Reject the network.
    #[default]
    Reject,
    /// Drop the offending transitions from the generator. The moment
    /// equations derived from the polynomials are then no longer exact.
    ForceTruncate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork<F> {
    species: Vec<Species>,
    reactions: Vec<Reaction<F>>,
    max_degree: u32,
}

impl<F: Scalar> ReactionNetwork<F> {
    /// Checks shapes only; propensity/boundary checks live in [`validate`].
    ///
    /// [`validate`]: ReactionNetwork::validate
    pub fn new(species: Vec<Species>, reactions: Vec<Reaction<F>>) -> Result<Self, ModelError> {
        if species.is_empty() {
            return Err(ModelError::NoSpecies);
        }
        let mut seen = HashSet::new();
        for s in &species {
            if !seen.insert(s.name.as_str()) {
                return Err(ModelError::DuplicateSpecies(s.name.clone()));
            }
        }
        let q = species.len();
        for (j, r) in reactions.iter().enumerate() {
            if r.stoichiometry.len() != q {
                return Err(ModelError::Stoichiometry {
                    reaction: j,
                    expected: q,
                    found: r.stoichiometry.len(),
                });
            }
            if r.propensity.nvars() != q {
                return Err(ModelError::PropensityArity {
                    reaction: j,
                    expected: q,
                    found: r.propensity.nvars(),
                });
            }
        }
        let max_degree = reactions
            .iter()
            .map(|r| r.propensity.degree())
            .max()
            .unwrap_or(0);
        Ok(ReactionNetwork {
            species,
            reactions,
            max_degree,
        })
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction<F>] {
        &self.reactions
    }

    pub fn species_count(&self) -> usize {
        self.species.len()
    }

    /// Largest propensity degree `l`.
    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn upper_bounds(&self) -> Vec<u32> {
        self.species.iter().map(|s| s.upper_bound).collect()
    }

    /// Number of box states, `prod (1 + U_i)`, refused above `cap`.
    pub fn state_count(&self, cap: usize) -> Result<usize, ModelError> {
        self.species.iter().try_fold(1usize, |acc, s| {
            acc.checked_mul(s.upper_bound as usize + 1)
                .filter(|&p| p <= cap)
                .ok_or(ModelError::StateCap { cap })
        })
    }

    pub fn in_box(&self, state: &[i64]) -> bool {
        state
            .iter()
            .zip(&self.species)
            .all(|(&k, s)| k >= 0 && k <= s.upper_bound as i64)
    }

    /// Enumerates the box and reports, per reaction, states with negative
    /// propensity and states from which the reaction would leave the box
    /// with nonzero propensity.
    pub fn validate(
        &self,
        policy: BoundaryPolicy,
        cap: usize,
    ) -> Result<ValidationReport<F>, ModelError> {
        let p = self.state_count(cap)?;
        let bounds = self.upper_bounds();
        let mut reactions: Vec<ReactionReport<F>> = (0..self.reactions.len())
            .map(|j| ReactionReport {
                reaction: j,
                negative: Vec::new(),
                boundary: Vec::new(),
            })
            .collect();
        let mut state = vec![0i64; bounds.len()];
        for _ in 0..p {
            for (j, r) in self.reactions.iter().enumerate() {
                let a = r.rate(&state).expect("arity checked at construction");
                if a < F::zero() {
                    reactions[j].negative.push((state.clone(), a));
                }
                let target: Vec<i64> = state
                    .iter()
                    .zip(&r.stoichiometry)
                    .map(|(k, g)| k + g)
                    .collect();
                if a != F::zero() && !self.in_box(&target) {
                    reactions[j].boundary.push((state.clone(), a));
                }
            }
            advance(&mut state, &bounds);
        }
        let negative = reactions.iter().any(|r| !r.negative.is_empty());
        let boundary = reactions.iter().any(|r| !r.boundary.is_empty());
        let mut warnings = Vec::new();
        let accepted = match policy {
            BoundaryPolicy::Reject => !negative && !boundary,
            BoundaryPolicy::ForceTruncate => {
                if boundary {
                    warnings.push(
                        "out-of-box transitions were truncated; the derived moment equations \
                         and error bounds no longer hold exactly"
                            .to_string(),
                    );
                }
                !negative
            }
        };
        Ok(ValidationReport {
            accepted,
            truncated: policy == BoundaryPolicy::ForceTruncate && boundary,
            reactions,
            warnings,
        })
    }
}

/// Row-major odometer step (last species fastest).
pub(crate) fn advance(state: &mut [i64], bounds: &[u32]) {
    for i in (0..state.len()).rev() {
        if state[i] < bounds[i] as i64 {
            state[i] += 1;
            return;
        }
        state[i] = 0;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionReport<F> {
    pub reaction: usize,
    /// States where the propensity is negative, with its value.
    pub negative: Vec<(Vec<i64>, F)>,
    /// States that would fire out of the box, with the propensity there.
    pub boundary: Vec<(Vec<i64>, F)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport<F> {
    pub accepted: bool,
    pub truncated: bool,
    pub reactions: Vec<ReactionReport<F>>,
    pub warnings: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::poly::Monomial;

    type P = Polynomial<f64>;

    #[test]
    fn birth_death_is_accepted() {
        let net = gallery::birth_death::<f64>(1.0, 1.0);
        let rep = net.validate(BoundaryPolicy::Reject, DEFAULT_STATE_CAP).unwrap();
        assert!(rep.accepted);
        assert!(!rep.truncated);
        // brute-force the claim: a1(2) = 0, a2(0) = a2(1) = 0
        let a1 = &net.reactions()[0].propensity;
        let a2 = &net.reactions()[1].propensity;
        assert_eq!(a1.eval(&[2]).unwrap(), 0.0);
        assert_eq!(a2.eval(&[0]).unwrap(), 0.0);
        assert_eq!(a2.eval(&[1]).unwrap(), 0.0);
        assert_eq!(net.max_degree(), 2);
    }

    #[test]
    fn constant_birth_is_rejected_at_the_top() {
        let net = ReactionNetwork::new(
            vec![Species::new("X", 2)],
            vec![Reaction::new(vec![1], P::constant(1, 1.5))],
        )
        .unwrap();
        let rep = net.validate(BoundaryPolicy::Reject, DEFAULT_STATE_CAP).unwrap();
        assert!(!rep.accepted);
        assert_eq!(rep.reactions[0].boundary, vec![(vec![2], 1.5)]);
        assert!(rep.reactions[0].negative.is_empty());

        let forced = net
            .validate(BoundaryPolicy::ForceTruncate, DEFAULT_STATE_CAP)
            .unwrap();
        assert!(forced.accepted);
        assert!(forced.truncated);
        assert_eq!(forced.warnings.len(), 1);
    }

    #[test]
    fn literal_linear_conversion_leaks_out_of_the_box() {
        // a1 = s_A with gamma = (-1, +1) fires from (1, total) into (0, total + 1)
        let total = 2;
        let net = ReactionNetwork::new(
            vec![Species::new("A", total), Species::new("B", total)],
            vec![
                Reaction::new(vec![-1, 1], P::var(2, 0)),
                Reaction::new(vec![1, -1], P::var(2, 1)),
            ],
        )
        .unwrap();
        let rep = net.validate(BoundaryPolicy::Reject, DEFAULT_STATE_CAP).unwrap();
        assert!(!rep.accepted);
        assert!(rep.reactions[0].boundary.iter().any(|(s, _)| s == &vec![1, 2]));
    }

    #[test]
    fn capped_conversion_is_accepted() {
        let net = gallery::conversion::<f64>(2, 1.0, 1.0);
        let rep = net.validate(BoundaryPolicy::Reject, DEFAULT_STATE_CAP).unwrap();
        assert!(rep.accepted);
        // zeros sit exactly on the s_A = 0 / s_B = 0 faces and the capped faces
        for a in 0..=2i64 {
            for b in 0..=2i64 {
                let a1 = net.reactions()[0].propensity.eval(&[a, b]).unwrap();
                let a2 = net.reactions()[1].propensity.eval(&[a, b]).unwrap();
                assert_eq!(a1 == 0.0, a == 0 || b == 2);
                assert_eq!(a2 == 0.0, b == 0 || a == 2);
            }
        }
    }

    #[test]
    fn negative_propensity_is_reported() {
        let p = P::from_terms(1, [(Monomial::new(vec![1]), -1.0)]).unwrap();
        let net = ReactionNetwork::new(
            vec![Species::new("X", 2)],
            vec![Reaction::new(vec![-1], p)],
        )
        .unwrap();
        let forced = net
            .validate(BoundaryPolicy::ForceTruncate, DEFAULT_STATE_CAP)
            .unwrap();
        assert!(!forced.accepted);
        assert_eq!(forced.reactions[0].negative.len(), 2);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            ReactionNetwork::<f64>::new(vec![], vec![]).unwrap_err(),
            ModelError::NoSpecies
        );
        assert_eq!(
            ReactionNetwork::<f64>::new(vec![Species::new("X", 1), Species::new("X", 2)], vec![])
                .unwrap_err(),
            ModelError::DuplicateSpecies("X".into())
        );
        let err = ReactionNetwork::new(
            vec![Species::new("X", 1)],
            vec![Reaction::new(vec![1, 0], P::var(1, 0))],
        )
        .unwrap_err();
        assert!(matches!(err, ModelError::Stoichiometry { reaction: 0, .. }));
    }

    #[test]
    fn state_counts() {
        let mk = |bounds: &[u32]| {
            let species = bounds
                .iter()
                .enumerate()
                .map(|(i, &u)| Species::new(format!("S{i}"), u))
                .collect();
            ReactionNetwork::<f64>::new(species, vec![]).unwrap()
        };
        assert_eq!(mk(&[2]).state_count(DEFAULT_STATE_CAP).unwrap(), 3);
        assert_eq!(mk(&[3, 4]).state_count(DEFAULT_STATE_CAP).unwrap(), 20);
        assert_eq!(mk(&[1, 1, 1]).state_count(DEFAULT_STATE_CAP).unwrap(), 8);
        assert_eq!(
            mk(&[1000, 1000]).state_count(DEFAULT_STATE_CAP).unwrap_err(),
            ModelError::StateCap { cap: DEFAULT_STATE_CAP }
        );
        assert!(mk(&[u32::MAX, u32::MAX, u32::MAX]).state_count(usize::MAX).is_err());
    }
}
