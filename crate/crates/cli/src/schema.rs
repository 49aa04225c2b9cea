//! On-disk model format.
//!
//! ```json
//! {
//!   "species": [{"name": "S", "upper_bound": 2}],
//!   "reactions": [
//!     {"stoichiometry": [1], "propensity": [{"coeff": 2.0, "exponents": [0]},
//!                                           {"coeff": -1.0, "exponents": [1]}]}
//!   ],
//!   "initial_state": [0],
//!   "settings": {"n": 1, "horizon": 10.0}
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use rmc_core::model::{Reaction, ReactionNetwork, Species};
use rmc_core::poly::{Monomial, Polynomial};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub species: Vec<SpeciesSpec>,
    pub reactions: Vec<ReactionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub settings: Option<FileSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSpec {
    pub name: String,
    pub upper_bound: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactionSpec {
    pub stoichiometry: Vec<i64>,
    pub propensity: Vec<TermSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSettings {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_intervals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lp_iteration_cap: Option<usize>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid model file: {e}")))?;
        file.check()?;
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Structural checks that serde cannot express.
    fn check(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Input(msg));
        let q = self.species.len();
        if q == 0 {
            return bad("model has no species".into());
        }
        if self.reactions.is_empty() {
            return bad("model has no reactions".into());
        }
        for (j, r) in self.reactions.iter().enumerate() {
            if r.stoichiometry.len() != q {
                return bad(format!(
                    "reaction {j}: stoichiometry has {} entries, expected {q}",
                    r.stoichiometry.len()
                ));
            }
            for (t, term) in r.propensity.iter().enumerate() {
                if term.exponents.len() != q {
                    return bad(format!(
                        "reaction {j}, term {t}: exponents have {} entries, expected {q}",
                        term.exponents.len()
                    ));
                }
                if !term.coeff.is_finite() {
                    return bad(format!("reaction {j}, term {t}: coefficient is not finite"));
                }
            }
        }
        if let Some(init) = &self.initial_state {
            if init.len() != q {
                return bad(format!("initial_state has {} entries, expected {q}", init.len()));
            }
            for (s, (&k, sp)) in init.iter().zip(&self.species).enumerate() {
                if k < 0 || k > sp.upper_bound as i64 {
                    return bad(format!(
                        "initial_state[{s}] = {k} is outside 0..={} for species {}",
                        sp.upper_bound, sp.name
                    ));
                }
            }
        }
        if let Some(s) = &self.settings {
            if let Some(h) = s.horizon {
                if !h.is_finite() || h < 0.0 {
                    return bad(format!("settings.horizon = {h} must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }

    pub fn network(&self) -> Result<ReactionNetwork<f64>, CliError> {
        let q = self.species.len();
        let species = self
            .species
            .iter()
            .map(|s| Species::new(s.name.clone(), s.upper_bound))
            .collect();
        let mut reactions = Vec::with_capacity(self.reactions.len());
        for r in &self.reactions {
            let terms = r
                .propensity
                .iter()
                .map(|t| (Monomial::new(t.exponents.clone()), t.coeff));
            let poly = Polynomial::from_terms(q, terms).map_err(|e| CliError::Input(e.to_string()))?;
            reactions.push(Reaction::new(r.stoichiometry.clone(), poly));
        }
        ReactionNetwork::new(species, reactions).map_err(|e| CliError::Input(e.to_string()))
    }
}
