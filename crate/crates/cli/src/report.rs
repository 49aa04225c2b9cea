//! Serializable reports and the dense text/CSV formats.

use std::fmt::Write as _;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::Serialize;

use rmc_core::closure::{ClosureResult, Extremal};
use rmc_core::dynamics::ErrorCertificate;
use rmc_core::model::{ReactionNetwork, ValidationReport};
use rmc_core::poly::Monomial;
use rmc_core::statespace::MomentMatrices;

use crate::pipeline::{ResolvedHorizon, Settings, Simulation};

/// Seventeen significant digits, which round-trips every `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}

fn rows(m: ArrayView2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn labels(basis: &[Monomial]) -> Vec<String> {
    basis.iter().map(|m| m.to_string()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct StateValue {
    pub state: Vec<i64>,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReactionCheck {
    pub reaction: usize,
    pub negative_propensity: Vec<StateValue>,
    pub boundary_violations: Vec<StateValue>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationJson {
    pub accepted: bool,
    pub truncated: bool,
    pub species: Vec<String>,
    pub upper_bounds: Vec<u32>,
    pub max_degree: u32,
    pub reactions: Vec<ReactionCheck>,
    pub warnings: Vec<String>,
}

impl ValidationJson {
    pub fn new(net: &ReactionNetwork<f64>, rep: &ValidationReport<f64>) -> Self {
        let sv = |v: &[(Vec<i64>, f64)]| {
            v.iter()
                .map(|(s, x)| StateValue {
                    state: s.clone(),
                    value: *x,
                })
                .collect()
        };
        ValidationJson {
            accepted: rep.accepted,
            truncated: rep.truncated,
            species: net.species().iter().map(|s| s.name.clone()).collect(),
            upper_bounds: net.upper_bounds(),
            max_degree: net.max_degree(),
            reactions: rep
                .reactions
                .iter()
                .map(|r| ReactionCheck {
                    reaction: r.reaction,
                    negative_propensity: sv(&r.negative),
                    boundary_violations: sv(&r.boundary),
                })
                .collect(),
            warnings: rep.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtremalJson {
    pub target: String,
    pub extremal_states: usize,
    pub both_signs: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosureJson {
    pub n: u32,
    pub max_degree: u32,
    pub states: usize,
    pub inputs: Vec<String>,
    pub targets: Vec<String>,
    pub k: Vec<Vec<f64>>,
    pub k0: Vec<f64>,
    pub rho_affine: f64,
    pub rho_affine_eval: f64,
    pub rho_dual: f64,
    pub rho_nl: f64,
    pub agreement_gap: f64,
    pub agreement: bool,
    pub worst_target: Option<String>,
    pub dual_certificate: Vec<f64>,
    pub alternative_optima: bool,
    pub v_rank: usize,
    pub v_full_row_rank: bool,
    pub equioscillation: Vec<ExtremalJson>,
    pub notes: Vec<String>,
}

impl ClosureJson {
    pub fn new(mm: &MomentMatrices<f64>, c: &ClosureResult<f64>, tol: f64) -> Self {
        let targets = labels(&mm.h_basis);
        let mut notes = Vec::new();
        if mm.dim_h() == 0 {
            notes.push(
                "all propensities are affine, so the moment equations are already closed \
                 (H is empty) and rho is 0"
                    .to_string(),
            );
        }
        if c.alternative_optima {
            notes.push(
                "the affine closure is not unique; K and K0 are one optimal vertex".to_string(),
            );
        }
        let rank = mm.rank_v();
        if rank < mm.dim_v() {
            notes.push(format!(
                "V has rank {rank} < {} rows: some moments are determined by others on this box",
                mm.dim_v()
            ));
        }
        let equioscillation = c
            .extremal_states(1e-7)
            .into_iter()
            .zip(&targets)
            .map(|(Extremal { count, both_signs }, t)| ExtremalJson {
                target: t.clone(),
                extremal_states: count,
                both_signs,
            })
            .collect();
        ClosureJson {
            n: mm.n,
            max_degree: mm.l,
            states: mm.states(),
            inputs: labels(&mm.v_basis),
            worst_target: c.worst_row.map(|r| targets[r].clone()),
            targets,
            k: rows(c.k.view()),
            k0: c.k0.to_vec(),
            rho_affine: c.rho_affine,
            rho_affine_eval: c.rho_eval,
            rho_dual: c.rho_dual,
            rho_nl: c.rho_nl,
            agreement_gap: c.agreement_gap(),
            agreement: c.agrees(tol),
            dual_certificate: c.dual_certificate.to_vec(),
            alternative_optima: c.alternative_optima,
            v_rank: rank,
            v_full_row_rank: rank == mm.dim_v(),
            equioscillation,
            notes,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockBound {
    pub block: usize,
    pub gain_integral: f64,
    pub bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sound: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateJson {
    pub rho: f64,
    pub horizon: ResolvedHorizon,
    pub quadrature_intervals: usize,
    pub blocks: Vec<BlockBound>,
}

impl CertificateJson {
    pub fn new(cert: &ErrorCertificate<f64>, horizon: ResolvedHorizon, tol: f64) -> Self {
        let blocks = cert
            .bounds
            .iter()
            .zip(&cert.gain_integrals)
            .enumerate()
            .map(|(i, (&bound, &gain))| {
                let observed = cert.observed.as_ref().map(|o| o[i]);
                BlockBound {
                    block: i + 1,
                    gain_integral: gain,
                    bound,
                    observed,
                    sound: observed.map(|o| o <= bound + tol),
                }
            })
            .collect();
        CertificateJson {
            rho: cert.rho,
            horizon,
            quadrature_intervals: cert.quadrature_intervals,
            blocks,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Timings {
    pub total_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub model: String,
    pub settings: Settings,
    pub grid_points: usize,
    pub closure: ClosureJson,
    pub certificate: CertificateJson,
    pub max_mass_defect: f64,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

/// Dense text dump: a `# name rows cols` header, then one row per line.
pub fn write_matrix(out: &mut String, name: &str, note: &str, m: ArrayView2<f64>) {
    let _ = writeln!(out, "# {name} {} {}{}", m.nrows(), m.ncols(), note);
    for r in m.rows() {
        let line: Vec<String> = r.iter().map(|&v| num(v)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
}

pub fn column(v: ArrayView1<f64>) -> Array2<f64> {
    v.to_owned().insert_axis(ndarray::Axis(1))
}

/// CSV with `t`, the true moments, the closed moments and per-block errors.
pub fn trajectory_csv(mm: &MomentMatrices<f64>, sim: &Simulation) -> String {
    let mut out = String::new();
    let mut header = vec!["t".to_string()];
    let names: Vec<String> = mm.v_basis.iter().map(|m| m.label()).collect();
    header.extend(names.iter().map(|l| format!("mu_true_{l}")));
    header.extend(names.iter().map(|l| format!("nu_{l}")));
    header.extend((1..=mm.blocks.len()).map(|i| format!("err_{i}")));
    let _ = writeln!(out, "{}", header.join(","));
    let truth = mm.v.dot(&sim.cme.values);
    let per_block = rmc_core::dynamics::block_series(&sim.errors, &mm.blocks);
    for (k, &t) in sim.cme.times.iter().enumerate() {
        let mut row = vec![num(t)];
        row.extend(truth.column(k).iter().map(|&v| num(v)));
        row.extend(sim.closed.values.column(k).iter().map(|&v| num(v)));
        row.extend(per_block.column(k).iter().map(|&v| num(v)));
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}
