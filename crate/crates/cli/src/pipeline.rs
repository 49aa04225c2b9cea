//! Settings resolution and the shared analysis stages behind every command.

use ndarray::Array1;
use serde::Serialize;

use rmc_core::closure::ClosureResult;
use rmc_core::dynamics::{self, ErrorCertificate, Trajectory, DEFAULT_GRID_POINTS, DEFAULT_QUADRATURE};
use rmc_core::lp::LpConfig;
use rmc_core::model::{BoundaryPolicy, ReactionNetwork, ValidationReport, DEFAULT_STATE_CAP};
use rmc_core::momenteq::MomentSystem;
use rmc_core::statespace::{Generator, MomentMatrices, StateSpace, StateSpaceError, DEFAULT_MOMENT_BUDGET};

use crate::schema::ModelFile;
use crate::{CliError, CommonArgs};

/// Default closure order.
pub const DEFAULT_ORDER: u32 = 1;

/// Effective settings: command-line flags over file settings over defaults.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub n: u32,
    /// Requested horizon; `None` means derive it from the closed loop.
    pub horizon: Option<f64>,
    pub grid_points: usize,
    pub quadrature_intervals: usize,
    pub lp_iteration_cap: usize,
    pub force_truncate: bool,
}

impl Settings {
    pub fn resolve(args: &CommonArgs, file: &ModelFile) -> Result<Self, CliError> {
        let fs = file.settings.clone().unwrap_or_default();
        let s = Settings {
            n: args.n.or(fs.n).unwrap_or(DEFAULT_ORDER),
            horizon: args.horizon.or(fs.horizon),
            grid_points: args.grid.or(fs.grid_points).unwrap_or(DEFAULT_GRID_POINTS),
            quadrature_intervals: args
                .quad
                .or(fs.quadrature_intervals)
                .unwrap_or(DEFAULT_QUADRATURE),
            lp_iteration_cap: args
                .lp_iterations
                .or(fs.lp_iteration_cap)
                .unwrap_or(LpConfig::<f64>::default().max_iterations),
            force_truncate: args.force_truncate,
        };
        if s.n == 0 {
            return Err(CliError::Input("closure order n must be at least 1".into()));
        }
        if let Some(h) = s.horizon {
            if !h.is_finite() || h < 0.0 {
                return Err(CliError::Input(format!("horizon {h} must be finite and >= 0")));
            }
        }
        if s.grid_points == 0 {
            return Err(CliError::Input("grid needs at least one point".into()));
        }
        if s.quadrature_intervals < 2 {
            return Err(CliError::Input("quadrature needs at least 2 intervals".into()));
        }
        Ok(s)
    }

    pub fn policy(&self) -> BoundaryPolicy {
        if self.force_truncate {
            BoundaryPolicy::ForceTruncate
        } else {
            BoundaryPolicy::Reject
        }
    }

    pub fn lp_config(&self) -> LpConfig<f64> {
        LpConfig::default().with_max_iterations(self.lp_iteration_cap)
    }
}

/// Parsed model with its validation outcome.
pub struct Loaded {
    pub file: ModelFile,
    pub net: ReactionNetwork<f64>,
    pub settings: Settings,
    pub validation: ValidationReport<f64>,
}

impl Loaded {
    pub fn new(args: &CommonArgs) -> Result<Self, CliError> {
        let file = ModelFile::read(&args.model)?;
        let net = file.network()?;
        let settings = Settings::resolve(args, &file)?;
        let validation = net
            .validate(settings.policy(), DEFAULT_STATE_CAP)
            .map_err(CliError::from_model)?;
        Ok(Loaded {
            file,
            net,
            settings,
            validation,
        })
    }

    /// Fails when the network was rejected.
    pub fn require_valid(&self) -> Result<(), CliError> {
        if self.validation.accepted {
            return Ok(());
        }
        let firsts: Vec<String> = self
            .validation
            .reactions
            .iter()
            .filter_map(|r| {
                r.negative
                    .first()
                    .map(|(s, v)| format!("reaction {}: negative propensity {v} at {s:?}", r.reaction))
                    .or_else(|| {
                        r.boundary.first().map(|(s, v)| {
                            format!("reaction {}: fires out of the box at {s:?} (rate {v})", r.reaction)
                        })
                    })
            })
            .collect();
        Err(CliError::Check(format!(
            "model rejected by validation: {}",
            firsts.join("; ")
        )))
    }

    pub fn initial_distribution(&self, ss: &StateSpace) -> Result<Array1<f64>, CliError> {
        let init = self.file.initial_state.as_ref().ok_or_else(|| {
            CliError::Input("model has no initial_state; it is required for trajectories".into())
        })?;
        ss.delta::<f64>(init)
            .ok_or_else(|| CliError::Input(format!("initial_state {init:?} is not in the box")))
    }
}

/// Everything up to and including the closure.
pub struct Analysis {
    pub ss: StateSpace,
    pub g: Generator<f64>,
    pub ms: MomentSystem<f64>,
    pub mm: MomentMatrices<f64>,
    pub closure: ClosureResult<f64>,
}

impl Analysis {
    pub fn run(loaded: &Loaded) -> Result<Self, CliError> {
        let (ss, g, ms, mm) = Self::matrices(loaded)?;
        let closure = ClosureResult::compute(&mm, &loaded.settings.lp_config())
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        Ok(Analysis {
            ss,
            g,
            ms,
            mm,
            closure,
        })
    }

    #[allow(clippy::type_complexity)]
    pub fn matrices(
        loaded: &Loaded,
    ) -> Result<(StateSpace, Generator<f64>, MomentSystem<f64>, MomentMatrices<f64>), CliError> {
        loaded.require_valid()?;
        let n = loaded.settings.n;
        let ss = StateSpace::enumerate(&loaded.net, DEFAULT_STATE_CAP).map_err(|e| match e {
            StateSpaceError::Model(m) => CliError::from_model(m),
            other => CliError::Numerical(other.to_string()),
        })?;
        let mm = MomentMatrices::build(&loaded.net, &ss, n, DEFAULT_MOMENT_BUDGET)
            .map_err(|e| CliError::Numerical(e.to_string()))?;
        let ms = MomentSystem::derive(&loaded.net, n).map_err(|e| CliError::Numerical(e.to_string()))?;
        let g = Generator::build(&loaded.net, &ss);
        Ok((ss, g, ms, mm))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HorizonSource {
    Requested,
    ClosedLoopDecay,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedHorizon {
    pub value: f64,
    pub source: HorizonSource,
    pub closed_loop_abscissa: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn resolve_horizon(settings: &Settings, an: &Analysis) -> Result<ResolvedHorizon, CliError> {
    let h = dynamics::default_horizon(&an.ms, &an.closure.k).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut warnings = Vec::new();
    if !h.stable {
        warnings.push(format!(
            "closed-loop matrix A + bK is not stable (max real eigenvalue part {}); \
             the bound grows with the horizon",
            h.abscissa.map_or("n/a".to_string(), |a| a.to_string())
        ));
    }
    let (value, source) = match settings.horizon {
        Some(t) => (t, HorizonSource::Requested),
        None if h.stable => (h.t, HorizonSource::ClosedLoopDecay),
        None => {
            warnings.push(format!("no horizon given; using {}", h.t));
            (h.t, HorizonSource::Fallback)
        }
    };
    Ok(ResolvedHorizon {
        value,
        source,
        closed_loop_abscissa: h.abscissa,
        warnings,
    })
}

/// Exact and closed trajectories on the configured grid.
pub struct Simulation {
    pub cme: Trajectory<f64>,
    pub closed: Trajectory<f64>,
    pub errors: ndarray::Array2<f64>,
}

pub fn simulate(loaded: &Loaded, an: &Analysis, horizon: f64) -> Result<Simulation, CliError> {
    let p0 = loaded.initial_distribution(&an.ss)?;
    let times = dynamics::uniform_grid(horizon, loaded.settings.grid_points)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let num = |e: dynamics::DynamicsError| CliError::Numerical(e.to_string());
    let cme = dynamics::integrate_cme(&an.g.matrix, p0.view(), &times).map_err(num)?;
    let e0 = an.mm.v.dot(&p0);
    let closed = dynamics::integrate_closed(&an.ms, &an.closure.k, &an.closure.k0, e0.view(), &times)
        .map_err(num)?;
    let errors = dynamics::error_series(&an.mm, &cme, &closed).map_err(num)?;
    Ok(Simulation { cme, closed, errors })
}

pub fn certificate(
    loaded: &Loaded,
    an: &Analysis,
    horizon: f64,
    sim: Option<&Simulation>,
) -> Result<ErrorCertificate<f64>, CliError> {
    let cert = dynamics::error_bound(
        &an.ms,
        &an.closure.k,
        &an.mm.blocks,
        an.closure.rho_eval,
        horizon,
        loaded.settings.quadrature_intervals,
    )
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    Ok(match sim {
        Some(s) => {
            let observed = dynamics::realized_error(&an.mm, &s.cme, &s.closed)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            cert.with_observed(observed)
        }
        None => cert,
    })
}
