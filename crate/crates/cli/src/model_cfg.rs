//! Builds a raw simulation run (model, initial state, time grid, ensemble)
//! from a flat configuration, for the `simulate` subcommand.

use spde_stab::error::{Error, Result};
use spde_stab::evolve::{Init, ModelSpec, NoiseLawSpec, OperatorSpec, PhiSpec, ReactionSpec};
use spde_stab::lattice::{build_grid, principal_eigenpair, EigMode, Field, Grid1D};
use spde_stab::noise::CovarianceSpec;
use spde_stab::scenarios::Config;

pub const SIMULATE_KEYS: &[&str] = &[
    "grid.length",
    "grid.n",
    "model.operator",
    "model.mu",
    "model.p",
    "model.lambda",
    "model.reaction",
    "model.K",
    "model.a",
    "model.k",
    "model.r",
    "model.b",
    "model.m",
    "model.c1",
    "model.c2",
    "model.k1",
    "model.m0",
    "model.noise",
    "model.sigma",
    "model.k2",
    "model.noise_m",
    "model.gamma",
    "model.phi",
    "model.phi_c",
    "model.alpha",
    "model.positivity_clip",
    "cov.kernel",
    "cov.q0",
    "cov.ell",
    "init.kind",
    "init.scale",
    "init.mode",
    "init.x0",
    "time.t_end",
    "time.dt",
    "time.save_stride",
    "ensemble.paths",
    "ensemble.seed",
];

pub struct SimulateRun {
    pub model: ModelSpec,
    pub init: Init,
    pub t_end: f64,
    pub dt: f64,
    pub save_stride: usize,
    pub paths: usize,
    pub seed: u64,
}

fn parse_operator(cfg: &Config) -> Result<OperatorSpec> {
    match cfg.get("model.operator").unwrap_or("none") {
        "laplacian" => Ok(OperatorSpec::Laplacian {
            mu: cfg.positive_f64("model.mu")?,
        }),
        "p_laplacian" => Ok(OperatorSpec::PLaplacian {
            p: cfg.positive_f64("model.p")?,
        }),
        "decay" => Ok(OperatorSpec::Decay {
            lambda: cfg.nonnegative_f64("model.lambda")?,
        }),
        "none" => Ok(OperatorSpec::None),
        other => Err(Error::Config(format!(
            "config key `model.operator`: unknown operator `{other}`"
        ))),
    }
}

fn parse_reaction(cfg: &Config) -> Result<ReactionSpec> {
    match cfg.get("model.reaction").unwrap_or("zero") {
        "zero" => Ok(ReactionSpec::Zero),
        "linear" => Ok(ReactionSpec::Linear {
            rate: cfg.f64("model.K")?,
        }),
        "logistic" => Ok(ReactionSpec::Logistic {
            a: cfg.f64("model.a")?,
            k: cfg.nonnegative_f64("model.k")?,
            r: cfg.positive_f64("model.r")?,
        }),
        "power_pair" => Ok(ReactionSpec::PowerPair {
            a: cfg.f64("model.a")?,
            b: cfg.f64("model.b")?,
            m: cfg.positive_f64("model.m")?,
        }),
        "sde_drift" => Ok(ReactionSpec::SdeDrift {
            c1: cfg.f64("model.c1")?,
            c2: cfg.f64("model.c2")?,
            k1: cfg.f64("model.k1")?,
            m: cfg.positive_f64("model.m")?,
            m0: cfg.positive_f64("model.m0")?,
        }),
        other => Err(Error::Config(format!(
            "config key `model.reaction`: unknown reaction `{other}`"
        ))),
    }
}

fn parse_covariance(cfg: &Config) -> Result<CovarianceSpec> {
    match cfg.get("cov.kernel").unwrap_or("constant") {
        "constant" => CovarianceSpec::constant(cfg.nonnegative_f64("cov.q0")?),
        "squared_exponential" => CovarianceSpec::squared_exponential(
            cfg.nonnegative_f64("cov.q0")?,
            cfg.positive_f64("cov.ell")?,
        ),
        other => Err(Error::Config(format!(
            "config key `cov.kernel`: unknown kernel `{other}`"
        ))),
    }
}

fn parse_noise(cfg: &Config) -> Result<NoiseLawSpec> {
    match cfg.get("model.noise").unwrap_or("additive") {
        "additive" => Ok(NoiseLawSpec::Additive {
            sigma: cfg.nonnegative_f64("model.sigma")?,
        }),
        "multiplicative" => Ok(NoiseLawSpec::Multiplicative {
            sigma: cfg.nonnegative_f64("model.sigma")?,
        }),
        "field_power" => Ok(NoiseLawSpec::FieldPower {
            k2: cfg.nonnegative_f64("model.k2")?,
            m: cfg.positive_f64("model.noise_m")?,
            cov: parse_covariance(cfg)?,
        }),
        "white_multiplicative" => Ok(NoiseLawSpec::WhiteMultiplicative {
            gamma: cfg.nonnegative_f64("model.gamma")?,
        }),
        "sde_power" => Ok(NoiseLawSpec::SdePower {
            k2: cfg.nonnegative_f64("model.k2")?,
            m: cfg.positive_f64("model.noise_m")?,
            phi: match cfg.get("model.phi").unwrap_or("const") {
                "const" => PhiSpec::Const {
                    value: cfg.f64("model.phi_c").unwrap_or(1.0),
                },
                "power" => PhiSpec::Power {
                    alpha: cfg.nonnegative_f64("model.alpha")?,
                },
                other => {
                    return Err(Error::Config(format!(
                        "config key `model.phi`: unknown form `{other}`"
                    )))
                }
            },
        }),
        other => Err(Error::Config(format!(
            "config key `model.noise`: unknown noise law `{other}`"
        ))),
    }
}

fn parse_init(cfg: &Config, operator: &OperatorSpec) -> Result<(Init, Option<Grid1D>)> {
    let scalar_op = matches!(operator, OperatorSpec::None | OperatorSpec::Decay { .. });
    let kind = cfg.get("init.kind").unwrap_or(if scalar_op { "scalar" } else { "phi1_ms1" });
    if kind == "scalar" {
        return Ok((Init::Scalar(cfg.f64("init.x0")?), None));
    }
    let grid = build_grid(cfg.positive_f64("grid.length")?, cfg.usize("grid.n")?)?;
    let init = match kind {
        "phi1_ms1" => {
            let eig = principal_eigenpair(grid, EigMode::Discrete);
            Init::Field(eig.phi1.scaled(1.0 / eig.phi1.norm()))
        }
        "phi1" => {
            let eig = principal_eigenpair(grid, EigMode::Discrete);
            Init::Field(eig.phi1.scaled(cfg.f64("init.scale").unwrap_or(1.0)))
        }
        "sine" => {
            let mode = cfg.usize("init.mode").unwrap_or(1) as f64;
            let scale = cfg.f64("init.scale").unwrap_or(1.0);
            let length = grid.length();
            Init::Field(Field::from_fn(grid, |x| {
                scale * (mode * std::f64::consts::PI * x / length).sin()
            }))
        }
        "constant" => {
            let scale = cfg.f64("init.scale").unwrap_or(1.0);
            Init::Field(Field::from_fn(grid, |_| scale))
        }
        other => {
            return Err(Error::Config(format!(
                "config key `init.kind`: unknown kind `{other}`"
            )))
        }
    };
    Ok((init, Some(grid)))
}

pub fn parse_simulate(cfg: &Config) -> Result<SimulateRun> {
    cfg.validate_keys(SIMULATE_KEYS)?;
    let operator = parse_operator(cfg)?;
    let model = ModelSpec {
        operator,
        reaction: parse_reaction(cfg)?,
        noise: parse_noise(cfg)?,
        positivity_clip: match cfg.get("model.positivity_clip") {
            Some(_) => cfg.bool("model.positivity_clip")?,
            None => false,
        },
    };
    model.validate().map_err(|e| Error::Config(e.to_string()))?;
    let (init, _grid) = parse_init(cfg, &model.operator)?;
    let paths = cfg.usize("ensemble.paths")?;
    if paths < 2 {
        return Err(Error::Config(format!(
            "config key `ensemble.paths`: an ensemble needs at least 2 paths, got {paths}"
        )));
    }
    Ok(SimulateRun {
        model,
        init,
        t_end: cfg.positive_f64("time.t_end")?,
        dt: cfg.positive_f64("time.dt")?,
        save_stride: cfg.usize("time.save_stride").unwrap_or(1),
        paths,
        seed: cfg.u64("ensemble.seed")?,
    })
}
