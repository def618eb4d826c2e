//! The `check` subcommand: pure criterion evaluation from `--set`
//! parameters, printed as JSON, no simulation.

use spde_stab::criteria::{self, CriterionReport, T36Variant};
use spde_stab::error::{Error, Result};
use spde_stab::scenarios::Config;

pub const TAGS: &[(&str, &str)] = &[
    ("t01", "sigma, d_size, mu, lambda1, ms_u0"),
    ("gamma", "m, p"),
    ("t31", "a, b, sigma, d_size, c_inf, m, p, ms_u0"),
    ("t33", "K, lambda1, sigma"),
    ("lambda_hat", "r, m, k1, k2, q0"),
    ("t34_ms", "r, m, k1, k2, q0, lambda1"),
    ("t34_stoch", "r, k1, k2, q0, q1, lambda1"),
    ("t36_i", "c1, c2, k1, k2, m, m0"),
    ("t36_ii", "c1, c2, k1, k2, m, m0, alpha"),
    ("t41", "beta0, gamma0, t"),
    ("t42", "K, sigma"),
];

/// Evaluation result: either criterion reports or a single named value.
pub enum CheckOutput {
    Reports(Vec<CriterionReport>),
    Value { tag: String, value: f64 },
}

pub fn run_check(tag: &str, cfg: &Config) -> Result<CheckOutput> {
    match tag {
        "t01" => Ok(CheckOutput::Reports(vec![criteria::t01_check(
            cfg.f64("sigma")?,
            cfg.f64("d_size")?,
            cfg.f64("mu")?,
            cfg.f64("lambda1")?,
            cfg.f64("ms_u0")?,
        )?])),
        "gamma" => Ok(CheckOutput::Value {
            tag: tag.into(),
            value: criteria::gamma_exponent(cfg.f64("m")?, cfg.f64("p")?)?,
        }),
        "t31" => Ok(CheckOutput::Reports(vec![criteria::t31_check(
            cfg.f64("a")?,
            cfg.f64("b")?,
            cfg.f64("sigma")?,
            cfg.f64("d_size")?,
            cfg.f64("c_inf")?,
            cfg.f64("m")?,
            cfg.f64("p")?,
            cfg.f64("ms_u0")?,
        )?])),
        "t33" => {
            let (ms, st) =
                criteria::t33_check(cfg.f64("K")?, cfg.f64("lambda1")?, cfg.f64("sigma")?)?;
            Ok(CheckOutput::Reports(vec![ms, st]))
        }
        "lambda_hat" => Ok(CheckOutput::Value {
            tag: tag.into(),
            value: criteria::lambda_hat(
                cfg.f64("r")?,
                cfg.f64("m")?,
                cfg.f64("k1")?,
                cfg.f64("k2")?,
                cfg.f64("q0")?,
            )?,
        }),
        "t34_ms" => Ok(CheckOutput::Reports(vec![criteria::t34_ms_check(
            cfg.f64("r")?,
            cfg.f64("m")?,
            cfg.f64("k1")?,
            cfg.f64("k2")?,
            cfg.f64("q0")?,
            cfg.f64("lambda1")?,
        )?])),
        "t34_stoch" => Ok(CheckOutput::Reports(vec![criteria::t34_stochastic_check(
            cfg.f64("r")?,
            cfg.f64("k1")?,
            cfg.f64("k2")?,
            cfg.f64("q0")?,
            cfg.f64("q1")?,
            cfg.f64("lambda1")?,
        )?])),
        "t36_i" | "t36_ii" => {
            let variant = if tag == "t36_i" { T36Variant::I } else { T36Variant::II };
            let alpha = if tag == "t36_ii" { cfg.f64("alpha")? } else { 0.0 };
            Ok(CheckOutput::Reports(vec![criteria::t36_check(
                variant,
                cfg.f64("c1")?,
                cfg.f64("c2")?,
                cfg.f64("k1")?,
                cfg.f64("k2")?,
                cfg.f64("m")?,
                cfg.f64("m0")?,
                alpha,
            )?]))
        }
        "t41" => {
            let beta0 = cfg.f64("beta0")?;
            let gamma0 = cfg.f64("gamma0")?;
            let t = cfg.f64("t")?;
            let beta_fn = move |_: f64| beta0;
            let gamma_fn = move |_: f64| gamma0;
            Ok(CheckOutput::Reports(vec![criteria::t41_check(
                &beta_fn, &gamma_fn, t,
            )?]))
        }
        "t42" => {
            let (ms, st) = criteria::t42_check(cfg.f64("K")?, cfg.f64("sigma")?)?;
            Ok(CheckOutput::Reports(vec![ms, st]))
        }
        _ => Err(Error::InvalidArgument(format!("unknown criterion tag `{tag}`"))),
    }
}
