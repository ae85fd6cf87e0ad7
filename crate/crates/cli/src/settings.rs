//! Run settings merged from defaults, a `key = value` config file and flags.

use std::path::PathBuf;

use afem_core::driver::{Algorithm, RunConfig, StopRule};
use afem_core::iteration::ZarantonelloConfig;
use afem_core::problems::ZSHAPE_LIPSCHITZ;
use afem_core::solvers::SolverKind;
use clap::Args;

/// Flags shared by `run` and `sweep`. Every flag can also be given in the
/// config file under its long name without dashes.
#[derive(Args, Clone, Debug, Default)]
pub struct RunFlags {
    /// kellogg, lshape-convection or zshape-nonlinear
    #[arg(long)]
    pub problem: Option<String>,
    /// exact, uniform, single or nested (default: single for kellogg, nested otherwise)
    #[arg(long)]
    pub algo: Option<String>,
    /// Polynomial degree
    #[arg(long)]
    pub p: Option<usize>,
    /// Dörfler marking parameter
    #[arg(long)]
    pub theta: Option<f64>,
    /// Solver stopping parameter of the single loop
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "lambda-sym")]
    pub lambda_sym: Option<f64>,
    #[arg(long = "lambda-alg")]
    pub lambda_alg: Option<f64>,
    /// Zarantonello damping (default 1/L for zshape-nonlinear, 0.5 otherwise)
    #[arg(long)]
    pub delta: Option<f64>,
    /// local-mg, richardson or direct
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long = "max-dofs")]
    pub max_dofs: Option<usize>,
    #[arg(long = "max-levels")]
    pub max_levels: Option<usize>,
    /// Stop once the estimator falls below this value
    #[arg(long = "eta-tol")]
    pub eta_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Config file with `key = value` lines
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug)]
pub struct UsageError(pub String);

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, UsageError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| UsageError(format!("config line {}: expected `key = value`", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, UsageError> {
    v.parse().map_err(|_| UsageError(format!("invalid value `{v}` for `{key}`")))
}

/// Parse a comma-separated list of numbers.
pub fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, UsageError> {
    v.split(',').map(|x| parse(key, x.trim())).collect()
}

impl RunFlags {
    /// Fill unset flags from config entries. Keys in `extra` are accepted and
    /// returned for the caller; any other unknown key is an error.
    pub fn merge_config(
        &mut self,
        entries: &[(String, String)],
        extra: &[&str],
    ) -> Result<Vec<(String, String)>, UsageError> {
        let mut rest = Vec::new();
        for (k, v) in entries {
            match k.as_str() {
                "problem" => self.problem = self.problem.take().or(Some(v.clone())),
                "algo" => self.algo = self.algo.take().or(Some(v.clone())),
                "solver" => self.solver = self.solver.take().or(Some(v.clone())),
                "p" => self.p = self.p.or(Some(parse(k, v)?)),
                "theta" => self.theta = self.theta.or(Some(parse(k, v)?)),
                "lambda" => self.lambda = self.lambda.or(Some(parse(k, v)?)),
                "lambda-sym" => self.lambda_sym = self.lambda_sym.or(Some(parse(k, v)?)),
                "lambda-alg" => self.lambda_alg = self.lambda_alg.or(Some(parse(k, v)?)),
                "delta" => self.delta = self.delta.or(Some(parse(k, v)?)),
                "max-dofs" => self.max_dofs = self.max_dofs.or(Some(parse(k, v)?)),
                "max-levels" => self.max_levels = self.max_levels.or(Some(parse(k, v)?)),
                "eta-tol" => self.eta_tol = self.eta_tol.or(Some(parse(k, v)?)),
                "seed" => self.seed = self.seed.or(Some(parse(k, v)?)),
                _ if extra.contains(&k.as_str()) => rest.push((k.clone(), v.clone())),
                _ => return Err(UsageError(format!("unknown config key `{k}`"))),
            }
        }
        Ok(rest)
    }

    /// Load the config file (if any) and merge it below the flags.
    pub fn load(&mut self, extra: &[&str]) -> Result<Vec<(String, String)>, UsageError> {
        match self.config.clone() {
            Some(path) => {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
                self.merge_config(&parse_config(&text)?, extra)
            }
            None => Ok(Vec::new()),
        }
    }

    pub fn problem(&self) -> Result<&str, UsageError> {
        self.problem.as_deref().ok_or_else(|| UsageError("--problem is required".into()))
    }

    pub fn algorithm(&self) -> Result<Algorithm, UsageError> {
        let name = match self.algo.as_deref() {
            Some(a) => a,
            None if self.problem()? == "kellogg" => "single",
            None => "nested",
        };
        match name {
            "exact" => Ok(Algorithm::Exact),
            "uniform" => Ok(Algorithm::Uniform),
            "single" => Ok(Algorithm::Single),
            "nested" => Ok(Algorithm::Nested),
            _ => Err(UsageError(format!("unknown algorithm `{name}`"))),
        }
    }

    /// Driver configuration with defaults for everything left unset.
    pub fn run_config(&self) -> Result<RunConfig, UsageError> {
        let d = RunConfig::default();
        let solver = match &self.solver {
            Some(s) => s.parse::<SolverKind>().map_err(|e| UsageError(e.to_string()))?,
            None if self.p.unwrap_or(d.degree) > 1 => SolverKind::Direct,
            None => d.solver,
        };
        let delta = match self.delta {
            Some(x) => x,
            None if self.problem()? == "zshape-nonlinear" => 1.0 / ZSHAPE_LIPSCHITZ,
            None => d.zarantonello.delta,
        };
        let zarantonello = ZarantonelloConfig::new(
            delta,
            self.lambda_sym.unwrap_or(d.zarantonello.lambda_sym),
            self.lambda_alg.unwrap_or(d.zarantonello.lambda_alg),
        )
        .map_err(|e| UsageError(e.to_string()))?;
        Ok(RunConfig {
            degree: self.p.unwrap_or(d.degree),
            theta: self.theta.unwrap_or(d.theta),
            stop: StopRule {
                max_dofs: self.max_dofs.unwrap_or(d.stop.max_dofs),
                eta_tol: self.eta_tol.unwrap_or(d.stop.eta_tol),
                max_levels: self.max_levels.unwrap_or(d.stop.max_levels),
            },
            solver,
            lambda: self.lambda.unwrap_or(d.lambda),
            zarantonello,
            seed: self.seed.unwrap_or(d.seed),
            ..d
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let mut f = RunFlags { theta: Some(0.3), ..RunFlags::default() };
        let cfg = parse_config("theta = 0.7\nproblem = kellogg # comment\n\nmax-dofs=100").unwrap();
        f.merge_config(&cfg, &[]).unwrap();
        assert_eq!(f.theta, Some(0.3));
        assert_eq!(f.problem.as_deref(), Some("kellogg"));
        assert_eq!(f.run_config().unwrap().stop.max_dofs, 100);
    }

    #[test]
    fn unknown_key_rejected() {
        let mut f = RunFlags::default();
        assert!(f.merge_config(&parse_config("colour = red").unwrap(), &[]).is_err());
        assert!(parse_config("no equals sign").is_err());
    }

    #[test]
    fn defaults_by_problem() {
        let f = RunFlags { problem: Some("zshape-nonlinear".into()), ..RunFlags::default() };
        assert_eq!(f.algorithm().unwrap(), Algorithm::Nested);
        assert!((f.run_config().unwrap().zarantonello.delta - 1.0 / ZSHAPE_LIPSCHITZ).abs() < 1e-15);
        let f = RunFlags { problem: Some("kellogg".into()), p: Some(2), ..RunFlags::default() };
        assert_eq!(f.algorithm().unwrap(), Algorithm::Single);
        assert_eq!(f.run_config().unwrap().solver, SolverKind::Direct);
    }
}
