//! Builds problem instances from configuration and dispatches generic code
//! over the concrete problem types.

use stomo_core::oracle::{
    make_np_classification, make_portfolio, make_stochastic_lp, ClassSource, LpProblem, NpProblem,
    PortfolioProblem, QuadraticOptions, QuadraticProblem,
};
use stomo_core::{ExpectedFunctions, Problem, ProblemSpec};

use crate::config::ProblemConfig;
use crate::data::read_labeled;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum AnyProblem {
    Quadratic(QuadraticProblem),
    Lp(LpProblem),
    Portfolio(PortfolioProblem),
    Np(NpProblem),
}

/// Generic operation over any concrete problem type.
pub trait ProblemVisitor {
    type Output;

    fn visit<P>(self, problem: &P) -> Self::Output
    where
        P: Problem + Sync,
        P::Oracle: Send;
}

impl AnyProblem {
    pub fn build(cfg: &ProblemConfig) -> Result<Self> {
        Ok(match cfg {
            ProblemConfig::Quadratic {
                dim,
                constraints,
                seed,
                radius,
                objective_noise,
                constraint_noise,
                constraint_scale,
                spread,
            } => {
                let d = QuadraticOptions::default();
                let opts = QuadraticOptions {
                    radius: *radius,
                    objective_noise: objective_noise.unwrap_or(d.objective_noise),
                    constraint_noise: constraint_noise.unwrap_or(d.constraint_noise),
                    constraint_scale: constraint_scale.unwrap_or(d.constraint_scale),
                    spread: spread.unwrap_or(d.spread),
                };
                AnyProblem::Quadratic(QuadraticProblem::generate(*dim, *constraints, *seed, opts)?)
            }
            ProblemConfig::Lp { c, a, b, noise, radius } => AnyProblem::Lp(make_stochastic_lp(
                c.clone(),
                a.clone(),
                b.clone(),
                *noise,
                *radius,
            )?),
            ProblemConfig::Portfolio { mean, covariance, min_return, radius } => {
                let d = mean.len();
                if covariance.len() != d || covariance.iter().any(|row| row.len() != d) {
                    return Err(Error::Config(format!("covariance must be {d} x {d}")));
                }
                let flat = covariance.iter().flatten().copied().collect();
                AnyProblem::Portfolio(make_portfolio(mean.clone(), flat, *min_return, *radius)?)
            }
            ProblemConfig::Np { gamma, radius, positive_mean, negative_mean, std, data } => {
                let (pos, neg) = match (data, positive_mean, negative_mean) {
                    (Some(path), None, None) => {
                        let data = read_labeled(path)?;
                        (ClassSource::empirical(data.positive)?, ClassSource::empirical(data.negative)?)
                    }
                    (None, Some(p), Some(n)) => (
                        ClassSource::isotropic(p.clone(), *std),
                        ClassSource::isotropic(n.clone(), *std),
                    ),
                    _ => {
                        return Err(Error::Config(
                            "np problem needs either `data` or both `positive_mean` and `negative_mean`"
                                .into(),
                        ))
                    }
                };
                AnyProblem::Np(make_np_classification(pos, neg, *gamma, *radius)?)
            }
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AnyProblem::Quadratic(_) => "quadratic",
            AnyProblem::Lp(_) => "lp",
            AnyProblem::Portfolio(_) => "portfolio",
            AnyProblem::Np(_) => "np",
        }
    }

    pub fn spec(&self) -> &ProblemSpec {
        match self {
            AnyProblem::Quadratic(p) => p.spec(),
            AnyProblem::Lp(p) => p.spec(),
            AnyProblem::Portfolio(p) => p.spec(),
            AnyProblem::Np(p) => p.spec(),
        }
    }

    pub fn expected(&self) -> Option<&dyn ExpectedFunctions> {
        match self {
            AnyProblem::Quadratic(p) => p.expected(),
            AnyProblem::Lp(p) => p.expected(),
            AnyProblem::Portfolio(p) => p.expected(),
            AnyProblem::Np(p) => p.expected(),
        }
    }

    pub fn visit<V: ProblemVisitor>(&self, v: V) -> V::Output {
        match self {
            AnyProblem::Quadratic(p) => v.visit(p),
            AnyProblem::Lp(p) => v.visit(p),
            AnyProblem::Portfolio(p) => v.visit(p),
            AnyProblem::Np(p) => v.visit(p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn build(problem: &str) -> Result<AnyProblem> {
        let text = format!("[problem]\n{problem}\n[solver]\nname = \"pd\"\n");
        AnyProblem::build(&ExperimentConfig::from_toml(&text)?.problem)
    }

    #[test]
    fn builds_every_kind() {
        let q = build("kind = \"quadratic\"\ndim = 3\nconstraints = 1").unwrap();
        assert_eq!((q.kind(), q.spec().dim, q.spec().constraints), ("quadratic", 3, 1));
        let lp = build("kind = \"lp\"\nc = [-1.0, -1.0]\na = [[1.0, 1.0]]\nb = [1.0]\nnoise = 0.1\nradius = 2.0")
            .unwrap();
        assert!((lp.spec().known_optimum.as_ref().unwrap().value + 1.0).abs() < 1e-12);
        let pf = build(
            "kind = \"portfolio\"\nmean = [0.1, 0.2]\ncovariance = [[0.04, 0.0], [0.0, 0.09]]\nmin_return = 0.15",
        )
        .unwrap();
        assert_eq!(pf.kind(), "portfolio");
        let np = build("kind = \"np\"\ngamma = 0.5\nradius = 2.0\npositive_mean = [1.0, 0.5]\nnegative_mean = [-1.0, -0.5]")
            .unwrap();
        assert_eq!(np.spec().constraints, 1);
    }

    #[test]
    fn np_needs_a_source() {
        assert!(matches!(build("kind = \"np\"\ngamma = 0.3"), Err(Error::Config(_))));
    }

    #[test]
    fn covariance_shape_is_checked() {
        let r = build("kind = \"portfolio\"\nmean = [0.1, 0.2]\ncovariance = [[1.0]]\nmin_return = 0.1");
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
