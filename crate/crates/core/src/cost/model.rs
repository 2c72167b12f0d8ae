use serde::{Deserialize, Serialize};

use super::CostError;
use crate::graph::ServiceGraph;
use crate::stochastic::{DistributionSpec, SeededRng};

/// Distribution of every uncertain quantity in a vehicular cloud.
///
/// `f` (Hz) and `r` (bit/s) are indexed by SP; `t_conn` (s) and `c_exch`
/// (cost units) by service edge index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatModel {
    pub f: Vec<DistributionSpec>,
    pub r: Vec<DistributionSpec>,
    pub t_conn: Vec<DistributionSpec>,
    pub c_exch: Vec<DistributionSpec>,
}

impl StatModel {
    pub fn new(
        serv: &ServiceGraph,
        f: Vec<DistributionSpec>,
        r: Vec<DistributionSpec>,
        t_conn: Vec<DistributionSpec>,
        c_exch: Vec<DistributionSpec>,
    ) -> Result<Self, CostError> {
        let model = Self { f, r, t_conn, c_exch };
        model.check(serv)?;
        Ok(model)
    }

    /// Every spec deterministic with the given per-SP / per-edge values.
    pub fn deterministic(f: &[f64], r: &[f64], t_conn: &[f64], c_exch: &[f64]) -> Self {
        let det = |xs: &[f64]| {
            xs.iter()
                .map(|&value| DistributionSpec::Deterministic { value })
                .collect()
        };
        Self {
            f: det(f),
            r: det(r),
            t_conn: det(t_conn),
            c_exch: det(c_exch),
        }
    }

    /// Sizes match `serv`, every spec is valid and rate supports are
    /// strictly positive.
    pub fn check(&self, serv: &ServiceGraph) -> Result<(), CostError> {
        let sizes = [
            ("f", self.f.len(), serv.len()),
            ("r", self.r.len(), serv.len()),
            ("t_conn", self.t_conn.len(), serv.edges().len()),
            ("c_exch", self.c_exch.len(), serv.edges().len()),
        ];
        for (field, got, expected) in sizes {
            if got != expected {
                return Err(CostError::ModelSize { field, expected, got });
            }
        }
        let groups = [
            ("f", &self.f),
            ("r", &self.r),
            ("t_conn", &self.t_conn),
            ("c_exch", &self.c_exch),
        ];
        for (field, specs) in groups {
            for (index, spec) in specs.iter().enumerate() {
                spec.validate().map_err(|source| CostError::Spec { field, index, source })?;
            }
        }
        for (field, specs) in [("f", &self.f), ("r", &self.r)] {
            for (index, spec) in specs.iter().enumerate() {
                if spec.lower() <= 0.0 {
                    return Err(CostError::Spec {
                        field,
                        index,
                        source: crate::stochastic::DistError::ReciprocalSupport(spec.lower()),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        [&self.f, &self.r, &self.t_conn, &self.c_exch]
            .iter()
            .all(|specs| specs.iter().all(DistributionSpec::is_deterministic))
    }

    /// Realization holding the mean of every quantity. For a deterministic
    /// model this is the only possible realization.
    pub fn mean_realization(&self) -> Realization {
        let means = |specs: &[DistributionSpec]| specs.iter().map(DistributionSpec::mean).collect();
        Realization {
            f: means(&self.f),
            r: means(&self.r),
            t_conn: means(&self.t_conn),
            c_exch: means(&self.c_exch),
        }
    }

    /// Draws one realization. Sampling order is all `f`, then `r`,
    /// `t_conn`, `c_exch`, each in index order.
    pub fn realize(&self, rng: &mut SeededRng) -> Realization {
        let mut draw = |specs: &[DistributionSpec]| specs.iter().map(|s| s.sample(rng)).collect::<Vec<_>>();
        let f = draw(&self.f);
        let r = draw(&self.r);
        let t_conn = draw(&self.t_conn);
        let c_exch = draw(&self.c_exch);
        Realization { f, r, t_conn, c_exch }
    }
}

/// Concrete values of every uncertain quantity at one scheduling event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub f: Vec<f64>,
    pub r: Vec<f64>,
    pub t_conn: Vec<f64>,
    pub c_exch: Vec<f64>,
}

impl Realization {
    /// Every value lies inside its spec's support.
    pub fn within(&self, model: &StatModel) -> bool {
        let inside = |xs: &[f64], specs: &[DistributionSpec]| {
            xs.len() == specs.len()
                && xs
                    .iter()
                    .zip(specs)
                    .all(|(&x, s)| x >= s.lower() && x <= s.upper())
        };
        inside(&self.f, &model.f)
            && inside(&self.r, &model.r)
            && inside(&self.t_conn, &model.t_conn)
            && inside(&self.c_exch, &model.c_exch)
    }

    pub fn check(&self, serv: &ServiceGraph) -> Result<(), CostError> {
        let sizes = [
            ("f", self.f.len(), serv.len()),
            ("r", self.r.len(), serv.len()),
            ("t_conn", self.t_conn.len(), serv.edges().len()),
            ("c_exch", self.c_exch.len(), serv.edges().len()),
        ];
        for (field, got, expected) in sizes {
            if got != expected {
                return Err(CostError::ModelSize { field, expected, got });
            }
        }
        Ok(())
    }
}
