//! End-to-end pipeline: sample the graph, take its hull, split envelopes.

use crate::bounds::{self, BoundsReport, ConstantsReport};
use crate::domain::{sample, Domain, SampledGraph};
use crate::expr::Expr;
use crate::hull::{contains, convex_hull_2d, envelopes, Envelopes, HullPolygon, Point};
use crate::witness::{self, Witness};
use crate::Error;

#[derive(Debug, Clone)]
pub struct Analysis {
    pub f: Expr,
    pub graph: SampledGraph,
    pub hull: HullPolygon,
    pub envelopes: Envelopes,
}

impl Analysis {
    pub fn new(f: Expr, domain: Domain, resolution: usize) -> Result<Self, Error> {
        let graph = sample(&f, &domain, resolution)?;
        let hull = convex_hull_2d(&graph.points)?;
        let envelopes = envelopes(&hull)?;
        Ok(Self {
            f,
            graph,
            hull,
            envelopes,
        })
    }

    pub fn parse(f: &str, domain: &str, resolution: usize) -> Result<Self, Error> {
        Self::new(f.parse()?, domain.parse()?, resolution)
    }

    pub fn domain(&self) -> &Domain {
        &self.graph.domain
    }

    pub fn lower(&self) -> &crate::hull::PlFunction {
        &self.envelopes.lower
    }

    pub fn upper(&self) -> &crate::hull::PlFunction {
        &self.envelopes.upper
    }

    pub fn bounds_at(&self, mean_x: f64) -> Result<BoundsReport, Error> {
        Ok(bounds::bounds_at(
            self.lower(),
            self.upper(),
            mean_x,
            &self.f,
            &self.graph,
        )?)
    }

    pub fn constants(&self, mean_x: Option<f64>) -> Result<ConstantsReport, Error> {
        Ok(bounds::constants(
            self.lower(),
            self.upper(),
            &self.f,
            &self.graph,
            mean_x,
        )?)
    }

    pub fn jensen_reduced(&self) -> bool {
        bounds::jensen_check(self.lower(), &self.graph)
    }

    pub fn witness(&self, target: Point) -> Result<Witness, Error> {
        Ok(witness::witness(&self.hull, target)?)
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        contains(&self.hull, p, tol)
    }
}
