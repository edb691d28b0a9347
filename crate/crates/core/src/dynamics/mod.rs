//! One-dimensional manifolds, closed-form diffeomorphisms and the actions
//! they generate.

mod action;
mod manifold;
mod maps;

pub use action::{
    c1_distance_of, c1_distance_to_identity, ActionInstance, DisplacementMatrix, Gen, Step,
    DEFAULT_TOL_REL, NAVAS_DOMAIN_MAX,
};
pub use manifold::{EmbeddedManifold1D, ManifoldKind, DEFAULT_GRID};
pub use maps::SmoothMap;

use crate::error::{Error, Result};

/// Value of a composed map at a point, tracked through its displacement so
/// that `h(x) - x` is never formed by subtraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub x: f64,
    /// Lift displacement `h(x) - x` in chart coordinates.
    pub disp: f64,
    /// Chart derivative `h'(x)`.
    pub deriv: f64,
}

impl Jet {
    pub fn identity(x: f64) -> Self {
        Jet { x, disp: 0.0, deriv: 1.0 }
    }

    pub fn point(&self) -> f64 {
        self.x + self.disp
    }
}

const DOMAIN_TOL: f64 = 1e-12;

/// Applies `steps` left to right (the first step acts first), checking that
/// every intermediate point stays in `domain`.
pub fn apply_steps(
    steps: &[(&SmoothMap, bool)],
    x: f64,
    domain: &ManifoldKind,
    label: &dyn Fn() -> String,
) -> Result<Jet> {
    let mut jet = Jet::identity(x);
    for (i, &(map, inverse)) in steps.iter().enumerate() {
        let y = jet.point();
        let (d, p) = if inverse {
            let d = map.inverse_displacement(y);
            (d, 1.0 / map.deriv(y + d))
        } else {
            (map.displacement(y), map.deriv(y))
        };
        jet.disp += d;
        jet.deriv *= p;
        let z = jet.point();
        if !d.is_finite() || !p.is_finite() || !domain.contains(z, DOMAIN_TOL) {
            return Err(Error::ChartEscape {
                composition: label(),
                step: i + 1,
                point: z,
                domain: domain.to_string(),
            });
        }
    }
    Ok(jet)
}
