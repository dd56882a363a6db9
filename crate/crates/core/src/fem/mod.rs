//! P1 finite elements on tetrahedral meshes: assembly, state and adjoint
//! solves, and evaluation of the objective functional.

mod assemble;
mod solve;

pub use assemble::{assemble, AssembledSystem, TET_QUADRATURE};
pub use solve::{objective, solve_adjoint, solve_state, solve_state_with_dirichlet, FemField};

use crate::solvers::SolverError;
use crate::Vec3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("element {0} is degenerate, cannot assemble")]
    DegenerateElement(usize),
    #[error("state solver failed: {0}")]
    Solver(#[from] SolverError),
}

/// Which boundary-value problem acts as the state equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    /// -Delta u = f with u = 0 on the whole boundary.
    PoissonDirichlet,
    /// -Delta u + u = f with natural (zero Neumann) boundary conditions.
    ReactionNeumann,
}

/// Trivariate polynomial sum of `coeff * x^i y^j z^k` terms.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Polynomial3 {
    pub terms: Vec<(f64, [u32; 3])>,
}

impl Polynomial3 {
    pub fn constant(c: f64) -> Self {
        Self {
            terms: vec![(c, [0, 0, 0])],
        }
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        self.terms
            .iter()
            .map(|(c, p)| c * x.x.powi(p[0] as i32) * x.y.powi(p[1] as i32) * x.z.powi(p[2] as i32))
            .sum()
    }

    pub fn grad(&self, x: &Vec3) -> Vec3 {
        let mut g = Vec3::zeros();
        for (c, p) in &self.terms {
            let [i, j, k] = *p;
            if i > 0 {
                g.x += c * i as f64 * x.x.powi(i as i32 - 1) * x.y.powi(j as i32) * x.z.powi(k as i32);
            }
            if j > 0 {
                g.y += c * j as f64 * x.x.powi(i as i32) * x.y.powi(j as i32 - 1) * x.z.powi(k as i32);
            }
            if k > 0 {
                g.z += c * k as f64 * x.x.powi(i as i32) * x.y.powi(j as i32) * x.z.powi(k as i32 - 1);
            }
        }
        g
    }
}

/// Forcing term f, evaluated analytically at quadrature points.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Forcing {
    /// f1 = x1^2 + x2^2 + x3^2 - 1.
    P1,
    /// f2 = 20 (x1 + 0.4 - x2^2)^2 + x1^2 + x2^2 + x3^2 - 1.
    P2,
    Polynomial(Polynomial3),
}

impl Forcing {
    pub fn eval(&self, x: &Vec3) -> f64 {
        match self {
            Forcing::P1 => x.norm_squared() - 1.0,
            Forcing::P2 => {
                let w = x.x + 0.4 - x.y * x.y;
                20.0 * w * w + x.norm_squared() - 1.0
            }
            Forcing::Polynomial(p) => p.eval(x),
        }
    }

    pub fn grad(&self, x: &Vec3) -> Vec3 {
        match self {
            Forcing::P1 => 2.0 * x,
            Forcing::P2 => {
                let w = x.x + 0.4 - x.y * x.y;
                Vec3::new(40.0 * w + 2.0 * x.x, -80.0 * w * x.y + 2.0 * x.y, 2.0 * x.z)
            }
            Forcing::Polynomial(p) => p.grad(x),
        }
    }
}

/// Objective integrand j(x, u, grad u) with the partial derivatives the
/// adjoint and shape-derivative assemblies need.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// j = u; minimize the integral of the state.
    StateIntegral,
    /// j = |grad u|^2.
    GradSquared,
    /// j = 1; the objective is the domain volume, independent of u.
    DomainVolume,
}

impl Objective {
    pub fn j(&self, _x: &Vec3, u: f64, v: &Vec3) -> f64 {
        match self {
            Objective::StateIntegral => u,
            Objective::GradSquared => v.norm_squared(),
            Objective::DomainVolume => 1.0,
        }
    }

    pub fn j_u(&self, _x: &Vec3, _u: f64, _v: &Vec3) -> f64 {
        match self {
            Objective::StateIntegral => 1.0,
            Objective::GradSquared | Objective::DomainVolume => 0.0,
        }
    }

    pub fn j_v(&self, _x: &Vec3, _u: f64, v: &Vec3) -> Vec3 {
        match self {
            Objective::GradSquared => 2.0 * v,
            Objective::StateIntegral | Objective::DomainVolume => Vec3::zeros(),
        }
    }

    pub fn j_x(&self, _x: &Vec3, _u: f64, _v: &Vec3) -> Vec3 {
        Vec3::zeros()
    }
}

/// The full state problem: equation, forcing and objective integrand.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StateProblem {
    pub equation: Equation,
    pub forcing: Forcing,
    pub objective: Objective,
}

impl StateProblem {
    /// The reaction-diffusion experiment setup with j = u.
    pub fn reaction_neumann(forcing: Forcing) -> Self {
        Self {
            equation: Equation::ReactionNeumann,
            forcing,
            objective: Objective::StateIntegral,
        }
    }
}
