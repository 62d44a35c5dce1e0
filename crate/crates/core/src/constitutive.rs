//! Material laws and the LATIN search directions.
//!
//! Voigt convention: strains are `(e_xx, e_yy, 2 e_xy)`, stresses are
//! `(s_xx, s_yy, s_xy)`, so that `s : e` is the plain dot product.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Voigt = Vector3<f64>;

/// Voigt image of the 2D identity tensor.
pub fn voigt_identity() -> Voigt {
    Vector3::new(1.0, 1.0, 0.0)
}

/// Newtonian ideal-gas fluid at constant temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    /// Dynamic viscosity (kg/m/s).
    pub mu: f64,
    /// Second viscosity (kg/m/s).
    pub lambda: f64,
    /// Universal gas constant (J/K/mol).
    pub gas_constant: f64,
    /// Molar mass (kg/mol).
    pub molar_mass: f64,
    /// Reference temperature (K).
    pub temperature: f64,
    /// Initial pressure (Pa).
    pub p0: f64,
}

impl Material {
    /// Air-like fluid with the channel-flow properties (mu = 1, lambda = 1e3).
    pub fn channel_default() -> Self {
        Self {
            mu: 1.0,
            lambda: 1.0e3,
            gas_constant: 8.314,
            molar_mass: 28.9645e-3,
            temperature: 293.0,
            p0: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.mu, self.lambda, self.gas_constant, self.molar_mass, self.temperature, self.p0]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("material parameters must be finite".into()));
        }
        if self.mu <= 0.0 {
            return Err(Error::Config(format!("material.mu must be positive, got {}", self.mu)));
        }
        if self.mu + self.lambda <= 0.0 {
            return Err(Error::Config(format!(
                "material.mu + material.lambda must be positive, got {}",
                self.mu + self.lambda
            )));
        }
        if self.specific_gas_constant() * self.temperature <= 0.0 {
            return Err(Error::Config("r * T0 must be positive".into()));
        }
        if self.p0 < 0.0 {
            return Err(Error::Config(format!("material.p0 must be non-negative, got {}", self.p0)));
        }
        Ok(())
    }

    /// r = R / M.
    pub fn specific_gas_constant(&self) -> f64 {
        self.gas_constant / self.molar_mass
    }

    /// r T0, the slope of the state law.
    pub fn gas_slope(&self) -> f64 {
        self.specific_gas_constant() * self.temperature
    }

    pub fn rho0(&self) -> f64 {
        self.p0 / self.gas_slope()
    }

    /// Unchecked linear state law, also valid for the transient negative
    /// densities an unconverged iterate may carry.
    #[inline]
    pub fn pressure(&self, rho: f64) -> f64 {
        self.gas_slope() * rho
    }

    #[inline]
    pub fn density(&self, p: f64) -> f64 {
        p / self.gas_slope()
    }
}

/// Ideal-gas pressure p = r T0 rho.
pub fn gas_pressure(material: &Material, rho: f64) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::Domain(format!("density must be non-negative, got {rho}")));
    }
    Ok(material.pressure(rho))
}

/// Inverse of [`gas_pressure`].
pub fn gas_density(material: &Material, p: f64) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(Error::Domain(format!("pressure must be non-negative, got {p}")));
    }
    Ok(material.density(p))
}

/// Viscosity tensor in Voigt form: `tau = 2 mu eps + lambda tr(eps) I`.
pub fn voigt_viscosity(material: &Material) -> Matrix3<f64> {
    let (mu, la) = (material.mu, material.lambda);
    Matrix3::new(
        2.0 * mu + la,
        la,
        0.0,
        la,
        2.0 * mu + la,
        0.0,
        0.0,
        0.0,
        mu,
    )
}

/// The four search-direction operators, identical for the ascent and
/// descent directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchDirections {
    /// Stress/strain direction, Voigt (Pa s).
    pub h_eps_sigma: Matrix3<f64>,
    /// Inertia/velocity direction, 1/t_v.
    pub h_v_gamma: f64,
    /// Flux/density-gradient direction, -L_c^2/T (negative).
    pub h_zw: f64,
    /// Density-rate/density direction, 1/t_rho.
    pub h_rho_q: f64,
    pub t_v: f64,
    pub t_rho: f64,
    pub l_c: f64,
    pub t_end: f64,
}

/// Search directions taken from the constitutive operators.
pub fn build_search_directions(
    material: &Material,
    l_c: f64,
    t_end: f64,
    t_v: f64,
    t_rho: f64,
) -> Result<SearchDirections> {
    for (name, v) in [("l_c", l_c), ("t_end", t_end), ("t_v", t_v), ("t_rho", t_rho)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(SearchDirections {
        h_eps_sigma: voigt_viscosity(material),
        h_v_gamma: 1.0 / t_v,
        h_zw: -(l_c * l_c) / t_end,
        h_rho_q: 1.0 / t_rho,
        t_v,
        t_rho,
        l_c,
        t_end,
    })
}

/// `(V + H_eps_sigma)^{-1}`, the operator of the local strain equation.
pub fn invert_local_operator(material: &Material, sd: &SearchDirections) -> Result<Matrix3<f64>> {
    let op = voigt_viscosity(material) + sd.h_eps_sigma;
    op.cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Internal("local strain operator is not positive definite".into()))
}
