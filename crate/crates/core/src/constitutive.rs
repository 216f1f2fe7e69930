//! Pointwise constitutive laws of the perfect-gas Newtonian fluid.
//!
//! Pressure p = rho * theta, internal energy e = cv * theta, entropy
//! s = cv log(theta) - log(rho), Newtonian viscous stress, Fourier heat flux.

use crate::field::{ScalarField, TensorField, VectorField};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConstitutiveError {
    #[error("transport/thermodynamic parameter {name} must satisfy {constraint}, got {value}")]
    InvalidParameter {
        name: &'static str,
        constraint: &'static str,
        value: f64,
    },
    #[error("field {name} lost positivity at node {node} (value {value})")]
    NonPositive {
        name: &'static str,
        node: usize,
        value: f64,
    },
    #[error("viscous stress requires a symmetric strain tensor")]
    AsymmetricStrain,
}

/// Constant transport and thermodynamic coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysParams {
    mu: f64,
    eta: f64,
    kappa: f64,
    cv: f64,
}

impl PhysParams {
    pub fn new(mu: f64, eta: f64, kappa: f64, cv: f64) -> Result<Self, ConstitutiveError> {
        let check = |name, constraint, value: f64, ok: bool| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(ConstitutiveError::InvalidParameter {
                    name,
                    constraint,
                    value,
                })
            }
        };
        check("mu", "mu > 0", mu, mu > 0.0)?;
        check("eta", "eta >= 0", eta, eta >= 0.0)?;
        check("kappa", "kappa > 0", kappa, kappa > 0.0)?;
        check("cv", "cv > 0", cv, cv > 0.0)?;
        Ok(PhysParams { mu, eta, kappa, cv })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn cv(&self) -> f64 {
        self.cv
    }
}

fn require_positive(f: &ScalarField, name: &'static str) -> Result<(), ConstitutiveError> {
    for (node, &v) in f.values().iter().enumerate() {
        if !(v > 0.0) {
            return Err(ConstitutiveError::NonPositive {
                name,
                node,
                value: v,
            });
        }
    }
    Ok(())
}

/// p = rho * theta nodewise.
pub fn pressure(rho: &ScalarField, theta: &ScalarField) -> Result<ScalarField, ConstitutiveError> {
    require_positive(rho, "rho")?;
    require_positive(theta, "theta")?;
    Ok(rho.zip_with(theta, |r, t| r * t).expect("same grid"))
}

/// e = cv * theta nodewise.
pub fn internal_energy(
    theta: &ScalarField,
    params: &PhysParams,
) -> Result<ScalarField, ConstitutiveError> {
    require_positive(theta, "theta")?;
    let cv = params.cv;
    Ok(theta.map(|t| cv * t))
}

/// s = cv log(theta) - log(rho) nodewise.
pub fn entropy(
    rho: &ScalarField,
    theta: &ScalarField,
    params: &PhysParams,
) -> Result<ScalarField, ConstitutiveError> {
    require_positive(rho, "rho")?;
    require_positive(theta, "theta")?;
    let cv = params.cv;
    Ok(rho
        .zip_with(theta, |r, t| cv * t.ln() - r.ln())
        .expect("same grid"))
}

/// Newtonian stress S(D) = 2 mu (D - div/3 I) + eta div I, div = trace D.
pub fn viscous_stress(
    strain: &TensorField,
    params: &PhysParams,
) -> Result<TensorField, ConstitutiveError> {
    if !strain.is_symmetric() {
        return Err(ConstitutiveError::AsymmetricStrain);
    }
    let mu = params.mu;
    let eta = params.eta;
    let vals = strain
        .values()
        .iter()
        .map(|d| {
            let div = d[0][0] + d[1][1] + d[2][2];
            let mut s = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    let iso = if a == b { div } else { 0.0 };
                    s[a][b] = 2.0 * mu * (d[a][b] - iso / 3.0) + eta * iso;
                }
            }
            s
        })
        .collect();
    Ok(TensorField::from_values(strain.grid(), vals, true).expect("symmetric by construction"))
}

/// Fourier flux q = -kappa grad theta.
pub fn heat_flux(grad_theta: &VectorField, params: &PhysParams) -> VectorField {
    let kappa = params.kappa;
    grad_theta.map(|g| [-kappa * g[0], -kappa * g[1], -kappa * g[2]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn grid() -> Grid {
        Grid::unit_cube(4).unwrap()
    }

    #[test]
    fn params_enforce_signs() {
        assert!(PhysParams::new(1.0, 0.0, 1.0, 1.0).is_ok());
        assert!(PhysParams::new(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(PhysParams::new(1.0, -0.1, 1.0, 1.0).is_err());
        assert!(PhysParams::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(PhysParams::new(1.0, 0.0, 1.0, -2.0).is_err());
    }

    #[test]
    fn pressure_values() {
        let g = grid();
        let p = pressure(&ScalarField::constant(g, 2.0), &ScalarField::constant(g, 3.0)).unwrap();
        assert!((p.max_value() - 6.0).abs() < 1e-15 && (p.min_value() - 6.0).abs() < 1e-15);

        let theta = ScalarField::from_fn(g, |x, _, _| 1.0 + x);
        let rho = theta.map(|t| 1.0 / t);
        let p = pressure(&rho, &theta).unwrap();
        assert!((p.max_value() - 1.0).abs() < 1e-14 && (p.min_value() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pressure_rejects_nonpositive() {
        let g = grid();
        let mut rho = ScalarField::constant(g, 1.0);
        rho.values_mut()[3] = 0.0;
        let err = pressure(&rho, &ScalarField::constant(g, 1.0)).unwrap_err();
        assert!(matches!(err, ConstitutiveError::NonPositive { name: "rho", node: 3, .. }));
    }

    #[test]
    fn internal_energy_is_linear() {
        let g = grid();
        let params = PhysParams::new(1.0, 0.0, 1.0, 1.5).unwrap();
        let theta = ScalarField::from_fn(g, |x, y, _| 1.0 + x + y);
        let e1 = internal_energy(&theta, &params).unwrap();
        let e2 = internal_energy(&theta.map(|t| 2.0 * t), &params).unwrap();
        for (a, b) in e1.values().iter().zip(e2.values()) {
            assert!((2.0 * a - b).abs() < 1e-14);
        }
        let e = internal_energy(&ScalarField::constant(g, 1.0), &params).unwrap();
        assert!((e.max_value() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn entropy_reference_points() {
        let g = grid();
        let params = PhysParams::new(1.0, 0.0, 1.0, 1.0).unwrap();
        let one = ScalarField::constant(g, 1.0);
        let e = std::f64::consts::E;
        let s = entropy(&one, &one, &params).unwrap();
        assert!(s.max_value().abs() < 1e-15);
        let s = entropy(&one, &ScalarField::constant(g, e), &params).unwrap();
        assert!((s.max_value() - 1.0).abs() < 1e-14);
        let s = entropy(&ScalarField::constant(g, e), &one, &params).unwrap();
        assert!((s.max_value() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn stress_hand_cases() {
        let g = grid();
        let params = PhysParams::new(1.0, 0.0, 1.0, 1.0).unwrap();

        let zero = TensorField::zeros(g, true);
        let s = viscous_stress(&zero, &params).unwrap();
        assert!(s.magnitude().max_value() < 1e-15);

        // identity strain: deviatoric part vanishes and eta = 0
        let mut ident = vec![[[0.0; 3]; 3]; g.node_count()];
        for t in ident.iter_mut() {
            for a in 0..3 {
                t[a][a] = 1.0;
            }
        }
        let ident = TensorField::from_values(g, ident, true).unwrap();
        let s = viscous_stress(&ident, &params).unwrap();
        assert!(s.magnitude().max_value() < 1e-14);

        // diag(3,0,0): 2(D - I) with div = 3 gives diag(4,-2,-2)
        let mut d = vec![[[0.0; 3]; 3]; g.node_count()];
        for t in d.iter_mut() {
            t[0][0] = 3.0;
        }
        let d = TensorField::from_values(g, d, true).unwrap();
        let s = viscous_stress(&d, &params).unwrap();
        let t = s.values()[0];
        assert!((t[0][0] - 4.0).abs() < 1e-14);
        assert!((t[1][1] + 2.0).abs() < 1e-14);
        assert!((t[2][2] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn stress_trace_identity() {
        // trace S = 3 eta trace D
        let g = grid();
        let params = PhysParams::new(0.7, 0.3, 1.0, 1.0).unwrap();
        let mut d = vec![[[0.0; 3]; 3]; g.node_count()];
        for (n, t) in d.iter_mut().enumerate() {
            let f = n as f64 * 0.01;
            t[0][0] = 1.0 + f;
            t[1][1] = -0.5 * f;
            t[2][2] = 0.25;
            t[0][1] = 0.1;
            t[1][0] = 0.1;
        }
        let d = TensorField::from_values(g, d, true).unwrap();
        let s = viscous_stress(&d, &params).unwrap();
        let lhs = s.trace();
        let rhs = d.trace().map(|t| 3.0 * params.eta() * t);
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn stress_rejects_asymmetric() {
        let g = grid();
        let t = TensorField::zeros(g, false);
        let params = PhysParams::new(1.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!(
            viscous_stress(&t, &params).unwrap_err(),
            ConstitutiveError::AsymmetricStrain
        );
    }

    #[test]
    fn heat_flux_cases() {
        let g = grid();
        let params = PhysParams::new(1.0, 0.0, 2.0, 1.0).unwrap();
        let grad = VectorField::constant(g, [1.0, 0.0, 0.0]);
        let q = heat_flux(&grad, &params);
        assert!((q.values()[0][0] + 2.0).abs() < 1e-15);
        let qn = heat_flux(&grad.map(|v| [-v[0], -v[1], -v[2]]), &params);
        for (a, b) in q.values().iter().zip(qn.values()) {
            for c in 0..3 {
                assert!((a[c] + b[c]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gibbs_compatibility_by_finite_differences() {
        // theta * ds/dtheta = de/dtheta and theta * ds/drho = -theta/rho,
        // central differences of step 1e-4 at (rho, theta) = (1.3, 0.7)
        let cv = 1.4;
        let s = |r: f64, t: f64| cv * t.ln() - r.ln();
        let e = |t: f64| cv * t;
        let (r0, t0, dh) = (1.3, 0.7, 1e-4);
        let ds_dt = (s(r0, t0 + dh) - s(r0, t0 - dh)) / (2.0 * dh);
        let de_dt = (e(t0 + dh) - e(t0 - dh)) / (2.0 * dh);
        assert!((t0 * ds_dt - de_dt).abs() < 1e-6);
        let ds_dr = (s(r0 + dh, t0) - s(r0 - dh, t0)) / (2.0 * dh);
        assert!((t0 * ds_dr + t0 / r0).abs() < 1e-6);
    }

    #[test]
    fn dissipation_positivity_on_random_strains() {
        // S(D):D >= 0 for every symmetric D
        let g = Grid::unit_cube(4).unwrap();
        let params = PhysParams::new(0.8, 0.2, 1.0, 1.0).unwrap();
        // simple deterministic LCG so the test needs no external RNG
        let mut state: u64 = 0x9e3779b97f4a7c15;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..1000 {
            let mut d = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in a..3 {
                    let v = next();
                    d[a][b] = v;
                    d[b][a] = v;
                }
            }
            let t = TensorField::from_values(g, vec![d; g.node_count()], true).unwrap();
            let s = viscous_stress(&t, &params).unwrap();
            let prod = s.contract(&t).unwrap();
            assert!(prod.min_value() >= -1e-12);
        }
    }

    #[test]
    fn stress_is_linear_in_strain() {
        let g = Grid::unit_cube(4).unwrap();
        let params = PhysParams::new(0.8, 0.2, 1.0, 1.0).unwrap();
        let mk = |d: [[f64; 3]; 3]| TensorField::from_values(g, vec![d; g.node_count()], true).unwrap();
        let d1 = mk([[1.0, 0.2, 0.0], [0.2, -0.5, 0.3], [0.0, 0.3, 2.0]]);
        let d2 = mk([[0.1, -0.7, 0.4], [-0.7, 0.9, 0.0], [0.4, 0.0, -1.1]]);
        let (a, b) = (2.5, -0.75);
        let combo = mk({
            let mut m = [[0.0; 3]; 3];
            for p in 0..3 {
                for q in 0..3 {
                    m[p][q] = a * d1.values()[0][p][q] + b * d2.values()[0][p][q];
                }
            }
            m
        });
        let s_combo = viscous_stress(&combo, &params).unwrap();
        let s1 = viscous_stress(&d1, &params).unwrap();
        let s2 = viscous_stress(&d2, &params).unwrap();
        for p in 0..3 {
            for q in 0..3 {
                let want = a * s1.values()[0][p][q] + b * s2.values()[0][p][q];
                assert!((s_combo.values()[0][p][q] - want).abs() < 1e-12);
            }
        }
    }
}
