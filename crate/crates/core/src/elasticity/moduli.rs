use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Engineering constants: Young's modulus `E` (kPa) and Poisson ratio `nu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElasticModuli<T> {
    pub youngs_modulus: T,
    pub poisson_ratio: T,
}

/// Lamé pair `(λ, μ)` in kPa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LamePair<T> {
    pub lambda: T,
    pub mu: T,
}

impl<T: Real> LamePair<T> {
    pub fn new(lambda: T, mu: T) -> Self {
        LamePair { lambda, mu }
    }

    pub fn scaled(self, s: T) -> Self {
        LamePair { lambda: self.lambda * s, mu: self.mu * s }
    }
}

impl<T: Real> ElasticModuli<T> {
    pub fn new(youngs_modulus: T, poisson_ratio: T) -> Result<Self> {
        let m = ElasticModuli { youngs_modulus, poisson_ratio };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let (e, nu) = (self.youngs_modulus, self.poisson_ratio);
        if !(e > T::zero()) || !e.is_finite() {
            return Err(Error::InvalidModuli(format!("Young's modulus must be positive, got {e}")));
        }
        if nu >= T::lit(0.5) {
            return Err(Error::InvalidModuli(format!("Poisson ratio {nu} reaches the incompressible limit")));
        }
        if !(nu > T::zero()) {
            return Err(Error::InvalidModuli(format!("Poisson ratio must be positive, got {nu}")));
        }
        Ok(())
    }
}

/// `λ = Eν/((1+ν)(1−2ν))`, `μ = E/(2(1+ν))`.
pub fn lame_from_moduli<T: Real>(m: ElasticModuli<T>) -> Result<LamePair<T>> {
    m.validate()?;
    let (e, nu) = (m.youngs_modulus, m.poisson_ratio);
    let one = T::one();
    let two = T::lit(2.0);
    Ok(LamePair { lambda: e * nu / ((one + nu) * (one - two * nu)), mu: e / (two * (one + nu)) })
}

/// `E = μ(3λ+2μ)/(λ+μ)`, `ν = λ/(2(λ+μ))`.
pub fn moduli_from_lame<T: Real>(p: LamePair<T>) -> Result<ElasticModuli<T>> {
    let (l, m) = (p.lambda, p.mu);
    if !(m > T::zero()) || l < T::zero() || !l.is_finite() || !m.is_finite() {
        return Err(Error::InvalidModuli(format!("need λ ≥ 0 and μ > 0, got ({l}, {m})")));
    }
    let two = T::lit(2.0);
    Ok(ElasticModuli { youngs_modulus: m * (T::lit(3.0) * l + two * m) / (l + m), poisson_ratio: l / (two * (l + m)) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn ground_truth_table_rows() {
        // (E, λ, μ) rows of the ground-truth table, ν = 0.45, printed to 4 decimals.
        let rows = [
            (100.0, 310.3448, 34.4828),
            (200.0, 620.6897, 68.9655),
            (50.0, 155.1724, 17.2414),
            (75.0, 232.7586, 25.8621),
            (150.0, 465.5172, 51.7241),
        ];
        for (e, lambda, mu) in rows {
            let p = lame_from_moduli(ElasticModuli::<f64>::new(e, 0.45).unwrap()).unwrap();
            assert!((p.lambda - lambda).abs() < 5e-5, "λ for E={e}: {}", p.lambda);
            assert!((p.mu - mu).abs() < 5e-5, "μ for E={e}: {}", p.mu);
        }
    }

    #[test]
    fn equal_lame_parameters() {
        let m = moduli_from_lame(LamePair::new(7.0, 7.0)).unwrap();
        assert!(close(m.poisson_ratio, 0.25, 1e-15));
        assert!(close(m.youngs_modulus, 2.5 * 7.0, 1e-15));
    }

    #[test]
    fn rejects_incompressible_and_invalid() {
        assert!(ElasticModuli::new(100.0, 0.5).is_err());
        assert!(ElasticModuli::new(100.0, 0.7).is_err());
        assert!(ElasticModuli::new(-1.0, 0.3).is_err());
        let bad = ElasticModuli { youngs_modulus: 100.0, poisson_ratio: 0.5 };
        assert!(lame_from_moduli(bad).is_err());
        assert!(moduli_from_lame(LamePair::new(1.0, 0.0)).is_err());
        assert!(moduli_from_lame(LamePair::new(-1.0, 1.0)).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn round_trip(e in 1.0f64..1e4, nu in 0.01f64..0.49) {
                let m = ElasticModuli::new(e, nu).unwrap();
                let back = moduli_from_lame(lame_from_moduli(m).unwrap()).unwrap();
                prop_assert!(close(back.youngs_modulus, e, 1e-12));
                prop_assert!(close(back.poisson_ratio, nu, 1e-12));
            }
        }
    }
}
