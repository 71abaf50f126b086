//! Poisson point process drops of gNBs and UEs for every operator.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::scenario::ValidatedScenario;

/// A point in metres. The square region is centred on the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance_3d(&self, other: &Position) -> f64 {
        let (dx, dy, dz) = (other.x - self.x, other.y - self.y, other.z - self.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Nodes of one operator in one trial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorNodes {
    pub gnbs: Vec<Position>,
    /// Boresight azimuth of each gNB array, radians in `[-pi, pi)`.
    pub gnb_orientations: Vec<f64>,
    pub ues: Vec<Position>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub operators: Vec<OperatorNodes>,
    /// Also stored as the last UE of `operators[typical_operator_index]`.
    pub typical_ue: Position,
    pub typical_operator_index: usize,
}

impl Deployment {
    /// Index of the typical UE inside its operator's UE list.
    pub fn typical_ue_index(&self) -> usize {
        self.operators[self.typical_operator_index].ues.len() - 1
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeploymentError {
    #[error("operator {operator} drew no gNB in this realization")]
    DegenerateTrial { operator: usize },
}

/// Homogeneous PPP on the square `[-side/2, side/2]^2` at height `height_m`.
pub fn sample_ppp<R: Rng + ?Sized>(
    intensity_per_km2: f64,
    region_side_m: f64,
    height_m: f64,
    rng: &mut R,
) -> Vec<Position> {
    let mean = intensity_per_km2 * region_side_m * region_side_m * 1e-6;
    if !(mean > 0.0) {
        return Vec::new();
    }
    let count = Poisson::new(mean).expect("finite positive Poisson mean").sample(rng) as usize;
    let half = region_side_m / 2.0;
    (0..count)
        .map(|_| {
            let x = rng.random_range(-half..half);
            let y = rng.random_range(-half..half);
            Position::new(x, y, height_m)
        })
        .collect()
}

/// One realization of all 2M point processes plus the typical UE at the
/// centre, which joins the first operator.
pub fn generate_deployment<R: Rng + ?Sized>(
    scenario: &ValidatedScenario,
    rng: &mut R,
) -> Result<Deployment, DeploymentError> {
    let mut operators = Vec::with_capacity(scenario.num_operators);
    for _ in 0..scenario.num_operators {
        let gnbs = sample_ppp(scenario.gnb_density_per_km2, scenario.area_side_m, scenario.gnb_height_m, rng);
        let ues = sample_ppp(scenario.ue_density_per_km2, scenario.area_side_m, scenario.ue_height_m, rng);
        let gnb_orientations = (0..gnbs.len()).map(|_| rng.random_range(-PI..PI)).collect();
        operators.push(OperatorNodes { gnbs, gnb_orientations, ues });
    }

    let typical_operator_index = 0;
    if operators[typical_operator_index].gnbs.is_empty() {
        return Err(DeploymentError::DegenerateTrial { operator: typical_operator_index });
    }
    let typical_ue = Position::new(0.0, 0.0, scenario.ue_height_m);
    operators[typical_operator_index].ues.push(typical_ue);

    Ok(Deployment { operators, typical_ue, typical_operator_index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{validate_config, ScenarioConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_intensity_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_ppp(0.0, 1000.0, 10.0, &mut rng).is_empty());
    }

    #[test]
    fn ppp_points_stay_in_region() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            for p in sample_ppp(200.0, 400.0, 1.5, &mut rng) {
                assert!(p.x >= -200.0 && p.x < 200.0);
                assert!(p.y >= -200.0 && p.y < 200.0);
                assert_eq!(p.z, 1.5);
            }
        }
    }

    #[test]
    fn ppp_mean_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 20_000;
        let total: usize = (0..n).map(|_| sample_ppp(75.0, 1000.0, 10.0, &mut rng).len()).sum();
        let mean = total as f64 / n as f64;
        // sd of the mean is sqrt(75 / 20000) ~ 0.06
        assert!((mean - 75.0).abs() < 0.3, "mean {mean}");
    }

    #[test]
    fn typical_ue_sits_at_centre() {
        let s = validate_config(ScenarioConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = generate_deployment(&s, &mut rng).unwrap();
        assert_eq!(d.typical_ue, Position::new(0.0, 0.0, 1.5));
        assert_eq!(d.operators.len(), 5);
        let op0 = &d.operators[0];
        assert_eq!(op0.ues[d.typical_ue_index()], d.typical_ue);
        for op in &d.operators {
            assert_eq!(op.gnbs.len(), op.gnb_orientations.len());
            assert!(op.gnbs.iter().all(|g| g.z == 10.0));
        }
    }

    #[test]
    fn same_seed_same_deployment() {
        let s = validate_config(ScenarioConfig::default()).unwrap();
        let a = generate_deployment(&s, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let b = generate_deployment(&s, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_first_operator_is_degenerate() {
        let s = validate_config(ScenarioConfig {
            gnb_density_per_km2: 1e-9,
            ..ScenarioConfig::default()
        })
        .unwrap();
        let r = generate_deployment(&s, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(r, Err(DeploymentError::DegenerateTrial { operator: 0 }));
    }
}
