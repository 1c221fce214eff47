//! Initial states: parsing `--state` specs, seeded random states and the
//! JSON matrix file format.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qframe_core::frame::rotation_generator;
use qframe_core::linalg::herm_eig;
use qframe_core::{CMatrix, DensityMatrix, Spin, C64};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

/// `bloch:θ,φ`, `mixed`, `random` or `file:PATH`.
#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    /// Spin coherent state pointing along `(θ, φ)`.
    Bloch { theta: f64, phi: f64 },
    Mixed,
    /// Uniformly random pure state drawn from the run's seed.
    Random,
    File(PathBuf),
}

impl FromStr for StateSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "mixed" {
            return Ok(StateSpec::Mixed);
        }
        if s == "random" {
            return Ok(StateSpec::Random);
        }
        if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err("file: needs a path".into());
            }
            return Ok(StateSpec::File(PathBuf::from(path)));
        }
        if let Some(rest) = s.strip_prefix("bloch:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(format!("expected bloch:THETA,PHI, got {s:?}"));
            }
            let parse = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("bad angle {p:?}: {e}"));
            let (theta, phi) = (parse(parts[0])?, parse(parts[1])?);
            if !theta.is_finite() || !phi.is_finite() {
                return Err("angles must be finite".into());
            }
            return Ok(StateSpec::Bloch { theta, phi });
        }
        Err(format!("unknown state {s:?}; expected bloch:THETA,PHI, mixed, random or file:PATH"))
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Bloch { theta, phi } => write!(f, "bloch:{theta},{phi}"),
            StateSpec::Mixed => f.write_str("mixed"),
            StateSpec::Random => f.write_str("random"),
            StateSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl StateSpec {
    /// Density matrix for a system of the given spin. `seed` is only used by
    /// [`StateSpec::Random`].
    pub fn resolve(&self, spin: Spin, seed: u64) -> AppResult<DensityMatrix> {
        let rho = match self {
            StateSpec::Bloch { theta, phi } => coherent_state(spin, *theta, *phi)?,
            StateSpec::Mixed => DensityMatrix::maximally_mixed(spin.dim()),
            StateSpec::Random => random_pure_state(spin.dim(), &mut seeded_rng(seed)),
            StateSpec::File(path) => read_state_file(path)?,
        };
        if rho.dim() != spin.dim() {
            return Err(AppError::Usage(format!(
                "state has dimension {}, spin {spin} needs {}",
                rho.dim(),
                spin.dim()
            )));
        }
        Ok(rho)
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Pure qubit state with a uniformly distributed Bloch vector.
pub fn random_pure_qubit<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    DensityMatrix::bloch_angles(z.acos(), phi)
}

/// Haar-random pure state; for `dim = 2` this is [`random_pure_qubit`].
pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    if dim == 2 {
        return random_pure_qubit(rng);
    }
    loop {
        let amps: Vec<C64> =
            (0..dim).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            let unit: Vec<C64> = amps.iter().map(|a| a / norm).collect();
            return DensityMatrix::pure(&unit).expect("normalized amplitudes");
        }
    }
}

/// Highest-weight state of `n·s` with `n = (sinθ cosφ, sinθ sinφ, cosθ)`.
pub fn coherent_state(spin: Spin, theta: f64, phi: f64) -> AppResult<DensityMatrix> {
    let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    let eig = herm_eig(&rotation_generator(spin, n))?;
    let top = eig.vectors.column(spin.dim() - 1);
    Ok(DensityMatrix::pure(&top)?)
}

/// On-disk density matrix: real and imaginary parts as row lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| (0..m.rows()).map(|i| (0..m.cols()).map(|j| f(&m[(i, j)])).collect()).collect();
        MatrixFile { dim: m.rows(), re: rows(|c| c.re), im: Some(rows(|c| c.im)) }
    }

    pub fn to_density(&self) -> AppResult<DensityMatrix> {
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == self.dim && rows.iter().all(|r| r.len() == self.dim);
        if !shape_ok(&self.re) || !self.im.as_ref().is_none_or(shape_ok) {
            return Err(AppError::Usage(format!("state file: expected {0}x{0} arrays", self.dim)));
        }
        let m = CMatrix::from_fn(self.dim, self.dim, |i, j| {
            C64::new(self.re[i][j], self.im.as_ref().map_or(0.0, |im| im[i][j]))
        });
        Ok(DensityMatrix::new(m)?)
    }
}

pub fn read_state_file(path: &Path) -> AppResult<DensityMatrix> {
    let text = fs::read_to_string(path)
        .map_err(|e| AppError::Usage(format!("cannot read state file {}: {e}", path.display())))?;
    let file: MatrixFile = serde_json::from_str(&text)
        .map_err(|e| AppError::Usage(format!("malformed state file {}: {e}", path.display())))?;
    file.to_density()
}

#[cfg(test)]
mod tests {
    use super::*;
    use qframe_core::spin::{spin_operators, Axis};

    #[test]
    fn parse_specs() {
        assert_eq!("mixed".parse::<StateSpec>().unwrap(), StateSpec::Mixed);
        assert_eq!("bloch:1.5,-0.25".parse::<StateSpec>().unwrap(), StateSpec::Bloch { theta: 1.5, phi: -0.25 });
        assert_eq!("file:a.json".parse::<StateSpec>().unwrap(), StateSpec::File("a.json".into()));
        for bad in ["bloch:1", "bloch:a,b", "pure", "file:", "bloch:nan,0"] {
            assert!(bad.parse::<StateSpec>().is_err(), "{bad}");
        }
        let spec = StateSpec::Bloch { theta: 0.5, phi: 2.0 };
        assert_eq!(spec.to_string().parse::<StateSpec>().unwrap(), spec);
    }

    #[test]
    fn coherent_state_points_along_n() {
        for spin in [Spin::HALF, Spin::ONE, Spin::THREE_HALVES] {
            let (theta, phi) = (1.1, -0.7);
            let rho = coherent_state(spin, theta, phi).unwrap();
            let ops = spin_operators(spin);
            let s = spin.value();
            let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
            for axis in Axis::ALL {
                assert!((rho.expectation(ops.get(axis)) - s * n[axis.index()]).abs() < 1e-10);
            }
        }
        let half = coherent_state(Spin::HALF, 0.4, 0.9).unwrap();
        let direct = DensityMatrix::bloch_angles(0.4, 0.9);
        assert!(half.matrix().max_abs_diff(direct.matrix()) < 1e-12);
    }

    #[test]
    fn random_states_are_seeded_and_pure() {
        let a = StateSpec::Random.resolve(Spin::HALF, 7).unwrap();
        let b = StateSpec::Random.resolve(Spin::HALF, 7).unwrap();
        let c = StateSpec::Random.resolve(Spin::HALF, 8).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert!(a.matrix().max_abs_diff(c.matrix()) > 1e-6);
        let d = StateSpec::Random.resolve(Spin::ONE, 3).unwrap();
        assert!((d.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_qubits_cover_the_sphere() {
        let mut rng = seeded_rng(11);
        let ops = spin_operators(Spin::HALF);
        let n = 4000;
        let mut mean = [0.0; 3];
        let mut upper = 0;
        for _ in 0..n {
            let rho = random_pure_qubit(&mut rng);
            for axis in Axis::ALL {
                mean[axis.index()] += rho.expectation(ops.get(axis)) / n as f64;
            }
            if rho.expectation(ops.get(Axis::Z)) > 0.0 {
                upper += 1;
            }
        }
        assert!(mean.iter().all(|m| m.abs() < 0.03), "{mean:?}");
        assert!((upper as f64 / n as f64 - 0.5).abs() < 0.03);
    }

    #[test]
    fn matrix_file_round_trip() {
        let rho = DensityMatrix::bloch_angles(0.3, 1.3);
        let file = MatrixFile::from_matrix(rho.matrix());
        let json = serde_json::to_string(&file).unwrap();
        let back: MatrixFile = serde_json::from_str(&json).unwrap();
        assert!(back.to_density().unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let bad = MatrixFile { dim: 2, re: vec![vec![1.0, 0.0]], im: None };
        assert!(matches!(bad.to_density(), Err(AppError::Usage(_))));
    }
}
