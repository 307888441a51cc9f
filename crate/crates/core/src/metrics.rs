use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::channels::{NoiseKind, NoiseSpec};
use crate::error::{Error, Result};
use crate::filtration::FiltrationOutcome;
use crate::qstate::{eig_hermitian, ComplexMatrix, DensityMatrix, PureState};

/// Eigenvalue pairs with `lambda_l + lambda_m` at or below this are left
/// out of the symmetric logarithmic derivative.
pub const SLD_CUTOFF: f64 = 1e-12;

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Fidelity,
    ChshFixed,
    ChshOpt,
    Qfi,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    pub probability: f64,
    pub kind: MetricKind,
}

/// `theta[i][j]`, `phi[i][j]`: party `i`, setting `j`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSettings {
    pub theta: [[f64; 2]; 2],
    pub phi: [[f64; 2]; 2],
}

impl MeasurementSettings {
    /// Thetas row-major followed by phis row-major.
    pub fn from_flat(angles: &[f64]) -> Result<Self> {
        if angles.len() != 8 {
            return Err(Error::ParamCount {
                expected: 8,
                actual: angles.len(),
            });
        }
        Ok(Self {
            theta: [[angles[0], angles[1]], [angles[2], angles[3]]],
            phi: [[angles[4], angles[5]], [angles[6], angles[7]]],
        })
    }

    pub fn to_flat(&self) -> [f64; 8] {
        [
            self.theta[0][0],
            self.theta[0][1],
            self.theta[1][0],
            self.theta[1][1],
            self.phi[0][0],
            self.phi[0][1],
            self.phi[1][0],
            self.phi[1][1],
        ]
    }
}

pub fn entanglement_fidelity(outcome: &FiltrationOutcome) -> Result<MetricValue> {
    let value = fidelity_phi_plus(&outcome.state)?;
    Ok(MetricValue {
        value,
        probability: outcome.probability,
        kind: MetricKind::Fidelity,
    })
}

/// `<Phi+| rho |Phi+>` for a two-qubit state.
pub fn fidelity_phi_plus(rho: &DensityMatrix) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: rho.dim(),
        });
    }
    Ok(rho.expectation_pure(&PureState::phi_plus()))
}

pub fn chsh_observable(theta: f64, phi: f64) -> ComplexMatrix {
    let (s, c) = theta.sin_cos();
    let e = C64::from_polar(1.0, phi);
    ComplexMatrix::from_rows(&[
        vec![C64::new(c, 0.0), e.conj() * s],
        vec![e * s, C64::new(-c, 0.0)],
    ])
    .expect("2x2 rows")
}

/// `|sum_{x,y} (-1)^{xy} Tr(M_{0,x} (x) M_{1,y} rho)|`
pub fn chsh_value(rho: &DensityMatrix, settings: &MeasurementSettings) -> Result<f64> {
    chsh_value_matrix(rho.matrix(), settings)
}

pub fn chsh_value_matrix(rho: &ComplexMatrix, settings: &MeasurementSettings) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: rho.dim(),
        });
    }
    let obs = |i: usize, j: usize| chsh_observable(settings.theta[i][j], settings.phi[i][j]);
    let mut total = 0.0;
    for x in 0..2 {
        let a = obs(0, x);
        for y in 0..2 {
            let ab = a.kron(&obs(1, y));
            let corr = ab.matmul(rho).trace().re;
            total += if x * y == 1 { -corr } else { corr };
        }
    }
    Ok(total.abs())
}

/// Settings that are optimal for the Bell state under the given channel.
/// Depolarizing noise keeps the textbook angles; dephasing tilts Bob's
/// observables to `arctan q`.
pub fn fixed_settings(noise: &NoiseSpec) -> MeasurementSettings {
    let tilt = match noise.kind {
        NoiseKind::Depolarizing => FRAC_PI_4,
        NoiseKind::Dephasing => noise.q.atan(),
    };
    MeasurementSettings {
        theta: [[0.0, FRAC_PI_2], [tilt, tilt]],
        phi: [[0.0, 0.0], [0.0, PI]],
    }
}

fn check_hermitian(m: &ComplexMatrix) -> Result<()> {
    let deviation = m.hermitian_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

struct Sld {
    values: Vec<f64>,
    vectors: ComplexMatrix,
    /// `L` in the eigenbasis of `rho`
    l_eig: ComplexMatrix,
}

fn sld_eigen(rho: &ComplexMatrix, drho: &ComplexMatrix) -> Result<Sld> {
    if rho.dim() != drho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: drho.dim(),
        });
    }
    check_hermitian(rho)?;
    check_hermitian(drho)?;
    let (values, vectors) = eig_hermitian(rho)?;
    let d_eig = drho.hermitized().conjugated_by(&vectors.dagger());
    let n = rho.dim();
    let l_eig = ComplexMatrix::from_fn(n, |m, l| {
        let denom = values[l] + values[m];
        if denom > SLD_CUTOFF {
            d_eig[(m, l)] * (2.0 / denom)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(Sld {
        values,
        vectors,
        l_eig,
    })
}

/// Symmetric logarithmic derivative in the computational basis.
pub fn sld(rho: &DensityMatrix, drho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let s = sld_eigen(rho.matrix(), drho)?;
    Ok(s.l_eig.conjugated_by(&s.vectors))
}

/// `Tr(L^2 rho)`
pub fn qfi(rho: &DensityMatrix, drho: &ComplexMatrix) -> Result<f64> {
    qfi_matrix(rho.matrix(), drho)
}

pub fn qfi_matrix(rho: &ComplexMatrix, drho: &ComplexMatrix) -> Result<f64> {
    let s = sld_eigen(rho, drho)?;
    let n = rho.dim();
    let mut q = 0.0;
    for m in 0..n {
        for l in 0..n {
            q += s.l_eig[(m, l)].norm_sqr() * s.values[l];
        }
    }
    Ok(q)
}

/// `max |d rho - (L rho + rho L)/2|` over eigenbasis entries whose
/// eigenvalue pair lies above the cutoff. `L` is rebuilt in the
/// computational basis first, so this checks the decomposition as well.
pub fn sld_residual(rho: &DensityMatrix, drho: &ComplexMatrix) -> Result<f64> {
    let s = sld_eigen(rho.matrix(), drho)?;
    let l = s.l_eig.conjugated_by(&s.vectors);
    let r = rho.matrix();
    let anti = l.matmul(r).add(&r.matmul(&l)).scale_real(0.5);
    let resid = drho.sub(&anti).conjugated_by(&s.vectors.dagger());
    let n = r.dim();
    let mut worst: f64 = 0.0;
    for m in 0..n {
        for k in 0..n {
            if s.values[m] + s.values[k] > SLD_CUTOFF {
                worst = worst.max(resid[(m, k)].norm());
            }
        }
    }
    Ok(worst)
}

pub fn qfi_metric(rho: &DensityMatrix, drho: &ComplexMatrix) -> Result<MetricValue> {
    Ok(MetricValue {
        value: qfi(rho, drho)?,
        probability: 1.0,
        kind: MetricKind::Qfi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::tensor;
    use std::f64::consts::SQRT_2;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    #[test]
    fn fidelity_examples() {
        close(
            fidelity_phi_plus(&PureState::phi_plus().density()).unwrap(),
            1.0,
            1e-15,
        );
        close(
            fidelity_phi_plus(&DensityMatrix::maximally_mixed(2)).unwrap(),
            0.25,
            1e-15,
        );
        assert!(fidelity_phi_plus(&DensityMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn observables() {
        assert!(chsh_observable(0.0, 0.0).max_abs_diff(&ComplexMatrix::pauli_z()) < 1e-15);
        assert!(chsh_observable(FRAC_PI_2, 0.0).max_abs_diff(&ComplexMatrix::pauli_x()) < 1e-15);
        assert!(
            chsh_observable(FRAC_PI_2, FRAC_PI_2).max_abs_diff(&ComplexMatrix::pauli_y()) < 1e-15
        );
        let (vals, _) = eig_hermitian(&chsh_observable(0.7, 2.3)).unwrap();
        close(vals[0], 1.0, 1e-12);
        close(vals[1], -1.0, 1e-12);
    }

    #[test]
    fn tsirelson_for_bell_state() {
        let dep = NoiseSpec::depolarizing(1.0).unwrap();
        let v = chsh_value(&PureState::phi_plus().density(), &fixed_settings(&dep)).unwrap();
        close(v, 2.0 * SQRT_2, 1e-14);
        let v = chsh_value(&DensityMatrix::maximally_mixed(2), &fixed_settings(&dep)).unwrap();
        close(v, 0.0, 1e-15);
    }

    #[test]
    fn depolarized_bell_state() {
        let q = 0.75;
        let rho = PureState::phi_plus()
            .density()
            .matrix()
            .scale_real(q)
            .add(&ComplexMatrix::identity(4).scale_real((1.0 - q) / 4.0));
        let rho = DensityMatrix::new(rho).unwrap();
        let v = chsh_value(&rho, &fixed_settings(&NoiseSpec::depolarizing(q).unwrap())).unwrap();
        close(v, 2.0 * SQRT_2 * q, 1e-14);
    }

    #[test]
    fn fixed_settings_values() {
        let d = fixed_settings(&NoiseSpec::depolarizing(0.5).unwrap());
        close(d.theta[1][0], FRAC_PI_4, 1e-16);
        close(d.phi[1][1], PI, 1e-16);
        let f = fixed_settings(&NoiseSpec::dephasing(1.0).unwrap());
        assert_eq!(f, d);
        close(
            fixed_settings(&NoiseSpec::dephasing(0.6).unwrap()).theta[1][0],
            0.540420,
            1e-6,
        );
    }

    #[test]
    fn settings_flat_roundtrip() {
        let flat = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
        let s = MeasurementSettings::from_flat(&flat).unwrap();
        assert_eq!(s.theta[1][0], 0.3);
        assert_eq!(s.phi[0][1], 0.6);
        assert_eq!(s.to_flat(), flat);
        assert!(MeasurementSettings::from_flat(&flat[..5]).is_err());
    }

    fn theta_pair(theta: f64) -> (DensityMatrix, ComplexMatrix) {
        let psi = PureState::theta_state(theta);
        let d = PureState::theta_state_derivative(theta);
        let a = psi.amplitudes();
        let drho = ComplexMatrix::outer(&d, a).add(&ComplexMatrix::outer(a, &d));
        (psi.density(), drho)
    }

    #[test]
    fn pure_state_qfi_is_one() {
        for theta in [0.0, 0.4, 2.0] {
            let (rho, drho) = theta_pair(theta);
            close(qfi(&rho, &drho).unwrap(), 1.0, 1e-12);
            assert!(sld_residual(&rho, &drho).unwrap() < 1e-12);
        }
    }

    #[test]
    fn depolarized_qfi() {
        let q: f64 = 0.6;
        let (rho, drho) = theta_pair(0.9);
        let mix = |m: &ComplexMatrix, tr: f64| {
            m.scale_real(q)
                .add(&ComplexMatrix::identity(2).scale_real(tr * (1.0 - q) / 2.0))
        };
        let r = DensityMatrix::new(mix(rho.matrix(), 1.0)).unwrap();
        let d = mix(&drho, 0.0);
        close(qfi(&r, &d).unwrap(), 0.36, 1e-12);
        assert!(sld_residual(&r, &d).unwrap() < 1e-12);
    }

    #[test]
    fn qfi_rejects_non_hermitian() {
        let (rho, _) = theta_pair(0.3);
        let bad = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(qfi(&rho, &bad), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn qfi_ignores_appended_pure_ancilla() {
        let (rho, drho) = theta_pair(1.1);
        let zero = PureState::basis(1, 0).density();
        let big = rho.tensor(&zero);
        let dbig = tensor(&drho, zero.matrix());
        close(qfi(&big, &dbig).unwrap(), 1.0, 1e-12);
    }
}
