//! Helpers shared by the integration suites: hand-typed reference formulas,
//! random states, the CNOT-ladder multiplexor and a least-squares unitary
//! fitter. Nothing here calls into the closed-form module.

#![allow(dead_code)]

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qfilt::gates::{rotation, Axis, Circuit, Gate};
use qfilt::qstate::{ComplexMatrix, DensityMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Reference values typed in directly from the one- and two-ancilla
/// derivations, indexed as `(metric, n)`.
pub mod oracle {
    use super::SQRT_2;

    pub fn deph_p(n: usize, q: f64) -> f64 {
        match n {
            0 => 1.0,
            1 => (1.0 + q * q) / 2.0,
            2 => (1.0 + 3.0 * q * q) / 4.0,
            _ => unreachable!(),
        }
    }

    pub fn deph_f(n: usize, q: f64) -> f64 {
        match n {
            0 => (1.0 + q) / 2.0,
            1 => 0.5 + q / (1.0 + q * q),
            2 => (q + 1.0).powi(3) / (6.0 * q * q + 2.0),
            _ => unreachable!(),
        }
    }

    pub fn depo_p(n: usize, q: f64) -> f64 {
        match n {
            0 => 1.0,
            1 => (1.0 + q * q) / 2.0,
            2 => (1.0 + q * q + 2.0 * q.powi(3)) / 4.0,
            _ => unreachable!(),
        }
    }

    pub fn depo_f(n: usize, q: f64) -> f64 {
        match n {
            0 => (1.0 + 3.0 * q) / 4.0,
            1 => (1.0 + 2.0 * q + 5.0 * q * q) / (4.0 * (1.0 + q * q)),
            2 => (1.0 + 7.0 * q * q) / (4.0 * (1.0 - q + 2.0 * q * q)),
            _ => unreachable!(),
        }
    }

    pub fn deph_beta(n: usize, q: f64) -> f64 {
        let s = 1.0 + q * q;
        match n {
            0 => 2.0 * s.sqrt(),
            1 => (6.0 * q * q + 2.0) / s.powf(1.5),
            2 => 2.0 * (1.0 + 6.0 * q * q + q.powi(4)) / ((1.0 + 3.0 * q * q) * s.sqrt()),
            _ => unreachable!(),
        }
    }

    pub fn depo_beta(n: usize, q: f64) -> f64 {
        match n {
            0 => 2.0 * SQRT_2 * q,
            1 => 2.0 * SQRT_2 * q * (1.0 + q) / (1.0 + q * q),
            _ => unreachable!(),
        }
    }

    pub fn qfi(n: usize, q: f64) -> f64 {
        match n {
            0 => q * q,
            1 => 2.0 * q * q / (1.0 + q * q),
            _ => unreachable!(),
        }
    }
}

/// Bell-basis encoding written out column by column.
pub fn bell_encoding() -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let cols = [
        [h, 0.0, 0.0, h],
        [h, 0.0, 0.0, -h],
        [0.0, h, h, 0.0],
        [0.0, h, -h, 0.0],
    ];
    ComplexMatrix::from_fn(4, |i, j| C64::new(cols[j][i], 0.0))
}

pub fn random_vector(rng: &mut impl Rng, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Random full-rank (or low-rank when `rank < dim`) density matrix.
pub fn random_density(rng: &mut impl Rng, num_qubits: usize, rank: usize) -> DensityMatrix {
    let dim = 1 << num_qubits;
    let mut m = ComplexMatrix::zeros(dim);
    for _ in 0..rank {
        let v = random_vector(rng, dim);
        let w: f64 = rng.gen_range(0.05..1.0);
        m.add_scaled(&ComplexMatrix::outer(&v, &v), w);
    }
    let t = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / t).hermitized()).unwrap()
}

/// Haar-ish random unitary from Gram-Schmidt on a random complex matrix.
pub fn random_unitary(rng: &mut impl Rng, dim: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::new();
    while cols.len() < dim {
        let mut v = random_vector(rng, dim);
        for c in &cols {
            let proj: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(c) {
                *x -= proj * y;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-6 {
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    ComplexMatrix::from_fn(dim, |i, j| cols[j][i])
}

fn mat2(axis: Axis, angle: f64) -> [C64; 4] {
    let r = rotation(axis, angle);
    [r[(0, 0)], r[(0, 1)], r[(1, 0)], r[(1, 1)]]
}

fn gray(j: usize) -> usize {
    j ^ (j >> 1)
}

/// Multiplexed rotation rebuilt from plain rotations and CNOTs: rotation
/// angles are the Walsh transform of the block angles in Gray-code order,
/// and each CNOT toggles the control whose Gray bit changes next.
pub fn multiplexor_ladder(
    axis: Axis,
    angles: &[f64],
    total_qubits: usize,
    target: usize,
    controls: &[usize],
) -> ComplexMatrix {
    let k = controls.len();
    let size = 1usize << k;
    assert_eq!(angles.len(), size);
    let mut c = Circuit::new(total_qubits);
    for j in 0..size {
        let g = gray(j);
        let theta: f64 = (0..size)
            .map(|i| {
                let sign = if (i & g).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
                sign * angles[i]
            })
            .sum::<f64>()
            / size as f64;
        c.push(Gate::Single {
            qubit: target,
            m: mat2(axis, theta),
        });
        if k > 0 {
            let flip = g ^ gray((j + 1) % size);
            let bit = flip.trailing_zeros() as usize;
            c.push(Gate::Cnot {
                control: controls[k - 1 - bit],
                target,
            });
        }
    }
    c.matrix()
}

/// Levenberg-Marquardt fit of `build(p)` to `target` up to a global phase.
/// Returns the best parameters and their phase distance.
pub fn fit_unitary(
    build: &dyn Fn(&[f64]) -> ComplexMatrix,
    target: &ComplexMatrix,
    dim_params: usize,
    seed: u64,
    attempts: usize,
    tol: f64,
) -> (Vec<f64>, f64) {
    let residual = |p: &[f64]| -> DVector<f64> {
        let u = build(p);
        let overlap: C64 = (0..u.dim())
            .flat_map(|i| (0..u.dim()).map(move |j| (i, j)))
            .map(|(i, j)| target[(i, j)].conj() * u[(i, j)])
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap.conj() / overlap.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let d = u.dim();
        DVector::from_iterator(
            2 * d * d,
            (0..d * d).flat_map(|k| {
                let z = u.as_slice()[k] * phase - target.as_slice()[k];
                [z.re, z.im]
            }),
        )
    };
    let mut r = rng(seed);
    let mut best = (Vec::new(), f64::INFINITY);
    for _ in 0..attempts {
        let mut p: Vec<f64> = (0..dim_params)
            .map(|_| r.gen_range(0.0..std::f64::consts::TAU))
            .collect();
        let mut res = residual(&p);
        let mut cost = res.norm_squared();
        let mut lambda = 1e-3;
        for _ in 0..400 {
            let h = 1e-7;
            let mut jac = DMatrix::<f64>::zeros(res.len(), dim_params);
            let mut x = p.clone();
            for i in 0..dim_params {
                x[i] = p[i] + h;
                let up = residual(&x);
                x[i] = p[i] - h;
                let down = residual(&x);
                x[i] = p[i];
                jac.set_column(i, &((up - down) / (2.0 * h)));
            }
            let jt = jac.transpose();
            let jtj = &jt * &jac;
            let g = &jt * &res;
            let mut improved = false;
            for _ in 0..10 {
                let mut a = jtj.clone();
                for i in 0..dim_params {
                    a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
                }
                let Some(step) = a.lu().solve(&(-&g)) else {
                    lambda *= 10.0;
                    continue;
                };
                let cand: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                let cres = residual(&cand);
                let ccost = cres.norm_squared();
                if ccost < cost {
                    p = cand;
                    res = cres;
                    cost = ccost;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    break;
                }
                lambda *= 10.0;
            }
            if !improved || cost < 1e-26 {
                break;
            }
        }
        let dist = build(&p).phase_distance(target);
        if dist < best.1 {
            best = (p, dist);
        }
        if best.1 < tol {
            break;
        }
    }
    best
}
