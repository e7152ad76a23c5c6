//! Frame-to-frame ego-motion from stereo reprojection errors.
//!
//! Landmarks triangulated in the previous frame are moved by `R(r) X + t` and
//! projected into both current cameras. The summed squared pixel error is
//! minimised with undamped Gauss-Newton inside a RANSAC loop.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{PipelineConfig, StereoCalib};
use crate::error::{Error, Result};
use crate::geometry::{project, Landmark, Side};
use crate::pose::{rot_x, rot_y, rot_z, MotionParams};

/// A previous-frame landmark and where it was seen in the current frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub landmark: Landmark,
    pub x_l: [f64; 2],
    pub x_r: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct MotionEstimate {
    pub params: MotionParams,
    /// Sorted indices into the observations.
    pub inlier_indices: Vec<usize>,
    /// Squared pixel error summed over the inliers.
    pub final_cost: f64,
    /// Inlier count of every RANSAC trial that converged.
    pub trial_inlier_counts: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussNewtonResult {
    pub params: MotionParams,
    pub cost: f64,
    pub iterations: usize,
}

/// Relative eigenvalue floor of the scaled normal matrix below which the
/// system is treated as singular.
const SINGULAR_RCOND: f64 = 1e-10;

fn predict(m: &MotionParams, obs: &Observation, calib: &StereoCalib) -> Result<[f64; 4]> {
    let l = project(&obs.landmark, m, calib, Side::Left)?;
    let r = project(&obs.landmark, m, calib, Side::Right)?;
    Ok([l[0], l[1], r[0], r[1]])
}

fn residual4(m: &MotionParams, obs: &Observation, calib: &StereoCalib) -> Result<[f64; 4]> {
    let p = predict(m, obs, calib)?;
    Ok([obs.x_l[0] - p[0], obs.x_l[1] - p[1], obs.x_r[0] - p[2], obs.x_r[1] - p[3]])
}

/// Residual vector `[u_l, v_l, u_r, v_r]` per observation: observed minus
/// predicted pixel.
pub fn residuals(m: &MotionParams, obs: &[Observation], calib: &StereoCalib) -> Result<DVector<f64>> {
    let mut out = DVector::zeros(4 * obs.len());
    for (i, o) in obs.iter().enumerate() {
        let r = residual4(m, o, calib)?;
        out.rows_mut(4 * i, 4).copy_from_slice(&r);
    }
    Ok(out)
}

/// Sum of squared reprojection errors.
pub fn cost(m: &MotionParams, obs: &[Observation], calib: &StereoCalib) -> Result<f64> {
    obs.iter().try_fold(0.0, |acc, o| {
        let r = residual4(m, o, calib)?;
        Ok(acc + r.iter().map(|v| v * v).sum::<f64>())
    })
}

fn drot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(0.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s)
}

fn drot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, 0.0, c, 0.0, 0.0, 0.0, -c, 0.0, -s)
}

fn drot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(-s, -c, 0.0, c, -s, 0.0, 0.0, 0.0, 0.0)
}

/// Rotation and its three partial derivatives with respect to `rx, ry, rz`.
struct RotationDerivs {
    r: Matrix3<f64>,
    d: [Matrix3<f64>; 3],
}

impl RotationDerivs {
    fn new(m: &MotionParams) -> Self {
        let (rx, ry, rz) = (rot_x(m.r[0]), rot_y(m.r[1]), rot_z(m.r[2]));
        RotationDerivs {
            r: rx * ry * rz,
            d: [
                drot_x(m.r[0]) * ry * rz,
                rx * drot_y(m.r[1]) * rz,
                rx * ry * drot_z(m.r[2]),
            ],
        }
    }
}

/// Residuals and their 4x6 Jacobian for one observation.
fn linearize(
    m: &MotionParams,
    rd: &RotationDerivs,
    o: &Observation,
    calib: &StereoCalib,
) -> Result<([f64; 4], [[f64; 6]; 4])> {
    let x = o.landmark.0;
    let p = rd.r * x + m.translation();
    if !(p.z > 0.0) {
        return Err(Error::BehindCamera { depth: p.z });
    }
    let (f, b) = (calib.f, calib.baseline);
    let iz = 1.0 / p.z;
    let iz2 = iz * iz;
    let pred = [
        f * p.x * iz + calib.cu,
        f * p.y * iz + calib.cv,
        f * (p.x - b) * iz + calib.cu,
        f * p.y * iz + calib.cv,
    ];
    let res = [
        o.x_l[0] - pred[0],
        o.x_l[1] - pred[1],
        o.x_r[0] - pred[2],
        o.x_r[1] - pred[3],
    ];
    // d(prediction)/d(p) rows
    let dp = [
        Vector3::new(f * iz, 0.0, -f * p.x * iz2),
        Vector3::new(0.0, f * iz, -f * p.y * iz2),
        Vector3::new(f * iz, 0.0, -f * (p.x - b) * iz2),
        Vector3::new(0.0, f * iz, -f * p.y * iz2),
    ];
    let dpdr = [rd.d[0] * x, rd.d[1] * x, rd.d[2] * x];
    let mut jac = [[0.0; 6]; 4];
    for (row, g) in dp.iter().enumerate() {
        for k in 0..3 {
            jac[row][k] = -g.dot(&dpdr[k]);
            // dp/dt is the identity
            jac[row][3 + k] = -g[k];
        }
    }
    Ok((res, jac))
}

/// Analytic `(4N) x 6` Jacobian of [`residuals`] with respect to
/// `(rx, ry, rz, tx, ty, tz)`.
pub fn jacobian(m: &MotionParams, obs: &[Observation], calib: &StereoCalib) -> Result<DMatrix<f64>> {
    let rd = RotationDerivs::new(m);
    let mut out = DMatrix::zeros(4 * obs.len(), 6);
    for (i, o) in obs.iter().enumerate() {
        let (_, jac) = linearize(m, &rd, o, calib)?;
        for (row, vals) in jac.iter().enumerate() {
            for (col, v) in vals.iter().enumerate() {
                out[(4 * i + row, col)] = *v;
            }
        }
    }
    Ok(out)
}

fn normal_equations(
    m: &MotionParams,
    obs: &[Observation],
    calib: &StereoCalib,
) -> Result<(Matrix6<f64>, Vector6<f64>, f64)> {
    let rd = RotationDerivs::new(m);
    let mut h = Matrix6::zeros();
    let mut g = Vector6::zeros();
    let mut cost = 0.0;
    for o in obs {
        let (res, jac) = linearize(m, &rd, o, calib)?;
        for (r, row) in res.iter().zip(jac.iter()) {
            let j = Vector6::from_row_slice(row);
            h += j * j.transpose();
            g += j * *r;
            cost += r * r;
        }
    }
    Ok((h, g, cost))
}

fn solve_normal(h: &Matrix6<f64>, g: &Vector6<f64>) -> Result<Vector6<f64>> {
    // judge conditioning on the Jacobi-scaled system so unit choices do not matter
    let diag = h.diagonal();
    if diag.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::SingularSystem);
    }
    let scale = diag.map(|d| 1.0 / d.sqrt());
    let scaled = Matrix6::from_fn(|i, j| h[(i, j)] * scale[i] * scale[j]);
    let eig = SymmetricEigen::new(scaled);
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if !(min > max * SINGULAR_RCOND) {
        return Err(Error::SingularSystem);
    }
    let rhs = g.component_mul(&scale);
    let chol = scaled.cholesky().ok_or(Error::SingularSystem)?;
    Ok(-chol.solve(&rhs).component_mul(&scale))
}

/// Undamped Gauss-Newton from `init`. Stops when the step norm drops below
/// `step_tol` or after `max_iters` steps, and returns the lowest-cost
/// parameters visited.
///
/// Fails on singular normal equations, on two consecutive cost increases,
/// or when a landmark falls behind the camera.
pub fn gauss_newton(
    init: MotionParams,
    obs: &[Observation],
    calib: &StereoCalib,
    max_iters: usize,
    step_tol: f64,
) -> Result<GaussNewtonResult> {
    if obs.len() < 3 {
        return Err(Error::EstimationFailed(format!(
            "gauss-newton needs at least 3 observations, got {}",
            obs.len()
        )));
    }
    let mut params = init;
    let (mut h, mut g, mut current) = normal_equations(&params, obs, calib)?;
    let mut best = GaussNewtonResult {
        params,
        cost: current,
        iterations: 0,
    };
    let mut increases = 0;
    for iter in 1..=max_iters {
        let delta = solve_normal(&h, &g)?;
        let mut v = params.to_vector();
        for (p, d) in v.iter_mut().zip(delta.iter()) {
            *p += d;
        }
        params = MotionParams::from_vector(&v);
        if !params.is_finite() {
            return Err(Error::Diverged);
        }
        let next = match normal_equations(&params, obs, calib) {
            Ok(n) => n,
            Err(Error::BehindCamera { .. }) => return Err(Error::Diverged),
            Err(e) => return Err(e),
        };
        (h, g) = (next.0, next.1);
        let new_cost = next.2;
        // round-off near the optimum is not divergence
        if new_cost > current * (1.0 + 1e-12) + 1e-18 {
            increases += 1;
            if increases >= 2 {
                return Err(Error::Diverged);
            }
        } else {
            increases = 0;
        }
        current = new_cost;
        if current <= best.cost {
            best = GaussNewtonResult {
                params,
                cost: current,
                iterations: iter,
            };
        }
        if delta.norm() < step_tol {
            break;
        }
    }
    Ok(best)
}

/// Indices whose summed squared left and right reprojection error is strictly
/// below `threshold`. Points behind the camera are outliers.
pub fn classify_inliers(m: &MotionParams, obs: &[Observation], calib: &StereoCalib, threshold: f64) -> Vec<usize> {
    obs.iter()
        .enumerate()
        .filter_map(|(i, o)| {
            let r = residual4(m, o, calib).ok()?;
            let err = r.iter().map(|v| v * v).sum::<f64>();
            (err < threshold).then_some(i)
        })
        .collect()
}

/// Sample index sets for every RANSAC trial, drawn up front from the seeded
/// stream.
pub fn draw_samples(n: usize, sample_size: usize, iterations: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..iterations)
        .map(|_| {
            let mut s = index::sample(&mut rng, n, sample_size).into_vec();
            s.sort_unstable();
            s
        })
        .collect()
}

fn subset(obs: &[Observation], idx: &[usize]) -> Vec<Observation> {
    idx.iter().map(|&i| obs[i]).collect()
}

struct Trial {
    params: MotionParams,
    inliers: Vec<usize>,
    inlier_cost: f64,
}

fn better(a: &Trial, b: &Trial) -> bool {
    a.inliers.len() > b.inliers.len()
        || (a.inliers.len() == b.inliers.len() && a.inlier_cost < b.inlier_cost)
}

/// RANSAC over minimal samples, each solved by Gauss-Newton from zero
/// motion, followed by a refinement on the best inlier set.
pub fn ransac_estimate(obs: &[Observation], calib: &StereoCalib, cfg: &PipelineConfig) -> Result<MotionEstimate> {
    let k = cfg.ransac_sample_size;
    if obs.len() < k {
        return Err(Error::EstimationFailed(format!(
            "{} observations, need at least {k}",
            obs.len()
        )));
    }
    let samples = draw_samples(obs.len(), k, cfg.ransac_iterations, cfg.seed);
    let trials: Vec<Option<Trial>> = samples
        .par_iter()
        .map(|sample| {
            let fit = gauss_newton(
                MotionParams::ZERO,
                &subset(obs, sample),
                calib,
                cfg.gn_max_iters,
                cfg.gn_step_tol,
            )
            .ok()?;
            let inliers = classify_inliers(&fit.params, obs, calib, cfg.inlier_threshold);
            let inlier_cost = cost(&fit.params, &subset(obs, &inliers), calib).ok()?;
            Some(Trial {
                params: fit.params,
                inliers,
                inlier_cost,
            })
        })
        .collect();

    let trial_inlier_counts: Vec<usize> = trials.iter().flatten().map(|t| t.inliers.len()).collect();
    let mut best: Option<Trial> = None;
    for t in trials.into_iter().flatten() {
        if best.as_ref().map_or(true, |b| better(&t, b)) {
            best = Some(t);
        }
    }
    let best = best.ok_or_else(|| Error::EstimationFailed("no RANSAC trial converged".into()))?;

    let refined = gauss_newton(
        best.params,
        &subset(obs, &best.inliers),
        calib,
        cfg.gn_max_iters,
        cfg.gn_step_tol,
    )
    .ok()
    .and_then(|fit| {
        let inliers = classify_inliers(&fit.params, obs, calib, cfg.inlier_threshold);
        let inlier_cost = cost(&fit.params, &subset(obs, &inliers), calib).ok()?;
        Some(Trial {
            params: fit.params,
            inliers,
            inlier_cost,
        })
    });
    // never trade inliers away in the refinement
    let chosen = match refined {
        Some(r) if r.inliers.len() >= best.inliers.len() => r,
        _ => best,
    };
    Ok(MotionEstimate {
        params: chosen.params,
        inlier_indices: chosen.inliers,
        final_cost: chosen.inlier_cost,
        trial_inlier_counts,
    })
}
