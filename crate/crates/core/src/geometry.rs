//! Legendre regularizers, Bregman divergences and mirror maps.
//!
//! Everything here is a pure function of its inputs. The simplex-constrained
//! mirror map is solved by a safeguarded Newton iteration on the normalization
//! multiplier; the unconstrained maps have closed forms except for the ball
//! barrier, which needs a scalar Newton solve on the radius.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the simplex normalization residual |sum x_i - 1|.
pub const SIMPLEX_TOL: f64 = 1e-12;
const MAX_ROOT_ITERS: usize = 200;
const BALL_NEWTON_TOL: f64 = 1e-12;
const BALL_NEWTON_ITERS: usize = 100;
/// Coordinates are clamped here before renormalizing if they underflow.
const UNDERFLOW_CLAMP: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("point outside the regularizer domain: {0}")]
    Domain(String),
    #[error("mirror map root-find did not converge after {0} iterations")]
    Convergence(usize),
}

/// A Legendre regularizer together with its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regularizer {
    /// 1/2-Tsallis entropy on the nonnegative orthant: psi(x) = -2 sum sqrt(x_i).
    TsallisHalf(usize),
    /// Log-barrier restricted to the simplex: psi(x) = -sum ln x_i.
    LogBarrierSimplex(usize),
    /// Negative entropy psi(x) = sum x_i ln x_i (EXP3 baseline).
    NegEntropy(usize),
    /// Barrier on (-1,1)^n: psi(x) = -sum [ln(1-x_i) + ln(1+x_i)].
    HypercubeBarrier(usize),
    /// Barrier on the open unit ball: psi(x) = -ln(1 - |x|^2).
    BallBarrier(usize),
}

impl Regularizer {
    pub fn dimension(&self) -> usize {
        match *self {
            Regularizer::TsallisHalf(k)
            | Regularizer::LogBarrierSimplex(k)
            | Regularizer::NegEntropy(k)
            | Regularizer::HypercubeBarrier(k)
            | Regularizer::BallBarrier(k) => k,
        }
    }

    pub fn is_simplex(&self) -> bool {
        matches!(
            self,
            Regularizer::TsallisHalf(_)
                | Regularizer::LogBarrierSimplex(_)
                | Regularizer::NegEntropy(_)
        )
    }

    /// Self-concordance parameter of the barrier variants.
    pub fn self_concordance(&self) -> Option<f64> {
        match *self {
            Regularizer::HypercubeBarrier(n) => Some(2.0 * n as f64),
            Regularizer::BallBarrier(_) => Some(1.0),
            _ => None,
        }
    }
}

/// A probability vector over K arms. Entries sum to one and are strictly
/// positive after any mirror-simplex operation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(probs: Vec<f64>) -> Result<Self, GeometryError> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(GeometryError::Domain("negative probability".into()));
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(GeometryError::Domain(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(SimplexPoint(probs))
    }

    pub fn uniform(k: usize) -> Self {
        SimplexPoint(vec![1.0 / k as f64; k])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A point in gradient space.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPoint(pub Vec<f64>);

impl DualPoint {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

fn check_dim(reg: Regularizer, x: &[f64]) -> Result<(), GeometryError> {
    if x.len() != reg.dimension() {
        return Err(GeometryError::Domain(format!(
            "dimension mismatch: point has {}, regularizer expects {}",
            x.len(),
            reg.dimension()
        )));
    }
    Ok(())
}

fn check_interior(reg: Regularizer, x: &[f64]) -> Result<(), GeometryError> {
    check_dim(reg, x)?;
    match reg {
        Regularizer::TsallisHalf(_)
        | Regularizer::LogBarrierSimplex(_)
        | Regularizer::NegEntropy(_) => {
            if x.iter().any(|&v| v <= 0.0) {
                return Err(GeometryError::Domain("coordinate not strictly positive".into()));
            }
        }
        Regularizer::HypercubeBarrier(_) => {
            if x.iter().any(|&v| v.abs() >= 1.0) {
                return Err(GeometryError::Domain("coordinate outside (-1,1)".into()));
            }
        }
        Regularizer::BallBarrier(_) => {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            if r2 >= 1.0 {
                return Err(GeometryError::Domain("point outside the open unit ball".into()));
            }
        }
    }
    Ok(())
}

/// psi(x) for a point strictly inside the domain (domain closure for the
/// Tsallis and negative-entropy values, which stay finite at the boundary).
pub fn psi_value(reg: Regularizer, x: &[f64]) -> Result<f64, GeometryError> {
    check_dim(reg, x)?;
    match reg {
        Regularizer::TsallisHalf(_) => {
            if x.iter().any(|&v| v < 0.0) {
                return Err(GeometryError::Domain("negative coordinate".into()));
            }
            Ok(-2.0 * x.iter().map(|v| v.sqrt()).sum::<f64>())
        }
        Regularizer::NegEntropy(_) => {
            if x.iter().any(|&v| v < 0.0) {
                return Err(GeometryError::Domain("negative coordinate".into()));
            }
            Ok(x.iter().map(|&v| if v == 0.0 { 0.0 } else { v * v.ln() }).sum())
        }
        Regularizer::LogBarrierSimplex(_) => {
            check_interior(reg, x)?;
            Ok(-x.iter().map(|v| v.ln()).sum::<f64>())
        }
        Regularizer::HypercubeBarrier(_) => {
            check_interior(reg, x)?;
            Ok(-x.iter().map(|v| (1.0 - v).ln() + (1.0 + v).ln()).sum::<f64>())
        }
        Regularizer::BallBarrier(_) => {
            check_interior(reg, x)?;
            let r2: f64 = x.iter().map(|v| v * v).sum();
            Ok(-(1.0 - r2).ln())
        }
    }
}

/// grad psi(x) at a strictly interior point.
pub fn psi_grad(reg: Regularizer, x: &[f64]) -> Result<DualPoint, GeometryError> {
    check_interior(reg, x)?;
    let g = match reg {
        Regularizer::TsallisHalf(_) => x.iter().map(|v| -1.0 / v.sqrt()).collect(),
        Regularizer::LogBarrierSimplex(_) => x.iter().map(|v| -1.0 / v).collect(),
        Regularizer::NegEntropy(_) => x.iter().map(|v| 1.0 + v.ln()).collect(),
        Regularizer::HypercubeBarrier(_) => {
            x.iter().map(|v| 2.0 * v / (1.0 - v * v)).collect()
        }
        Regularizer::BallBarrier(_) => {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            x.iter().map(|v| 2.0 * v / (1.0 - r2)).collect()
        }
    };
    Ok(DualPoint(g))
}

/// Bregman divergence D_psi(y, x) = psi(y) - psi(x) - <grad psi(x), y - x>.
pub fn bregman(reg: Regularizer, y: &[f64], x: &[f64]) -> Result<f64, GeometryError> {
    let g = psi_grad(reg, x)?;
    let py = psi_value(reg, y)?;
    let px = psi_value(reg, x)?;
    let inner: f64 = g
        .coords()
        .iter()
        .zip(y.iter().zip(x.iter()))
        .map(|(gi, (yi, xi))| gi * (yi - xi))
        .sum();
    Ok(py - px - inner)
}

fn check_dual_domain(reg: Regularizer, theta: &[f64]) -> Result<(), GeometryError> {
    check_dim(reg, theta)?;
    match reg {
        Regularizer::TsallisHalf(_) | Regularizer::LogBarrierSimplex(_) => {
            if theta.iter().any(|&t| t >= 0.0) {
                return Err(GeometryError::Domain(
                    "dual coordinate not strictly negative".into(),
                ));
            }
        }
        _ => {}
    }
    Ok(())
}

/// grad psi*(theta), the inverse of grad psi.
pub fn mirror_unconstrained(reg: Regularizer, theta: &DualPoint) -> Result<Vec<f64>, GeometryError> {
    let th = theta.coords();
    check_dual_domain(reg, th)?;
    match reg {
        Regularizer::TsallisHalf(_) => Ok(th.iter().map(|t| 1.0 / (t * t)).collect()),
        Regularizer::LogBarrierSimplex(_) => Ok(th.iter().map(|t| -1.0 / t).collect()),
        Regularizer::NegEntropy(_) => Ok(th.iter().map(|t| (t - 1.0).exp()).collect()),
        Regularizer::HypercubeBarrier(_) => Ok(th
            .iter()
            .map(|&t| {
                if t == 0.0 {
                    0.0
                } else {
                    // root of t x^2 + 2x - t = 0 inside (-1,1)
                    (-1.0 + (1.0 + t * t).sqrt()) / t
                }
            })
            .collect()),
        Regularizer::BallBarrier(_) => {
            let s = th.iter().map(|t| t * t).sum::<f64>().sqrt();
            if s == 0.0 {
                return Ok(vec![0.0; th.len()]);
            }
            // solve 2r/(1-r^2) = s for r in (0,1); closed-form start, Newton polish
            let mut r = (-1.0 + (1.0 + s * s).sqrt()) / s;
            for _ in 0..BALL_NEWTON_ITERS {
                let f = 2.0 * r / (1.0 - r * r) - s;
                if f.abs() <= BALL_NEWTON_TOL {
                    break;
                }
                let fp = (2.0 + 2.0 * r * r) / (1.0 - r * r).powi(2);
                r -= f / fp;
                r = r.clamp(0.0, 1.0 - 1e-16);
            }
            Ok(th.iter().map(|t| t * r / s).collect())
        }
    }
}

/// Normalization residual sum_i x_i(lambda) - 1 and its derivative in lambda.
fn simplex_residual(reg: Regularizer, theta: &[f64], lambda: f64) -> (f64, f64) {
    let mut s = 0.0;
    let mut ds = 0.0;
    match reg {
        Regularizer::TsallisHalf(_) => {
            for &t in theta {
                let d = lambda - t;
                s += 1.0 / (d * d);
                ds += -2.0 / (d * d * d);
            }
        }
        Regularizer::LogBarrierSimplex(_) => {
            for &t in theta {
                let d = lambda - t;
                s += 1.0 / d;
                ds += -1.0 / (d * d);
            }
        }
        _ => unreachable!("residual only defined for root-found simplex maps"),
    }
    (s - 1.0, ds)
}

/// Constrained mirror map onto the simplex: argmin_x <-theta, x> + psi(x).
pub fn mirror_simplex(reg: Regularizer, theta: &DualPoint) -> Result<SimplexPoint, GeometryError> {
    let th = theta.coords();
    check_dim(reg, th)?;
    if !reg.is_simplex() {
        return Err(GeometryError::Domain(
            "mirror_simplex requires a simplex regularizer".into(),
        ));
    }
    let k = th.len();
    if let Regularizer::NegEntropy(_) = reg {
        // closed-form softmax
        let m = th.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = th.iter().map(|t| (t - m).exp()).collect();
        let sum: f64 = exps.iter().sum();
        return Ok(SimplexPoint(exps.iter().map(|e| e / sum).collect()));
    }

    let max_t = th.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // upper bracket: residual <= 0 there by construction
    let mut hi = match reg {
        Regularizer::TsallisHalf(_) => max_t + (k as f64).sqrt(),
        Regularizer::LogBarrierSimplex(_) => max_t + k as f64,
        _ => unreachable!(),
    };
    // lower bracket: walk toward max_t until the residual turns positive
    let mut gap = hi - max_t;
    let mut lo = hi;
    for _ in 0..MAX_ROOT_ITERS {
        gap *= 0.5;
        lo = max_t + gap;
        if simplex_residual(reg, th, lo).0 > 0.0 {
            break;
        }
        hi = lo;
    }
    if simplex_residual(reg, th, lo).0 <= 0.0 {
        return Err(GeometryError::Convergence(MAX_ROOT_ITERS));
    }

    let mut lambda = hi;
    let mut converged = false;
    for _ in 0..MAX_ROOT_ITERS {
        let (f, df) = simplex_residual(reg, th, lambda);
        if f.abs() <= SIMPLEX_TOL {
            converged = true;
            break;
        }
        // the residual is strictly decreasing in lambda
        if f > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let newton = lambda - f / df;
        lambda = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    if !converged && simplex_residual(reg, th, lambda).0.abs() > 1e-9 {
        return Err(GeometryError::Convergence(MAX_ROOT_ITERS));
    }

    let mut x: Vec<f64> = match reg {
        Regularizer::TsallisHalf(_) => th
            .iter()
            .map(|&t| {
                let d = lambda - t;
                1.0 / (d * d)
            })
            .collect(),
        Regularizer::LogBarrierSimplex(_) => th.iter().map(|&t| 1.0 / (lambda - t)).collect(),
        _ => unreachable!(),
    };
    let mut clamped = false;
    for v in x.iter_mut() {
        if *v < UNDERFLOW_CLAMP {
            *v = UNDERFLOW_CLAMP;
            clamped = true;
        }
    }
    if clamped {
        eprintln!("warning: mirror_simplex output underflowed and was clamped");
        let s: f64 = x.iter().sum();
        for v in x.iter_mut() {
            *v /= s;
        }
    }
    Ok(SimplexPoint(x))
}

/// One OMD step: z is the simplex-constrained image and ztilde the
/// unconstrained one, both at dual argument grad psi(x) - lhat / sigma.
pub fn omd_step(
    reg: Regularizer,
    x: &SimplexPoint,
    lhat: &[f64],
    sigma: f64,
) -> Result<(SimplexPoint, Vec<f64>), GeometryError> {
    if sigma <= 0.0 {
        return Err(GeometryError::Domain("sigma must be positive".into()));
    }
    if matches!(reg, Regularizer::TsallisHalf(_)) && lhat.iter().any(|&l| l < 0.0) {
        return Err(GeometryError::Domain(
            "Tsallis step requires a nonnegative loss estimator".into(),
        ));
    }
    let g = psi_grad(reg, x.probs())?;
    let arg: Vec<f64> = g
        .coords()
        .iter()
        .zip(lhat.iter())
        .map(|(gi, li)| gi - li / sigma)
        .collect();
    let theta = DualPoint(arg);
    check_dual_domain(reg, theta.coords())?;
    let ztilde = mirror_unconstrained(reg, &theta)?;
    let z = mirror_simplex(reg, &theta)?;
    Ok((z, ztilde))
}

/// Eigenvalues and eigenvectors of the barrier Hessian at an interior point.
/// Hypercube Hessians are diagonal; the ball Hessian is a scalar matrix plus
/// a rank-one term aligned with x.
pub fn barrier_hessian_eigensystem(
    reg: Regularizer,
    x: &[f64],
) -> Result<(Vec<f64>, Vec<Vec<f64>>), GeometryError> {
    check_interior(reg, x)?;
    let n = x.len();
    match reg {
        Regularizer::HypercubeBarrier(_) => {
            let eigenvalues: Vec<f64> = x
                .iter()
                .map(|&v| (2.0 + 2.0 * v * v) / (1.0 - v * v).powi(2))
                .collect();
            let eigenvectors = (0..n)
                .map(|i| {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    e
                })
                .collect();
            Ok((eigenvalues, eigenvectors))
        }
        Regularizer::BallBarrier(_) => {
            let r2: f64 = x.iter().map(|v| v * v).sum();
            let base = 2.0 / (1.0 - r2);
            if r2 == 0.0 {
                let eigenvalues = vec![base; n];
                let eigenvectors = (0..n)
                    .map(|i| {
                        let mut e = vec![0.0; n];
                        e[i] = 1.0;
                        e
                    })
                    .collect();
                return Ok((eigenvalues, eigenvectors));
            }
            let r = r2.sqrt();
            let radial: Vec<f64> = x.iter().map(|v| v / r).collect();
            // Householder reflection mapping e_1 to the radial direction gives
            // an orthonormal basis whose first column is radial.
            let mut w = radial.clone();
            w[0] -= 1.0;
            let wn2: f64 = w.iter().map(|v| v * v).sum();
            let mut eigenvectors = Vec::with_capacity(n);
            eigenvectors.push(radial.clone());
            for j in 1..n {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                if wn2 > 0.0 {
                    let c = 2.0 * w[j] / wn2;
                    for (ei, wi) in e.iter_mut().zip(w.iter()) {
                        *ei -= c * wi;
                    }
                }
                eigenvectors.push(e);
            }
            let mut eigenvalues = vec![base; n];
            eigenvalues[0] = base + 4.0 * r2 / (1.0 - r2).powi(2);
            Ok((eigenvalues, eigenvectors))
        }
        _ => Err(GeometryError::Domain(
            "eigensystem is only defined for barrier regularizers".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn psi_values_match_definitions() {
        let x = vec![0.25; 4];
        assert_close(psi_value(Regularizer::TsallisHalf(4), &x).unwrap(), -4.0, 1e-12);
        let x2 = vec![0.5, 0.5];
        assert_close(
            psi_value(Regularizer::LogBarrierSimplex(2), &x2).unwrap(),
            2.0 * 2.0_f64.ln(),
            1e-12,
        );
        assert_close(
            psi_value(Regularizer::HypercubeBarrier(3), &[0.0, 0.0, 0.0]).unwrap(),
            0.0,
            1e-15,
        );
    }

    #[test]
    fn psi_value_rejects_boundary() {
        assert!(matches!(
            psi_value(Regularizer::LogBarrierSimplex(2), &[0.0, 1.0]),
            Err(GeometryError::Domain(_))
        ));
        assert!(matches!(
            psi_value(Regularizer::HypercubeBarrier(1), &[1.0]),
            Err(GeometryError::Domain(_))
        ));
    }

    #[test]
    fn bregman_examples() {
        let reg = Regularizer::TsallisHalf(4);
        let u = vec![0.25; 4];
        assert_close(bregman(reg, &u, &u).unwrap(), 0.0, 1e-12);
        let one_hot = vec![1.0, 0.0, 0.0, 0.0];
        assert_close(bregman(reg, &one_hot, &u).unwrap(), 2.0, 1e-12);
    }

    #[test]
    fn bregman_one_hot_sup_bound() {
        // sup over one-hot y of D(y, uniform) <= 2 sqrt(K)
        for k in [2usize, 5, 16] {
            let reg = Regularizer::TsallisHalf(k);
            let u = vec![1.0 / k as f64; k];
            for i in 0..k {
                let mut y = vec![0.0; k];
                y[i] = 1.0;
                let d = bregman(reg, &y, &u).unwrap();
                assert!(d <= 2.0 * (k as f64).sqrt() + 1e-12);
            }
        }
    }

    #[test]
    fn mirror_unconstrained_closed_forms() {
        let x = mirror_unconstrained(Regularizer::TsallisHalf(3), &DualPoint(vec![-2.0; 3]))
            .unwrap();
        for v in &x {
            assert_close(*v, 0.25, 1e-15);
        }
        let h = mirror_unconstrained(Regularizer::HypercubeBarrier(1), &DualPoint(vec![0.0]))
            .unwrap();
        assert_close(h[0], 0.0, 1e-15);
    }

    #[test]
    fn mirror_round_trips() {
        let cases = [
            (Regularizer::TsallisHalf(4), vec![0.1, 0.2, 0.3, 0.4]),
            (Regularizer::LogBarrierSimplex(3), vec![0.2, 0.3, 0.5]),
            (Regularizer::NegEntropy(3), vec![0.2, 0.3, 0.5]),
            (Regularizer::HypercubeBarrier(3), vec![-0.9, 0.0, 0.73]),
            (Regularizer::BallBarrier(3), vec![0.1, -0.5, 0.3]),
        ];
        for (reg, x) in cases {
            let g = psi_grad(reg, &x).unwrap();
            let back = mirror_unconstrained(reg, &g).unwrap();
            for (a, b) in x.iter().zip(back.iter()) {
                assert_close(*a, *b, 1e-10);
            }
            if reg.is_simplex() {
                let back = mirror_simplex(reg, &g).unwrap();
                for (a, b) in x.iter().zip(back.probs().iter()) {
                    assert_close(*a, *b, 1e-9);
                }
            }
        }
    }

    #[test]
    fn mirror_simplex_symmetry_and_oracle() {
        for c in [-3.0, -1.0, 5.0] {
            let x = mirror_simplex(Regularizer::TsallisHalf(4), &DualPoint(vec![c; 4])).unwrap();
            for v in x.probs() {
                assert_close(*v, 0.25, 1e-10);
            }
        }
        // bisection oracle on (lambda+1)^-2 + (lambda+2)^-2 = 1
        let (mut lo, mut hi) = (-0.9_f64, 10.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let f = (mid + 1.0).powi(-2) + (mid + 2.0).powi(-2) - 1.0;
            if f > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lambda = 0.5 * (lo + hi);
        let x = mirror_simplex(Regularizer::TsallisHalf(2), &DualPoint(vec![-1.0, -2.0])).unwrap();
        assert_close(x.probs()[0], (lambda + 1.0).powi(-2), 1e-6);
        assert_close(x.probs()[1], (lambda + 2.0).powi(-2), 1e-6);
        assert_close(x.probs()[0], 0.7803, 5e-4);
        assert_close(x.probs()[1], 0.2197, 5e-4);
    }

    #[test]
    fn omd_step_zero_loss_is_identity() {
        for reg in [Regularizer::TsallisHalf(3), Regularizer::LogBarrierSimplex(3)] {
            let x = SimplexPoint::new(vec![0.5, 0.3, 0.2]).unwrap();
            let (z, zt) = omd_step(reg, &x, &[0.0; 3], 2.0).unwrap();
            for i in 0..3 {
                assert_close(z.probs()[i], x.probs()[i], 1e-10);
                assert_close(zt[i], x.probs()[i], 1e-10);
            }
        }
    }

    #[test]
    fn omd_step_log_barrier_negative_loss_stays_controlled() {
        // raw loss -0.3 sigma on arm 1 keeps z_1 <= 2 x_1
        let reg = Regularizer::LogBarrierSimplex(2);
        let x = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let sigma = 4.0;
        let raw = -0.3 * sigma;
        let lhat = vec![raw / x.probs()[0], 0.0];
        let (z, zt) = omd_step(reg, &x, &lhat, sigma).unwrap();
        assert!(zt[0] <= 2.0 * x.probs()[0] + 1e-12);
        assert!(z.probs()[0] <= 2.0 * x.probs()[0] + 1e-12);
    }

    #[test]
    fn omd_step_log_barrier_domain_exit() {
        let reg = Regularizer::LogBarrierSimplex(2);
        let x = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        // raw loss below -sigma pushes the dual argument out of its domain
        let sigma = 1.0;
        let lhat = vec![-1.5 * sigma / 0.5, 0.0];
        assert!(matches!(
            omd_step(reg, &x, &lhat, sigma),
            Err(GeometryError::Domain(_))
        ));
    }

    #[test]
    fn omd_step_single_step_inequality() {
        // numerical check of <l, x - y> <= sigma D(y,x) - sigma D(y,z) + sigma D(x,ztilde)
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let reg = Regularizer::TsallisHalf(2);
        let x = SimplexPoint::new(vec![0.5, 0.5]).unwrap();
        let lhat = vec![2.0, 0.0];
        let sigma = 10.0;
        let (z, zt) = omd_step(reg, &x, &lhat, sigma).unwrap();
        for _ in 0..100 {
            let a: f64 = rng.random_range(1e-6..1.0 - 1e-6);
            let y = vec![a, 1.0 - a];
            let lhs: f64 = lhat
                .iter()
                .zip(x.probs().iter().zip(y.iter()))
                .map(|(l, (xi, yi))| l * (xi - yi))
                .sum();
            let rhs = sigma * bregman(reg, &y, x.probs()).unwrap()
                - sigma * bregman(reg, &y, z.probs()).unwrap()
                + sigma * bregman(reg, x.probs(), &zt).unwrap();
            assert!(lhs <= rhs + 1e-8, "lhs {lhs} rhs {rhs}");
        }
    }

    #[test]
    fn hessian_eigensystem_examples() {
        let (ev, evec) =
            barrier_hessian_eigensystem(Regularizer::HypercubeBarrier(3), &[0.0; 3]).unwrap();
        for (i, v) in ev.iter().enumerate() {
            assert_close(*v, 2.0, 1e-15);
            assert_close(evec[i][i], 1.0, 1e-15);
        }
        let (ev, _) =
            barrier_hessian_eigensystem(Regularizer::HypercubeBarrier(1), &[0.5]).unwrap();
        assert_close(ev[0], 40.0 / 9.0, 1e-12);
    }

    #[test]
    fn ball_eigensystem_is_orthonormal_and_matches_hessian() {
        let x = vec![0.3, -0.2, 0.4];
        let (ev, evec) = barrier_hessian_eigensystem(Regularizer::BallBarrier(3), &x).unwrap();
        let n = 3;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = evec[i].iter().zip(evec[j].iter()).map(|(a, b)| a * b).sum();
                assert_close(dot, if i == j { 1.0 } else { 0.0 }, 1e-12);
            }
        }
        // H = 2/(1-r^2) I + 4 x x^T / (1-r^2)^2; verify H e_i = ev_i e_i
        let r2: f64 = x.iter().map(|v| v * v).sum();
        for i in 0..n {
            for row in 0..n {
                let mut hv = 2.0 / (1.0 - r2) * evec[i][row];
                let xe: f64 = x.iter().zip(evec[i].iter()).map(|(a, b)| a * b).sum();
                hv += 4.0 * x[row] * xe / (1.0 - r2).powi(2);
                assert_close(hv, ev[i] * evec[i][row], 1e-10);
            }
        }
        assert!(ev.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cases = [
            (Regularizer::TsallisHalf(3), vec![0.2, 0.5, 0.3]),
            (Regularizer::LogBarrierSimplex(3), vec![0.2, 0.5, 0.3]),
            (Regularizer::NegEntropy(3), vec![0.2, 0.5, 0.3]),
            (Regularizer::HypercubeBarrier(2), vec![0.4, -0.6]),
            (Regularizer::BallBarrier(2), vec![0.4, -0.3]),
        ];
        for (reg, x) in cases {
            let g = psi_grad(reg, &x).unwrap();
            for i in 0..x.len() {
                let h = 1e-6;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let fd = (psi_value(reg, &xp).unwrap() - psi_value(reg, &xm).unwrap()) / (2.0 * h);
                let rel = (g.coords()[i] - fd).abs() / fd.abs().max(1.0);
                assert!(rel <= 1e-5, "{reg:?} coordinate {i}: {} vs {fd}", g.coords()[i]);
            }
        }
    }

    #[test]
    fn duality_of_divergences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for reg in [Regularizer::TsallisHalf(3), Regularizer::LogBarrierSimplex(3)] {
            for _ in 0..50 {
                let mut x: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
                let mut y: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
                let sx: f64 = x.iter().sum();
                let sy: f64 = y.iter().sum();
                x.iter_mut().for_each(|v| *v /= sx);
                y.iter_mut().for_each(|v| *v /= sy);
                let d = bregman(reg, &y, &x).unwrap();
                // D_psi*(grad(x), grad(y)) computed through the conjugate value
                // psi*(theta) = <theta, grad psi*(theta)> - psi(grad psi*(theta))
                let gx = psi_grad(reg, &x).unwrap();
                let gy = psi_grad(reg, &y).unwrap();
                let conj = |theta: &DualPoint| -> f64 {
                    let p = mirror_unconstrained(reg, theta).unwrap();
                    let inner: f64 = theta.coords().iter().zip(p.iter()).map(|(a, b)| a * b).sum();
                    inner - psi_value(reg, &p).unwrap()
                };
                let d_star = conj(&gx) - conj(&gy)
                    - y.iter()
                        .zip(gx.coords().iter().zip(gy.coords().iter()))
                        .map(|(yi, (a, b))| yi * (a - b))
                        .sum::<f64>();
                assert_close(d, d_star, 1e-8);
            }
        }
    }
}
