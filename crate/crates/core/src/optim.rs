//! Block coordinate ascent for the robust joint design: closed-form receive
//! filters and weights, per-AP precoders by bisection on the power
//! multiplier, element-wise phase updates, optional phase quantization.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matops::{
    complex_gaussian, fro_sq, hadamard, hermitian_part, hstack, log_det_hpd, solve_hpd, trace,
    vecd, vstack, CMatrix, CVector, ZERO,
};
use crate::rate::{
    deterministic_covariances, deterministic_rate, effective_channels, surrogate_f1,
    AuxiliaryState, BeamformerSet,
};
use crate::scenario::{ChannelEstimate, SystemConfig};

/// Knobs of the outer solver and its inner routines.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub p_max: f64,
    pub alpha: f64,
    /// 0 keeps phases continuous.
    pub phase_bits: u32,
    /// Stop once the deterministic-equivalent rate moves less than this (nats).
    pub eps: f64,
    pub max_iters: usize,
    pub aso_eps: f64,
    pub aso_max_sweeps: usize,
    pub w_max_sweeps: usize,
    /// Bisection stops once the bracket is this fraction of its upper end.
    pub lambda_rel_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            p_max: 0.1,
            alpha: 1.0,
            phase_bits: 0,
            eps: 1e-4,
            max_iters: 200,
            aso_eps: 1e-10,
            aso_max_sweeps: 10_000,
            w_max_sweeps: 100,
            lambda_rel_tol: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn from_system(cfg: &SystemConfig) -> Self {
        Self {
            p_max: cfg.p_max,
            alpha: cfg.alpha,
            phase_bits: cfg.phase_bits,
            eps: cfg.eps,
            max_iters: cfg.max_iters,
            ..Self::default()
        }
    }
}

/// MMSE receive filters `Y_k = Ṽ_k⁻¹ B_k`.
pub fn update_y(est: &ChannelEstimate, bf: &BeamformerSet) -> Result<Vec<CMatrix>> {
    let cov = deterministic_covariances(est, bf);
    cov.full
        .iter()
        .zip(&cov.signal)
        .map(|(v, b)| solve_hpd(v, b))
        .collect()
}

/// Rate weights `U_k = B_kᴴ (Ṽ_k − B_k B_kᴴ)⁻¹ B_k`, made exactly Hermitian.
pub fn update_u(est: &ChannelEstimate, bf: &BeamformerSet) -> Result<Vec<CMatrix>> {
    let cov = deterministic_covariances(est, bf);
    cov.leave_out
        .iter()
        .zip(&cov.signal)
        .map(|(v, b)| Ok(hermitian_part(&(b.adjoint() * solve_hpd(v, b)?))))
        .collect()
}

/// Both auxiliary blocks at their optimum for the given beamformers.
pub fn update_aux(est: &ChannelEstimate, bf: &BeamformerSet) -> Result<AuxiliaryState> {
    Ok(AuxiliaryState {
        y: update_y(est, bf)?,
        u: update_u(est, bf)?,
    })
}

/// `Σ_k log det(I + U_k)`
pub fn weight_rate(aux: &AuxiliaryState) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..aux.u.len() {
        total += log_det_hpd(&aux.u_bar(k))?;
    }
    Ok(total)
}

fn build_a_with(
    est: &ChannelEstimate,
    alpha: f64,
    aux: &AuxiliaryState,
    h: &[Vec<CMatrix>],
    l: usize,
) -> CMatrix {
    let a2 = alpha * alpha;
    let rn = est.total_elements() as f64;
    let mb = est.ap_antennas();
    let s = &est.s_stacked[l];
    let mut a = CMatrix::zeros(mb, mb);
    let mut scalar = 0.0;
    let mut gram_weight = 0.0;
    for k in 0..est.num_ues() {
        let yuy = &aux.y[k] * aux.u_bar(k) * aux.y[k].adjoint();
        a += &h[l][k] * &yuy * h[l][k].adjoint();
        let t = trace(&yuy).re;
        let g = &est.g_stacked[k];
        let gt = trace(&(g * &yuy * g.adjoint())).re;
        scalar += (est.delta2_d[l][k] + a2 * rn * est.delta2_g[k] * est.delta2_s[l]) * t
            + a2 * est.delta2_s[l] * gt;
        gram_weight += a2 * est.delta2_g[k] * t;
    }
    a + CMatrix::identity(mb, mb).scale(scalar) + s.ad_mul(s).scale(gram_weight)
}

/// Quadratic weight of AP `l`'s precoders in the surrogate: the own-link
/// term plus the expected CSI error terms.
pub fn build_a(
    est: &ChannelEstimate,
    bf: &BeamformerSet,
    aux: &AuxiliaryState,
    l: usize,
) -> CMatrix {
    let h = effective_channels(est, &bf.theta);
    build_a_with(est, bf.alpha, aux, &h, l)
}

/// Outcome of the per-AP multiplier search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionOutcome {
    pub lambda: f64,
    /// `Σ_k ‖W_{l,k}(λ)‖² − P_max` at the returned multiplier.
    pub residual: f64,
    pub iterations: usize,
}

/// `min Σ_i Tr(WᵢᴴAWᵢ) − 2 Re Tr(Wᵢᴴcᵢ)` s.t. `Σ_i ‖Wᵢ‖² ≤ P`, solved as
/// `Wᵢ = (A + λI)⁻¹ cᵢ` with `λ` found by bisection.
pub fn solve_power_constrained(
    a: &CMatrix,
    c: &[CMatrix],
    p_max: f64,
    rel_tol: f64,
    ap: usize,
) -> Result<(Vec<CMatrix>, BisectionOutcome)> {
    let total_c: f64 = c.iter().map(fro_sq).sum();
    if total_c == 0.0 {
        let w = c
            .iter()
            .map(|ci| CMatrix::zeros(ci.nrows(), ci.ncols()))
            .collect();
        return Ok((
            w,
            BisectionOutcome {
                lambda: 0.0,
                residual: -p_max,
                iterations: 0,
            },
        ));
    }
    let n = a.nrows();
    let eig = hermitian_part(a).symmetric_eigen();
    let vals: Vec<f64> = eig.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    let projected: Vec<CMatrix> = c.iter().map(|ci| eig.eigenvectors.ad_mul(ci)).collect();
    let energy: Vec<f64> = (0..n)
        .map(|j| projected.iter().map(|p| p.row(j).norm_squared()).sum())
        .collect();
    let power = |lambda: f64, shift: f64| -> f64 {
        (0..n)
            .map(|j| energy[j] / (vals[j] + shift + lambda).powi(2))
            .sum()
    };
    let build = |lambda: f64, shift: f64| -> Vec<CMatrix> {
        projected
            .iter()
            .map(|p| {
                let mut scaled = p.clone();
                for (j, mut row) in scaled.row_iter_mut().enumerate() {
                    row /= Complex64::new(vals[j] + shift + lambda, 0.0);
                }
                &eig.eigenvectors * scaled
            })
            .collect()
    };

    let trace_a: f64 = vals.iter().sum();
    let ridge = 1e-12 * trace_a / n as f64;
    let min_val = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if min_val <= ridge {
        ridge.max(f64::MIN_POSITIVE)
    } else {
        0.0
    };
    let g0 = power(0.0, shift) - p_max;
    if g0 <= 0.0 {
        return Ok((
            build(0.0, shift),
            BisectionOutcome {
                lambda: 0.0,
                residual: g0,
                iterations: 0,
            },
        ));
    }

    let mut ub = (total_c / p_max).sqrt();
    let mut doublings = 0;
    while power(ub, 0.0) - p_max > 0.0 {
        ub *= 2.0;
        doublings += 1;
        if doublings > 200 || !ub.is_finite() {
            return Err(Error::BisectionBracket { ap });
        }
    }
    let mut lb = 0.0;
    let tol_g = 1e-12 * p_max;
    let mut lambda = ub;
    let mut residual = power(ub, 0.0) - p_max;
    let mut iterations = 0;
    while residual.abs() > tol_g && ub - lb > rel_tol * ub && iterations < 500 {
        let mid = 0.5 * (lb + ub);
        let g = power(mid, 0.0) - p_max;
        iterations += 1;
        if g > 0.0 {
            lb = mid;
        } else {
            ub = mid;
            lambda = mid;
            residual = g;
        }
        if g.abs() <= tol_g {
            lambda = mid;
            residual = g;
            break;
        }
    }
    Ok((
        build(lambda, 0.0),
        BisectionOutcome {
            lambda,
            residual,
            iterations,
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WUpdateReport {
    /// Per AP, from the last sweep.
    pub bisection: Vec<BisectionOutcome>,
    pub sweeps: usize,
}

/// Precoder update: cyclic exact minimization over the APs, each a
/// power-constrained quadratic solved by [`solve_power_constrained`].
pub fn update_w(
    est: &ChannelEstimate,
    bf: &BeamformerSet,
    aux: &AuxiliaryState,
    cfg: &SolverConfig,
) -> Result<(Vec<Vec<CMatrix>>, WUpdateReport)> {
    let h = effective_channels(est, &bf.theta);
    let num_aps = est.num_aps();
    let num_ues = est.num_ues();
    let a: Vec<CMatrix> = (0..num_aps)
        .map(|l| build_a_with(est, bf.alpha, aux, &h, l))
        .collect();
    let u_bar: Vec<CMatrix> = (0..num_ues).map(|k| aux.u_bar(k)).collect();
    // Ĥ_{l,k} Y_k Ū_k and Ĥ_{l,k} Y_k Ū_k Y_kᴴ
    let hyu: Vec<Vec<CMatrix>> = (0..num_aps)
        .map(|l| {
            (0..num_ues)
                .map(|k| &h[l][k] * &aux.y[k] * &u_bar[k])
                .collect()
        })
        .collect();
    let hyuy: Vec<Vec<CMatrix>> = (0..num_aps)
        .map(|l| {
            (0..num_ues)
                .map(|k| &hyu[l][k] * aux.y[k].adjoint())
                .collect()
        })
        .collect();

    let mut w = bf.w.clone();
    // B_{k,i} = Σ_l Ĥ_{l,k}ᴴ W_{l,i}
    let mut gains = crate::rate::link_gains(&h, &w);
    let mut outcomes = vec![
        BisectionOutcome {
            lambda: 0.0,
            residual: 0.0,
            iterations: 0
        };
        num_aps
    ];
    let mut sweeps = 0;
    while sweeps < cfg.w_max_sweeps.max(1) {
        sweeps += 1;
        let mut change = 0.0;
        let mut norm = 0.0;
        for l in 0..num_aps {
            let c: Vec<CMatrix> = (0..num_ues)
                .map(|i| {
                    let mut ci = hyu[l][i].clone();
                    for k in 0..num_ues {
                        let others = &gains[k][i] - h[l][k].ad_mul(&w[l][i]);
                        ci -= &hyuy[l][k] * others;
                    }
                    ci
                })
                .collect();
            let (new_w, outcome) =
                solve_power_constrained(&a[l], &c, cfg.p_max, cfg.lambda_rel_tol, l)?;
            for i in 0..num_ues {
                let delta = &new_w[i] - &w[l][i];
                change += fro_sq(&delta);
                norm += fro_sq(&new_w[i]);
                for k in 0..num_ues {
                    gains[k][i] += h[l][k].ad_mul(&delta);
                }
            }
            w[l] = new_w;
            outcomes[l] = outcome;
        }
        if change <= 1e-20 * norm.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok((
        w,
        WUpdateReport {
            bisection: outcomes,
            sweeps,
        },
    ))
}

/// Phase subproblem `max −θᴴ𝒵θ + 2 Re{θᴴω}` with its building blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSubproblem {
    /// `Z ⊙ Qᵀ`
    pub zcal: CMatrix,
    /// `vecd(E − C)`
    pub omega: CVector,
    pub z: CMatrix,
    pub q: CMatrix,
    pub c: CMatrix,
    pub e: CMatrix,
}

impl ThetaSubproblem {
    pub fn objective(&self, theta: &CVector) -> f64 {
        let quad = (theta.adjoint() * &self.zcal * theta)[(0, 0)].re;
        let lin = theta.dotc(&self.omega).re;
        -quad + 2.0 * lin
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

/// Collects the phase-dependent part of the surrogate for fixed `W`, `Y`, `U`.
/// The CSI error levels do not enter.
pub fn build_theta_subproblem(
    est: &ChannelEstimate,
    aux: &AuxiliaryState,
    bf: &BeamformerSet,
) -> Result<ThetaSubproblem> {
    let num_ues = est.num_ues();
    let rn = est.total_elements();
    // Ŝ = [Ŝ_1 … Ŝ_L], W_i stacked over APs, D̂_k stacked over APs
    let s_all = hstack(&est.s_stacked)?;
    let w_stacked: Vec<CMatrix> = (0..num_ues)
        .map(|i| vstack(&bf.w.iter().map(|row| row[i].clone()).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let d_stacked: Vec<CMatrix> = (0..num_ues)
        .map(|k| {
            vstack(
                &est.d_hat
                    .iter()
                    .map(|row| row[k].clone())
                    .collect::<Vec<_>>(),
            )
        })
        .collect::<Result<_>>()?;
    let lm = s_all.ncols();
    let mut w_big = CMatrix::zeros(lm, lm);
    for wi in &w_stacked {
        w_big += wi * wi.adjoint();
    }
    let w_big_s = &w_big * s_all.adjoint();

    let mut z = CMatrix::zeros(rn, rn);
    let mut c = CMatrix::zeros(rn, rn);
    let mut e = CMatrix::zeros(rn, rn);
    for k in 0..num_ues {
        let g = &est.g_stacked[k];
        let gyu = g * &aux.y[k] * aux.u_bar(k);
        let gyuy = &gyu * aux.y[k].adjoint();
        z += &gyuy * g.adjoint();
        c += &gyuy * d_stacked[k].adjoint() * &w_big_s;
        e += &gyu * w_stacked[k].adjoint() * s_all.adjoint();
    }
    let q = &s_all * &w_big_s;
    let zcal = hadamard(&z, &q.transpose())?;
    let omega = vecd(&(&e - &c))?;
    Ok(ThetaSubproblem {
        zcal,
        omega,
        z,
        q,
        c,
        e,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsoOutcome {
    pub theta: CVector,
    pub objective: f64,
    pub sweeps: usize,
    /// Objective after every single-element update when auditing.
    pub audit: Vec<f64>,
}

/// Element-wise ascent: each `θ_n` set to `α e^{j arg μ_n}` with
/// `μ_n = ω_n − Σ_{m≠n} 𝒵_{nm} θ_m`, ascending `n`, until the objective
/// changes by at most `eps` over a sweep.
pub fn aso_optimize(
    sub: &ThetaSubproblem,
    theta_init: &CVector,
    alpha: f64,
    eps: f64,
    max_sweeps: usize,
    audit: bool,
) -> AsoOutcome {
    let n = sub.len();
    let mut theta = theta_init.map(|t| {
        if t == ZERO {
            Complex64::new(alpha, 0.0)
        } else {
            t * (alpha / t.norm())
        }
    });
    let mut objective = sub.objective(&theta);
    let mut trail = Vec::new();
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut s = &sub.zcal * &theta;
        for idx in 0..n {
            let mu = sub.omega[idx] - (s[idx] - sub.zcal[(idx, idx)] * theta[idx]);
            if mu == ZERO {
                if audit {
                    trail.push(sub.objective(&theta));
                }
                continue;
            }
            let new = Complex64::from_polar(alpha, mu.arg());
            let delta = new - theta[idx];
            if delta != ZERO {
                s.axpy(delta, &sub.zcal.column(idx), Complex64::new(1.0, 0.0));
                theta[idx] = new;
            }
            if audit {
                trail.push(sub.objective(&theta));
            }
        }
        let next = sub.objective(&theta);
        let done = (next - objective).abs() <= eps;
        objective = next;
        if done {
            break;
        }
    }
    AsoOutcome {
        theta,
        objective,
        sweeps,
        audit: trail,
    }
}

/// Rounds each phase to the nearest point of `{2πg / 2^b}` and sets the
/// modulus to `alpha`. `bits = 0` only renormalizes.
pub fn project_discrete(theta: &CVector, bits: u32, alpha: f64) -> CVector {
    if bits == 0 {
        return theta.map(|t| Complex64::from_polar(alpha, t.arg()));
    }
    let levels = 1u64 << bits;
    let step = 2.0 * PI / levels as f64;
    theta.map(|t| {
        let g = (t.arg() / step).round().rem_euclid(levels as f64);
        Complex64::from_polar(alpha, g * step)
    })
}

/// Full-power random precoders and uniformly random phases (projected when
/// `phase_bits ≥ 1`).
pub fn initial_beamformers<R: Rng + ?Sized>(
    est: &ChannelEstimate,
    streams: usize,
    cfg: &SolverConfig,
    rng: &mut R,
) -> BeamformerSet {
    let mut bf = BeamformerSet::zeros(est, streams, cfg.alpha);
    for row in bf.w.iter_mut() {
        for w in row.iter_mut() {
            *w = complex_gaussian(w.nrows(), w.ncols(), 1.0, rng);
        }
        let p: f64 = row.iter().map(fro_sq).sum();
        let scale = (cfg.p_max / p).sqrt();
        for w in row.iter_mut() {
            *w *= Complex64::new(scale, 0.0);
        }
    }
    let theta = DVector::from_fn(est.total_elements(), |_, _| {
        Complex64::from_polar(cfg.alpha, 2.0 * PI * rng.random::<f64>())
    });
    bf.theta = project_discrete(&theta, cfg.phase_bits, cfg.alpha);
    bf
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// Surrogate after the precoder and phase updates of this iteration.
    pub f1: f64,
    /// `Σ log det(I + U_k)` at the start of this iteration.
    pub rate: f64,
    pub ap_power: Vec<f64>,
    /// Phase subproblem objective after the phase update, if one ran.
    pub rho: Option<f64>,
    pub bisection: Vec<BisectionOutcome>,
    pub modulus_error: f64,
    /// Whether a quantized phase vector was accepted.
    pub projection_accepted: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    pub iterations: Vec<IterationRecord>,
    /// `Σ log det(I + U_k)` for the returned beamformers.
    pub final_rate: f64,
    pub converged: bool,
}

impl SolverTrace {
    pub fn f1(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.f1).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.rate).collect()
    }
}

#[derive(Debug, Clone)]
pub struct BcdOutcome {
    pub beamformers: BeamformerSet,
    pub aux: AuxiliaryState,
    pub trace: SolverTrace,
}

fn finite(v: f64, what: &'static str, iteration: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { what, iteration })
    }
}

/// Cycles receive filters, weights, precoders and phases until the
/// deterministic-equivalent rate settles.
pub fn run_bcd(
    est: &ChannelEstimate,
    cfg: &SolverConfig,
    init: BeamformerSet,
) -> Result<BcdOutcome> {
    let mut bf = init;
    bf.alpha = cfg.alpha;
    let mut trace = SolverTrace::default();
    let mut prev_rate: Option<f64> = None;
    let mut iteration = 0;
    loop {
        let aux = update_aux(est, &bf)?;
        let rate = finite(weight_rate(&aux)?, "rate", iteration)?;
        let settled = prev_rate.is_some_and(|p| (rate - p).abs() < cfg.eps);
        if settled || iteration >= cfg.max_iters {
            trace.final_rate = rate;
            trace.converged = settled;
            return Ok(BcdOutcome {
                beamformers: bf,
                aux,
                trace,
            });
        }
        prev_rate = Some(rate);

        let (w, report) = update_w(est, &bf, &aux, cfg)?;
        bf.w = w;

        let mut rho = None;
        let mut projection_accepted = None;
        if cfg.alpha > 0.0 {
            let sub = build_theta_subproblem(est, &aux, &bf)?;
            let aso = aso_optimize(
                &sub,
                &bf.theta,
                cfg.alpha,
                cfg.aso_eps,
                cfg.aso_max_sweeps,
                false,
            );
            if cfg.phase_bits == 0 {
                rho = Some(finite(aso.objective, "phase objective", iteration)?);
                bf.theta = aso.theta;
            } else {
                let candidate = project_discrete(&aso.theta, cfg.phase_bits, cfg.alpha);
                let mut trial = bf.clone();
                trial.theta = candidate;
                let accept = deterministic_rate(est, &trial)? >= deterministic_rate(est, &bf)?;
                if accept {
                    bf.theta = trial.theta;
                }
                rho = Some(finite(
                    sub.objective(&bf.theta),
                    "phase objective",
                    iteration,
                )?);
                projection_accepted = Some(accept);
            }
        }

        let f1 = finite(surrogate_f1(est, &bf, &aux)?, "surrogate", iteration)?;
        trace.iterations.push(IterationRecord {
            f1,
            rate,
            ap_power: bf.ap_powers(),
            rho,
            bisection: report.bisection,
            modulus_error: bf.modulus_error(),
            projection_accepted,
        });
        iteration += 1;
    }
}
