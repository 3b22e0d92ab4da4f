#![allow(dead_code)]

use irs_robust::matops::{CMatrix, CVector};
use irs_robust::rate::{AuxiliaryState, BeamformerSet};
use irs_robust::scenario::{generate_channels, ChannelEstimate, Placement, SystemConfig};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// L=2, R=2, K=2, M_B=2, M_U=2, N=4, d=2.
pub fn desk_config(kappa2: f64) -> SystemConfig {
    let mut cfg = SystemConfig {
        num_aps: 2,
        num_irs: 2,
        num_ues: 2,
        ap_antennas: 2,
        ue_antennas: 2,
        irs_elements: 4,
        irs_horizontal: 2,
        streams: 2,
        ..SystemConfig::default()
    };
    cfg.set_kappa2(kappa2);
    cfg
}

pub fn channels(cfg: &SystemConfig, r: &mut ChaCha8Rng) -> ChannelEstimate {
    let placement = Placement::draw(cfg, r);
    generate_channels(cfg, &placement, r).unwrap()
}

/// CN(0, variance) entries, drawn here rather than through the library.
pub fn cn(rows: usize, cols: usize, variance: f64, r: &mut ChaCha8Rng) -> CMatrix {
    let s = (variance / 2.0).sqrt();
    CMatrix::from_fn(rows, cols, |_, _| {
        let a: f64 = r.sample(StandardNormal);
        let b: f64 = r.sample(StandardNormal);
        Complex64::new(s * a, s * b)
    })
}

pub fn random_theta(len: usize, alpha: f64, r: &mut ChaCha8Rng) -> CVector {
    CVector::from_fn(len, |_, _| {
        Complex64::from_polar(alpha, r.random::<f64>() * std::f64::consts::TAU)
    })
}

pub fn random_hermitian_psd(n: usize, scale: f64, r: &mut ChaCha8Rng) -> CMatrix {
    let x = cn(n, n, scale, r);
    let m = &x * x.adjoint();
    (&m + m.adjoint()).scale(0.5)
}

/// Random precoders at full power per AP, random phases, random filters
/// and Hermitian PSD weights.
pub fn random_state(
    est: &ChannelEstimate,
    cfg: &SystemConfig,
    r: &mut ChaCha8Rng,
) -> (BeamformerSet, AuxiliaryState) {
    let mut bf = BeamformerSet::zeros(est, cfg.streams, cfg.alpha);
    for row in bf.w.iter_mut() {
        for w in row.iter_mut() {
            *w = cn(cfg.ap_antennas, cfg.streams, 1.0, r);
        }
        let p: f64 = row.iter().map(|w| w.norm_squared()).sum();
        for w in row.iter_mut() {
            *w *= Complex64::new((cfg.p_max / p).sqrt(), 0.0);
        }
    }
    bf.theta = random_theta(est.total_elements(), cfg.alpha, r);
    // filters scaled like an MMSE receiver, ~ 1 / (channel gain · sqrt(P))
    let gain: f64 = est.d_hat[0][0].norm() + 1e-30;
    let y_scale = 1.0 / (gain * cfg.p_max.sqrt());
    let aux = AuxiliaryState {
        u: (0..cfg.num_ues)
            .map(|_| random_hermitian_psd(cfg.streams, 1.0, r))
            .collect(),
        y: (0..cfg.num_ues)
            .map(|_| cn(cfg.ue_antennas, cfg.streams, y_scale * y_scale, r))
            .collect(),
    };
    (bf, aux)
}

/// Monte Carlo estimate of `E{Σ_k Tr(Ū_k Y_kᴴ Σ_l Σ_i H̄_{l,k}ᴴ W_{l,i} W_{l,i}ᴴ H̄_{l,k} Y_k)}`.
///
/// Every error block is drawn per (l,k), (r,k) and (l,r) link, and the
/// effective-channel error is assembled IRS by IRS:
/// `H̄_{l,k} = D̄_{l,k} + Σ_r (Ŝ_{l,r} + S̄_{l,r})ᴴ Θ_rᴴ (Ĝ_{r,k} + Ḡ_{r,k}) − Ŝ_{l,r}ᴴ Θ_rᴴ Ĝ_{r,k}`.
/// Returns (mean, standard error).
pub fn mc_error_term(
    est: &ChannelEstimate,
    bf: &BeamformerSet,
    aux: &AuxiliaryState,
    draws: usize,
    r: &mut ChaCha8Rng,
) -> (f64, f64) {
    let (nl, nr, nk) = (est.num_aps(), est.num_irs(), est.num_ues());
    let n = est.irs_elements();
    let thetas: Vec<CMatrix> = (0..nr)
        .map(|rr| CMatrix::from_diagonal(&bf.theta.rows(rr * n, n).into_owned()))
        .collect();
    let weights: Vec<CMatrix> = (0..nk)
        .map(|k| {
            let ub = &aux.u[k] + CMatrix::identity(aux.u[k].nrows(), aux.u[k].nrows());
            &aux.y[k] * ub * aux.y[k].adjoint()
        })
        .collect();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        let d_bar: Vec<Vec<CMatrix>> = (0..nl)
            .map(|l| {
                (0..nk)
                    .map(|k| {
                        let d = &est.d_hat[l][k];
                        cn(d.nrows(), d.ncols(), est.delta2_d[l][k], r)
                    })
                    .collect()
            })
            .collect();
        let g_bar: Vec<Vec<CMatrix>> = (0..nr)
            .map(|rr| {
                (0..nk)
                    .map(|k| {
                        let g = &est.g_hat[rr][k];
                        cn(g.nrows(), g.ncols(), est.delta2_g[k], r)
                    })
                    .collect()
            })
            .collect();
        let s_bar: Vec<Vec<CMatrix>> = (0..nl)
            .map(|l| {
                (0..nr)
                    .map(|rr| {
                        let s = &est.s_hat[l][rr];
                        cn(s.nrows(), s.ncols(), est.delta2_s[l], r)
                    })
                    .collect()
            })
            .collect();
        let mut value = 0.0;
        for k in 0..nk {
            for l in 0..nl {
                let mut hb = d_bar[l][k].clone();
                for rr in 0..nr {
                    let th = thetas[rr].adjoint();
                    let s_true = &est.s_hat[l][rr] + &s_bar[l][rr];
                    let g_true = &est.g_hat[rr][k] + &g_bar[rr][k];
                    hb += s_true.adjoint() * &th * g_true
                        - est.s_hat[l][rr].adjoint() * &th * &est.g_hat[rr][k];
                }
                for w in &bf.w[l] {
                    let x = hb.adjoint() * w;
                    // Tr(Ū Yᴴ x xᴴ Y) = Tr(xᴴ (Y Ū Yᴴ) x)
                    let t = (x.adjoint() * &weights[k] * &x).trace();
                    value += t.re;
                }
            }
        }
        sum += value;
        sum_sq += value * value;
    }
    let nf = draws as f64;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
    (mean, (var / nf).sqrt())
}
