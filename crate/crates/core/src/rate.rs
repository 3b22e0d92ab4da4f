//! Rate evaluation: effective channels, interference covariances, the
//! instantaneous and Monte Carlo average sum rate, the closed-form CSI error
//! expectation and the fractional-programming surrogate objective.
//!
//! Rates are in nats; convert with [`nats_to_bits`] for reporting.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matops::{fro_sq, log_abs_det, log_det_hpd, trace, CMatrix, CVector, ZERO};
use crate::scenario::{sample_csi_error, ChannelEstimate, ErrorSample};

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Active precoders of every AP toward every UE plus the IRS phase vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerSet {
    /// `[l][k]`, `M_B × d`.
    pub w: Vec<Vec<CMatrix>>,
    /// Length `R·N`, every entry of modulus `alpha`.
    pub theta: CVector,
    pub alpha: f64,
}

impl BeamformerSet {
    /// All-zero precoders and `theta = alpha` everywhere.
    pub fn zeros(est: &ChannelEstimate, streams: usize, alpha: f64) -> Self {
        let w = (0..est.num_aps())
            .map(|_| {
                (0..est.num_ues())
                    .map(|_| CMatrix::zeros(est.ap_antennas(), streams))
                    .collect()
            })
            .collect();
        Self {
            w,
            theta: CVector::from_element(est.total_elements(), Complex64::new(alpha, 0.0)),
            alpha,
        }
    }

    pub fn streams(&self) -> usize {
        self.w[0][0].ncols()
    }

    /// `Σ_k ‖W_{l,k}‖²`
    pub fn ap_power(&self, l: usize) -> f64 {
        self.w[l].iter().map(fro_sq).sum()
    }

    pub fn ap_powers(&self) -> Vec<f64> {
        (0..self.w.len()).map(|l| self.ap_power(l)).collect()
    }

    /// Largest deviation of `|theta_n|` from `alpha`.
    pub fn modulus_error(&self) -> f64 {
        self.theta
            .iter()
            .map(|t| (t.norm() - self.alpha).abs())
            .fold(0.0, f64::max)
    }

    /// The diagonal phase-shift matrix.
    pub fn theta_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&self.theta)
    }
}

/// Receive filters `Y[k]` (`M_U × d`) and rate weights `U[k]` (`d × d`).
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryState {
    pub u: Vec<CMatrix>,
    pub y: Vec<CMatrix>,
}

impl AuxiliaryState {
    pub fn zeros(num_ues: usize, ue_antennas: usize, streams: usize) -> Self {
        Self {
            u: vec![CMatrix::zeros(streams, streams); num_ues],
            y: vec![CMatrix::zeros(ue_antennas, streams); num_ues],
        }
    }

    /// `I + U[k]`
    pub fn u_bar(&self, k: usize) -> CMatrix {
        let d = self.u[k].nrows();
        &self.u[k] + CMatrix::identity(d, d)
    }
}

/// `Θᴴ Ĝ`: scales row `n` by `conj(theta_n)`.
fn reflect(theta: &CVector, g: &CMatrix) -> CMatrix {
    let mut out = g.clone();
    for (n, mut row) in out.row_iter_mut().enumerate() {
        row *= theta[n].conj();
    }
    out
}

/// `Ĥ_{l,k} = D̂_{l,k} + Ŝ_lᴴ Θᴴ Ĝ_k`, `M_B × M_U`.
pub fn effective_channel(est: &ChannelEstimate, theta: &CVector, l: usize, k: usize) -> CMatrix {
    &est.d_hat[l][k] + est.s_stacked[l].adjoint() * reflect(theta, &est.g_stacked[k])
}

/// All effective channels, `[l][k]`.
pub fn effective_channels(est: &ChannelEstimate, theta: &CVector) -> Vec<Vec<CMatrix>> {
    let reflected: Vec<CMatrix> = est.g_stacked.iter().map(|g| reflect(theta, g)).collect();
    (0..est.num_aps())
        .map(|l| {
            let sh = est.s_stacked[l].adjoint();
            (0..est.num_ues())
                .map(|k| &est.d_hat[l][k] + &sh * &reflected[k])
                .collect()
        })
        .collect()
}

/// Composite gain of UE `k` for the streams of UE `i`,
/// `B_{k,i} = Σ_l Ĥ_{l,k}ᴴ W_{l,i}`, indexed `[k][i]`.
pub fn link_gains(h: &[Vec<CMatrix>], w: &[Vec<CMatrix>]) -> Vec<Vec<CMatrix>> {
    let num_ues = h[0].len();
    (0..num_ues)
        .map(|k| {
            (0..num_ues)
                .map(|i| {
                    let mut acc = h[0][k].ad_mul(&w[0][i]);
                    for l in 1..h.len() {
                        acc += h[l][k].ad_mul(&w[l][i]);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// CSI error of the effective channel `(l, k)` for one error draw:
/// `D̄ + S̄ᴴΘᴴĜ + ŜᴴΘᴴḠ + S̄ᴴΘᴴḠ`.
pub fn error_channel(
    est: &ChannelEstimate,
    err: &ErrorSample,
    theta: &CVector,
    l: usize,
    k: usize,
) -> CMatrix {
    let g_full = &est.g_stacked[k] + &err.g_stacked[k];
    let s_hat = &est.s_stacked[l];
    let s_bar = &err.s_stacked[l];
    &err.d_bar[l][k]
        + s_bar.adjoint() * reflect(theta, &g_full)
        + s_hat.adjoint() * reflect(theta, &err.g_stacked[k])
}

/// `Σ_l Σ_i H̄_{l,k}ᴴ W_{l,i} W_{l,i}ᴴ H̄_{l,k}` for UE `k`.
fn error_interference(
    est: &ChannelEstimate,
    err: &ErrorSample,
    bf: &BeamformerSet,
    k: usize,
) -> CMatrix {
    let m = est.ue_antennas();
    let mut out = CMatrix::zeros(m, m);
    for l in 0..est.num_aps() {
        let hb = error_channel(est, err, &bf.theta, l, k);
        for w in &bf.w[l] {
            let x = hb.ad_mul(w);
            out += &x * x.adjoint();
        }
    }
    out
}

fn interference_from_gains(gains: &[CMatrix], k: usize, m: usize) -> CMatrix {
    let mut out = CMatrix::zeros(m, m);
    for (i, b) in gains.iter().enumerate() {
        if i != k {
            out += b * b.adjoint();
        }
    }
    out
}

/// Interference-plus-noise covariance of UE `k` under one error draw:
/// estimated-channel interference from the other UEs, the per-AP error
/// leakage of all streams, and noise.
pub fn interference_covariance(
    est: &ChannelEstimate,
    err: &ErrorSample,
    bf: &BeamformerSet,
    k: usize,
) -> CMatrix {
    let h = effective_channels(est, &bf.theta);
    let gains = link_gains(&h, &bf.w);
    covariance_with(est, err, bf, &gains[k], k)
}

fn covariance_with(
    est: &ChannelEstimate,
    err: &ErrorSample,
    bf: &BeamformerSet,
    gains_k: &[CMatrix],
    k: usize,
) -> CMatrix {
    let m = est.ue_antennas();
    interference_from_gains(gains_k, k, m)
        + error_interference(est, err, bf, k)
        + CMatrix::identity(m, m).scale(est.noise_power)
}

fn rate_given(v: &CMatrix, signal: &CMatrix) -> Result<f64> {
    let with = v + signal * signal.adjoint();
    Ok(log_det_hpd(&with)? - log_det_hpd(v)?)
}

fn instant_with_gains(
    est: &ChannelEstimate,
    err: &ErrorSample,
    bf: &BeamformerSet,
    gains: &[Vec<CMatrix>],
) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..est.num_ues() {
        let v = covariance_with(est, err, bf, &gains[k], k);
        total += rate_given(&v, &gains[k][k])?;
    }
    Ok(total)
}

/// `Σ_k log det(I + Γ_k)` in nats for one error draw.
pub fn instant_sum_rate(
    est: &ChannelEstimate,
    err: &ErrorSample,
    bf: &BeamformerSet,
) -> Result<f64> {
    let h = effective_channels(est, &bf.theta);
    let gains = link_gains(&h, &bf.w);
    instant_with_gains(est, err, bf, &gains)
}

/// Sample mean with its standard error; the error is absent for a single
/// sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: Option<f64>,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: None,
                samples: 0,
            };
        }
        if xs.iter().all(|&x| x == xs[0]) {
            return Self {
                mean: xs[0],
                std_error: (n > 1).then_some(0.0),
                samples: n,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_error = (n > 1).then(|| {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        Self {
            mean,
            std_error,
            samples: n,
        }
    }
}

/// Monte Carlo average sum rate (nats) over `samples` fresh error draws.
pub fn avg_sum_rate_mc<R: Rng + ?Sized>(
    est: &ChannelEstimate,
    bf: &BeamformerSet,
    rng: &mut R,
    samples: usize,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::config("mc_samples", "must be at least 1"));
    }
    let h = effective_channels(est, &bf.theta);
    let gains = link_gains(&h, &bf.w);
    let mut xs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let err = sample_csi_error(est, rng);
        xs.push(instant_with_gains(est, &err, bf, &gains)?);
    }
    Ok(McEstimate::from_samples(&xs))
}

/// Per-AP transmit power `Σ_i ‖W_{l,i}‖²` and reflected power
/// `Σ_i ‖Ŝ_l W_{l,i}‖²`.
fn ap_power_terms(est: &ChannelEstimate, bf: &BeamformerSet) -> (Vec<f64>, Vec<f64>) {
    let p = bf.ap_powers();
    let q = (0..est.num_aps())
        .map(|l| {
            bf.w[l]
                .iter()
                .map(|w| fro_sq(&(&est.s_stacked[l] * w)))
                .sum()
        })
        .collect();
    (p, q)
}

/// Expected error leakage `E{Σ_l Σ_i H̄ᴴ W Wᴴ H̄}` seen by UE `k`, `M_U × M_U`.
/// Independent of the phases, only their modulus enters.
pub fn error_covariance(est: &ChannelEstimate, bf: &BeamformerSet, k: usize) -> CMatrix {
    let (p, q) = ap_power_terms(est, bf);
    error_covariance_with(est, bf.alpha, &p, &q, k)
}

fn error_covariance_with(
    est: &ChannelEstimate,
    alpha: f64,
    p: &[f64],
    q: &[f64],
    k: usize,
) -> CMatrix {
    let a2 = alpha * alpha;
    let rn = est.total_elements() as f64;
    let m = est.ue_antennas();
    let mut scalar = 0.0;
    let mut gram_weight = 0.0;
    for l in 0..est.num_aps() {
        scalar += (est.delta2_d[l][k] + a2 * rn * est.delta2_g[k] * est.delta2_s[l]) * p[l]
            + a2 * est.delta2_g[k] * q[l];
        gram_weight += a2 * est.delta2_s[l] * p[l];
    }
    let g = &est.g_stacked[k];
    CMatrix::identity(m, m).scale(scalar) + g.ad_mul(g).scale(gram_weight)
}

/// Closed form of `E{Σ_k Tr(Ū_k Y_kᴴ Σ_l Σ_i H̄ᴴ W Wᴴ H̄ Y_k)}` as the sum of
/// its four scalar terms.
pub fn expectation_closed_form(
    est: &ChannelEstimate,
    bf: &BeamformerSet,
    aux: &AuxiliaryState,
) -> f64 {
    let (p, q) = ap_power_terms(est, bf);
    let a2 = bf.alpha * bf.alpha;
    let rn = est.total_elements() as f64;
    let mut total = 0.0;
    for k in 0..est.num_ues() {
        let yuy = &aux.y[k] * aux.u_bar(k) * aux.y[k].adjoint();
        let t = trace(&yuy).re;
        let g = &est.g_stacked[k];
        let gt = trace(&(g * &yuy * g.adjoint())).re;
        for l in 0..est.num_aps() {
            total += est.delta2_d[l][k] * t * p[l];
            total += a2 * est.delta2_g[k] * t * q[l];
            total += a2 * est.delta2_s[l] * gt * p[l];
            total += rn * a2 * est.delta2_s[l] * est.delta2_g[k] * t * p[l];
        }
    }
    total
}

/// Deterministic-equivalent covariances of every UE.
#[derive(Debug, Clone)]
pub struct DeterministicCovariance {
    /// `Ṽ_k`: all estimated-channel streams, expected error leakage, noise.
    pub full: Vec<CMatrix>,
    /// `Ṽ_k − B_k B_kᴴ`, the own-signal-free part.
    pub leave_out: Vec<CMatrix>,
    /// `B_k = Σ_l Ĥ_{l,k}ᴴ W_{l,k}`.
    pub signal: Vec<CMatrix>,
}

pub fn deterministic_covariances(
    est: &ChannelEstimate,
    bf: &BeamformerSet,
) -> DeterministicCovariance {
    let h = effective_channels(est, &bf.theta);
    let gains = link_gains(&h, &bf.w);
    let (p, q) = ap_power_terms(est, bf);
    let m = est.ue_antennas();
    let mut full = Vec::new();
    let mut leave_out = Vec::new();
    let mut signal = Vec::new();
    for (k, row) in gains.into_iter().enumerate() {
        let leave = interference_from_gains(&row, k, m)
            + error_covariance_with(est, bf.alpha, &p, &q, k)
            + CMatrix::identity(m, m).scale(est.noise_power);
        let b = row[k].clone();
        full.push(&leave + &b * b.adjoint());
        leave_out.push(leave);
        signal.push(b);
    }
    DeterministicCovariance {
        full,
        leave_out,
        signal,
    }
}

/// `Ṽ_k`
pub fn deterministic_v(est: &ChannelEstimate, bf: &BeamformerSet, k: usize) -> CMatrix {
    deterministic_covariances(est, bf).full.swap_remove(k)
}

/// `Ṽ_k − B_k B_kᴴ`
pub fn deterministic_v_leave_out(est: &ChannelEstimate, bf: &BeamformerSet, k: usize) -> CMatrix {
    deterministic_covariances(est, bf).leave_out.swap_remove(k)
}

/// `Σ_k [log det Ṽ_k − log det(Ṽ_k − B_k B_kᴴ)]` in nats, the rate the
/// surrogate collapses to at its inner optimum.
pub fn deterministic_rate(est: &ChannelEstimate, bf: &BeamformerSet) -> Result<f64> {
    let cov = deterministic_covariances(est, bf);
    let mut total = 0.0;
    for (full, leave) in cov.full.iter().zip(&cov.leave_out) {
        total += log_det_hpd(full)? - log_det_hpd(leave)?;
    }
    Ok(total)
}

/// Surrogate objective with complex arithmetic kept; the imaginary part is
/// pure rounding for Hermitian weights.
pub fn surrogate_f1_complex(
    est: &ChannelEstimate,
    bf: &BeamformerSet,
    aux: &AuxiliaryState,
) -> Result<Complex64> {
    let h = effective_channels(est, &bf.theta);
    let gains = link_gains(&h, &bf.w);
    let noise = est.noise_power;
    let mut total = ZERO;
    for (k, row) in gains.iter().enumerate() {
        let ub = aux.u_bar(k);
        let y = &aux.y[k];
        let cross = trace(&(&ub * y.adjoint() * &row[k]));
        let mut quad = CMatrix::zeros(y.nrows(), y.nrows());
        for b in row {
            quad += b * b.adjoint();
        }
        quad += CMatrix::identity(y.nrows(), y.nrows()).scale(noise);
        let quad_term = trace(&(&ub * y.adjoint() * quad * y));
        total += Complex64::new(log_abs_det(&ub)?, 0.0) - trace(&aux.u[k]) + cross + cross.conj()
            - quad_term;
    }
    Ok(total - expectation_closed_form(est, bf, aux))
}

/// Fractional-programming surrogate `f₁` with the error expectation in
/// closed form.
pub fn surrogate_f1(
    est: &ChannelEstimate,
    bf: &BeamformerSet,
    aux: &AuxiliaryState,
) -> Result<f64> {
    Ok(surrogate_f1_complex(est, bf, aux)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matops::{complex_gaussian, min_eigenvalue_hermitian};
    use crate::scenario::{generate_channels, ErrorLevels, Placement, SystemConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn desk(seed: u64, kappa2: f64) -> (SystemConfig, ChannelEstimate) {
        let mut cfg = SystemConfig {
            num_aps: 2,
            num_irs: 2,
            num_ues: 2,
            ap_antennas: 2,
            ue_antennas: 2,
            irs_elements: 4,
            irs_horizontal: 2,
            ..SystemConfig::default()
        };
        cfg.set_kappa2(kappa2);
        let mut r = rng(seed);
        let p = Placement::draw(&cfg, &mut r);
        let est = generate_channels(&cfg, &p, &mut r).unwrap();
        (cfg, est)
    }

    fn random_bf(est: &ChannelEstimate, alpha: f64, r: &mut ChaCha8Rng) -> BeamformerSet {
        let mut bf = BeamformerSet::zeros(est, 2, alpha);
        for row in bf.w.iter_mut() {
            for w in row.iter_mut() {
                *w = complex_gaussian(w.nrows(), w.ncols(), 0.02, r);
            }
        }
        bf.theta = bf
            .theta
            .map(|_| Complex64::from_polar(alpha, r.random::<f64>() * std::f64::consts::TAU));
        bf
    }

    fn siso(h: Complex64, noise: f64) -> ChannelEstimate {
        let one = |z: Complex64| CMatrix::from_element(1, 1, z);
        ChannelEstimate::from_blocks(
            vec![vec![one(h)]],
            vec![vec![one(ZERO)]],
            vec![vec![one(ZERO)]],
            noise,
            ErrorLevels::PERFECT,
        )
        .unwrap()
    }

    #[test]
    fn effective_channel_without_irs_is_direct() {
        let (_, est) = desk(1, 0.01);
        let mut r = rng(2);
        let bf = random_bf(&est, 0.0, &mut r);
        assert_eq!(effective_channel(&est, &bf.theta, 1, 0), est.d_hat[1][0]);
    }

    #[test]
    fn effective_channel_blockwise() {
        let (_, est) = desk(3, 0.01);
        let mut r = rng(4);
        let bf = random_bf(&est, 0.8, &mut r);
        let n = est.irs_elements();
        for l in 0..2 {
            for k in 0..2 {
                // Ĥᴴ = D̂ᴴ + Σ_r Ĝ_{r,k}ᴴ Θ_r Ŝ_{l,r}
                let mut want = est.d_hat[l][k].adjoint();
                for rr in 0..est.num_irs() {
                    let th = CMatrix::from_diagonal(&bf.theta.rows(rr * n, n).into_owned());
                    want += est.g_hat[rr][k].adjoint() * th * &est.s_hat[l][rr];
                }
                let got = effective_channel(&est, &bf.theta, l, k).adjoint();
                assert!((got - &want).norm() <= 1e-12 * want.norm());
            }
        }
    }

    #[test]
    fn zero_beamformers() {
        let (_, est) = desk(5, 0.01);
        let bf = BeamformerSet::zeros(&est, 2, 1.0);
        let err = sample_csi_error(&est, &mut rng(6));
        let v = interference_covariance(&est, &err, &bf, 0);
        assert_eq!(v, CMatrix::identity(2, 2).scale(est.noise_power));
        assert_eq!(instant_sum_rate(&est, &err, &bf).unwrap(), 0.0);
        assert_eq!(
            deterministic_v(&est, &bf, 1),
            CMatrix::identity(2, 2).scale(est.noise_power)
        );
    }

    #[test]
    fn siso_rate() {
        let h = Complex64::new(0.3, -0.4);
        let est = siso(h, 0.01);
        let mut bf = BeamformerSet::zeros(&est, 1, 1.0);
        bf.w[0][0] = CMatrix::from_element(1, 1, Complex64::new(0.5, 0.0));
        let got = instant_sum_rate(&est, &ErrorSample::zero(&est), &bf).unwrap();
        let want = (1.0 + h.norm_sqr() * 0.25 / 0.01).ln();
        assert!((got - want).abs() < 1e-12);
        assert!((deterministic_rate(&est, &bf).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn covariance_dominates_noise() {
        let (_, est) = desk(7, 0.01);
        let mut r = rng(8);
        let bf = random_bf(&est, 1.0, &mut r);
        let err = sample_csi_error(&est, &mut r);
        for k in 0..2 {
            let v = interference_covariance(&est, &err, &bf, k);
            let extra = &v - CMatrix::identity(2, 2).scale(est.noise_power);
            assert!(min_eigenvalue_hermitian(&extra).unwrap() >= -1e-12 * v.norm());
            let vt = deterministic_v(&est, &bf, k);
            assert!(min_eigenvalue_hermitian(&vt).unwrap() >= est.noise_power * (1.0 - 1e-9));
        }
    }

    #[test]
    fn instant_rate_matches_determinant_identity() {
        let (_, est) = desk(9, 0.01);
        let mut r = rng(10);
        let bf = random_bf(&est, 1.0, &mut r);
        let err = sample_csi_error(&est, &mut r);
        let rate = instant_sum_rate(&est, &err, &bf).unwrap();
        let mut want = 0.0;
        for k in 0..2 {
            let v = interference_covariance(&est, &err, &bf, k);
            let mut b = CMatrix::zeros(2, 2);
            for l in 0..2 {
                b += effective_channel(&est, &bf.theta, l, k).adjoint() * &bf.w[l][k];
            }
            // log det(I + Bᴴ V⁻¹ B)
            let vinv = v.clone().try_inverse().unwrap();
            let g = CMatrix::identity(2, 2) + b.adjoint() * vinv * &b;
            want += g.determinant().re.ln();
        }
        assert!((rate - want).abs() < 1e-9 * want.abs());
        assert!(rate > 0.0);
    }

    #[test]
    fn mc_with_perfect_csi_is_exact() {
        let (_, est) = desk(11, 0.0);
        let mut r = rng(12);
        let bf = random_bf(&est, 1.0, &mut r);
        let inst = instant_sum_rate(&est, &ErrorSample::zero(&est), &bf).unwrap();
        let mc = avg_sum_rate_mc(&est, &bf, &mut r, 20).unwrap();
        assert_eq!(mc.mean, inst);
        assert_eq!(mc.std_error, Some(0.0));
        let one = avg_sum_rate_mc(&est, &bf, &mut r, 1).unwrap();
        assert_eq!(one.std_error, None);
        assert!(avg_sum_rate_mc(&est, &bf, &mut r, 0).is_err());
    }

    #[test]
    fn expectation_special_cases() {
        let (_, est) = desk(13, 0.0);
        let mut r = rng(14);
        let bf = random_bf(&est, 1.0, &mut r);
        let aux = AuxiliaryState {
            u: vec![CMatrix::identity(2, 2); 2],
            y: (0..2)
                .map(|_| complex_gaussian(2, 2, 1.0, &mut r))
                .collect(),
        };
        assert_eq!(expectation_closed_form(&est, &bf, &aux), 0.0);

        let est = est.with_error_levels(ErrorLevels::uniform(0.01));
        let mut no_irs = bf.clone();
        no_irs.alpha = 0.0;
        let direct_only = est.with_error_levels(ErrorLevels {
            kappa2_d: 0.01,
            kappa2_g: 0.0,
            kappa2_s: 0.0,
        });
        let a = expectation_closed_form(&est, &no_irs, &aux);
        let b = expectation_closed_form(&direct_only, &bf, &aux);
        assert!((a - b).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn expectation_matches_covariance_trace() {
        let (_, est) = desk(15, 0.02);
        let mut r = rng(16);
        let bf = random_bf(&est, 0.7, &mut r);
        let aux = AuxiliaryState {
            u: vec![CMatrix::identity(2, 2).scale(0.5); 2],
            y: (0..2)
                .map(|_| complex_gaussian(2, 2, 1.0, &mut r))
                .collect(),
        };
        let closed = expectation_closed_form(&est, &bf, &aux);
        let mut via = 0.0;
        for k in 0..2 {
            let m = error_covariance(&est, &bf, k);
            via += trace(&(aux.u_bar(k) * aux.y[k].adjoint() * m * &aux.y[k])).re;
        }
        assert!((closed - via).abs() <= 1e-12 * closed.abs());
    }

    #[test]
    fn expectation_monotone_in_kappa() {
        let (_, est) = desk(17, 0.001);
        let mut r = rng(18);
        let bf = random_bf(&est, 1.0, &mut r);
        let aux = AuxiliaryState {
            u: vec![CMatrix::identity(2, 2); 2],
            y: (0..2)
                .map(|_| complex_gaussian(2, 2, 1.0, &mut r))
                .collect(),
        };
        let mut prev = 0.0;
        for kappa in [0.0, 0.001, 0.01, 0.05, 0.2] {
            let v = expectation_closed_form(
                &est.with_error_levels(ErrorLevels::uniform(kappa)),
                &bf,
                &aux,
            );
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn surrogate_trivial_and_real() {
        let (_, est) = desk(19, 0.01);
        let bf = BeamformerSet::zeros(&est, 2, 1.0);
        let aux = AuxiliaryState::zeros(2, 2, 2);
        assert_eq!(surrogate_f1(&est, &bf, &aux).unwrap(), 0.0);

        let mut r = rng(20);
        let bf = random_bf(&est, 1.0, &mut r);
        let x = complex_gaussian(2, 2, 1.0, &mut r);
        let aux = AuxiliaryState {
            u: vec![&x * x.adjoint(); 2],
            y: (0..2)
                .map(|_| complex_gaussian(2, 2, 1e5, &mut r))
                .collect(),
        };
        let f = surrogate_f1_complex(&est, &bf, &aux).unwrap();
        assert!(f.im.abs() <= 1e-10 * f.re.abs().max(1.0), "{f}");
    }
}
