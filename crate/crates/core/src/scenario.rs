//! Network geometry, large-scale path loss, small-scale fading and the
//! statistical CSI error model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matops::{complex_gaussian, fro_sq, kron, vec, vstack, CMatrix, CVector};

pub const AP_HEIGHT: f64 = 3.0;
pub const IRS_HEIGHT: f64 = 6.0;
pub const UE_HEIGHT: f64 = 1.5;
pub const UE_CLUSTER_Y: f64 = 100.0;
pub const UE_CLUSTER_RADIUS: f64 = 10.0;
/// Rician factor used to stand in for a pure line-of-sight link.
pub const PURE_LOS_BETA: f64 = 1e12;

/// Scalar parameters of one simulated network, in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub num_aps: usize,
    pub num_irs: usize,
    pub num_ues: usize,
    pub ap_antennas: usize,
    pub ue_antennas: usize,
    /// Phase shifters per IRS.
    pub irs_elements: usize,
    /// Phase shifters along the horizontal axis of each IRS.
    pub irs_horizontal: usize,
    /// Data streams per (AP, UE) link.
    pub streams: usize,
    /// Reflecting efficiency, the modulus of every phase-shift coefficient.
    pub alpha: f64,
    /// Per-AP transmit power budget in watts.
    pub p_max: f64,
    /// Per-UE noise power in watts.
    pub noise_power: f64,
    pub kappa2_d: f64,
    pub kappa2_g: f64,
    pub kappa2_s: f64,
    pub beta_g: f64,
    pub beta_s: f64,
    pub c0_db: f64,
    pub d0: f64,
    /// Path-loss exponent of the direct AP-UE links.
    pub ple_direct: f64,
    /// Path-loss exponent of the AP-IRS links.
    pub ple_ap_irs: f64,
    /// Path-loss exponent of the IRS-UE links.
    pub ple_irs_ue: f64,
    /// Phase resolution in bits; 0 means continuous phases.
    pub phase_bits: u32,
    /// Abscissa of the UE cluster center.
    pub chi: f64,
    /// Convergence threshold of the outer solver.
    pub eps: f64,
    pub max_iters: usize,
    pub mc_samples: usize,
    pub ap_positions: Option<Vec<[f64; 3]>>,
    pub irs_positions: Option<Vec<[f64; 3]>>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_aps: 6,
            num_irs: 3,
            num_ues: 4,
            ap_antennas: 4,
            ue_antennas: 2,
            irs_elements: 20,
            irs_horizontal: 10,
            streams: 2,
            alpha: 1.0,
            p_max: 0.1,
            noise_power: dbm_to_watts(-90.0),
            kappa2_d: 0.001,
            kappa2_g: 0.001,
            kappa2_s: 0.001,
            beta_g: 3.0,
            beta_s: 3.0,
            c0_db: -30.0,
            d0: 1.0,
            ple_direct: 3.75,
            ple_ap_irs: 2.2,
            ple_irs_ue: 2.2,
            phase_bits: 0,
            chi: 100.0,
            eps: 1e-4,
            max_iters: 200,
            mc_samples: 1000,
            ap_positions: None,
            irs_positions: None,
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl SystemConfig {
    pub fn error_levels(&self) -> ErrorLevels {
        ErrorLevels {
            kappa2_d: self.kappa2_d,
            kappa2_g: self.kappa2_g,
            kappa2_s: self.kappa2_s,
        }
    }

    pub fn set_kappa2(&mut self, kappa2: f64) {
        self.kappa2_d = kappa2;
        self.kappa2_g = kappa2;
        self.kappa2_s = kappa2;
    }

    /// Total number of phase shifters, `R·N`.
    pub fn total_elements(&self) -> usize {
        self.num_irs * self.irs_elements
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("L", self.num_aps),
            ("R", self.num_irs),
            ("K", self.num_ues),
            ("M_B", self.ap_antennas),
            ("M_U", self.ue_antennas),
            ("N", self.irs_elements),
            ("N_h", self.irs_horizontal),
            ("d", self.streams),
            ("max_iters", self.max_iters.max(1)),
            ("mc_samples", self.mc_samples),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::config(name, "must be at least 1"));
            }
        }
        if self.streams > self.ap_antennas.min(self.ue_antennas) {
            return Err(Error::config("d", "must not exceed min(M_B, M_U)"));
        }
        if !self.irs_elements.is_multiple_of(self.irs_horizontal) {
            return Err(Error::config("N_h", "must divide N"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("alpha", "must lie in [0, 1]"));
        }
        for (name, k) in [
            ("kappa2_D", self.kappa2_d),
            ("kappa2_G", self.kappa2_g),
            ("kappa2_S", self.kappa2_s),
        ] {
            if !(0.0..1.0).contains(&k) {
                return Err(Error::config(name, "must lie in [0, 1)"));
            }
        }
        for (name, v) in [
            ("P_max", self.p_max),
            ("sigma2", self.noise_power),
            ("d0", self.d0),
            ("eps", self.eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be positive and finite"));
            }
        }
        for (name, v) in [
            ("beta_G", self.beta_g),
            ("beta_S", self.beta_s),
            ("p_D", self.ple_direct),
            ("p_S", self.ple_ap_irs),
            ("p_G", self.ple_irs_ue),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, "must be non-negative and finite"));
            }
        }
        if !self.c0_db.is_finite() || !self.chi.is_finite() {
            return Err(Error::config("C0_dB/chi", "must be finite"));
        }
        if self.phase_bits > 16 {
            return Err(Error::config("b", "at most 16 bits supported"));
        }
        if let Some(p) = &self.ap_positions {
            if p.len() != self.num_aps {
                return Err(Error::config("ap_positions", "needs exactly L entries"));
            }
        }
        if let Some(p) = &self.irs_positions {
            if p.len() != self.num_irs {
                return Err(Error::config("irs_positions", "needs exactly R entries"));
            }
        }
        Ok(())
    }
}

/// Normalized CSI error levels `κ²` for the three channel families.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorLevels {
    pub kappa2_d: f64,
    pub kappa2_g: f64,
    pub kappa2_s: f64,
}

impl ErrorLevels {
    pub const PERFECT: ErrorLevels = ErrorLevels {
        kappa2_d: 0.0,
        kappa2_g: 0.0,
        kappa2_s: 0.0,
    };

    pub fn uniform(kappa2: f64) -> Self {
        Self {
            kappa2_d: kappa2,
            kappa2_g: kappa2,
            kappa2_s: kappa2,
        }
    }
}

pub type Point = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub ap_positions: Vec<Point>,
    pub irs_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
}

fn spread(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    if count == 1 {
        return vec![(lo + hi) / 2.0];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

impl Placement {
    /// Default AP row along `y = 0` spanning `x ∈ [0, 200]`, IRS row along
    /// `y = 110` spanning `x ∈ [50, 150]`, unless the config fixes them.
    pub fn infrastructure(cfg: &SystemConfig) -> (Vec<Point>, Vec<Point>) {
        let aps = cfg.ap_positions.clone().unwrap_or_else(|| {
            spread(cfg.num_aps, 0.0, 200.0)
                .into_iter()
                .map(|x| [x, 0.0, AP_HEIGHT])
                .collect()
        });
        let irs = cfg.irs_positions.clone().unwrap_or_else(|| {
            spread(cfg.num_irs, 50.0, 150.0)
                .into_iter()
                .map(|x| [x, 110.0, IRS_HEIGHT])
                .collect()
        });
        (aps, irs)
    }

    /// Fixed infrastructure plus UEs drawn uniformly in the disc of radius
    /// 10 m centered at `(chi, 100)`.
    pub fn draw<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Self {
        let (ap_positions, irs_positions) = Self::infrastructure(cfg);
        let ue_positions = (0..cfg.num_ues)
            .map(|_| {
                let r = UE_CLUSTER_RADIUS * rng.random::<f64>().sqrt();
                let phi = 2.0 * PI * rng.random::<f64>();
                [
                    cfg.chi + r * phi.cos(),
                    UE_CLUSTER_Y + r * phi.sin(),
                    UE_HEIGHT,
                ]
            })
            .collect();
        Self {
            ap_positions,
            irs_positions,
            ue_positions,
        }
    }
}

fn distance(a: &Point, b: &Point) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Linear large-scale power gain `C0 (d/d0)^(−p)`.
pub fn path_loss(distance: f64, exponent: f64, c0_db: f64, d0: f64) -> Result<f64> {
    if distance.is_nan() || distance <= 0.0 {
        return Err(Error::NonPositiveDistance(distance));
    }
    Ok(10f64.powf(c0_db / 10.0) * (distance / d0).powf(-exponent))
}

/// Half-wavelength ULA response `[e^{jπ m sin(angle)}]_{m=0..count}`.
pub fn steering_ula(count: usize, angle: f64) -> CVector {
    let u = angle.sin();
    CVector::from_fn(count, |m, _| Complex64::from_polar(1.0, PI * m as f64 * u))
}

/// Half-wavelength UPA response, `a_h ⊗ a_v`, with the horizontal factor
/// driven by `sin(az) cos(el)` and the vertical factor by `sin(el)`.
pub fn steering_upa(n_h: usize, n_v: usize, azimuth: f64, elevation: f64) -> CVector {
    let uh = azimuth.sin() * elevation.cos();
    let uv = elevation.sin();
    let ah = CMatrix::from_fn(n_h, 1, |m, _| {
        Complex64::from_polar(1.0, PI * m as f64 * uh)
    });
    let av = CMatrix::from_fn(n_v, 1, |m, _| {
        Complex64::from_polar(1.0, PI * m as f64 * uv)
    });
    vec(&kron(&ah, &av))
}

/// ULA (axis along x) response toward `to` as seen from `from`.
fn ula_towards(count: usize, from: &Point, to: &Point) -> CVector {
    let dist = distance(from, to);
    steering_ula(count, ((to[0] - from[0]) / dist).clamp(-1.0, 1.0).asin())
}

/// UPA (in the x-z plane, broadside along y) response toward `to`.
fn upa_towards(n_h: usize, n_v: usize, from: &Point, to: &Point) -> CVector {
    let (dx, dy, dz) = (to[0] - from[0], to[1] - from[1], to[2] - from[2]);
    let dist = distance(from, to);
    let el = (dz / dist).clamp(-1.0, 1.0).asin();
    let az = dx.atan2(dy);
    steering_upa(n_h, n_v, az, el)
}

fn rician<R: Rng + ?Sized>(los: &CMatrix, beta: f64, gain: f64, rng: &mut R) -> CMatrix {
    let nlos = complex_gaussian(los.nrows(), los.ncols(), 1.0, rng);
    let los_w = (beta / (1.0 + beta)).sqrt();
    let nlos_w = (1.0 / (1.0 + beta)).sqrt();
    (los.scale(los_w) + nlos.scale(nlos_w)).scale(gain.sqrt())
}

/// Estimated channels and the CSI error variances derived from them.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    /// `[l][k]`, `M_B × M_U`.
    pub d_hat: Vec<Vec<CMatrix>>,
    /// `[r][k]`, `N × M_U`.
    pub g_hat: Vec<Vec<CMatrix>>,
    /// `[l][r]`, `N × M_B`.
    pub s_hat: Vec<Vec<CMatrix>>,
    /// `[k]`, per-IRS blocks of `g_hat` stacked by rows, `RN × M_U`.
    pub g_stacked: Vec<CMatrix>,
    /// `[l]`, per-IRS blocks of `s_hat` stacked by rows, `RN × M_B`.
    pub s_stacked: Vec<CMatrix>,
    /// `[l][k]`
    pub delta2_d: Vec<Vec<f64>>,
    /// `[k]`, from the stacked `g_stacked[k]`.
    pub delta2_g: Vec<f64>,
    /// `[l]`, from the stacked `s_stacked[l]`.
    pub delta2_s: Vec<f64>,
    pub levels: ErrorLevels,
    pub noise_power: f64,
}

impl ChannelEstimate {
    /// Builds the stacked forms and error variances from per-link blocks.
    pub fn from_blocks(
        d_hat: Vec<Vec<CMatrix>>,
        g_hat: Vec<Vec<CMatrix>>,
        s_hat: Vec<Vec<CMatrix>>,
        noise_power: f64,
        levels: ErrorLevels,
    ) -> Result<Self> {
        let num_aps = d_hat.len();
        let num_irs = g_hat.len();
        let num_ues = d_hat.first().map_or(0, |row| row.len());
        if num_aps == 0 || num_irs == 0 || num_ues == 0 {
            return Err(Error::config(
                "channels",
                "need at least one AP, IRS and UE",
            ));
        }
        if s_hat.len() != num_aps
            || s_hat.iter().any(|row| row.len() != num_irs)
            || g_hat.iter().any(|row| row.len() != num_ues)
            || d_hat.iter().any(|row| row.len() != num_ues)
        {
            return Err(Error::config("channels", "inconsistent link counts"));
        }
        let g_stacked = (0..num_ues)
            .map(|k| vstack(&g_hat.iter().map(|row| row[k].clone()).collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        let s_stacked = s_hat
            .iter()
            .map(|row| vstack(row))
            .collect::<Result<Vec<_>>>()?;
        let (ma, mu) = d_hat[0][0].shape();
        let rn = g_stacked[0].nrows();
        for (k, g) in g_stacked.iter().enumerate() {
            if g.shape() != (rn, mu) {
                return Err(Error::Shape {
                    op: "g_hat",
                    left: (rn, mu),
                    right: (k, g.ncols()),
                });
            }
        }
        for s in &s_stacked {
            if s.shape() != (rn, ma) {
                return Err(Error::Shape {
                    op: "s_hat",
                    left: (rn, ma),
                    right: s.shape(),
                });
            }
        }
        let mut est = Self {
            d_hat,
            g_hat,
            s_hat,
            g_stacked,
            s_stacked,
            delta2_d: Vec::new(),
            delta2_g: Vec::new(),
            delta2_s: Vec::new(),
            levels,
            noise_power,
        };
        est.set_error_levels(levels);
        Ok(est)
    }

    /// Recomputes `δ² = κ² ‖vec(·)‖²` for new error levels.
    pub fn set_error_levels(&mut self, levels: ErrorLevels) {
        self.levels = levels;
        self.delta2_d = self
            .d_hat
            .iter()
            .map(|row| row.iter().map(|d| levels.kappa2_d * fro_sq(d)).collect())
            .collect();
        self.delta2_g = self
            .g_stacked
            .iter()
            .map(|g| levels.kappa2_g * fro_sq(g))
            .collect();
        self.delta2_s = self
            .s_stacked
            .iter()
            .map(|s| levels.kappa2_s * fro_sq(s))
            .collect();
    }

    pub fn with_error_levels(&self, levels: ErrorLevels) -> Self {
        let mut out = self.clone();
        out.set_error_levels(levels);
        out
    }

    pub fn num_aps(&self) -> usize {
        self.d_hat.len()
    }

    pub fn num_irs(&self) -> usize {
        self.g_hat.len()
    }

    pub fn num_ues(&self) -> usize {
        self.d_hat[0].len()
    }

    pub fn ap_antennas(&self) -> usize {
        self.d_hat[0][0].nrows()
    }

    pub fn ue_antennas(&self) -> usize {
        self.d_hat[0][0].ncols()
    }

    /// Phase shifters per IRS.
    pub fn irs_elements(&self) -> usize {
        self.g_hat[0][0].nrows()
    }

    /// `R·N`.
    pub fn total_elements(&self) -> usize {
        self.g_stacked[0].nrows()
    }
}

/// Draws estimated channels for `placement`: Rayleigh direct links, Rician
/// AP-IRS and IRS-UE links with geometric LOS components.
pub fn generate_channels<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    placement: &Placement,
    rng: &mut R,
) -> Result<ChannelEstimate> {
    let n_v = cfg.irs_elements / cfg.irs_horizontal;
    let pl = |a: &Point, b: &Point, p: f64| path_loss(distance(a, b), p, cfg.c0_db, cfg.d0);

    let mut d_hat = Vec::with_capacity(cfg.num_aps);
    for ap in &placement.ap_positions {
        let mut row = Vec::with_capacity(cfg.num_ues);
        for ue in &placement.ue_positions {
            let gain = pl(ap, ue, cfg.ple_direct)?;
            row.push(complex_gaussian(
                cfg.ap_antennas,
                cfg.ue_antennas,
                gain,
                rng,
            ));
        }
        d_hat.push(row);
    }

    let mut g_hat = Vec::with_capacity(cfg.num_irs);
    for irs in &placement.irs_positions {
        let mut row = Vec::with_capacity(cfg.num_ues);
        for ue in &placement.ue_positions {
            let gain = pl(irs, ue, cfg.ple_irs_ue)?;
            let a_irs = upa_towards(cfg.irs_horizontal, n_v, irs, ue);
            let a_ue = ula_towards(cfg.ue_antennas, ue, irs);
            let los = &a_irs * a_ue.adjoint();
            row.push(rician(&los, cfg.beta_g, gain, rng));
        }
        g_hat.push(row);
    }

    let mut s_hat = Vec::with_capacity(cfg.num_aps);
    for ap in &placement.ap_positions {
        let mut row = Vec::with_capacity(cfg.num_irs);
        for irs in &placement.irs_positions {
            let gain = pl(ap, irs, cfg.ple_ap_irs)?;
            let a_irs = upa_towards(cfg.irs_horizontal, n_v, irs, ap);
            let a_ap = ula_towards(cfg.ap_antennas, ap, irs);
            let los = &a_irs * a_ap.adjoint();
            row.push(rician(&los, cfg.beta_s, gain, rng));
        }
        s_hat.push(row);
    }

    ChannelEstimate::from_blocks(d_hat, g_hat, s_hat, cfg.noise_power, cfg.error_levels())
}

/// One draw of the additive CSI errors.
#[derive(Debug, Clone)]
pub struct ErrorSample {
    /// `[l][k]`
    pub d_bar: Vec<Vec<CMatrix>>,
    /// `[r][k]`
    pub g_bar: Vec<Vec<CMatrix>>,
    /// `[l][r]`
    pub s_bar: Vec<Vec<CMatrix>>,
    /// `[k]`, stacked like `ChannelEstimate::g_stacked`.
    pub g_stacked: Vec<CMatrix>,
    /// `[l]`, stacked like `ChannelEstimate::s_stacked`.
    pub s_stacked: Vec<CMatrix>,
}

impl ErrorSample {
    /// All-zero errors with the shapes of `est`.
    pub fn zero(est: &ChannelEstimate) -> Self {
        let z = |m: &CMatrix| CMatrix::zeros(m.nrows(), m.ncols());
        let zz = |rows: &Vec<Vec<CMatrix>>| -> Vec<Vec<CMatrix>> {
            rows.iter().map(|r| r.iter().map(z).collect()).collect()
        };
        Self {
            d_bar: zz(&est.d_hat),
            g_bar: zz(&est.g_hat),
            s_bar: zz(&est.s_hat),
            g_stacked: est.g_stacked.iter().map(z).collect(),
            s_stacked: est.s_stacked.iter().map(z).collect(),
        }
    }
}

/// Draws i.i.d. `CN(0, δ²)` errors for every estimated block. IRS-UE blocks
/// of UE `k` share `δ²_G[k]`, AP-IRS blocks of AP `l` share `δ²_S[l]`.
pub fn sample_csi_error<R: Rng + ?Sized>(est: &ChannelEstimate, rng: &mut R) -> ErrorSample {
    let d_bar: Vec<Vec<CMatrix>> = est
        .d_hat
        .iter()
        .zip(&est.delta2_d)
        .map(|(row, vars)| {
            row.iter()
                .zip(vars)
                .map(|(d, &v)| complex_gaussian(d.nrows(), d.ncols(), v, rng))
                .collect()
        })
        .collect();
    let g_bar: Vec<Vec<CMatrix>> = est
        .g_hat
        .iter()
        .map(|row| {
            row.iter()
                .zip(&est.delta2_g)
                .map(|(g, &v)| complex_gaussian(g.nrows(), g.ncols(), v, rng))
                .collect()
        })
        .collect();
    let s_bar: Vec<Vec<CMatrix>> = est
        .s_hat
        .iter()
        .zip(&est.delta2_s)
        .map(|(row, &v)| {
            row.iter()
                .map(|s| complex_gaussian(s.nrows(), s.ncols(), v, rng))
                .collect()
        })
        .collect();
    let g_stacked = (0..est.num_ues())
        .map(|k| vstack(&g_bar.iter().map(|row| row[k].clone()).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()
        .expect("shapes follow the estimate");
    let s_stacked = s_bar
        .iter()
        .map(|row| vstack(row))
        .collect::<Result<Vec<_>>>()
        .expect("shapes follow the estimate");
    ErrorSample {
        d_bar,
        g_bar,
        s_bar,
        g_stacked,
        s_stacked,
    }
}
