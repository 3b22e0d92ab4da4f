//! Experiment driver: config loading, seeded multi-realization sweeps over
//! one parameter, scheme comparison and result output.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{initial_beamformers, run_bcd, SolverConfig};
use crate::rate::{avg_sum_rate_mc, nats_to_bits};
use crate::scenario::{dbm_to_watts, generate_channels, ErrorLevels, Placement, SystemConfig};

const STREAM_CHANNELS: u64 = 0;
const STREAM_INIT: u64 = 1;
const STREAM_EVAL: u64 = 2;

/// Design variants compared in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "continuous")]
    Continuous,
    #[serde(rename = "2bit")]
    TwoBit,
    #[serde(rename = "1bit")]
    OneBit,
    /// IRSs switched off (`alpha = 0`).
    #[serde(rename = "conventional")]
    Conventional,
    /// Perfect CSI at design and evaluation time.
    #[serde(rename = "upper_bound")]
    UpperBound,
    /// Robust design with the configured phase resolution `b`.
    #[serde(rename = "rjd")]
    Rjd,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Continuous,
        Scheme::TwoBit,
        Scheme::OneBit,
        Scheme::Conventional,
        Scheme::UpperBound,
        Scheme::Rjd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Continuous => "continuous",
            Scheme::TwoBit => "2bit",
            Scheme::OneBit => "1bit",
            Scheme::Conventional => "conventional",
            Scheme::UpperBound => "upper_bound",
            Scheme::Rjd => "rjd",
        }
    }

    /// System config the scheme designs with.
    fn design_config(self, base: &SystemConfig) -> SystemConfig {
        let mut cfg = base.clone();
        match self {
            Scheme::Continuous => cfg.phase_bits = 0,
            Scheme::TwoBit => cfg.phase_bits = 2,
            Scheme::OneBit => cfg.phase_bits = 1,
            Scheme::Conventional => {
                cfg.alpha = 0.0;
                cfg.phase_bits = 0;
            }
            Scheme::UpperBound => {
                cfg.phase_bits = 0;
                cfg.set_kappa2(0.0);
            }
            Scheme::Rjd => {}
        }
        cfg
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s.trim())
            .ok_or_else(|| {
                Error::config(
                    "schemes",
                    format!("unknown scheme `{s}` (expected continuous, 2bit, 1bit, conventional, upper_bound or rjd)"),
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    #[serde(rename = "kappa2")]
    Kappa2,
    #[serde(rename = "N")]
    Elements,
    #[serde(rename = "chi")]
    Chi,
    #[serde(rename = "irs_pathloss_exponent")]
    IrsPathLossExponent,
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "b")]
    Bits,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Kappa2 => "kappa2",
            SweepParam::Elements => "N",
            SweepParam::Chi => "chi",
            SweepParam::IrsPathLossExponent => "irs_pathloss_exponent",
            SweepParam::Alpha => "alpha",
            SweepParam::Bits => "b",
        }
    }

    fn apply(self, cfg: &mut SystemConfig, value: f64) -> Result<()> {
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::config(
                    self.name(),
                    format!("sweep value {v} is not a count"),
                ))
            }
        };
        match self {
            SweepParam::Kappa2 => cfg.set_kappa2(value),
            SweepParam::Elements => cfg.irs_elements = count(value)?,
            SweepParam::Chi => cfg.chi = value,
            SweepParam::IrsPathLossExponent => {
                cfg.ple_ap_irs = value;
                cfg.ple_irs_ue = value;
            }
            SweepParam::Alpha => cfg.alpha = value,
            SweepParam::Bits => cfg.phase_bits = count(value)? as u32,
        }
        cfg.validate()
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = [
            SweepParam::Kappa2,
            SweepParam::Elements,
            SweepParam::Chi,
            SweepParam::IrsPathLossExponent,
            SweepParam::Alpha,
            SweepParam::Bits,
        ];
        all.into_iter().find(|p| p.name() == s.trim()).ok_or_else(|| {
            Error::config(
                "sweep",
                format!("unknown sweep variable `{s}` (expected kappa2, N, chi, irs_pathloss_exponent, alpha or b)"),
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl FromStr for Sweep {
    type Err = Error;

    /// `NAME=v1,v2,...`
    fn from_str(s: &str) -> Result<Self> {
        let (name, list) = s
            .split_once('=')
            .ok_or_else(|| Error::config("sweep", "expected NAME=v1,v2,..."))?;
        let param = name.parse()?;
        let values = list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config("sweep", format!("`{v}` is not a number")))
            })
            .collect::<Result<Vec<_>>>()?;
        let sweep = Sweep { param, values };
        sweep.check()?;
        Ok(sweep)
    }
}

impl Sweep {
    fn check(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::config("sweep_values", "grid must not be empty"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("sweep_values", "values must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OutputFormat {
    #[default]
    #[serde(rename = "csv")]
    Csv,
    /// One JSON object per line.
    #[serde(rename = "records")]
    Records,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "csv" => Ok(OutputFormat::Csv),
            "records" => Ok(OutputFormat::Records),
            other => Err(Error::config(
                "format",
                format!("unknown format `{other}` (csv or records)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    /// Without a sweep the base config is run once.
    pub sweep: Option<Sweep>,
    pub realizations: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            base: SystemConfig::default(),
            sweep: None,
            realizations: 20,
            seed: 0,
            schemes: vec![
                Scheme::Continuous,
                Scheme::TwoBit,
                Scheme::OneBit,
                Scheme::Conventional,
                Scheme::UpperBound,
            ],
            output: None,
            format: OutputFormat::Csv,
            threads: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.realizations == 0 {
            return Err(Error::config("realizations", "must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "must name at least one scheme"));
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        if let Some(sweep) = &self.sweep {
            sweep.check()?;
            for &v in &sweep.values {
                sweep.param.apply(&mut self.base.clone(), v)?;
            }
        }
        Ok(())
    }

    /// `(param name, value, config)` for every grid point.
    fn grid(&self) -> Result<Vec<(&'static str, f64, SystemConfig)>> {
        match &self.sweep {
            None => Ok(vec![("none", 0.0, self.base.clone())]),
            Some(sweep) => sweep
                .values
                .iter()
                .map(|&v| {
                    let mut cfg = self.base.clone();
                    sweep.param.apply(&mut cfg, v)?;
                    Ok((sweep.param.name(), v, cfg))
                })
                .collect(),
        }
    }
}

/// Flat config file; every key optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(rename = "L")]
    num_aps: Option<usize>,
    #[serde(rename = "R")]
    num_irs: Option<usize>,
    #[serde(rename = "K")]
    num_ues: Option<usize>,
    #[serde(rename = "M_B")]
    ap_antennas: Option<usize>,
    #[serde(rename = "M_U")]
    ue_antennas: Option<usize>,
    #[serde(rename = "N")]
    irs_elements: Option<usize>,
    #[serde(rename = "N_h")]
    irs_horizontal: Option<usize>,
    d: Option<usize>,
    alpha: Option<f64>,
    #[serde(rename = "P_max_l")]
    p_max: Option<f64>,
    #[serde(rename = "sigma2_dBm")]
    noise_dbm: Option<f64>,
    kappa2: Option<f64>,
    #[serde(rename = "kappa2_D")]
    kappa2_d: Option<f64>,
    #[serde(rename = "kappa2_G")]
    kappa2_g: Option<f64>,
    #[serde(rename = "kappa2_S")]
    kappa2_s: Option<f64>,
    #[serde(rename = "beta_G")]
    beta_g: Option<f64>,
    #[serde(rename = "beta_S")]
    beta_s: Option<f64>,
    #[serde(rename = "C0_dB")]
    c0_db: Option<f64>,
    d0: Option<f64>,
    #[serde(rename = "p_D")]
    p_d: Option<f64>,
    #[serde(rename = "p_S")]
    p_s: Option<f64>,
    #[serde(rename = "p_G")]
    p_g: Option<f64>,
    b: Option<u32>,
    chi: Option<f64>,
    eps: Option<f64>,
    max_iters: Option<usize>,
    mc_samples: Option<usize>,
    ap_positions: Option<Vec<[f64; 3]>>,
    irs_positions: Option<Vec<[f64; 3]>>,
    sweep_param: Option<String>,
    sweep_values: Option<Vec<f64>>,
    realizations: Option<usize>,
    seed: Option<u64>,
    schemes: Option<Vec<String>>,
    output: Option<PathBuf>,
    format: Option<String>,
    threads: Option<usize>,
}

impl RawConfig {
    fn into_spec(self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::default();
        let cfg = &mut spec.base;
        macro_rules! set {
            ($($raw:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = self.$raw { cfg.$field = v; })*
            };
        }
        set!(
            num_aps => num_aps,
            num_irs => num_irs,
            num_ues => num_ues,
            ap_antennas => ap_antennas,
            ue_antennas => ue_antennas,
            irs_elements => irs_elements,
            irs_horizontal => irs_horizontal,
            alpha => alpha,
            p_max => p_max,
            beta_g => beta_g,
            beta_s => beta_s,
            c0_db => c0_db,
            d0 => d0,
            p_d => ple_direct,
            p_s => ple_ap_irs,
            p_g => ple_irs_ue,
            b => phase_bits,
            chi => chi,
            eps => eps,
            max_iters => max_iters,
            mc_samples => mc_samples,
        );
        cfg.streams = self.d.unwrap_or(cfg.ue_antennas);
        if let Some(dbm) = self.noise_dbm {
            cfg.noise_power = dbm_to_watts(dbm);
        }
        if let Some(k) = self.kappa2 {
            if !(0.0..1.0).contains(&k) {
                return Err(Error::config("kappa2", "must lie in [0, 1)"));
            }
            cfg.set_kappa2(k);
        }
        set!(kappa2_d => kappa2_d, kappa2_g => kappa2_g, kappa2_s => kappa2_s);
        cfg.ap_positions = self.ap_positions;
        cfg.irs_positions = self.irs_positions;

        spec.sweep = match (self.sweep_param, self.sweep_values) {
            (None, None) => None,
            (Some(p), Some(values)) => Some(Sweep {
                param: p.parse()?,
                values,
            }),
            _ => {
                return Err(Error::config(
                    "sweep_param",
                    "sweep_param and sweep_values must be given together",
                ))
            }
        };
        if let Some(r) = self.realizations {
            spec.realizations = r;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(list) = self.schemes {
            spec.schemes = list.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        spec.output = self.output;
        if let Some(f) = self.format {
            spec.format = f.parse()?;
        }
        spec.threads = self.threads;
        spec.validate()?;
        Ok(spec)
    }
}

/// Parses config text; unset keys take the default scenario values.
pub fn parse_config(text: &str, origin: &Path) -> Result<ExperimentSpec> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    raw.into_spec()
}

pub fn load_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub sweep_param: String,
    pub sweep_value: f64,
    pub scheme: Scheme,
    /// Bits per channel use.
    pub mean_rate: f64,
    pub std_err: Option<f64>,
    pub n_realizations: usize,
    pub mean_iters: f64,
    pub wall_time_s: f64,
    /// Rate of each realization in index order.
    #[serde(skip)]
    pub per_realization: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    rate_bits: f64,
    iterations: usize,
    seconds: f64,
}

fn stream_rng(seed: u64, realization: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization as u64 * 4 + purpose);
    rng
}

fn run_realization(
    cfg: &SystemConfig,
    schemes: &[Scheme],
    seed: u64,
    index: usize,
) -> Result<Vec<Outcome>> {
    let mut channel_rng = stream_rng(seed, index, STREAM_CHANNELS);
    let placement = Placement::draw(cfg, &mut channel_rng);
    let est = generate_channels(cfg, &placement, &mut channel_rng)?;
    schemes
        .iter()
        .map(|&scheme| {
            let start = Instant::now();
            let design = scheme.design_config(cfg);
            let design_est = if scheme == Scheme::UpperBound {
                est.with_error_levels(ErrorLevels::PERFECT)
            } else {
                est.clone()
            };
            let solver = SolverConfig::from_system(&design);
            let init = initial_beamformers(
                &design_est,
                cfg.streams,
                &solver,
                &mut stream_rng(seed, index, STREAM_INIT),
            );
            let out = run_bcd(&design_est, &solver, init)?;
            let rate = avg_sum_rate_mc(
                &design_est,
                &out.beamformers,
                &mut stream_rng(seed, index, STREAM_EVAL),
                cfg.mc_samples,
            )?;
            Ok(Outcome {
                rate_bits: nats_to_bits(rate.mean),
                iterations: out.trace.iterations.len(),
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

fn execute(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for (param, value, cfg) in spec.grid()? {
        let per_realization: Vec<Vec<Outcome>> = (0..spec.realizations)
            .into_par_iter()
            .map(|i| {
                run_realization(&cfg, &spec.schemes, spec.seed, i).map_err(|e| Error::Realization {
                    realization: i,
                    source: Box::new(e),
                })
            })
            .collect::<Result<_>>()?;
        let n = spec.realizations;
        for (s, &scheme) in spec.schemes.iter().enumerate() {
            let rates: Vec<f64> = per_realization.iter().map(|o| o[s].rate_bits).collect();
            let mean = rates.iter().sum::<f64>() / n as f64;
            let std_err = (n >= 2).then(|| {
                let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                (var / n as f64).sqrt()
            });
            rows.push(ResultRow {
                sweep_param: param.to_string(),
                sweep_value: value,
                scheme,
                mean_rate: mean,
                std_err,
                n_realizations: n,
                mean_iters: per_realization
                    .iter()
                    .map(|o| o[s].iterations as f64)
                    .sum::<f64>()
                    / n as f64,
                wall_time_s: per_realization.iter().map(|o| o[s].seconds).sum(),
                per_realization: rates,
            });
        }
    }
    Ok(rows)
}

/// Runs every (grid value, scheme, realization) combination. Realization `i`
/// draws its placement, channels, initial point and evaluation errors from
/// streams keyed by `(seed, i)` only, so all schemes and grid values share
/// them and results do not depend on the thread count.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    match spec.threads {
        None => execute(spec),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?;
            pool.install(|| execute(spec))
        }
    }
}

/// Six significant digits, `%g` style.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if !(-4..6).contains(&exp) {
        format!(
            "{}e{}{:02}",
            trim(mantissa.to_string()),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    }
}

pub const CSV_HEADER: &str =
    "sweep_param,sweep_value,scheme,mean_rate,std_err,n_realizations,mean_iters,wall_time_s";

/// Renders rows in the requested format.
pub fn render_results(rows: &[ResultRow], format: OutputFormat) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyResults);
    }
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    r.sweep_param,
                    r.sweep_value,
                    r.scheme,
                    format_sig6(r.mean_rate),
                    r.std_err.map(format_sig6).unwrap_or_default(),
                    r.n_realizations,
                    format_sig6(r.mean_iters),
                    format_sig6(r.wall_time_s),
                ));
            }
        }
        OutputFormat::Records => {
            for r in rows {
                let line = serde_json::to_string(r).map_err(|e| Error::Parse {
                    path: PathBuf::from("<records>"),
                    message: e.to_string(),
                })?;
                out.push_str(&line);
                out.push('\n');
            }
        }
    }
    Ok(out)
}

/// Writes rows to `path`; nothing is created when `rows` is empty.
pub fn write_results(rows: &[ResultRow], path: &Path, format: OutputFormat) -> Result<()> {
    let text = render_results(rows, format)?;
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(rate: f64) -> ResultRow {
        ResultRow {
            sweep_param: "kappa2".into(),
            sweep_value: 0.01,
            scheme: Scheme::Continuous,
            mean_rate: rate,
            std_err: Some(0.0123456789),
            n_realizations: 3,
            mean_iters: 7.0,
            wall_time_s: 0.5,
            per_realization: vec![rate; 3],
        }
    }

    #[test]
    fn empty_config_gives_defaults() {
        let spec = parse_config("", Path::new("empty.toml")).unwrap();
        assert_eq!(spec.base, SystemConfig::default());
        assert_eq!(spec.realizations, 20);
        assert!(spec.sweep.is_none());
        assert!((spec.base.noise_power - 1e-12).abs() < 1e-24);
        assert_eq!(spec.base.streams, 2);
    }

    #[test]
    fn overrides_and_errors() {
        let spec = parse_config("N = 50\nN_h = 10\n", Path::new("x")).unwrap();
        assert_eq!(spec.base.irs_elements, 50);
        assert_eq!(spec.base.num_aps, 6);

        let err = parse_config("kappa2 = 1.5\n", Path::new("x")).unwrap_err();
        assert!(
            matches!(err, Error::InvalidConfig { ref field, .. } if field == "kappa2"),
            "{err}"
        );
        let err = parse_config("kappa2_G = -0.1\n", Path::new("x")).unwrap_err();
        assert!(
            matches!(err, Error::InvalidConfig { ref field, .. } if field == "kappa2_G"),
            "{err}"
        );
        assert!(matches!(
            parse_config("bogus = 1\n", Path::new("x")),
            Err(Error::Parse { .. })
        ));
        assert!(parse_config("L = [\n", Path::new("x")).is_err());
        assert!(parse_config("schemes = [\"fancy\"]\n", Path::new("x")).is_err());
        assert!(parse_config(
            "sweep_param = \"N\"\nsweep_values = [3.0]\n",
            Path::new("x")
        )
        .is_err());
        assert!(parse_config("sweep_param = \"N\"\n", Path::new("x")).is_err());
    }

    #[test]
    fn per_family_kappa_overrides_shared() {
        let spec = parse_config("kappa2 = 0.01\nkappa2_S = 0.02\n", Path::new("x")).unwrap();
        assert_eq!(spec.base.kappa2_d, 0.01);
        assert_eq!(spec.base.kappa2_g, 0.01);
        assert_eq!(spec.base.kappa2_s, 0.02);
    }

    #[test]
    fn sweep_parsing() {
        let s: Sweep = "kappa2=0.001, 0.01,0.05".parse().unwrap();
        assert_eq!(s.param, SweepParam::Kappa2);
        assert_eq!(s.values, vec![0.001, 0.01, 0.05]);
        assert!("kappa2".parse::<Sweep>().is_err());
        assert!("gamma=1".parse::<Sweep>().is_err());
        assert!("N=4,x".parse::<Sweep>().is_err());
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(12.3456789), "12.3457");
        assert_eq!(format_sig6(0.000123456789), "0.000123457");
        assert_eq!(format_sig6(1.5e-7), "1.5e-07");
        assert_eq!(format_sig6(1234567.0), "1.23457e+06");
        assert_eq!(format_sig6(100.0), "100");
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(-2.5), "-2.5");
        assert_eq!(format_sig6(999999.6), "1e+06");
    }

    #[test]
    fn csv_layout() {
        let text = render_results(&[row(12.3456789)], OutputFormat::Csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "kappa2,0.01,continuous,12.3457,0.0123457,3,7,0.5");
        let mut single = row(1.0);
        single.std_err = None;
        let text = render_results(&[single], OutputFormat::Csv).unwrap();
        assert!(text.lines().nth(1).unwrap().contains("continuous,1,,"));
    }

    #[test]
    fn records_layout() {
        let text = render_results(&[row(2.0), row(3.0)], OutputFormat::Records).unwrap();
        let parsed: Vec<serde_json::Value> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[1]["mean_rate"], 3.0);
        assert_eq!(parsed[0]["scheme"], "continuous");
    }

    #[test]
    fn empty_rows_create_nothing() {
        let dir = std::env::temp_dir().join(format!("irs-empty-{}", std::process::id()));
        assert!(matches!(
            write_results(&[], &dir, OutputFormat::Csv),
            Err(Error::EmptyResults)
        ));
        assert!(!dir.exists());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
    }
}
