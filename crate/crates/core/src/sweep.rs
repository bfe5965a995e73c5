//! Configuration-driven parameter sweeps, derived diagnostics, and CSV output.
//!
//! All physical inputs are ratios to the RC frequency `Ω`, which is fixed to 1.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{negativity, purity, Beta, DensityMatrix};
use crate::engine::DEFAULT_VALIDITY_THRESHOLD;
use crate::error::{Error, Result};
use crate::narrow::{gibbs_direct, mfg_narrow, mfg_zero_width, dn_dgamma2, EffectiveSystem};
use crate::oracle::{reduced_thermal_state, DickeParams, OracleOptions};
use crate::spectral::{
    lambda_sq_for_coupling, reorganization_at_fixed_coupling, KernelMethod, ReservoirKernel,
    SingleMode, SpectralDensity, SpectralFamily,
};
use crate::weak::{mfg_weak_two_qubit, negativity_closed_form, small_splitting_state, WeakCouplingContext};

/// Negativity at or below this counts as zero.
pub const ZERO_NEGATIVITY: f64 = 1e-10;
/// Upper limit on `γ/Ω` at fixed `Ω`.
pub const GAMMA_CAP: f64 = 0.447_212_595_499_957_9; // 1/√5 − 1e-6

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Weak,
    Narrow,
    ZeroWidth,
    Oracle,
    DirectGibbs,
    ClosedForm,
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Method::Weak => "weak",
            Method::Narrow => "narrow",
            Method::ZeroWidth => "zero-width",
            Method::Oracle => "oracle",
            Method::DirectGibbs => "direct-gibbs",
            Method::ClosedForm => "closed-form",
        }
    }

    fn allows_width(&self) -> bool {
        matches!(self, Method::Weak | Method::Narrow | Method::ClosedForm)
    }
}

/// One parameter tuple, in units of `Ω`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub omega_z: f64,
    pub epsilon: f64,
    pub g: f64,
    pub gamma: f64,
    pub temperature: f64,
    /// Overrides the coupling implied by `g` (weak and closed-form methods).
    pub lambda: Option<f64>,
}

impl Point {
    pub fn beta(&self) -> Result<Beta> {
        Beta::from_temperature(self.temperature)
    }

    fn effective_system(&self) -> Result<EffectiveSystem> {
        EffectiveSystem::new(self.omega_z, self.epsilon, self.g, 1.0, self.beta()?)
    }

    /// `λ²`: given directly, or from `g` at fixed `g`, `Ω`.
    pub fn lambda_sq(&self) -> f64 {
        match self.lambda {
            Some(l) => l * l,
            None => lambda_sq_for_coupling(self.g, 1.0, self.gamma, self.omega_z),
        }
    }

    /// Reorganization energy `Q = λ² ω_z`.
    pub fn reorganization(&self) -> f64 {
        match self.lambda {
            Some(l) => l * l * self.omega_z,
            None => reorganization_at_fixed_coupling(self.g, 1.0, self.gamma),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    /// Reservoir density for the weak method.
    pub family: SpectralFamily,
    pub oracle: OracleOptions,
    pub validity_threshold: f64,
    pub grouping_tol: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            family: SpectralFamily::Peaked,
            oracle: OracleOptions::default(),
            validity_threshold: DEFAULT_VALIDITY_THRESHOLD,
            grouping_tol: crate::engine::DEFAULT_GROUPING_TOL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PointResult {
    pub rho: DensityMatrix,
    pub negativity: f64,
    pub purity: f64,
    pub validity: f64,
    pub lambda_sq: f64,
    pub n_max: Option<usize>,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=GAMMA_CAP).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "γ/Ω = {gamma} outside [0, 1/√5) at fixed Ω"
        )));
    }
    Ok(())
}

/// Weak-coupling kernel at fixed `Ω = 1`: the single-mode limit at `γ = 0`.
pub fn weak_kernel(p: &Point, family: SpectralFamily) -> Result<ReservoirKernel> {
    let beta = p.beta()?;
    if p.gamma == 0.0 {
        return ReservoirKernel::single_mode(SingleMode::normalized(1.0, p.omega_z), beta);
    }
    let sd = SpectralDensity::with_rc_frequency(family, 1.0, p.gamma, p.omega_z)?;
    ReservoirKernel::auto(sd, beta)
}

pub fn evaluate_point(method: Method, p: &Point, opts: &EvalOptions) -> Result<PointResult> {
    check_gamma(p.gamma)?;
    if !method.allows_width() && p.gamma != 0.0 {
        return Err(Error::Config(format!("method {} needs γ = 0", method.tag())));
    }
    let beta = p.beta()?;
    let (rho, validity, lambda_sq, n_max) = match method {
        Method::Weak => {
            let kernel = weak_kernel(p, opts.family)?;
            let ctx = WeakCouplingContext::with_kernel(p.omega_z, p.epsilon, p.lambda_sq(), kernel)?;
            let r = mfg_weak_two_qubit(&ctx)?;
            (r.rho, r.validity, p.lambda_sq(), None)
        }
        Method::Narrow => {
            let es = p.effective_system()?;
            let r = mfg_narrow(&es, p.gamma)?;
            (r.rho, r.validity, r.lambda_eff_sq, None)
        }
        Method::ZeroWidth => (mfg_zero_width(&p.effective_system()?)?, 0.0, 0.0, None),
        Method::DirectGibbs => (gibbs_direct(&p.effective_system()?)?, 0.0, 0.0, None),
        Method::Oracle => {
            let params = DickeParams {
                omega_z: p.omega_z,
                epsilon: p.epsilon,
                g: p.g,
                omega: 1.0,
            };
            let s = reduced_thermal_state(params, beta, &opts.oracle)?;
            (s.rho, 0.0, 0.0, Some(s.n_max))
        }
        Method::ClosedForm => {
            let q = p.reorganization();
            let rho = small_splitting_state(q, p.omega_z, beta)?;
            let validity = match beta {
                Beta::Infinite => 2.0 * q / p.omega_z,
                Beta::Finite(b) => 0.5 * b * q,
            };
            (rho, validity, q / p.omega_z, None)
        }
    };
    let negativity = match method {
        Method::ClosedForm => negativity_closed_form(p.reorganization(), p.omega_z, beta),
        _ => negativity(&rho)?,
    };
    Ok(PointResult {
        purity: purity(&rho),
        negativity,
        rho,
        validity,
        lambda_sq,
        n_max,
    })
}

pub fn negativity_at(method: Method, p: &Point, opts: &EvalOptions) -> Result<f64> {
    Ok(evaluate_point(method, p, opts)?.negativity)
}

fn default_zero() -> Vec<f64> {
    vec![0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub method: Method,
    /// `ω_z/Ω`.
    pub omega_z: Vec<f64>,
    #[serde(default = "default_zero")]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_zero")]
    pub g: Vec<f64>,
    #[serde(default = "default_zero")]
    pub gamma: Vec<f64>,
    /// `k_B T/Ω`; 0 selects zero temperature.
    #[serde(default = "default_zero")]
    pub temperature: Vec<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Execution detail; left out of the echoed config.
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub options: EvalOptions,
    #[serde(default)]
    pub output: Option<String>,
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("grid `{name}` is empty")));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("grid `{name}` has non-finite entries")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(format!("grid `{name}` is not strictly increasing")));
    }
    Ok(())
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_grid("omega_z", &self.omega_z)?;
        check_grid("epsilon", &self.epsilon)?;
        check_grid("g", &self.g)?;
        check_grid("gamma", &self.gamma)?;
        check_grid("temperature", &self.temperature)?;
        if self.omega_z.iter().any(|&w| w <= 0.0) {
            return Err(Error::Config("omega_z must be positive".into()));
        }
        if self.epsilon.iter().any(|e| e.abs() > 1.0) {
            return Err(Error::Config("epsilon must lie in [-1, 1]".into()));
        }
        if self.g.iter().any(|&g| g < 0.0) || self.temperature.iter().any(|&t| t < 0.0) {
            return Err(Error::Config("g and temperature must be non-negative".into()));
        }
        if self.gamma.iter().any(|&x| !(0.0..=GAMMA_CAP).contains(&x)) {
            return Err(Error::Config(format!("gamma must lie in [0, {GAMMA_CAP}]")));
        }
        if !self.method.allows_width() && self.gamma.iter().any(|&x| x != 0.0) {
            return Err(Error::Config(format!(
                "method {} forbids nonzero gamma",
                self.method.tag()
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    /// Grid points in lexicographic order of (ω_z, ε, g, γ, T).
    pub fn points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for &omega_z in &self.omega_z {
            for &epsilon in &self.epsilon {
                for &g in &self.g {
                    for &gamma in &self.gamma {
                        for &temperature in &self.temperature {
                            out.push(Point {
                                omega_z,
                                epsilon,
                                g,
                                gamma,
                                temperature,
                                lambda: self.lambda,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: Point,
    pub method: Method,
    pub lambda_sq: f64,
    pub negativity: f64,
    pub purity: f64,
    pub validity: f64,
    pub reliable: bool,
    pub n_max: Option<usize>,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub timestamp: u64,
}

impl SweepResult {
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn validity_breaches(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_none() && !r.reliable).count()
    }
}

/// Runs `f` on a pool of `threads` workers (all cores when `None`).
pub fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let points = config.points();
    let opts = config.options;
    let method = config.method;
    let rows = with_pool(config.threads, || {
        points
            .par_iter()
            .map(|p| match evaluate_point(method, p, &opts) {
                Ok(r) => SweepRow {
                    point: *p,
                    method,
                    lambda_sq: r.lambda_sq,
                    negativity: r.negativity,
                    purity: r.purity,
                    validity: r.validity,
                    reliable: r.validity < opts.validity_threshold,
                    n_max: r.n_max,
                    error: None,
                },
                Err(e) => SweepRow {
                    point: *p,
                    method,
                    lambda_sq: f64::NAN,
                    negativity: f64::NAN,
                    purity: f64::NAN,
                    validity: f64::NAN,
                    reliable: false,
                    n_max: None,
                    error: Some(e.to_string()),
                },
            })
            .collect::<Vec<_>>()
    })?;
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(SweepResult {
        config: config.clone(),
        rows,
        timestamp,
    })
}

/// Float with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `# key: value` metadata lines, then a CSV table.
pub fn write_table<W: Write>(
    mut out: W,
    metadata: &[(&str, String)],
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}: {v}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

pub const SWEEP_HEADER: [&str; 13] = [
    "omega_z", "epsilon", "g", "gamma", "temperature", "lambda_sq", "negativity", "purity",
    "validity", "reliable", "method", "n_max", "error",
];

pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let meta = [
        ("config", serde_json::to_string(&result.config)?),
        ("version", env!("CARGO_PKG_VERSION").to_string()),
        ("timestamp", result.timestamp.to_string()),
    ];
    let rows = result.rows.iter().map(|r| {
        vec![
            fmt_float(r.point.omega_z),
            fmt_float(r.point.epsilon),
            fmt_float(r.point.g),
            fmt_float(r.point.gamma),
            fmt_float(r.point.temperature),
            fmt_float(r.lambda_sq),
            fmt_float(r.negativity),
            fmt_float(r.purity),
            fmt_float(r.validity),
            r.reliable.to_string(),
            r.method.tag().to_string(),
            r.n_max.map(|n| n.to_string()).unwrap_or_default(),
            r.error.clone().unwrap_or_default(),
        ]
    });
    write_table(out, &meta, &SWEEP_HEADER, rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GPeak {
    pub g: f64,
    pub negativity: f64,
    /// Coarse scan was unimodal with an interior maximum.
    pub interior: bool,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Maximizes the negativity over `g ∈ [lo, hi]`: coarse scan, then golden
/// section around the coarse maximum to `tol`.
pub fn find_g_peak(method: Method, p: &Point, bracket: (f64, f64), tol: f64, opts: &EvalOptions) -> Result<GPeak> {
    let (lo, hi) = bracket;
    if !(lo < hi && lo >= 0.0) {
        return Err(Error::InvalidBracket(format!("g bracket [{lo}, {hi}]")));
    }
    let n = 41;
    let at = |g: f64| negativity_at(method, &Point { g, ..*p }, opts);
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = grid.par_iter().map(|&g| at(g)).collect::<Result<_>>()?;
    let mut k = 0;
    for i in 1..n {
        if vals[i] > vals[k] {
            k = i;
        }
    }
    let scale = vals[k].abs().max(ZERO_NEGATIVITY);
    let rising = vals[..=k].windows(2).all(|w| w[1] >= w[0] - 1e-12 * scale);
    let falling = vals[k..].windows(2).all(|w| w[1] <= w[0] + 1e-12 * scale);
    if k == 0 || k == n - 1 || !rising || !falling || vals[k] <= ZERO_NEGATIVITY {
        return Ok(GPeak {
            g: grid[k],
            negativity: vals[k],
            interior: false,
        });
    }
    let (mut a, mut b) = (grid[k - 1], grid[k + 1]);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (at(x1)?, at(x2)?);
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = at(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = at(x2)?;
        }
    }
    let g = 0.5 * (a + b);
    Ok(GPeak {
        g,
        negativity: at(g)?,
        interior: true,
    })
}

/// Smallest temperature with vanishing negativity, by bisection to `tol`.
pub fn find_t_n(method: Method, p: &Point, bracket: (f64, f64), tol: f64, opts: &EvalOptions) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo >= 0.0 && lo < hi) {
        return Err(Error::InvalidBracket(format!("temperature bracket [{lo}, {hi}]")));
    }
    let at = |t: f64| negativity_at(method, &Point { temperature: t, ..*p }, opts);
    let n_lo = at(lo)?;
    let n_hi = at(hi)?;
    if n_lo <= ZERO_NEGATIVITY {
        return Err(Error::InvalidBracket(format!(
            "negativity already vanishes at T = {lo} ({n_lo:e})"
        )));
    }
    if n_hi > ZERO_NEGATIVITY {
        return Err(Error::InvalidBracket(format!(
            "negativity still {n_hi:e} at T = {hi}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if at(mid)? > ZERO_NEGATIVITY {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `T_N` from the closed form: root of `(Q/4ω_z)(p₋ − p₊) = p₋p₊`, i.e.
/// `Q/ω_z = 2/sinh(ω_z/T)` with the normalized populations.
pub fn closed_form_t_n(reorganization: f64, omega_z: f64) -> Result<f64> {
    // (p₋ − p₊)/(p₋p₊) = 2 sinh(βω_z) ⇒ sinh(βω_z) = 2ω_z/Q
    if !(reorganization > 0.0) {
        return Err(Error::InvalidBracket("no threshold without coupling".into()));
    }
    let x = (2.0 * omega_z / reorganization).asinh();
    Ok(omega_z / x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BroadeningSlope {
    pub value: f64,
    pub half_step_value: f64,
    /// The two estimates agree within 5 % (or are both at the noise floor).
    pub stable: bool,
}

/// `∂N/∂γ²|₀` with a step-halving stability check.
pub fn dn_dgamma2_checked(es: &EffectiveSystem, h: f64) -> Result<BroadeningSlope> {
    let a = dn_dgamma2(es, h)?;
    let b = dn_dgamma2(es, 0.5 * h)?;
    let floor = 1e-6;
    let stable = (a - b).abs() <= 0.05 * a.abs().max(b.abs()) || (a.abs() < floor && b.abs() < floor);
    Ok(BroadeningSlope {
        value: a,
        half_step_value: b,
        stable,
    })
}

pub const DEFAULT_GAMMA_SQ_STEP: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseMapConfig {
    #[serde(default = "default_omega_z")]
    pub omega_z: f64,
    #[serde(default)]
    pub epsilon: f64,
    pub g: Vec<f64>,
    pub temperature: Vec<f64>,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Also locate `g_peak` per temperature over the `g` range.
    #[serde(default = "yes")]
    pub with_g_peak: bool,
    #[serde(default, skip_serializing)]
    pub threads: Option<usize>,
}

fn default_omega_z() -> f64 {
    0.02
}
fn default_step() -> f64 {
    DEFAULT_GAMMA_SQ_STEP
}
fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseCell {
    pub g: f64,
    pub temperature: f64,
    pub slope: BroadeningSlope,
    pub negativity: f64,
}

#[derive(Clone, Debug)]
pub struct PhaseMap {
    pub cells: Vec<PhaseCell>,
    /// `(T, g_peak)` per temperature row.
    pub g_peak: Vec<(f64, Option<GPeak>)>,
}

pub fn phasemap(cfg: &PhaseMapConfig) -> Result<PhaseMap> {
    check_grid("g", &cfg.g)?;
    check_grid("temperature", &cfg.temperature)?;
    let mut pts = Vec::new();
    for &t in &cfg.temperature {
        for &g in &cfg.g {
            pts.push((g, t));
        }
    }
    let opts = EvalOptions::default();
    with_pool(cfg.threads, || {
        let cells = pts
            .par_iter()
            .map(|&(g, t)| {
                let es = EffectiveSystem::new(cfg.omega_z, cfg.epsilon, g, 1.0, Beta::from_temperature(t)?)?;
                Ok(PhaseCell {
                    g,
                    temperature: t,
                    slope: dn_dgamma2_checked(&es, cfg.step)?,
                    negativity: negativity(&mfg_zero_width(&es)?)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let g_peak = cfg
            .temperature
            .par_iter()
            .map(|&t| {
                if !cfg.with_g_peak {
                    return Ok((t, None));
                }
                let p = Point {
                    omega_z: cfg.omega_z,
                    epsilon: cfg.epsilon,
                    g: 0.0,
                    gamma: 0.0,
                    temperature: t,
                    lambda: None,
                };
                let bracket = (cfg.g[0], cfg.g[cfg.g.len() - 1]);
                Ok((t, Some(find_g_peak(Method::ZeroWidth, &p, bracket, 1e-4, &opts)?)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PhaseMap { cells, g_peak })
    })?
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleComparison {
    pub point: Point,
    pub zero_width: f64,
    pub oracle: f64,
    pub n_max: usize,
    pub zero_width_purity: f64,
    pub oracle_purity: f64,
}

/// Zero-width and exact-diagonalization negativities on the config grid.
pub fn compare_oracle(config: &SweepConfig) -> Result<Vec<OracleComparison>> {
    let mut cfg = config.clone();
    cfg.method = Method::Oracle;
    cfg.validate()?;
    let opts = cfg.options;
    with_pool(cfg.threads, || {
        cfg.points()
            .par_iter()
            .map(|p| {
                let zw = evaluate_point(Method::ZeroWidth, p, &opts)?;
                let ed = evaluate_point(Method::Oracle, p, &opts)?;
                Ok(OracleComparison {
                    point: *p,
                    zero_width: zw.negativity,
                    oracle: ed.negativity,
                    n_max: ed.n_max.unwrap_or(0),
                    zero_width_purity: zw.purity,
                    oracle_purity: ed.purity,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DbetaConfig {
    #[serde(default = "peaked")]
    pub family: SpectralFamily,
    /// Peak position `ω₀`; defaults to `√(1 − 5γ²)` (RC frequency 1).
    #[serde(default)]
    pub omega0: Option<f64>,
    pub gamma: f64,
    #[serde(default = "default_omega_z")]
    pub omega_z: f64,
    #[serde(default)]
    pub temperature: f64,
    pub omega: Vec<f64>,
}

fn peaked() -> SpectralFamily {
    SpectralFamily::Peaked
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DbetaRow {
    pub omega: f64,
    pub d: f64,
    pub d_prime: f64,
    pub d_residue: Option<f64>,
    pub d_prime_residue: Option<f64>,
}

pub fn dbeta(cfg: &DbetaConfig) -> Result<Vec<DbetaRow>> {
    let sd = match cfg.omega0 {
        Some(w0) => SpectralDensity::new(cfg.family, w0, cfg.gamma, cfg.omega_z)?,
        None => SpectralDensity::with_rc_frequency(cfg.family, 1.0, cfg.gamma, cfg.omega_z)?,
    };
    let beta = Beta::from_temperature(cfg.temperature)?;
    let quad = ReservoirKernel::quadrature(sd, beta)?;
    let residue = if beta.is_infinite() {
        ReservoirKernel::residue(sd).ok()
    } else {
        None
    };
    cfg.omega
        .par_iter()
        .map(|&w| {
            let (d, d_prime) = quad.evaluate(w)?;
            let (d_residue, d_prime_residue) = match &residue {
                Some(k) if k.method() == KernelMethod::ResidueZeroT => {
                    let (a, b) = k.evaluate(w)?;
                    (Some(a), Some(b))
                }
                _ => (None, None),
            };
            Ok(DbetaRow {
                omega: w,
                d,
                d_prime,
                d_residue,
                d_prime_residue,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(method: Method) -> SweepConfig {
        SweepConfig {
            method,
            omega_z: vec![0.02],
            epsilon: vec![0.0],
            g: vec![0.1, 0.2],
            gamma: vec![0.0],
            temperature: vec![0.0, 0.005],
            lambda: None,
            threads: Some(2),
            strict: false,
            options: EvalOptions::default(),
            output: None,
        }
    }

    #[test]
    fn grids_must_increase() {
        let mut c = cfg(Method::ZeroWidth);
        c.g = vec![0.2, 0.1];
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.g = vec![];
        assert!(c.validate().is_err());
    }

    #[test]
    fn oracle_rejects_width() {
        let mut c = cfg(Method::Oracle);
        c.gamma = vec![0.0, 0.1];
        assert!(c.validate().is_err());
        c.method = Method::Weak;
        assert!(c.validate().is_ok());
        c.gamma = vec![0.0, 0.46];
        assert!(c.validate().is_err());
    }

    #[test]
    fn rows_follow_grid_order() {
        let r = run_sweep(&cfg(Method::ZeroWidth)).unwrap();
        let got: Vec<(f64, f64)> = r.rows.iter().map(|r| (r.point.g, r.point.temperature)).collect();
        assert_eq!(got, vec![(0.1, 0.0), (0.1, 0.005), (0.2, 0.0), (0.2, 0.005)]);
    }

    #[test]
    fn closed_form_threshold_inverts() {
        let q = 0.001;
        let t = closed_form_t_n(q, 0.02).unwrap();
        let n = |tt: f64| negativity_closed_form(q, 0.02, Beta::Finite(1.0 / tt));
        assert!(n(0.98 * t) > 0.0);
        assert_eq!(n(1.02 * t), 0.0);
    }

    #[test]
    fn float_format_has_17_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
    }
}
