//! Entropies, secrecy-bound providers, Devetak–Winter rates, sweeps, and
//! threshold root-finding.
//!
//! Three interchangeable providers back the H(A|E) lower bound:
//!
//! - `IdealCap`: exactly 1, valid only at the maximal CHSH value — for
//!   ideal-parameter runs where every provider must agree.
//! - `PironioAnalytic`: the analytic one-parameter bound
//!   1 − h(1/2 + √(S²/4−1)/2), extended for noise preprocessing by the
//!   correction term in [`g_func_q`].
//! - `Transcribed`: dense grid + refinement over the five-variable
//!   constrained maximization that defines Ẽ_λ(S)². As transcribed, that
//!   program admits a feasible point with objective 1 for every S in
//!   [2, 2√2], so the provider flags its result as degenerate; downstream
//!   reports must surface the flag rather than present the bound as tight.
//!
//! All entropies are in bits. Tolerances: 1e-12 for algebraic identities,
//! 1e-9 for root-finding on rates, 1e-10 for threshold crossings.

use crate::error::{Error, Result};
use crate::heralded::heralding_probability;
use crate::noise::{chsh_value, total_qber, CorrelatorSet, NoiseParams, Strategy};

pub const CHSH_CLASSICAL_BOUND: f64 = 2.0;
pub const CHSH_QUANTUM_MAX: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Binary Shannon entropy in bits, with h(0) = h(1) = 0.
///
/// Arguments are clamped to [0, 1]; callers feed values that can sit a few
/// ulp outside from upstream rounding.
pub fn binary_entropy(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if x == 0.0 || x == 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// g(x) = 1 − h(1/2 + x/2) for x in [0, 1].
pub fn g_func(x: f64) -> f64 {
    1.0 - binary_entropy(0.5 + 0.5 * x.clamp(0.0, 1.0))
}

/// Noise-preprocessing extension of `g_func` evaluated on a correlation
/// strength e in [0, 1]:
///
/// 1 − h(1/2 + e/2) + h(1/2 + √((1−2q)² + 4q(1−q)e²)/2).
fn g_with_correction(e: f64, q: f64) -> f64 {
    let e = e.clamp(0.0, 1.0);
    let base = 1.0 - binary_entropy(0.5 + 0.5 * e);
    let inner = ((1.0 - 2.0 * q).powi(2) + 4.0 * q * (1.0 - q) * e * e).clamp(0.0, 1.0);
    base + binary_entropy(0.5 + 0.5 * inner.sqrt())
}

/// Secrecy bound as a function of the CHSH value S and the flip probability
/// q. The argument is the CHSH value, so the correlation strength is
/// √(S²/4 − 1); S is clamped to [2, 2√2] and values below 2 return 0.
pub fn g_func_q(s: f64, q: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&q) || q.is_nan() {
        return Err(Error::OutOfRange {
            name: "q",
            value: q,
            requirement: "must lie in [0, 0.5]",
        });
    }
    if s < CHSH_CLASSICAL_BOUND {
        return Ok(0.0);
    }
    let s = s.min(CHSH_QUANTUM_MAX);
    let e = (s * s / 4.0 - 1.0).clamp(0.0, 1.0).sqrt();
    Ok(g_with_correction(e, q))
}

/// Controls for the transcribed constrained maximization.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimizerControls {
    /// Points per axis in the initial dense grid.
    pub grid: usize,
    /// Number of shrink-and-refine passes around the incumbent.
    pub refine_iters: usize,
    /// Feasibility slack for the constraints.
    pub tol: f64,
}

impl Default for OptimizerControls {
    fn default() -> Self {
        OptimizerControls {
            grid: 21,
            refine_iters: 24,
            tol: 1e-12,
        }
    }
}

/// Decision variables of the secrecy maximization.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OptimizationPoint {
    pub s: f64,
    pub c: f64,
    pub g: f64,
    pub h: f64,
    pub delta: f64,
}

impl OptimizationPoint {
    /// Constraint check against a CHSH value, with slack `tol`.
    pub fn is_feasible(&self, s_chsh: f64, tol: f64) -> bool {
        let &OptimizationPoint { s, c, g, h, delta } = self;
        (c * c + s * s - 1.0).abs() <= tol
            && g * g <= 1.0 + tol
            && h * h <= 1.0 + tol
            && delta * delta <= 1.0 + tol
            && (1.0 - g * g) * (1.0 - h * h) >= g * g * h * h * delta * delta - tol
            && c * g + s * h >= s_chsh / 2.0 - tol
    }

    /// Objective s²g² + c²h² + 2(2λ−1)scghΔ.
    pub fn objective(&self, lambda: f64) -> f64 {
        let &OptimizationPoint { s, c, g, h, delta } = self;
        s * s * g * g + c * c * h * h + 2.0 * (2.0 * lambda - 1.0) * s * c * g * h * delta
    }
}

/// Draw feasible points of the secrecy maximization by construction: pick
/// (θ, g), solve the CHSH constraint for the allowed h interval, then bound
/// Δ by the uncertainty constraint. Supports soundness checks against the
/// grid optimizer. Requires S strictly below 2√2, where the feasible set
/// still has positive volume.
pub fn sample_feasible_points(
    s_chsh: f64,
    count: usize,
    rng: &mut impl rand::Rng,
) -> Vec<OptimizationPoint> {
    assert!(
        s_chsh < CHSH_QUANTUM_MAX,
        "the feasible set degenerates at the maximal violation"
    );
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count && attempts < count.saturating_mul(100_000) {
        attempts += 1;
        let theta: f64 = rng.gen_range(0.05..half_pi - 0.05);
        let (s, c) = (theta.sin(), theta.cos());
        let g: f64 = rng.gen_range(-1.0..1.0);
        let h_min = (s_chsh / 2.0 - c * g) / s;
        if h_min > 1.0 {
            continue;
        }
        let h: f64 = rng.gen_range(h_min.max(-1.0)..1.0);
        let gh = (g * h).abs();
        let delta_max = if gh < 1e-12 {
            1.0
        } else {
            (((1.0 - g * g) * (1.0 - h * h)).max(0.0).sqrt() / gh).min(1.0)
        };
        let delta: f64 = rng.gen_range(-delta_max..=delta_max);
        let pt = OptimizationPoint { s, c, g, h, delta };
        if pt.is_feasible(s_chsh, 1e-12) {
            out.push(pt);
        }
    }
    out
}

/// Secrecy-bound provider choice.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum SecrecyProvider {
    IdealCap,
    PironioAnalytic,
    Transcribed(OptimizerControls),
}

impl SecrecyProvider {
    pub fn name(&self) -> &'static str {
        match self {
            SecrecyProvider::IdealCap => "ideal",
            SecrecyProvider::PironioAnalytic => "pironio",
            SecrecyProvider::Transcribed(_) => "transcribed",
        }
    }
}

impl std::fmt::Display for SecrecyProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of a secrecy-bound evaluation.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SecrecyBound {
    /// Lower bound on H(A|E), in [0, 1].
    pub value: f64,
    /// Correlation strength Ẽ fed into the entropy expression.
    pub e_tilde: f64,
    /// S ≤ 2: no nonlocal certificate, bound forced to zero.
    pub terminated: bool,
    /// The transcribed maximization saturated at its trivial feasible
    /// optimum; the bound is not informative and reports must say so.
    pub degenerate: bool,
    /// Maximizer found by the transcribed provider.
    pub optimum: Option<OptimizationPoint>,
}

fn grid_points(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Dense grid + shrinking refinement for the transcribed maximization.
fn optimize_e_sq(
    s_chsh: f64,
    lambda: f64,
    controls: &OptimizerControls,
) -> (f64, OptimizationPoint) {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let tol = controls.tol;

    let eval_box = |theta_lo: f64,
                    theta_hi: f64,
                    g_lo: f64,
                    g_hi: f64,
                    h_lo: f64,
                    h_hi: f64,
                    d_lo: f64,
                    d_hi: f64,
                    n: usize|
     -> Option<(f64, [f64; 4])> {
        let mut best: Option<(f64, [f64; 4])> = None;
        for &theta in &grid_points(theta_lo, theta_hi, n) {
            let (sin_t, cos_t) = theta.sin_cos();
            for &g in &grid_points(g_lo, g_hi, n) {
                for &h in &grid_points(h_lo, h_hi, n) {
                    if cos_t * g + sin_t * h < s_chsh / 2.0 - tol {
                        continue;
                    }
                    let slack = (1.0 - g * g) * (1.0 - h * h);
                    for &delta in &grid_points(d_lo, d_hi, n) {
                        if g * g * h * h * delta * delta > slack + tol {
                            continue;
                        }
                        let obj = sin_t * sin_t * g * g
                            + cos_t * cos_t * h * h
                            + 2.0 * (2.0 * lambda - 1.0) * sin_t * cos_t * g * h * delta;
                        if best.map_or(true, |(b, _)| obj > b) {
                            best = Some((obj, [theta, g, h, delta]));
                        }
                    }
                }
            }
        }
        best
    };

    let coarse = eval_box(
        0.0,
        half_pi,
        -1.0,
        1.0,
        -1.0,
        1.0,
        -1.0,
        1.0,
        controls.grid.max(3),
    );
    let (mut best_obj, mut best_pt) = coarse.unwrap_or((0.0, [half_pi / 2.0, 1.0, 1.0, 0.0]));

    let mut widths = [half_pi, 2.0, 2.0, 2.0];
    for _ in 0..controls.refine_iters {
        widths = widths.map(|w| w * 0.5);
        let [theta, g, h, delta] = best_pt;
        let refined = eval_box(
            (theta - widths[0] / 2.0).max(0.0),
            (theta + widths[0] / 2.0).min(half_pi),
            (g - widths[1] / 2.0).max(-1.0),
            (g + widths[1] / 2.0).min(1.0),
            (h - widths[2] / 2.0).max(-1.0),
            (h + widths[2] / 2.0).min(1.0),
            (delta - widths[3] / 2.0).max(-1.0),
            (delta + widths[3] / 2.0).min(1.0),
            9,
        );
        if let Some((obj, pt)) = refined {
            if obj > best_obj {
                best_obj = obj;
                best_pt = pt;
            }
        }
    }

    let [theta, g, h, delta] = best_pt;
    (
        best_obj,
        OptimizationPoint {
            s: theta.sin(),
            c: theta.cos(),
            g,
            h,
            delta,
        },
    )
}

/// Lower bound on H(A|E) for a CHSH value S, basis weight λ, and flip
/// probability q under the chosen provider.
pub fn secrecy_bound(
    s: f64,
    lambda: f64,
    q: f64,
    provider: &SecrecyProvider,
) -> Result<SecrecyBound> {
    if !(0.0..=1.0).contains(&lambda) || lambda.is_nan() {
        return Err(Error::OutOfRange {
            name: "lambda",
            value: lambda,
            requirement: "must lie in [0, 1]",
        });
    }
    if !(0.0..=0.5).contains(&q) || q.is_nan() {
        return Err(Error::OutOfRange {
            name: "q",
            value: q,
            requirement: "must lie in [0, 0.5]",
        });
    }
    if s.is_nan() || s < 0.0 || s > CHSH_QUANTUM_MAX + 1e-9 {
        return Err(Error::OutOfRange {
            name: "S",
            value: s,
            requirement: "must lie in [0, 2*sqrt(2)]",
        });
    }

    if s <= CHSH_CLASSICAL_BOUND {
        return Ok(SecrecyBound {
            value: 0.0,
            e_tilde: 0.0,
            terminated: true,
            degenerate: false,
            optimum: None,
        });
    }

    match provider {
        SecrecyProvider::IdealCap => {
            if s < CHSH_QUANTUM_MAX - 1e-9 {
                return Err(Error::ProviderDomain {
                    provider: "ideal",
                    reason: format!(
                        "S = {s} is below the maximal violation; this provider only covers ideal-parameter runs"
                    ),
                });
            }
            Ok(SecrecyBound {
                value: 1.0,
                e_tilde: 1.0,
                terminated: false,
                degenerate: false,
                optimum: None,
            })
        }
        SecrecyProvider::PironioAnalytic => {
            let e = (s.min(CHSH_QUANTUM_MAX).powi(2) / 4.0 - 1.0)
                .clamp(0.0, 1.0)
                .sqrt();
            Ok(SecrecyBound {
                value: g_with_correction(e, q),
                e_tilde: e,
                terminated: false,
                degenerate: false,
                optimum: None,
            })
        }
        SecrecyProvider::Transcribed(controls) => {
            let (e_sq, point) = optimize_e_sq(s.min(CHSH_QUANTUM_MAX), lambda, controls);
            let e = e_sq.clamp(0.0, 1.0).sqrt();
            Ok(SecrecyBound {
                value: g_with_correction(e, q),
                e_tilde: e,
                terminated: false,
                degenerate: e_sq >= 1.0 - 1e-9,
                optimum: Some(point),
            })
        }
    }
}

/// Which key-generation basis combinations contribute to the rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BasisMode {
    /// Both key combinations; the standard protocol.
    TwoBasis,
    /// Only the first key combination; the comparison baseline whose rate is
    /// exactly half the two-basis rate at p = 1/2.
    SingleBasis,
}

/// Full protocol configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChannelConfig {
    /// VBS transmittance T.
    pub transmittance: f64,
    /// Fiber attenuation in dB/km.
    pub alpha_db_per_km: f64,
    /// Photon transmission distance in km.
    pub distance_km: f64,
    /// Fiber-coupling efficiency.
    pub eta_c: f64,
    /// Memory efficiency.
    pub eta_m: f64,
    /// Detector efficiency.
    pub eta_d: f64,
    /// GHZ fidelity F.
    pub fidelity: f64,
    /// Source repetition rate in Hz.
    pub rep_rate_hz: f64,
    /// Fraction of rounds consumed by security checking (P_c).
    pub check_fraction: f64,
    /// Probability that Alice picks A1 and Charlie picks C1.
    pub p_key_basis: f64,
    /// Active improvement strategy (carries q for the advanced variant).
    pub strategy: Strategy,
    pub provider: SecrecyProvider,
    pub basis_mode: BasisMode,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            transmittance: 0.5,
            alpha_db_per_km: 0.2,
            distance_km: 0.0,
            eta_c: 1.0,
            eta_m: 1.0,
            eta_d: 1.0,
            fidelity: 1.0,
            rep_rate_hz: 1e7,
            check_fraction: 0.5,
            p_key_basis: 0.5,
            strategy: Strategy::None,
            provider: SecrecyProvider::PironioAnalytic,
            basis_mode: BasisMode::TwoBasis,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        let unit_fields = [
            ("T", self.transmittance),
            ("eta_c", self.eta_c),
            ("eta_m", self.eta_m),
            ("eta_d", self.eta_d),
            ("F", self.fidelity),
            ("P_c", self.check_fraction),
            ("p", self.p_key_basis),
        ];
        for (name, value) in unit_fields {
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(Error::OutOfRange {
                    name,
                    value,
                    requirement: "must lie in [0, 1]",
                });
            }
        }
        if self.alpha_db_per_km < 0.0 || self.alpha_db_per_km.is_nan() {
            return Err(Error::OutOfRange {
                name: "alpha",
                value: self.alpha_db_per_km,
                requirement: "must be nonnegative",
            });
        }
        if self.distance_km < 0.0 || self.distance_km.is_nan() {
            return Err(Error::OutOfRange {
                name: "d",
                value: self.distance_km,
                requirement: "must be nonnegative",
            });
        }
        if self.rep_rate_hz <= 0.0 || self.rep_rate_hz.is_nan() {
            return Err(Error::OutOfRange {
                name: "R_rep",
                value: self.rep_rate_hz,
                requirement: "must be positive",
            });
        }
        if let Strategy::Advanced(q) = self.strategy {
            if !(0.0..=0.5).contains(&q) {
                return Err(Error::OutOfRange {
                    name: "q",
                    value: q,
                    requirement: "must lie in [0, 0.5]",
                });
            }
        }
        Ok(())
    }

    /// Channel transmission efficiency η_t = 10^(−α d / 10).
    pub fn eta_t(&self) -> f64 {
        10f64.powf(-self.alpha_db_per_km * self.distance_km / 10.0)
    }

    /// Local efficiency η_l = η_c η_m η_d.
    pub fn eta_l(&self) -> f64 {
        self.eta_c * self.eta_m * self.eta_d
    }

    /// Matching weight λ = p² / (p² + p̄²).
    pub fn lambda(&self) -> f64 {
        let p = self.p_key_basis;
        let pb = 1.0 - p;
        p * p / (p * p + pb * pb)
    }

    pub fn noise(&self) -> Result<NoiseParams> {
        NoiseParams::new(self.fidelity, self.eta_l())
    }
}

/// Every intermediate quantity of one rate evaluation.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct KeyRateBreakdown {
    pub s_chsh: f64,
    pub s_svetlichny: f64,
    pub qber: f64,
    pub h_ae: f64,
    pub r_111: f64,
    pub r_212: f64,
    pub r_inf: f64,
    pub p_d: f64,
    pub e_c: f64,
    /// S ≤ 2: statistics admit a classical model, so no key can be certified.
    pub terminated: bool,
    /// The secrecy bound came from a degenerate transcribed optimum.
    pub degenerate_bound: bool,
}

/// Devetak–Winter rate chain for one configuration.
pub fn devetak_winter(config: &ChannelConfig) -> Result<KeyRateBreakdown> {
    config.validate()?;
    let noise = config.noise()?;
    let s = chsh_value(&noise);
    let s_abc = crate::noise::svetlichny_value(&CorrelatorSet::from_model(&noise));
    let delta = total_qber(&noise, config.strategy)?;
    let bound = secrecy_bound(
        s,
        config.lambda(),
        config.strategy.flip_probability(),
        &config.provider,
    )?;
    let h_delta = binary_entropy(delta);
    let r_111 = bound.value - h_delta;
    let r_212 = bound.value - h_delta;
    let p = config.p_key_basis;
    let pb = 1.0 - p;
    let r_inf = match config.basis_mode {
        BasisMode::TwoBasis => {
            let lambda = config.lambda();
            (p * p + pb * pb) * (lambda * r_111 + (1.0 - lambda) * r_212)
        }
        BasisMode::SingleBasis => p * p * r_111,
    };
    let p_d = heralding_probability(config.transmittance, config.eta_t())?;
    let e_c = (1.0 - config.check_fraction) * config.rep_rate_hz * p_d * r_inf.max(0.0);
    Ok(KeyRateBreakdown {
        s_chsh: s,
        s_svetlichny: s_abc,
        qber: delta,
        h_ae: bound.value,
        r_111,
        r_212,
        r_inf,
        p_d,
        e_c,
        terminated: bound.terminated,
        degenerate_bound: bound.degenerate,
    })
}

/// Practical key generation efficiency E_c in bits per second.
pub fn practical_rate(config: &ChannelConfig) -> Result<f64> {
    Ok(devetak_winter(config)?.e_c)
}

/// Distance at which E_c reaches `target_rate`, by bisection; the rate is
/// strictly decreasing in distance because only η_t³ depends on it.
pub fn distance_at_rate(config: &ChannelConfig, target_rate: f64) -> Result<f64> {
    if target_rate <= 0.0 || target_rate.is_nan() {
        return Err(Error::OutOfRange {
            name: "target",
            value: target_rate,
            requirement: "must be positive",
        });
    }
    let at = |d: f64| -> Result<f64> {
        let mut c = *config;
        c.distance_km = d;
        practical_rate(&c)
    };
    let e0 = at(0.0)?;
    if e0 <= target_rate {
        return Err(Error::NoSolution {
            reason: format!(
                "rate at d = 0 is {e0} bit/s, not above the target {target_rate} bit/s"
            ),
        });
    }
    let mut hi = 100.0;
    while at(hi)? > target_rate {
        hi *= 2.0;
        if hi > 1e7 {
            return Err(Error::NoSolution {
                reason: "rate does not fall to the target within 1e7 km".into(),
            });
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let e = at(mid)?;
        if (e - target_rate).abs() / target_rate < 1e-9 {
            return Ok(mid);
        }
        if e > target_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Free parameter for threshold searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ThresholdParameter {
    EtaL,
    Fidelity,
}

impl ThresholdParameter {
    pub fn name(&self) -> &'static str {
        match self {
            ThresholdParameter::EtaL => "eta_l",
            ThresholdParameter::Fidelity => "F",
        }
    }
}

fn with_parameter(config: &ChannelConfig, param: ThresholdParameter, value: f64) -> ChannelConfig {
    let mut c = *config;
    match param {
        ThresholdParameter::EtaL => {
            // The search drives the product: fold it into the coupling
            // efficiency and pin the other two factors.
            c.eta_c = value;
            c.eta_m = 1.0;
            c.eta_d = 1.0;
        }
        ThresholdParameter::Fidelity => c.fidelity = value,
    }
    c
}

/// Zero crossing of R_∞ in `param` over [lo, hi], to |R_∞| < 1e-10.
pub fn threshold_bisect(
    config: &ChannelConfig,
    param: ThresholdParameter,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    let rate_at = |x: f64| -> Result<f64> {
        Ok(devetak_winter(&with_parameter(config, param, x))?.r_inf)
    };
    let f_lo = rate_at(lo)?;
    let f_hi = rate_at(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoThreshold {
            quantity: param.name(),
            lo,
            hi,
        });
    }
    let (mut a, mut b) = (lo, hi);
    let mut f_a = f_lo;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let f_mid = rate_at(mid)?;
        if f_mid.abs() < 1e-10 || (b - a) < 1e-14 {
            return Ok(mid);
        }
        if f_mid.signum() == f_a.signum() {
            a = mid;
            f_a = f_mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Sweep axis for tabulated rate evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SweepAxis {
    Distance,
    EtaL,
    Fidelity,
    FlipQ,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Distance => "d_km",
            SweepAxis::EtaL => "eta_l",
            SweepAxis::Fidelity => "F",
            SweepAxis::FlipQ => "q",
        }
    }
}

/// One sweep row: the axis value and the full breakdown at that point.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub breakdown: KeyRateBreakdown,
}

fn apply_axis(config: &ChannelConfig, axis: SweepAxis, value: f64) -> ChannelConfig {
    let mut c = *config;
    match axis {
        SweepAxis::Distance => c.distance_km = value,
        SweepAxis::EtaL => {
            c.eta_c = value;
            c.eta_m = 1.0;
            c.eta_d = 1.0;
        }
        SweepAxis::Fidelity => c.fidelity = value,
        SweepAxis::FlipQ => c.strategy = Strategy::Advanced(value),
    }
    c
}

fn sweep_values(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(Error::OutOfRange {
            name: "steps",
            value: 0.0,
            requirement: "must be at least 1",
        });
    }
    if hi < lo || lo.is_nan() || hi.is_nan() {
        return Err(Error::OutOfRange {
            name: "range",
            value: hi,
            requirement: "upper end must not be below the lower end",
        });
    }
    Ok(grid_points(lo, hi, steps))
}

/// Ordered table of breakdowns along an axis. Rows are independent and run
/// on the rayon pool when the `parallel` feature is on; output order is the
/// axis order either way.
pub fn sweep(
    config: &ChannelConfig,
    axis: SweepAxis,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<Vec<SweepRow>> {
    let values = sweep_values(lo, hi, steps)?;
    let base = *config;
    crate::exec::map_collect(values, move |v| {
        devetak_winter(&apply_axis(&base, axis, v)).map(|breakdown| SweepRow {
            axis_value: v,
            breakdown,
        })
    })
    .into_iter()
    .collect()
}

/// Sequential reference path for [`sweep`].
pub fn sweep_sequential(
    config: &ChannelConfig,
    axis: SweepAxis,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<Vec<SweepRow>> {
    let values = sweep_values(lo, hi, steps)?;
    let base = *config;
    crate::exec::map_collect_seq(values, move |v| {
        devetak_winter(&apply_axis(&base, axis, v)).map(|breakdown| SweepRow {
            axis_value: v,
            breakdown,
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn binary_entropy_reference_points() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.11) - 0.499915958164528).abs() < 1e-12);
        // Symmetry.
        assert!((binary_entropy(0.3) - binary_entropy(0.7)).abs() < 1e-15);
    }

    #[test]
    fn g_func_reference_points() {
        assert_eq!(g_func(0.0), 0.0);
        assert!((g_func(1.0) - 1.0).abs() < 1e-15);
        assert!((g_func(0.75) - 0.456435556800404).abs() < 1e-12);
    }

    #[test]
    fn g_func_q_identities() {
        // q = 0 reduces to the plain analytic form.
        for i in 0..=50 {
            let s = 2.0 + (CHSH_QUANTUM_MAX - 2.0) * i as f64 / 50.0;
            let via_q = g_func_q(s, 0.0).unwrap();
            let plain = g_func((s * s / 4.0 - 1.0).clamp(0.0, 1.0).sqrt());
            assert!((via_q - plain).abs() < 1e-12, "s={s}");
        }
        // Maximal violation gives a full bit for every q.
        for i in 0..=20 {
            let q = 0.5 * i as f64 / 20.0;
            assert!((g_func_q(CHSH_QUANTUM_MAX, q).unwrap() - 1.0).abs() < 1e-12);
        }
        // At the classical boundary the bound is Alice's own noise entropy.
        for q in [0.05, 0.2, 0.4] {
            assert!((g_func_q(2.0, q).unwrap() - binary_entropy(1.0 - q)).abs() < 1e-12);
        }
        assert!(g_func_q(2.5, 0.7).is_err());
        assert_eq!(g_func_q(1.8, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn secrecy_bound_providers() {
        let pironio = SecrecyProvider::PironioAnalytic;
        let b = secrecy_bound(CHSH_QUANTUM_MAX, 0.5, 0.0, &pironio).unwrap();
        assert!((b.value - 1.0).abs() < 1e-12);
        let b = secrecy_bound(2.0, 0.5, 0.0, &pironio).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(b.terminated);

        let ideal = SecrecyProvider::IdealCap;
        assert!((secrecy_bound(CHSH_QUANTUM_MAX, 0.5, 0.3, &ideal).unwrap().value - 1.0).abs() < 1e-15);
        assert!(matches!(
            secrecy_bound(2.5, 0.5, 0.0, &ideal),
            Err(Error::ProviderDomain { .. })
        ));

        let transcribed = SecrecyProvider::Transcribed(OptimizerControls::default());
        let b = secrecy_bound(CHSH_QUANTUM_MAX, 0.5, 0.2, &transcribed).unwrap();
        assert!((b.value - 1.0).abs() < 1e-9);
        assert!(b.degenerate);
        let pt = b.optimum.unwrap();
        assert!(pt.is_feasible(CHSH_QUANTUM_MAX, 1e-9));
    }

    #[test]
    fn transcribed_optimum_dominates_random_feasible_points() {
        let controls = OptimizerControls::default();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for s_chsh in [2.1, 2.4, 2.7] {
            let (best, _) = optimize_e_sq(s_chsh, 0.5, &controls);
            let points = sample_feasible_points(s_chsh, 1000, &mut rng);
            assert!(points.len() >= 1000);
            for pt in points {
                assert!(
                    pt.objective(0.5) <= best + 1e-9,
                    "S={s_chsh}: sampled {} > optimized {best}",
                    pt.objective(0.5)
                );
            }
        }
    }

    #[test]
    fn ideal_rate_chain() {
        let config = ChannelConfig::default();
        let b = devetak_winter(&config).unwrap();
        assert!((b.r_inf - 0.5).abs() < 1e-12);
        assert!((b.p_d - 0.03125).abs() < 1e-15);
        assert_eq!(b.e_c, 78125.0);
        assert!(!b.terminated);
        // Every provider agrees at the ideal point.
        for provider in [
            SecrecyProvider::IdealCap,
            SecrecyProvider::PironioAnalytic,
            SecrecyProvider::Transcribed(OptimizerControls::default()),
        ] {
            let mut c = config;
            c.provider = provider;
            assert_eq!(devetak_winter(&c).unwrap().e_c, 78125.0, "{provider}");
        }
    }

    #[test]
    fn single_basis_is_half_rate() {
        let mut config = ChannelConfig::default();
        config.basis_mode = BasisMode::SingleBasis;
        let b = devetak_winter(&config).unwrap();
        assert!((b.r_inf - 0.25).abs() < 1e-12);
        let two = devetak_winter(&ChannelConfig::default()).unwrap();
        assert!((two.r_inf / b.r_inf - 2.0).abs() < 1e-12);
    }

    #[test]
    fn terminated_regime_reports_nonpositive_rate() {
        let mut config = ChannelConfig::default();
        config.fidelity = 0.6; // S = 2√2·0.6 < 2
        let b = devetak_winter(&config).unwrap();
        assert!(b.terminated);
        assert_eq!(b.h_ae, 0.0);
        assert!(b.r_inf <= 0.0);
        assert_eq!(b.e_c, 0.0);
    }

    #[test]
    fn practical_rate_distance_scaling() {
        let mut config = ChannelConfig::default();
        config.distance_km = 50.0;
        let e50 = practical_rate(&config).unwrap();
        assert!((e50 / 78125.0 - 1e-3).abs() < 1e-12);
        // E_c · 10^(0.06 d) is constant in d.
        let reference = 78125.0;
        for d in [0.0, 13.7, 42.0, 90.0] {
            config.distance_km = d;
            let e = practical_rate(&config).unwrap();
            let restored = e * 10f64.powf(0.06 * d);
            assert!(
                ((restored - reference) / reference).abs() < 1e-9,
                "d={d}: {restored}"
            );
        }
    }

    #[test]
    fn distances_at_reference_rates() {
        let config = ChannelConfig::default();
        let d1 = distance_at_rate(&config, 1.0).unwrap();
        assert!((d1 - 81.55).abs() < 0.2, "{d1}");
        let d2 = distance_at_rate(&config, 1e-4).unwrap();
        assert!((d2 - 148.21).abs() < 0.3, "{d2}");
        assert!(matches!(
            distance_at_rate(&config, 1e9),
            Err(Error::NoSolution { .. })
        ));
    }

    #[test]
    fn two_basis_distance_gap() {
        let two = ChannelConfig::default();
        let mut single = two;
        single.basis_mode = BasisMode::SingleBasis;
        let d_two = distance_at_rate(&two, 1.0).unwrap();
        let d_single = distance_at_rate(&single, 1.0).unwrap();
        let gap = d_two - d_single;
        let analytic = 10.0 * 2f64.log10() / (3.0 * two.alpha_db_per_km);
        assert!((gap - analytic).abs() < 1e-6, "{gap} vs {analytic}");
    }

    #[test]
    fn threshold_bisection_fidelity() {
        let config = ChannelConfig::default();
        let f_star = threshold_bisect(&config, ThresholdParameter::Fidelity, 0.75, 1.0).unwrap();
        assert!((0.75..1.0).contains(&f_star));
        let mut at = config;
        at.fidelity = f_star;
        assert!(devetak_winter(&at).unwrap().r_inf.abs() < 1e-10);
    }

    #[test]
    fn threshold_requires_sign_change() {
        let config = ChannelConfig::default();
        // Collapsed interval at the ideal point: positive rate everywhere.
        let mut ideal = config;
        ideal.provider = SecrecyProvider::IdealCap;
        assert!(matches!(
            threshold_bisect(&ideal, ThresholdParameter::EtaL, 1.0, 1.0),
            Err(Error::NoThreshold { .. })
        ));
    }

    #[test]
    fn advanced_zero_flip_equals_postselect() {
        for eta in [0.93, 0.96, 1.0] {
            for f in [0.95, 1.0] {
                let mut post = ChannelConfig::default();
                post.eta_c = eta;
                post.fidelity = f;
                post.strategy = Strategy::Postselect;
                let mut adv = post;
                adv.strategy = Strategy::Advanced(0.0);
                let b_post = devetak_winter(&post).unwrap();
                let b_adv = devetak_winter(&adv).unwrap();
                assert!((b_post.r_inf - b_adv.r_inf).abs() < 1e-12);
                assert!((b_post.e_c - b_adv.e_c).abs() < 1e-12 * b_post.e_c.max(1.0));
            }
        }
    }

    #[test]
    fn sweep_matches_direct_evaluation() {
        let config = ChannelConfig::default();
        let rows = sweep(&config, SweepAxis::Distance, 0.0, 100.0, 11).unwrap();
        assert_eq!(rows.len(), 11);
        for row in &rows {
            let mut c = config;
            c.distance_km = row.axis_value;
            let direct = devetak_winter(&c).unwrap();
            assert_eq!(row.breakdown.e_c, direct.e_c);
        }
        // Single-step sweep is a direct rate call.
        let single = sweep(&config, SweepAxis::Distance, 25.0, 25.0, 1).unwrap();
        let mut c = config;
        c.distance_km = 25.0;
        assert_eq!(single[0].breakdown.e_c, practical_rate(&c).unwrap());
        assert!(sweep(&config, SweepAxis::Distance, 10.0, 5.0, 3).is_err());
    }

    #[test]
    fn sweep_parallel_matches_sequential_bitwise() {
        let mut config = ChannelConfig::default();
        config.strategy = Strategy::Advanced(0.1);
        let par = sweep(&config, SweepAxis::EtaL, 0.9, 1.0, 33).unwrap();
        let seq = sweep_sequential(&config, SweepAxis::EtaL, 0.9, 1.0, 33).unwrap();
        assert_eq!(par.len(), seq.len());
        for (a, b) in par.iter().zip(&seq) {
            assert_eq!(a.axis_value.to_bits(), b.axis_value.to_bits());
            assert_eq!(a.breakdown.e_c.to_bits(), b.breakdown.e_c.to_bits());
            assert_eq!(a.breakdown.r_inf.to_bits(), b.breakdown.r_inf.to_bits());
        }
    }

    #[test]
    fn secrecy_bound_monotone_in_s() {
        for provider in [
            SecrecyProvider::PironioAnalytic,
            SecrecyProvider::Transcribed(OptimizerControls {
                grid: 11,
                refine_iters: 12,
                tol: 1e-12,
            }),
        ] {
            for q in [0.0, 0.25] {
                let mut prev = -1.0;
                for i in 0..=24 {
                    let s = 2.0 + (CHSH_QUANTUM_MAX - 2.0) * i as f64 / 24.0;
                    let b = secrecy_bound(s, 0.5, q, &provider).unwrap();
                    assert!(
                        b.value >= prev - 1e-9,
                        "{provider} q={q} s={s}: {} < {prev}",
                        b.value
                    );
                    prev = b.value;
                }
            }
        }
    }

    #[test]
    fn rng_smoke_for_seeded_sampling() {
        // Guards the dev-dependency wiring used by the soundness test.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x: f64 = rng.gen_range(0.0..1.0);
        assert!((0.0..1.0).contains(&x));
    }
}
