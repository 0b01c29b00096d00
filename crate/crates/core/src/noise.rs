//! White-noise/local-loss outcome model and the quantities derived from it:
//! QBERs, the CHSH polynomial, and the Svetlichny polynomial.
//!
//! The shared state is modeled per round as: with probability η_l per party
//! the photon is delivered; the all-delivered branch carries
//! F|GHZ₁⁺⟩⟨GHZ₁⁺| + (1−F)·I/8, while branches with missing photons are
//! diagonal in the rectilinear basis and therefore give uniform ±1 outcomes
//! under every equatorial setting. Undelivered parties output ⊥.
//!
//! Sign conventions: the Svetlichny sum pairs the plain CHSH combination
//! S_AB with Charlie's σx setting and the variant S_AB′ with his −σy
//! setting. With the fixed measurement settings this is the unique pairing
//! under which the ideal GHZ statistics reach 4√2 while the key bases stay
//! perfectly correlated; the opposite pairing vanishes identically.

use crate::error::{Error, Result};
use crate::polarization::{
    born_distribution, ghz_state, GhzLabel, MeasurementSetting, Outcome, SettingLabel,
};

/// White-noise and local-loss parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NoiseParams {
    /// Fidelity of the target GHZ state under the white-noise mix.
    pub fidelity: f64,
    /// Local efficiency η_l = η_c · η_m · η_d.
    pub eta_l: f64,
}

impl NoiseParams {
    pub fn new(fidelity: f64, eta_l: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fidelity) || fidelity.is_nan() {
            return Err(Error::OutOfRange {
                name: "F",
                value: fidelity,
                requirement: "must lie in [0, 1]",
            });
        }
        if !(0.0..=1.0).contains(&eta_l) || eta_l.is_nan() {
            return Err(Error::OutOfRange {
                name: "eta_l",
                value: eta_l,
                requirement: "must lie in [0, 1]",
            });
        }
        Ok(NoiseParams { fidelity, eta_l })
    }
}

/// How no-click events enter the recorded statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossPolicy {
    /// Keep ⊥ as a third outcome.
    RawPerp,
    /// Replace every ⊥ with a fair ±1 coin.
    RandomAssign,
}

/// Active improvement strategy for the key-generation accounting.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Strategy {
    /// ⊥ counts as an error.
    None,
    /// ⊥ replaced by a fair coin before key extraction.
    Postselect,
    /// Postselection plus Alice flipping her key bits with probability q.
    Advanced(f64),
}

impl Strategy {
    pub fn flip_probability(&self) -> f64 {
        match self {
            Strategy::Advanced(q) => *q,
            _ => 0.0,
        }
    }

    pub fn loss_policy(&self) -> LossPolicy {
        match self {
            Strategy::None => LossPolicy::RawPerp,
            _ => LossPolicy::RandomAssign,
        }
    }

    fn check(&self) -> Result<()> {
        if let Strategy::Advanced(q) = self {
            if !(0.0..=0.5).contains(q) || q.is_nan() {
                return Err(Error::OutOfRange {
                    name: "q",
                    value: *q,
                    requirement: "must lie in [0, 0.5]",
                });
            }
        }
        Ok(())
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Strategy::None => f.write_str("none"),
            Strategy::Postselect => f.write_str("post"),
            Strategy::Advanced(q) => write!(f, "advanced(q={q})"),
        }
    }
}

fn outcome_index(o: Outcome) -> usize {
    match o {
        Outcome::Plus => 0,
        Outcome::Minus => 1,
        Outcome::NoClick => 2,
    }
}

/// Joint probability table over {+1, −1, ⊥}³ for one setting triple.
#[derive(Debug, Clone)]
pub struct OutcomeDistribution {
    pub settings: [MeasurementSetting; 3],
    /// Index = 9·a + 3·b + c with outcome order (+1, −1, ⊥).
    pub probs: [f64; 27],
}

impl OutcomeDistribution {
    pub fn prob(&self, outcomes: [Outcome; 3]) -> f64 {
        self.probs[9 * outcome_index(outcomes[0])
            + 3 * outcome_index(outcomes[1])
            + outcome_index(outcomes[2])]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Marginal no-click probability of one party (0 = Alice, 1 = Bob, 2 = Charlie).
    pub fn marginal_noclick(&self, party: usize) -> f64 {
        let mut p = 0.0;
        for (idx, pr) in self.probs.iter().enumerate() {
            let o = match party {
                0 => idx / 9,
                1 => (idx / 3) % 3,
                _ => idx % 3,
            };
            if o == 2 {
                p += pr;
            }
        }
        p
    }

    /// Probability that no party outputs ⊥.
    pub fn prob_all_delivered(&self) -> f64 {
        let mut p = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    p += self.probs[9 * a + 3 * b + c];
                }
            }
        }
        p
    }

    fn sign(idx: usize) -> f64 {
        match idx {
            0 => 1.0,
            1 => -1.0,
            _ => 0.0,
        }
    }

    /// ⟨a·b·c⟩ with ⊥ contributing zero.
    pub fn triple_correlator(&self) -> f64 {
        let mut e = 0.0;
        for (idx, pr) in self.probs.iter().enumerate() {
            e += pr * Self::sign(idx / 9) * Self::sign((idx / 3) % 3) * Self::sign(idx % 3);
        }
        e
    }

    /// ⟨a·b⟩ with Charlie marginalized and ⊥ contributing zero.
    pub fn pair_ab_correlator(&self) -> f64 {
        let mut e = 0.0;
        for (idx, pr) in self.probs.iter().enumerate() {
            e += pr * Self::sign(idx / 9) * Self::sign((idx / 3) % 3);
        }
        e
    }

    /// Charlie branch (c = γ): returns (branch probability, ⟨a·b | c = γ⟩).
    pub fn charlie_branch(&self, gamma: i8) -> (f64, f64) {
        let c_idx = if gamma >= 0 { 0 } else { 1 };
        let mut weight = 0.0;
        let mut corr = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let pr = self.probs[9 * a + 3 * b + c_idx];
                weight += pr;
                corr += pr * Self::sign(a) * Self::sign(b);
            }
        }
        if weight > 0.0 {
            corr /= weight;
        }
        (weight, corr)
    }
}

/// Build the 27-entry outcome table for one noise point and setting triple.
pub fn outcome_distribution(
    noise: &NoiseParams,
    settings: &[MeasurementSetting; 3],
    policy: LossPolicy,
) -> Result<OutcomeDistribution> {
    let ghz = ghz_state(GhzLabel::new(1, true));
    let born = born_distribution(&ghz, settings)?;
    let f = noise.fidelity;
    let eta = noise.eta_l;
    let lost = 1.0 - eta;

    let mut probs = [0.0f64; 27];
    // Delivery pattern d: one bit per party, 1 = delivered.
    for d in 0..8usize {
        let delivered = [(d >> 2) & 1 == 1, (d >> 1) & 1 == 1, d & 1 == 1];
        let weight: f64 = delivered
            .iter()
            .map(|&ok| if ok { eta } else { lost })
            .product();
        if weight == 0.0 {
            continue;
        }
        if delivered.iter().all(|&ok| ok) {
            for (t, b) in born.iter().enumerate() {
                let a = (t >> 2) & 1;
                let bb = (t >> 1) & 1;
                let c = t & 1;
                probs[9 * a + 3 * bb + c] += weight * (f * b + (1.0 - f) / 8.0);
            }
        } else {
            // Missing-photon branches are rectilinear-diagonal: every
            // delivered party sees a fair ±1 coin under equatorial settings.
            let n_delivered = delivered.iter().filter(|&&ok| ok).count() as u32;
            let p_each = weight / f64::from(1u32 << n_delivered);
            let choices = |ok: bool| if ok { vec![0usize, 1] } else { vec![2usize] };
            for a in choices(delivered[0]) {
                for b in choices(delivered[1]) {
                    for c in choices(delivered[2]) {
                        probs[9 * a + 3 * b + c] += p_each;
                    }
                }
            }
        }
    }

    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized {
            norm_sq: total,
            tol: 1e-12,
        });
    }
    for p in probs.iter_mut() {
        *p /= total;
    }

    if policy == LossPolicy::RandomAssign {
        let mut folded = [0.0f64; 27];
        for (idx, pr) in probs.iter().enumerate() {
            if *pr == 0.0 {
                continue;
            }
            let o = [idx / 9, (idx / 3) % 3, idx % 3];
            let perp: Vec<usize> = (0..3).filter(|&p| o[p] == 2).collect();
            if perp.is_empty() {
                folded[idx] += pr;
                continue;
            }
            let share = pr / f64::from(1u32 << perp.len());
            for mask in 0..(1usize << perp.len()) {
                let mut out = o;
                for (bit, &party) in perp.iter().enumerate() {
                    out[party] = (mask >> bit) & 1;
                }
                folded[9 * out[0] + 3 * out[1] + out[2]] += share;
            }
        }
        probs = folded;
    }

    Ok(OutcomeDistribution {
        settings: *settings,
        probs,
    })
}

/// Theoretical CHSH value of the noisy model: 2√2 · F · η_l³.
pub fn chsh_value(noise: &NoiseParams) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * noise.fidelity * noise.eta_l.powi(3)
}

/// The tripartite check correlators: `triple[i][j][k]` = ⟨a_{i+1} b_{j+2} c_{k+1}⟩,
/// plus the four CHSH pair terms `pair[i][j]` = ⟨a_{i+1} b_{j+2}⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatorSet {
    pub triple: [[[f64; 2]; 2]; 2],
    pub pair: [[f64; 2]; 2],
}

impl CorrelatorSet {
    /// Analytic correlators of the noise model (no sampling).
    pub fn from_model(noise: &NoiseParams) -> Self {
        let scale = noise.fidelity * noise.eta_l.powi(3);
        let a = [SettingLabel::A1, SettingLabel::A2];
        let b = [SettingLabel::B2, SettingLabel::B3];
        let c = [SettingLabel::C1, SettingLabel::C2];
        let mut triple = [[[0.0; 2]; 2]; 2];
        for (i, ai) in a.iter().enumerate() {
            for (j, bj) in b.iter().enumerate() {
                for (k, ck) in c.iter().enumerate() {
                    let sum = MeasurementSetting::new(*ai).angle()
                        + MeasurementSetting::new(*bj).angle()
                        + MeasurementSetting::new(*ck).angle();
                    triple[i][j][k] = scale * sum.cos();
                }
            }
        }
        CorrelatorSet {
            triple,
            pair: [[0.0; 2]; 2],
        }
    }

    /// Correlators extracted from eight outcome tables, one per check triple.
    pub fn from_distributions(tables: &[[[OutcomeDistribution; 2]; 2]; 2]) -> Self {
        let mut triple = [[[0.0; 2]; 2]; 2];
        let mut pair = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    triple[i][j][k] = tables[i][j][k].triple_correlator();
                }
                // Pair term averaged over Charlie's two settings.
                pair[i][j] = 0.5
                    * (tables[i][j][0].pair_ab_correlator()
                        + tables[i][j][1].pair_ab_correlator());
            }
        }
        CorrelatorSet { triple, pair }
    }

    fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.triple[i][j][k]
    }
}

/// Svetlichny polynomial from a complete correlator set.
///
/// S_ABC = ⟨S_AB c₁⟩ + ⟨S_AB′ c₂⟩ with
/// ⟨S_AB c₁⟩ = ⟨a₁b₂c₁⟩ + ⟨a₂b₂c₁⟩ + ⟨a₁b₃c₁⟩ − ⟨a₂b₃c₁⟩ and
/// ⟨S_AB′ c₂⟩ = ⟨a₂b₃c₂⟩ + ⟨a₂b₂c₂⟩ + ⟨a₁b₃c₂⟩ − ⟨a₁b₂c₂⟩.
pub fn svetlichny_value(correlators: &CorrelatorSet) -> f64 {
    let (with_c1, with_c2) = svetlichny_decomposition(correlators);
    with_c1 + with_c2
}

/// The two halves of the Svetlichny sum: (⟨S_AB c₁⟩, ⟨S_AB′ c₂⟩).
pub fn svetlichny_decomposition(correlators: &CorrelatorSet) -> (f64, f64) {
    let c = correlators;
    let with_c1 = c.get(0, 0, 0) + c.get(1, 0, 0) + c.get(0, 1, 0) - c.get(1, 1, 0);
    let with_c2 = c.get(1, 1, 1) + c.get(1, 0, 1) + c.get(0, 1, 1) - c.get(0, 0, 1);
    (with_c1, with_c2)
}

/// Conditional pair correlators for one Charlie branch.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalCorrelators {
    /// Charlie's setting index, 1 or 2.
    pub c_setting: u8,
    /// Charlie's outcome on this branch.
    pub c_outcome: i8,
    /// Probability of the branch.
    pub weight: f64,
    /// `pair[i][j]` = ⟨a_{i+1} b_{j+2} | branch⟩.
    pub pair: [[f64; 2]; 2],
}

fn chsh_plain(pair: &[[f64; 2]; 2]) -> f64 {
    pair[0][0] + pair[1][0] + pair[0][1] - pair[1][1]
}

fn chsh_variant(pair: &[[f64; 2]; 2]) -> f64 {
    pair[1][1] + pair[1][0] + pair[0][1] - pair[0][0]
}

/// Conditioned CHSH value from per-branch correlators.
///
/// Branches under Charlie's first setting use S_AB, branches under his
/// second use S_AB′, each multiplied by the sign of Charlie's outcome; the
/// result is the branch-probability-weighted average.
pub fn chsh_from_conditionals(branches: &[ConditionalCorrelators]) -> Result<f64> {
    let total: f64 = branches.iter().map(|b| b.weight).sum();
    if branches.is_empty() || total <= 0.0 {
        return Err(Error::InsufficientData {
            reason: "no Charlie-branch statistics supplied".into(),
        });
    }
    let mut s = 0.0;
    for b in branches {
        if b.c_setting != 1 && b.c_setting != 2 {
            return Err(Error::InvalidSetting {
                party: "Charlie",
                label: "C?",
            });
        }
        let base = if b.c_setting == 1 {
            chsh_plain(&b.pair)
        } else {
            chsh_variant(&b.pair)
        };
        let signed = if b.c_outcome >= 0 { base } else { -base };
        s += b.weight * signed;
    }
    Ok(s / total)
}

/// QBER caused by decoherence: (1−F) η_l³ / 2, equal for both key bases.
pub fn qber_decoherence(noise: &NoiseParams) -> f64 {
    0.5 * (1.0 - noise.fidelity) * noise.eta_l.powi(3)
}

/// QBER caused by local photon loss.
///
/// Without postselection every round containing a ⊥ is an error (1 − η_l³);
/// random ±1 assignment halves that.
pub fn qber_loss(eta_l: f64, strategy: Strategy) -> Result<f64> {
    strategy.check()?;
    if !(0.0..=1.0).contains(&eta_l) {
        return Err(Error::OutOfRange {
            name: "eta_l",
            value: eta_l,
            requirement: "must lie in [0, 1]",
        });
    }
    let raw = 1.0 - eta_l.powi(3);
    Ok(match strategy {
        Strategy::None => raw,
        Strategy::Postselect | Strategy::Advanced(_) => 0.5 * raw,
    })
}

/// Total QBER δ for a strategy.
///
/// Built as the additive split decoherence + loss; the advanced strategy
/// adds Alice's deliberate flips on top of the postselected value:
/// δ_qp = q + (1−2q) δ_p.
pub fn total_qber(noise: &NoiseParams, strategy: Strategy) -> Result<f64> {
    strategy.check()?;
    let q1 = qber_decoherence(noise);
    Ok(match strategy {
        Strategy::None => q1 + qber_loss(noise.eta_l, Strategy::None)?,
        Strategy::Postselect => q1 + qber_loss(noise.eta_l, Strategy::Postselect)?,
        Strategy::Advanced(q) => {
            let delta_p = q1 + qber_loss(noise.eta_l, Strategy::Postselect)?;
            q + (1.0 - 2.0 * q) * delta_p
        }
    })
}

/// The twelve (Alice, Bob, Charlie) setting triples of the protocol.
pub fn all_setting_triples() -> Vec<[MeasurementSetting; 3]> {
    let mut out = Vec::with_capacity(12);
    for a in [SettingLabel::A1, SettingLabel::A2] {
        for b in [SettingLabel::B1, SettingLabel::B2, SettingLabel::B3] {
            for c in [SettingLabel::C1, SettingLabel::C2] {
                out.push([
                    MeasurementSetting::new(a),
                    MeasurementSetting::new(b),
                    MeasurementSetting::new(c),
                ]);
            }
        }
    }
    out
}

/// Check-basis tables indexed `[i][j][k]` over (A_{i+1}, B_{j+2}, C_{k+1}).
pub fn check_basis_tables(
    noise: &NoiseParams,
    policy: LossPolicy,
) -> Result<[[[OutcomeDistribution; 2]; 2]; 2]> {
    let a = [SettingLabel::A1, SettingLabel::A2];
    let b = [SettingLabel::B2, SettingLabel::B3];
    let c = [SettingLabel::C1, SettingLabel::C2];
    let build = |i: usize, j: usize, k: usize| -> Result<OutcomeDistribution> {
        let settings = [
            MeasurementSetting::new(a[i]),
            MeasurementSetting::new(b[j]),
            MeasurementSetting::new(c[k]),
        ];
        outcome_distribution(noise, &settings, policy)
    };
    Ok([
        [
            [build(0, 0, 0)?, build(0, 0, 1)?],
            [build(0, 1, 0)?, build(0, 1, 1)?],
        ],
        [
            [build(1, 0, 0)?, build(1, 0, 1)?],
            [build(1, 1, 0)?, build(1, 1, 1)?],
        ],
    ])
}

/// The estimator pipeline for the conditioned CHSH value: outcome tables →
/// Charlie branches → sign-resolved CHSH.
pub fn chsh_via_estimator(noise: &NoiseParams, policy: LossPolicy) -> Result<f64> {
    let tables = check_basis_tables(noise, policy)?;
    let mut branches = Vec::with_capacity(4);
    for k in 0..2usize {
        for gamma in [1i8, -1] {
            let mut pair = [[0.0; 2]; 2];
            let mut weight = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let (w, corr) = tables[i][j][k].charlie_branch(gamma);
                    pair[i][j] = corr;
                    weight += w;
                }
            }
            branches.push(ConditionalCorrelators {
                c_setting: (k + 1) as u8,
                c_outcome: gamma,
                weight: weight / 4.0,
                pair,
            });
        }
    }
    chsh_from_conditionals(&branches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn settings(a: SettingLabel, b: SettingLabel, c: SettingLabel) -> [MeasurementSetting; 3] {
        [
            MeasurementSetting::new(a),
            MeasurementSetting::new(b),
            MeasurementSetting::new(c),
        ]
    }

    #[test]
    fn ideal_key_basis_has_perfect_product() {
        let noise = NoiseParams::new(1.0, 1.0).unwrap();
        let s = settings(SettingLabel::A1, SettingLabel::B1, SettingLabel::C1);
        let d = outcome_distribution(&noise, &s, LossPolicy::RawPerp).unwrap();
        assert!((d.triple_correlator() - 1.0).abs() < 1e-12);
        for party in 0..3 {
            assert!(d.marginal_noclick(party).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_fidelity_is_uniform() {
        let noise = NoiseParams::new(0.0, 1.0).unwrap();
        for s in all_setting_triples() {
            let d = outcome_distribution(&noise, &s, LossPolicy::RawPerp).unwrap();
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        assert!((d.probs[9 * a + 3 * b + c] - 0.125).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn delivery_probability_and_perp_marginals() {
        let noise = NoiseParams::new(1.0, 0.9).unwrap();
        let s = settings(SettingLabel::A1, SettingLabel::B1, SettingLabel::C1);
        let d = outcome_distribution(&noise, &s, LossPolicy::RawPerp).unwrap();
        assert!((d.prob_all_delivered() - 0.729).abs() < 1e-12);
        for party in 0..3 {
            assert!((d.marginal_noclick(party) - 0.1).abs() < 1e-12);
        }
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_assign_noop_without_loss() {
        let noise = NoiseParams::new(0.83, 1.0).unwrap();
        for s in all_setting_triples() {
            let raw = outcome_distribution(&noise, &s, LossPolicy::RawPerp).unwrap();
            let folded = outcome_distribution(&noise, &s, LossPolicy::RandomAssign).unwrap();
            for i in 0..27 {
                assert!((raw.probs[i] - folded.probs[i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn random_assign_clears_perp_and_preserves_correlator() {
        let noise = NoiseParams::new(0.95, 0.8).unwrap();
        let s = settings(SettingLabel::A2, SettingLabel::B2, SettingLabel::C1);
        let folded = outcome_distribution(&noise, &s, LossPolicy::RandomAssign).unwrap();
        for party in 0..3 {
            assert!(folded.marginal_noclick(party).abs() < 1e-15);
        }
        let raw = outcome_distribution(&noise, &s, LossPolicy::RawPerp).unwrap();
        assert!((raw.triple_correlator() - folded.triple_correlator()).abs() < 1e-12);
    }

    #[test]
    fn chsh_value_reference_points() {
        let ideal = NoiseParams::new(1.0, 1.0).unwrap();
        assert!((chsh_value(&ideal) - 2.0 * SQRT_2).abs() < 1e-12);
        let boundary = NoiseParams::new(1.0 / SQRT_2, 1.0).unwrap();
        assert!((chsh_value(&boundary) - 2.0).abs() < 1e-12);
        let dead = NoiseParams::new(1.0, 0.0).unwrap();
        assert_eq!(chsh_value(&dead), 0.0);
    }

    #[test]
    fn svetlichny_reaches_maximum_on_ideal_model() {
        let noise = NoiseParams::new(1.0, 1.0).unwrap();
        let corr = CorrelatorSet::from_model(&noise);
        let s = svetlichny_value(&corr);
        assert!((s - 4.0 * SQRT_2).abs() < 1e-12, "{s}");
        let (c1_half, c2_half) = svetlichny_decomposition(&corr);
        assert!((c1_half - 2.0 * SQRT_2).abs() < 1e-12);
        assert!((c2_half - 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn svetlichny_zero_on_zero_correlators() {
        let zero = CorrelatorSet {
            triple: [[[0.0; 2]; 2]; 2],
            pair: [[0.0; 2]; 2],
        };
        assert_eq!(svetlichny_value(&zero), 0.0);
    }

    #[test]
    fn svetlichny_is_twice_chsh_on_model_statistics() {
        for f in [1.0, 0.9, 0.8] {
            for eta in [1.0, 0.95, 0.9] {
                let noise = NoiseParams::new(f, eta).unwrap();
                let tables = check_basis_tables(&noise, LossPolicy::RandomAssign).unwrap();
                let corr = CorrelatorSet::from_distributions(&tables);
                let s_abc = svetlichny_value(&corr);
                assert!(
                    (s_abc - 2.0 * chsh_value(&noise)).abs() < 1e-9,
                    "F={f} eta={eta}: {s_abc}"
                );
            }
        }
    }

    #[test]
    fn chsh_estimator_pipeline_matches_closed_form() {
        for f in [1.0, 0.92, 0.85] {
            for eta in [1.0, 0.93] {
                let noise = NoiseParams::new(f, eta).unwrap();
                let s = chsh_via_estimator(&noise, LossPolicy::RandomAssign).unwrap();
                assert!(
                    (s - chsh_value(&noise)).abs() < 1e-9,
                    "F={f} eta={eta}: {s} vs {}",
                    chsh_value(&noise)
                );
            }
        }
    }

    #[test]
    fn conditional_chsh_ideal_branches() {
        let noise = NoiseParams::new(1.0, 1.0).unwrap();
        let tables = check_basis_tables(&noise, LossPolicy::RandomAssign).unwrap();
        // Each Charlie branch alone already carries the full violation.
        for k in 0..2usize {
            for gamma in [1i8, -1] {
                let mut pair = [[0.0; 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        let (_, corr) = tables[i][j][k].charlie_branch(gamma);
                        pair[i][j] = corr;
                    }
                }
                let branch = ConditionalCorrelators {
                    c_setting: (k + 1) as u8,
                    c_outcome: gamma,
                    weight: 1.0,
                    pair,
                };
                let s = chsh_from_conditionals(&[branch]).unwrap();
                assert!((s - 2.0 * SQRT_2).abs() < 1e-9, "k={k} gamma={gamma}: {s}");
            }
        }
    }

    #[test]
    fn conditional_chsh_antisymmetric_in_charlie_outcome() {
        let branch = ConditionalCorrelators {
            c_setting: 1,
            c_outcome: 1,
            weight: 1.0,
            pair: [[0.3, 0.4], [0.1, -0.2]],
        };
        // Flipping only the recorded outcome sign flips the value.
        let mut sign_only = branch;
        sign_only.c_outcome = -1;
        let s1 = chsh_from_conditionals(&[branch]).unwrap();
        let s3 = chsh_from_conditionals(&[sign_only]).unwrap();
        assert!((s1 + s3).abs() < 1e-12);
    }

    #[test]
    fn chsh_from_conditionals_rejects_empty() {
        assert!(chsh_from_conditionals(&[]).is_err());
    }

    #[test]
    fn qber_values() {
        let ideal = NoiseParams::new(1.0, 1.0).unwrap();
        assert_eq!(qber_decoherence(&ideal), 0.0);
        let f09 = NoiseParams::new(0.9, 1.0).unwrap();
        assert!((qber_decoherence(&f09) - 0.05).abs() < 1e-12);

        assert_eq!(qber_loss(1.0, Strategy::None).unwrap(), 0.0);
        assert!((qber_loss(0.9, Strategy::None).unwrap() - 0.271).abs() < 1e-12);
        assert!((qber_loss(0.9, Strategy::Postselect).unwrap() - 0.1355).abs() < 1e-12);
    }

    #[test]
    fn qber_decoherence_matches_brute_force_table() {
        for (f, eta) in [(0.9, 1.0), (0.85, 0.97), (1.0, 0.9)] {
            let noise = NoiseParams::new(f, eta).unwrap();
            let s = settings(SettingLabel::A1, SettingLabel::B1, SettingLabel::C1);
            let d = outcome_distribution(&noise, &s, LossPolicy::RawPerp).unwrap();
            // Decoherence error = all-delivered round with product −1.
            let mut p_err = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        let product = [a, b, c].iter().filter(|&&x| x == 1).count() % 2;
                        if product == 1 {
                            p_err += d.probs[9 * a + 3 * b + c];
                        }
                    }
                }
            }
            assert!(
                (p_err - qber_decoherence(&noise)).abs() < 1e-12,
                "F={f} eta={eta}"
            );
        }
    }

    #[test]
    fn total_qber_split_and_strategies() {
        let noise = NoiseParams::new(0.9, 0.93).unwrap();
        let total = total_qber(&noise, Strategy::None).unwrap();
        let split = qber_decoherence(&noise) + qber_loss(noise.eta_l, Strategy::None).unwrap();
        assert_eq!(total, split);

        let ideal = NoiseParams::new(1.0, 1.0).unwrap();
        assert_eq!(total_qber(&ideal, Strategy::None).unwrap(), 0.0);
        for q in [0.0, 0.1, 0.37] {
            assert!(
                (total_qber(&ideal, Strategy::Advanced(q)).unwrap() - q).abs() < 1e-15,
                "q={q}"
            );
        }

        let near = NoiseParams::new(1.0, 0.94).unwrap();
        let dp = total_qber(&near, Strategy::Postselect).unwrap();
        assert!((dp - 0.084708).abs() < 1e-12);
        assert!(total_qber(&near, Strategy::Advanced(0.7)).is_err());
    }

    #[test]
    fn postselection_strictly_lowers_qber_under_loss() {
        for eta in [0.9, 0.95, 0.999] {
            for f in [1.0, 0.9] {
                let noise = NoiseParams::new(f, eta).unwrap();
                let none = total_qber(&noise, Strategy::None).unwrap();
                let post = total_qber(&noise, Strategy::Postselect).unwrap();
                assert!(post < none, "F={f} eta={eta}");
            }
        }
        let lossless = NoiseParams::new(0.9, 1.0).unwrap();
        let none = total_qber(&lossless, Strategy::None).unwrap();
        let post = total_qber(&lossless, Strategy::Postselect).unwrap();
        assert!((none - post).abs() < 1e-15);
    }

    #[test]
    fn monotonicity_in_fidelity_and_efficiency() {
        let strategies = [Strategy::None, Strategy::Postselect, Strategy::Advanced(0.2)];
        let grid: Vec<f64> = (0..10).map(|i| 0.9 + 0.01 * i as f64).collect();
        for strategy in strategies {
            for w in grid.windows(2) {
                let lo_f = NoiseParams::new(w[0], 0.97).unwrap();
                let hi_f = NoiseParams::new(w[1], 0.97).unwrap();
                assert!(
                    total_qber(&hi_f, strategy).unwrap()
                        <= total_qber(&lo_f, strategy).unwrap() + 1e-15
                );
                assert!(chsh_value(&hi_f) >= chsh_value(&lo_f));
                let lo_e = NoiseParams::new(0.97, w[0]).unwrap();
                let hi_e = NoiseParams::new(0.97, w[1]).unwrap();
                assert!(
                    total_qber(&hi_e, strategy).unwrap()
                        <= total_qber(&lo_e, strategy).unwrap() + 1e-15
                );
                assert!(chsh_value(&hi_e) >= chsh_value(&lo_e));
            }
        }
    }
}
