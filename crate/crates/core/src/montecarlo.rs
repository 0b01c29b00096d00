//! Round-level seeded simulation of the full protocol: heralded channel
//! attempts, basis selection, outcome sampling from the noise model, sifting,
//! nonlocality and QBER estimation, and secret reconstruction.
//!
//! Determinism: every round draws from its own counter-based stream keyed by
//! (seed, round index), so results are bit-identical for a fixed config
//! regardless of batching, thread count, or the `parallel` feature. The
//! announce subsampling uses a dedicated stream that no round index can
//! collide with.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::heralded::{
    collapsed_joint_state, gsm_click_distribution, heralding_probability, vbs_branch_amplitudes,
    HeraldClass,
};
use crate::keyrate::ChannelConfig;
use crate::noise::Strategy;
use crate::polarization::{MeasurementSetting, Outcome, SettingLabel};

const ANNOUNCE_STREAM: u64 = u64::MAX;
const PAR_BATCH: u64 = 8192;

/// How the per-round herald verdict is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum HeraldPath {
    /// Optics below 10⁶ rounds, fast at or above.
    Auto,
    /// Draw the verdict directly from the closed-form herald probability.
    Fast,
    /// Sample VBS branches, channel survival, and the analyzer verdict, with
    /// the verdict probabilities taken from the state-vector simulation of
    /// the analyzer (computed once per run).
    Optics,
}

/// Simulation configuration.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    pub rounds: u64,
    pub seed: u64,
    pub channel: ChannelConfig,
    /// Fraction of key-generation rounds published for QBER estimation,
    /// in (0, 1].
    pub announce_fraction: f64,
    /// Bob's basis-choice weights over (B1, B2, B3); normalized internally.
    pub bob_weights: [f64; 3],
    pub herald_path: HeraldPath,
    /// Keep the per-round log in the output.
    pub log_rounds: bool,
}

impl SimConfig {
    pub fn new(rounds: u64, seed: u64, channel: ChannelConfig) -> Self {
        SimConfig {
            rounds,
            seed,
            channel,
            announce_fraction: 0.5,
            bob_weights: [1.0 / 3.0; 3],
            herald_path: HeraldPath::Auto,
            log_rounds: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.rounds == 0 {
            return Err(Error::OutOfRange {
                name: "rounds",
                value: 0.0,
                requirement: "must be at least 1",
            });
        }
        if !(self.announce_fraction > 0.0 && self.announce_fraction <= 1.0) {
            return Err(Error::OutOfRange {
                name: "announce_fraction",
                value: self.announce_fraction,
                requirement: "must lie in (0, 1]",
            });
        }
        let total: f64 = self.bob_weights.iter().sum();
        if !(total > 0.0) || self.bob_weights.iter().any(|w| *w < 0.0 || w.is_nan()) {
            return Err(Error::OutOfRange {
                name: "bob_weights",
                value: total,
                requirement: "must be nonnegative with positive sum",
            });
        }
        Ok(())
    }

    fn use_fast_path(&self) -> bool {
        match self.herald_path {
            HeraldPath::Fast => true,
            HeraldPath::Optics => false,
            HeraldPath::Auto => self.rounds >= 1_000_000,
        }
    }
}

/// Sift classification of a heralded round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SiftCase {
    SecurityCheck,
    KeyGen,
    Discard,
    NotHeralded,
}

/// One protocol round.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub herald: bool,
    /// 1-based setting indices (Alice, Bob, Charlie); present iff heralded.
    pub settings: Option<(u8, u8, u8)>,
    pub outcomes: Option<[Outcome; 3]>,
    pub sift_case: SiftCase,
    /// Key bits (Alice, Bob, Charlie); present iff the round is a key round
    /// and no outcome is ⊥.
    pub key_bits: Option<(u8, u8, u8)>,
}

/// Point estimate with its standard error and sample count.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub n: u64,
}

impl Estimate {
    fn binomial(successes: u64, trials: u64) -> Estimate {
        let n = trials.max(1) as f64;
        let p = successes as f64 / n;
        Estimate {
            value: p,
            std_err: (p * (1.0 - p) / n).sqrt(),
            n: trials,
        }
    }

    /// z-score against a reference value; 0 when the estimate is exact.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = self.value - reference;
        if self.std_err > 0.0 {
            diff / self.std_err
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Aggregated estimates of one simulation run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SimEstimates {
    pub rounds: u64,
    pub heralded: u64,
    pub p_d_hat: Estimate,
    pub s_hat: Option<Estimate>,
    pub s_abc_hat: Option<Estimate>,
    pub delta_hat: Option<Estimate>,
    pub sift_check_fraction: f64,
    pub sift_keygen_fraction: f64,
    pub sift_discard_fraction: f64,
    pub check_rounds: u64,
    pub keygen_rounds: u64,
    pub discard_rounds: u64,
    pub announced_rounds: u64,
    pub raw_key_len: u64,
    pub reconstruction_failure: Option<Estimate>,
    /// Set when the estimated Svetlichny value fails to certify genuine
    /// tripartite nonlocality (S_ABC ≤ 4): the protocol must terminate.
    pub terminate: Option<bool>,
}

/// Sift classification from 1-based setting indices.
pub fn sift_case(alice: u8, bob: u8, charlie: u8) -> SiftCase {
    match (alice, bob, charlie) {
        (_, 2, _) | (_, 3, _) => SiftCase::SecurityCheck,
        (1, 1, 1) | (2, 1, 2) => SiftCase::KeyGen,
        (1, 1, 2) | (2, 1, 1) => SiftCase::Discard,
        _ => SiftCase::NotHeralded,
    }
}

/// Heralded rounds partitioned by sift case.
#[derive(Debug, Clone, Default)]
pub struct SiftPartition {
    pub check: Vec<RoundRecord>,
    pub keygen: Vec<RoundRecord>,
    pub discard: Vec<RoundRecord>,
}

/// Partition heralded rounds into the three sift cases.
pub fn sift(records: &[RoundRecord]) -> SiftPartition {
    let mut out = SiftPartition::default();
    for r in records {
        match r.sift_case {
            SiftCase::SecurityCheck => out.check.push(*r),
            SiftCase::KeyGen => out.keygen.push(*r),
            SiftCase::Discard => out.discard.push(*r),
            SiftCase::NotHeralded => {}
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
struct CellAcc {
    n: u64,
    sum: i64,
    nonzero: u64,
}

impl CellAcc {
    fn push(&mut self, v: i8) {
        self.n += 1;
        self.sum += i64::from(v);
        if v != 0 {
            self.nonzero += 1;
        }
    }

    fn mean(&self) -> f64 {
        self.sum as f64 / self.n as f64
    }

    /// Variance of the cell mean.
    fn var_mean(&self) -> f64 {
        let n = self.n as f64;
        let m = self.mean();
        ((self.nonzero as f64 / n) - m * m).max(0.0) / n
    }
}

fn product_value(outcomes: &[Outcome]) -> i8 {
    let mut v = 1i8;
    for o in outcomes {
        match o.value() {
            Some(x) => v *= x,
            None => return 0,
        }
    }
    v
}

/// Empirical Svetlichny and conditioned-CHSH estimates from security-check
/// rounds.
///
/// The Svetlichny estimate is the signed sum of the eight per-cell triple
/// correlators; the CHSH estimate conditions on Charlie's setting and
/// outcome, using S_AB on his first setting and S_AB′ on his second, with
/// no-click rounds retained as zero-contribution samples.
pub fn estimate_nonlocality(security_rounds: &[RoundRecord]) -> Result<(Estimate, Estimate)> {
    let mut triple = [[[CellAcc::default(); 2]; 2]; 2];
    let mut cond = [[[[CellAcc::default(); 2]; 2]; 2]; 2]; // [i][j][k][gamma]
    let mut k_totals = [0u64; 2];

    for r in security_rounds {
        let (i, j, k) = match r.settings {
            Some((a, b, c)) if (2..=3).contains(&b) => {
                ((a - 1) as usize, (b - 2) as usize, (c - 1) as usize)
            }
            _ => continue,
        };
        let outcomes = match &r.outcomes {
            Some(o) => o,
            None => continue,
        };
        triple[i][j][k].push(product_value(outcomes));
        k_totals[k] += 1;
        let ab = product_value(&outcomes[..2]);
        match outcomes[2].value() {
            Some(gamma) => {
                let g_idx = if gamma > 0 { 0 } else { 1 };
                cond[i][j][k][g_idx].push(ab);
            }
            None => {} // Charlie no-click: counted in k_totals only.
        }
    }

    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                if triple[i][j][k].n == 0 {
                    return Err(Error::InsufficientData {
                        reason: format!(
                            "no samples for check cell (A{}, B{}, C{})",
                            i + 1,
                            j + 2,
                            k + 1
                        ),
                    });
                }
            }
        }
    }

    // Svetlichny: S_ABC = <S_AB c1> + <S_AB' c2>.
    let sign = |i: usize, j: usize, k: usize| -> f64 {
        if k == 0 {
            // + a1b2 + a2b2 + a1b3 − a2b3
            if i == 1 && j == 1 {
                -1.0
            } else {
                1.0
            }
        } else {
            // + a2b3 + a2b2 + a1b3 − a1b2
            if i == 0 && j == 0 {
                -1.0
            } else {
                1.0
            }
        }
    };
    let mut s_abc = 0.0;
    let mut var_abc = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                s_abc += sign(i, j, k) * triple[i][j][k].mean();
                var_abc += triple[i][j][k].var_mean();
            }
        }
    }
    let n_check: u64 = k_totals.iter().sum();
    let s_abc_est = Estimate {
        value: s_abc,
        std_err: var_abc.sqrt(),
        n: n_check,
    };

    // Conditioned CHSH, averaged over Charlie branches with no-click rounds
    // keeping their weight in the denominator.
    let mut s_cond = 0.0;
    let mut var_cond = 0.0;
    let total: u64 = k_totals.iter().sum();
    if total == 0 {
        return Err(Error::InsufficientData {
            reason: "no security-check samples".into(),
        });
    }
    for k in 0..2 {
        let k_weight = k_totals[k] as f64 / total as f64;
        for (g_idx, gamma_sign) in [(0usize, 1.0f64), (1, -1.0)] {
            let n_branch: u64 = (0..2)
                .flat_map(|i| (0..2).map(move |j| cond[i][j][k][g_idx].n))
                .sum();
            if n_branch == 0 {
                continue;
            }
            let branch_weight = n_branch as f64 / k_totals[k] as f64;
            let mut chsh = 0.0;
            let mut var = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    let cell = &cond[i][j][k][g_idx];
                    if cell.n == 0 {
                        return Err(Error::InsufficientData {
                            reason: format!(
                                "empty Charlie branch cell (A{}, B{}, C{}, c={})",
                                i + 1,
                                j + 2,
                                k + 1,
                                if g_idx == 0 { "+1" } else { "-1" }
                            ),
                        });
                    }
                    let term_sign = sign(i, j, k);
                    chsh += term_sign * cell.mean();
                    var += cell.var_mean();
                }
            }
            let w = k_weight * branch_weight;
            s_cond += w * gamma_sign * chsh;
            var_cond += (w * w) * var;
        }
    }
    let s_est = Estimate {
        value: s_cond,
        std_err: var_cond.sqrt(),
        n: n_check,
    };
    Ok((s_est, s_abc_est))
}

/// Result of the key-generation stage.
#[derive(Debug, Clone)]
pub struct KeygenOutcome {
    pub delta_hat: Estimate,
    pub announced: u64,
    pub alice_key: Vec<u8>,
    pub bob_key: Vec<u8>,
    pub charlie_key: Vec<u8>,
    /// Per-bit failure rate of Charlie-publishes, Bob-reconstructs on the
    /// unannounced remainder.
    pub reconstruction_failure: Estimate,
}

/// Estimate the QBER on an announced subset and XOR-reconstruct the rest.
///
/// A round errs when any outcome is ⊥ or when k_A ≠ k_B ⊕ k_C; unannounced
/// rounds with a ⊥ carry no key bits and count as reconstruction failures.
pub fn keygen_and_reconstruct(
    keygen_rounds: &[RoundRecord],
    announce_fraction: f64,
    rng: &mut impl Rng,
) -> Result<KeygenOutcome> {
    if keygen_rounds.is_empty() {
        return Err(Error::InsufficientData {
            reason: "no key-generation rounds".into(),
        });
    }
    if !(announce_fraction > 0.0 && announce_fraction <= 1.0) {
        return Err(Error::OutOfRange {
            name: "announce_fraction",
            value: announce_fraction,
            requirement: "must lie in (0, 1]",
        });
    }

    let mut announced = 0u64;
    let mut errors = 0u64;
    let mut alice_key = Vec::new();
    let mut bob_key = Vec::new();
    let mut charlie_key = Vec::new();
    let mut kept = 0u64;
    let mut failures = 0u64;

    for r in keygen_rounds {
        let announce = announce_fraction >= 1.0 || rng.gen_bool(announce_fraction);
        let mismatch = match r.key_bits {
            Some((ka, kb, kc)) => ka != (kb ^ kc),
            None => true, // contains ⊥
        };
        if announce {
            announced += 1;
            if mismatch {
                errors += 1;
            }
        } else {
            kept += 1;
            if mismatch {
                failures += 1;
            }
            if let Some((ka, kb, kc)) = r.key_bits {
                alice_key.push(ka);
                bob_key.push(kb);
                charlie_key.push(kc);
            }
        }
    }

    Ok(KeygenOutcome {
        delta_hat: Estimate::binomial(errors, announced),
        announced,
        alice_key,
        bob_key,
        charlie_key,
        reconstruction_failure: Estimate::binomial(failures, kept),
    })
}

/// Per-run sampling constants derived from the channel config.
struct RoundModel {
    p_d: f64,
    fast: bool,
    // Optics path: VBS branch cumulative weights and the analyzer verdict
    // probability conditioned on survival.
    vbs_weights: [f64; 4],
    herald_given_survival: f64,
    eta_t: f64,
    p_key: f64,
    bob_cdf: [f64; 3],
    eta_l: f64,
    fidelity: f64,
    // cos(θ_a + θ_b + θ_c) per 1-based setting triple.
    triple_expectation: [[[f64; 2]; 3]; 2],
    strategy: Strategy,
}

impl RoundModel {
    fn build(config: &SimConfig) -> Result<RoundModel> {
        let ch = &config.channel;
        let eta_t = ch.eta_t();
        let p_d = heralding_probability(ch.transmittance, eta_t)?;
        let vbs = vbs_branch_amplitudes(ch.transmittance)?;
        let (_, joint) = collapsed_joint_state(ch.transmittance, 1.0)?;
        let clicks = gsm_click_distribution(&joint)?;
        let herald_given_survival = clicks.class_probability(HeraldClass::Plus)
            + clicks.class_probability(HeraldClass::Minus);

        let total_bob: f64 = config.bob_weights.iter().sum();
        let mut bob_cdf = [0.0; 3];
        let mut acc = 0.0;
        for (slot, w) in bob_cdf.iter_mut().zip(&config.bob_weights) {
            acc += w / total_bob;
            *slot = acc;
        }

        let angle = |label: SettingLabel| MeasurementSetting::new(label).angle();
        let a_angles = [angle(SettingLabel::A1), angle(SettingLabel::A2)];
        let b_angles = [
            angle(SettingLabel::B1),
            angle(SettingLabel::B2),
            angle(SettingLabel::B3),
        ];
        let c_angles = [angle(SettingLabel::C1), angle(SettingLabel::C2)];
        let mut triple_expectation = [[[0.0; 2]; 3]; 2];
        for (i, ta) in a_angles.iter().enumerate() {
            for (j, tb) in b_angles.iter().enumerate() {
                for (k, tc) in c_angles.iter().enumerate() {
                    triple_expectation[i][j][k] = (ta + tb + tc).cos();
                }
            }
        }

        Ok(RoundModel {
            p_d,
            fast: config.use_fast_path(),
            vbs_weights: vbs.weights(),
            herald_given_survival,
            eta_t,
            p_key: ch.p_key_basis,
            bob_cdf,
            eta_l: ch.eta_l(),
            fidelity: ch.fidelity,
            triple_expectation,
            strategy: ch.strategy,
        })
    }

    fn sample_herald(&self, rng: &mut ChaCha8Rng) -> bool {
        if self.fast {
            return self.p_d > 0.0 && rng.gen_bool(self.p_d);
        }
        // One VBS draw and one survival draw per user, then the analyzer.
        for _ in 0..3 {
            let u: f64 = rng.gen();
            let postselected = u >= self.vbs_weights[0]
                && u < self.vbs_weights[0] + self.vbs_weights[1] + self.vbs_weights[2];
            if !postselected {
                return false;
            }
            if self.eta_t < 1.0 && !rng.gen_bool(self.eta_t) {
                return false;
            }
        }
        rng.gen_bool(self.herald_given_survival)
    }

    fn sample_round(&self, round: u64, seed: u64) -> RoundRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(round);

        if !self.sample_herald(&mut rng) {
            return RoundRecord {
                round,
                herald: false,
                settings: None,
                outcomes: None,
                sift_case: SiftCase::NotHeralded,
                key_bits: None,
            };
        }

        let alice: u8 = if rng.gen_bool(self.p_key) { 1 } else { 2 };
        let bob_u: f64 = rng.gen();
        let bob: u8 = if bob_u < self.bob_cdf[0] {
            1
        } else if bob_u < self.bob_cdf[1] {
            2
        } else {
            3
        };
        let charlie: u8 = if rng.gen_bool(self.p_key) { 1 } else { 2 };

        let delivered = [
            rng.gen_bool(self.eta_l),
            rng.gen_bool(self.eta_l),
            rng.gen_bool(self.eta_l),
        ];
        let mut outcomes = [Outcome::NoClick; 3];
        if delivered.iter().all(|&d| d) {
            if self.fidelity >= 1.0 || rng.gen_bool(self.fidelity) {
                // GHZ statistics: singles and pairs are uniform, only the
                // triple product correlates.
                let e = self.triple_expectation[(alice - 1) as usize][(bob - 1) as usize]
                    [(charlie - 1) as usize];
                let product: i8 = if rng.gen_bool(0.5 * (1.0 + e)) { 1 } else { -1 };
                let a: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
                let b: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
                outcomes = [
                    Outcome::from_sign(a),
                    Outcome::from_sign(b),
                    Outcome::from_sign(product * a * b),
                ];
            } else {
                for o in outcomes.iter_mut() {
                    *o = Outcome::from_sign(if rng.gen_bool(0.5) { 1 } else { -1 });
                }
            }
        } else {
            for (o, d) in outcomes.iter_mut().zip(&delivered) {
                if *d {
                    *o = Outcome::from_sign(if rng.gen_bool(0.5) { 1 } else { -1 });
                }
            }
        }

        // Postselection: resolve every ⊥ with a fair coin at the detector.
        if !matches!(self.strategy, Strategy::None) {
            for o in outcomes.iter_mut() {
                if *o == Outcome::NoClick {
                    *o = Outcome::from_sign(if rng.gen_bool(0.5) { 1 } else { -1 });
                }
            }
        }

        let case = sift_case(alice, bob, charlie);

        // Noise preprocessing touches key rounds only, never security checks.
        if case == SiftCase::KeyGen {
            if let Strategy::Advanced(q) = self.strategy {
                if q > 0.0 && rng.gen_bool(q) {
                    outcomes[0] = match outcomes[0] {
                        Outcome::Plus => Outcome::Minus,
                        Outcome::Minus => Outcome::Plus,
                        Outcome::NoClick => Outcome::NoClick,
                    };
                }
            }
        }

        let key_bits = if case == SiftCase::KeyGen {
            let bits: Option<Vec<u8>> = outcomes
                .iter()
                .map(|o| o.value().map(|v| if v > 0 { 0u8 } else { 1 }))
                .collect();
            bits.map(|b| (b[0], b[1], b[2]))
        } else {
            None
        };

        RoundRecord {
            round,
            herald: true,
            settings: Some((alice, bob, charlie)),
            outcomes: Some(outcomes),
            sift_case: case,
            key_bits,
        }
    }
}

fn make_batches(rounds: u64) -> Vec<std::ops::Range<u64>> {
    let mut batches = Vec::new();
    let mut start = 0u64;
    while start < rounds {
        let end = (start + PAR_BATCH).min(rounds);
        batches.push(start..end);
        start = end;
    }
    batches
}

fn run_simulation(
    config: &SimConfig,
    parallel: bool,
) -> Result<(SimEstimates, Option<Vec<RoundRecord>>)> {
    config.validate()?;
    let model = RoundModel::build(config)?;
    let seed = config.seed;
    let batches = make_batches(config.rounds);
    let worker = |range: std::ops::Range<u64>| -> Vec<RoundRecord> {
        range.map(|round| model.sample_round(round, seed)).collect()
    };
    let chunks = if parallel {
        exec::map_collect(batches, worker)
    } else {
        exec::map_collect_seq(batches, worker)
    };
    let records: Vec<RoundRecord> = chunks.into_iter().flatten().collect();
    let estimates = estimates_from_records(config, &records)?;
    Ok((estimates, config.log_rounds.then_some(records)))
}

fn estimates_from_records(
    config: &SimConfig,
    records: &[RoundRecord],
) -> Result<SimEstimates> {
    let heralded = records.iter().filter(|r| r.herald).count() as u64;
    let partition = sift(records);
    let (check_n, keygen_n, discard_n) = (
        partition.check.len() as u64,
        partition.keygen.len() as u64,
        partition.discard.len() as u64,
    );
    let herald_f = heralded.max(1) as f64;

    let nonlocality = estimate_nonlocality(&partition.check).ok();
    let (s_hat, s_abc_hat) = match nonlocality {
        Some((s, s_abc)) => (Some(s), Some(s_abc)),
        None => (None, None),
    };

    let keygen = if partition.keygen.is_empty() {
        None
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(ANNOUNCE_STREAM);
        Some(keygen_and_reconstruct(
            &partition.keygen,
            config.announce_fraction,
            &mut rng,
        )?)
    };

    Ok(SimEstimates {
        rounds: config.rounds,
        heralded,
        p_d_hat: Estimate::binomial(heralded, config.rounds),
        terminate: s_abc_hat.as_ref().map(|e| e.value <= 4.0),
        s_hat,
        s_abc_hat,
        delta_hat: keygen.as_ref().map(|k| k.delta_hat),
        sift_check_fraction: check_n as f64 / herald_f,
        sift_keygen_fraction: keygen_n as f64 / herald_f,
        sift_discard_fraction: discard_n as f64 / herald_f,
        check_rounds: check_n,
        keygen_rounds: keygen_n,
        discard_rounds: discard_n,
        announced_rounds: keygen.as_ref().map_or(0, |k| k.announced),
        raw_key_len: keygen.as_ref().map_or(0, |k| k.alice_key.len() as u64),
        reconstruction_failure: keygen.as_ref().map(|k| k.reconstruction_failure),
    })
}

/// Run the simulation; rounds execute on the rayon pool when the `parallel`
/// feature is on. Identical (seed, config) pairs produce bit-identical
/// estimates and logs on every path.
pub fn simulate(config: &SimConfig) -> Result<(SimEstimates, Option<Vec<RoundRecord>>)> {
    run_simulation(config, true)
}

/// Sequential reference path for [`simulate`].
pub fn simulate_sequential(
    config: &SimConfig,
) -> Result<(SimEstimates, Option<Vec<RoundRecord>>)> {
    run_simulation(config, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keyrate::ChannelConfig;
    use crate::noise::{chsh_value, total_qber, NoiseParams};

    fn base_sim(rounds: u64, seed: u64) -> SimConfig {
        SimConfig::new(rounds, seed, ChannelConfig::default())
    }

    #[test]
    fn sift_covers_all_twelve_triples() {
        let mut counts = [0usize; 4];
        for a in 1..=2u8 {
            for b in 1..=3u8 {
                for c in 1..=2u8 {
                    match sift_case(a, b, c) {
                        SiftCase::SecurityCheck => counts[0] += 1,
                        SiftCase::KeyGen => counts[1] += 1,
                        SiftCase::Discard => counts[2] += 1,
                        SiftCase::NotHeralded => counts[3] += 1,
                    }
                }
            }
        }
        assert_eq!(counts, [8, 2, 2, 0]);
        assert_eq!(sift_case(1, 2, 2), SiftCase::SecurityCheck);
        assert_eq!(sift_case(2, 1, 2), SiftCase::KeyGen);
        assert_eq!(sift_case(1, 1, 2), SiftCase::Discard);
    }

    #[test]
    fn single_round_record_invariants() {
        let config = base_sim(1, 3);
        let (est, log) = simulate(&SimConfig {
            log_rounds: true,
            ..config
        })
        .unwrap();
        let records = log.unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(est.rounds, 1);
        let r = &records[0];
        assert_eq!(r.herald, r.settings.is_some());
        assert_eq!(r.herald, r.outcomes.is_some());
        if r.sift_case == SiftCase::KeyGen {
            if let Some(o) = &r.outcomes {
                let has_perp = o.iter().any(|x| *x == Outcome::NoClick);
                assert_eq!(r.key_bits.is_some(), !has_perp);
            }
        } else {
            assert!(r.key_bits.is_none());
        }
    }

    #[test]
    fn deterministic_and_parallel_agnostic() {
        let mut config = base_sim(30_000, 42);
        config.channel.eta_c = 0.95;
        config.channel.fidelity = 0.93;
        config.channel.strategy = Strategy::Advanced(0.1);
        config.log_rounds = true;
        let (e1, l1) = simulate(&config).unwrap();
        let (e2, l2) = simulate(&config).unwrap();
        let (e3, l3) = simulate_sequential(&config).unwrap();
        assert_eq!(format!("{e1:?}"), format!("{e2:?}"));
        assert_eq!(format!("{e1:?}"), format!("{e3:?}"));
        let (l1, l2, l3) = (l1.unwrap(), l2.unwrap(), l3.unwrap());
        assert_eq!(l1.len(), l2.len());
        for ((a, b), c) in l1.iter().zip(&l2).zip(&l3) {
            assert_eq!(format!("{a:?}"), format!("{b:?}"));
            assert_eq!(format!("{a:?}"), format!("{c:?}"));
        }
    }

    #[test]
    fn herald_rate_within_three_sigma() {
        let config = base_sim(200_000, 7);
        let (est, _) = simulate(&config).unwrap();
        assert!(est.p_d_hat.z_score(1.0 / 32.0).abs() < 3.0);
    }

    #[test]
    fn fast_and_optics_paths_agree_statistically() {
        let mut fast = base_sim(150_000, 11);
        fast.herald_path = HeraldPath::Fast;
        let mut optics = base_sim(150_000, 13);
        optics.herald_path = HeraldPath::Optics;
        optics.channel.distance_km = 5.0;
        fast.channel.distance_km = 5.0;
        let (ef, _) = simulate(&fast).unwrap();
        let (eo, _) = simulate(&optics).unwrap();
        let diff = (ef.p_d_hat.value - eo.p_d_hat.value).abs();
        let combined = (ef.p_d_hat.std_err.powi(2) + eo.p_d_hat.std_err.powi(2)).sqrt();
        assert!(diff <= 3.0 * combined, "diff {diff} vs 3σ {}", 3.0 * combined);
    }

    #[test]
    fn ideal_run_statistics() {
        let config = base_sim(400_000, 5);
        let (est, _) = simulate(&config).unwrap();
        let s_abc = est.s_abc_hat.unwrap();
        assert!(s_abc.z_score(4.0 * std::f64::consts::SQRT_2).abs() < 3.0);
        let s = est.s_hat.unwrap();
        assert!(s.z_score(2.0 * std::f64::consts::SQRT_2).abs() < 3.0);
        let delta = est.delta_hat.unwrap();
        assert_eq!(delta.value, 0.0);
        assert_eq!(est.terminate, Some(false));
        let recon = est.reconstruction_failure.unwrap();
        assert_eq!(recon.value, 0.0);
        // Sift fractions near (2/3, 1/6, 1/6).
        assert!((est.sift_check_fraction - 2.0 / 3.0).abs() < 0.02);
        assert!((est.sift_keygen_fraction - 1.0 / 6.0).abs() < 0.02);
        assert!((est.sift_discard_fraction - 1.0 / 6.0).abs() < 0.02);
    }

    #[test]
    fn noisy_run_matches_analytic_oracles() {
        let mut config = base_sim(400_000, 17);
        config.channel.fidelity = 0.9;
        config.channel.eta_c = 0.95;
        let (est, _) = simulate(&config).unwrap();
        let noise = NoiseParams::new(0.9, 0.95).unwrap();
        let delta = est.delta_hat.unwrap();
        assert!(
            delta
                .z_score(total_qber(&noise, Strategy::None).unwrap())
                .abs()
                < 3.0
        );
        let s = est.s_hat.unwrap();
        assert!(s.z_score(chsh_value(&noise)).abs() < 3.0);
        let s_abc = est.s_abc_hat.unwrap();
        assert!(s_abc.z_score(2.0 * chsh_value(&noise)).abs() < 3.0);
    }

    #[test]
    fn advanced_flips_touch_keygen_only() {
        let mut config = base_sim(400_000, 23);
        config.channel.strategy = Strategy::Advanced(0.3);
        let (est, _) = simulate(&config).unwrap();
        // Security statistics unaffected by the flips.
        let s_abc = est.s_abc_hat.unwrap();
        assert!(s_abc.z_score(4.0 * std::f64::consts::SQRT_2).abs() < 3.0);
        // Key disagreement follows the preprocessed QBER.
        let noise = NoiseParams::new(1.0, 1.0).unwrap();
        let expected = total_qber(&noise, Strategy::Advanced(0.3)).unwrap();
        let delta = est.delta_hat.unwrap();
        assert!(delta.z_score(expected).abs() < 3.0, "{} vs {expected}", delta.value);
    }

    #[test]
    fn keygen_reconstruction_failure_rate() {
        let mut config = base_sim(400_000, 29);
        config.channel.fidelity = 0.9;
        let (est, _) = simulate(&config).unwrap();
        let recon = est.reconstruction_failure.unwrap();
        assert!(recon.z_score(0.05).abs() < 3.0, "{}", recon.value);
        assert!(est.raw_key_len > 0);
    }

    #[test]
    fn full_announcement_leaves_no_raw_key() {
        let mut config = base_sim(50_000, 31);
        config.announce_fraction = 1.0;
        let (est, _) = simulate(&config).unwrap();
        assert_eq!(est.raw_key_len, 0);
        assert_eq!(est.announced_rounds, est.keygen_rounds);
    }

    #[test]
    fn keygen_op_rejects_empty_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(keygen_and_reconstruct(&[], 0.5, &mut rng).is_err());
    }

    #[test]
    fn estimator_rejects_missing_cells() {
        // Heralded check rounds all in one cell: the other cells are empty.
        let record = RoundRecord {
            round: 0,
            herald: true,
            settings: Some((1, 2, 1)),
            outcomes: Some([Outcome::Plus, Outcome::Plus, Outcome::Plus]),
            sift_case: SiftCase::SecurityCheck,
            key_bits: None,
        };
        assert!(matches!(
            estimate_nonlocality(&[record]),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn zero_rounds_rejected() {
        let config = base_sim(0, 1);
        assert!(simulate(&config).is_err());
    }
}
