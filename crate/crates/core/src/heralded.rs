//! Heralded construction of the three-partite GHZ channel.
//!
//! Each user feeds an |H⟩⊗|V⟩ photon pair through a variable beam splitter
//! (VBS); the round keeps only branches with one transmitted and one
//! reflected photon per user. Transmitted photons cross a lossy channel to a
//! joint three-photon GHZ analyzer whose two identifiable outcomes herald the
//! memory-side GHZ state; reflected photons wait in an all-optical storage
//! loop until the herald arrives.
//!
//! Photon index convention for the six-photon collapsed state: photons 0–2
//! are the analyzer input arms of users a, b, c; photons 3–5 are the matching
//! memory photons.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::polarization::{ghz_state, GhzLabel, Op2, Pol, PureState};

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(Error::OutOfRange {
            name,
            value,
            requirement: "must lie in [0, 1]",
        });
    }
    Ok(())
}

/// Path taken by one photon at the VBS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VbsPath {
    Transmitted,
    Reflected,
}

/// One photon's VBS branch with its amplitude weight (√T or √(1−T)).
#[derive(Debug, Clone, Copy)]
pub struct VbsBranch {
    pub path: VbsPath,
    pub amplitude: f64,
}

/// The four two-photon branches of one user's VBS, as (H branch, V branch).
#[derive(Debug, Clone)]
pub struct VbsBranching {
    pub transmittance: f64,
    pub branches: [(VbsBranch, VbsBranch); 4],
}

impl VbsBranching {
    /// Probability weights of the four branches, ordered (TT, TR, RT, RR).
    pub fn weights(&self) -> [f64; 4] {
        let mut w = [0.0; 4];
        for (i, (h, v)) in self.branches.iter().enumerate() {
            w[i] = h.amplitude.powi(2) * v.amplitude.powi(2);
        }
        w
    }

    /// Probability of the kept branches: one transmitted, one reflected.
    pub fn postselected_probability(&self) -> f64 {
        self.branches
            .iter()
            .filter(|(h, v)| h.path != v.path)
            .map(|(h, v)| h.amplitude.powi(2) * v.amplitude.powi(2))
            .sum()
    }
}

/// The four two-photon VBS branch weights for one user at transmittance `t`.
pub fn vbs_branch_amplitudes(t: f64) -> Result<VbsBranching> {
    check_unit("T", t)?;
    let trans = VbsBranch {
        path: VbsPath::Transmitted,
        amplitude: t.sqrt(),
    };
    let refl = VbsBranch {
        path: VbsPath::Reflected,
        amplitude: (1.0 - t).sqrt(),
    };
    Ok(VbsBranching {
        transmittance: t,
        branches: [
            (trans, trans),
            (trans, refl),
            (refl, trans),
            (refl, refl),
        ],
    })
}

/// The postselected six-photon branch after the VBSs and the lossy channels.
///
/// Returns `(weight, state)`: `weight` is the total probability of the
/// surviving branch, `8 (η_t T(1−T))³`; `state` is the normalized tensor
/// product of three (|HV⟩+|VH⟩)/√2 arm–memory pairs, reordered to arms first.
/// Loss affects the weight only, never the surviving state.
pub fn collapsed_joint_state(t: f64, eta_t: f64) -> Result<(f64, PureState)> {
    check_unit("T", t)?;
    check_unit("eta_t", eta_t)?;
    let weight = 8.0 * (eta_t * t * (1.0 - t)).powi(3);
    let amp = Complex64::new((1.0f64 / 8.0).sqrt(), 0.0);
    let mut amps = vec![Complex64::default(); 64];
    for arms in 0..8usize {
        let mems = 0b111 ^ arms;
        amps[(arms << 3) | mems] = amp;
    }
    let state = PureState::new(6, amps)?;
    Ok((weight, state))
}

/// Probability of successfully establishing the heralded GHZ channel:
/// `2 η_t³ T³ (1−T)³`.
pub fn heralding_probability(t: f64, eta_t: f64) -> Result<f64> {
    check_unit("T", t)?;
    check_unit("eta_t", eta_t)?;
    Ok(2.0 * eta_t.powi(3) * t.powi(3) * (1.0 - t).powi(3))
}

/// Transmittance maximizing the heralding probability (0.5 for any η_t).
pub fn optimal_vbs(eta_t: f64) -> Result<f64> {
    if !(eta_t > 0.0 && eta_t <= 1.0) {
        return Err(Error::OutOfRange {
            name: "eta_t",
            value: eta_t,
            requirement: "must lie in (0, 1]",
        });
    }
    let f = |t: f64| 2.0 * eta_t.powi(3) * t.powi(3) * (1.0 - t).powi(3);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let mut best = 0.5 * (lo + hi);

    // The objective is flat to machine precision near the maximum, which
    // caps ternary search at ~1e-8. Polish by bisecting the sign of a
    // central difference, which stays resolvable much closer to the peak.
    let h = 1e-4;
    let g = |t: f64| f(t + h) - f(t - h);
    let (mut a, mut b) = ((best - 0.01).max(h), (best + 0.01).min(1.0 - h));
    if g(a) > 0.0 && g(b) < 0.0 {
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            if g(m) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        best = 0.5 * (a + b);
    }
    Ok(best)
}

/// Verdict of the joint GHZ analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsmVerdict {
    HeraldPlus,
    HeraldMinus,
    Fail,
}

/// One projective outcome of the GHZ analyzer on the six-photon state.
#[derive(Debug, Clone)]
pub struct GsmResult {
    pub verdict: GsmVerdict,
    /// Arm-side basis label the joint state was projected onto.
    pub projected_onto: GhzLabel,
    /// Heralded state of the three memory photons; present iff the verdict
    /// is not `Fail`.
    pub heralded_state: Option<PureState>,
}

/// Project the analyzer arms (photons 0–2) of a six-photon state onto the
/// GHZ basis. Returns one `(result, probability)` entry per basis label.
///
/// The analyzer identifies only the first GHZ pair: projections onto
/// (1,+) and (1,−) herald, the other six fail.
pub fn gsm_project(joint: &PureState) -> Result<Vec<(GsmResult, f64)>> {
    if joint.n_photons() != 6 {
        return Err(Error::PhotonCount {
            expected: 6,
            got: joint.n_photons(),
        });
    }
    let mut out = Vec::with_capacity(8);
    for label in GhzLabel::all() {
        let ghz = ghz_state(label);
        let mut mem = vec![Complex64::default(); 8];
        for arms in 0..8usize {
            let coeff = ghz.amplitude(arms).conj();
            if coeff == Complex64::default() {
                continue;
            }
            for (j, m) in mem.iter_mut().enumerate() {
                *m += coeff * joint.amplitude((arms << 3) | j);
            }
        }
        let prob: f64 = mem.iter().map(|a| a.norm_sqr()).sum();
        let verdict = match (label.index, label.plus) {
            (1, true) => GsmVerdict::HeraldPlus,
            (1, false) => GsmVerdict::HeraldMinus,
            _ => GsmVerdict::Fail,
        };
        let heralded_state = if verdict != GsmVerdict::Fail && prob > 0.0 {
            Some(PureState::normalized(3, mem)?)
        } else {
            None
        };
        out.push((
            GsmResult {
                verdict,
                projected_onto: label,
                heralded_state,
            },
            prob,
        ));
    }
    Ok(out)
}

/// Alice's conditional phase flip on her memory photon (σz on photon 0),
/// which maps the minus-herald state onto the plus one.
pub fn alice_phase_flip(state: &PureState) -> PureState {
    state.apply_single(&Op2::sigma_z(), 0)
}

/// Detectors fired in a triple coincidence, one per output arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ClickPattern {
    /// Detector polarization per arm: `dets[i]` = H means D(i+1)H fired.
    pub dets: [Pol; 3],
}

impl std::fmt::Display for ClickPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "D1{} D2{} D3{}",
            self.dets[0], self.dets[1], self.dets[2]
        )
    }
}

/// Herald class of a coincidence pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeraldClass {
    Plus,
    Minus,
}

#[derive(Debug, Clone)]
pub struct ClickEntry {
    pub pattern: ClickPattern,
    pub class: HeraldClass,
    pub probability: f64,
}

/// Full coincidence table of the analyzer for one input state.
#[derive(Debug, Clone)]
pub struct ClickDistribution {
    /// The eight one-click-per-arm patterns with class and probability.
    pub coincidences: Vec<ClickEntry>,
    /// Probability of all remaining (non-heralding) detector configurations.
    pub no_coincidence: f64,
}

impl ClickDistribution {
    pub fn class_probability(&self, class: HeraldClass) -> f64 {
        self.coincidences
            .iter()
            .filter(|e| e.class == class)
            .map(|e| e.probability)
            .sum()
    }
}

/// State-vector simulation of the linear-optics GHZ analyzer.
///
/// Photons 0–2 of `state` are the analyzer inputs (one photon per input
/// arm); any further photons are spectators and are traced out. The network
/// is a cascade of two polarizing beam splitters followed by a diagonal-basis
/// rotation and per-arm H/V detectors. Input mode routing:
/// (0,H)→arm0, (0,V)→arm2, (1,H)→arm1, (1,V)→arm0, (2,H)→arm2, (2,V)→arm1,
/// so a triple coincidence arises only from the |HHH⟩ and |VVV⟩ components.
pub fn gsm_click_distribution(state: &PureState) -> Result<ClickDistribution> {
    if state.n_photons() < 3 {
        return Err(Error::PhotonCount {
            expected: 3,
            got: state.n_photons(),
        });
    }
    let n_spec = state.n_photons() - 3;
    let spec_dim = 1usize << n_spec;
    let scale = (1.0f64 / 8.0).sqrt();

    let mut coincidences = Vec::with_capacity(8);
    let mut total = 0.0;
    for d in 0..8usize {
        let v_count = (d as u32).count_ones();
        let sign = if v_count % 2 == 0 { 1.0 } else { -1.0 };
        let mut prob = 0.0;
        for spec in 0..spec_dim {
            let a_hhh = state.amplitude(spec); // arms 000
            let a_vvv = state.amplitude((0b111 << n_spec) | spec);
            prob += (scale * (a_hhh + a_vvv * sign)).norm_sqr();
        }
        let dets = [
            if d & 0b100 == 0 { Pol::H } else { Pol::V },
            if d & 0b010 == 0 { Pol::H } else { Pol::V },
            if d & 0b001 == 0 { Pol::H } else { Pol::V },
        ];
        let class = if v_count % 2 == 0 {
            HeraldClass::Plus
        } else {
            HeraldClass::Minus
        };
        total += prob;
        coincidences.push(ClickEntry {
            pattern: ClickPattern { dets },
            class,
            probability: prob,
        });
    }
    Ok(ClickDistribution {
        coincidences,
        no_coincidence: (1.0 - total).max(0.0),
    })
}

/// Electro-optical modulator control state for one loop pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EomState {
    On,
    Off,
}

/// Ordered EOM control states, one per pass of the photon through the loop.
#[derive(Debug, Clone)]
pub struct EomSchedule {
    pub passes: Vec<EomState>,
}

impl EomSchedule {
    /// The schedule that stores a photon for `round_trips` cycles: OFF on
    /// entry, ON for each storage cycle, OFF at readout.
    pub fn canonical(round_trips: usize) -> Self {
        let mut passes = Vec::with_capacity(round_trips + 2);
        passes.push(EomState::Off);
        passes.extend(std::iter::repeat(EomState::On).take(round_trips));
        passes.push(EomState::Off);
        EomSchedule { passes }
    }

    fn validate(&self, round_trips: usize) -> Result<()> {
        let want = round_trips + 2;
        if self.passes.len() != want {
            return Err(Error::MalformedSchedule {
                reason: format!(
                    "need {want} passes for {round_trips} storage cycles, got {}",
                    self.passes.len()
                ),
            });
        }
        if self.passes[0] != EomState::Off {
            return Err(Error::MalformedSchedule {
                reason: "entry pass must be OFF".into(),
            });
        }
        if *self.passes.last().unwrap() != EomState::Off {
            return Err(Error::MalformedSchedule {
                reason: "readout pass must be OFF (photon would stay in the loop)".into(),
            });
        }
        if let Some(i) = self.passes[1..=round_trips]
            .iter()
            .position(|p| *p != EomState::On)
        {
            return Err(Error::MalformedSchedule {
                reason: format!(
                    "storage pass {} is OFF; photon would exit early",
                    i + 1
                ),
            });
        }
        Ok(())
    }
}

/// Ports of the storage-loop beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopPort {
    Q1,
    Q2,
    Q3,
    Q4,
}

impl std::fmt::Display for LoopPort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LoopPort::Q1 => "Q1",
            LoopPort::Q2 => "Q2",
            LoopPort::Q3 => "Q3",
            LoopPort::Q4 => "Q4",
        })
    }
}

/// Optical element producing one trace step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceElement {
    Input,
    Pbs,
    Eom(EomState),
    DoubleQwp,
    Hwp,
    Output,
}

impl std::fmt::Display for TraceElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraceElement::Input => f.write_str("in"),
            TraceElement::Pbs => f.write_str("PBS"),
            TraceElement::Eom(EomState::On) => f.write_str("EOM(ON)"),
            TraceElement::Eom(EomState::Off) => f.write_str("EOM(OFF)"),
            TraceElement::DoubleQwp => f.write_str("2xQWP"),
            TraceElement::Hwp => f.write_str("HWP"),
            TraceElement::Output => f.write_str("out"),
        }
    }
}

/// One pass-by-pass record of the photon's port and polarization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceStep {
    pub element: TraceElement,
    pub port: LoopPort,
    pub pol: Pol,
}

/// Full trace of one storage/readout run.
#[derive(Debug, Clone)]
pub struct QmTrace {
    pub input: Pol,
    pub output: Pol,
    pub steps: Vec<TraceStep>,
}

/// Trace a photon through the storage loop under an EOM schedule.
///
/// The loop beam splitter transmits H (Q1↔Q2, Q3↔Q4) and reflects V
/// (Q1↔Q3, Q2↔Q4); the loop fiber connects Q2 and Q3 through the EOM; a
/// mirror-backed quarter-wave plate on Q4 flips the polarization each cycle;
/// the recovery half-wave plate sits at the Q1 output.
pub fn qm_trace(input: Pol, round_trips: usize, schedule: &EomSchedule) -> Result<QmTrace> {
    schedule.validate(round_trips)?;

    let mut steps = Vec::new();
    let mut pol = input;
    steps.push(TraceStep {
        element: TraceElement::Input,
        port: LoopPort::Q1,
        pol,
    });

    // Entry split: H transmits to Q2, V reflects to Q3.
    let mut port = match pol {
        Pol::H => LoopPort::Q2,
        Pol::V => LoopPort::Q3,
    };
    steps.push(TraceStep {
        element: TraceElement::Pbs,
        port,
        pol,
    });

    for pass in &schedule.passes {
        // Loop fiber traversal through the EOM: Q2 ↔ Q3.
        let next = match port {
            LoopPort::Q2 => LoopPort::Q3,
            LoopPort::Q3 => LoopPort::Q2,
            _ => unreachable!("photon is always on a loop port before an EOM pass"),
        };
        if *pass == EomState::On {
            pol = pol.flipped();
        }
        steps.push(TraceStep {
            element: TraceElement::Eom(*pass),
            port: next,
            pol,
        });
        port = next;

        let dest = match (port, pol) {
            (LoopPort::Q3, Pol::H) => LoopPort::Q4,
            (LoopPort::Q3, Pol::V) => LoopPort::Q1,
            (LoopPort::Q2, Pol::H) => LoopPort::Q1,
            (LoopPort::Q2, Pol::V) => LoopPort::Q4,
            _ => unreachable!(),
        };
        steps.push(TraceStep {
            element: TraceElement::Pbs,
            port: dest,
            pol,
        });

        if dest == LoopPort::Q1 {
            pol = pol.flipped();
            steps.push(TraceStep {
                element: TraceElement::Hwp,
                port: LoopPort::Q1,
                pol,
            });
            steps.push(TraceStep {
                element: TraceElement::Output,
                port: LoopPort::Q1,
                pol,
            });
            return Ok(QmTrace {
                input,
                output: pol,
                steps,
            });
        }

        pol = pol.flipped();
        steps.push(TraceStep {
            element: TraceElement::DoubleQwp,
            port: LoopPort::Q4,
            pol,
        });
        port = match pol {
            Pol::H => LoopPort::Q3,
            Pol::V => LoopPort::Q2,
        };
        steps.push(TraceStep {
            element: TraceElement::Pbs,
            port,
            pol,
        });
    }

    Err(Error::MalformedSchedule {
        reason: "schedule exhausted before the photon exited the loop".into(),
    })
}

/// Retention probability of a photon stored for `round_trips` cycles.
pub fn qm_survival(round_trips: usize, per_trip_efficiency: f64) -> Result<f64> {
    check_unit("per_trip_efficiency", per_trip_efficiency)?;
    Ok(per_trip_efficiency.powi(round_trips as i32))
}
