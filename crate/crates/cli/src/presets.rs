//! Named sweep presets pinning the parameter choices behind the standard
//! result curves. Parameters for each preset are frozen here and documented
//! in the README table.

use diqss_core::keyrate::SweepAxis;

use crate::config::{StrategyKind, ToolConfig};

/// One curve of a preset: a label plus the config edits that produce it.
#[derive(Debug, Clone)]
pub struct CurveSpec {
    pub label: &'static str,
    pub fidelity: Option<f64>,
    pub strategy: Option<(StrategyKind, f64)>,
    pub basis_mode: Option<&'static str>,
    pub eta_local: Option<f64>,
}

impl CurveSpec {
    fn new(label: &'static str) -> Self {
        CurveSpec {
            label,
            fidelity: None,
            strategy: None,
            basis_mode: None,
            eta_local: None,
        }
    }

    pub fn apply(&self, config: &mut ToolConfig) {
        if let Some(f) = self.fidelity {
            config.fidelity = f;
        }
        if let Some((kind, q)) = self.strategy {
            config.strategy = kind;
            config.flip_q = q;
        }
        if let Some(mode) = self.basis_mode {
            config.basis_mode = mode.to_string();
        }
        if let Some(eta) = self.eta_local {
            config.eta_c = eta;
            config.eta_m = 1.0;
            config.eta_d = 1.0;
        }
    }
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub axis: SweepAxis,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub curves: Vec<CurveSpec>,
}

/// Preset table. Baselines: T = 0.5, α = 0.2 dB/km, R_rep = 10⁷ Hz,
/// P_c = 0.5, p = 0.5, η_l = 1, F = 1 unless a curve overrides them.
pub fn preset(name: &str) -> Option<Preset> {
    match name {
        // Rate vs distance for a family of fidelities at unit local
        // efficiency.
        "fig2" => Some(Preset {
            axis: SweepAxis::Distance,
            lo: 0.0,
            hi: 160.0,
            steps: 161,
            curves: [1.0, 0.98, 0.95, 0.9]
                .iter()
                .zip(["F=1", "F=0.98", "F=0.95", "F=0.9"])
                .map(|(f, label)| CurveSpec {
                    fidelity: Some(*f),
                    ..CurveSpec::new(label)
                })
                .collect(),
        }),
        // Ideal-parameter rate vs distance, two-basis against single-basis
        // key generation.
        "fig3" => Some(Preset {
            axis: SweepAxis::Distance,
            lo: 0.0,
            hi: 160.0,
            steps: 161,
            curves: vec![
                CurveSpec {
                    basis_mode: Some("two"),
                    ..CurveSpec::new("two-basis")
                },
                CurveSpec {
                    basis_mode: Some("single"),
                    ..CurveSpec::new("single-basis")
                },
            ],
        }),
        // Asymptotic rate vs local efficiency with and without
        // postselection.
        "fig4" => Some(Preset {
            axis: SweepAxis::EtaL,
            lo: 0.90,
            hi: 1.0,
            steps: 101,
            curves: vec![
                CurveSpec {
                    strategy: Some((StrategyKind::None, 0.0)),
                    ..CurveSpec::new("none")
                },
                CurveSpec {
                    strategy: Some((StrategyKind::Post, 0.0)),
                    ..CurveSpec::new("post")
                },
            ],
        }),
        // Practical rate vs local efficiency across the strategy family.
        "fig5" => Some(Preset {
            axis: SweepAxis::EtaL,
            lo: 0.90,
            hi: 1.0,
            steps: 101,
            curves: vec![
                CurveSpec {
                    strategy: Some((StrategyKind::None, 0.0)),
                    ..CurveSpec::new("none")
                },
                CurveSpec {
                    strategy: Some((StrategyKind::Post, 0.0)),
                    ..CurveSpec::new("post(q=0)")
                },
                CurveSpec {
                    strategy: Some((StrategyKind::Advanced, 0.05)),
                    ..CurveSpec::new("advanced(q=0.05)")
                },
                CurveSpec {
                    strategy: Some((StrategyKind::Advanced, 0.2)),
                    ..CurveSpec::new("advanced(q=0.2)")
                },
                CurveSpec {
                    strategy: Some((StrategyKind::Advanced, 0.4)),
                    ..CurveSpec::new("advanced(q=0.4)")
                },
            ],
        }),
        // Rate vs distance at η_l = 0.97, with and without postselection.
        "fig6" => Some(Preset {
            axis: SweepAxis::Distance,
            lo: 0.0,
            hi: 120.0,
            steps: 121,
            curves: vec![
                CurveSpec {
                    strategy: Some((StrategyKind::None, 0.0)),
                    eta_local: Some(0.97),
                    ..CurveSpec::new("none")
                },
                CurveSpec {
                    strategy: Some((StrategyKind::Post, 0.0)),
                    eta_local: Some(0.97),
                    ..CurveSpec::new("post")
                },
            ],
        }),
        _ => None,
    }
}
