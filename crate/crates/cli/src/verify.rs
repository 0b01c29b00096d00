//! Verification dumps: the analyzer click-pattern table and the
//! storage-loop traces.

use diqss_core::heralded::{
    collapsed_joint_state, gsm_click_distribution, qm_trace, ClickPattern, EomSchedule,
    HeraldClass,
};
use diqss_core::polarization::{ghz_state, GhzLabel, Pol};

/// Conventionally tabulated coincidence lists for the two heralded classes,
/// as `(arm1, arm2, arm3)` detector polarizations. The minus list below is
/// the one that circulates with a duplicated entry; the simulated partition
/// is authoritative and the dump flags every difference.
const REFERENCE_PLUS: [[Pol; 3]; 4] = [
    [Pol::H, Pol::H, Pol::H],
    [Pol::H, Pol::V, Pol::V],
    [Pol::V, Pol::H, Pol::V],
    [Pol::V, Pol::V, Pol::H],
];
const REFERENCE_MINUS: [[Pol; 3]; 4] = [
    [Pol::H, Pol::V, Pol::V],
    [Pol::H, Pol::H, Pol::V],
    [Pol::V, Pol::H, Pol::H],
    [Pol::H, Pol::V, Pol::H],
];

fn class_name(class: HeraldClass) -> &'static str {
    match class {
        HeraldClass::Plus => "plus",
        HeraldClass::Minus => "minus",
    }
}

/// Text dump plus optional CSV body for the analyzer verification.
pub fn gsm_dump() -> Result<(String, String), diqss_core::Error> {
    let mut text = String::new();
    let mut csv = String::from("input,pattern,class,probability\n");

    let (_, joint) = collapsed_joint_state(0.5, 1.0)?;
    let dist = gsm_click_distribution(&joint)?;
    text.push_str("analyzer coincidence table on the postselected six-photon state\n");
    text.push_str("(arm photons 0-2, memory photons traced out)\n\n");
    text.push_str("  pattern          class   probability\n");
    for entry in &dist.coincidences {
        text.push_str(&format!(
            "  {:<15}  {:<6}  {:.12}\n",
            entry.pattern.to_string(),
            class_name(entry.class),
            entry.probability
        ));
        csv.push_str(&format!(
            "joint,{},{},{}\n",
            entry.pattern,
            class_name(entry.class),
            crate::output::sig12(entry.probability)
        ));
    }
    let p_plus = dist.class_probability(HeraldClass::Plus);
    let p_minus = dist.class_probability(HeraldClass::Minus);
    let plus_count = dist
        .coincidences
        .iter()
        .filter(|e| e.class == HeraldClass::Plus)
        .count();
    text.push_str(&format!(
        "\nclass partition: {plus_count} plus / {} minus patterns\n",
        dist.coincidences.len() - plus_count
    ));
    text.push_str(&format!(
        "herald probability: plus {p_plus:.12} + minus {p_minus:.12} = {:.12}\n",
        p_plus + p_minus
    ));

    text.push_str("\nper-input herald response (three-photon GHZ basis states):\n");
    for label in GhzLabel::all() {
        let d = gsm_click_distribution(&ghz_state(label))?;
        text.push_str(&format!(
            "  {:<6} -> plus {:.3}  minus {:.3}  no-coincidence {:.3}\n",
            label.to_string(),
            d.class_probability(HeraldClass::Plus),
            d.class_probability(HeraldClass::Minus),
            d.no_coincidence
        ));
        for entry in &d.coincidences {
            if entry.probability > 1e-15 {
                csv.push_str(&format!(
                    "{label},{},{},{}\n",
                    entry.pattern,
                    class_name(entry.class),
                    crate::output::sig12(entry.probability)
                ));
            }
        }
    }

    // Compare the simulated partition against the tabulated reference lists.
    let simulated_plus: Vec<ClickPattern> = dist
        .coincidences
        .iter()
        .filter(|e| e.class == HeraldClass::Plus)
        .map(|e| e.pattern)
        .collect();
    let simulated_minus: Vec<ClickPattern> = dist
        .coincidences
        .iter()
        .filter(|e| e.class == HeraldClass::Minus)
        .map(|e| e.pattern)
        .collect();
    text.push_str("\nreference-list comparison:\n");
    let mut flagged = false;
    for (name, reference, simulated) in [
        ("plus", &REFERENCE_PLUS, &simulated_plus),
        ("minus", &REFERENCE_MINUS, &simulated_minus),
    ] {
        for dets in reference {
            let pattern = ClickPattern { dets: *dets };
            if !simulated.contains(&pattern) {
                let actual = if simulated_plus.contains(&pattern) {
                    "plus"
                } else if simulated_minus.contains(&pattern) {
                    "minus"
                } else {
                    "none"
                };
                text.push_str(&format!(
                    "  FLAG reference {name} list entry {pattern} is simulated as class {actual}\n"
                ));
                flagged = true;
            }
        }
        for pattern in simulated {
            if !reference.iter().any(|d| ClickPattern { dets: *d } == *pattern) {
                text.push_str(&format!(
                    "  FLAG simulated {name} pattern {pattern} missing from the reference {name} list\n"
                ));
                flagged = true;
            }
        }
    }
    if !flagged {
        text.push_str("  reference lists match the simulation\n");
    }

    text.push_str("\nconventions: B2 = (sigma_x - sigma_y)/sqrt(2), B3 = (sigma_x + sigma_y)/sqrt(2)\n");
    text.push_str("(write-ups that name both check bases B2 are read with the second as B3);\n");
    text.push_str("the Svetlichny sum pairs S_AB with C1 = sigma_x and S_AB' with C2 = -sigma_y.\n");

    Ok((text, csv))
}

/// Text dump plus CSV body of the storage-loop traces for both inputs.
pub fn qm_dump(round_trips: usize) -> Result<(String, String), diqss_core::Error> {
    let mut text = String::new();
    let mut csv = String::from("input,step,element,port,pol\n");
    let schedule = EomSchedule::canonical(round_trips);
    for pol in [Pol::H, Pol::V] {
        let trace = qm_trace(pol, round_trips, &schedule)?;
        text.push_str(&format!(
            "input {pol}, {round_trips} storage cycle(s): output {}\n",
            trace.output
        ));
        for (i, step) in trace.steps.iter().enumerate() {
            text.push_str(&format!(
                "  {:>2}  {:<8} {:<3} {}\n",
                i, step.element.to_string(), step.port.to_string(), step.pol
            ));
            csv.push_str(&format!(
                "{pol},{i},{},{},{}\n",
                step.element, step.port, step.pol
            ));
        }
        text.push('\n');
    }
    text.push_str("polarization is preserved end-to-end; the recovery half-wave plate\n");
    text.push_str("undoes the flip the readout pass leaves on the stored photon.\n");
    Ok((text, csv))
}
