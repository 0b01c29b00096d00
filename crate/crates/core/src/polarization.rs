//! Exact linear algebra on small polarization Hilbert spaces.
//!
//! States are dense complex amplitude vectors over `{H, V}` basis strings of
//! one to six photons. Basis index order is fixed: photon 0 occupies the most
//! significant bit of the basis index, with `H = 0` and `V = 1`. All equality
//! assertions downstream are on probabilities or squared inner products, so a
//! global phase is never constrained.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Normalization tolerance for state vectors and probability tables.
pub const NORM_TOL: f64 = 1e-12;

/// Photon polarization in the rectilinear basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub fn flipped(self) -> Self {
        match self {
            Pol::H => Pol::V,
            Pol::V => Pol::H,
        }
    }

    pub fn bit(self) -> usize {
        match self {
            Pol::H => 0,
            Pol::V => 1,
        }
    }
}

impl std::fmt::Display for Pol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Pol::H => "H",
            Pol::V => "V",
        })
    }
}

/// A pure polarization state of `n_photons` photons.
///
/// The zero-photon state (vacuum) is the distinguished one-dimensional state
/// with a single unit amplitude; mixed-photon-number situations are handled
/// upstream as classical branch weights, never as amplitudes here.
#[derive(Debug, Clone)]
pub struct PureState {
    n_photons: usize,
    amps: Vec<Complex64>,
}

impl PureState {
    /// Build a normalized state from raw amplitudes.
    pub fn new(n_photons: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << n_photons {
            return Err(Error::PhotonCount {
                expected: n_photons,
                got: amps.len().trailing_zeros() as usize,
            });
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized {
                norm_sq,
                tol: NORM_TOL,
            });
        }
        Ok(Self { n_photons, amps })
    }

    /// Normalize an arbitrary non-zero amplitude vector.
    pub fn normalized(n_photons: usize, amps: Vec<Complex64>) -> Result<Self> {
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= 0.0 {
            return Err(Error::NotNormalized {
                norm_sq,
                tol: NORM_TOL,
            });
        }
        let scale = norm_sq.sqrt().recip();
        let amps = amps.into_iter().map(|a| a * scale).collect();
        Self::new(n_photons, amps)
    }

    /// The vacuum: zero photons, unit amplitude.
    pub fn vacuum() -> Self {
        Self {
            n_photons: 0,
            amps: vec![Complex64::new(1.0, 0.0)],
        }
    }

    /// Single-photon basis state |H⟩ or |V⟩.
    pub fn single(pol: Pol) -> Self {
        let mut amps = vec![Complex64::default(); 2];
        amps[pol.bit()] = Complex64::new(1.0, 0.0);
        Self { n_photons: 1, amps }
    }

    /// Computational basis state for a polarization string.
    pub fn basis(pols: &[Pol]) -> Self {
        let n = pols.len();
        let mut idx = 0usize;
        for p in pols {
            idx = (idx << 1) | p.bit();
        }
        let mut amps = vec![Complex64::default(); 1 << n];
        amps[idx] = Complex64::new(1.0, 0.0);
        Self { n_photons: n, amps }
    }

    pub fn n_photons(&self) -> usize {
        self.n_photons
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, basis_index: usize) -> Complex64 {
        self.amps[basis_index]
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        assert_eq!(self.n_photons, other.n_photons, "photon count mismatch");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// |⟨self|other⟩|², i.e. the fidelity between two pure states.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Tensor product, `self` photons first (most significant).
    pub fn tensor(&self, other: &PureState) -> PureState {
        let n = self.n_photons + other.n_photons;
        let mut amps = vec![Complex64::default(); 1 << n];
        for (i, a) in self.amps.iter().enumerate() {
            if *a == Complex64::default() {
                continue;
            }
            for (j, b) in other.amps.iter().enumerate() {
                amps[(i << other.n_photons) | j] = a * b;
            }
        }
        PureState { n_photons: n, amps }
    }

    /// Apply a 2×2 single-photon operator to photon `photon` (0 = most
    /// significant position), returning the possibly unnormalized image.
    pub fn apply_single(&self, op: &Op2, photon: usize) -> PureState {
        assert!(photon < self.n_photons);
        let shift = self.n_photons - 1 - photon;
        let mask = 1usize << shift;
        let mut amps = vec![Complex64::default(); self.amps.len()];
        for (idx, a) in self.amps.iter().enumerate() {
            if *a == Complex64::default() {
                continue;
            }
            let bit = (idx & mask) >> shift;
            for (out_bit, row) in op.m.iter().enumerate() {
                let coeff = row[bit];
                if coeff != Complex64::default() {
                    let out_idx = (idx & !mask) | (out_bit << shift);
                    amps[out_idx] += coeff * a;
                }
            }
        }
        PureState {
            n_photons: self.n_photons,
            amps,
        }
    }
}

/// Dense 2×2 complex operator, `m[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Op2 {
    pub m: [[Complex64; 2]; 2],
}

impl Op2 {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Op2 {
            m: [[one, Complex64::default()], [Complex64::default(), one]],
        }
    }

    pub fn sigma_x() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Op2 {
            m: [[Complex64::default(), one], [one, Complex64::default()]],
        }
    }

    pub fn sigma_y() -> Self {
        let i = Complex64::new(0.0, 1.0);
        Op2 {
            m: [[Complex64::default(), -i], [i, Complex64::default()]],
        }
    }

    pub fn sigma_z() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Op2 {
            m: [[one, Complex64::default()], [Complex64::default(), -one]],
        }
    }

    /// Polarization Hadamard: H → (H+V)/√2, V → (H−V)/√2.
    pub fn hadamard() -> Self {
        let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Op2 {
            m: [[r, r], [r, -r]],
        }
    }

    pub fn scale(self, k: f64) -> Self {
        let k = Complex64::new(k, 0.0);
        Op2 {
            m: [
                [self.m[0][0] * k, self.m[0][1] * k],
                [self.m[1][0] * k, self.m[1][1] * k],
            ],
        }
    }

    pub fn add(self, other: Op2) -> Self {
        Op2 {
            m: [
                [self.m[0][0] + other.m[0][0], self.m[0][1] + other.m[0][1]],
                [self.m[1][0] + other.m[1][0], self.m[1][1] + other.m[1][1]],
            ],
        }
    }

    pub fn mul(self, other: Op2) -> Self {
        let mut m = [[Complex64::default(); 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = self.m[r][0] * other.m[0][c] + self.m[r][1] * other.m[1][c];
            }
        }
        Op2 { m }
    }
}

/// Label of one of the eight three-photon GHZ basis states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GhzLabel {
    /// Pattern index in 1..=4.
    pub index: u8,
    /// Relative sign of the second ket.
    pub plus: bool,
}

impl GhzLabel {
    pub fn new(index: u8, plus: bool) -> Self {
        assert!((1..=4).contains(&index), "GHZ index must be in 1..=4");
        GhzLabel { index, plus }
    }

    /// All eight labels in a fixed order: (1,+), (1,−), (2,+), ...
    pub fn all() -> [GhzLabel; 8] {
        let mut out = [GhzLabel { index: 1, plus: true }; 8];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = GhzLabel {
                index: (i / 2 + 1) as u8,
                plus: i % 2 == 0,
            };
        }
        out
    }
}

impl std::fmt::Display for GhzLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GHZ{}{}", self.index, if self.plus { "+" } else { "-" })
    }
}

/// The three-photon GHZ state for a label.
///
/// Pattern `k` pairs the basis string with photons 1,2 spelling `k−1` in
/// binary against its bitwise complement: (HHH, VVV), (HHV, VVH),
/// (HVH, VHV), (HVV, VHH).
pub fn ghz_state(label: GhzLabel) -> PureState {
    let first = (label.index - 1) as usize; // photon 0 = H
    let second = 0b111 ^ first;
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut amps = vec![Complex64::default(); 8];
    amps[first] = r;
    amps[second] = if label.plus { r } else { -r };
    PureState { n_photons: 3, amps }
}

/// Communicating party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Party {
    Alice,
    Bob,
    Charlie,
}

impl Party {
    pub fn name(self) -> &'static str {
        match self {
            Party::Alice => "Alice",
            Party::Bob => "Bob",
            Party::Charlie => "Charlie",
        }
    }
}

/// Measurement-setting label, restricted per party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum SettingLabel {
    A1,
    A2,
    B1,
    B2,
    B3,
    C1,
    C2,
}

impl SettingLabel {
    pub fn name(self) -> &'static str {
        match self {
            SettingLabel::A1 => "A1",
            SettingLabel::A2 => "A2",
            SettingLabel::B1 => "B1",
            SettingLabel::B2 => "B2",
            SettingLabel::B3 => "B3",
            SettingLabel::C1 => "C1",
            SettingLabel::C2 => "C2",
        }
    }

    pub fn party(self) -> Party {
        match self {
            SettingLabel::A1 | SettingLabel::A2 => Party::Alice,
            SettingLabel::B1 | SettingLabel::B2 | SettingLabel::B3 => Party::Bob,
            SettingLabel::C1 | SettingLabel::C2 => Party::Charlie,
        }
    }

    /// 1-based setting index within the party.
    pub fn index(self) -> u8 {
        match self {
            SettingLabel::A1 | SettingLabel::B1 | SettingLabel::C1 => 1,
            SettingLabel::A2 | SettingLabel::B2 | SettingLabel::C2 => 2,
            SettingLabel::B3 => 3,
        }
    }
}

/// One party's measurement setting: an equatorial observable given as a unit
/// Bloch vector in the σx/σy plane.
///
/// The fixed assignments are A1 = σx, A2 = σy; B1 = σx, B2 = (σx−σy)/√2,
/// B3 = (σx+σy)/√2; C1 = σx, C2 = −σy. Bob's second and third check bases
/// appear under a single name in some write-ups of this protocol; here the
/// (σx+σy)/√2 observable is always B3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSetting {
    pub party: Party,
    pub label: SettingLabel,
    pub bloch: [f64; 3],
}

impl MeasurementSetting {
    pub fn new(label: SettingLabel) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bloch = match label {
            SettingLabel::A1 | SettingLabel::B1 | SettingLabel::C1 => [1.0, 0.0, 0.0],
            SettingLabel::A2 => [0.0, 1.0, 0.0],
            SettingLabel::B2 => [r, -r, 0.0],
            SettingLabel::B3 => [r, r, 0.0],
            SettingLabel::C2 => [0.0, -1.0, 0.0],
        };
        MeasurementSetting {
            party: label.party(),
            label,
            bloch,
        }
    }

    /// Equatorial angle θ with bloch = (cos θ, sin θ, 0).
    pub fn angle(&self) -> f64 {
        self.bloch[1].atan2(self.bloch[0])
    }
}

/// Measurement outcome including the no-click symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
    /// No-click event; produced only by loss branches, never by a projective
    /// measurement on a delivered photon.
    NoClick,
}

impl Outcome {
    /// ±1 value; no-click carries no value.
    pub fn value(self) -> Option<i8> {
        match self {
            Outcome::Plus => Some(1),
            Outcome::Minus => Some(-1),
            Outcome::NoClick => None,
        }
    }

    pub fn from_sign(sign: i8) -> Self {
        if sign >= 0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
            Outcome::NoClick => "perp",
        })
    }
}

/// The Hermitian observable bloch·(σx, σy, σz) for a setting.
pub fn observable(setting: &MeasurementSetting) -> Op2 {
    let [x, y, z] = setting.bloch;
    Op2::sigma_x()
        .scale(x)
        .add(Op2::sigma_y().scale(y))
        .add(Op2::sigma_z().scale(z))
}

/// Projector onto the ±1 eigenspace of a setting's observable.
pub fn projector(setting: &MeasurementSetting, sign: i8) -> Op2 {
    let s = if sign >= 0 { 1.0 } else { -1.0 };
    Op2::identity().add(observable(setting).scale(s)).scale(0.5)
}

/// Born-rule joint distribution over the eight ±1 outcome triples for a
/// three-photon state measured with one setting per party.
///
/// Entry order: index `t` has bits (a, b, c) from most significant, bit 0
/// meaning outcome +1 and bit 1 meaning −1.
pub fn born_distribution(
    state: &PureState,
    settings: &[MeasurementSetting; 3],
) -> Result<[f64; 8]> {
    if state.n_photons() != 3 {
        return Err(Error::PhotonCount {
            expected: 3,
            got: state.n_photons(),
        });
    }
    for i in 0..3 {
        for j in (i + 1)..3 {
            if settings[i].party == settings[j].party {
                return Err(Error::DuplicateParty {
                    party: settings[i].party.name(),
                });
            }
        }
    }
    let mut probs = [0.0f64; 8];
    for (t, p) in probs.iter_mut().enumerate() {
        let mut projected = state.clone();
        for (photon, setting) in settings.iter().enumerate() {
            let sign = if (t >> (2 - photon)) & 1 == 0 { 1 } else { -1 };
            projected = projected.apply_single(&projector(setting, sign), photon);
        }
        *p = projected.norm_sq();
    }
    Ok(probs)
}

/// ⟨O_A ⊗ O_B ⊗ O_C⟩ computed from the Born distribution.
pub fn expectation(state: &PureState, settings: &[MeasurementSetting; 3]) -> Result<f64> {
    let probs = born_distribution(state, settings)?;
    let mut e = 0.0;
    for (t, p) in probs.iter().enumerate() {
        let parity = (t & 1) ^ ((t >> 1) & 1) ^ ((t >> 2) & 1);
        e += if parity == 0 { *p } else { -*p };
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setting(label: SettingLabel) -> MeasurementSetting {
        MeasurementSetting::new(label)
    }

    /// Independent route: ⟨ψ|O_A⊗O_B⊗O_C|ψ⟩ via an explicit 8×8 Kronecker
    /// product, never touching the projector path.
    fn expectation_via_trace(state: &PureState, settings: &[MeasurementSetting; 3]) -> f64 {
        let ops: Vec<Op2> = settings.iter().map(observable).collect();
        let mut big = vec![vec![Complex64::default(); 8]; 8];
        for (r, row) in big.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                let mut v = Complex64::new(1.0, 0.0);
                for (k, op) in ops.iter().enumerate() {
                    let rb = (r >> (2 - k)) & 1;
                    let cb = (c >> (2 - k)) & 1;
                    v *= op.m[rb][cb];
                }
                *cell = v;
            }
        }
        let amps = state.amplitudes();
        let mut e = Complex64::default();
        for (r, row) in big.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                e += amps[r].conj() * cell * amps[c];
            }
        }
        assert!(e.im.abs() < 1e-12);
        e.re
    }

    #[test]
    fn ghz_one_plus_matches_definition() {
        let s = ghz_state(GhzLabel::new(1, true));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(0b000).re - r).abs() < 1e-15);
        assert!((s.amplitude(0b111).re - r).abs() < 1e-15);
        let nonzero: usize = s
            .amplitudes()
            .iter()
            .filter(|a| a.norm_sqr() > 0.0)
            .count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn ghz_basis_orthonormal_and_complete() {
        let labels = GhzLabel::all();
        for (i, la) in labels.iter().enumerate() {
            for (j, lb) in labels.iter().enumerate() {
                let ip = ghz_state(*la).inner(&ghz_state(*lb)).norm();
                if i == j {
                    assert!((ip - 1.0).abs() < 1e-12);
                } else {
                    assert!(ip < 1e-12, "{la} vs {lb} not orthogonal");
                }
            }
        }
        // Completeness: sum of |s⟩⟨s| is the identity on the 8-dim space.
        let mut resolution = vec![vec![Complex64::default(); 8]; 8];
        for label in labels {
            let s = ghz_state(label);
            for r in 0..8 {
                for c in 0..8 {
                    resolution[r][c] += s.amplitude(r) * s.amplitude(c).conj();
                }
            }
        }
        for (r, row) in resolution.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert!((cell.re - expect).abs() < 1e-12 && cell.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn observables_match_pauli_assignments() {
        let a1 = observable(&setting(SettingLabel::A1));
        assert_eq!(a1, Op2::sigma_x());
        let b2 = observable(&setting(SettingLabel::B2));
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let want = Op2::sigma_x().scale(r).add(Op2::sigma_y().scale(-r));
        for r in 0..2 {
            for c in 0..2 {
                assert!((b2.m[r][c] - want.m[r][c]).norm() < 1e-15);
            }
        }
        let c2 = observable(&setting(SettingLabel::C2));
        let want = Op2::sigma_y().scale(-1.0);
        for r in 0..2 {
            for c in 0..2 {
                assert!((c2.m[r][c] - want.m[r][c]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn observable_squares_to_identity() {
        for label in [
            SettingLabel::A1,
            SettingLabel::A2,
            SettingLabel::B1,
            SettingLabel::B2,
            SettingLabel::B3,
            SettingLabel::C1,
            SettingLabel::C2,
        ] {
            let o = observable(&setting(label));
            let sq = o.mul(o);
            let id = Op2::identity();
            for r in 0..2 {
                for c in 0..2 {
                    assert!((sq.m[r][c] - id.m[r][c]).norm() < 1e-12, "{label:?}");
                }
            }
        }
    }

    #[test]
    fn bloch_vectors_unit_norm() {
        for label in [
            SettingLabel::A1,
            SettingLabel::A2,
            SettingLabel::B1,
            SettingLabel::B2,
            SettingLabel::B3,
            SettingLabel::C1,
            SettingLabel::C2,
        ] {
            let [x, y, z] = setting(label).bloch;
            assert!((x * x + y * y + z * z - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stabilizer_settings_give_unit_product_probability() {
        let ghz = ghz_state(GhzLabel::new(1, true));
        for labels in [
            [SettingLabel::A1, SettingLabel::B1, SettingLabel::C1],
            [SettingLabel::A2, SettingLabel::B1, SettingLabel::C2],
        ] {
            let settings = [setting(labels[0]), setting(labels[1]), setting(labels[2])];
            let probs = born_distribution(&ghz, &settings).unwrap();
            let mut p_plus = 0.0;
            for (t, p) in probs.iter().enumerate() {
                let parity = (t & 1) ^ ((t >> 1) & 1) ^ ((t >> 2) & 1);
                if parity == 0 {
                    p_plus += p;
                }
            }
            assert!((p_plus - 1.0).abs() < 1e-12, "{labels:?}");
        }
    }

    #[test]
    fn born_distribution_normalized_and_marginals_uniform() {
        let ghz = ghz_state(GhzLabel::new(1, true));
        for a in [SettingLabel::A1, SettingLabel::A2] {
            for b in [SettingLabel::B1, SettingLabel::B2, SettingLabel::B3] {
                for c in [SettingLabel::C1, SettingLabel::C2] {
                    let settings = [setting(a), setting(b), setting(c)];
                    let probs = born_distribution(&ghz, &settings).unwrap();
                    let total: f64 = probs.iter().sum();
                    assert!((total - 1.0).abs() < 1e-12);
                    for party in 0..3 {
                        let mut p_plus = 0.0;
                        for (t, p) in probs.iter().enumerate() {
                            if (t >> (2 - party)) & 1 == 0 {
                                p_plus += p;
                            }
                        }
                        assert!((p_plus - 0.5).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn expectation_agrees_with_trace_route() {
        let ghz = ghz_state(GhzLabel::new(1, true));
        for a in [SettingLabel::A1, SettingLabel::A2] {
            for b in [SettingLabel::B1, SettingLabel::B2, SettingLabel::B3] {
                for c in [SettingLabel::C1, SettingLabel::C2] {
                    let settings = [setting(a), setting(b), setting(c)];
                    let via_born = expectation(&ghz, &settings).unwrap();
                    let via_trace = expectation_via_trace(&ghz, &settings);
                    assert!(
                        (via_born - via_trace).abs() < 1e-12,
                        "{a:?} {b:?} {c:?}: {via_born} vs {via_trace}"
                    );
                }
            }
        }
    }

    #[test]
    fn equatorial_expectation_is_angle_sum_cosine() {
        let ghz = ghz_state(GhzLabel::new(1, true));
        for a in [SettingLabel::A1, SettingLabel::A2] {
            for b in [SettingLabel::B1, SettingLabel::B2, SettingLabel::B3] {
                for c in [SettingLabel::C1, SettingLabel::C2] {
                    let settings = [setting(a), setting(b), setting(c)];
                    let e = expectation(&ghz, &settings).unwrap();
                    let sum: f64 = settings.iter().map(|s| s.angle()).sum();
                    assert!((e - sum.cos()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn duplicate_party_rejected() {
        let ghz = ghz_state(GhzLabel::new(1, true));
        let settings = [
            setting(SettingLabel::A1),
            setting(SettingLabel::A2),
            setting(SettingLabel::C1),
        ];
        assert!(matches!(
            born_distribution(&ghz, &settings),
            Err(Error::DuplicateParty { .. })
        ));
    }

    #[test]
    fn tensor_and_apply_single_are_consistent() {
        let hv = PureState::basis(&[Pol::H, Pol::V]);
        let v = PureState::single(Pol::V);
        let joint = hv.tensor(&v);
        assert_eq!(joint.n_photons(), 3);
        assert!((joint.amplitude(0b011).re - 1.0).abs() < 1e-15);
        // Flip photon 1 with σx: HVV → HHV.
        let flipped = joint.apply_single(&Op2::sigma_x(), 1);
        assert!((flipped.amplitude(0b001).re - 1.0).abs() < 1e-15);
    }
}
