//! Classical desk-scale simulation of the quantum money protocol on the
//! Brandt eigenstates: entangled-state preparation with its rejection
//! measurement, minting and verification (phase estimation simulated as a
//! projective measurement in the joint eigenbasis), the lightning variant
//! with a randomized rounding grid, the birthday attack, and the black-box
//! identities (double-eigenstate construction, triple-overlap Monte Carlo).
//!
//! Two note representations are supported: a lossless fast path that tracks
//! the eigenstate index (sufficient for all sampling statistics, any class
//! count), and a dense state-vector over C^h (x) C^h used for collapse and
//! overlap experiments at moderate h. Both paths agree on observable
//! statistics by construction: the fast path samples from exactly the
//! distribution the state-vector measurement induces.

pub mod signature;
pub mod stats;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{CanonicalTriple, ClassSet};
use crate::error::{Error, Result};
use crate::spectral::{separation, JointSpectrum, Tolerances};
use signature::SignatureScheme;

/// Everything the protocols need for one level N.
#[derive(Clone, Debug)]
pub struct MoneyContext {
    pub class_set: ClassSet,
    pub spectrum: JointSpectrum,
    /// measured L2 separation of the unitary tuples on the invariant
    /// hyperplane
    pub epsilon: f64,
    /// grid unit for lightning: a tenth of the worst-coordinate separation
    pub epsilon_grid: f64,
    pub tolerances: Tolerances,
}

impl MoneyContext {
    pub fn from_parts(
        class_set: ClassSet,
        spectrum: JointSpectrum,
        tolerances: Tolerances,
    ) -> Result<Self> {
        let sep = separation(&spectrum);
        if sep.epsilon <= 0.0 {
            return Err(Error::Spectral(
                "duplicate eigenvalue tuples: zero separation".into(),
            ));
        }
        if !sep.epsilon.is_finite() {
            return Err(Error::usage(
                "protocol needs at least two eigenstates on the invariant hyperplane",
            ));
        }
        let grid = crate::spectral::coordinate_separation(&spectrum) / 10.0;
        Ok(MoneyContext {
            class_set,
            spectrum,
            epsilon: sep.epsilon,
            epsilon_grid: grid,
            tolerances,
        })
    }

    /// Number of ideal classes h.
    pub fn h(&self) -> usize {
        self.class_set.len()
    }

    /// Dimension of the money space (the invariant hyperplane).
    pub fn dim(&self) -> usize {
        self.h() - 1
    }

    pub fn level(&self) -> u64 {
        self.class_set.level
    }

    pub fn t(&self) -> usize {
        self.spectrum.primes.len()
    }

    /// Full orthonormal eigenbasis: the invariant-hyperplane vectors
    /// followed by the distinguished vector at index h-1.
    pub fn eigenvector(&self, idx: usize) -> &[f64] {
        if idx < self.dim() {
            &self.spectrum.vectors[idx]
        } else {
            &self.spectrum.distinguished
        }
    }

    /// Unitary eigenvalue tuple of basis vector `idx` (including the
    /// distinguished one).
    pub fn unitary_tuple(&self, idx: usize) -> Vec<Complex64> {
        if idx < self.dim() {
            self.spectrum.unitary_tuple(idx)
        } else {
            self.spectrum.distinguished_tuple()
        }
    }
}

/// Simulation mode for notes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimMode {
    /// Track only the eigenstate index.
    Lossless,
    /// Carry the dense amplitude vector over C^h (x) C^h.
    StateVector,
}

/// Knobs. All radii are multiples of the separation epsilon.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub mode: SimMode,
    /// serial perturbation radius as a fraction of epsilon (kept below 1/3)
    pub serial_noise: f64,
    /// verification readout noise half-width as a fraction of epsilon
    pub readout_noise: f64,
    /// serial-collision threshold for the attack, fraction of epsilon
    pub collision_threshold: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            mode: SimMode::Lossless,
            serial_noise: 1.0 / 6.0,
            readout_noise: 1.0 / 6.0,
            collision_threshold: 0.5,
        }
    }
}

/// A simulated note.
#[derive(Clone, Debug, PartialEq)]
pub enum Note {
    /// Eigenstate pair e_k (x) e_k.
    Index(usize),
    /// Dense amplitudes over C^h (x) C^h, left register major.
    State(Vec<Complex64>),
}

/// A bill: note, serial (approximate unitary eigentuple), signature.
#[derive(Clone, Debug)]
pub struct Bill {
    pub note: Note,
    pub serial: Vec<Complex64>,
    pub signature: Vec<u8>,
}

/// Canonical byte encoding of a serial, the signed message.
pub fn serial_bytes(serial: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 * serial.len());
    for z in serial {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

/// Public parameters: level, primes, separation, verification key.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PublicParams {
    #[serde(rename = "N")]
    pub level: u64,
    pub primes: Vec<u64>,
    pub epsilon: f64,
    #[serde(with = "base64_bytes")]
    pub verify_key: Vec<u8>,
}

impl PublicParams {
    pub fn new(ctx: &MoneyContext, scheme: &dyn SignatureScheme) -> Self {
        PublicParams {
            level: ctx.level(),
            primes: ctx.spectrum.primes.clone(),
            epsilon: ctx.epsilon,
            verify_key: scheme.verification_key(),
        }
    }
}

mod base64_bytes {
    use base64::prelude::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        BASE64_STANDARD.encode(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        BASE64_STANDARD
            .decode(s)
            .map_err(|e| serde::de::Error::custom(e.to_string()))
    }
}

/// One shot of the entangled-state preparation: sample (d, a, b) from the
/// superposition the preparation circuit builds and measure the validity
/// register. The triple distribution is near-uniform over the candidates
/// with d*a, d*b <= sqrt(2N); on success the state collapses to the uniform
/// superposition over canonical encodings.
pub fn prepare_entangled(ctx: &MoneyContext, rng: &mut impl Rng) -> bool {
    let n = ctx.level();
    let dmax = ((2 * n) as f64).sqrt().floor() as u64;
    // P(d) proportional to 1/d^2: the d-register amplitude is 1/d
    let z: f64 = (1..=dmax).map(|d| 1.0 / (d * d) as f64).sum();
    let mut u = rng.gen::<f64>() * z;
    let mut d = dmax;
    for cand in 1..=dmax {
        let w = 1.0 / (cand * cand) as f64;
        if u < w {
            d = cand;
            break;
        }
        u -= w;
    }
    let c_d = dmax / d;
    let a = rng.gen_range(0..c_d);
    let b = rng.gen_range(1..=c_d);
    let t = CanonicalTriple::new(d, a, b);
    ctx.class_set.position(&t).is_some()
}

/// Exact success probability of one preparation shot under the same model.
pub fn prepare_success_probability(ctx: &MoneyContext) -> f64 {
    let n = ctx.level();
    let dmax = ((2 * n) as f64).sqrt().floor() as u64;
    let z: f64 = (1..=dmax).map(|d| 1.0 / (d * d) as f64).sum();
    ctx.class_set
        .classes
        .iter()
        .map(|c| {
            let cd = dmax / c.d;
            1.0 / ((c.d * c.d) as f64 * (cd * cd) as f64) / z
        })
        .sum()
}

/// Minting outcome: a bill, or the rejected distinguished outcome.
#[derive(Clone, Debug)]
pub enum MintOutcome {
    Bill(Bill),
    Bottom,
}

/// Mint one bill: run the preparation until the validity measurement
/// succeeds, measure the maximally entangled state in the joint eigenbasis
/// (uniform over the h eigenstate pairs), reject the distinguished outcome,
/// sign the perturbed eigentuple.
pub fn mint(
    ctx: &MoneyContext,
    cfg: &ProtocolConfig,
    scheme: &dyn SignatureScheme,
    rng: &mut impl Rng,
) -> Result<MintOutcome> {
    for _ in 0..1_000_000 {
        if !prepare_entangled(ctx, rng) {
            continue;
        }
        // uniform over h outcomes; outcome h-1 is the distinguished pair
        let outcome = rng.gen_range(0..ctx.h());
        if outcome == ctx.h() - 1 {
            return Ok(MintOutcome::Bottom);
        }
        let serial = perturb_on_circle(
            &ctx.unitary_tuple(outcome),
            cfg.serial_noise * ctx.epsilon,
            rng,
        );
        let signature = scheme.sign(&serial_bytes(&serial));
        let note = match cfg.mode {
            SimMode::Lossless => Note::Index(outcome),
            SimMode::StateVector => Note::State(eigenpair_state(ctx, outcome)),
        };
        return Ok(MintOutcome::Bill(Bill {
            note,
            serial,
            signature,
        }));
    }
    Err(Error::Spectral("preparation failed to converge".into()))
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-12);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Rotate each coordinate by a small phase; the arc vector has L2 norm at
/// most `radius`, so the serial stays within the allowed approximation
/// error of the true tuple while remaining on the unit circle.
fn perturb_on_circle(tuple: &[Complex64], radius: f64, rng: &mut impl Rng) -> Vec<Complex64> {
    let t = tuple.len();
    let mut theta: Vec<f64> = (0..t).map(|_| gaussian(rng)).collect();
    let norm = theta.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    let scale = radius * rng.gen::<f64>().powf(1.0 / t as f64) / norm;
    for x in theta.iter_mut() {
        *x *= scale;
    }
    tuple
        .iter()
        .zip(&theta)
        .map(|(z, &th)| z * Complex64::from_polar(1.0, th))
        .collect()
}

/// Dense amplitudes of e_k (x) e_k over C^h (x) C^h.
pub fn eigenpair_state(ctx: &MoneyContext, idx: usize) -> Vec<Complex64> {
    let h = ctx.h();
    let e = ctx.eigenvector(idx);
    let mut out = vec![Complex64::new(0.0, 0.0); h * h];
    for s in 0..h {
        for t in 0..h {
            out[s * h + t] = Complex64::new(e[s] * e[t], 0.0);
        }
    }
    out
}

/// Measure a dense pair state in the joint eigenbasis: samples the outcome
/// pair (k, l) with the Born probabilities.
pub fn measure_pair_state(
    ctx: &MoneyContext,
    state: &[Complex64],
    rng: &mut impl Rng,
) -> Result<(usize, usize)> {
    let h = ctx.h();
    if state.len() != h * h {
        return Err(Error::usage("state dimension is not h^2"));
    }
    let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > ctx.tolerances.unit_norm.max(1e-9) {
        return Err(Error::usage(format!("state norm {norm} is not 1")));
    }
    // amplitude matrix A = E^T Psi E
    let e = DMatrix::<f64>::from_fn(h, h, |r, c| ctx.eigenvector(c)[r]);
    let re = DMatrix::<f64>::from_fn(h, h, |r, c| state[r * h + c].re);
    let im = DMatrix::<f64>::from_fn(h, h, |r, c| state[r * h + c].im);
    let are = e.transpose() * &re * &e;
    let aim = e.transpose() * &im * &e;
    let mut u = rng.gen::<f64>();
    let mut outcome = (h - 1, h - 1);
    'outer: for k in 0..h {
        for l in 0..h {
            let p = are[(k, l)] * are[(k, l)] + aim[(k, l)] * aim[(k, l)];
            if u < p {
                outcome = (k, l);
                break 'outer;
            }
            u -= p;
        }
    }
    Ok(outcome)
}

/// Exact Born weights |<e_k (x) e_l | psi>|^2 of a dense pair state; the
/// oracle for acceptance-probability estimates.
pub fn pair_state_weights(ctx: &MoneyContext, state: &[Complex64]) -> Result<DMatrix<f64>> {
    let h = ctx.h();
    if state.len() != h * h {
        return Err(Error::usage("state dimension is not h^2"));
    }
    let e = DMatrix::<f64>::from_fn(h, h, |r, c| ctx.eigenvector(c)[r]);
    let re = DMatrix::<f64>::from_fn(h, h, |r, c| state[r * h + c].re);
    let im = DMatrix::<f64>::from_fn(h, h, |r, c| state[r * h + c].im);
    let are = e.transpose() * &re * &e;
    let aim = e.transpose() * &im * &e;
    Ok(DMatrix::from_fn(h, h, |k, l| {
        are[(k, l)] * are[(k, l)] + aim[(k, l)] * aim[(k, l)]
    }))
}

/// Verification outcome with the post-measurement bill.
#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    pub accepted: bool,
    pub reason: Option<String>,
    pub post: Bill,
}

/// Verify a bill: check the signature, project the note onto the joint
/// eigenbasis (simulated phase estimation with readout noise), and accept
/// iff every measured eigenvalue is within epsilon/2 of the serial entry on
/// both registers.
pub fn verify(
    ctx: &MoneyContext,
    cfg: &ProtocolConfig,
    scheme: &dyn SignatureScheme,
    bill: &Bill,
    rng: &mut impl Rng,
) -> Result<VerifyOutcome> {
    if bill.serial.len() != ctx.t() {
        return Err(Error::usage("serial length does not match the prime list"));
    }
    if bill.serial.iter().any(|z| (z.norm() - 1.0).abs() > 1e-9) {
        return Err(Error::usage("serial entries must lie on the unit circle"));
    }
    if !scheme.verify(&serial_bytes(&bill.serial), &bill.signature) {
        return Ok(VerifyOutcome {
            accepted: false,
            reason: Some("signature".into()),
            post: bill.clone(),
        });
    }
    let (k, l, post_note) = match &bill.note {
        Note::Index(k) => (*k, *k, Note::Index(*k)),
        Note::State(psi) => {
            let (k, l) = measure_pair_state(ctx, psi, rng)?;
            let h = ctx.h();
            let ek = ctx.eigenvector(k).to_vec();
            let el = ctx.eigenvector(l).to_vec();
            let mut collapsed = vec![Complex64::new(0.0, 0.0); h * h];
            for s in 0..h {
                for t in 0..h {
                    collapsed[s * h + t] = Complex64::new(ek[s] * el[t], 0.0);
                }
            }
            (k, l, Note::State(collapsed))
        }
    };
    let delta = cfg.readout_noise * ctx.epsilon;
    let mut accept = true;
    for idx in [k, l] {
        let measured = read_tuple_with_noise(&ctx.unitary_tuple(idx), delta, rng);
        for (m, s) in measured.iter().zip(&bill.serial) {
            if (m - s).norm() > ctx.epsilon / 2.0 {
                accept = false;
            }
        }
    }
    Ok(VerifyOutcome {
        accepted: accept,
        reason: (!accept).then(|| "eigenvalue window".into()),
        post: Bill {
            note: post_note,
            serial: bill.serial.clone(),
            signature: bill.signature.clone(),
        },
    })
}

fn read_tuple_with_noise(
    tuple: &[Complex64],
    half_width: f64,
    rng: &mut impl Rng,
) -> Vec<Complex64> {
    tuple
        .iter()
        .map(|z| {
            let dre = rng.gen_range(-half_width..=half_width);
            let dim = rng.gen_range(-half_width..=half_width);
            z + Complex64::new(dre, dim)
        })
        .collect()
}

/// A lightning bolt: an eigenstate pair with a randomized rounding offset.
#[derive(Clone, Debug)]
pub struct Bolt {
    pub index: usize,
    pub offset: Complex64,
    pub grid_epsilon: f64,
    pub delta: f64,
}

/// A candidate handed to the lightning verifier; a dishonest one may hold
/// different eigenstates in the two registers.
#[derive(Clone, Debug)]
pub struct BoltCandidate {
    pub left: usize,
    pub right: usize,
    pub offset: Complex64,
    pub grid_epsilon: f64,
    pub delta: f64,
}

impl Bolt {
    pub fn candidate(&self) -> BoltCandidate {
        BoltCandidate {
            left: self.index,
            right: self.index,
            offset: self.offset,
            grid_epsilon: self.grid_epsilon,
            delta: self.delta,
        }
    }
}

/// Storm: mint an eigenstate pair and a uniform offset; retry while any
/// shifted eigenvalue has real or imaginary part within delta of a multiple
/// of half the grid unit.
pub fn lightning_storm(ctx: &MoneyContext, rng: &mut impl Rng) -> Result<(Bolt, u32)> {
    let eps = ctx.epsilon_grid;
    let t = ctx.t() as f64;
    let delta = eps / (20.0 * t);
    let mut attempts = 0u32;
    for _ in 0..100_000 {
        attempts += 1;
        if !prepare_entangled(ctx, rng) {
            continue;
        }
        let outcome = rng.gen_range(0..ctx.h());
        if outcome == ctx.h() - 1 {
            continue;
        }
        let offset = Complex64::new(rng.gen::<f64>(), rng.gen::<f64>());
        let tuple = ctx.unitary_tuple(outcome);
        let bad = tuple.iter().any(|zv| {
            let s = zv + offset;
            near_half_grid(s.re, eps, delta) || near_half_grid(s.im, eps, delta)
        });
        if bad {
            continue;
        }
        return Ok((
            Bolt {
                index: outcome,
                offset,
                grid_epsilon: eps,
                delta,
            },
            attempts,
        ));
    }
    Err(Error::Spectral("storm failed to converge".into()))
}

fn near_half_grid(x: f64, eps: f64, delta: f64) -> bool {
    let unit = eps / 2.0;
    let r = (x / unit - (x / unit).round()).abs() * unit;
    r < delta
}

/// Lightning verification: measure both registers to error delta, reject
/// when they disagree by more than 2 delta in any coordinate part, else
/// round the shifted values to the grid and return the integer serial.
pub fn lightning_verify(
    ctx: &MoneyContext,
    cand: &BoltCandidate,
    rng: &mut impl Rng,
) -> Option<Vec<(i64, i64)>> {
    let noisy = |idx: usize, rng: &mut dyn rand::RngCore| -> Vec<Complex64> {
        ctx.unitary_tuple(idx)
            .iter()
            .map(|z| {
                let u1: f64 = rand::Rng::gen::<f64>(rng);
                let u2: f64 = rand::Rng::gen::<f64>(rng);
                z + Complex64::new((2.0 * u1 - 1.0) * cand.delta, (2.0 * u2 - 1.0) * cand.delta)
            })
            .collect()
    };
    let lam = noisy(cand.left, rng);
    let mu = noisy(cand.right, rng);
    for (a, b) in lam.iter().zip(&mu) {
        let d = a - b;
        if d.re.abs() > 2.0 * cand.delta || d.im.abs() > 2.0 * cand.delta {
            return None;
        }
    }
    Some(
        lam.iter()
            .map(|z| {
                let s = z + cand.offset;
                (
                    (s.re / cand.grid_epsilon).round() as i64,
                    (s.im / cand.grid_epsilon).round() as i64,
                )
            })
            .collect(),
    )
}

/// Birthday attack: mint `budget` bills per run and scan serials for a
/// close pair. Reports the 1-based index of the first collision per run.
pub struct AttackReport {
    pub budget: usize,
    pub runs: usize,
    pub first_collision: Vec<Option<usize>>,
}

impl AttackReport {
    pub fn collision_fraction(&self) -> f64 {
        self.first_collision.iter().filter(|c| c.is_some()).count() as f64
            / self.runs.max(1) as f64
    }

    pub fn mean_first_collision(&self) -> Option<f64> {
        let hits: Vec<f64> = self
            .first_collision
            .iter()
            .flatten()
            .map(|&i| i as f64)
            .collect();
        if hits.is_empty() {
            None
        } else {
            Some(hits.iter().sum::<f64>() / hits.len() as f64)
        }
    }
}

pub fn birthday_attack(
    ctx: &MoneyContext,
    cfg: &ProtocolConfig,
    scheme: &dyn SignatureScheme,
    budget: usize,
    runs: usize,
    rng: &mut impl Rng,
) -> Result<AttackReport> {
    let threshold = cfg.collision_threshold * ctx.epsilon;
    let mut first_collision = Vec::with_capacity(runs);
    for _ in 0..runs {
        let mut serials: Vec<Vec<Complex64>> = Vec::with_capacity(budget);
        let mut hit = None;
        'minting: while serials.len() < budget {
            match mint(ctx, cfg, scheme, rng)? {
                MintOutcome::Bottom => continue,
                MintOutcome::Bill(b) => {
                    for prev in &serials {
                        if crate::spectral::tuple_distance(prev, &b.serial) < threshold {
                            hit = Some(serials.len() + 1);
                            break 'minting;
                        }
                    }
                    serials.push(b.serial);
                }
            }
        }
        first_collision.push(hit);
    }
    Ok(AttackReport {
        budget,
        runs,
        first_collision,
    })
}

/// Build sum_i b_i (x) b_i / sqrt(h) for a real orthonormal basis given as
/// the columns of `basis`.
pub fn pair_superposition(basis: &DMatrix<f64>) -> Vec<Complex64> {
    let h = basis.nrows();
    let mut out = vec![Complex64::new(0.0, 0.0); h * h];
    let scale = 1.0 / (h as f64).sqrt();
    for i in 0..h {
        for s in 0..h {
            for t in 0..h {
                out[s * h + t] += Complex64::new(basis[(s, i)] * basis[(t, i)] * scale, 0.0);
            }
        }
    }
    out
}

/// Random real orthogonal matrix: QR of a Gaussian matrix, R-diagonal made
/// positive.
pub fn random_orthogonal(h: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let gauss = DMatrix::<f64>::from_fn(h, h, |_, _| gaussian(rng));
    let qr = gauss.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..h {
        if r[(c, c)] < 0.0 {
            for row in 0..h {
                q[(row, c)] = -q[(row, c)];
            }
        }
    }
    q
}

/// Build the pair superposition from a random real orthonormal basis and
/// measure it in the joint eigenbasis; the outcome index is uniform over h.
pub fn double_eigenstate_demo(ctx: &MoneyContext, rng: &mut impl Rng) -> Result<usize> {
    let h = ctx.h();
    let q = random_orthogonal(h, rng);
    let state = pair_superposition(&q);
    let (k, l) = measure_pair_state(ctx, &state, rng)?;
    if k != l {
        return Err(Error::invariant(
            "pair superposition measured to mismatched indices",
        ));
    }
    Ok(k)
}

/// Monte Carlo estimate of E[sum_i |<b_i b_i b_i | phi>|^2] over random
/// real orthonormal bases, for a fixed random unit phi in W (x) W (x) W.
pub struct McEstimate {
    pub dim: usize,
    pub trials: usize,
    pub mean: f64,
    pub std_error: f64,
}

pub fn triple_overlap_mc(m: usize, trials: usize, rng: &mut impl Rng) -> McEstimate {
    let mut phi: Vec<Complex64> = (0..m * m * m)
        .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
        .collect();
    let norm = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in phi.iter_mut() {
        *z /= norm;
    }

    let mut values = Vec::with_capacity(trials);
    for _ in 0..trials {
        let q = random_orthogonal(m, rng);
        let mut total = 0.0;
        for i in 0..m {
            let b: Vec<f64> = (0..m).map(|r| q[(r, i)]).collect();
            let mut amp = Complex64::new(0.0, 0.0);
            for (j, &bj) in b.iter().enumerate() {
                for (k, &bk) in b.iter().enumerate() {
                    let mut inner = Complex64::new(0.0, 0.0);
                    for (l, &bl) in b.iter().enumerate() {
                        inner += phi[j * m * m + k * m + l] * bl;
                    }
                    amp += inner * bj * bk;
                }
            }
            total += amp.norm_sqr();
        }
        values.push(total);
    }
    let (mean, std) = stats::mean_std(&values);
    McEstimate {
        dim: m,
        trials,
        mean,
        std_error: std / (trials as f64).sqrt(),
    }
}

// JSON form of bills: serial as [re, im] pairs, signature base64, note as
// an index or a dense amplitude list.

#[derive(Serialize, Deserialize)]
struct BillRepr {
    note: NoteRepr,
    serial: Vec<[f64; 2]>,
    signature: String,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NoteRepr {
    Index { index: usize },
    State { amplitudes: Vec<[f64; 2]> },
}

impl Serialize for Bill {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use base64::prelude::*;
        BillRepr {
            note: match &self.note {
                Note::Index(k) => NoteRepr::Index { index: *k },
                Note::State(v) => NoteRepr::State {
                    amplitudes: v.iter().map(|z| [z.re, z.im]).collect(),
                },
            },
            serial: self.serial.iter().map(|z| [z.re, z.im]).collect(),
            signature: BASE64_STANDARD.encode(&self.signature),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Bill {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use base64::prelude::*;
        let repr = BillRepr::deserialize(d)?;
        Ok(Bill {
            note: match repr.note {
                NoteRepr::Index { index } => Note::Index(index),
                NoteRepr::State { amplitudes } => Note::State(
                    amplitudes
                        .iter()
                        .map(|&[re, im]| Complex64::new(re, im))
                        .collect(),
                ),
            },
            serial: repr
                .serial
                .iter()
                .map(|&[re, im]| Complex64::new(re, im))
                .collect(),
            signature: BASE64_STANDARD
                .decode(repr.signature)
                .map_err(|e| serde::de::Error::custom(e.to_string()))?,
        })
    }
}
