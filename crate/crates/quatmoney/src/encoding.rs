//! Canonical (d, a, b) encodings of ideal classes and the class set.
//!
//! Encoding an ideal class: pass to an integral representative of minimal
//! norm m, push it through the splitting O_N/mO_N -> M_2(Z/m), read off the
//! cyclic subgroup of (Z/m)^2 spanned by the rows of the image, and convert
//! its canonical generator (d, c) into (d, a = c mod b, b = m/d). Among the
//! (at most three) minimal representatives the lexicographically least
//! triple is taken, so the output depends only on the ideal class.
//!
//! The class set is enumerated by scanning every candidate triple with
//! d*b <= floor(sqrt(2N)) through the validity check and keeping the ones
//! that round-trip. The Eichler mass identity sum(1/w) = (N-1)/12 certifies
//! completeness.

use std::cell::RefCell;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modmat::{cyclic_generator, split_order, Mat2, SplitIso};
use crate::orders::{build_maximal_order, LeftIdeal, MaximalOrder, Weight};
use crate::quat::Quaternion;
use crate::rational::{rat, rat_int, Rat};

/// The canonical label (d, a, b) of an ideal class: d >= 1, 0 <= a < b,
/// gcd(d, a, b) = 1, and m = d*b is the minimal norm of an integral
/// representative.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct CanonicalTriple {
    pub d: u64,
    pub a: u64,
    pub b: u64,
}

impl CanonicalTriple {
    pub fn new(d: u64, a: u64, b: u64) -> Self {
        CanonicalTriple { d, a, b }
    }

    pub fn modulus(&self) -> u64 {
        self.d * self.b
    }

    /// Shape constraints from the output contract: d, b >= 1, 0 <= a < b,
    /// gcd(d, a, b) = 1.
    pub fn is_well_formed(&self) -> bool {
        self.d >= 1 && self.b >= 1 && self.a < self.b && self.d.gcd(&self.a).gcd(&self.b) == 1
    }
}

impl std::fmt::Display for CanonicalTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.d, self.a, self.b)
    }
}

/// One ideal class: its label, weight, and an integral representative of
/// minimal norm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassEntry {
    pub d: u64,
    pub a: u64,
    pub b: u64,
    pub w: u8,
    pub ideal: LeftIdeal,
}

impl ClassEntry {
    pub fn triple(&self) -> CanonicalTriple {
        CanonicalTriple::new(self.d, self.a, self.b)
    }
}

/// The full left ideal class set of O_N, ordered by (d, a, b).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassSet {
    pub format_version: u32,
    #[serde(rename = "N")]
    pub level: u64,
    pub classes: Vec<ClassEntry>,
}

pub const CLASS_SET_FORMAT: u32 = 1;

impl ClassSet {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn triples(&self) -> Vec<CanonicalTriple> {
        self.classes.iter().map(|c| c.triple()).collect()
    }

    pub fn weights(&self) -> Vec<Weight> {
        self.classes.iter().map(|c| Weight(c.w)).collect()
    }

    /// Index of a triple in the canonical ordering.
    pub fn position(&self, t: &CanonicalTriple) -> Option<usize> {
        self.classes.iter().position(|c| c.triple() == *t)
    }

    /// sum over classes of 1/w, which must equal (N-1)/12 exactly.
    pub fn mass(&self) -> Rat {
        self.classes
            .iter()
            .map(|c| rat(1, c.w as i64))
            .fold(Rat::new(BigInt::from(0), BigInt::from(1)), |acc, x| acc + x)
    }
}

/// Encoding context for one order: owns the per-modulus splitting cache.
pub struct Encoder {
    order: MaximalOrder,
    splits: RefCell<BTreeMap<u64, SplitIso>>,
}

impl Encoder {
    pub fn new(order: MaximalOrder) -> Self {
        Encoder {
            order,
            splits: RefCell::new(BTreeMap::new()),
        }
    }

    pub fn order(&self) -> &MaximalOrder {
        &self.order
    }

    /// Cached splitting isomorphism for a modulus m.
    pub fn split(&self, m: u64) -> Result<SplitIso> {
        if let Some(iso) = self.splits.borrow().get(&m) {
            return Ok(iso.clone());
        }
        let iso = split_order(&self.order, m)?;
        self.splits.borrow_mut().insert(m, iso.clone());
        Ok(iso)
    }

    /// Canonical encoding of the class of a left fractional ideal.
    pub fn canonical_encode(&self, ideal: &LeftIdeal) -> Result<CanonicalTriple> {
        let nrd_i = ideal.nrd()?;
        let shortest = ideal.lattice().shortest_vectors();
        // minimal vectors fall into unit orbits; more than 6 sign pairs would
        // mean the representative list is not what the theory promises
        if shortest.is_empty() || shortest.len() > 6 {
            return Err(Error::invariant(format!(
                "{} minimal sign pairs; expected between 1 and 6",
                shortest.len()
            )));
        }
        let mut best: Option<CanonicalTriple> = None;
        for z in &shortest {
            let j = ideal
                .lattice()
                .scale_quat(&z.conj())?
                .scale_rat(&(rat_int(1) / nrd_i.clone()));
            let j = LeftIdeal::new(j, self.order.clone())?;
            let t = self.encode_integral_minimal(&j)?;
            best = Some(match best {
                None => t,
                Some(b) => b.min(t),
            });
        }
        Ok(best.expect("nonempty candidate list"))
    }

    /// Encode an integral ideal J that is already of minimal norm in its
    /// class: read the rowspace subgroup of its image mod nrd(J).
    fn encode_integral_minimal(&self, j: &LeftIdeal) -> Result<CanonicalTriple> {
        let m_rat = j.nrd()?;
        if !m_rat.is_integer() {
            return Err(Error::invariant("minimal representative has non-integral norm"));
        }
        let m: u64 = m_rat
            .to_integer()
            .to_string()
            .parse()
            .map_err(|_| Error::invariant("representative norm out of range"))?;
        if m % self.order.level() == 0 && m > 1 {
            return Err(Error::invariant("representative norm divisible by the level"));
        }
        let iso = self.split(m)?;
        let mut rows: Vec<(i64, i64)> = Vec::with_capacity(8);
        for v in j.lattice().basis() {
            let coords = self
                .order
                .lattice()
                .coordinates_of(v)
                .ok_or_else(|| Error::invariant("representative not inside the order"))?;
            let mut c = [0i64; 4];
            for k in 0..4 {
                if !coords[k].is_integer() {
                    return Err(Error::invariant("representative not integral"));
                }
                c[k] = coords[k]
                    .to_integer()
                    .mod_floor(&BigInt::from(m.max(1)))
                    .to_string()
                    .parse()
                    .unwrap();
            }
            let img = iso.map_coords(&c);
            rows.push((img.e[0][0], img.e[0][1]));
            rows.push((img.e[1][0], img.e[1][1]));
        }
        let gen = cyclic_generator(m, &rows)?;
        let b = m / gen.d;
        let a = if b == 0 { 0 } else { gen.c % b.max(1) };
        Ok(CanonicalTriple::new(gen.d, a, b))
    }

    /// Validity check: `Some(J)` with canonical_encode(J) = t when t is the
    /// encoding of an ideal class, `None` otherwise.
    pub fn check_encoding(&self, t: &CanonicalTriple) -> Result<Option<LeftIdeal>> {
        if !t.is_well_formed() {
            return Ok(None);
        }
        let n = self.order.level();
        let m = t.modulus();
        // minimal representative norms are bounded by sqrt(2N) and prime to N
        let bound = (2 * n) as f64;
        if (m * m) as f64 > bound || m % n == 0 && m > 1 {
            return Ok(None);
        }
        let c = crate::modmat::lift_crt(t.d, t.a, t.b)?;
        let iso = self.split(m)?;
        let target = Mat2::new(m as i64, [[t.d as i64, c as i64], [0, 0]]);
        let x = iso.solve_preimage(&target)?;
        let basis = self.order.basis();
        let mut alpha = Quaternion::zero(self.order.params().clone());
        for (k, b) in basis.iter().enumerate() {
            alpha = &alpha + &b.scale(&rat_int(x[k]));
        }
        let m_scalar = Quaternion::scalar(rat_int(m as i64), self.order.params().clone());
        let j = LeftIdeal::generated_by(&self.order, &[m_scalar, alpha])?;
        let encoded = self.canonical_encode(&j)?;
        if encoded == *t {
            Ok(Some(j))
        } else {
            Ok(None)
        }
    }
}

/// Enumerate Cls(O_N) by scanning all candidate triples with
/// d*b <= floor(sqrt(2N)); certified complete by the mass identity.
pub fn enumerate_class_set(n: u64) -> Result<ClassSet> {
    let order = build_maximal_order(n)?;
    enumerate_class_set_with(&Encoder::new(order))
}

/// Same, reusing an existing encoder (and its splitting cache).
pub fn enumerate_class_set_with(enc: &Encoder) -> Result<ClassSet> {
    let n = enc.order.level();
    let bound = crate::rational::isqrt(&BigInt::from(2 * n))
        .to_string()
        .parse::<u64>()
        .expect("bound fits");
    let mut classes = Vec::new();
    for d in 1..=bound {
        for b in 1..=(bound / d).max(1) {
            if d * b > bound {
                break;
            }
            for a in 0..b {
                let t = CanonicalTriple::new(d, a, b);
                if !t.is_well_formed() {
                    continue;
                }
                if let Some(ideal) = enc.check_encoding(&t)? {
                    let w = ideal.weight()?;
                    classes.push(ClassEntry {
                        d,
                        a,
                        b,
                        w: w.value(),
                        ideal,
                    });
                }
            }
        }
    }
    let set = ClassSet {
        format_version: CLASS_SET_FORMAT,
        level: n,
        classes,
    };
    let expected_mass = rat(n as i64 - 1, 12);
    if set.mass() != expected_mass {
        return Err(Error::invariant(format!(
            "mass identity failed for N={n}: got {}, want {}",
            set.mass(),
            expected_mass
        )));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encoder(n: u64) -> Encoder {
        Encoder::new(build_maximal_order(n).unwrap())
    }

    #[test]
    fn unit_ideal_encodes_trivially() {
        let enc = encoder(23);
        let t = enc
            .canonical_encode(&enc.order().unit_ideal())
            .unwrap();
        assert_eq!(t, CanonicalTriple::new(1, 0, 1));
        let j = enc.check_encoding(&t).unwrap().expect("valid");
        assert_eq!(j.lattice().hnf_key(), enc.order().lattice().hnf_key());
    }

    #[test]
    fn worked_example_exactly_one_candidate_valid() {
        let enc = encoder(23);
        let candidates = [
            CanonicalTriple::new(1, 1, 2),
            CanonicalTriple::new(1, 0, 2),
            CanonicalTriple::new(2, 0, 1),
        ];
        let valid: Vec<_> = candidates
            .iter()
            .filter(|t| enc.check_encoding(t).unwrap().is_some())
            .collect();
        assert_eq!(valid.len(), 1, "exactly one of the three candidates");
        // and it is the encoding of the ideal (2, beta)
        let beta = Quaternion::from_coords(
            [rat(1, 2), rat(5, 6), Rat::new(0.into(), 1.into()), rat(-1, 3)],
            enc.order().params().clone(),
        );
        let two = Quaternion::scalar(rat_int(2), enc.order().params().clone());
        let ideal = LeftIdeal::generated_by(enc.order(), &[two, beta]).unwrap();
        let t = enc.canonical_encode(&ideal).unwrap();
        assert_eq!(&t, valid[0]);
    }

    #[test]
    fn malformed_triples_rejected() {
        let enc = encoder(23);
        // gcd > 1
        assert!(enc
            .check_encoding(&CanonicalTriple::new(2, 0, 2))
            .unwrap()
            .is_none());
        // a >= b
        assert!(enc
            .check_encoding(&CanonicalTriple::new(1, 2, 2))
            .unwrap()
            .is_none());
        // d = 0
        assert!(enc
            .check_encoding(&CanonicalTriple::new(0, 0, 1))
            .unwrap()
            .is_none());
    }

    #[test]
    fn class_set_n23() {
        let set = enumerate_class_set(23).unwrap();
        assert_eq!(set.len(), 3);
        let mut ws: Vec<u8> = set.classes.iter().map(|c| c.w).collect();
        ws.sort_unstable();
        assert_eq!(ws, vec![1, 2, 3]);
        assert_eq!(set.mass(), rat(22, 12));
    }

    #[test]
    fn class_set_n11() {
        let set = enumerate_class_set(11).unwrap();
        assert_eq!(set.len(), 2);
        let mut ws: Vec<u8> = set.classes.iter().map(|c| c.w).collect();
        ws.sort_unstable();
        assert_eq!(ws, vec![2, 3]);
    }

    #[test]
    fn class_set_n37() {
        let set = enumerate_class_set(37).unwrap();
        assert_eq!(set.len(), 3);
        assert!(set.classes.iter().all(|c| c.w == 1));
    }

    #[test]
    fn encoding_is_class_invariant() {
        let enc = encoder(23);
        let set = enumerate_class_set_with(&enc).unwrap();
        for entry in &set.classes {
            let t = entry.triple();
            // scale by a few elements of the order and by rationals
            let z = Quaternion::from_coords(
                [rat_int(1), rat_int(2), rat_int(-1), rat_int(0)],
                enc.order().params().clone(),
            );
            let scaled = entry.ideal.scale(&z).unwrap();
            assert_eq!(enc.canonical_encode(&scaled).unwrap(), t);
            let fractional =
                LeftIdeal::new(entry.ideal.lattice().scale_rat(&rat(3, 7)), enc.order().clone())
                    .unwrap();
            assert_eq!(enc.canonical_encode(&fractional).unwrap(), t);
        }
    }

    #[test]
    fn representative_invariants() {
        // m O_N inside J inside O_N, nrd(J) = d*b <= sqrt(2N), N does not
        // divide m, and the round trip re-encodes to the same triple
        for n in [11u64, 23, 37] {
            let enc = encoder(n);
            let set = enumerate_class_set_with(&enc).unwrap();
            for entry in &set.classes {
                let t = entry.triple();
                let m = t.modulus();
                assert!(m * m <= 2 * n, "norm bound");
                assert!(m % n != 0 || m == 1, "prime to the level");
                assert_eq!(entry.ideal.nrd().unwrap(), rat_int(m as i64));
                let o = enc.order().lattice();
                assert!(o.contains_lattice(entry.ideal.lattice()));
                assert!(entry
                    .ideal
                    .lattice()
                    .contains_lattice(&o.scale_rat(&rat_int(m as i64))));
                assert_eq!(enc.canonical_encode(&entry.ideal).unwrap(), t);
            }
        }
    }

    #[test]
    fn distinct_classes_distinct_triples() {
        let set = enumerate_class_set(37).unwrap();
        let triples = set.triples();
        let mut dedup = triples.clone();
        dedup.dedup();
        assert_eq!(triples.len(), dedup.len());
        // representatives of distinct triples are inequivalent: their
        // encodings differ by construction, so just check lattice keys differ
        for i in 0..set.len() {
            for j in (i + 1)..set.len() {
                assert_ne!(
                    set.classes[i].ideal.lattice().hnf_key(),
                    set.classes[j].ideal.lattice().hnf_key()
                );
            }
        }
    }

    #[test]
    fn class_set_serialization_round_trip() {
        let set = enumerate_class_set(11).unwrap();
        let s = serde_json::to_string(&set).unwrap();
        let back: ClassSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back.level, 11);
        assert_eq!(back.triples(), set.triples());
        assert_eq!(
            serde_json::to_string(&back).unwrap(),
            s,
            "byte-stable serialization"
        );
    }
}
