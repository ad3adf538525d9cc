//! Rank-4 lattices of quaternions under the reduced-norm form.
//!
//! A lattice is stored as four basis quaternions together with a cached
//! common-denominator integer coordinate matrix and the exact Gram matrix of
//! the reduced norm. Shortest vectors come from Fincke-Pohst enumeration with
//! exact acceptance tests; Minkowski reduction is the greedy
//! shortest-extendable-vector sweep, which is exact and deterministic in
//! rank 4.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{det_rat, hnf_rows, kernel_rows, solve_left_rat, IMat, QMat};
use crate::quat::{AlgebraParams, Quaternion};
use crate::rational::{rat_int, rat_round, rat_sqrt_exact, rat_to_f64, Rat};

/// A full-rank lattice in H(a,b), ordered basis of four quaternions.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdealLattice {
    basis: [Quaternion; 4],
    #[serde(skip)]
    cache: OnceLock<LatticeCache>,
}

#[derive(Clone, Debug)]
struct LatticeCache {
    /// basis[r] = (1/denom) * sum_c coords[r][c] * e_c with e = (1, i, j, ij)
    denom: BigInt,
    coords: IMat,
    gram: QMat,
}

impl PartialEq for IdealLattice {
    fn eq(&self, other: &Self) -> bool {
        self.params() == other.params() && self.hnf_key() == other.hnf_key()
    }
}
impl Eq for IdealLattice {}

impl IdealLattice {
    pub fn new(basis: [Quaternion; 4]) -> Result<Self> {
        let params = basis[0].params().clone();
        if basis.iter().any(|b| b.params() != &params) {
            return Err(Error::usage("lattice basis mixes quaternion algebras"));
        }
        if !params.is_definite() {
            return Err(Error::usage("lattices require a definite algebra"));
        }
        let lat = IdealLattice {
            basis,
            cache: OnceLock::new(),
        };
        if crate::linalg::det_int(&lat.cache().coords).is_zero() {
            return Err(Error::usage("lattice basis is not Q-linearly independent"));
        }
        Ok(lat)
    }

    /// Z-span of an arbitrary finite generating set; fails unless the span
    /// has full rank.
    pub fn from_generators(params: &AlgebraParams, gens: &[Quaternion]) -> Result<Self> {
        if gens.is_empty() {
            return Err(Error::usage("empty generating set"));
        }
        let mut denom = BigInt::one();
        for g in gens {
            for c in g.coords() {
                denom = denom.lcm(c.denom());
            }
        }
        let rows: IMat = gens
            .iter()
            .map(|g| {
                g.coords()
                    .iter()
                    .map(|c| (&denom / c.denom()) * c.numer())
                    .collect()
            })
            .collect();
        let h = hnf_rows(&rows);
        if h.len() != 4 {
            return Err(Error::usage("generating set does not span rank 4"));
        }
        let basis: Vec<Quaternion> = h
            .iter()
            .map(|row| int_row_to_quat(row, &denom, params))
            .collect();
        IdealLattice::new(basis.try_into().unwrap())
    }

    pub fn params(&self) -> &AlgebraParams {
        self.basis[0].params()
    }

    pub fn basis(&self) -> &[Quaternion; 4] {
        &self.basis
    }

    fn cache(&self) -> &LatticeCache {
        self.cache.get_or_init(|| {
            let mut denom = BigInt::one();
            for b in &self.basis {
                for c in b.coords() {
                    denom = denom.lcm(c.denom());
                }
            }
            let coords: IMat = self
                .basis
                .iter()
                .map(|b| {
                    b.coords()
                        .iter()
                        .map(|c| (&denom / c.denom()) * c.numer())
                        .collect()
                })
                .collect();
            let gram = gram_of(&self.basis);
            LatticeCache {
                denom,
                coords,
                gram,
            }
        })
    }

    /// Exact Gram matrix: entry (r,s) = (nrd(b_r+b_s) - nrd(b_r) - nrd(b_s)) / 2.
    pub fn gram(&self) -> QMat {
        self.cache().gram.clone()
    }

    pub fn gram_det(&self) -> Rat {
        det_rat(&self.cache().gram)
    }

    /// Common denominator and integer coordinate rows w.r.t. (1, i, j, ij).
    pub fn int_coords(&self) -> (BigInt, IMat) {
        let c = self.cache();
        (c.denom.clone(), c.coords.clone())
    }

    /// Canonical (denominator, HNF basis) pair; equal lattices give equal keys.
    pub fn hnf_key(&self) -> (BigInt, IMat) {
        let (denom, coords) = self.int_coords();
        let h = hnf_rows(&coords);
        // strip content shared with the denominator
        let mut g = denom.clone();
        for row in &h {
            for x in row {
                g = g.gcd(x);
                if g.is_one() {
                    return (denom, h);
                }
            }
        }
        let hh: IMat = h
            .iter()
            .map(|row| row.iter().map(|x| x / &g).collect())
            .collect();
        (&denom / &g, hh)
    }

    /// Membership test via exact coordinate solve.
    pub fn contains(&self, x: &Quaternion) -> bool {
        self.coordinates_of(x)
            .map(|c| c.iter().all(|r| r.is_integer()))
            .unwrap_or(false)
    }

    /// Rational coordinates of `x` in this basis.
    pub fn coordinates_of(&self, x: &Quaternion) -> Option<Vec<Rat>> {
        let mat: QMat = self
            .basis
            .iter()
            .map(|b| b.coords().iter().map(|&c| c.clone()).collect())
            .collect();
        let rhs: Vec<Rat> = x.coords().iter().map(|&c| c.clone()).collect();
        solve_left_rat(&mat, &rhs)
    }

    pub fn contains_lattice(&self, other: &IdealLattice) -> bool {
        other.basis.iter().all(|b| self.contains(b))
    }

    /// `[other : self]` as a positive rational via the Gram determinant ratio.
    pub fn index_in(&self, other: &IdealLattice) -> Result<Rat> {
        if self.params() != other.params() {
            return Err(Error::usage("index between lattices of different algebras"));
        }
        let ratio = self.gram_det() / other.gram_det();
        rat_sqrt_exact(&ratio)
            .ok_or_else(|| Error::invariant("Gram determinant ratio is not a rational square"))
    }

    pub fn scale_rat(&self, r: &Rat) -> IdealLattice {
        let basis = self.basis.clone().map(|b| b.scale(r));
        IdealLattice {
            basis,
            cache: OnceLock::new(),
        }
    }

    /// Right-multiply every basis vector: the lattice L*z.
    pub fn scale_quat(&self, z: &Quaternion) -> Result<IdealLattice> {
        if z.is_zero() {
            return Err(Error::usage("scaling a lattice by zero"));
        }
        let basis = [
            &self.basis[0] * z,
            &self.basis[1] * z,
            &self.basis[2] * z,
            &self.basis[3] * z,
        ];
        IdealLattice::new(basis)
    }

    /// Conjugate lattice {conj(x) : x in L}.
    pub fn conj(&self) -> IdealLattice {
        let basis = self.basis.clone().map(|b| b.conj());
        IdealLattice {
            basis,
            cache: OnceLock::new(),
        }
    }

    pub fn sum(&self, other: &IdealLattice) -> Result<IdealLattice> {
        let mut gens: Vec<Quaternion> = self.basis.to_vec();
        gens.extend_from_slice(&other.basis);
        IdealLattice::from_generators(self.params(), &gens)
    }

    /// Z-span of all pairwise basis products; the lattice product L1*L2.
    pub fn product(&self, other: &IdealLattice) -> Result<IdealLattice> {
        let mut gens = Vec::with_capacity(16);
        for x in &self.basis {
            for y in &other.basis {
                gens.push(x * y);
            }
        }
        IdealLattice::from_generators(self.params(), &gens)
    }

    pub fn intersect(&self, other: &IdealLattice) -> Result<IdealLattice> {
        let (d1, m1) = self.int_coords();
        let (d2, m2) = other.int_coords();
        let d = d1.lcm(&d2);
        let f1 = &d / &d1;
        let f2 = &d / &d2;
        // rows of a1, a2 span the lattices in 1/d coordinates
        let a1: IMat = m1
            .iter()
            .map(|r| r.iter().map(|x| x * &f1).collect())
            .collect();
        let a2: IMat = m2
            .iter()
            .map(|r| r.iter().map(|x| x * &f2).collect())
            .collect();
        let mut stacked: IMat = a1.clone();
        for r in &a2 {
            stacked.push(r.iter().map(|x| -x).collect());
        }
        let ker = kernel_rows(&stacked);
        let mut gens = Vec::new();
        for combo in &ker {
            let mut row = vec![BigInt::zero(); 4];
            for (r, c) in combo.iter().take(4).enumerate() {
                for (k, slot) in row.iter_mut().enumerate() {
                    *slot += c * &a1[r][k];
                }
            }
            if row.iter().any(|x| !x.is_zero()) {
                gens.push(int_row_to_quat(&row, &d, self.params()));
            }
        }
        IdealLattice::from_generators(self.params(), &gens)
    }

    /// All lattice vectors v with 0 < nrd(v) <= bound, one of each +-pair
    /// (the representative has positive first nonzero ambient coordinate),
    /// sorted by ambient coordinates.
    pub fn vectors_with_norm_at_most(&self, bound: &Rat) -> Vec<Quaternion> {
        let reduced = self.size_reduced();
        let mut found = enumerate_short(&reduced, bound);
        found.sort_by(cmp_quat);
        found.dedup();
        found
    }

    /// All vectors of minimal nonzero reduced norm, up to sign.
    pub fn shortest_vectors(&self) -> Vec<Quaternion> {
        let reduced = self.size_reduced();
        let gram = gram_of(&reduced);
        let bound = (0..4)
            .map(|r| gram[r][r].clone())
            .min()
            .expect("nonempty diagonal");
        let all = enumerate_short(&reduced, &bound);
        let min = all
            .iter()
            .map(|q| q.nrd())
            .min()
            .expect("basis vector within bound");
        let mut out: Vec<Quaternion> = all.into_iter().filter(|q| q.nrd() == min).collect();
        out.sort_by(cmp_quat);
        out.dedup();
        out
    }

    /// Minimal nonzero value of the reduced norm on the lattice.
    pub fn minimum(&self) -> Rat {
        self.shortest_vectors()[0].nrd()
    }

    /// Greedy Minkowski reduction: basis vector k is the shortest lattice
    /// vector that extends the previously chosen ones to a basis
    /// (tested exactly by the gcd of the k x k minors).
    pub fn minkowski_reduce(&self) -> Result<IdealLattice> {
        let reduced = self.size_reduced();
        let gram = gram_of(&reduced);
        let bound = (0..4)
            .map(|r| gram[r][r].clone())
            .max()
            .expect("nonempty diagonal");
        let mut candidates = enumerate_short(&reduced, &bound);
        candidates.sort_by(|x, y| (x.nrd(), ambient_key(x)).cmp(&(y.nrd(), ambient_key(y))));
        candidates.dedup();

        let work = IdealLattice::new(reduced.clone())?;
        let mut selected: Vec<Quaternion> = Vec::new();
        let mut coord_rows: IMat = Vec::new();
        for cand in &candidates {
            if selected.len() == 4 {
                break;
            }
            let coords = work
                .coordinates_of(cand)
                .expect("candidate lies in the lattice");
            let row: Vec<BigInt> = coords.iter().map(|c| c.to_integer()).collect();
            let mut trial = coord_rows.clone();
            trial.push(row.clone());
            if extendable_to_basis(&trial) {
                coord_rows = trial;
                selected.push(cand.clone());
            }
        }
        if selected.len() != 4 {
            return Err(Error::invariant(
                "Minkowski reduction did not find four extendable vectors",
            ));
        }
        IdealLattice::new(selected.try_into().unwrap())
    }

    /// Size-reduced copy of the basis (norms shrunk by integer translations);
    /// keeps enumeration trees small on scrambled inputs.
    fn size_reduced(&self) -> [Quaternion; 4] {
        let mut basis = self.basis.clone();
        loop {
            let mut changed = false;
            basis.sort_by(|x, y| (x.nrd(), ambient_key(x)).cmp(&(y.nrd(), ambient_key(y))));
            for r in 0..4 {
                for s in 0..4 {
                    if r == s {
                        continue;
                    }
                    let qs = basis[s].nrd();
                    if qs.is_zero() {
                        continue;
                    }
                    let mu = rat_round(&(polar(&basis[r], &basis[s]) / &qs));
                    if mu.is_zero() {
                        continue;
                    }
                    let shifted = &basis[r] - &basis[s].scale(&Rat::from_integer(mu));
                    if shifted.nrd() < basis[r].nrd() {
                        basis[r] = shifted;
                        changed = true;
                    }
                }
            }
            if !changed {
                return basis;
            }
        }
    }
}

/// Polar form of the reduced norm: (nrd(x+y) - nrd(x) - nrd(y)) / 2.
pub fn polar(x: &Quaternion, y: &Quaternion) -> Rat {
    let half = Rat::new(BigInt::one(), BigInt::from(2));
    (&(x + y).nrd() - &x.nrd() - &y.nrd()) * half
}

fn gram_of(basis: &[Quaternion; 4]) -> QMat {
    let mut g = vec![vec![Rat::zero(); 4]; 4];
    for r in 0..4 {
        for s in r..4 {
            let v = polar(&basis[r], &basis[s]);
            g[r][s] = v.clone();
            g[s][r] = v;
        }
    }
    g
}

fn int_row_to_quat(row: &[BigInt], denom: &BigInt, params: &AlgebraParams) -> Quaternion {
    Quaternion::from_coords(
        [
            Rat::new(row[0].clone(), denom.clone()),
            Rat::new(row[1].clone(), denom.clone()),
            Rat::new(row[2].clone(), denom.clone()),
            Rat::new(row[3].clone(), denom.clone()),
        ],
        params.clone(),
    )
}

fn ambient_key(q: &Quaternion) -> Vec<Rat> {
    q.coords().into_iter().cloned().collect()
}

fn cmp_quat(x: &Quaternion, y: &Quaternion) -> std::cmp::Ordering {
    ambient_key(x).cmp(&ambient_key(y))
}

/// gcd of the k x k minors equals 1 iff the rows extend to a Z-basis.
fn extendable_to_basis(rows: &IMat) -> bool {
    let k = rows.len();
    if k == 0 {
        return true;
    }
    let idx: Vec<usize> = (0..4).collect();
    let mut g = BigInt::zero();
    for cols in combinations(&idx, k) {
        let minor: IMat = rows
            .iter()
            .map(|r| cols.iter().map(|&c| r[c].clone()).collect())
            .collect();
        g = g.gcd(&crate::linalg::det_int(&minor));
        if g.is_one() {
            return true;
        }
    }
    false
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        for mut rest in combinations(&items[i + 1..], k - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

/// Fincke-Pohst: all nonzero lattice vectors with nrd <= bound, one per
/// +-pair. Integer ranges are guessed in floating point and every candidate
/// is accepted or rejected exactly.
fn enumerate_short(basis: &[Quaternion; 4], bound: &Rat) -> Vec<Quaternion> {
    let gram = gram_of(basis);
    let (d, u) = ldl(&gram);
    let mut out = Vec::new();
    let mut x = [0i64; 4];
    descend(basis, &d, &u, bound, 3, &mut x, &mut out);
    out.into_iter()
        .map(|q| {
            let neg = q
                .coords()
                .iter()
                .find(|c| !c.is_zero())
                .map(|c| c.is_negative())
                .unwrap_or(false);
            if neg {
                -&q
            } else {
                q
            }
        })
        .collect()
}

/// Exact LDL decomposition: Q(x) = sum_i d_i (x_i + sum_{j>i} u[i][j] x_j)^2.
fn ldl(gram: &QMat) -> (Vec<Rat>, QMat) {
    let n = 4;
    let mut q: QMat = gram.to_vec();
    for i in 0..n {
        assert!(q[i][i] > Rat::zero(), "Gram matrix not positive definite");
        for j in i + 1..n {
            let v = &q[i][j] / &q[i][i];
            q[j][i] = q[i][j].clone();
            q[i][j] = v;
        }
        for k in i + 1..n {
            for l in k..n {
                let sub = &q[k][i] * &q[i][l];
                q[k][l] = &q[k][l] - &sub;
            }
        }
    }
    let d: Vec<Rat> = (0..n).map(|i| q[i][i].clone()).collect();
    (d, q)
}

fn descend(
    basis: &[Quaternion; 4],
    d: &[Rat],
    u: &QMat,
    remaining: &Rat,
    level: usize,
    x: &mut [i64; 4],
    out: &mut Vec<Quaternion>,
) {
    if remaining < &Rat::zero() {
        return;
    }
    let mut c = Rat::zero();
    for j in level + 1..4 {
        c += &u[level][j] * rat_int(x[j]);
    }
    let radius = (rat_to_f64(remaining) / rat_to_f64(&d[level]))
        .max(0.0)
        .sqrt();
    let c_f = rat_to_f64(&c);
    let lo = (-radius - c_f).floor() as i64 - 1;
    let hi = (radius - c_f).ceil() as i64 + 1;
    for t in lo..=hi {
        x[level] = t;
        let off = rat_int(t) + c.clone();
        let term = &d[level] * &off * &off;
        if &term > remaining {
            continue;
        }
        let rest = remaining - &term;
        if level == 0 {
            if x.iter().all(|&v| v == 0) {
                continue;
            }
            let mut q = Quaternion::zero(basis[0].params().clone());
            for (r, b) in basis.iter().enumerate() {
                q = &q + &b.scale(&rat_int(x[r]));
            }
            out.push(q);
        } else {
            descend(basis, d, u, &rest, level - 1, x, out);
        }
    }
    x[level] = 0;
}
