//! The definite quaternion algebra H_N ramified at {N, infinity}, its
//! N-extremal maximal order O_N, and left fractional ideals.
//!
//! For N = 5 mod 6 the order is
//!     Z + Z(1+i)/2 + Z(j+ij)/2 + Z(i-ij)/3        in H(-3,-N),
//! for N = 7 mod 12
//!     Z + Zi + Z(1+j)/2 + Z(i+ij)/2               in H(-1,-N),
//! and for N = 1 mod 12 the algebra parameters follow the classical Pizer
//! construction ((-2,-N) for N = 5 mod 8, (-q,-N) with an auxiliary prime
//! q = 3 mod 4 otherwise) while the order is grown from Z<1,i,j,ij> by
//! saturation and then moved between order types until the extremality
//! witness (an element of reduced norm N) exists. Every constructed order
//! is re-verified: closure, unit element, reduced discriminant N,
//! ramification of the parameters.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::lattice::IdealLattice;
use crate::linalg::det_rat;
use crate::quat::{AlgebraParams, Quaternion};
use crate::rational::{int_sqrt_exact, rat, rat_int, rat_sqrt_exact, Rat};

/// A maximal order in H_N with reduced discriminant N.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaximalOrder {
    lattice: IdealLattice,
    level: u64,
}

/// Half the unit-group order of a right order; always 1, 2 or 3 here.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Weight(pub u8);

impl Weight {
    pub fn value(&self) -> u8 {
        self.0
    }

    pub fn as_rat(&self) -> Rat {
        rat_int(self.0 as i64)
    }
}

/// A left fractional O_N-ideal, full rank, checked stable under O_N.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeftIdeal {
    lattice: IdealLattice,
    parent: MaximalOrder,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime factorization by trial division (the moduli here stay tiny).
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn legendre(a: &BigInt, p: &BigInt) -> i32 {
    let a = a.mod_floor(p);
    if a.is_zero() {
        return 0;
    }
    let e = (p - BigInt::one()) / BigInt::from(2);
    if a.modpow(&e, p).is_one() {
        1
    } else {
        -1
    }
}

fn invert_mod_or_one(x: &BigInt, p: &BigInt) -> BigInt {
    crate::linalg::mod_inverse(x, p).unwrap_or_else(BigInt::one)
}

fn val_p(r: &Rat, p: &BigInt) -> (i64, BigInt) {
    // p-adic valuation and unit part (as a residue mod p) of a nonzero rational
    let mut v = 0i64;
    let mut num = r.numer().clone();
    let mut den = r.denom().clone();
    while (&num % p).is_zero() {
        num /= p;
        v += 1;
    }
    while (&den % p).is_zero() {
        den /= p;
        v -= 1;
    }
    (v, num * invert_mod_or_one(&den, p))
}

fn val2(r: &Rat) -> (i64, BigInt) {
    // 2-adic valuation and odd unit part reduced mod 8
    let two = BigInt::from(2);
    let mut v = 0i64;
    let mut num = r.numer().clone();
    let mut den = r.denom().clone();
    while num.is_even() {
        num /= &two;
        v += 1;
    }
    while den.is_even() {
        den /= &two;
        v -= 1;
    }
    let m8 = BigInt::from(8);
    let u = (num.mod_floor(&m8) * invert_mod_or_one(&den.mod_floor(&m8), &m8)).mod_floor(&m8);
    (v, u)
}

/// Hilbert symbol (a, b)_p for a prime p, or (a, b)_inf when `p` is `None`.
pub fn hilbert_symbol(a: &Rat, b: &Rat, p: Option<u64>) -> i32 {
    let Some(p) = p else {
        return if a < &Rat::zero() && b < &Rat::zero() {
            -1
        } else {
            1
        };
    };
    if p == 2 {
        let (alpha, u) = val2(a);
        let (beta, v) = val2(b);
        let eps = |x: &BigInt| ((x - BigInt::one()) / BigInt::from(2)).mod_floor(&BigInt::from(2));
        let omega =
            |x: &BigInt| ((x * x - BigInt::one()) / BigInt::from(8)).mod_floor(&BigInt::from(2));
        let expo = (eps(&u) * eps(&v)
            + BigInt::from(alpha) * omega(&v)
            + BigInt::from(beta) * omega(&u))
        .mod_floor(&BigInt::from(2));
        if expo.is_zero() {
            1
        } else {
            -1
        }
    } else {
        let pz = BigInt::from(p);
        let (alpha, u) = val_p(a, &pz);
        let (beta, v) = val_p(b, &pz);
        let mut sym = 1i32;
        if (alpha * beta) % 2 != 0 && (&pz % BigInt::from(4)) == BigInt::from(3) {
            sym = -sym;
        }
        if beta % 2 != 0 {
            sym *= legendre(&u, &pz);
        }
        if alpha % 2 != 0 {
            sym *= legendre(&v, &pz);
        }
        sym
    }
}

fn small_prime_factors(r: &Rat) -> Vec<u64> {
    let mut out = Vec::new();
    for part in [r.numer().clone(), r.denom().clone()] {
        if let Ok(m) = part.magnitude().to_string().parse::<u64>() {
            for (q, _) in factorize(m) {
                out.push(q);
            }
        }
    }
    out
}

/// True iff H(a,b) is ramified exactly at {N, infinity}.
pub fn is_ramified_correctly(params: &AlgebraParams, n: u64) -> bool {
    if hilbert_symbol(params.a(), params.b(), None) != -1 {
        return false;
    }
    let mut places: Vec<u64> = vec![2, n];
    places.extend(small_prime_factors(params.a()));
    places.extend(small_prime_factors(params.b()));
    places.sort_unstable();
    places.dedup();
    places.into_iter().all(|q| {
        let want = if q == n { -1 } else { 1 };
        hilbert_symbol(params.a(), params.b(), Some(q)) == want
    })
}

/// Structure constants (a, b) for the algebra H_N ramified at {N, infinity}.
pub fn build_algebra(n: u64) -> Result<AlgebraParams> {
    if !is_prime(n) || n < 5 {
        return Err(Error::usage(format!("level must be a prime >= 5, got {n}")));
    }
    let ni = i64::try_from(n).map_err(|_| Error::usage("level too large"))?;
    let params = match n % 12 {
        5 | 11 => AlgebraParams::from_ints(-3, -ni)?,
        7 => AlgebraParams::from_ints(-1, -ni)?,
        1 => {
            if n % 8 == 5 {
                AlgebraParams::from_ints(-2, -ni)?
            } else {
                // smallest auxiliary prime q = 3 mod 4 giving the right symbols
                let q = (3u64..)
                    .step_by(4)
                    .filter(|&q| is_prime(q))
                    .find(|&q| {
                        AlgebraParams::from_ints(-(q as i64), -ni)
                            .map(|cand| is_ramified_correctly(&cand, n))
                            .unwrap_or(false)
                    })
                    .expect("auxiliary prime exists");
                AlgebraParams::from_ints(-(q as i64), -ni)?
            }
        }
        _ => unreachable!("prime >= 5"),
    };
    if !is_ramified_correctly(&params, n) {
        return Err(Error::invariant(format!(
            "constructed parameters for N={n} have wrong ramification"
        )));
    }
    Ok(params)
}

fn q(params: &AlgebraParams, c: [Rat; 4]) -> Quaternion {
    Quaternion::from_coords(c, params.clone())
}

impl MaximalOrder {
    /// Wrap a lattice after checking the order axioms and discriminant.
    pub fn from_lattice(lattice: IdealLattice, level: u64) -> Result<Self> {
        let one = Quaternion::one(lattice.params().clone());
        if !lattice.contains(&one) {
            return Err(Error::invariant("order does not contain 1"));
        }
        let b = lattice.basis();
        for x in b {
            for y in b {
                if !lattice.contains(&(x * y)) {
                    return Err(Error::invariant("lattice not closed under multiplication"));
                }
            }
        }
        let d = reduced_discriminant(&lattice)?;
        if d != BigInt::from(level) {
            return Err(Error::invariant(format!(
                "reduced discriminant {d} != level {level}"
            )));
        }
        Ok(MaximalOrder { lattice, level })
    }

    pub fn lattice(&self) -> &IdealLattice {
        &self.lattice
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn params(&self) -> &AlgebraParams {
        self.lattice.params()
    }

    pub fn basis(&self) -> &[Quaternion; 4] {
        self.lattice.basis()
    }

    /// The order viewed as the unit left ideal.
    pub fn unit_ideal(&self) -> LeftIdeal {
        LeftIdeal {
            lattice: self.lattice.clone(),
            parent: self.clone(),
        }
    }

    /// Number of unit +-pairs, i.e. #(units)/2; the weight of the order.
    pub fn unit_pairs(&self) -> u8 {
        let pairs = self
            .lattice
            .vectors_with_norm_at_most(&rat_int(1))
            .into_iter()
            .filter(|v| v.nrd() == rat_int(1))
            .count();
        u8::try_from(pairs).expect("unit count fits")
    }

    /// N-extremality witness: an element of reduced norm exactly N.
    pub fn is_extremal(&self) -> bool {
        let n = rat_int(self.level as i64);
        self.lattice
            .vectors_with_norm_at_most(&n)
            .iter()
            .any(|v| v.nrd() == n)
    }
}

/// Reduced discriminant: the square root of |det(trd(w_r * w_s))|.
pub fn reduced_discriminant(lattice: &IdealLattice) -> Result<BigInt> {
    let b = lattice.basis();
    let mut t = vec![vec![Rat::zero(); 4]; 4];
    for r in 0..4 {
        for c in 0..4 {
            t[r][c] = (&b[r] * &b[c]).trd();
        }
    }
    let d = det_rat(&t);
    let abs = if d < Rat::zero() { -d } else { d };
    if !abs.is_integer() {
        return Err(Error::invariant("discriminant form is not integral"));
    }
    int_sqrt_exact(&abs.to_integer())
        .ok_or_else(|| Error::invariant("discriminant is not a perfect square"))
}

/// The N-extremal maximal order O_N.
pub fn build_maximal_order(n: u64) -> Result<MaximalOrder> {
    let params = build_algebra(n)?;
    let half = rat(1, 2);
    let third = rat(1, 3);
    let order = match n % 12 {
        5 | 11 => {
            let basis = [
                Quaternion::one(params.clone()),
                q(&params, [half.clone(), half.clone(), Rat::zero(), Rat::zero()]),
                q(&params, [Rat::zero(), Rat::zero(), half.clone(), half.clone()]),
                q(&params, [Rat::zero(), third.clone(), Rat::zero(), -third]),
            ];
            MaximalOrder::from_lattice(IdealLattice::new(basis)?, n)?
        }
        7 => {
            let basis = [
                Quaternion::one(params.clone()),
                Quaternion::i(params.clone()),
                q(&params, [half.clone(), Rat::zero(), half.clone(), Rat::zero()]),
                q(&params, [Rat::zero(), half.clone(), Rat::zero(), half]),
            ];
            MaximalOrder::from_lattice(IdealLattice::new(basis)?, n)?
        }
        1 => saturated_extremal_order(&params, n)?,
        _ => unreachable!(),
    };
    if !order.is_extremal() {
        return Err(Error::invariant(format!(
            "constructed order for N={n} is not extremal"
        )));
    }
    Ok(order)
}

/// Grow Z<1,i,j,ij> to a maximal order, then walk between order types via
/// small-prime stable sublattices until one carries an element of norm N.
fn saturated_extremal_order(params: &AlgebraParams, n: u64) -> Result<MaximalOrder> {
    let free = IdealLattice::new([
        Quaternion::one(params.clone()),
        Quaternion::i(params.clone()),
        Quaternion::j(params.clone()),
        Quaternion::ij(params.clone()),
    ])?;
    let maximal = saturate(free, n)?;
    let first = MaximalOrder::from_lattice(maximal, n)?;
    if first.is_extremal() {
        return Ok(first);
    }
    let mut seen = vec![first.lattice.hnf_key()];
    let mut queue = VecDeque::from([first]);
    while let Some(order) = queue.pop_front() {
        for p in [2u64, 3, 5, 7] {
            if p == n {
                continue;
            }
            for sub in stable_index_p2_sublattices(&order, p)? {
                let ideal = LeftIdeal::new(sub, order.clone())?;
                let next = ideal.right_order()?;
                let key = next.lattice.hnf_key();
                if seen.contains(&key) {
                    continue;
                }
                if next.is_extremal() {
                    return Ok(next);
                }
                seen.push(key);
                queue.push_back(next);
            }
        }
    }
    Err(Error::invariant(format!(
        "no extremal maximal order found for N={n}"
    )))
}

/// Enlarge an order until its reduced discriminant drops to N.
fn saturate(start: IdealLattice, n: u64) -> Result<IdealLattice> {
    let mut current = start;
    'outer: loop {
        let d = reduced_discriminant(&current)?;
        if d == BigInt::from(n) {
            return Ok(current);
        }
        let excess: u64 = (&d / BigInt::from(n))
            .to_string()
            .parse()
            .map_err(|_| Error::invariant("discriminant excess out of range"))?;
        for (ell, _) in factorize(excess) {
            let elli = ell as i64;
            let b = current.basis().clone();
            for mask in 1..ell.pow(4) {
                let mut c = [0i64; 4];
                let mut m = mask;
                for slot in c.iter_mut() {
                    *slot = (m % ell) as i64;
                    m /= ell;
                }
                let mut x = Quaternion::zero(current.params().clone());
                for (r, item) in b.iter().enumerate() {
                    x = &x + &item.scale(&rat_int(c[r]));
                }
                let x = x.scale(&rat(1, elli));
                if !x.trd().is_integer() || !x.nrd().is_integer() || current.contains(&x) {
                    continue;
                }
                if let Some(bigger) = ring_closure(&current, &x) {
                    let d2 = reduced_discriminant(&bigger)?;
                    if d2 < d && (&d % &d2).is_zero() {
                        current = bigger;
                        continue 'outer;
                    }
                }
            }
        }
        return Err(Error::invariant(
            "saturation stalled before reaching a maximal order",
        ));
    }
}

/// Smallest multiplicatively closed lattice containing `base` and `x`,
/// or `None` when the closure does not stabilize.
fn ring_closure(base: &IdealLattice, x: &Quaternion) -> Option<IdealLattice> {
    let mut gens: Vec<Quaternion> = base.basis().to_vec();
    gens.push(x.clone());
    let mut current = IdealLattice::from_generators(base.params(), &gens).ok()?;
    for _ in 0..12 {
        let product = current.product(&current).ok()?;
        let bigger = current.sum(&product).ok()?;
        if bigger == current {
            let integral = current
                .basis()
                .iter()
                .all(|b| b.trd().is_integer() && b.nrd().is_integer());
            return integral.then_some(current);
        }
        current = bigger;
    }
    None
}

/// All left-O-stable sublattices K with pO < K < O and [O : K] = p^2,
/// found by scanning the 2-dimensional subspaces of O/pO. Only used for
/// hopping between order types, so brute force over p^4 vectors is fine.
fn stable_index_p2_sublattices(order: &MaximalOrder, p: u64) -> Result<Vec<IdealLattice>> {
    let pi = p as i64;
    let basis = order.basis();
    let mut mult = Vec::with_capacity(4);
    for g in basis {
        let mut rows = Vec::with_capacity(4);
        for b in basis {
            let coords = order
                .lattice
                .coordinates_of(&(g * b))
                .ok_or_else(|| Error::invariant("product left the order"))?;
            let row: Vec<i64> = coords
                .iter()
                .map(|c| {
                    c.to_integer()
                        .mod_floor(&BigInt::from(pi))
                        .to_string()
                        .parse::<i64>()
                        .unwrap()
                })
                .collect();
            rows.push(row);
        }
        mult.push(rows);
    }

    let vecs = all_nonzero_vecs(pi);
    let mut subspaces: BTreeSet<Vec<Vec<i64>>> = BTreeSet::new();
    for v1 in &vecs {
        for v2 in &vecs {
            let mut m = vec![v1.clone(), v2.clone()];
            let pivots = crate::linalg::rref_mod_p(&mut m, pi);
            if pivots.len() == 2 {
                subspaces.insert(m);
            }
        }
    }

    let mut out = Vec::new();
    for m in subspaces {
        let inside = |v: &[i64]| {
            let mut test = m.clone();
            test.push(v.to_vec());
            crate::linalg::rref_mod_p(&mut test, pi).len() == 2
        };
        let stable = mult.iter().all(|g| {
            m.iter().all(|v| {
                let mut image = vec![0i64; 4];
                for (r, &vc) in v.iter().enumerate() {
                    for k in 0..4 {
                        image[k] = (image[k] + g[r][k] * vc).rem_euclid(pi);
                    }
                }
                inside(&image)
            })
        });
        if !stable {
            continue;
        }
        let mut gens: Vec<Quaternion> = order
            .basis()
            .iter()
            .map(|b| b.scale(&rat_int(pi)))
            .collect();
        for v in &m {
            let mut x = Quaternion::zero(order.params().clone());
            for (r, &vc) in v.iter().enumerate() {
                x = &x + &order.basis()[r].scale(&rat_int(vc));
            }
            gens.push(x);
        }
        out.push(IdealLattice::from_generators(order.params(), &gens)?);
    }
    Ok(out)
}

fn all_nonzero_vecs(p: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    for mask in 1..(p as u64).pow(4) {
        let mut v = vec![0i64; 4];
        let mut m = mask;
        for slot in v.iter_mut() {
            *slot = (m % p as u64) as i64;
            m /= p as u64;
        }
        out.push(v);
    }
    out
}

impl LeftIdeal {
    /// Wrap a lattice, checking stability under left multiplication by the
    /// parent order.
    pub fn new(lattice: IdealLattice, parent: MaximalOrder) -> Result<Self> {
        for g in parent.basis() {
            for b in lattice.basis() {
                if !lattice.contains(&(g * b)) {
                    return Err(Error::usage("lattice is not a left ideal of the order"));
                }
            }
        }
        Ok(LeftIdeal { lattice, parent })
    }

    /// Left ideal generated by the given elements: the span of O_N * g.
    pub fn generated_by(parent: &MaximalOrder, gens: &[Quaternion]) -> Result<Self> {
        let mut span = Vec::new();
        for g in gens {
            for b in parent.basis() {
                span.push(b * g);
            }
        }
        let lattice = IdealLattice::from_generators(parent.params(), &span)?;
        LeftIdeal::new(lattice, parent.clone())
    }

    pub fn lattice(&self) -> &IdealLattice {
        &self.lattice
    }

    pub fn parent(&self) -> &MaximalOrder {
        &self.parent
    }

    /// nrd(I), the square root of the generalized index [O_N : I].
    pub fn nrd(&self) -> Result<Rat> {
        let index = self.lattice.index_in(&self.parent.lattice)?;
        rat_sqrt_exact(&index)
            .ok_or_else(|| Error::invariant("ideal index is not a rational square"))
    }

    /// The ideal I*z.
    pub fn scale(&self, z: &Quaternion) -> Result<LeftIdeal> {
        let lattice = self.lattice.scale_quat(z)?;
        LeftIdeal::new(lattice, self.parent.clone())
    }

    /// Conjugate lattice {conj(x) : x in I}; a right ideal, returned as a
    /// bare lattice.
    pub fn conj_lattice(&self) -> IdealLattice {
        self.lattice.conj()
    }

    /// I^{-1} = conj(I)/nrd(I) as a lattice.
    pub fn inverse_lattice(&self) -> Result<IdealLattice> {
        let n = self.nrd()?;
        Ok(self.conj_lattice().scale_rat(&(rat_int(1) / n)))
    }

    /// Right order {z : I z inside I}: the intersection of b^{-1} I over the
    /// basis vectors b of I.
    pub fn right_order(&self) -> Result<MaximalOrder> {
        let mut current: Option<IdealLattice> = None;
        for b in self.lattice.basis() {
            let binv = b
                .inverse()
                .ok_or_else(|| Error::usage("zero basis vector"))?;
            let image = IdealLattice::new([
                &binv * &self.lattice.basis()[0],
                &binv * &self.lattice.basis()[1],
                &binv * &self.lattice.basis()[2],
                &binv * &self.lattice.basis()[3],
            ])?;
            current = Some(match current {
                None => image,
                Some(acc) => acc.intersect(&image)?,
            });
        }
        MaximalOrder::from_lattice(current.unwrap(), self.parent.level)
    }

    /// w_I: half the unit count of the right order.
    pub fn weight(&self) -> Result<Weight> {
        let pairs = self.right_order()?.unit_pairs();
        if !(1..=3).contains(&pairs) {
            return Err(Error::invariant(format!(
                "unit pair count {pairs} outside {{1,2,3}}"
            )));
        }
        Ok(Weight(pairs))
    }

    /// Shortest element z of I with nrd(z)/nrd(I) coprime to p.
    pub fn element_with_norm_coprime_to(&self, p: u64) -> Result<Quaternion> {
        let nrd_ideal = self.nrd()?;
        let mut bound = self.lattice.minimum();
        for _ in 0..24 {
            for v in self.lattice.vectors_with_norm_at_most(&bound) {
                let ratio = v.nrd() / nrd_ideal.clone();
                if ratio.is_integer() && !(ratio.to_integer() % BigInt::from(p)).is_zero() {
                    return Ok(v);
                }
            }
            bound *= rat_int(2);
        }
        Err(Error::invariant(format!(
            "no element with norm prime to {p} found"
        )))
    }
}

/// Solve x^2 - 3 y^2 = -N by bounded search over y <= sqrt(N) + 1.
pub fn solve_x2_minus_3y2(n: u64) -> Option<(u64, u64)> {
    let ni = n as i128;
    let ymax = (n as f64).sqrt() as i128 + 2;
    for y in 1..=ymax {
        let t = 3 * y * y - ni;
        if t < 0 {
            continue;
        }
        let x = (t as f64).sqrt() as i128;
        for cand in [x - 1, x, x + 1] {
            if cand >= 0 && cand * cand == t {
                return Some((cand as u64, y as u64));
            }
        }
    }
    None
}

/// The order Z + (1+j)/2 Z + alpha Z + (alpha - alpha j)/2 Z with
/// alpha = (x i + ij)/(3y) and x^2 - 3y^2 = -N; alpha is a unit of order 4.
/// Defined for N = 11 mod 12, where it represents the weight-2 ideal class.
pub fn auxiliary_order(n: u64) -> Result<MaximalOrder> {
    if n % 12 != 11 {
        return Err(Error::usage("auxiliary order needs N = 11 mod 12"));
    }
    let params = build_algebra(n)?;
    let (x, y) = solve_x2_minus_3y2(n)
        .ok_or_else(|| Error::invariant("no solution to x^2 - 3y^2 = -N in range"))?;
    let d = 3 * y as i64;
    let alpha = q(
        &params,
        [Rat::zero(), rat(x as i64, d), Rat::zero(), rat(1, d)],
    );
    let half = rat(1, 2);
    let one_plus_j = q(
        &params,
        [half.clone(), Rat::zero(), half.clone(), Rat::zero()],
    );
    let aj = &alpha * &Quaternion::j(params.clone());
    let fourth = (&alpha - &aj).scale(&half);
    let basis = [Quaternion::one(params.clone()), one_plus_j, alpha, fourth];
    MaximalOrder::from_lattice(IdealLattice::new(basis)?, n)
}
