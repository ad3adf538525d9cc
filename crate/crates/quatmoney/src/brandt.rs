//! Brandt matrices: p-neighbor enumeration, the integer matrix T'(p), and
//! its weight-normalized symmetric form T(p).
//!
//! Column [J] of T'(p) is the histogram, over ideal classes, of the p+1
//! index-p^2 sublattices pJ < K < J that are stable under the order; they
//! correspond to the kernels {A : Av = 0} for v in P^1(F_p) under the
//! splitting mod p. Conjugating by W = diag(sqrt(w)) (or its inverse,
//! whichever direction the exact self-adjointness relation supports) makes
//! the matrix real symmetric; the orientation is verified at build time and
//! the distinguished (p+1)-eigenvector is computed from the exact relation,
//! not assumed.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::encoding::{CanonicalTriple, ClassSet, Encoder};
use crate::error::{Error, Result};
use crate::linalg::kernel_mod_p;
use crate::orders::LeftIdeal;
use crate::rational::{rat, rat_int, Rat};

/// Sparse integer Brandt matrix T'(p) for level N, indexed by the class-set
/// ordering. Column sums are p + 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BrandtMatrix {
    pub format_version: u32,
    #[serde(rename = "N")]
    pub level: u64,
    pub p: u64,
    pub h: usize,
    /// (row, col, count) with count > 0, sorted by (row, col).
    pub triplets: Vec<(usize, usize, u64)>,
    pub weights: Vec<u8>,
}

pub const BRANDT_FORMAT: u32 = 1;

/// Which exact formula the distinguished (p+1)-eigenvector matched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistinguishedVector {
    /// All weights equal; both formulas coincide.
    Uniform,
    /// Coordinates proportional to 1/sqrt(w_I).
    InverseSqrtWeights,
    /// Coordinates proportional to sqrt(w_I).
    SqrtWeights,
}

/// The normalized Brandt matrix T(p): real symmetric, commuting family,
/// with the distinguished eigenvector spanning the complement of the
/// invariant hyperplane.
#[derive(Clone, Debug)]
pub struct NormalizedBrandt {
    pub level: u64,
    pub p: u64,
    pub matrix: DMatrix<f64>,
    /// Unit vector spanning the orthogonal complement of the invariant
    /// hyperplane; eigenvector of eigenvalue p + 1.
    pub distinguished: DVector<f64>,
    pub formula: DistinguishedVector,
}

/// The p+1 neighbor triples of the class of J (with multiplicity).
pub fn p_neighbors(enc: &Encoder, ideal: &LeftIdeal, p: u64) -> Result<Vec<CanonicalTriple>> {
    let n = enc.order().level();
    if p == n {
        return Err(Error::usage("neighbor prime must differ from the level"));
    }
    let pi = p as i64;

    // move to a representative with norm prime to p
    let nrd = ideal.nrd()?;
    let rep;
    let ideal = if nrd.is_integer()
        && !(nrd.to_integer() % BigInt::from(p)).is_zero()
        && enc.order().lattice().contains_lattice(ideal.lattice())
    {
        ideal
    } else {
        let z = ideal.element_with_norm_coprime_to(p)?;
        let scaled = ideal
            .lattice()
            .scale_quat(&z.conj())?
            .scale_rat(&(rat_int(1) / nrd));
        rep = LeftIdeal::new(scaled, enc.order().clone())?;
        &rep
    };

    let iso = enc.split(p)?;
    // images of the basis of J inside M_2(F_p)
    let mut images = Vec::with_capacity(4);
    for v in ideal.lattice().basis() {
        let coords = enc
            .order()
            .lattice()
            .coordinates_of(v)
            .ok_or_else(|| Error::invariant("representative not inside the order"))?;
        let mut c = [0i64; 4];
        for k in 0..4 {
            c[k] = coords[k]
                .to_integer()
                .mod_floor(&BigInt::from(p))
                .to_string()
                .parse()
                .unwrap();
        }
        images.push(iso.map_coords(&c));
    }

    // P^1(F_p): (1, t) for t in F_p, then (0, 1)
    let mut lines: Vec<(i64, i64)> = (0..pi).map(|t| (1, t)).collect();
    lines.push((0, 1));

    let mut out = Vec::with_capacity(lines.len());
    for v in lines {
        // condition: image(x) * v = 0 (two linear conditions on J-coordinates)
        let cond: Vec<Vec<i64>> = (0..2)
            .map(|comp| {
                images
                    .iter()
                    .map(|a| {
                        let w = a.apply(v);
                        if comp == 0 {
                            w.0
                        } else {
                            w.1
                        }
                    })
                    .collect()
            })
            .collect();
        let kernel = kernel_mod_p(&cond, pi);
        if kernel.len() != 2 {
            return Err(Error::invariant("neighbor kernel is not 2-dimensional"));
        }
        let mut gens: Vec<crate::quat::Quaternion> = ideal
            .lattice()
            .basis()
            .iter()
            .map(|b| b.scale(&rat_int(pi)))
            .collect();
        for combo in &kernel {
            let mut x = crate::quat::Quaternion::zero(enc.order().params().clone());
            for (r, &c) in combo.iter().enumerate() {
                x = &x + &ideal.lattice().basis()[r].scale(&rat_int(c));
            }
            gens.push(x);
        }
        let sub = crate::lattice::IdealLattice::from_generators(enc.order().params(), &gens)?;
        if sub.index_in(ideal.lattice())? != rat_int((pi * pi) as i64) {
            return Err(Error::invariant("neighbor does not have index p^2"));
        }
        let sub_ideal = LeftIdeal::new(sub, enc.order().clone())?;
        out.push(enc.canonical_encode(&sub_ideal)?);
    }
    Ok(out)
}

/// The Brandt matrix T'(p) for a computed class set.
pub fn brandt_matrix(enc: &Encoder, classes: &ClassSet, p: u64) -> Result<BrandtMatrix> {
    let h = classes.len();
    let mut counts = vec![vec![0u64; h]; h];
    for (col, entry) in classes.classes.iter().enumerate() {
        let neighbors = p_neighbors(enc, &entry.ideal, p)?;
        if neighbors.len() as u64 != p + 1 {
            return Err(Error::invariant("expected exactly p+1 neighbors"));
        }
        for t in neighbors {
            let row = classes
                .position(&t)
                .ok_or_else(|| Error::invariant(format!("neighbor {t} not in the class set")))?;
            counts[row][col] += 1;
        }
    }
    let mut triplets = Vec::new();
    for (r, row) in counts.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            if v > 0 {
                triplets.push((r, c, v));
            }
        }
    }
    let weights = classes.classes.iter().map(|c| c.w).collect();
    let out = BrandtMatrix {
        format_version: BRANDT_FORMAT,
        level: classes.level,
        p,
        h,
        triplets,
        weights,
    };
    for col in 0..h {
        if out.column_sum(col) != p + 1 {
            return Err(Error::invariant("column sum differs from p+1"));
        }
    }
    Ok(out)
}

impl BrandtMatrix {
    pub fn entry(&self, row: usize, col: usize) -> u64 {
        self.triplets
            .iter()
            .find(|&&(r, c, _)| r == row && c == col)
            .map(|&(_, _, v)| v)
            .unwrap_or(0)
    }

    pub fn column_sum(&self, col: usize) -> u64 {
        self.triplets
            .iter()
            .filter(|&&(_, c, _)| c == col)
            .map(|&(_, _, v)| v)
            .sum()
    }

    pub fn dense_int(&self) -> Vec<Vec<u64>> {
        let mut m = vec![vec![0u64; self.h]; self.h];
        for &(r, c, v) in &self.triplets {
            m[r][c] = v;
        }
        m
    }

    /// Exact trace; with the column-sum identity this pins the sub-(p+1)
    /// spectrum for h = 2.
    pub fn trace(&self) -> i64 {
        (0..self.h).map(|i| self.entry(i, i) as i64).sum()
    }

    /// Exact right-eigenvector test: does M x = (p+1) x for x_i = 1/w_i
    /// (`true`) or x_i = w_i (`false`)? Exactly one holds unless the
    /// weights are uniform.
    fn eigen_formula(&self) -> Result<DistinguishedVector> {
        let m = self.dense_int();
        let ev = rat_int((self.p + 1) as i64);
        let check = |x: &[Rat]| -> bool {
            (0..self.h).all(|i| {
                let mut acc = Rat::new(BigInt::from(0), BigInt::from(1));
                for j in 0..self.h {
                    acc += rat_int(m[i][j] as i64) * x[j].clone();
                }
                acc == &ev * &x[i]
            })
        };
        let inv_w: Vec<Rat> = self.weights.iter().map(|&w| rat(1, w as i64)).collect();
        let w: Vec<Rat> = self.weights.iter().map(|&w| rat_int(w as i64)).collect();
        let uniform = self.weights.iter().all(|&x| x == self.weights[0]);
        match (check(&inv_w), check(&w)) {
            (true, true) => {
                debug_assert!(uniform);
                Ok(DistinguishedVector::Uniform)
            }
            (true, false) => Ok(DistinguishedVector::InverseSqrtWeights),
            (false, true) => Ok(DistinguishedVector::SqrtWeights),
            (false, false) => Err(Error::invariant(
                "neither weight formula gives the (p+1)-eigenvector",
            )),
        }
    }

    /// Weight-normalize into the real symmetric T(p).
    pub fn normalized(&self, symmetry_tol: f64) -> Result<NormalizedBrandt> {
        let formula = self.eigen_formula()?;
        let h = self.h;
        let m = self.dense_int();
        let sqrt_w: Vec<f64> = self.weights.iter().map(|&w| (w as f64).sqrt()).collect();
        // conjugation direction making the matrix symmetric: with
        // M (1/w) = (p+1)(1/w) the symmetric form is D M D^{-1} for
        // D = diag(sqrt w); with M w = (p+1) w it is D^{-1} M D.
        let mut t = DMatrix::<f64>::zeros(h, h);
        for r in 0..h {
            for c in 0..h {
                let factor = match formula {
                    DistinguishedVector::Uniform | DistinguishedVector::InverseSqrtWeights => {
                        sqrt_w[r] / sqrt_w[c]
                    }
                    DistinguishedVector::SqrtWeights => sqrt_w[c] / sqrt_w[r],
                };
                t[(r, c)] = m[r][c] as f64 * factor;
            }
        }
        let mut asym: f64 = 0.0;
        for r in 0..h {
            for c in 0..h {
                asym = asym.max((t[(r, c)] - t[(c, r)]).abs());
            }
        }
        if asym > symmetry_tol {
            return Err(Error::invariant(format!(
                "normalized Brandt matrix asymmetric by {asym:e}"
            )));
        }
        let mut s = DVector::<f64>::zeros(h);
        for i in 0..h {
            s[i] = match formula {
                DistinguishedVector::Uniform | DistinguishedVector::InverseSqrtWeights => {
                    1.0 / sqrt_w[i]
                }
                DistinguishedVector::SqrtWeights => sqrt_w[i],
            };
        }
        let norm = s.norm();
        s /= norm;
        let residual = (&t * &s - (self.p as f64 + 1.0) * &s).amax();
        if residual > 1e-8 {
            return Err(Error::invariant(format!(
                "distinguished eigenvector residual {residual:e}"
            )));
        }
        Ok(NormalizedBrandt {
            level: self.level,
            p: self.p,
            matrix: t,
            distinguished: s,
            formula,
        })
    }
}

impl NormalizedBrandt {
    pub fn h(&self) -> usize {
        self.matrix.nrows()
    }

    /// Orthogonal projection onto the invariant hyperplane (the orthogonal
    /// complement of the distinguished eigenvector).
    pub fn project_invariant(&self, v: &DVector<f64>) -> DVector<f64> {
        let c = self.distinguished.dot(v);
        v - c * &self.distinguished
    }
}
