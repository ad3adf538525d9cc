//! Exact arithmetic in the quaternion algebra H(a,b) over Q.
//!
//! H(a,b) = Q + Qi + Qj + Qij with the relations
//!
//! ```text
//! i^2 = a,   j^2 = b,   ji = -ij.
//! ```
//!
//! Every element is alpha + beta*i + gamma*j + delta*ij with rational
//! coordinates. The conjugate is alpha - beta*i - gamma*j - delta*ij and the
//! reduced norm nrd(z) = z*conj(z) = alpha^2 - a*beta^2 - b*gamma^2 + a*b*delta^2,
//! a positive definite quadratic form when a, b < 0.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{rat_from_string, rat_int, rat_to_string, Rat};

/// The structure constants (a, b) of H(a,b). Only definite algebras
/// (a < 0 and b < 0) are supported.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AlgebraParams {
    a: Rat,
    b: Rat,
}

impl AlgebraParams {
    pub fn new(a: Rat, b: Rat) -> Result<Self> {
        if a.is_zero() || b.is_zero() {
            return Err(Error::usage("algebra parameters must be nonzero"));
        }
        Ok(AlgebraParams { a, b })
    }

    /// H(a,b) with integer parameters.
    pub fn from_ints(a: i64, b: i64) -> Result<Self> {
        Self::new(rat_int(a), rat_int(b))
    }

    pub fn a(&self) -> &Rat {
        &self.a
    }

    pub fn b(&self) -> &Rat {
        &self.b
    }

    pub fn is_definite(&self) -> bool {
        self.a < Rat::zero() && self.b < Rat::zero()
    }

    /// Gram matrix of the reduced norm in the coordinates (1, i, j, ij):
    /// diag(1, -a, -b, ab). Requires a definite algebra.
    pub fn norm_form(&self) -> Result<[[Rat; 4]; 4]> {
        if !self.is_definite() {
            return Err(Error::usage(
                "norm form is only available for definite algebras (a, b < 0)",
            ));
        }
        let zero = Rat::zero;
        Ok([
            [rat_int(1), zero(), zero(), zero()],
            [zero(), -self.a.clone(), zero(), zero()],
            [zero(), zero(), -self.b.clone(), zero()],
            [zero(), zero(), zero(), &self.a * &self.b],
        ])
    }
}

impl fmt::Display for AlgebraParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "H({},{})", self.a, self.b)
    }
}

/// An element of H(a,b), carrying its algebra parameters.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Quaternion {
    pub alpha: Rat,
    pub beta: Rat,
    pub gamma: Rat,
    pub delta: Rat,
    params: AlgebraParams,
}

impl Quaternion {
    pub fn new(alpha: Rat, beta: Rat, gamma: Rat, delta: Rat, params: AlgebraParams) -> Self {
        Quaternion {
            alpha,
            beta,
            gamma,
            delta,
            params,
        }
    }

    pub fn zero(params: AlgebraParams) -> Self {
        Self::from_coords([Rat::zero(), Rat::zero(), Rat::zero(), Rat::zero()], params)
    }

    pub fn one(params: AlgebraParams) -> Self {
        Self::from_coords([rat_int(1), Rat::zero(), Rat::zero(), Rat::zero()], params)
    }

    pub fn i(params: AlgebraParams) -> Self {
        Self::from_coords([Rat::zero(), rat_int(1), Rat::zero(), Rat::zero()], params)
    }

    pub fn j(params: AlgebraParams) -> Self {
        Self::from_coords([Rat::zero(), Rat::zero(), rat_int(1), Rat::zero()], params)
    }

    pub fn ij(params: AlgebraParams) -> Self {
        Self::from_coords([Rat::zero(), Rat::zero(), Rat::zero(), rat_int(1)], params)
    }

    pub fn from_coords(c: [Rat; 4], params: AlgebraParams) -> Self {
        let [alpha, beta, gamma, delta] = c;
        Quaternion {
            alpha,
            beta,
            gamma,
            delta,
            params,
        }
    }

    pub fn scalar(r: Rat, params: AlgebraParams) -> Self {
        Self::from_coords([r, Rat::zero(), Rat::zero(), Rat::zero()], params)
    }

    pub fn params(&self) -> &AlgebraParams {
        &self.params
    }

    pub fn coords(&self) -> [&Rat; 4] {
        [&self.alpha, &self.beta, &self.gamma, &self.delta]
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.is_zero() && self.beta.is_zero() && self.gamma.is_zero() && self.delta.is_zero()
    }

    /// conj(z) = alpha - beta*i - gamma*j - delta*ij.
    pub fn conj(&self) -> Quaternion {
        Quaternion {
            alpha: self.alpha.clone(),
            beta: -&self.beta,
            gamma: -&self.gamma,
            delta: -&self.delta,
            params: self.params.clone(),
        }
    }

    /// Reduced trace z + conj(z) = 2*alpha.
    pub fn trd(&self) -> Rat {
        &self.alpha + &self.alpha
    }

    /// Reduced norm z*conj(z) = alpha^2 - a*beta^2 - b*gamma^2 + a*b*delta^2.
    pub fn nrd(&self) -> Rat {
        let a = &self.params.a;
        let b = &self.params.b;
        &self.alpha * &self.alpha - a * (&self.beta * &self.beta)
            - b * (&self.gamma * &self.gamma)
            + a * b * (&self.delta * &self.delta)
    }

    /// Multiplicative inverse conj(z)/nrd(z); `None` for z = 0.
    pub fn inverse(&self) -> Option<Quaternion> {
        let n = self.nrd();
        if n.is_zero() {
            return None;
        }
        Some(self.conj().scale(&(rat_int(1) / n)))
    }

    pub fn scale(&self, r: &Rat) -> Quaternion {
        Quaternion {
            alpha: &self.alpha * r,
            beta: &self.beta * r,
            gamma: &self.gamma * r,
            delta: &self.delta * r,
            params: self.params.clone(),
        }
    }

    fn assert_same_params(&self, other: &Quaternion) {
        assert_eq!(
            self.params, other.params,
            "arithmetic between elements of different quaternion algebras"
        );
    }
}

impl Add for &Quaternion {
    type Output = Quaternion;

    fn add(self, other: &Quaternion) -> Quaternion {
        self.assert_same_params(other);
        Quaternion {
            alpha: &self.alpha + &other.alpha,
            beta: &self.beta + &other.beta,
            gamma: &self.gamma + &other.gamma,
            delta: &self.delta + &other.delta,
            params: self.params.clone(),
        }
    }
}

impl Sub for &Quaternion {
    type Output = Quaternion;

    fn sub(self, other: &Quaternion) -> Quaternion {
        self.assert_same_params(other);
        Quaternion {
            alpha: &self.alpha - &other.alpha,
            beta: &self.beta - &other.beta,
            gamma: &self.gamma - &other.gamma,
            delta: &self.delta - &other.delta,
            params: self.params.clone(),
        }
    }
}

impl Neg for &Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        Quaternion {
            alpha: -&self.alpha,
            beta: -&self.beta,
            gamma: -&self.gamma,
            delta: -&self.delta,
            params: self.params.clone(),
        }
    }
}

impl Mul for &Quaternion {
    type Output = Quaternion;

    /// Product under i^2 = a, j^2 = b, ji = -ij. Writing k = ij:
    ///
    /// ```text
    /// ik = aj    ki = -aj    jk = -bi    kj = bi    k^2 = -ab
    /// ```
    fn mul(self, other: &Quaternion) -> Quaternion {
        self.assert_same_params(other);
        let a = &self.params.a;
        let b = &self.params.b;
        let (a1, b1, c1, d1) = (&self.alpha, &self.beta, &self.gamma, &self.delta);
        let (a2, b2, c2, d2) = (&other.alpha, &other.beta, &other.gamma, &other.delta);

        let alpha = a1 * a2 + a * (b1 * b2) + b * (c1 * c2) - a * b * (d1 * d2);
        let beta = a1 * b2 + b1 * a2 - b * (c1 * d2) + b * (d1 * c2);
        let gamma = a1 * c2 + c1 * a2 + a * (b1 * d2) - a * (d1 * b2);
        let delta = a1 * d2 + d1 * a2 + b1 * c2 - c1 * b2;

        Quaternion {
            alpha,
            beta,
            gamma,
            delta,
            params: self.params.clone(),
        }
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} + {}*i + {}*j + {}*ij",
            self.alpha, self.beta, self.gamma, self.delta
        )
    }
}

// JSON form: { "a": "num/den", "b": "num/den", "coords": ["..", "..", "..", ".."] }

#[derive(Serialize, Deserialize)]
struct QuaternionRepr {
    a: String,
    b: String,
    coords: [String; 4],
}

impl Serialize for Quaternion {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        QuaternionRepr {
            a: rat_to_string(&self.params.a),
            b: rat_to_string(&self.params.b),
            coords: [
                rat_to_string(&self.alpha),
                rat_to_string(&self.beta),
                rat_to_string(&self.gamma),
                rat_to_string(&self.delta),
            ],
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Quaternion {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = QuaternionRepr::deserialize(deserializer)?;
        let conv = |s: &str| rat_from_string(s).map_err(|e| D::Error::custom(e.to_string()));
        let params = AlgebraParams::new(conv(&repr.a)?, conv(&repr.b)?)
            .map_err(|e| D::Error::custom(e.to_string()))?;
        Ok(Quaternion::from_coords(
            [
                conv(&repr.coords[0])?,
                conv(&repr.coords[1])?,
                conv(&repr.coords[2])?,
                conv(&repr.coords[3])?,
            ],
            params,
        ))
    }
}
