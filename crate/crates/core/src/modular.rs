//! Arithmetic substrate: integers mod l^N, 2x2 matrices, and the quadratic
//! Galois ring backing the nonsplit Cartan model.
//!
//! All residues are stored as canonical least nonnegative representatives and
//! every reduction is eager, so equality is structural.

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("level must be at least 1")]
    LevelZero,
    #[error("{0}^{1} does not fit in 64 bits")]
    ModulusOverflow(u64, u32),
    #[error("element {0} + {1}*T is not a unit of the quadratic ring")]
    NonUnit(u64, u64),
}

/// Deterministic Miller-Rabin, valid for all u64.
fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[inline]
pub fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 * b as u128) % q as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, q: u64) -> u64 {
    ((a as u128 + b as u128) % q as u128) as u64
}

#[inline]
pub fn sub_mod(a: u64, b: u64, q: u64) -> u64 {
    let (a, b) = (a % q, b % q);
    if a >= b {
        a - b
    } else {
        q - b + a
    }
}

pub fn pow_mod(mut base: u64, mut exp: u64, q: u64) -> u64 {
    let mut acc = 1 % q;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, q);
        }
        base = mul_mod(base, base, q);
        exp >>= 1;
    }
    acc
}

/// A prime power l^N: the working level of every group model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Modulus {
    ell: u64,
    level: u32,
    q: u64,
}

impl Modulus {
    pub fn new(ell: u64, level: u32) -> Result<Self, AlgebraError> {
        if !is_prime(ell) {
            return Err(AlgebraError::NotPrime(ell));
        }
        if level == 0 {
            return Err(AlgebraError::LevelZero);
        }
        let mut q: u64 = 1;
        for _ in 0..level {
            q = q
                .checked_mul(ell)
                .ok_or(AlgebraError::ModulusOverflow(ell, level))?;
        }
        Ok(Modulus { ell, level, q })
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// l^N, the ambient ring size.
    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn reduce(&self, x: u64) -> u64 {
        x % self.q
    }

    /// l^k for 0 <= k <= N.
    pub fn ell_pow(&self, k: u32) -> u64 {
        debug_assert!(k <= self.level);
        self.ell.pow(k)
    }

    pub fn is_unit(&self, x: u64) -> bool {
        !x.is_multiple_of(self.ell)
    }

    /// Order of (Z/l^N)^*, as a big integer.
    pub fn units_order(&self) -> BigUint {
        BigUint::from(self.ell).pow(self.level - 1) * BigUint::from(self.ell - 1)
    }

    /// Order of the congruence subgroup 1 + l^k (Z/l^N) inside the units,
    /// i.e. l^(N-k) for k >= 1 and the full unit group for k = 0.
    pub fn coset_subgroup_order(&self, k: u32) -> BigUint {
        if k == 0 {
            self.units_order()
        } else {
            debug_assert!(k <= self.level);
            BigUint::from(self.ell).pow(self.level - k)
        }
    }

    /// Iterator over the units of Z/l^N.
    pub fn units(&self) -> impl Iterator<Item = u64> + '_ {
        (1..self.q).filter(move |x| x % self.ell != 0)
    }
}

/// 2x2 matrix over Z/l^N, entries reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Mat2 {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl Mat2 {
    pub fn new(a: u64, b: u64, c: u64, d: u64, m: &Modulus) -> Self {
        Mat2 {
            a: m.reduce(a),
            b: m.reduce(b),
            c: m.reduce(c),
            d: m.reduce(d),
        }
    }

    pub fn identity() -> Self {
        Mat2 {
            a: 1,
            b: 0,
            c: 0,
            d: 1,
        }
    }

    pub fn mul(&self, rhs: &Mat2, m: &Modulus) -> Mat2 {
        let q = m.q();
        Mat2 {
            a: add_mod(mul_mod(self.a, rhs.a, q), mul_mod(self.b, rhs.c, q), q),
            b: add_mod(mul_mod(self.a, rhs.b, q), mul_mod(self.b, rhs.d, q), q),
            c: add_mod(mul_mod(self.c, rhs.a, q), mul_mod(self.d, rhs.c, q), q),
            d: add_mod(mul_mod(self.c, rhs.b, q), mul_mod(self.d, rhs.d, q), q),
        }
    }

    pub fn det(&self, m: &Modulus) -> u64 {
        let q = m.q();
        sub_mod(mul_mod(self.a, self.d, q), mul_mod(self.b, self.c, q), q)
    }

    /// Determinant together with whether it is a unit (l does not divide it).
    pub fn det_invertible(&self, m: &Modulus) -> (u64, bool) {
        let det = self.det(m);
        (det, m.is_unit(det))
    }

    /// Image of a column vector.
    pub fn apply(&self, p: (u64, u64), m: &Modulus) -> (u64, u64) {
        let q = m.q();
        (
            add_mod(mul_mod(self.a, p.0, q), mul_mod(self.b, p.1, q), q),
            add_mod(mul_mod(self.c, p.0, q), mul_mod(self.d, p.1, q), q),
        )
    }

    pub fn fixes(&self, p: (u64, u64), m: &Modulus) -> bool {
        self.apply(p, m) == (m.reduce(p.0), m.reduce(p.1))
    }

    /// Dense index in [0, q^4), used by the exhaustive set computations.
    pub fn pack(&self, m: &Modulus) -> usize {
        let q = m.q() as usize;
        ((self.a as usize * q + self.b as usize) * q + self.c as usize) * q + self.d as usize
    }

    pub fn unpack(idx: usize, m: &Modulus) -> Mat2 {
        let q = m.q() as usize;
        let d = idx % q;
        let c = (idx / q) % q;
        let b = (idx / (q * q)) % q;
        let a = idx / (q * q * q);
        Mat2 {
            a: a as u64,
            b: b as u64,
            c: c as u64,
            d: d as u64,
        }
    }
}

pub fn mat2_mul(x: &Mat2, y: &Mat2, m: &Modulus) -> Mat2 {
    x.mul(y, m)
}

pub fn mat2_det_invertible(x: &Mat2, m: &Modulus) -> (u64, bool) {
    x.det_invertible(m)
}

/// Element x + y*T of a quadratic ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadElt {
    pub x: u64,
    pub y: u64,
}

/// The ring `W = (Z/l^N)[T]/(T^2 - s*T - t)` with the polynomial irreducible
/// mod l: a free rank-2 module whose unit group is the nonsplit Cartan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadRing {
    modulus: Modulus,
    s: u64,
    t: u64,
}

impl QuadRing {
    /// Deterministic construction: the lexicographically smallest (s, t) in
    /// [0,l)^2 making T^2 - s*T - t irreducible over F_l.
    pub fn build(m: &Modulus) -> QuadRing {
        let ell = m.ell();
        for s in 0..ell {
            for t in 0..ell {
                if quad_irreducible_mod_ell(s, t, ell) {
                    return QuadRing { modulus: *m, s, t };
                }
            }
        }
        unreachable!("irreducible monic quadratics exist over every prime field");
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    /// Coefficients (s, t) of T^2 = s*T + t.
    pub fn poly(&self) -> (u64, u64) {
        (self.s, self.t)
    }

    pub fn elt(&self, x: u64, y: u64) -> QuadElt {
        QuadElt {
            x: self.modulus.reduce(x),
            y: self.modulus.reduce(y),
        }
    }

    pub fn one(&self) -> QuadElt {
        QuadElt { x: 1, y: 0 }
    }

    pub fn mul(&self, u: &QuadElt, v: &QuadElt) -> QuadElt {
        let q = self.modulus.q();
        // (x1 + y1 T)(x2 + y2 T) with T^2 = sT + t
        let xx = mul_mod(u.x, v.x, q);
        let yy = mul_mod(u.y, v.y, q);
        let cross = add_mod(mul_mod(u.x, v.y, q), mul_mod(u.y, v.x, q), q);
        QuadElt {
            x: add_mod(xx, mul_mod(self.t, yy, q), q),
            y: add_mod(cross, mul_mod(self.s, yy, q), q),
        }
    }

    /// Norm to Z/l^N: N(x + yT) = x^2 + s*x*y - t*y^2.
    pub fn norm(&self, w: &QuadElt) -> u64 {
        let q = self.modulus.q();
        let x2 = mul_mod(w.x, w.x, q);
        let sxy = mul_mod(self.s, mul_mod(w.x, w.y, q), q);
        let ty2 = mul_mod(self.t, mul_mod(w.y, w.y, q), q);
        sub_mod(add_mod(x2, sxy, q), ty2, q)
    }

    pub fn is_unit(&self, w: &QuadElt) -> bool {
        self.modulus.is_unit(self.norm(w))
    }

    /// Matrix of multiplication by w in the basis {1, T}. Injective group
    /// homomorphism on units; its determinant is the norm.
    pub fn unit_to_mat(&self, w: &QuadElt) -> Result<Mat2, AlgebraError> {
        if !self.is_unit(w) {
            return Err(AlgebraError::NonUnit(w.x, w.y));
        }
        let q = self.modulus.q();
        Ok(Mat2 {
            a: w.x,
            b: mul_mod(self.t, w.y, q),
            c: w.y,
            d: add_mod(w.x, mul_mod(self.s, w.y, q), q),
        })
    }

    /// Order of the unit group: l^(2N-2) (l^2 - 1).
    pub fn units_order(&self) -> BigUint {
        let ell = BigUint::from(self.modulus.ell());
        ell.pow(2 * self.modulus.level() - 2) * (ell.pow(2) - BigUint::one())
    }
}

pub fn build_quad_ring(m: &Modulus) -> QuadRing {
    QuadRing::build(m)
}

pub fn quad_unit_to_mat(w: &QuadElt, ring: &QuadRing) -> Result<Mat2, AlgebraError> {
    ring.unit_to_mat(w)
}

/// T^2 - s*T - t has no root in F_l.
fn quad_irreducible_mod_ell(s: u64, t: u64, ell: u64) -> bool {
    (0..ell).all(|z| {
        let z2 = mul_mod(z, z, ell);
        let sz = mul_mod(s % ell, z, ell);
        sub_mod(sub_mod(z2, sz, ell), t % ell, ell) != 0
    })
}
