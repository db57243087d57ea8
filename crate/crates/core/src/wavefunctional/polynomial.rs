use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// `coeff · |p̄|^pow_pbar · a^pow_a · d^pow_d` with `a = Ã(-p̄)` and `d = δ(2p̄)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monomial {
    #[serde(serialize_with = "ser_coeff", deserialize_with = "de_coeff")]
    pub coeff: BigInt,
    pub pow_a: u32,
    pub pow_d: u32,
    pub pow_pbar: u32,
}

impl Monomial {
    pub fn new(coeff: impl Into<BigInt>, pow_a: u32, pow_d: u32, pow_pbar: u32) -> Self {
        Self {
            coeff: coeff.into(),
            pow_a,
            pow_d,
            pow_pbar,
        }
    }
}

// Coefficients go out as JSON integers while they fit in i64 and as decimal
// strings beyond that.
fn ser_coeff<S: Serializer>(c: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    match c.to_i64() {
        Some(v) => s.serialize_i64(v),
        None => s.serialize_str(&c.to_string()),
    }
}

fn de_coeff<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigInt, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(i64),
        Text(String),
    }
    match Repr::deserialize(d)? {
        Repr::Int(v) => Ok(BigInt::from(v)),
        Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
    }
}

/// Polynomial prefactor `Q_n` of the `n`-photon wavefunctional
/// `Ψ_n = Q_n · Ψ₀` in the formal variables `a = Ã(-p̄)`, `d = δ(2p̄)` and `|p̄|`.
///
/// Terms are kept in canonical order (descending `pow_a`, then `pow_d`) with like
/// terms merged and zero terms removed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPolynomial", into = "RawPolynomial")]
pub struct PhotonPolynomial {
    photon_count: u32,
    terms: Vec<Monomial>,
}

#[derive(Serialize, Deserialize)]
struct RawPolynomial {
    n: u32,
    terms: Vec<Monomial>,
}

impl TryFrom<RawPolynomial> for PhotonPolynomial {
    type Error = Error;

    fn try_from(raw: RawPolynomial) -> Result<Self> {
        PhotonPolynomial::new(raw.n, raw.terms)
    }
}

impl From<PhotonPolynomial> for RawPolynomial {
    fn from(p: PhotonPolynomial) -> Self {
        RawPolynomial {
            n: p.photon_count,
            terms: p.terms,
        }
    }
}

impl PhotonPolynomial {
    /// Validates homogeneity: `pow_a + 2 pow_d = n` and `pow_pbar + pow_d = n`
    /// for every term.
    pub fn new(photon_count: u32, terms: Vec<Monomial>) -> Result<Self> {
        let poly = Self::canonical(photon_count, terms);
        if !poly.is_homogeneous() {
            return Err(Error::InvalidArgument(format!(
                "terms are not homogeneous of photon number {photon_count}"
            )));
        }
        Ok(poly)
    }

    /// `Q_0 = 1`.
    pub fn vacuum() -> Self {
        Self {
            photon_count: 0,
            terms: vec![Monomial::new(1, 0, 0, 0)],
        }
    }

    fn canonical(photon_count: u32, terms: Vec<Monomial>) -> Self {
        let mut merged: BTreeMap<(u32, u32, u32), BigInt> = BTreeMap::new();
        for t in terms {
            *merged
                .entry((t.pow_a, t.pow_d, t.pow_pbar))
                .or_insert_with(BigInt::zero) += t.coeff;
        }
        let terms = merged
            .into_iter()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|((pow_a, pow_d, pow_pbar), coeff)| Monomial {
                coeff,
                pow_a,
                pow_d,
                pow_pbar,
            })
            .collect();
        Self {
            photon_count,
            terms,
        }
    }

    pub fn photon_count(&self) -> u32 {
        self.photon_count
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    /// Coefficient of `a^pow_a d^pow_d` (zero when absent).
    pub fn coefficient(&self, pow_a: u32, pow_d: u32) -> BigInt {
        self.terms
            .iter()
            .filter(|t| t.pow_a == pow_a && t.pow_d == pow_d)
            .map(|t| t.coeff.clone())
            .sum()
    }

    pub fn is_homogeneous(&self) -> bool {
        let n = self.photon_count;
        self.terms
            .iter()
            .all(|t| t.pow_a + 2 * t.pow_d == n && t.pow_pbar + t.pow_d == n)
    }

    pub fn is_contact_free(&self) -> bool {
        self.terms.iter().all(|t| t.pow_d == 0)
    }

    /// One more photon: `Q_n = 2|p̄| a Q_{n-1} - d ∂_a Q_{n-1}`.
    ///
    /// The first term collects `|p̄| Ã(-p̄)` from the operator and the same again from
    /// differentiating the vacuum exponent; the second is the derivative hitting the
    /// prefactor, with `∂Ã(-p̄)/∂Ã(p̄) = δ(2p̄)`.
    pub fn apply_creation(&self) -> Self {
        let mut out = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            out.push(Monomial {
                coeff: &t.coeff * 2,
                pow_a: t.pow_a + 1,
                pow_d: t.pow_d,
                pow_pbar: t.pow_pbar + 1,
            });
            if t.pow_a > 0 {
                out.push(Monomial {
                    coeff: -(&t.coeff * t.pow_a),
                    pow_a: t.pow_a - 1,
                    pow_d: t.pow_d + 1,
                    pow_pbar: t.pow_pbar,
                });
            }
        }
        Self::canonical(self.photon_count + 1, out)
    }

    /// Removes every term carrying `δ(2p̄)`, which vanishes for `p̄ ≠ 0`.
    pub fn drop_contact_terms(&self) -> Self {
        Self {
            photon_count: self.photon_count,
            terms: self
                .terms
                .iter()
                .filter(|t| t.pow_d == 0)
                .cloned()
                .collect(),
        }
    }

    /// Numeric value at `a` for a contact-free polynomial.
    pub fn evaluate(&self, a: Complex64, pbar: f64) -> Result<Complex64> {
        if !self.is_contact_free() {
            return Err(Error::ContactTerms);
        }
        Ok(self
            .terms
            .iter()
            .map(|t| {
                let c = t.coeff.to_f64().unwrap_or(f64::INFINITY);
                a.powu(t.pow_a) * (c * pbar.powi(t.pow_pbar as i32))
            })
            .sum())
    }

    /// Every term written out, e.g. `4|p|^2a^2 - 2|p|d`.
    pub fn expanded(&self) -> String {
        join_terms(self.terms.iter().map(|t| (t.coeff.clone(), body(t))))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("polynomial serializes")
    }

    pub fn from_json(doc: &serde_json::Value) -> Result<Self> {
        Ok(serde_json::from_value(doc.clone())?)
    }
}

/// `Q_n` by iterating the creation step from the vacuum.
pub fn nphoton_polynomial(n: u32) -> PhotonPolynomial {
    (0..n).fold(PhotonPolynomial::vacuum(), |q, _| q.apply_creation())
}

fn power(symbol: &str, exp: u32) -> String {
    match exp {
        0 => String::new(),
        1 => symbol.to_string(),
        e => format!("{symbol}^{e}"),
    }
}

fn body(t: &Monomial) -> String {
    format!(
        "{}{}{}",
        power("|p|", t.pow_pbar),
        power("a", t.pow_a),
        power("d", t.pow_d)
    )
}

fn signed_term(coeff: &BigInt, body: &str) -> String {
    if body.is_empty() {
        coeff.to_string()
    } else if coeff.is_one() {
        body.to_string()
    } else if *coeff == -BigInt::one() {
        format!("-{body}")
    } else {
        format!("{coeff}{body}")
    }
}

fn join_terms(terms: impl Iterator<Item = (BigInt, String)>) -> String {
    let mut out = String::new();
    for (i, (c, b)) in terms.enumerate() {
        if i == 0 {
            out.push_str(&signed_term(&c, &b));
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
            out.push_str(&signed_term(&c.abs(), &b));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Canonical text: the integer content and the common `|p|` power are pulled in
/// front of a parenthesized remainder, e.g. `2|p|(2|p|a^2 - d)`.
impl fmt::Display for PhotonPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.len() <= 1 {
            return f.write_str(&self.expanded());
        }
        let g = self
            .terms
            .iter()
            .fold(BigInt::zero(), |g, t| g.gcd(&t.coeff));
        let m = self.terms.iter().map(|t| t.pow_pbar).min().unwrap_or(0);
        let inner = join_terms(self.terms.iter().map(|t| {
            let reduced = Monomial {
                coeff: &t.coeff / &g,
                pow_pbar: t.pow_pbar - m,
                ..t.clone()
            };
            (reduced.coeff.clone(), body(&reduced))
        }));
        let prefix = power("|p|", m);
        if g.is_one() && prefix.is_empty() {
            f.write_str(&inner)
        } else if g.is_one() {
            write!(f, "{prefix}({inner})")
        } else {
            write!(f, "{g}{prefix}({inner})")
        }
    }
}
