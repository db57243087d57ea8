//! Two-photon states `a†(p₂) a†(p₁)|0⟩` built symbolically.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::polynomial::PhotonPolynomial;
use crate::error::{Error, Result};
use crate::lattice::GridSpec;

/// Formal symbols of a two-momentum expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Symbol {
    /// `|p₁|`
    P1 = 0,
    /// `|p₂|`
    P2 = 1,
    /// `A₁ = Ã(-p₁)`
    A1 = 2,
    /// `A₂ = Ã(-p₂)`
    A2 = 3,
    /// `A₁*`
    A1Conj = 4,
    /// `A₂*`
    A2Conj = 5,
    /// `δ₁₂ = δ(p₁ + p₂)`
    Delta = 6,
}

const SYMBOLS: usize = 7;

type Powers = [u32; SYMBOLS];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiMonomial {
    pub coeff: BigInt,
    pub powers: Powers,
}

impl MultiMonomial {
    pub fn power(&self, s: Symbol) -> u32 {
        self.powers[s as usize]
    }
}

/// Polynomial with exact integer coefficients over the [`Symbol`]s.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiModeExpression {
    terms: Vec<MultiMonomial>,
}

impl MultiModeExpression {
    pub fn from_terms(terms: impl IntoIterator<Item = (BigInt, Powers)>) -> Self {
        let mut merged: BTreeMap<Powers, BigInt> = BTreeMap::new();
        for (c, p) in terms {
            *merged.entry(p).or_insert_with(BigInt::zero) += c;
        }
        let terms = merged
            .into_iter()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(powers, coeff)| MultiMonomial { coeff, powers })
            .collect();
        Self { terms }
    }

    pub fn one() -> Self {
        Self::from_terms([(BigInt::one(), [0; SYMBOLS])])
    }

    /// Embeds a single-momentum polynomial: `a → A₁`, `d → δ₁₂`, `|p̄| → |p₁|`.
    pub fn from_photon_polynomial(poly: &PhotonPolynomial) -> Self {
        Self::from_terms(poly.terms().iter().map(|t| {
            let mut p = [0; SYMBOLS];
            p[Symbol::P1 as usize] = t.pow_pbar;
            p[Symbol::A1 as usize] = t.pow_a;
            p[Symbol::Delta as usize] = t.pow_d;
            (t.coeff.clone(), p)
        }))
    }

    pub fn terms(&self) -> &[MultiMonomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().flat_map(|a| {
            other.terms.iter().map(move |b| {
                let mut p = a.powers;
                for (x, y) in p.iter_mut().zip(b.powers) {
                    *x += y;
                }
                (&a.coeff * &b.coeff, p)
            })
        }))
    }

    /// Complex conjugation: swaps `A_i ↔ A_i*`; `|p_i|` and `δ₁₂` are real.
    pub fn conjugate(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|t| {
            let mut p = t.powers;
            p.swap(Symbol::A1 as usize, Symbol::A1Conj as usize);
            p.swap(Symbol::A2 as usize, Symbol::A2Conj as usize);
            (t.coeff.clone(), p)
        }))
    }

    /// `|expr|² = expr · expr*`.
    pub fn modulus_squared(&self) -> Self {
        self.mul(&self.conjugate())
    }

    /// Acts with `a†(p₂) = |p₂| Ã(-p₂) - δ/δÃ(p₂)` on `expr · Ψ₀`, returning the new
    /// prefactor. Differentiating `Ã(-p₁)` gives `δ(p₁ + p₂)`. The expression must not
    /// already depend on `A₂`, whose self-derivative is a coincident contact term
    /// that this representation does not carry.
    pub fn create_second_photon(&self) -> Result<Self> {
        if self.terms.iter().any(|t| {
            t.power(Symbol::A2) > 0 || t.power(Symbol::A2Conj) > 0 || t.power(Symbol::A1Conj) > 0
        }) {
            return Err(Error::InvalidArgument(
                "second creation needs a prefactor in A1 only".into(),
            ));
        }
        let mut out = Vec::new();
        for t in &self.terms {
            let mut p = t.powers;
            p[Symbol::P2 as usize] += 1;
            p[Symbol::A2 as usize] += 1;
            out.push((&t.coeff * 2, p));
            let a1 = t.power(Symbol::A1);
            if a1 > 0 {
                let mut p = t.powers;
                p[Symbol::A1 as usize] -= 1;
                p[Symbol::Delta as usize] += 1;
                out.push((-(&t.coeff * a1), p));
            }
        }
        Ok(Self::from_terms(out))
    }

    pub fn max_delta_order(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.power(Symbol::Delta))
            .max()
            .unwrap_or(0)
    }

    /// Terms carrying exactly `order` powers of `δ₁₂`.
    pub fn delta_order_part(&self, order: u32) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|t| t.power(Symbol::Delta) == order)
                .cloned()
                .collect(),
        }
    }

    /// Drops all `δ₁₂` terms (inert when `p₁ ≠ -p₂`).
    pub fn drop_delta(&self) -> Self {
        self.delta_order_part(0)
    }

    /// `p₂ → p₁`: `|p₂| → |p₁|`, `A₂ → A₁`.
    pub fn coincident(&self) -> Self {
        self.substitute(&[
            (Symbol::P2, Symbol::P1),
            (Symbol::A2, Symbol::A1),
            (Symbol::A2Conj, Symbol::A1Conj),
        ])
    }

    /// `p₂ → -p₁`: `|p₂| → |p₁|`, and Hermitian symmetry gives `A₂ = Ã(p₁) = A₁*`.
    pub fn counter_propagating(&self) -> Self {
        self.substitute(&[
            (Symbol::P2, Symbol::P1),
            (Symbol::A2, Symbol::A1Conj),
            (Symbol::A2Conj, Symbol::A1),
        ])
    }

    fn substitute(&self, map: &[(Symbol, Symbol)]) -> Self {
        Self::from_terms(self.terms.iter().map(|t| {
            let mut p = t.powers;
            for &(from, to) in map {
                let e = std::mem::take(&mut p[from as usize]);
                p[to as usize] += e;
            }
            (t.coeff.clone(), p)
        }))
    }
}

fn factor(out: &mut String, name: &str, exp: u32) {
    match exp {
        0 => {}
        1 => out.push_str(name),
        e => out.push_str(&format!("{name}^{e}")),
    }
}

/// Terms with matching `A_i`, `A_i*` powers are shown through `D_i = |A_i|²`.
impl fmt::Display for MultiModeExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            let mut body = String::new();
            factor(&mut body, "|p1|", t.power(Symbol::P1));
            factor(&mut body, "|p2|", t.power(Symbol::P2));
            for (a, c, d, an, cn) in [
                (Symbol::A1, Symbol::A1Conj, "D1", "A1", "A1*"),
                (Symbol::A2, Symbol::A2Conj, "D2", "A2", "A2*"),
            ] {
                let (pa, pc) = (t.power(a), t.power(c));
                let shared = pa.min(pc);
                factor(&mut body, d, shared);
                factor(&mut body, an, pa - shared);
                factor(&mut body, cn, pc - shared);
            }
            factor(&mut body, "δ12", t.power(Symbol::Delta));
            let c = if i == 0 {
                t.coeff.clone()
            } else {
                t.coeff.abs()
            };
            if i > 0 {
                f.write_str(if t.coeff.is_negative() { " - " } else { " + " })?;
            }
            if body.is_empty() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                f.write_str(&body)?;
            } else if c == -BigInt::one() {
                write!(f, "-{body}")?;
            } else {
                write!(f, "{c}{body}")?;
            }
        }
        Ok(())
    }
}

/// How two photon momenta relate on the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentumCase {
    /// `p₁ ≠ ±p₂`: two independent spectral peaks.
    Distinct,
    /// `p₁ = p₂`: the two-photon single-mode state.
    Coincident,
    /// `p₁ = -p₂`.
    CounterPropagating,
}

impl MomentumCase {
    pub fn classify(k1: i64, k2: i64) -> Self {
        if k1 == k2 {
            MomentumCase::Coincident
        } else if k1 == -k2 {
            MomentumCase::CounterPropagating
        } else {
            MomentumCase::Distinct
        }
    }
}

#[derive(Clone, Debug)]
pub struct TwoPhotonExpression {
    pub k1: i64,
    pub k2: i64,
    pub case: MomentumCase,
    /// Prefactor of `Ψ₀` in `a†(p₂) a†(p₁) Ψ₀`.
    pub amplitude: MultiModeExpression,
    /// `|amplitude|²` with independent momenta, before any case reduction.
    pub density: MultiModeExpression,
}

impl TwoPhotonExpression {
    /// Density specialised to the momentum case:
    /// - distinct: delta terms are inert and dropped;
    /// - coincident: `p₂ → p₁`, delta terms dropped;
    /// - counter-propagating: `p₂ → -p₁`, keeping only the highest-order delta part.
    pub fn reduced(&self) -> MultiModeExpression {
        match self.case {
            MomentumCase::Distinct => self.density.drop_delta(),
            MomentumCase::Coincident => self.density.coincident().drop_delta(),
            MomentumCase::CounterPropagating => {
                let on_shell = self.density.counter_propagating();
                on_shell.delta_order_part(on_shell.max_delta_order())
            }
        }
    }
}

/// Builds `|a†(p₂) a†(p₁) Ψ₀|²` symbolically for lattice modes `k1`, `k2`.
pub fn two_photon_expression(grid: &GridSpec, k1: i64, k2: i64) -> Result<TwoPhotonExpression> {
    grid.check_photon_mode(k1)?;
    grid.check_photon_mode(k2)?;
    let first =
        MultiModeExpression::from_photon_polynomial(&PhotonPolynomial::vacuum().apply_creation());
    let amplitude = first.create_second_photon()?;
    let density = amplitude.modulus_squared();
    Ok(TwoPhotonExpression {
        k1,
        k2,
        case: MomentumCase::classify(k1, k2),
        amplitude,
        density,
    })
}
