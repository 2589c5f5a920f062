//! Exact-rational certificates for the recursive strategy levels.
//!
//! A rung certificate for target `k + eps` fixes the threat thresholds
//! `d_1..d_n`, the adversary quotas `a_1..a_n`, and the exact Riemann sum
//! `S = sum a_i`. The strategy wins because the adversary cannot fund every
//! quota: `S > 1` while her total flow into vertex 0 is at most 1.
//!
//! Floats only guide the search for `eps` (through the closed-form integral);
//! the certificate itself is the exact rational check `S > 1`.

use crate::rat::Rat;
use num_bigint::{BigInt, BigUint};
use num_traits::One;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CertError {
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("search cap exceeded while choosing {what} (cap {cap})")]
    SearchCapExceeded { what: &'static str, cap: u64 },
    #[error("certificate invalid: {0}")]
    Invalid(String),
}

mod biguint_string {
    use num_bigint::BigUint;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        BigUint::from_str(&s).map_err(D::Error::custom)
    }
}

/// Certificate for one strategy level.
///
/// `k` is the level the child certificate achieves; this level achieves
/// `k + eps`. The base certificate (the trivial `k = 1` strategy) has no
/// child and `eps = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyCert {
    pub format: u32,
    pub k: Rat,
    pub eps: Rat,
    pub n: u64,
    pub d: Vec<Rat>,
    pub aq: Vec<Rat>,
    pub s: Rat,
    pub height: u64,
    #[serde(with = "biguint_string")]
    pub steps: BigUint,
    /// Worst-case tree height for the monotone (marked-leaf) variant; grows
    /// multiplicatively with the recursion, hence arbitrary precision.
    #[serde(with = "biguint_string")]
    pub mono_height: BigUint,
    pub child_hash: Option<String>,
    pub child: Option<Box<StrategyCert>>,
}

impl StrategyCert {
    /// The trivial level: `m(root) = 1` achieves sum 1 on a height-0 tree in
    /// a single move.
    pub fn base() -> Self {
        StrategyCert {
            format: 1,
            k: Rat::one(),
            eps: Rat::zero(),
            n: 0,
            d: Vec::new(),
            aq: Vec::new(),
            s: Rat::zero(),
            height: 0,
            steps: BigUint::from(1u32),
            mono_height: BigUint::from(0u32),
            child_hash: None,
            child: None,
        }
    }

    pub fn is_base(&self) -> bool {
        self.child.is_none()
    }

    /// The sum this level guarantees: `k + eps`.
    pub fn achieved_k(&self) -> Rat {
        &self.k + &self.eps
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// Content hash: this level's fields plus the child's hash (Merkle
    /// style), so a whole ladder hashes in time linear in its size. The JSON
    /// object keys are sorted, making the hash canonical.
    pub fn hash(&self) -> String {
        let summary = serde_json::json!({
            "format": self.format,
            "k": self.k,
            "eps": self.eps,
            "n": self.n,
            "d": self.d,
            "aq": self.aq,
            "s": self.s,
            "height": self.height,
            "steps": self.steps.to_string(),
            "mono_height": self.mono_height.to_string(),
            "child_hash": self.child_hash,
        });
        let mut hasher = Sha256::new();
        hasher.update(summary.to_string());
        hex::encode(hasher.finalize())
    }

    /// Full invariant check, including the exact Eq. (*) and Eq. (**)
    /// identities, for every level of the chain.
    pub fn validate(&self) -> Result<(), CertError> {
        let mut cur = Some(self);
        while let Some(c) = cur {
            c.validate_level()?;
            cur = c.child.as_deref();
        }
        Ok(())
    }

    /// Invariants of this level alone, assuming the child is valid.
    fn validate_level(&self) -> Result<(), CertError> {
        let fail = |msg: String| Err(CertError::Invalid(msg));
        if self.is_base() {
            if self.k != Rat::one() || !self.eps.is_zero() || self.height != 0 {
                return fail("malformed base certificate".into());
            }
            return Ok(());
        }
        let child = self.child.as_ref().unwrap();
        if self.k != child.achieved_k() {
            return fail("rung k does not match child's achieved level".into());
        }
        if self.k < Rat::one() {
            return fail("k must be at least 1".into());
        }
        if !self.eps.is_positive() {
            return fail("eps must be positive".into());
        }
        let n = self.n;
        if n == 0 || self.d.len() != n as usize || self.aq.len() != n as usize {
            return fail("threshold/quota lists must have length n".into());
        }
        let k_eps = self.achieved_k();
        let one_minus_eps = Rat::one() - self.eps.clone();
        // d strictly increasing, within (eps(1+k)/(k+eps), 1], d_n = 1.
        let d_floor = (&self.eps * &(Rat::one() + self.k.clone())).div_exact(&k_eps);
        let mut prev: Option<&Rat> = None;
        for d_i in &self.d {
            if *d_i <= d_floor || *d_i > Rat::one() {
                return fail(format!("threshold {d_i:?} out of range"));
            }
            if let Some(p) = prev {
                if d_i <= p {
                    return fail("thresholds must be strictly increasing".into());
                }
            }
            prev = Some(d_i);
        }
        if self.d[n as usize - 1] != Rat::one() {
            return fail("d_n must be 1".into());
        }
        // Eq. (*): k(1-eps)(1-i/n) = (k+eps)(1-d_i), exactly.
        for i in 1..=n {
            let lhs = &(&self.k * &one_minus_eps) * &(Rat::one() - Rat::new(i as i64, n as i64));
            let rhs = &k_eps * &(Rat::one() - self.d[i as usize - 1].clone());
            if lhs != rhs {
                return fail(format!("Eq. (*) fails at i={i}"));
            }
        }
        // Quotas positive, a_n = (1-eps)/n, Eq. (**) exact:
        // (k+eps - eps/d_i) * a_i = k(1-eps)/n.
        let share = one_minus_eps.div_exact(&Rat::from_int(n));
        if self.aq[n as usize - 1] != share {
            return fail("a_n must be (1-eps)/n".into());
        }
        let rhs = &self.k * &share;
        for i in 1..=n {
            let a_i = &self.aq[i as usize - 1];
            if !a_i.is_positive() {
                return fail(format!("quota a_{i} not positive"));
            }
            let d_i = &self.d[i as usize - 1];
            let lhs = &(k_eps.clone() - self.eps.div_exact(d_i)) * a_i;
            if lhs != rhs {
                return fail(format!("Eq. (**) fails at i={i}"));
            }
        }
        // The winning certificate itself. Cross-multiply against the raw
        // (unreduced) sum to avoid a chain of large gcds.
        let (num, den) = sum_fractions(&fraction_terms(&self.aq));
        if num * self.s.as_big().denom() != self.s.as_big().numer() * den {
            return fail("recorded S does not equal sum of quotas".into());
        }
        if self.s <= Rat::one() {
            return fail("S must exceed 1".into());
        }
        if self.height != self.n + 1 + child.height {
            return fail("height recurrence violated".into());
        }
        let expect_steps =
            BigUint::from(2u32) + BigUint::from(self.n + 1) * (&child.steps + BigUint::from(1u32));
        if self.steps != expect_steps {
            return fail("step bound recurrence violated".into());
        }
        if let Some(h) = &self.child_hash {
            if *h != child.hash() {
                return fail("child hash mismatch".into());
            }
        }
        Ok(())
    }
}

/// `d_i` from Eq. (*): `d_i = 1 - k(1-eps)(1-i/n)/(k+eps)`, exact.
pub fn threshold_d(k: &Rat, eps: &Rat, n: u64, i: u64) -> Result<Rat, CertError> {
    check_params(k, eps, n, i)?;
    let frac = Rat::one() - Rat::new(i as i64, n as i64);
    let num = &(k * &(Rat::one() - eps.clone())) * &frac;
    Ok(Rat::one() - num.div_exact(&(k + eps)))
}

/// `a_i` from Eq. (**): `a_i = k(1-eps)d_i / (n(d_i(k+eps) - eps))`, exact.
pub fn subtree_quota_a(k: &Rat, eps: &Rat, n: u64, i: u64) -> Result<Rat, CertError> {
    let d_i = threshold_d(k, eps, n, i)?;
    let denom = &Rat::from_int(n) * &(&d_i * &(k + eps) - eps.clone());
    if !denom.is_positive() {
        return Err(CertError::Domain(format!("quota denominator not positive at i={i}")));
    }
    Ok((&(k * &(Rat::one() - eps.clone())) * &d_i).div_exact(&denom))
}

fn check_params(k: &Rat, eps: &Rat, n: u64, i: u64) -> Result<(), CertError> {
    if *k < Rat::one() {
        return Err(CertError::Domain("k must be at least 1".into()));
    }
    if !eps.is_positive() || *eps >= Rat::one() {
        return Err(CertError::Domain("eps must lie in (0, 1)".into()));
    }
    if n == 0 || i == 0 || i > n {
        return Err(CertError::Domain(format!("index i={i} outside 1..={n}")));
    }
    Ok(())
}

/// `d(u) = 1 - k(1-eps)(1-u)/(k+eps)` in double precision.
pub fn d_of_u(k: f64, eps: f64, u: f64) -> f64 {
    1.0 - k * (1.0 - eps) * (1.0 - u) / (k + eps)
}

/// The Riemann integrand `k(1-eps) d(u) / ((k+eps) d(u) - eps)`.
pub fn integrand(k: f64, eps: f64, u: f64) -> f64 {
    let d = d_of_u(k, eps, u);
    k * (1.0 - eps) * d / ((k + eps) * d - eps)
}

/// Closed form of the integral over [0,1]:
/// `(k(1-eps) + eps ln(1/eps)) / (k+eps)`. The log is natural.
pub fn integral_i(k: f64, eps: f64) -> Result<f64, CertError> {
    if !(0.0 < eps && eps < 1.0) {
        return Err(CertError::Domain("eps must lie in (0, 1)".into()));
    }
    if k < 1.0 {
        return Err(CertError::Domain("k must be at least 1".into()));
    }
    Ok((k * (1.0 - eps) + eps * (1.0 / eps).ln()) / (k + eps))
}

fn fraction_terms(values: &[Rat]) -> Vec<(BigInt, BigInt)> {
    values
        .iter()
        .map(|v| (v.as_big().numer().clone(), v.as_big().denom().clone()))
        .collect()
}

/// Divide-and-conquer sum of fractions without intermediate reduction. The
/// denominators here share no useful structure, so stepwise reduced addition
/// costs a large gcd per term; the raw balanced sum avoids all of them.
fn sum_fractions(terms: &[(BigInt, BigInt)]) -> (BigInt, BigInt) {
    match terms {
        [] => (BigInt::from(0), BigInt::one()),
        [(n, d)] => (n.clone(), d.clone()),
        _ => {
            let (left, right) = terms.split_at(terms.len() / 2);
            let (n1, d1) = sum_fractions(left);
            let (n2, d2) = sum_fractions(right);
            (n1 * &d2 + n2 * &d1, d1 * d2)
        }
    }
}

fn quota_terms(k: &Rat, eps: &Rat, n: u64) -> Result<Vec<(BigInt, BigInt)>, CertError> {
    let mut terms = Vec::with_capacity(n as usize);
    for i in 1..=n {
        let a_i = subtree_quota_a(k, eps, n, i)?;
        terms.push((a_i.as_big().numer().clone(), a_i.as_big().denom().clone()));
    }
    Ok(terms)
}

/// Exact right-endpoint Riemann sum `S = sum of a_i`.
pub fn riemann_s(k: &Rat, eps: &Rat, n: u64) -> Result<Rat, CertError> {
    let (num, den) = sum_fractions(&quota_terms(k, eps, n)?);
    Ok(Rat::try_from_big(num_rational::BigRational::new(num, den))
        .expect("quota sum is non-negative"))
}

/// Exact test `riemann_s > 1` without the final reduction.
fn riemann_exceeds_one(k: &Rat, eps: &Rat, n: u64) -> Result<bool, CertError> {
    let (num, den) = sum_fractions(&quota_terms(k, eps, n)?);
    Ok(num > den)
}

const EPS_SEARCH_CAP: u64 = 32;
const N_SEARCH_CAP: u64 = 1 << 20;

/// Largest grid value `eps = 2^-j` (j >= 2) for which the closed-form
/// integral clears `1` with a guard margin of `2^-(j+3)`. The float test is a
/// guide; the exact `S > 1` check in [`build_cert`] is the real certificate.
pub fn choose_eps(k: &Rat) -> Result<Rat, CertError> {
    let kf = k.to_f64();
    for j in 2..EPS_SEARCH_CAP {
        let eps = 0.5f64.powi(j as i32);
        let guard = 0.5f64.powi(j as i32 + 3);
        if integral_i(kf, eps)? > 1.0 + guard {
            return Ok(Rat::new(1, 1i64 << j));
        }
    }
    Err(CertError::SearchCapExceeded { what: "eps", cap: EPS_SEARCH_CAP })
}

/// Minimal `n` (doubling then bisection) with exact `riemann_s > 1`.
pub fn choose_n(k: &Rat, eps: &Rat) -> Result<u64, CertError> {
    let wins = |n: u64| -> Result<bool, CertError> { riemann_exceeds_one(k, eps, n) };
    let mut hi = 1u64;
    while !wins(hi)? {
        hi *= 2;
        if hi > N_SEARCH_CAP {
            return Err(CertError::SearchCapExceeded { what: "n", cap: N_SEARCH_CAP });
        }
    }
    let mut lo = hi / 2; // S(lo) <= 1 (or lo == 0)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if wins(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Builds the next rung above `child`: picks `eps` and `n`, materializes the
/// exact thresholds and quotas, and derives the height and step bounds.
///
/// The child is assumed valid (ladder construction maintains this); only the
/// new rung is checked, keeping ladder construction linear in its length.
pub fn build_cert(child: StrategyCert) -> Result<StrategyCert, CertError> {
    let k = child.achieved_k();
    let mut eps = choose_eps(&k)?;
    // If the guarded float search picked an eps whose exact Riemann sums
    // cannot clear 1 within the n cap, fall back to smaller grid values.
    let n = loop {
        match choose_n(&k, &eps) {
            Ok(n) => break n,
            Err(CertError::SearchCapExceeded { .. }) => {
                eps = eps.div_exact(&Rat::from_int(2));
                if eps < Rat::new(1, 1i64 << (EPS_SEARCH_CAP - 1)) {
                    return Err(CertError::SearchCapExceeded { what: "eps", cap: EPS_SEARCH_CAP });
                }
            }
            Err(e) => return Err(e),
        }
    };
    let mut d = Vec::with_capacity(n as usize);
    let mut aq = Vec::with_capacity(n as usize);
    for i in 1..=n {
        d.push(threshold_d(&k, &eps, n, i)?);
        aq.push(subtree_quota_a(&k, &eps, n, i)?);
    }
    let s = riemann_s(&k, &eps, n)?;
    let height = n + 1 + child.height;
    let steps =
        BigUint::from(2u32) + BigUint::from(n + 1) * (&child.steps + BigUint::from(1u32));
    let mono_height = BigUint::from(n + 1) * (&child.mono_height + BigUint::from(2u32))
        + &child.mono_height
        + BigUint::from(2u32);
    let cert = StrategyCert {
        format: 1,
        k,
        eps,
        n,
        d,
        aq,
        s,
        height,
        steps,
        mono_height,
        child_hash: Some(child.hash()),
        child: Some(Box::new(child)),
    };
    cert.validate_level()?;
    Ok(cert)
}

/// The ladder of achievable targets `k_1 = 1, k_{j+1} = k_j + eps_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub top: StrategyCert,
}

const LADDER_RUNG_CAP: usize = 1024;

impl Ladder {
    /// Rungs from the base upward.
    pub fn rungs(&self) -> Vec<&StrategyCert> {
        let mut chain = Vec::new();
        let mut cur = Some(&self.top);
        while let Some(c) = cur {
            chain.push(c);
            cur = c.child.as_deref();
        }
        chain.reverse();
        chain
    }

    pub fn to_json(&self) -> String {
        self.top.to_json()
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        Ok(Ladder { top: StrategyCert::from_json(s)? })
    }
}

/// Builds rungs until the achieved level reaches `k_target`.
pub fn ladder(k_target: &Rat) -> Result<Ladder, CertError> {
    if *k_target < Rat::one() {
        return Err(CertError::Domain("k target must be at least 1".into()));
    }
    let mut cert = StrategyCert::base();
    let mut rungs = 1usize;
    while cert.achieved_k() < *k_target {
        cert = build_cert(cert)?;
        rungs += 1;
        if rungs > LADDER_RUNG_CAP {
            return Err(CertError::SearchCapExceeded {
                what: "ladder rungs",
                cap: LADDER_RUNG_CAP as u64,
            });
        }
    }
    Ok(Ladder { top: cert })
}
