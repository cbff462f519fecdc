//! External addresses: integer sequences `s1 s2 s3 ...` stored as a finite
//! prefix followed by a symbolic tail rule.
//!
//! Addresses are kept in a canonical form. Periodic tails absorb as much of
//! the prefix as possible and are reduced to their minimal period, so two
//! eventually periodic addresses with the same entry stream are structurally
//! equal.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::TWO_PI;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AddressError {
    #[error("entry index must be at least 1")]
    ZeroIndex,
    #[error("entry {index} exceeds the representable horizon")]
    HorizonExceeded { index: usize },
    #[error("streams agree on the first {horizon} entries but are not provably identical")]
    Indeterminate { horizon: usize },
    #[error("invalid tail rule: {0}")]
    InvalidTail(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("address parse error at position {position}: {message}")]
pub struct ParseAddressError {
    pub position: usize,
    pub message: String,
}

/// Rule generating the entries after the prefix.
///
/// For the growing rules the tail entry number `k >= 1` is
/// `sign * rule(k + skip) + offset`; `skip` counts consumed shifts and
/// `offset` accumulated translations.
#[derive(Debug, Clone, PartialEq)]
pub enum TailRule {
    Periodic(Vec<i64>),
    /// `rule(n) = ceil(c * n^p)`.
    PolyGrowth {
        c: f64,
        p: f64,
        sign: i64,
        skip: u64,
        offset: i64,
    },
    /// `rule(n) = floor(F^n(x) / 2pi)` with `F(t) = e^t - 1`.
    Tower {
        x: f64,
        sign: i64,
        skip: u64,
        offset: i64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalAddress {
    prefix: Vec<i64>,
    tail: TailRule,
}

impl ExternalAddress {
    pub fn new(prefix: Vec<i64>, tail: TailRule) -> Result<Self, AddressError> {
        match &tail {
            TailRule::Periodic(block) if block.is_empty() => {
                return Err(AddressError::InvalidTail("empty periodic block".into()))
            }
            TailRule::PolyGrowth { c, p, sign, .. } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(AddressError::InvalidTail(format!("c = {c} must be positive")));
                }
                if !(p.is_finite() && *p >= 0.0) {
                    return Err(AddressError::InvalidTail(format!("p = {p} must be nonnegative")));
                }
                check_sign(*sign)?;
            }
            TailRule::Tower { x, sign, .. } => {
                if !(x.is_finite() && *x > 0.0) {
                    return Err(AddressError::InvalidTail(format!("x = {x} must be positive")));
                }
                check_sign(*sign)?;
            }
            TailRule::Periodic(_) => {}
        }
        let mut s = ExternalAddress { prefix, tail };
        s.canonicalize();
        Ok(s)
    }

    /// Purely periodic address `block block block ...`.
    pub fn periodic(block: &[i64]) -> Self {
        Self::new(Vec::new(), TailRule::Periodic(block.to_vec())).expect("nonempty block")
    }

    pub fn preperiodic(prefix: &[i64], block: &[i64]) -> Self {
        Self::new(prefix.to_vec(), TailRule::Periodic(block.to_vec())).expect("nonempty block")
    }

    pub fn poly(prefix: &[i64], c: f64, p: f64, sign: i64) -> Result<Self, AddressError> {
        Self::new(
            prefix.to_vec(),
            TailRule::PolyGrowth {
                c,
                p,
                sign,
                skip: 0,
                offset: 0,
            },
        )
    }

    pub fn tower(prefix: &[i64], x: f64) -> Result<Self, AddressError> {
        Self::new(
            prefix.to_vec(),
            TailRule::Tower {
                x,
                sign: 1,
                skip: 0,
                offset: 0,
            },
        )
    }

    pub fn prefix(&self) -> &[i64] {
        &self.prefix
    }

    pub fn tail(&self) -> &TailRule {
        &self.tail
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self.tail, TailRule::Periodic(_))
    }

    /// Entry `s_k` as a float; exact while below 2^53 in magnitude.
    pub fn value(&self, k: usize) -> Result<f64, AddressError> {
        if k == 0 {
            return Err(AddressError::ZeroIndex);
        }
        let m = self.prefix.len();
        if k <= m {
            return Ok(self.prefix[k - 1] as f64);
        }
        let j = k - m;
        match &self.tail {
            TailRule::Periodic(block) => Ok(block[(j - 1) % block.len()] as f64),
            TailRule::PolyGrowth {
                c,
                p,
                sign,
                skip,
                offset,
            } => {
                let n = (j as u64 + skip) as f64;
                let v = (c * n.powf(*p)).ceil();
                finite_entry(*sign as f64 * v + *offset as f64, k)
            }
            TailRule::Tower {
                x,
                sign,
                skip,
                offset,
            } => {
                let big = tower_value(*x, j as u64 + skip).ok_or(AddressError::HorizonExceeded { index: k })?;
                finite_entry(*sign as f64 * (big / TWO_PI).floor() + *offset as f64, k)
            }
        }
    }

    /// Entry `s_k`; errors once the entry leaves the 64-bit range.
    pub fn entry(&self, k: usize) -> Result<i64, AddressError> {
        if k == 0 {
            return Err(AddressError::ZeroIndex);
        }
        if k <= self.prefix.len() {
            return Ok(self.prefix[k - 1]);
        }
        if let TailRule::Periodic(block) = &self.tail {
            return Ok(block[(k - self.prefix.len() - 1) % block.len()]);
        }
        let v = self.value(k)?;
        if v.abs() >= 9.2e18 {
            return Err(AddressError::HorizonExceeded { index: k });
        }
        Ok(v as i64)
    }

    /// The model weight `2pi |s_k|`, available beyond the integer range.
    pub fn weight(&self, k: usize) -> Result<f64, AddressError> {
        let w = TWO_PI * self.value(k)?.abs();
        if w.is_finite() {
            Ok(w)
        } else {
            Err(AddressError::HorizonExceeded { index: k })
        }
    }

    /// `ln(2pi |s_k|)`, which for tower tails reaches one level past `weight`.
    pub fn log_weight(&self, k: usize) -> Result<f64, AddressError> {
        match self.weight(k) {
            Ok(w) => Ok(w.ln()),
            Err(AddressError::HorizonExceeded { .. }) => {
                let m = self.prefix.len();
                if let TailRule::Tower { x, skip, .. } = &self.tail {
                    // F^n(x) = e^{F^{n-1}(x)} - 1 and the floor, sign and offset
                    // are below the resolution of F^{n-1}(x) > 700.
                    let n = (k - m) as u64 + skip;
                    if let Some(below) = tower_value(*x, n - 1) {
                        return Ok(below);
                    }
                }
                Err(AddressError::HorizonExceeded { index: k })
            }
            Err(e) => Err(e),
        }
    }

    /// `sigma(s)`: drop the first entry.
    /// Sign of `s_k`, available for tower entries beyond the float range.
    pub fn signum(&self, k: usize) -> Result<i64, AddressError> {
        match self.value(k) {
            Ok(v) => Ok(if v > 0.0 {
                1
            } else if v < 0.0 {
                -1
            } else {
                0
            }),
            Err(AddressError::HorizonExceeded { index }) => match &self.tail {
                TailRule::Tower { sign, .. } => Ok(*sign),
                _ => Err(AddressError::HorizonExceeded { index }),
            },
            Err(e) => Err(e),
        }
    }

    pub fn shift(&self) -> Self {
        let mut s = self.clone();
        if !s.prefix.is_empty() {
            s.prefix.remove(0);
        } else {
            match &mut s.tail {
                TailRule::Periodic(block) => block.rotate_left(1),
                TailRule::PolyGrowth { skip, .. } | TailRule::Tower { skip, .. } => *skip += 1,
            }
        }
        s.canonicalize();
        s
    }

    pub fn shift_by(&self, n: usize) -> Self {
        let mut s = self.clone();
        let dropped = n.min(s.prefix.len());
        s.prefix.drain(..dropped);
        let rest = n - dropped;
        if rest > 0 {
            match &mut s.tail {
                TailRule::Periodic(block) => {
                    let len = block.len();
                    block.rotate_left(rest % len);
                }
                TailRule::PolyGrowth { skip, .. } | TailRule::Tower { skip, .. } => *skip += rest as u64,
            }
        }
        s.canonicalize();
        s
    }

    /// Entrywise translation `(s1+j)(s2+j)...`.
    pub fn translate(&self, j: i64) -> Self {
        let mut s = self.clone();
        for e in &mut s.prefix {
            *e += j;
        }
        match &mut s.tail {
            TailRule::Periodic(block) => block.iter_mut().for_each(|e| *e += j),
            TailRule::PolyGrowth { offset, .. } | TailRule::Tower { offset, .. } => *offset += j,
        }
        s.canonicalize();
        s
    }

    /// Entrywise negation `(-s1)(-s2)...`.
    pub fn negate(&self) -> Self {
        let mut s = self.clone();
        for e in &mut s.prefix {
            *e = -*e;
        }
        match &mut s.tail {
            TailRule::Periodic(block) => block.iter_mut().for_each(|e| *e = -*e),
            TailRule::PolyGrowth { sign, offset, .. } | TailRule::Tower { sign, offset, .. } => {
                *sign = -*sign;
                *offset = -*offset;
            }
        }
        s.canonicalize();
        s
    }

    /// The address with only its first entry shifted by `m`.
    pub fn with_first_shifted(&self, m: i64) -> Self {
        let mut prefix = vec![self.value(1).map(|v| v as i64).unwrap_or(0) + m];
        let rest = self.shift();
        prefix.extend_from_slice(&rest.prefix);
        let mut s = ExternalAddress {
            prefix,
            tail: rest.tail,
        };
        s.canonicalize();
        s
    }

    /// Lexicographic comparison of the entry streams.
    pub fn lex_compare(&self, other: &Self, horizon: usize) -> Result<Ordering, AddressError> {
        for k in 1..=horizon {
            let ord = match (self.entry(k), other.entry(k)) {
                (Ok(a), Ok(b)) => a.cmp(&b),
                _ => {
                    let (a, b) = (self.value(k)?, other.value(k)?);
                    if a == b {
                        return Err(AddressError::Indeterminate { horizon: k });
                    }
                    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
                }
            };
            if ord != Ordering::Equal {
                return Ok(ord);
            }
        }
        if self == other {
            Ok(Ordering::Equal)
        } else {
            Err(AddressError::Indeterminate { horizon })
        }
    }

    /// Number of entries after which the stream is periodic, and the period.
    pub fn periodic_structure(&self) -> Option<(usize, usize)> {
        match &self.tail {
            TailRule::Periodic(block) => Some((self.prefix.len(), block.len())),
            _ => None,
        }
    }

    fn canonicalize(&mut self) {
        if let TailRule::PolyGrowth { c, p, sign, offset, .. } = self.tail {
            if p == 0.0 {
                self.tail = TailRule::Periodic(vec![sign * c.ceil() as i64 + offset]);
            }
        }
        match &mut self.tail {
            TailRule::Periodic(block) => {
                let period = minimal_period(block);
                block.truncate(period);
                while let Some(&last) = self.prefix.last() {
                    if last != *block.last().expect("nonempty block") {
                        break;
                    }
                    self.prefix.pop();
                    block.rotate_right(1);
                }
            }
            _ => {
                while let Some(&last) = self.prefix.last() {
                    let skip = match &self.tail {
                        TailRule::PolyGrowth { skip, .. } | TailRule::Tower { skip, .. } => *skip,
                        TailRule::Periodic(_) => unreachable!(),
                    };
                    if skip == 0 || self.rule_value(skip) != Some(last as f64) {
                        break;
                    }
                    self.prefix.pop();
                    match &mut self.tail {
                        TailRule::PolyGrowth { skip, .. } | TailRule::Tower { skip, .. } => *skip -= 1,
                        TailRule::Periodic(_) => unreachable!(),
                    }
                }
            }
        }
    }

    /// Tail value at absolute rule index `n` (ignoring the prefix).
    fn rule_value(&self, n: u64) -> Option<f64> {
        match &self.tail {
            TailRule::PolyGrowth { c, p, sign, offset, .. } => {
                Some(*sign as f64 * (c * (n as f64).powf(*p)).ceil() + *offset as f64)
            }
            TailRule::Tower { x, sign, offset, .. } => {
                tower_value(*x, n).map(|v| *sign as f64 * (v / TWO_PI).floor() + *offset as f64)
            }
            TailRule::Periodic(_) => None,
        }
    }
}

fn check_sign(sign: i64) -> Result<(), AddressError> {
    if sign == 1 || sign == -1 {
        Ok(())
    } else {
        Err(AddressError::InvalidTail(format!("sign {sign} must be +1 or -1")))
    }
}

fn finite_entry(v: f64, k: usize) -> Result<f64, AddressError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(AddressError::HorizonExceeded { index: k })
    }
}

/// `F^n(x)`, or `None` once it leaves the float range.
fn tower_value(x: f64, n: u64) -> Option<f64> {
    let mut v = x;
    for _ in 0..n {
        v = v.exp_m1();
        if !v.is_finite() {
            return None;
        }
    }
    Some(v)
}

fn minimal_period(block: &[i64]) -> usize {
    let n = block.len();
    (1..=n)
        .find(|&p| n.is_multiple_of(p) && (p..n).all(|i| block[i] == block[i - p]))
        .unwrap_or(n)
}

fn write_sign(f: &mut fmt::Formatter<'_>, sign: i64) -> fmt::Result {
    f.write_str(if sign < 0 { "-" } else { "+" })
}

impl fmt::Display for ExternalAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        let prefix: Vec<String> = self.prefix.iter().map(|e| e.to_string()).collect();
        f.write_str(&prefix.join(","))?;
        f.write_str("|")?;
        match &self.tail {
            TailRule::Periodic(block) => {
                let block: Vec<String> = block.iter().map(|e| e.to_string()).collect();
                write!(f, "per:{}", block.join(","))?;
            }
            TailRule::PolyGrowth {
                c,
                p,
                sign,
                skip,
                offset,
            } => {
                write!(f, "poly:{c:?},{p:?},")?;
                write_sign(f, *sign)?;
                if *skip != 0 || *offset != 0 {
                    write!(f, ",{skip},{offset}")?;
                }
            }
            TailRule::Tower {
                x,
                sign,
                skip,
                offset,
            } => {
                write!(f, "tower:{x:?}")?;
                if *sign != 1 || *skip != 0 || *offset != 0 {
                    f.write_str(",")?;
                    write_sign(f, *sign)?;
                    write!(f, ",{skip},{offset}")?;
                }
            }
        }
        f.write_str("]")
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> ParseAddressError {
        ParseAddressError {
            position: self.pos,
            message: message.into(),
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseAddressError> {
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(self.err(format!("expected '{token}'")))
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    /// Raw text of the next comma-separated field, stopping at `,` `|` `]`.
    fn field(&mut self) -> (usize, &'a str) {
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest.find([',', '|', ']']).unwrap_or(rest.len());
        self.pos += len;
        (start, rest[..len].trim())
    }

    fn int(&mut self) -> Result<i64, ParseAddressError> {
        let (start, text) = self.field();
        text.parse().map_err(|_| ParseAddressError {
            position: start,
            message: format!("expected an integer, found '{text}'"),
        })
    }

    fn real(&mut self) -> Result<f64, ParseAddressError> {
        let (start, text) = self.field();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(ParseAddressError {
                position: start,
                message: format!("expected a finite number, found '{text}'"),
            }),
        }
    }

    fn sign(&mut self) -> Result<i64, ParseAddressError> {
        let (start, text) = self.field();
        match text {
            "+" | "1" | "+1" => Ok(1),
            "-" | "-1" => Ok(-1),
            _ => Err(ParseAddressError {
                position: start,
                message: format!("expected a sign, found '{text}'"),
            }),
        }
    }

    fn int_list(&mut self) -> Result<Vec<i64>, ParseAddressError> {
        let mut out = vec![self.int()?];
        while self.eat(",") {
            out.push(self.int()?);
        }
        Ok(out)
    }
}

impl FromStr for ExternalAddress {
    type Err = ParseAddressError;

    /// Grammar: `[prefix|per:ints]`, `[prefix|poly:c,p,sign[,skip,offset]]`,
    /// `[prefix|tower:x[,sign,skip,offset]]`.
    fn from_str(src: &str) -> Result<Self, Self::Err> {
        let src = src.trim();
        let mut cur = Cursor { src, pos: 0 };
        cur.expect("[")?;
        let prefix = if cur.src[cur.pos..].starts_with('|') {
            Vec::new()
        } else {
            cur.int_list()?
        };
        cur.expect("|")?;
        let tail_pos = cur.pos;
        let tail = if cur.eat("per:") {
            TailRule::Periodic(cur.int_list()?)
        } else if cur.eat("poly:") {
            let c = cur.real()?;
            cur.expect(",")?;
            let p = cur.real()?;
            cur.expect(",")?;
            let sign = cur.sign()?;
            let (mut skip, mut offset) = (0, 0);
            if cur.eat(",") {
                skip = nonnegative(&mut cur)?;
                cur.expect(",")?;
                offset = cur.int()?;
            }
            TailRule::PolyGrowth {
                c,
                p,
                sign,
                skip,
                offset,
            }
        } else if cur.eat("tower:") {
            let x = cur.real()?;
            let (mut sign, mut skip, mut offset) = (1, 0, 0);
            if cur.eat(",") {
                sign = cur.sign()?;
                cur.expect(",")?;
                skip = nonnegative(&mut cur)?;
                cur.expect(",")?;
                offset = cur.int()?;
            }
            TailRule::Tower { x, sign, skip, offset }
        } else {
            return Err(cur.err("expected 'per:', 'poly:' or 'tower:'"));
        };
        cur.expect("]")?;
        if cur.pos != src.len() {
            return Err(cur.err("trailing characters after ']'"));
        }
        ExternalAddress::new(prefix, tail).map_err(|e| ParseAddressError {
            position: tail_pos,
            message: e.to_string(),
        })
    }
}

fn nonnegative(cur: &mut Cursor<'_>) -> Result<u64, ParseAddressError> {
    let pos = cur.pos;
    let v = cur.int()?;
    u64::try_from(v).map_err(|_| ParseAddressError {
        position: pos,
        message: format!("skip {v} must be nonnegative"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn addr(s: &str) -> ExternalAddress {
        s.parse().unwrap()
    }

    #[test]
    fn entries_follow_the_tail_rules() {
        assert_eq!(ExternalAddress::periodic(&[0, 1]).entry(3), Ok(0));
        assert_eq!(ExternalAddress::preperiodic(&[5], &[0]).entry(1), Ok(5));
        let tower = ExternalAddress::tower(&[], 1.0).unwrap();
        assert_eq!(tower.entry(1), Ok(0));
        assert_eq!(tower.entry(2), Ok(0));
        assert_eq!(tower.entry(3), Ok(15));
        assert!(matches!(tower.entry(5), Err(AddressError::HorizonExceeded { .. })));
        let poly = ExternalAddress::poly(&[], 1.0, 1.0, 1).unwrap();
        assert_eq!((1..=4).map(|k| poly.entry(k).unwrap()).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert_eq!(poly.entry(0), Err(AddressError::ZeroIndex));
    }

    #[test]
    fn tower_log_weight_reaches_past_the_float_range() {
        let tower = ExternalAddress::tower(&[], 1.0).unwrap();
        assert!(tower.weight(5).is_err());
        let f4 = (1..=4).fold(1.0f64, |v, _| v.exp_m1());
        assert_eq!(tower.log_weight(5).unwrap(), f4);
        assert!(tower.log_weight(6).is_err());
    }

    #[test]
    fn shift_examples() {
        assert_eq!(ExternalAddress::periodic(&[0, 1]).shift(), ExternalAddress::periodic(&[1, 0]));
        assert_eq!(ExternalAddress::preperiodic(&[7], &[0]).shift(), ExternalAddress::periodic(&[0]));
        let tower = ExternalAddress::tower(&[], 1.0).unwrap();
        let shifted = tower.shift();
        for k in 1..=3 {
            assert_eq!(shifted.value(k), tower.value(k + 1));
        }
    }

    #[test]
    fn canonical_form_rolls_prefix_into_block() {
        let a = ExternalAddress::preperiodic(&[1, 0, 1], &[0, 1, 0, 1]);
        assert_eq!(a, ExternalAddress::periodic(&[1, 0]));
        assert_eq!(a.to_string(), "[|per:1,0]");
        // Prefix entries matching the growing rule are absorbed too.
        let poly = ExternalAddress::poly(&[], 1.0, 1.0, 1).unwrap();
        assert_eq!(ExternalAddress::preperiodic(&[9], &[0]).to_string(), "[9|per:0]");
        assert_eq!(poly.shift_by(3).to_string(), "[|poly:1.0,1.0,+,3,0]");
        let rebuilt = ExternalAddress::new(
            vec![4, 5],
            TailRule::PolyGrowth {
                c: 1.0,
                p: 1.0,
                sign: 1,
                skip: 5,
                offset: 0,
            },
        )
        .unwrap();
        assert_eq!(rebuilt, poly.shift_by(3));
        // A constant polynomial is periodic.
        assert_eq!(ExternalAddress::poly(&[], 2.5, 0.0, -1).unwrap(), ExternalAddress::periodic(&[-3]));
    }

    #[test]
    fn lex_compare_examples() {
        let h = 32;
        let per = ExternalAddress::periodic;
        assert_eq!(per(&[0]).lex_compare(&per(&[1]), h), Ok(Ordering::Less));
        assert_eq!(per(&[0, 1]).lex_compare(&per(&[0, 1]), h), Ok(Ordering::Equal));
        let a = ExternalAddress::preperiodic(&[0, 1, 2], &[0]);
        assert_eq!(a.lex_compare(&per(&[0, 1]), h), Ok(Ordering::Greater));
        let poly = ExternalAddress::poly(&[], 1.0, 1.0, 1).unwrap();
        let near = ExternalAddress::poly(&[], 0.9999999, 1.0, 1).unwrap();
        assert_eq!(poly.lex_compare(&near, 8), Err(AddressError::Indeterminate { horizon: 8 }));
    }

    #[test]
    fn translate_examples() {
        assert_eq!(ExternalAddress::periodic(&[0]).translate(1), ExternalAddress::periodic(&[1]));
        let s = ExternalAddress::preperiodic(&[-1, 2], &[0]).translate(3);
        assert_eq!(s, ExternalAddress::preperiodic(&[2, 5], &[3]));
        let tower = ExternalAddress::tower(&[3], 2.0).unwrap();
        assert_eq!(tower.translate(4).translate(-4), tower);
        assert_eq!(tower.negate().negate(), tower);
        assert_eq!(tower.negate().entry(3), Ok(-tower.entry(3).unwrap()));
    }

    #[test]
    fn first_entry_shift() {
        let r = ExternalAddress::periodic(&[1]);
        assert_eq!(r.with_first_shifted(-2), ExternalAddress::preperiodic(&[-1], &[1]));
    }

    #[test]
    fn text_roundtrip() {
        for text in [
            "[0,1|per:2,3]",
            "[|tower:1.0]",
            "[|poly:1.0,1.0,+]",
            "[-4|poly:0.5,2.0,-,3,7]",
            "[2|tower:1.5,-,1,-2]",
        ] {
            let s = addr(text);
            assert_eq!(addr(&s.to_string()), s, "{text}");
        }
        assert_eq!(addr(" [|per:0] ").to_string(), "[|per:0]");
        assert_eq!(addr("[|tower:1]").to_string(), "[|tower:1.0]");
        assert_eq!(addr("[|poly:1,1,+]"), ExternalAddress::poly(&[], 1.0, 1.0, 1).unwrap());
    }

    #[test]
    fn parse_errors_carry_positions() {
        let err = "[0,1|per:".parse::<ExternalAddress>().unwrap_err();
        assert_eq!(err.position, 9);
        let err = "[0,x|per:1]".parse::<ExternalAddress>().unwrap_err();
        assert_eq!(err.position, 3);
        assert!("[|per:1]x".parse::<ExternalAddress>().is_err());
        assert!("[|tower:-1]".parse::<ExternalAddress>().is_err());
        assert!("[|foo:1]".parse::<ExternalAddress>().is_err());
    }
}
