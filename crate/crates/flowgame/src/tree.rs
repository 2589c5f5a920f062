//! Addresses of binary-tree vertices as finite bit strings.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// A vertex of the binary tree, addressed by the path from the root.
///
/// The empty path is the root. Children of `x` are `x0` and `x1`.
/// Ordering is lexicographic on the bit sequence, so among nodes of equal
/// depth the leftmost one is smallest.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct NodeId {
    bits: Vec<u8>,
}

impl NodeId {
    pub fn root() -> Self {
        NodeId { bits: Vec::new() }
    }

    pub fn from_bits(bits: impl IntoIterator<Item = u8>) -> Self {
        let bits: Vec<u8> = bits.into_iter().collect();
        assert!(bits.iter().all(|&b| b <= 1), "bits must be 0 or 1");
        NodeId { bits }
    }

    pub fn depth(&self) -> usize {
        self.bits.len()
    }

    pub fn is_root(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn child(&self, bit: u8) -> NodeId {
        assert!(bit <= 1);
        let mut bits = self.bits.clone();
        bits.push(bit);
        NodeId { bits }
    }

    pub fn parent(&self) -> Option<NodeId> {
        if self.bits.is_empty() {
            None
        } else {
            Some(NodeId {
                bits: self.bits[..self.bits.len() - 1].to_vec(),
            })
        }
    }

    pub fn sibling(&self) -> Option<NodeId> {
        let last = *self.bits.last()?;
        let mut bits = self.bits.clone();
        *bits.last_mut().unwrap() = 1 - last;
        Some(NodeId { bits })
    }

    /// `self` followed by `suffix`.
    pub fn join(&self, suffix: &NodeId) -> NodeId {
        let mut bits = self.bits.clone();
        bits.extend_from_slice(&suffix.bits);
        NodeId { bits }
    }

    /// `self` padded with zeros to the given depth. Panics if already deeper.
    pub fn pad_zeros(&self, depth: usize) -> NodeId {
        assert!(depth >= self.bits.len(), "pad target above node");
        let mut bits = self.bits.clone();
        bits.resize(depth, 0);
        NodeId { bits }
    }

    /// `self` extended with `count` ones.
    pub fn extend_ones(&self, count: usize) -> NodeId {
        let mut bits = self.bits.clone();
        bits.extend(std::iter::repeat(1).take(count));
        NodeId { bits }
    }

    pub fn is_prefix_of(&self, other: &NodeId) -> bool {
        other.bits.starts_with(&self.bits)
    }

    /// The suffix of `other` below `self`, if `self` is a prefix of it.
    pub fn strip_prefix(&self, other: &NodeId) -> Option<NodeId> {
        other.bits.strip_prefix(self.bits.as_slice()).map(|rest| NodeId {
            bits: rest.to_vec(),
        })
    }

    /// All prefixes from the root down to the node itself (inclusive).
    pub fn ancestors(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..=self.bits.len()).map(move |i| NodeId {
            bits: self.bits[..i].to_vec(),
        })
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{}", b)?;
        }
        Ok(())
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\u{039b}")?; // render the root as Λ in debug output
        if !self.bits.is_empty() {
            write!(f, "{}", self)?;
        }
        Ok(())
    }
}

impl FromStr for NodeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut bits = Vec::with_capacity(s.len());
        for c in s.chars() {
            match c {
                '0' => bits.push(0),
                '1' => bits.push(1),
                _ => return Err(format!("invalid bit {c:?} in node address {s:?}")),
            }
        }
        Ok(NodeId { bits })
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        NodeId::from_str(&s).map_err(D::Error::custom)
    }
}

/// Shorthand for building a node from a literal like "0110".
pub fn node(s: &str) -> NodeId {
    s.parse().expect("valid node literal")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ancestors_include_root_and_self() {
        let n = node("01");
        let anc: Vec<String> = n.ancestors().map(|a| a.to_string()).collect();
        assert_eq!(anc, vec!["", "0", "01"]);
    }

    #[test]
    fn lexicographic_order_is_leftmost_first() {
        assert!(node("00") < node("01"));
        assert!(node("0") < node("00")); // prefix sorts first
    }

    #[test]
    fn prefix_stripping() {
        let root = node("010");
        let deep = node("01011");
        assert_eq!(root.strip_prefix(&deep), Some(node("11")));
        assert_eq!(node("1").strip_prefix(&deep), None);
    }
}
