//! Hashed orthographic features.
//!
//! Every token yields a set of feature template strings (surface form,
//! word shape, affixes, digit flags, neighboring surfaces, and a shape
//! bigram). Each string is hashed with 64-bit FNV-1a, XORed with the seed,
//! and masked down to `hash_bits` bits, giving a sparse binary vector in a
//! fixed 2^hash_bits-dimensional space. Collisions are allowed — they are
//! deterministic, which is all the downstream linear models need.

use crate::corpus::TokenizedSentence;
use crate::error::Result;

use super::{Encoder, FeatureRow, RepresentationMatrix};

/// Sentinel surfaces for context positions beyond the sentence edge.
const LEFT_EDGE: &str = "<s>";
const RIGHT_EDGE: &str = "</s>";

#[derive(Debug, Clone)]
pub struct OrthographicEncoder {
    hash_bits: u32,
    seed: u64,
}

impl OrthographicEncoder {
    pub fn new(hash_bits: u32, seed: u64) -> Self {
        OrthographicEncoder { hash_bits, seed }
    }

    fn hash(&self, template: &str) -> u32 {
        let mask = (1u64 << self.hash_bits) - 1;
        ((fnv1a64(template.as_bytes()) ^ self.seed) & mask) as u32
    }

    /// Feature template strings for token `i` of the sentence.
    fn templates(surfaces: &[&str], i: usize) -> Vec<String> {
        let surface = surfaces[i];
        let chars: Vec<char> = surface.chars().collect();
        let mut out = Vec::with_capacity(16);

        out.push(format!("low={}", surface.to_lowercase()));
        out.push(format!("shape={}", shape(surface)));
        for k in 1..=3usize {
            if chars.len() >= k {
                let prefix: String = chars[..k].iter().collect();
                let suffix: String = chars[chars.len() - k..].iter().collect();
                out.push(format!("pre{k}={prefix}"));
                out.push(format!("suf{k}={suffix}"));
            }
        }
        if !chars.is_empty() && chars.iter().all(|c| c.is_numeric()) {
            out.push("alldigit".into());
        }
        if chars.iter().any(|c| c.is_numeric()) && chars.iter().any(|c| c.is_alphabetic()) {
            out.push("mixed".into());
        }
        for offset in -2i64..=2 {
            let surface = context(surfaces, i, offset);
            out.push(format!("ctx[{offset}]={surface}"));
        }
        out.push(format!(
            "shapes[-1,0]={}|{}",
            shape(context(surfaces, i, -1)),
            shape(surface)
        ));
        out
    }
}

impl Encoder for OrthographicEncoder {
    fn dim(&self) -> usize {
        1usize << self.hash_bits
    }

    fn encode(&self, sentence: &TokenizedSentence) -> Result<RepresentationMatrix> {
        let surfaces: Vec<&str> = sentence.tokens.iter().map(|t| t.surface.as_str()).collect();
        let rows = (0..surfaces.len())
            .map(|i| {
                let mut indices: Vec<u32> = Self::templates(&surfaces, i)
                    .iter()
                    .map(|t| self.hash(t))
                    .collect();
                indices.sort_unstable();
                indices.dedup();
                FeatureRow::Sparse { indices, value: 1.0 }
            })
            .collect();
        Ok(RepresentationMatrix { dim: self.dim(), rows })
    }

    fn digest(&self) -> String {
        format!("orthographic/bits={}/seed={}", self.hash_bits, self.seed)
    }
}

fn context<'a>(surfaces: &[&'a str], i: usize, offset: i64) -> &'a str {
    let pos = i as i64 + offset;
    if pos < 0 {
        LEFT_EDGE
    } else if pos as usize >= surfaces.len() {
        RIGHT_EDGE
    } else {
        surfaces[pos as usize]
    }
}

/// Collapsed word shape: uppercase → `A`, other letters → `a`, digits → `0`,
/// anything else kept verbatim; runs of the same class collapse to one char.
fn shape(surface: &str) -> String {
    let mut out = String::new();
    let mut prev = None;
    for c in surface.chars() {
        let mapped = if c.is_uppercase() {
            'A'
        } else if c.is_alphabetic() {
            'a'
        } else if c.is_numeric() {
            '0'
        } else {
            c
        };
        if prev != Some(mapped) {
            out.push(mapped);
            prev = Some(mapped);
        }
    }
    out
}

/// 64-bit FNV-1a.
fn fnv1a64(bytes: &[u8]) -> u64 {
    const BASIS: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(BASIS, |h, &b| (h ^ b as u64).wrapping_mul(PRIME))
}
