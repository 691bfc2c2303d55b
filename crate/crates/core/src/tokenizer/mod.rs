//! Uniform-bin action codec: each of the six action dimensions is normalized to its range and
//! quantized into 1024 bins; decoding returns the bin center.

use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::world::Action;

pub const BINS: u32 = 1024;
pub const CODEC_VERSION: &str = "uniform-bins/1";
pub const LAYOUT: [&str; 6] = ["pick.x", "pick.y", "pick.yaw", "place.x", "place.y", "place.yaw"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimRange {
    pub lo: f64,
    pub hi: f64,
}

impl DimRange {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TokenizerError {
    #[error("{dim} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        dim: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("token {index} ({dim}) = {value} outside 0..{BINS}")]
    BadToken {
        index: usize,
        dim: &'static str,
        value: i64,
    },
    #[error("expected 6 tokens, got {0}")]
    WrongLength(usize),
}

/// Per-dimension codec parameters; serialized verbatim into dataset metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionCodec {
    pub version: String,
    pub bins: u32,
    pub x: DimRange,
    pub y: DimRange,
    pub yaw: DimRange,
    pub layout: Vec<String>,
    #[serde(skip)]
    centers: CenterCache,
}

/// Lazily built decode tables, one per distinct range (x, y, yaw). Keyed by the parameters they
/// were built from so that edits to the public fields never see a stale table.
#[derive(Debug, Default)]
struct CenterCache(RwLock<Option<(CacheKey, Tables)>>);

type Tables = Arc<[Vec<f64>; 3]>;

impl Clone for CenterCache {
    fn clone(&self) -> Self {
        Self(RwLock::new(self.0.read().expect("center cache lock").clone()))
    }
}

type CacheKey = ([DimRange; 3], u32);

impl PartialEq for CenterCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// Bin centers of one dimension, rounded so that the half-bin bound holds in floating point.
///
/// Each center starts as the correctly rounded `lo + (2i + 1) × half_bin`. Because the range need
/// not be a dyadic number (yaw spans 2π), two adjacent rounded centers can end up a fraction of an
/// ulp more than one bin apart, leaving doubles that are farther than half a bin from both. Such
/// gaps are closed by stepping the upper center down one ulp at a time.
fn center_table(r: DimRange, bins: u32) -> Vec<f64> {
    let half = r.width() / f64::from(2 * bins);
    let covers = |c: f64, v: f64| (v - c).abs() <= half;
    let mut c: Vec<f64> = (0..bins).map(|i| f64::from(2 * i + 1).mul_add(half, r.lo)).collect();
    for i in 0..c.len().saturating_sub(1) {
        let v = last_covered(c[i], c[i + 1], |v| covers(c[i], v));
        while !covers(c[i + 1], v.next_up()) {
            c[i + 1] = c[i + 1].next_down();
        }
    }
    c
}

/// Maps doubles to integers with the same order.
fn ordered(x: f64) -> i64 {
    let b = x.to_bits() as i64;
    b ^ (((b >> 63) as u64) >> 1) as i64
}

fn from_ordered(k: i64) -> f64 {
    f64::from_bits((k ^ (((k >> 63) as u64) >> 1) as i64) as u64)
}

/// Largest double in `[lo, hi]` satisfying `pred`, given that `pred(lo)` holds and `pred` is
/// monotone (true then false) over the interval.
fn last_covered(lo: f64, hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    let (mut a, mut b) = (ordered(lo), ordered(hi));
    if pred(from_ordered(b)) {
        return hi;
    }
    while b - a > 1 {
        let m = a + (b - a) / 2;
        if pred(from_ordered(m)) {
            a = m;
        } else {
            b = m;
        }
    }
    from_ordered(a)
}

impl Default for ActionCodec {
    fn default() -> Self {
        Self {
            version: CODEC_VERSION.to_string(),
            bins: BINS,
            x: DimRange { lo: 0.0, hi: 1.0 },
            y: DimRange { lo: 0.0, hi: 0.5 },
            yaw: DimRange { lo: -PI, hi: PI },
            layout: LAYOUT.iter().map(|s| s.to_string()).collect(),
            centers: CenterCache::default(),
        }
    }
}

impl ActionCodec {
    pub fn range(&self, dim: usize) -> DimRange {
        match dim % 3 {
            0 => self.x,
            1 => self.y,
            _ => self.yaw,
        }
    }

    /// Largest reconstruction error the codec guarantees on dimension `dim`.
    pub fn half_bin(&self, dim: usize) -> f64 {
        self.range(dim).width() / (2 * self.bins) as f64
    }

    /// `lo + (id + 0.5) / bins × (hi − lo)`, rounded so that every in-range value is within
    /// [`ActionCodec::half_bin`] of the center of the bin it encodes to (see [`center_table`]).
    pub fn bin_center(&self, dim: usize, id: u32) -> f64 {
        self.tables()[dim % 3][id as usize]
    }

    fn tables(&self) -> Tables {
        let key = ([self.x, self.y, self.yaw], self.bins);
        if let Some((k, t)) = &*self.centers.0.read().expect("center cache lock") {
            if *k == key {
                return Arc::clone(t);
            }
        }
        let t = Arc::new([self.x, self.y, self.yaw].map(|r| center_table(r, self.bins)));
        *self.centers.0.write().expect("center cache lock") = Some((key, Arc::clone(&t)));
        t
    }

    /// Bin index of a single value: `floor(norm × bins)` clamped to the last bin.
    pub fn encode_value(&self, dim: usize, v: f64) -> Result<u32, TokenizerError> {
        let r = self.range(dim);
        if !(v >= r.lo && v <= r.hi) {
            return Err(TokenizerError::OutOfRange {
                dim: LAYOUT[dim],
                value: v,
                lo: r.lo,
                hi: r.hi,
            });
        }
        let norm = (v - r.lo) / r.width();
        let id = ((norm * self.bins as f64).floor() as u32).min(self.bins - 1);
        // Rounding in `norm` can land a value just past a bin edge; step back when the
        // neighbouring center is strictly closer.
        let err = |i: u32| (self.bin_center(dim, i) - v).abs();
        let mut best = id;
        if id > 0 && err(id - 1) < err(best) {
            best = id - 1;
        }
        if id + 1 < self.bins && err(id + 1) < err(best) {
            best = id + 1;
        }
        Ok(best)
    }

    pub fn encode(&self, action: &Action) -> Result<[u32; 6], TokenizerError> {
        let v = action.to_array();
        let mut out = [0u32; 6];
        for (d, o) in out.iter_mut().enumerate() {
            *o = self.encode_value(d, v[d])?;
        }
        Ok(out)
    }

    pub fn decode(&self, tokens: &[i64]) -> Result<Action, TokenizerError> {
        if tokens.len() != 6 {
            return Err(TokenizerError::WrongLength(tokens.len()));
        }
        let mut v = [0.0; 6];
        for (d, &t) in tokens.iter().enumerate() {
            if t < 0 || t >= self.bins as i64 {
                return Err(TokenizerError::BadToken {
                    index: d,
                    dim: LAYOUT[d],
                    value: t,
                });
            }
            v[d] = self.bin_center(d, t as u32);
        }
        Ok(Action::from_array(v))
    }

    pub fn decode_ids(&self, tokens: &[u32; 6]) -> Action {
        let wide: Vec<i64> = tokens.iter().map(|&t| t as i64).collect();
        self.decode(&wide).expect("ids produced by encode are in range")
    }

    /// Encode then decode: the action a tokenized policy would actually emit.
    pub fn quantize(&self, action: &Action) -> Result<Action, TokenizerError> {
        Ok(self.decode_ids(&self.encode(action)?))
    }
}
