use alloc::vec::Vec;

use rand::Rng;

use super::HdcError;

/// A dense bipolar hypervector; every element is exactly -1 or +1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hypervector(Vec<i8>);

impl Hypervector {
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self((0..dim).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    pub fn ones(dim: usize) -> Self {
        Self(alloc::vec![1; dim])
    }

    /// Returns `None` unless every entry is ±1.
    pub fn from_elements(elements: Vec<i8>) -> Option<Self> {
        elements
            .iter()
            .all(|&e| e == 1 || e == -1)
            .then_some(Self(elements))
    }

    /// Sign of each component; zeros take the corresponding element of
    /// `ties`.
    pub fn from_signs(sums: &[i32], ties: &Hypervector) -> Self {
        Self(
            sums.iter()
                .zip(&ties.0)
                .map(|(&s, &t)| match s.signum() {
                    0 => t,
                    x => x as i8,
                })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn is_bipolar(&self) -> bool {
        self.0.iter().all(|&e| e == 1 || e == -1)
    }

    pub(crate) fn flip(&mut self, idx: usize) {
        self.0[idx] = -self.0[idx];
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|e| -e).collect())
    }
}

/// Elementwise product. Commutative and self-inverse.
pub fn bind(a: &Hypervector, b: &Hypervector) -> Result<Hypervector, HdcError> {
    if a.dim() != b.dim() {
        return Err(HdcError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(Hypervector(a.0.iter().zip(&b.0).map(|(x, y)| x * y).collect()))
}

/// Cyclic rotation: element `i` moves to `(i + shift) mod D`.
pub fn permute(a: &Hypervector, shift: i64) -> Hypervector {
    let d = a.dim();
    if d == 0 {
        return a.clone();
    }
    let s = shift.rem_euclid(d as i64) as usize;
    let mut out = a.0.clone();
    out.rotate_right(s);
    Hypervector(out)
}

/// Numeric element types that [`cosine_sim`] accepts.
pub trait Component: Copy {
    fn to_f64(self) -> f64;
}

macro_rules! component {
    ($($t:ty),*) => {$(
        impl Component for $t {
            #[inline]
            fn to_f64(self) -> f64 { self as f64 }
        }
    )*};
}
component!(i8, i32, i64, f32, f64);

/// Cosine similarity of two equal-length vectors.
pub fn cosine_sim<A: Component, B: Component>(a: &[A], b: &[B]) -> Result<f64, HdcError> {
    if a.len() != b.len() {
        return Err(HdcError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x.to_f64(), y.to_f64());
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(HdcError::ZeroVector);
    }
    Ok((dot / (libm::sqrt(na) * libm::sqrt(nb))).clamp(-1.0, 1.0))
}
