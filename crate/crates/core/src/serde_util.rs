//! Serialization helpers for complex scalars, matrices and party indices.

use num_complex::Complex64;
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::Serializer;

use crate::numerics::CMatrix;

/// Complex scalar as `{"re": .., "im": .., "abs": ..}`.
pub fn complex<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    let mut st = s.serialize_struct("Complex", 3)?;
    st.serialize_field("re", &z.re)?;
    st.serialize_field("im", &z.im)?;
    st.serialize_field("abs", &z.norm())?;
    st.end()
}

pub fn option_complex<S: Serializer>(z: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
    match z {
        Some(z) => complex(z, s),
        None => s.serialize_none(),
    }
}

struct Row<'a>(&'a CMatrix, usize);

impl serde::Serialize for Row<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.ncols()))?;
        for j in 0..self.0.ncols() {
            let z = self.0[(self.1, j)];
            seq.serialize_element(&[z.re, z.im])?;
        }
        seq.end()
    }
}

/// Matrix as an array of rows, each entry `[re, im]`.
pub fn cmatrix<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        seq.serialize_element(&Row(m, i))?;
    }
    seq.end()
}

pub struct MatrixRef<'a>(pub &'a CMatrix);

impl serde::Serialize for MatrixRef<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        cmatrix(self.0, s)
    }
}

/// Internal 0-based party index written 1-based.
pub fn party<S: Serializer>(p: &usize, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u64(*p as u64 + 1)
}

pub fn option_party<S: Serializer>(p: &Option<usize>, s: S) -> Result<S::Ok, S::Error> {
    match p {
        Some(p) => party(p, s),
        None => s.serialize_none(),
    }
}
