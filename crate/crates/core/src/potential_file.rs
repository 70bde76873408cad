//! Potential documents: a JSON object with a list of Fourier modes,
//!
//! ```json
//! { "modes": [ { "m": 2, "n": -3, "re": -0.0005, "im": 0.0 },
//!              { "m": -2, "n": 3, "re": -0.0005, "im": 0.0 } ] }
//! ```
//!
//! Each record is the complex coefficient of `e^{2πi(mx + ny)}`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::torus::FourierPotential;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeRecord {
    pub m: i32,
    pub n: i32,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialDocument {
    pub modes: Vec<ModeRecord>,
}

/// How the loader treats coefficients that are not Hermitian.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    /// Reject the document.
    Strict,
    /// Replace the potential by its real part and raise the warning flag.
    Symmetrize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedPotential {
    pub potential: FourierPotential,
    /// Set when the coefficients had to be symmetrized.
    pub symmetrized: bool,
}

impl PotentialDocument {
    pub fn from_potential(f: &FourierPotential) -> Self {
        let modes = f
            .modes()
            .map(|((m, n), c)| ModeRecord { m, n, re: c.re, im: c.im })
            .collect();
        Self { modes }
    }

    pub fn into_potential(self, symmetry: Symmetry) -> Result<LoadedPotential> {
        let mut seen = std::collections::BTreeSet::new();
        for rec in &self.modes {
            if !(rec.re.is_finite() && rec.im.is_finite()) {
                return invalid(format!("mode ({},{}) has a non-finite coefficient", rec.m, rec.n));
            }
            if !seen.insert((rec.m, rec.n)) {
                return invalid(format!("mode ({},{}) listed twice", rec.m, rec.n));
            }
        }
        let modes = self
            .modes
            .into_iter()
            .map(|r| ((r.m, r.n), Complex64::new(r.re, r.im)));
        match symmetry {
            Symmetry::Strict => Ok(LoadedPotential {
                potential: FourierPotential::from_modes(modes)?,
                symmetrized: false,
            }),
            Symmetry::Symmetrize => {
                let (potential, symmetrized) = FourierPotential::from_modes_symmetrized(modes);
                Ok(LoadedPotential { potential, symmetrized })
            }
        }
    }
}

pub fn parse_potential(text: &str, symmetry: Symmetry) -> Result<LoadedPotential> {
    let doc: PotentialDocument = serde_json::from_str(text)?;
    doc.into_potential(symmetry)
}

pub fn load_potential(path: impl AsRef<Path>, symmetry: Symmetry) -> Result<LoadedPotential> {
    let text = std::fs::read_to_string(path)?;
    parse_potential(&text, symmetry)
}

pub fn to_document_string(f: &FourierPotential) -> String {
    serde_json::to_string_pretty(&PotentialDocument::from_potential(f))
        .expect("potential documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_potential() {
        let f = &FourierPotential::cosine(2, -3, -1e-3) + &FourierPotential::sine(1, 1, 0.25);
        let text = to_document_string(&f);
        let back = parse_potential(&text, Symmetry::Strict).unwrap();
        assert_eq!(back.potential, f);
        assert!(!back.symmetrized);
    }

    #[test]
    fn missing_partner_is_flagged_or_rejected() {
        let text = r#"{"modes":[{"m":1,"n":0,"re":1.0}]}"#;
        assert!(parse_potential(text, Symmetry::Strict).is_err());
        let loaded = parse_potential(text, Symmetry::Symmetrize).unwrap();
        assert!(loaded.symmetrized);
        assert_eq!(loaded.potential, FourierPotential::cosine(1, 0, 1.0));
    }

    #[test]
    fn duplicates_and_garbage_are_errors() {
        let dup = r#"{"modes":[{"m":0,"n":0,"re":1.0},{"m":0,"n":0,"re":2.0}]}"#;
        assert!(parse_potential(dup, Symmetry::Symmetrize).is_err());
        assert!(parse_potential("{not json", Symmetry::Symmetrize).is_err());
        assert!(parse_potential(r#"{"modes":[{"m":0,"n":0}]}"#, Symmetry::Symmetrize).is_err());
    }
}
