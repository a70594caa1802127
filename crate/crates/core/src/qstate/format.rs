//! On-disk state format: a JSON document
//! `{"n": 3, "kind": "pure" | "density", "data": [[re, im], ..]}`
//! with amplitudes in index order for pure states and row-major entries for
//! density matrices. Validation runs on load, so a file that parses is a
//! physical state.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{DensityMatrix, PureState, QStateError, QuantumState};

#[derive(Serialize, Deserialize)]
struct StateDocument {
    n: usize,
    kind: String,
    data: Vec<[f64; 2]>,
}

impl QuantumState {
    pub fn from_json_str(text: &str) -> Result<Self, QStateError> {
        let doc: StateDocument = serde_json::from_str(text)
            .map_err(|e| QStateError::BadStateDocument(e.to_string()))?;
        let data: Vec<Complex64> =
            doc.data.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        match doc.kind.as_str() {
            "pure" => Ok(Self::Pure(PureState::new(doc.n, data)?)),
            "density" => Ok(Self::Density(DensityMatrix::new(doc.n, data)?)),
            other => Err(QStateError::BadStateKind(other.to_string())),
        }
    }

    pub fn to_json_string(&self) -> String {
        let (kind, data): (&str, Vec<[f64; 2]>) = match self {
            Self::Pure(p) => {
                ("pure", p.amplitudes().iter().map(|z| [z.re, z.im]).collect())
            }
            Self::Density(d) => {
                ("density", d.entries().iter().map(|z| [z.re, z.im]).collect())
            }
        };
        let doc = StateDocument { n: self.num_qubits(), kind: kind.to_string(), data };
        serde_json::to_string(&doc).expect("state document serialization cannot fail")
    }

    pub fn load(path: &Path) -> Result<Self, QStateError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| QStateError::BadStateDocument(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json_string())
    }
}

#[cfg(test)]
mod tests {
    use super::super::BitString;
    use super::*;

    #[test]
    fn roundtrip_pure_and_density() {
        let pure: QuantumState = PureState::ghz(2).unwrap().into();
        let back = QuantumState::from_json_str(&pure.to_json_string()).unwrap();
        assert_eq!(pure, back);

        let dens: QuantumState = DensityMatrix::depolarized_ghz(2, 0.3).unwrap().into();
        let back = QuantumState::from_json_str(&dens.to_json_string()).unwrap();
        assert_eq!(dens, back);
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(QuantumState::from_json_str("not json").is_err());
        assert!(QuantumState::from_json_str(r#"{"n":1,"kind":"mixed","data":[[1,0]]}"#).is_err());
        // Wrong length.
        assert!(
            QuantumState::from_json_str(r#"{"n":2,"kind":"pure","data":[[1,0],[0,0]]}"#).is_err()
        );
        // Parses but is not a physical state (trace 2).
        let bad = r#"{"n":1,"kind":"density","data":[[1,0],[0,0],[0,0],[1,0]]}"#;
        assert!(QuantumState::from_json_str(bad).is_err());
    }

    #[test]
    fn basis_state_roundtrip_keeps_index_convention() {
        let st: QuantumState =
            PureState::basis(&BitString::new(vec![1, 0]).unwrap()).unwrap().into();
        let text = st.to_json_string();
        // |10> is index 2 in big-endian order.
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["data"][2][0], 1.0);
    }
}
