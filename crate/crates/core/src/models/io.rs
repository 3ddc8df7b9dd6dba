use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{ModelError, ScoringModel};

/// Version of the model file layout written by this build.
pub const FORMAT_VERSION: u32 = 1;

const MAGIC: &str = "CLARTE-MODEL";

/// Writes a model as a one-line header `CLARTE-MODEL v<version> sha256=<hex>`
/// followed by the JSON body the checksum covers. Output is byte-stable.
pub fn write_model<W: Write>(model: &ScoringModel, mut out: W) -> Result<(), ModelError> {
    let mut body = serde_json::to_vec_pretty(model)
        .map_err(|e| ModelError::Corrupt(format!("cannot serialise model: {e}")))?;
    body.push(b'\n');
    let digest = hex::encode(Sha256::digest(&body));
    writeln!(out, "{MAGIC} v{FORMAT_VERSION} sha256={digest}")?;
    out.write_all(&body)?;
    Ok(())
}

pub fn read_model<R: Read>(mut input: R) -> Result<ScoringModel, ModelError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| ModelError::Corrupt("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| ModelError::Corrupt("header is not UTF-8".into()))?;
    let body = &bytes[newline + 1..];

    let mut parts = header.split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(ModelError::Corrupt("not a model file".into()));
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.strip_prefix('v'))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| ModelError::Corrupt("malformed version tag".into()))?;
    if version != FORMAT_VERSION {
        return Err(ModelError::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let expected = parts
        .next()
        .and_then(|c| c.strip_prefix("sha256="))
        .ok_or_else(|| ModelError::Corrupt("missing checksum".into()))?;
    if hex::encode(Sha256::digest(body)) != expected {
        return Err(ModelError::Corrupt("checksum mismatch".into()));
    }
    serde_json::from_slice(body).map_err(|e| ModelError::Corrupt(e.to_string()))
}

pub fn save_model(model: &ScoringModel, path: &Path) -> Result<(), ModelError> {
    let mut buf = Vec::new();
    write_model(model, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ScoringModel, ModelError> {
    read_model(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Hyperparameters, ModelKind};
    use crate::{FeatureVector, Label, LabeledDataset, LabeledItem};

    fn model(kind: ModelKind) -> ScoringModel {
        let items = (0..30)
            .map(|i| {
                let mut fv = FeatureVector::zeros();
                for j in 0..28 {
                    fv.0[j] = ((i * 31 + j * 17) % 11) as f64 / 3.0;
                }
                LabeledItem {
                    doc_id: format!("d{i}"),
                    features: fv,
                    label: if fv.0[0] > 1.5 { Label::Simple } else { Label::Complex },
                    pair_id: None,
                }
            })
            .collect();
        let hp = match Hyperparameters::default_for(kind) {
            Hyperparameters::RandomForest(mut f) => {
                f.n_trees = 5;
                Hyperparameters::RandomForest(f)
            }
            other => other,
        };
        crate::models::train(&hp, &LabeledDataset::new(items), None, 11).unwrap()
    }

    fn bytes(m: &ScoringModel) -> Vec<u8> {
        let mut buf = Vec::new();
        write_model(m, &mut buf).unwrap();
        buf
    }

    #[test]
    fn round_trip_is_exact() {
        for kind in ModelKind::ALL {
            let m = model(kind);
            let buf = bytes(&m);
            let back = read_model(&buf[..]).unwrap();
            assert_eq!(back, m);
            assert_eq!(bytes(&back), buf);
        }
    }

    #[test]
    fn truncation_is_corruption() {
        let buf = bytes(&model(ModelKind::Ridge));
        for cut in [10, buf.len() / 2, buf.len() - 2] {
            assert!(matches!(read_model(&buf[..cut]), Err(ModelError::Corrupt(_))), "cut {cut}");
        }
    }

    #[test]
    fn future_version_is_rejected() {
        let buf = bytes(&model(ModelKind::Ridge));
        let text = String::from_utf8(buf).unwrap().replacen(" v1 ", " v2 ", 1);
        assert!(matches!(
            read_model(text.as_bytes()),
            Err(ModelError::Version { found: 2, expected: 1 })
        ));
    }
}
