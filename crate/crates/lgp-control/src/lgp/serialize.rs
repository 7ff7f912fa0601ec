use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Hyperparams, LgpInput, LgpModel, PriorSpec, TrainingSet};
use crate::{Vector, F};

/// On-disk document format version.
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    version: u32,
    hyperparams: Hyperparams,
    prior: PriorSpec,
    torque_noise_std: Vec<F>,
    accel_noise_std: Vec<F>,
    inputs: Vec<InputRow>,
    /// Posterior weight vector, one block of N entries per observation.
    /// Floats are written in shortest round-trip decimal form, so the
    /// vector is bit-stable across save/load.
    weights: Vec<F>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InputRow {
    q: Vec<F>,
    dq: Vec<F>,
    ddq: Vec<F>,
}

#[derive(Debug, thiserror::Error)]
pub enum ModelIoError {
    #[error("model i/o failed for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model document parse error in {path}: {message}")]
    Parse { path: String, message: String },
    #[error("model document version {found} unsupported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("model reconstruction failed: {0}")]
    Rebuild(#[from] crate::numerics::NumericsError),
}

/// Writes the model as a self-describing versioned text document.
pub fn save_model(model: &LgpModel, path: &Path) -> Result<(), ModelIoError> {
    let doc = ModelDoc {
        version: MODEL_VERSION,
        hyperparams: model.hyperparams().clone(),
        prior: model.prior_spec().clone(),
        torque_noise_std: model.noise_std().0.to_vec(),
        accel_noise_std: model.noise_std().1.to_vec(),
        inputs: model
            .inputs()
            .iter()
            .map(|x| InputRow {
                q: x.q.as_slice().to_vec(),
                dq: x.dq.as_slice().to_vec(),
                ddq: x.ddq.as_slice().to_vec(),
            })
            .collect(),
        weights: model.weights().as_slice().to_vec(),
    };
    let text = toml::to_string_pretty(&doc)
        .map_err(|e| ModelIoError::Parse { path: path.display().to_string(), message: e.to_string() })?;
    std::fs::write(path, text)
        .map_err(|e| ModelIoError::Io { path: path.display().to_string(), source: e })
}

/// Loads a model document and reconstructs the posterior (the Gram factor
/// is rebuilt from the stored inputs; the weight vector is taken verbatim).
pub fn load_model(path: &Path) -> Result<LgpModel, ModelIoError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ModelIoError::Io { path: path.display().to_string(), source: e })?;
    let doc: ModelDoc = toml::from_str(&text)
        .map_err(|e| ModelIoError::Parse { path: path.display().to_string(), message: e.to_string() })?;
    if doc.version != MODEL_VERSION {
        return Err(ModelIoError::Version { found: doc.version, expected: MODEL_VERSION });
    }
    let inputs: Vec<LgpInput> = doc
        .inputs
        .into_iter()
        .map(|r| {
            LgpInput::new(
                Vector::from_vec(r.q),
                Vector::from_vec(r.dq),
                Vector::from_vec(r.ddq),
            )
        })
        .collect();
    Ok(LgpModel::from_parts(
        doc.hyperparams,
        inputs,
        Vector::from_vec(doc.weights),
        doc.prior,
        doc.torque_noise_std,
        doc.accel_noise_std,
    )?)
}

/// Writes training data as CSV with header
/// `q_1..q_N, dq_1..dq_N, ddq_1..ddq_N, y_1..y_N`.
pub fn write_training_csv(ts: &TrainingSet, path: &Path) -> Result<(), ModelIoError> {
    let n = ts.dof();
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let mut header = Vec::new();
    for prefix in ["q", "dq", "ddq", "y"] {
        for i in 1..=n {
            header.push(format!("{prefix}_{i}"));
        }
    }
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (x, y) in ts.inputs.iter().zip(&ts.outputs) {
        let mut row = Vec::with_capacity(4 * n);
        for v in [&x.q, &x.dq, &x.ddq, y] {
            for &e in v.iter() {
                row.push(format_float(e));
            }
        }
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| ModelIoError::Io { path: path.display().to_string(), source: e })
}

/// Reads training data written by [`write_training_csv`]; noise scales are
/// supplied by the caller (they are configuration, not data).
pub fn read_training_csv(
    path: &Path,
    torque_std: F,
    accel_std: F,
) -> Result<TrainingSet, ModelIoError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header_len = r.headers().map_err(|e| csv_err(path, e))?.len();
    if header_len % 4 != 0 {
        return Err(ModelIoError::Parse {
            path: path.display().to_string(),
            message: format!("expected 4N columns, found {header_len}"),
        });
    }
    let n = header_len / 4;
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let get = |k: usize| -> Result<F, ModelIoError> {
            rec.get(k)
                .ok_or_else(|| ModelIoError::Parse {
                    path: path.display().to_string(),
                    message: format!("missing column {k}"),
                })?
                .parse::<F>()
                .map_err(|e| ModelIoError::Parse {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })
        };
        let mut cols = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
        for (g, col) in cols.iter_mut().enumerate() {
            for i in 0..n {
                col.push(get(g * n + i)?);
            }
        }
        let [q, dq, ddq, y] = cols;
        inputs.push(LgpInput::new(
            Vector::from_vec(q),
            Vector::from_vec(dq),
            Vector::from_vec(ddq),
        ));
        outputs.push(Vector::from_vec(y));
    }
    Ok(TrainingSet::with_uniform_noise(inputs, outputs, torque_std, accel_std))
}

/// Shortest decimal representation that round-trips the exact f64 value.
pub fn format_float(v: F) -> String {
    format!("{v}")
}

fn csv_err(path: &Path, e: csv::Error) -> ModelIoError {
    ModelIoError::Parse { path: path.display().to_string(), message: e.to_string() }
}
