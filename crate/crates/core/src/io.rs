//! JSON model files.
//!
//! A file either names a template (`mmpp-queue`, `two-class`, `perturbed`)
//! or lists the blocks explicitly, optionally with partial blocks keyed by
//! parameter name:
//!
//! ```json
//! {
//!   "levels": 2,
//!   "phases": [1, 1, 1],
//!   "blocks": {
//!     "diag": [[[-1]], [[-3]], [[-2]]],
//!     "up":   [[[1]], [[1]]],
//!     "down": [[[2]], [[2]]]
//!   }
//! }
//! ```
//!
//! `down[i]` is the block from level `i + 1` to level `i`. The `perturbed`
//! template takes its base generator from the top-level `blocks`.

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{QbdError, Result};
use crate::linalg::{param_names, Matrix};
use crate::model::{
    build_mmpp_queue, build_perturbed, build_two_class, validate, validate_param, BlockSet, ParamQbdModel, QbdModel,
};

type Dense = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockFile {
    pub diag: Vec<Dense>,
    pub up: Vec<Dense>,
    pub down: Vec<Dense>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Template {
    MmppQueue {
        #[serde(rename = "T")]
        t: Dense,
        lambda: Vec<f64>,
        mu: Vec<f64>,
        #[serde(rename = "N")]
        n: usize,
    },
    TwoClass {
        lambda1: f64,
        lambda2: f64,
        mu1: f64,
        mu2: f64,
        #[serde(rename = "N")]
        n: usize,
    },
    Perturbed {
        directions: Vec<BlockFile>,
        epsilon: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        names: Option<Vec<String>>,
    },
}

/// The on-disk shape of a model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<Template>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<BlockFile>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub partials: IndexMap<String, BlockFile>,
}

/// A loaded model, with partial blocks when the file provides them.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedModel {
    Plain(QbdModel<f64>),
    Param(ParamQbdModel<f64>),
}

impl LoadedModel {
    pub fn base(&self) -> &QbdModel<f64> {
        match self {
            LoadedModel::Plain(m) => m,
            LoadedModel::Param(p) => p.base(),
        }
    }

    pub fn param(&self) -> Option<&ParamQbdModel<f64>> {
        match self {
            LoadedModel::Plain(_) => None,
            LoadedModel::Param(p) => Some(p),
        }
    }
}

fn parse_err(context: &str, e: impl std::fmt::Display) -> QbdError {
    QbdError::Parse(format!("{context}: {e}"))
}

fn dense_to_matrix(d: &Dense, name: &str) -> Result<Matrix<f64>> {
    if d.is_empty() {
        return Err(QbdError::Parse(format!("{name}: empty block")));
    }
    Matrix::from_rows(d).map_err(|e| parse_err(name, e))
}

fn matrix_to_dense(m: &Matrix<f64>) -> Dense {
    m.to_rows()
}

impl BlockFile {
    fn to_blocks(&self, context: &str) -> Result<BlockSet<f64>> {
        let conv = |v: &[Dense], kind: &str| -> Result<Vec<Matrix<f64>>> {
            v.iter().enumerate().map(|(i, d)| dense_to_matrix(d, &format!("{context}.{kind}[{i}]"))).collect()
        };
        Ok(BlockSet { diag: conv(&self.diag, "diag")?, up: conv(&self.up, "up")?, down: conv(&self.down, "down")? })
    }

    fn from_blocks(b: &BlockSet<f64>) -> Self {
        Self {
            diag: b.diag.iter().map(matrix_to_dense).collect(),
            up: b.up.iter().map(matrix_to_dense).collect(),
            down: b.down.iter().map(matrix_to_dense).collect(),
        }
    }
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| parse_err("model file", e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model files always serialize")
    }

    /// Explicit-block description of a plain model.
    pub fn from_model(model: &QbdModel<f64>) -> Self {
        Self {
            levels: Some(model.top_level()),
            phases: Some(model.phases().to_vec()),
            blocks: Some(BlockFile::from_blocks(model.blocks())),
            ..Default::default()
        }
    }

    /// Explicit-block description of a parameterized model, partials included.
    pub fn from_param_model(pm: &ParamQbdModel<f64>) -> Self {
        let mut file = Self::from_model(pm.base());
        file.partials = pm.params().iter().cloned().zip(pm.partials().iter().map(BlockFile::from_blocks)).collect();
        file
    }

    fn explicit_base(&self) -> Result<QbdModel<f64>> {
        let blocks = self.blocks.as_ref().ok_or_else(|| QbdError::Parse("model file needs `template` or `blocks`".into()))?;
        let blocks = blocks.to_blocks("blocks")?;
        let phases = match &self.phases {
            Some(p) => p.clone(),
            None => blocks.diag.iter().map(Matrix::rows).collect(),
        };
        QbdModel::new(phases, blocks).map_err(|e| parse_err("blocks", e))
    }

    fn check_declared(&self, model: &QbdModel<f64>) -> Result<()> {
        if let Some(l) = self.levels {
            if l != model.top_level() {
                return Err(QbdError::Parse(format!("`levels` is {l} but the model's top level is {}", model.top_level())));
            }
        }
        if let Some(p) = &self.phases {
            if p.as_slice() != model.phases() {
                return Err(QbdError::Parse(format!("`phases` {p:?} disagree with the model's {:?}", model.phases())));
            }
        }
        Ok(())
    }

    /// Expands templates, builds the model and validates it.
    pub fn into_model(&self) -> Result<LoadedModel> {
        let loaded = match &self.template {
            Some(Template::MmppQueue { t, lambda, mu, n }) => {
                let t = dense_to_matrix(t, "template.T")?;
                LoadedModel::Param(build_mmpp_queue(&t, lambda, mu, *n)?)
            }
            Some(Template::TwoClass { lambda1, lambda2, mu1, mu2, n }) => {
                LoadedModel::Param(build_two_class(*lambda1, *lambda2, *mu1, *mu2, *n)?)
            }
            Some(Template::Perturbed { directions, epsilon, names }) => {
                let base = self.explicit_base()?;
                let dirs = directions
                    .iter()
                    .enumerate()
                    .map(|(i, d)| d.to_blocks(&format!("template.directions[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                let pm = build_perturbed(&base, &dirs, epsilon)?;
                match names {
                    Some(names) => {
                        if names.len() != dirs.len() {
                            return Err(QbdError::Parse(format!(
                                "template.names has {} entries for {} directions",
                                names.len(),
                                dirs.len()
                            )));
                        }
                        LoadedModel::Param(ParamQbdModel::new(
                            pm.base().clone(),
                            param_names(names),
                            pm.partials().to_vec(),
                        )?)
                    }
                    None => LoadedModel::Param(pm),
                }
            }
            None => {
                let base = self.explicit_base()?;
                if self.partials.is_empty() {
                    LoadedModel::Plain(base)
                } else {
                    let partials = self
                        .partials
                        .iter()
                        .map(|(name, b)| {
                            let blocks = b.to_blocks(&format!("partials.{name}"))?;
                            blocks.check_shapes(base.phases()).map_err(|e| parse_err(&format!("partials.{name}"), e))?;
                            Ok(blocks)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let names: Vec<String> = self.partials.keys().cloned().collect();
                    LoadedModel::Param(ParamQbdModel::new(base, param_names(&names), partials)?)
                }
            }
        };
        if self.template.is_some() && !self.partials.is_empty() {
            return Err(QbdError::Parse("`partials` cannot be combined with a template".into()));
        }
        self.check_declared(loaded.base())?;
        let diags = match &loaded {
            LoadedModel::Plain(m) => validate(m),
            LoadedModel::Param(p) => validate_param(p),
        };
        if !diags.is_empty() {
            return Err(QbdError::InvalidModel(diags));
        }
        Ok(loaded)
    }
}

pub fn parse_model(text: &str) -> Result<LoadedModel> {
    ModelFile::from_json(text)?.into_model()
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LoadedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| QbdError::Io(format!("{}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| match e {
        QbdError::Parse(m) => QbdError::Parse(format!("{}: {m}", path.display())),
        e => e,
    })
}

pub fn save_model(path: impl AsRef<Path>, model: &LoadedModel) -> Result<()> {
    let path = path.as_ref();
    let file = match model {
        LoadedModel::Plain(m) => ModelFile::from_model(m),
        LoadedModel::Param(p) => ModelFile::from_param_model(p),
    };
    std::fs::write(path, file.to_json() + "\n").map_err(|e| QbdError::Io(format!("{}: {e}", path.display())))
}
