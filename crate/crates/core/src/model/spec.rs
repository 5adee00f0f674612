//! Architecture descriptions.

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::graph::AdjacencyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    /// Stacked learnable-filter graph convolutions plus feedforward mixing.
    GcnnRegDdgf,
    /// Same convolution stack applied per lag, followed by an LSTM over the
    /// lag dimension and a dense head.
    GcnnRecDdgf,
    /// Graph convolutions with a frozen, pre-built filter.
    GcnnFixed(AdjacencyKind),
    /// Per-station feedforward net with shared weights; identical to
    /// `GcnnFixed(Identity)` by construction.
    Mlp,
    /// Per-station LSTM over the raw lag sequence.
    Lstm,
    HistoricalAverage,
    Lasso,
}

impl Architecture {
    /// Trained by gradient descent (as opposed to a closed-form fit).
    pub fn is_gradient_trained(&self) -> bool {
        !matches!(self, Architecture::HistoricalAverage | Architecture::Lasso)
    }

    pub fn uses_recurrence(&self) -> bool {
        matches!(self, Architecture::GcnnRecDdgf | Architecture::Lstm)
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Architecture::GcnnRegDdgf => write!(f, "gcnn-reg-ddgf"),
            Architecture::GcnnRecDdgf => write!(f, "gcnn-rec-ddgf"),
            Architecture::GcnnFixed(kind) => write!(f, "gcnn-{kind}"),
            Architecture::Mlp => write!(f, "mlp"),
            Architecture::Lstm => write!(f, "lstm"),
            Architecture::HistoricalAverage => write!(f, "ha"),
            Architecture::Lasso => write!(f, "lasso"),
        }
    }
}

/// Everything needed to build a model's parameter set.
///
/// `widths` runs from the input layer to the output layer. For the
/// feedforward-style nets it is `[c0, hidden..., 1]`; for the recurrent
/// nets it describes the per-lag convolution stack `[1, ..., F]` (just
/// `[1]` for the plain LSTM baseline) and `lstm_hidden` sets the cell size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub widths: Vec<usize>,
    pub lstm_hidden: Option<usize>,
    pub hidden_activation: ActivationKind,
    /// L1 penalty for the lasso baseline.
    pub lasso_lambda: Option<f64>,
}

impl ModelSpec {
    pub fn gcnn_reg(c0: usize, hidden: &[usize]) -> Self {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(c0);
        widths.extend_from_slice(hidden);
        widths.push(1);
        ModelSpec {
            architecture: Architecture::GcnnRegDdgf,
            widths,
            lstm_hidden: None,
            hidden_activation: ActivationKind::Relu,
            lasso_lambda: None,
        }
    }

    pub fn gcnn_fixed(kind: AdjacencyKind, c0: usize, hidden: &[usize]) -> Self {
        ModelSpec {
            architecture: Architecture::GcnnFixed(kind),
            ..ModelSpec::gcnn_reg(c0, hidden)
        }
    }

    pub fn mlp(c0: usize, hidden: &[usize]) -> Self {
        ModelSpec {
            architecture: Architecture::Mlp,
            ..ModelSpec::gcnn_reg(c0, hidden)
        }
    }

    /// Recurrent DDGF net: `conv_hidden` lists the per-lag convolution
    /// widths after the scalar input, e.g. `&[8]` maps each lag 1 -> 8.
    pub fn gcnn_rec(conv_hidden: &[usize], lstm_hidden: usize) -> Self {
        let mut widths = Vec::with_capacity(conv_hidden.len() + 1);
        widths.push(1);
        widths.extend_from_slice(conv_hidden);
        ModelSpec {
            architecture: Architecture::GcnnRecDdgf,
            widths,
            lstm_hidden: Some(lstm_hidden),
            hidden_activation: ActivationKind::Relu,
            lasso_lambda: None,
        }
    }

    pub fn lstm(lstm_hidden: usize) -> Self {
        ModelSpec {
            architecture: Architecture::Lstm,
            widths: vec![1],
            lstm_hidden: Some(lstm_hidden),
            hidden_activation: ActivationKind::Relu,
            lasso_lambda: None,
        }
    }

    pub fn historical_average() -> Self {
        ModelSpec {
            architecture: Architecture::HistoricalAverage,
            widths: Vec::new(),
            lstm_hidden: None,
            hidden_activation: ActivationKind::Identity,
            lasso_lambda: None,
        }
    }

    pub fn lasso(lambda: f64) -> Self {
        ModelSpec {
            architecture: Architecture::Lasso,
            widths: Vec::new(),
            lstm_hidden: None,
            hidden_activation: ActivationKind::Identity,
            lasso_lambda: Some(lambda),
        }
    }

    /// Input window length expected by this architecture, when fixed by the
    /// spec (feedforward nets consume all lags at once).
    pub fn expected_c0(&self) -> Option<usize> {
        match self.architecture {
            Architecture::GcnnRegDdgf | Architecture::GcnnFixed(_) | Architecture::Mlp => {
                self.widths.first().copied()
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.architecture {
            Architecture::GcnnRegDdgf | Architecture::GcnnFixed(_) | Architecture::Mlp => {
                if self.widths.len() < 2 {
                    return Err(Error::InvalidConfig(
                        "feedforward specs need at least input and output widths".into(),
                    ));
                }
                if *self.widths.last().unwrap() != 1 {
                    return Err(Error::InvalidConfig(
                        "final width must be 1 (scalar next-hour demand per station)".into(),
                    ));
                }
                if self.widths.iter().any(|w| *w == 0) {
                    return Err(Error::InvalidConfig("layer widths must be positive".into()));
                }
            }
            Architecture::GcnnRecDdgf | Architecture::Lstm => {
                if self.widths.first() != Some(&1) {
                    return Err(Error::InvalidConfig(
                        "recurrent specs consume one lag at a time; widths must start at 1".into(),
                    ));
                }
                if self.widths.iter().any(|w| *w == 0) {
                    return Err(Error::InvalidConfig("layer widths must be positive".into()));
                }
                match self.lstm_hidden {
                    Some(u) if u > 0 => {}
                    _ => {
                        return Err(Error::InvalidConfig(
                            "recurrent specs need a positive lstm_hidden".into(),
                        ))
                    }
                }
                if self.architecture == Architecture::Lstm && self.widths != vec![1] {
                    return Err(Error::InvalidConfig(
                        "the plain lstm baseline takes widths [1]".into(),
                    ));
                }
            }
            Architecture::HistoricalAverage => {}
            Architecture::Lasso => match self.lasso_lambda {
                Some(l) if l >= 0.0 => {}
                _ => {
                    return Err(Error::InvalidConfig(
                        "lasso specs need a non-negative lambda".into(),
                    ))
                }
            },
        }
        Ok(())
    }
}
