//! Feature-interaction backbones and their scalar prediction heads:
//! FM, CrossNet, CrossNetV2, a plain MLP tower, and AFN's logarithmic
//! transformation layer.

mod afn;
mod crossnet;
mod fm;
mod mlp;

pub use afn::Afn;
pub use crossnet::{CrossNet, CrossNetV2};
pub use fm::Fm;
pub use mlp::MlpTower;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum BackboneKind {
    Fm,
    Cn,
    Cn2,
    Dnn,
    Afn,
}

impl BackboneKind {
    pub const ALL: [BackboneKind; 5] =
        [BackboneKind::Fm, BackboneKind::Cn, BackboneKind::Cn2, BackboneKind::Dnn, BackboneKind::Afn];

    pub fn ident(&self) -> &'static str {
        match self {
            BackboneKind::Fm => "FM",
            BackboneKind::Cn => "CN",
            BackboneKind::Cn2 => "CN2",
            BackboneKind::Dnn => "DNN",
            BackboneKind::Afn => "AFN",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "FM" => Ok(BackboneKind::Fm),
            "CN" | "CROSSNET" => Ok(BackboneKind::Cn),
            "CN2" | "CROSSNETV2" => Ok(BackboneKind::Cn2),
            "DNN" | "MLP" => Ok(BackboneKind::Dnn),
            "AFN" => Ok(BackboneKind::Afn),
            other => Err(Error::Config(format!("unknown backbone '{other}'"))),
        }
    }

    /// FM consumes the embedding table's first-order weights and bias.
    pub fn needs_first_order(&self) -> bool {
        matches!(self, BackboneKind::Fm)
    }
}

/// Backbone hyperparameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BackboneConfig {
    /// Cross-layer depth for CN / CN2.
    pub cross_depth: usize,
    /// Hidden widths of the DNN tower (also AFN's tail).
    pub mlp_widths: Vec<usize>,
    pub dropout: f64,
    /// AFN logarithmic neurons.
    pub log_neurons: usize,
}

impl Default for BackboneConfig {
    fn default() -> Self {
        BackboneConfig { cross_depth: 3, mlp_widths: vec![400, 400, 400], dropout: 0.5, log_neurons: 64 }
    }
}

/// First-order term and global bias an FM-style backbone folds into its
/// logit; absent for backbones that do not use them.
pub struct FmExtras<'t> {
    pub first_order_sum: Option<Var<'t>>,
    pub bias: Option<Var<'t>>,
}

impl FmExtras<'_> {
    pub fn none() -> Self {
        FmExtras { first_order_sum: None, bias: None }
    }
}

/// A feature-interaction network plus its scalar head: refined embeddings
/// `[B,F,D]` to one logit per instance `[B]`.
pub trait Backbone {
    fn kind(&self) -> BackboneKind;

    fn logit<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>, extras: &FmExtras<'t>) -> Result<Var<'t>>;

    fn param_ids(&self) -> Vec<ParamId>;

    fn param_count(&self, store: &ParamStore) -> u64 {
        self.param_ids().iter().map(|id| store.numel(*id) as u64).sum()
    }
}

pub fn build_backbone(
    kind: BackboneKind,
    cfg: &BackboneConfig,
    f: usize,
    d: usize,
    store: &mut ParamStore,
    prefix: &str,
    rng: &mut ChaCha20Rng,
) -> Box<dyn Backbone> {
    let p = format!("{prefix}.{}", kind.ident().to_ascii_lowercase());
    match kind {
        BackboneKind::Fm => Box::new(Fm::new(f, d)),
        BackboneKind::Cn => Box::new(CrossNet::new(store, &p, f * d, cfg.cross_depth, rng)),
        BackboneKind::Cn2 => Box::new(CrossNetV2::new(store, &p, f * d, cfg.cross_depth, rng)),
        BackboneKind::Dnn => Box::new(MlpTower::new(store, &p, f * d, &cfg.mlp_widths, cfg.dropout, rng)),
        BackboneKind::Afn => Box::new(Afn::new(store, &p, f, d, cfg.log_neurons, &cfg.mlp_widths, cfg.dropout, rng)),
    }
}
