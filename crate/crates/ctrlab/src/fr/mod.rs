//! Feature-refinement modules: shape-preserving transforms
//! `E [B,F,D] -> E_fr [B,F,D]` inserted between the embedding and
//! interaction layers.
//!
//! Selection modules also expose the weight matrix they apply (`[B,F,1]`
//! vector-level or `[B,F,D]` bit-level); transformation modules expose
//! none. [`descriptor::declared`] carries each module's claimed taxonomy
//! row; the probe suite measures the same properties at runtime.

pub mod common;
pub mod descriptor;

mod dfen;
mod drm;
mod fen;
mod frnet;
mod fwn;
mod gates;
mod gfrl;
mod pffn;
mod selfatt;
mod senet;
mod skip;
mod tce;

pub use dfen::Dfen;
pub use drm::Drm;
pub use fen::Fen;
pub use frnet::FrNet;
pub use fwn::Fwn;
pub use gates::Gate;
pub use gfrl::Gfrl;
pub use pffn::Pffn;
pub use selfatt::SelfAtt;
pub use senet::Senet;
pub use skip::Skip;
pub use tce::Tce;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::params::{FwdCtx, ParamId, ParamStore};
use crate::rng::ChaCha20Rng;
use crate::tensor::Var;
use descriptor::{declared, FrDescriptor, FrKind, WeightActivation};

/// Refined embeddings plus the applied weight matrix, when one exists.
pub struct FrOutput<'t> {
    pub refined: Var<'t>,
    pub weights: Option<Var<'t>>,
}

/// The shape-preserving refine contract. Implementations validate the
/// input against their construction-time `(F, D)` and return a refined
/// matrix of identical shape, differentiable in `E` and all parameters.
pub trait FrModule {
    fn kind(&self) -> FrKind;

    /// Construction-time `(F, D)`.
    fn input_shape(&self) -> (usize, usize);

    fn forward<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<FrOutput<'t>>;

    fn param_ids(&self) -> Vec<ParamId>;

    /// The activation the forward pass actually applies to its weights;
    /// `None` for transformation modules.
    fn weight_activation(&self) -> Option<WeightActivation>;

    fn descriptor(&self) -> FrDescriptor {
        declared(self.kind())
    }

    fn refine<'t>(&self, ctx: &FwdCtx<'t, '_>, e: Var<'t>) -> Result<Var<'t>> {
        Ok(self.forward(ctx, e)?.refined)
    }

    /// Number of parameters this module adds on top of the embedding table.
    fn added_param_count(&self, store: &ParamStore) -> u64 {
        self.param_ids().iter().map(|id| store.numel(*id) as u64).sum()
    }
}

/// Hyperparameters shared by the refinement modules.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FrConfig {
    /// Hidden width `m`.
    pub hidden: usize,
    /// Hidden depth `L_d`.
    pub depth: usize,
    /// Attention heads `h`.
    pub heads: usize,
    /// Per-head dimension `d_K`.
    pub head_dim: usize,
    /// Dropout rate inside DNN tails (train mode only).
    pub dropout: f64,
}

impl FrConfig {
    /// Per-module defaults: TCE-based modules use `m = 32` (the audited
    /// configuration); the rest use `m = 64`, `L_d = 1`, `h = 2`,
    /// `d_K = 16`, dropout `0.5`.
    pub fn default_for(kind: FrKind) -> Self {
        let hidden = match kind {
            FrKind::Tce | FrKind::Pffn => 32,
            _ => 64,
        };
        FrConfig { hidden, depth: 1, heads: 2, head_dim: 16, dropout: 0.5 }
    }
}

/// Construct a module over `(F, D)` embeddings. Parameter names are
/// prefixed so two instances can coexist in one store.
pub fn build_fr(
    kind: FrKind,
    cfg: &FrConfig,
    f: usize,
    d: usize,
    store: &mut ParamStore,
    prefix: &str,
    rng: &mut ChaCha20Rng,
) -> Box<dyn FrModule> {
    let p = format!("{prefix}.{}", kind.ident().to_ascii_lowercase());
    match kind {
        FrKind::Skip => Box::new(Skip::new(f, d)),
        FrKind::Fen => Box::new(Fen::new(store, &p, f, d, cfg, rng)),
        FrKind::Senet => Box::new(Senet::new(store, &p, f, d, rng)),
        FrKind::Fwn => Box::new(Fwn::new(store, &p, f, d, rng)),
        FrKind::Dfen => Box::new(Dfen::new(store, &p, f, d, cfg, rng)),
        FrKind::Drm => Box::new(Drm::new(store, &p, f, d, rng)),
        FrKind::VGate => Box::new(Gate::vector(store, &p, f, d, rng)),
        FrKind::BGate => Box::new(Gate::bit(store, &p, f, d, rng)),
        FrKind::SelfAtt => Box::new(SelfAtt::new(store, &p, f, d, cfg, rng)),
        FrKind::Tce => Box::new(Tce::new(store, &p, f, d, cfg.hidden, rng)),
        FrKind::Pffn => Box::new(Pffn::new(store, &p, f, d, cfg, rng)),
        FrKind::Gfrl => Box::new(Gfrl::new(store, &p, f, d, cfg, rng)),
        FrKind::FrNetV => Box::new(FrNet::vector(store, &p, f, d, cfg, rng)),
        FrKind::FrNetB => Box::new(FrNet::bit(store, &p, f, d, cfg, rng)),
    }
}
