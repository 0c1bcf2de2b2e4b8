//! Declared properties of each feature-refinement module: the information
//! types it consumes, context awareness, weight granularity/activation/range,
//! linearity class, and generation paradigm. The probe suite measures the
//! same properties executably and checks them against these declarations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum FrKind {
    Skip,
    Fen,
    Senet,
    Fwn,
    Dfen,
    Drm,
    VGate,
    BGate,
    SelfAtt,
    Tce,
    Pffn,
    Gfrl,
    FrNetV,
    FrNetB,
}

impl FrKind {
    /// Every module, identity baseline included.
    pub const ALL: [FrKind; 14] = [
        FrKind::Skip,
        FrKind::Fen,
        FrKind::Senet,
        FrKind::Fwn,
        FrKind::Dfen,
        FrKind::Drm,
        FrKind::VGate,
        FrKind::BGate,
        FrKind::SelfAtt,
        FrKind::Tce,
        FrKind::Pffn,
        FrKind::Gfrl,
        FrKind::FrNetV,
        FrKind::FrNetB,
    ];

    /// The 13 refinement modules under evaluation (SKIP is the baseline).
    pub const EVALUATED: [FrKind; 13] = [
        FrKind::Fen,
        FrKind::Senet,
        FrKind::Fwn,
        FrKind::Dfen,
        FrKind::Drm,
        FrKind::VGate,
        FrKind::BGate,
        FrKind::SelfAtt,
        FrKind::Tce,
        FrKind::Pffn,
        FrKind::Gfrl,
        FrKind::FrNetV,
        FrKind::FrNetB,
    ];

    /// Hyphen-free identifier (model names, config values, filenames).
    pub fn ident(&self) -> &'static str {
        match self {
            FrKind::Skip => "SKIP",
            FrKind::Fen => "FEN",
            FrKind::Senet => "SENET",
            FrKind::Fwn => "FWN",
            FrKind::Dfen => "DFEN",
            FrKind::Drm => "DRM",
            FrKind::VGate => "VGate",
            FrKind::BGate => "BGate",
            FrKind::SelfAtt => "SelfAtt",
            FrKind::Tce => "TCE",
            FrKind::Pffn => "PFFN",
            FrKind::Gfrl => "GFRL",
            FrKind::FrNetV => "FRNetV",
            FrKind::FrNetB => "FRNetB",
        }
    }

    /// Display spelling (keeps the hyphoned FRNet variants).
    pub fn display(&self) -> &'static str {
        match self {
            FrKind::FrNetV => "FRNet-V",
            FrKind::FrNetB => "FRNet-B",
            other => other.ident(),
        }
    }

    /// Case- and hyphen-insensitive parse.
    pub fn parse(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_ascii_lowercase();
        for k in Self::ALL {
            if k.ident().to_ascii_lowercase() == norm {
                return Ok(k);
            }
        }
        Err(Error::Config(format!("unknown FR module '{s}'")))
    }
}

/// Which information sources a module taps.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default, Serialize, Deserialize)]
pub struct InfoTypes {
    pub intra_field: bool,
    pub cross_feature: bool,
    pub contextual: bool,
    pub other: bool,
}

impl InfoTypes {
    const fn new(if_: bool, cf: bool, ci: bool, oi: bool) -> Self {
        InfoTypes { intra_field: if_, cross_feature: cf, contextual: ci, other: oi }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Granularity {
    Vector,
    Bit,
    None,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum WeightActivation {
    Softmax,
    Sigmoid,
    Relu,
    Identity,
    None,
}

impl WeightActivation {
    /// Range class implied by the activation.
    pub fn range(&self) -> WeightRange {
        match self {
            WeightActivation::Softmax | WeightActivation::Sigmoid => WeightRange::ZeroOne,
            WeightActivation::Relu => WeightRange::ZeroInf,
            WeightActivation::Identity => WeightRange::Unbounded,
            WeightActivation::None => WeightRange::None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum WeightRange {
    /// `[0, 1]`
    ZeroOne,
    /// `[0, inf)`
    ZeroInf,
    /// `(-inf, inf)`
    Unbounded,
    None,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Paradigm {
    Selection,
    Transformation,
    Composite,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct FrDescriptor {
    pub kind: FrKind,
    pub info: InfoTypes,
    pub context_aware: bool,
    pub granularity: Granularity,
    pub activation: WeightActivation,
    pub range: WeightRange,
    pub non_linearity: bool,
    pub paradigm: Paradigm,
}

/// Declared descriptor per module. The 13 evaluated rows mirror the
/// published taxonomy exactly; SKIP is the degenerate selection (constant
/// unit weights).
pub fn declared(kind: FrKind) -> FrDescriptor {
    use FrKind::*;
    use Granularity as G;
    use Paradigm as P;
    use WeightActivation as A;
    use WeightRange as R;
    let (info, ca, g, a, r, nl, p) = match kind {
        Skip => (InfoTypes::new(false, false, false, false), false, G::Vector, A::Identity, R::Unbounded, false, P::Selection),
        Fen => (InfoTypes::new(false, false, true, false), true, G::Vector, A::Softmax, R::ZeroOne, false, P::Selection),
        Senet => (InfoTypes::new(false, false, false, true), true, G::Vector, A::Relu, R::ZeroInf, false, P::Selection),
        Fwn => (InfoTypes::new(true, false, false, false), false, G::Bit, A::Relu, R::ZeroInf, false, P::Selection),
        Dfen => (InfoTypes::new(false, true, true, false), true, G::Vector, A::Relu, R::ZeroInf, false, P::Selection),
        Drm => (InfoTypes::new(false, false, false, true), true, G::None, A::None, R::None, true, P::Transformation),
        VGate => (InfoTypes::new(true, false, false, false), false, G::Vector, A::Identity, R::Unbounded, false, P::Selection),
        BGate => (InfoTypes::new(true, false, false, false), false, G::Bit, A::Identity, R::Unbounded, false, P::Selection),
        SelfAtt => (InfoTypes::new(false, true, false, false), true, G::None, A::None, R::None, true, P::Transformation),
        Tce => (InfoTypes::new(false, false, true, false), true, G::Bit, A::Identity, R::Unbounded, true, P::Selection),
        Pffn => (InfoTypes::new(true, false, true, false), true, G::None, A::None, R::None, true, P::Transformation),
        Gfrl => (InfoTypes::new(true, false, true, false), true, G::Bit, A::Sigmoid, R::ZeroOne, true, P::Composite),
        FrNetV => (InfoTypes::new(false, true, true, false), true, G::Vector, A::Sigmoid, R::ZeroOne, true, P::Composite),
        FrNetB => (InfoTypes::new(false, true, true, false), true, G::Bit, A::Sigmoid, R::ZeroOne, true, P::Composite),
    };
    FrDescriptor {
        kind,
        info,
        context_aware: ca,
        granularity: g,
        activation: a,
        range: r,
        non_linearity: nl,
        paradigm: p,
    }
}
