//! Structured-text form of [`OperatorSpec`].
//!
//! An operator is a table with a `kind` key; sets are nested tables with
//! their own `kind`. In TOML:
//!
//! ```toml
//! kind = "composition"
//!
//! [[ops]]
//! kind = "projector"
//! set = { kind = "epi_exp" }
//!
//! [[ops]]
//! kind = "projector"
//! set = { kind = "ball", center = [0.0, 0.0], radius = 1.0 }
//! ```
//!
//! Kinds: `projector { set }`, `prox_abs { scale }`,
//! `prox_quadratic { matrix = [[..], ..] }`, `translation { v }`,
//! `composition { ops }`, `convex_combination { weights, ops }`,
//! `negation_control`. Any operator may carry
//! `claimed_firmly_nonexpansive = true|false` to override its default claim.
//! Parsing runs the same validation as the constructors.

use serde::{Deserialize, Serialize};

use super::{OperatorKind, OperatorSpec, SetSpec};
use crate::error::Error;
use crate::linalg::{Point, Weights};

#[derive(Serialize, Deserialize)]
pub(super) struct RawOperatorSpec {
    #[serde(flatten)]
    kind: RawKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    claimed_firmly_nonexpansive: Option<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawKind {
    Projector { set: SetSpec },
    ProxAbs { scale: f64 },
    ProxQuadratic { matrix: Vec<Vec<f64>> },
    Translation { v: Point },
    Composition { ops: Vec<OperatorSpec> },
    ConvexCombination { weights: Weights, ops: Vec<OperatorSpec> },
    NegationControl,
}

impl TryFrom<RawOperatorSpec> for OperatorSpec {
    type Error = Error;

    fn try_from(raw: RawOperatorSpec) -> Result<Self, Error> {
        let op = match raw.kind {
            RawKind::Projector { set } => OperatorSpec::projector(set)?,
            RawKind::ProxAbs { scale } => OperatorSpec::prox_abs(scale)?,
            RawKind::ProxQuadratic { matrix } => OperatorSpec::prox_quadratic(matrix)?,
            RawKind::Translation { v } => OperatorSpec::translation(v),
            RawKind::Composition { ops } => OperatorSpec::compose(ops)?,
            RawKind::ConvexCombination { weights, ops } => {
                OperatorSpec::convex_combine(weights, ops)?
            }
            RawKind::NegationControl => OperatorSpec::negation(),
        };
        Ok(match raw.claimed_firmly_nonexpansive {
            Some(claim) => op.with_claim(claim),
            None => op,
        })
    }
}

impl From<OperatorSpec> for RawOperatorSpec {
    fn from(op: OperatorSpec) -> Self {
        let claimed_firmly_nonexpansive = op.claim_override();
        let kind = match op.kind {
            OperatorKind::Projector(set) => RawKind::Projector { set },
            OperatorKind::ProxAbs { scale } => RawKind::ProxAbs { scale },
            OperatorKind::ProxQuadratic(q) => RawKind::ProxQuadratic { matrix: q.rows() },
            OperatorKind::Translation(v) => RawKind::Translation { v },
            OperatorKind::Composition(ops) => RawKind::Composition { ops },
            OperatorKind::ConvexCombination(weights, ops) => {
                RawKind::ConvexCombination { weights, ops }
            }
            OperatorKind::NegationControl => RawKind::NegationControl,
        };
        RawOperatorSpec {
            kind,
            claimed_firmly_nonexpansive,
        }
    }
}
