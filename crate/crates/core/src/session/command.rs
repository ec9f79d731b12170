//! Session commands as they appear in logs and on the wire.

use serde::{Deserialize, Serialize};

use crate::camera::OrthoView;
use crate::geom::Point;
use crate::implicit::AnalyticSpec;

/// Where an occupancy field comes from. Resolved when the command that
/// names it is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldRef {
    Analytic(AnalyticSpec),
    /// A baked grid file.
    Grid {
        path: String,
    },
    /// The live mesh at bind time, with falloff as a fraction of its bbox
    /// diagonal.
    Mesh {
        falloff_fraction: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSlot {
    /// Guides coarse refinement.
    Coarse,
    /// Guides detail carving.
    Detail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Command {
    /// Closed side-view curve in the xy plane.
    DrawSilhouette {
        points: Vec<[f64; 2]>,
    },
    Extrude {
        region_stroke: Vec<Point>,
        profile_stroke: Vec<Point>,
        view: OrthoView,
    },
    /// Binds an on-surface curve as a deformation handle; ids count from 0
    /// in creation order.
    AddCurve {
        stroke: Vec<Point>,
    },
    /// One target per handle vertex, or a polyline resampled to that count.
    DeformHandle {
        handle: u32,
        targets: Vec<Point>,
    },
    /// Queues a detail stroke; `field` also rebinds the detail slot.
    Carve {
        stroke: Vec<Point>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        field: Option<FieldRef>,
    },
    /// Refines around every queued detail stroke in one pass.
    CarveCommit,
    /// Fits the whole mesh to the coarse field.
    Refine,
    SetField {
        slot: FieldSlot,
        field: FieldRef,
    },
    /// Smooths around a stroke, or everywhere without one.
    Smooth {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stroke: Option<Vec<Point>>,
    },
    SetSymmetry {
        enabled: bool,
    },
    EnterStage {
        stage: u8,
        #[serde(default)]
        keep_detail_curves: bool,
    },
    Undo,
    Clear,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::DrawSilhouette { .. } => "draw_silhouette",
            Command::Extrude { .. } => "extrude",
            Command::AddCurve { .. } => "add_curve",
            Command::DeformHandle { .. } => "deform_handle",
            Command::Carve { .. } => "carve",
            Command::CarveCommit => "carve_commit",
            Command::Refine => "refine",
            Command::SetField { .. } => "set_field",
            Command::Smooth { .. } => "smooth",
            Command::SetSymmetry { .. } => "set_symmetry",
            Command::EnterStage { .. } => "enter_stage",
            Command::Undo => "undo",
            Command::Clear => "clear",
        }
    }
}

/// A command with its sequence number, one per log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedCommand {
    pub seq: u64,
    #[serde(flatten)]
    pub command: Command,
}
