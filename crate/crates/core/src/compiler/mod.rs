//! Lowering of learning events to the symbolic model, grounding against
//! loaded data, and model export.

mod compile;
mod emit;
mod ground;
mod ir;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialect::{CreateEvent, CreateTable, CreateView, Ident, Statement};

pub use compile::{compile_event, indicator_guard, resolve_monitor_view, table_role, MonitorView, TableRole};
pub use emit::{emit_milp, emit_opl, parse_lp_rows, LpRow, OplModel};
pub use ground::{
    ground, DataStore, GroundConfig, GroundInterval, GroundInstance, IntervalKind, RoleNames, SupplyRow,
};
pub use ir::*;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("unresolved reference: {0}")]
    UnresolvedReference(String),
    #[error("objective is not a positive multiple of a per-period parameter: {0}")]
    NonLinearObjective(String),
    #[error("unsupported guard shape: {0}")]
    UnsupportedGuardShape(String),
    #[error("unsupported view shape: {0}")]
    UnsupportedViewShape(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroundError {
    #[error("missing series {0}")]
    MissingSeries(String),
    #[error("calendar gap: {0}")]
    CalendarGap(String),
    #[error("unsupported constraint {id}: {reason}")]
    UnsupportedConstraint { id: String, reason: String },
    #[error("only MINIMIZE objectives are solved")]
    Maximize,
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmitError {
    #[error("big-M {m} is below the maximum demand {max_demand}")]
    BadBigM { m: f64, max_demand: f64 },
}

/// Declared tables, views and events, keyed case-insensitively by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub tables: Vec<CreateTable>,
    pub views: Vec<CreateView>,
    pub events: Vec<CreateEvent>,
}

impl Catalog {
    pub fn from_statements<'a>(stmts: impl IntoIterator<Item = &'a Statement>) -> Self {
        let mut c = Catalog::default();
        for s in stmts {
            c.define(s);
        }
        c
    }

    /// Adds or replaces a definition. A name is bound to at most one
    /// table or view. Returns false for statements that define nothing.
    pub fn define(&mut self, stmt: &Statement) -> bool {
        match stmt {
            Statement::CreateTable(t) => {
                self.drop_relation(&t.name);
                self.tables.push(t.clone());
            }
            Statement::CreateView(v) => {
                self.drop_relation(&v.name);
                self.views.push(v.clone());
            }
            Statement::CreateEvent(e) => {
                self.events.retain(|x| x.name != e.name);
                self.events.push(e.clone());
            }
            Statement::Monitor { .. } | Statement::Execute { .. } => return false,
        }
        true
    }

    fn drop_relation(&mut self, name: &Ident) {
        self.tables.retain(|t| t.name != *name);
        self.views.retain(|v| v.name != *name);
    }

    pub fn table(&self, name: &str) -> Option<&CreateTable> {
        self.tables.iter().find(|t| t.name.is(name))
    }

    pub fn view(&self, name: &str) -> Option<&CreateView> {
        self.views.iter().find(|v| v.name.is(name))
    }

    pub fn event(&self, name: &str) -> Option<&CreateEvent> {
        self.events.iter().find(|e| e.name.is(name))
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty() && self.views.is_empty() && self.events.is_empty()
    }
}
