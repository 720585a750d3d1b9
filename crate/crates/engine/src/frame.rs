//! The attacker's view of a run: restricted names plus a substitution from
//! handle variables to the ground normal-form terms output so far.

use spv_calculus::{NameId, Subst, Symtab, Term, VarId};
use std::collections::BTreeSet;

/// `ν ñ . {t₁/x₁, …, tₖ/xₖ}` — what the adversary has observed. Handles are
/// ordinary variables drawn fresh from the symbol table, so they can never
/// collide with model variables. Entries only grow.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Frame {
    pub restricted: BTreeSet<NameId>,
    entries: Vec<(VarId, Term)>,
}

impl Frame {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn restrict(&mut self, n: NameId) {
        self.restricted.insert(n);
    }

    /// Records an observed output under a fresh handle and returns it. The
    /// term must already be ground and in normal form.
    pub fn extend(&mut self, value: Term, tab: &mut Symtab) -> VarId {
        let handle = tab.fresh_var(&format!("w{}", self.entries.len() + 1));
        self.entries.push((handle, value));
        handle
    }

    /// Records an observed output under a handle the caller allocated. Used
    /// for paired frames that must share their handle variables.
    pub fn push_entry(&mut self, handle: VarId, value: Term) {
        self.entries.push((handle, value));
    }

    pub fn entries(&self) -> &[(VarId, Term)] {
        &self.entries
    }

    pub fn domain(&self) -> impl Iterator<Item = VarId> + '_ {
        self.entries.iter().map(|(h, _)| *h)
    }

    pub fn value_of(&self, handle: VarId) -> Option<&Term> {
        self.entries
            .iter()
            .find(|(h, _)| *h == handle)
            .map(|(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The frame as a substitution, for evaluating recipes.
    pub fn as_subst(&self) -> Subst {
        self.entries.iter().cloned().collect()
    }
}
