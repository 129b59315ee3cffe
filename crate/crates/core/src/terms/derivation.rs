use std::collections::HashMap;
use std::fmt;

use super::{Context, GlobalType, Name, Process};

/// Rules of the synchronous forwarder logic and its runtime cut extension.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum SyncRule {
    Ax,
    One,
    Bot,
    Tensor,
    Par,
    With,
    PlusL,
    PlusR,
    Bang,
    Query,
    Cut,
    CutTensorPar,
    CutPlusWith1L,
    CutPlusWith1R,
    CutPlusWith2L,
    CutPlusWith2R,
    CutBangQuery1,
    CutBangQuery2,
}

/// Rules of plain classical linear logic with simple exponentials.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CllRule {
    Axiom,
    One,
    Bot,
    Tensor,
    Par,
    PlusL,
    PlusR,
    With,
    Query,
    Bang,
    Cut,
}

/// Coherence rules.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CoherenceRule {
    Axiom,
    OneBot,
    TensorPar,
    PlusWith,
    QueryBang,
}

/// Two-sided compound rules of the completeness construction.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum CompoundRule {
    PlusWithPartial,
    PlusWithFull,
    QueryBangPartial,
    QueryBangFull,
    TensorParPartial,
    TensorParFull,
    OneBotPartial,
    OneBotFull,
}

impl CompoundRule {
    pub fn is_full(self) -> bool {
        matches!(
            self,
            CompoundRule::PlusWithFull
                | CompoundRule::QueryBangFull
                | CompoundRule::TensorParFull
                | CompoundRule::OneBotFull
        )
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Rule {
    Sync(SyncRule),
    Cll(CllRule),
    Coherence(CoherenceRule),
    Compound(CompoundRule),
}

impl Rule {
    pub fn label(&self) -> String {
        match self {
            Rule::Sync(r) => format!("{:?}", r),
            Rule::Cll(r) => format!("{:?}", r),
            Rule::Coherence(r) => format!("{:?}", r),
            Rule::Compound(r) => format!("{:?}", r),
        }
    }

    pub fn system_name(&self) -> &'static str {
        match self {
            Rule::Sync(_) => "sync",
            Rule::Cll(_) => "cll",
            Rule::Coherence(_) => "coherence",
            Rule::Compound(_) => "compound",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Which judgement family a compound-system node belongs to.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum System {
    /// The base synchronous forwarder logic.
    Base,
    /// Extended with the ⊕& and ?! compound rules.
    WithBang,
    /// Further extended with the ⊗⅋ and 1⊥ compound rules.
    TensorOne,
}

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::Base => "base",
            System::WithBang => "with-bang",
            System::TensorOne => "tensor-one",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Judgement {
    Sync { process: Process, context: Context },
    Cll { process: Process, context: Context },
    Coherence { global: GlobalType, context: Context },
    Compound { process: Process, context: Context, system: System },
}

impl Judgement {
    pub fn process(&self) -> Option<&Process> {
        match self {
            Judgement::Sync { process, .. }
            | Judgement::Cll { process, .. }
            | Judgement::Compound { process, .. } => Some(process),
            Judgement::Coherence { .. } => None,
        }
    }

    pub fn context(&self) -> &Context {
        match self {
            Judgement::Sync { context, .. }
            | Judgement::Cll { context, .. }
            | Judgement::Coherence { context, .. }
            | Judgement::Compound { context, .. } => context,
        }
    }
}

/// An explicit proof tree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Derivation {
    pub rule: Rule,
    pub conclusion: Judgement,
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn new(rule: Rule, conclusion: Judgement, premises: Vec<Derivation>) -> Derivation {
        Derivation { rule, conclusion, premises }
    }

    pub fn sync(rule: SyncRule, process: Process, context: Context, premises: Vec<Derivation>) -> Derivation {
        Derivation::new(Rule::Sync(rule), Judgement::Sync { process, context }, premises)
    }

    /// The process of the conclusion.
    ///
    /// Panics on coherence derivations.
    pub fn process(&self) -> &Process {
        self.conclusion.process().expect("coherence derivations carry no process")
    }

    pub fn context(&self) -> &Context {
        self.conclusion.context()
    }

    pub fn height(&self) -> usize {
        1 + self.premises.iter().map(|p| p.height()).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(|p| p.size()).sum::<usize>()
    }

    /// All rule labels, pre-order.
    pub fn rules(&self) -> Vec<Rule> {
        let mut out = vec![self.rule];
        for p in &self.premises {
            out.extend(p.rules());
        }
        out
    }

    /// Renames free endpoint names throughout.
    pub fn rename(&self, map: &HashMap<Name, Name>) -> Derivation {
        let f = |n: &Name| map.get(n).cloned().unwrap_or_else(|| n.clone());
        let conclusion = match &self.conclusion {
            Judgement::Sync { process, context } => {
                Judgement::Sync { process: process.rename(map), context: context.rename(f) }
            }
            Judgement::Cll { process, context } => {
                Judgement::Cll { process: process.rename(map), context: context.rename(f) }
            }
            Judgement::Coherence { global, context } => {
                Judgement::Coherence { global: global.rename(map), context: context.rename(f) }
            }
            Judgement::Compound { process, context, system } => Judgement::Compound {
                process: process.rename(map),
                context: context.rename(f),
                system: *system,
            },
        };
        Derivation { rule: self.rule, conclusion, premises: self.premises.iter().map(|p| p.rename(map)).collect() }
    }

    /// Replaces the conclusion process and context, keeping the judgement kind.
    pub fn with_conclusion(&self, process: Process, context: Context) -> Derivation {
        let conclusion = match &self.conclusion {
            Judgement::Sync { .. } => Judgement::Sync { process, context },
            Judgement::Cll { .. } => Judgement::Cll { process, context },
            Judgement::Compound { system, .. } => Judgement::Compound { process, context, system: *system },
            Judgement::Coherence { .. } => panic!("coherence judgements carry no process"),
        };
        Derivation { rule: self.rule, conclusion, premises: self.premises.clone() }
    }
}
