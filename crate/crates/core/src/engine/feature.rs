use crate::poset::NodeSet;

/// Indicator on the parent set of one node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalIndicator {
    Any,
    Contains(usize),
    Excludes(usize),
    MaxSize(usize),
}

impl LocalIndicator {
    pub fn holds(self, parents: NodeSet) -> bool {
        match self {
            Self::Any => true,
            Self::Contains(u) => parents >> u & 1 == 1,
            Self::Excludes(u) => parents >> u & 1 == 0,
            Self::MaxSize(s) => parents.count_ones() as usize <= s,
        }
    }
}

/// A structural feature `f(A) = prod_v f_v(A_v)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModularFeature {
    local: Vec<LocalIndicator>,
}

impl ModularFeature {
    pub fn all(n: usize) -> Self {
        Self {
            local: vec![LocalIndicator::Any; n],
        }
    }

    /// The arc `u → v`.
    pub fn arc(n: usize, u: usize, v: usize) -> Self {
        Self::all(n).with(v, LocalIndicator::Contains(u))
    }

    pub fn empty_graph(n: usize) -> Self {
        Self {
            local: vec![LocalIndicator::MaxSize(0); n],
        }
    }

    pub fn with(mut self, v: usize, indicator: LocalIndicator) -> Self {
        self.local[v] = indicator;
        self
    }

    pub fn n(&self) -> usize {
        self.local.len()
    }

    pub fn local(&self, v: usize) -> LocalIndicator {
        self.local[v]
    }

    pub fn holds_local(&self, v: usize, parents: NodeSet) -> bool {
        self.local[v].holds(parents)
    }

    /// Value on a whole graph given as per-node parent sets.
    pub fn holds(&self, parents: &[NodeSet]) -> bool {
        parents.iter().enumerate().all(|(v, &s)| self.holds_local(v, s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicators() {
        let f = ModularFeature::arc(3, 0, 2);
        assert!(f.holds(&[0, 0, 0b001]));
        assert!(!f.holds(&[0, 0, 0b010]));
        let e = ModularFeature::empty_graph(2);
        assert!(e.holds(&[0, 0]));
        assert!(!e.holds(&[0b10, 0]));
        assert!(LocalIndicator::Excludes(1).holds(0b101));
    }
}
