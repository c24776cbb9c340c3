use std::fmt;

macro_rules! id_type {
    ($(#[$doc:meta])* $name:ident, $prefix:literal) => {
        $(#[$doc])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(pub usize);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }

        impl From<usize> for $name {
            fn from(i: usize) -> Self {
                $name(i)
            }
        }
    };
}

id_type!(
    /// Dense index of a state.
    StateId,
    "x"
);
id_type!(
    /// Dense index of an input.
    InputId,
    "u"
);
id_type!(
    /// Dense index of an output.
    OutputId,
    "y"
);

/// A set of atomic propositions, as a bitmask over a proposition list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Valuation(pub u32);

impl Valuation {
    pub const EMPTY: Valuation = Valuation(0);

    pub fn contains(self, ap: usize) -> bool {
        self.0 >> ap & 1 == 1
    }

    pub fn with(self, ap: usize) -> Valuation {
        Valuation(self.0 | 1 << ap)
    }

    pub fn union(self, other: Valuation) -> Valuation {
        Valuation(self.0 | other.0)
    }

    /// Renders as `{a,b}` using the given proposition names.
    pub fn render(self, aps: &[String]) -> String {
        let names: Vec<&str> = aps
            .iter()
            .enumerate()
            .filter(|(i, _)| self.contains(*i))
            .map(|(_, n)| n.as_str())
            .collect();
        format!("{{{}}}", names.join(","))
    }
}
