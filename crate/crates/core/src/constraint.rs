//! Constraint families shared by the feasibility audit and the ILP builder.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Auxiliary binaries that linearize a product of two binaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuxKind {
    /// `p_sj * y_rj`
    Alpha,
    /// `p_sj * h_rl`
    Beta,
    /// `alpha * beta`
    Lambda,
    /// `e_rg * p_sj`
    Phi,
    /// `x_ri * y_rj`
    Xi,
    /// `q_rj * y_rj`
    Psi,
}

impl AuxKind {
    pub const ALL: [AuxKind; 6] = [Self::Alpha, Self::Beta, Self::Lambda, Self::Phi, Self::Xi, Self::Psi];

    pub fn name(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::Beta => "beta",
            Self::Lambda => "lambda",
            Self::Phi => "phi",
            Self::Xi => "xi",
            Self::Psi => "psi",
        }
    }
}

/// The three rows of the standard product linearization `w = a b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductRow {
    /// `w <= a`
    LeFirst,
    /// `w <= b`
    LeSecond,
    /// `w >= a + b - 1`
    GeSum,
}

impl ProductRow {
    pub const ALL: [ProductRow; 3] = [Self::LeFirst, Self::LeSecond, Self::GeSum];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    /// Each ARO is cached for at most one request.
    AroOnce,
    /// Every request caches at least one of its AROs.
    MinOneAro,
    /// A cached ARO needs its model cached somewhere.
    AroNeedsModel,
    /// Same implication written against the `beta` products.
    AroModelLink,
    RateUnique,
    CacheCapacity,
    /// Big-U row: a miss is only allowed when the cache is incomplete.
    HitBigU,
    /// A hit needs a complete cache.
    HitMirror,
    HitMissComplement,
    VmCapacity,
    ComputeOnce,
    MatchingOnce,
    Product(AuxKind, ProductRow),
    /// Dimension or index-space mismatch; audit only.
    Shape,
}

impl ConstraintFamily {
    /// Every family the ILP emits rows for (`Shape` excluded).
    pub fn model_families() -> Vec<ConstraintFamily> {
        let mut v = vec![
            Self::AroOnce,
            Self::MinOneAro,
            Self::AroNeedsModel,
            Self::AroModelLink,
            Self::RateUnique,
            Self::CacheCapacity,
            Self::HitBigU,
            Self::HitMirror,
            Self::HitMissComplement,
            Self::VmCapacity,
            Self::ComputeOnce,
            Self::MatchingOnce,
        ];
        for k in AuxKind::ALL {
            for row in ProductRow::ALL {
                v.push(Self::Product(k, row));
            }
        }
        v
    }
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::AroOnce => "aro_once",
            Self::MinOneAro => "min_one_aro",
            Self::AroNeedsModel => "aro_needs_model",
            Self::AroModelLink => "aro_model_link",
            Self::RateUnique => "rate_unique",
            Self::CacheCapacity => "cache_capacity",
            Self::HitBigU => "hit_big_u",
            Self::HitMirror => "hit_mirror",
            Self::HitMissComplement => "hit_miss_complement",
            Self::VmCapacity => "vm_capacity",
            Self::ComputeOnce => "compute_once",
            Self::MatchingOnce => "matching_once",
            Self::Shape => "shape",
            Self::Product(k, row) => {
                let r = match row {
                    ProductRow::LeFirst => "le_first",
                    ProductRow::LeSecond => "le_second",
                    ProductRow::GeSum => "ge_sum",
                };
                return write!(f, "{}_{r}", k.name());
            }
        };
        f.write_str(s)
    }
}

/// One violated constraint: family, index tuple and (negative) slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub family: ConstraintFamily,
    pub indices: Vec<usize>,
    pub slack: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?} slack {}", self.family, self.indices, self.slack)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn family_names_are_unique() {
        let fams = ConstraintFamily::model_families();
        assert_eq!(fams.len(), 30);
        let names: BTreeSet<String> = fams.iter().map(|f| f.to_string()).collect();
        assert_eq!(names.len(), fams.len());
        assert_eq!(ConstraintFamily::Product(AuxKind::Phi, ProductRow::GeSum).to_string(), "phi_ge_sum");
    }
}
