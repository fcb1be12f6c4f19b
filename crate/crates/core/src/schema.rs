//! JSON wire formats shared by the library and the command-line harness.
//!
//! Rationals are strings `"num/den"`; points are coordinate tuples; base
//! sets and partition blocks are lists of complementary-product indices.

use serde::{Deserialize, Serialize};

use crate::boolalg::{AtomMeasure, FiniteBooleanAlgebra};
use crate::cylinder::Relation;
use crate::discrepancy::GipSpec;
use crate::error::{Error, Result};
use crate::finfield::{FieldSpec, FieldSpecRaw};
use crate::rational::{self, Rational};
use crate::regularity::{self, GridPartition, WeightedMeasure};

/// `{"factors":[..],"edges":[[..],..]}`, `{"kind":"halfgraph","n":N}` or
/// `{"kind":"gip","field":{..},"s":S,"k":K}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RelationSpec {
    Generated(GeneratedRelation),
    Explicit {
        factors: Vec<usize>,
        edges: Vec<Vec<usize>>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratedRelation {
    Halfgraph {
        n: usize,
    },
    Gip {
        field: FieldSpecRaw,
        /// Defaults to `2^{k+1}`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<usize>,
        k: usize,
    },
}

impl RelationSpec {
    pub fn build(&self, point_budget: u64) -> Result<Relation> {
        match self {
            RelationSpec::Explicit { factors, edges } => {
                Relation::from_tuples(factors.clone(), edges)
            }
            RelationSpec::Generated(GeneratedRelation::Halfgraph { n }) => {
                regularity::make_halfgraph(*n)
            }
            RelationSpec::Generated(GeneratedRelation::Gip { field, s, k }) => {
                let field = FieldSpec::try_from(field.clone())?;
                let s = s.unwrap_or_else(|| regularity::default_gip_inner_length(*k));
                regularity::make_gip_zero(&GipSpec::new(field, s, *k)?, point_budget)
            }
        }
    }

    pub fn explicit(rel: &Relation) -> Self {
        RelationSpec::Explicit {
            factors: rel.space.factors().to_vec(),
            edges: rel.tuples(),
        }
    }
}

/// `{"measures":[["1/2","1/2"],..]}`: one weight list per factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasuresFile {
    pub measures: Vec<WeightList>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightList(#[serde(with = "rational::vec")] pub Vec<Rational>);

impl MeasuresFile {
    pub fn build(&self) -> Result<Vec<WeightedMeasure>> {
        self.measures
            .iter()
            .map(|w| WeightedMeasure::new(w.0.clone()))
            .collect()
    }
}

/// `{"directions":[[[block points],..],..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionFile {
    pub directions: Vec<Vec<Vec<usize>>>,
}

impl PartitionFile {
    pub fn build(&self, rel: &Relation) -> Result<GridPartition> {
        GridPartition::from_lists(&rel.space, &self.directions)
    }

    pub fn from_partition(p: &GridPartition) -> Self {
        PartitionFile {
            directions: p.to_lists(),
        }
    }
}

/// `{"n":4,"gens":[[0,1]],"weights":["1/2","1/2"]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub n: usize,
    pub gens: Vec<Vec<usize>>,
    #[serde(with = "rational::vec")]
    pub weights: Vec<Rational>,
}

impl AlgebraFile {
    pub fn algebra(&self) -> Result<FiniteBooleanAlgebra> {
        FiniteBooleanAlgebra::from_point_lists(self.n, &self.gens)
    }

    /// Weights read as a measure on the atoms of the generated algebra.
    pub fn atom_measure(&self) -> Result<(FiniteBooleanAlgebra, AtomMeasure)> {
        let alg = self.algebra()?;
        let mu = AtomMeasure::new(&alg, self.weights.clone())?;
        Ok((alg, mu))
    }

    /// Weights read as one mass per ground point.
    pub fn point_weights(&self) -> Result<&[Rational]> {
        if self.weights.len() != self.n {
            return Err(Error::InvalidMeasure(format!(
                "expected {} point weights, got {}",
                self.n,
                self.weights.len()
            )));
        }
        Ok(&self.weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relation_forms() {
        let explicit: RelationSpec =
            serde_json::from_str(r#"{"factors":[2,2],"edges":[[0,1]]}"#).unwrap();
        let rel = explicit.build(1 << 20).unwrap();
        assert_eq!(rel.tuples(), vec![vec![0, 1]]);
        assert_eq!(RelationSpec::explicit(&rel), explicit);

        let hg: RelationSpec = serde_json::from_str(r#"{"kind":"halfgraph","n":2}"#).unwrap();
        assert_eq!(hg.build(1 << 20).unwrap(), rel);

        let gip: RelationSpec = serde_json::from_str(
            r#"{"kind":"gip","field":{"p":2,"m":1,"poly":[0,1]},"s":1,"k":2}"#,
        )
        .unwrap();
        assert_eq!(gip.build(1 << 20).unwrap().edges.count(), 3);

        let default_s: RelationSpec = serde_json::from_str(
            r#"{"kind":"gip","field":{"p":2,"m":1,"poly":[0,1]},"k":2}"#,
        )
        .unwrap();
        // s = 8: 2^16 points per factor pair, over the tiny budget
        assert!(matches!(default_s.build(1 << 10), Err(Error::BudgetExceeded { .. })));

        let bad_field: RelationSpec = serde_json::from_str(
            r#"{"kind":"gip","field":{"p":2,"m":2,"poly":[0,0,1]},"s":1,"k":2}"#,
        )
        .unwrap();
        assert!(matches!(bad_field.build(1 << 20), Err(Error::NotIrreducible { .. })));
    }

    #[test]
    fn measures_and_algebra_files() {
        let m: MeasuresFile =
            serde_json::from_str(r#"{"measures":[["1/3","2/3"],["1/2","1/2"]]}"#).unwrap();
        assert_eq!(m.build().unwrap().len(), 2);
        assert!(serde_json::from_str::<MeasuresFile>(r#"{"measures":[["1/0"]]}"#).is_err());

        let a: AlgebraFile =
            serde_json::from_str(r#"{"n":4,"gens":[[0,1]],"weights":["1/2","1/2"]}"#).unwrap();
        let (alg, mu) = a.atom_measure().unwrap();
        assert_eq!(alg.atoms(), &[0b0011, 0b1100]);
        assert_eq!(mu.weights().len(), 2);
        assert!(a.point_weights().is_err());
    }
}
