//! Closed registry of edge labels and the node labels each one may connect.

use super::NodeLabel::{self, *};
use crate::error::{Error, Result};

/// Bumped whenever an association is added, removed or re-typed.
pub const REGISTRY_VERSION: u32 = 1;

pub const DATASET_SOURCE_INGEST: &str = "DatasetSource-Ingest";
pub const INGEST_DATASET: &str = "Ingest-DatalakeDataset";
pub const INGEST_USER: &str = "Ingest-User";
pub const SOURCE_OF_STREAM: &str = "DatasetSource-SourceOfStream";
pub const DATASET_TAG: &str = "DatalakeDataset-Tag";
pub const DATASET_ENTITY: &str = "DatalakeDataset-EntityClass";
pub const ENTITY_ATTRIBUTE: &str = "EntityClass-Attribute";
pub const ANALYSIS_ATT_ATTRIBUTE: &str = "AnalysisAttribute-Attribute";
pub const ANALYSIS_ATT_KIND: &str = "AnalysisAttribute-RelationshipAtt";
pub const ANALYSIS_DS_DATASET: &str = "AnalysisDSRelationship-DatalakeDataset";
pub const ANALYSIS_DS_KIND: &str = "AnalysisDSRelationship-RelationshipDS";
pub const MARK_TARGET: &str = "SensitivityMark-Target";
pub const MARK_LEVEL: &str = "SensitivityMark-SensitivityLevel";
pub const MARK_USER: &str = "SensitivityMark-User";
pub const DATASET_VERACITY: &str = "DatalakeDataset-VeracityIndex";

const ATTRIBUTES: &[NodeLabel] = &[NumericAttribute, NominalAttribute];

pub struct EdgeSignature {
    pub label: &'static str,
    pub from: &'static [NodeLabel],
    pub to: &'static [NodeLabel],
}

pub const EDGE_REGISTRY: &[EdgeSignature] = &[
    EdgeSignature { label: DATASET_SOURCE_INGEST, from: &[DatasetSource], to: &[Ingest] },
    EdgeSignature { label: INGEST_DATASET, from: &[Ingest], to: &[DatalakeDataset] },
    EdgeSignature { label: INGEST_USER, from: &[Ingest], to: &[User] },
    EdgeSignature { label: SOURCE_OF_STREAM, from: &[DatasetSource], to: &[DatasetSource] },
    EdgeSignature { label: DATASET_TAG, from: &[DatalakeDataset], to: &[Tag] },
    EdgeSignature { label: DATASET_ENTITY, from: &[DatalakeDataset], to: &[EntityClass] },
    EdgeSignature { label: ENTITY_ATTRIBUTE, from: &[EntityClass], to: ATTRIBUTES },
    EdgeSignature { label: ANALYSIS_ATT_ATTRIBUTE, from: &[AnalysisAttribute], to: ATTRIBUTES },
    EdgeSignature { label: ANALYSIS_ATT_KIND, from: &[AnalysisAttribute], to: &[RelationshipAtt] },
    EdgeSignature { label: ANALYSIS_DS_DATASET, from: &[AnalysisDSRelationship], to: &[DatalakeDataset] },
    EdgeSignature { label: ANALYSIS_DS_KIND, from: &[AnalysisDSRelationship], to: &[RelationshipDS] },
    EdgeSignature {
        label: MARK_TARGET,
        from: &[SensitivityMark],
        to: &[DatalakeDataset, EntityClass, NumericAttribute, NominalAttribute],
    },
    EdgeSignature { label: MARK_LEVEL, from: &[SensitivityMark], to: &[SensitivityLevel] },
    EdgeSignature { label: MARK_USER, from: &[SensitivityMark], to: &[User] },
    EdgeSignature { label: DATASET_VERACITY, from: &[DatalakeDataset], to: &[VeracityIndex] },
];

pub fn signature(label: &str) -> Result<&'static EdgeSignature> {
    EDGE_REGISTRY
        .iter()
        .find(|sig| sig.label == label)
        .ok_or_else(|| Error::UnknownEdgeLabel(label.to_string()))
}

pub fn check_endpoints(label: &str, from: NodeLabel, to: NodeLabel) -> Result<()> {
    let sig = signature(label)?;
    if sig.from.contains(&from) && sig.to.contains(&to) {
        Ok(())
    } else {
        Err(Error::EndpointMismatch { label: label.to_string(), from, to })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_are_unique() {
        let mut labels: Vec<_> = EDGE_REGISTRY.iter().map(|s| s.label).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), EDGE_REGISTRY.len());
    }

    #[test]
    fn endpoint_signatures_are_enforced() {
        assert!(check_endpoints(DATASET_TAG, DatalakeDataset, Tag).is_ok());
        assert!(matches!(
            check_endpoints(DATASET_TAG, DatalakeDataset, Ingest),
            Err(Error::EndpointMismatch { .. })
        ));
        assert!(matches!(check_endpoints("Dataset-Nothing", Tag, Tag), Err(Error::UnknownEdgeLabel(_))));
    }
}
