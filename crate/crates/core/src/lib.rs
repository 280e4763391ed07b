pub mod error;
pub mod feq;
pub mod fostructure;
pub mod gen;
pub mod indisc;
pub mod modeling;
pub mod qftype;
pub mod ramsey_appendix;
pub mod search;
pub mod tp_props;
pub mod tree_index;

pub use error::{Error, Result};

/// The types most callers need, in one import.
pub mod prelude {
    pub use crate::error::Error;
    pub use crate::fostructure::{DeltaFormula, Element, Formula, RelStructure, Signature, SplitFormula, VarDecl};
    pub use crate::indisc::{IndexShape, IndiscReport, ParameterMap};
    pub use crate::modeling::{ExtractionMode, ExtractionRequest, ExtractionResult, Strategy};
    pub use crate::qftype::{ArrayCell, IndexLanguage, IndexPoint, SimilarityCode};
    pub use crate::ramsey_appendix::{Coloring, HomogeneousCertificate, LeveledChains};
    pub use crate::tp_props::{Property, TPReport, WitnessSpec};
    pub use crate::tree_index::{TreeDomain, TreeNode};
}
