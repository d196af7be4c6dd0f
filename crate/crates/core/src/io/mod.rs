//! Signal files and scattering run directories.

mod signal;
mod tree;

pub use signal::{
    read_signal, sidecar_path, write_pgm, write_raw, Dtype, RawSidecar, SignalFormat,
};
pub use tree::{
    read_tree, tool_version, write_tree, CoefficientFile, InputDescriptor, Manifest, NodeRecord,
    StoredTree, MANIFEST_FILE,
};
