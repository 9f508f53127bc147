"""Permission-based Android malware detection: manifest parsing, feature
reduction, classifiers and an evaluation grid."""

from ._accel import backend
from .catalog import PermissionCatalog, PermissionSpec, default_catalog, index_of, load_catalog
from .dataset import FeatureMatrix, DatasetSplit, SynthConfig, generate_synthetic, split_train_test, vectorize
from .manifest import InputFormat, ManifestInfo, detect_format, parse_manifest

__version__ = "0.1.0"
