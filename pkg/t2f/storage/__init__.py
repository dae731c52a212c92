from t2f.storage.container import Container, cast_arrays, read_container, write_container
from t2f.storage.manifest import RunManifest, compute_hash, manifest_path, read_manifest, write_manifest

__all__ = [
    "Container",
    "cast_arrays",
    "read_container",
    "write_container",
    "RunManifest",
    "compute_hash",
    "manifest_path",
    "read_manifest",
    "write_manifest",
]
