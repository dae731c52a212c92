from t2f.dataset.records import DatasetRecord
from t2f.dataset.render import (
    PROBEABLE_ATTRIBUTES,
    ProceduralFaceSpec,
    UnsupportedProbeError,
    probe_all,
    probe_attribute,
    probe_region,
    render_procedural_face,
)
from t2f.dataset.sampler import sample_attributes
from t2f.dataset.imageio import image_grid, load_image, save_image, save_image_grid
from t2f.dataset.celeba import ATTR_FILE, IDENTITY_FILE, IMAGE_DIR, load_celeba_format, parse_identity_file
from t2f.dataset.synth import (
    CAPTIONS_FILE,
    TEST_CAPTIONS_FILE,
    generate_dataset,
    split_dataset,
    write_synth_dir,
)

__all__ = [
    "DatasetRecord",
    "PROBEABLE_ATTRIBUTES",
    "ProceduralFaceSpec",
    "UnsupportedProbeError",
    "probe_all",
    "probe_attribute",
    "probe_region",
    "render_procedural_face",
    "sample_attributes",
    "image_grid",
    "load_image",
    "save_image",
    "save_image_grid",
    "ATTR_FILE",
    "IDENTITY_FILE",
    "IMAGE_DIR",
    "load_celeba_format",
    "parse_identity_file",
    "CAPTIONS_FILE",
    "TEST_CAPTIONS_FILE",
    "generate_dataset",
    "split_dataset",
    "write_synth_dir",
]
