from t2f.models.config import ModelConfig
from t2f.models.params import DiscriminatorParams, GeneratorParams, ParamSet, init_params
from t2f.models.generator import LatentInput, generator_forward, make_latent, sample_noise
from t2f.models.discriminator import discriminator_forward
from t2f.models.checkpoint import ModelCheckpoint, load_checkpoint, save_checkpoint
from t2f.models.sampling import embedding_config_of, generate_from_captions, sample_images

__all__ = [
    "ModelConfig",
    "DiscriminatorParams",
    "GeneratorParams",
    "ParamSet",
    "init_params",
    "LatentInput",
    "generator_forward",
    "make_latent",
    "sample_noise",
    "discriminator_forward",
    "ModelCheckpoint",
    "load_checkpoint",
    "save_checkpoint",
    "embedding_config_of",
    "generate_from_captions",
    "sample_images",
]
