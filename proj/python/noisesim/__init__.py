# Copyright 2026 The noisesim Authors
# License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
"""Noise-aware data simulation toolkit for speech-enhancement adaptation.

The heavy lifting lives in the native extension; this package re-exports
its operations.
"""

from noisesim._core import (  # noqa: F401
    ConfigError,
    InvalidInputError,
    IoError,
    NumericsError,
    ShapeError,
    adapt_se,
    build_manifest,
    encoder_embed,
    estimate_snr,
    estimate_snr_unpaired,
    evaluate,
    exclude_from_test,
    film_apply,
    finetune_encoder,
    generator_forward,
    istft,
    perturb_embedding,
    read_wav,
    sample_training_subset,
    segment,
    si_snr,
    silhouette,
    simulate_dataset,
    stft,
    train_gan,
    write_wav,
)

__all__ = [
    "ConfigError",
    "InvalidInputError",
    "IoError",
    "NumericsError",
    "ShapeError",
    "adapt_se",
    "build_manifest",
    "encoder_embed",
    "estimate_snr",
    "estimate_snr_unpaired",
    "evaluate",
    "exclude_from_test",
    "film_apply",
    "finetune_encoder",
    "generator_forward",
    "istft",
    "perturb_embedding",
    "read_wav",
    "sample_training_subset",
    "segment",
    "si_snr",
    "silhouette",
    "simulate_dataset",
    "stft",
    "train_gan",
    "write_wav",
]
