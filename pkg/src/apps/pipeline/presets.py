"""Пресеты конфигурации; ключи файла пользователя накладываются поверх."""

from .schemas import Preset

# Срезы 64x64 без изменения размера, пиксельная диффузия и малая U-Net.
# Площади опухоли пересчитываются к разрешению 240x240: (240 / 64) ** 2.
DESK_PRESET: dict = {
    "phantoms": {"subjects": 12, "shape": [64, 64, 16], "tumor_share": 0.75},
    "preprocess": {
        "slice_lo": 3,
        "slice_hi": 12,
        "clip_percentile": 99.5,
        "pad_to": 64,
        "out_size": 64,
        "tumor_min": 1000,
        "tumor_max": 3000,
        "dilation_radius": 2,
        "area_scale": 14.0625,
        "split_ratio": 0.9,
    },
    "edges": {"kernel": 5, "sigma": 1.0, "low": 30.0, "high": 80.0},
    "model": {
        "image_channels": 1,
        "latent_channels": 1,
        "autoencoder": "identity",
        "factor": 1,
        "base_width": 32,
        "channel_mult": [1, 2],
        "context_dim": 64,
        "attention_heads": 4,
        "tokenizer": "template",
        "text_encoder": "template",
        "adapter_width": 16,
    },
    "schedule": {"T": 1000, "kind": "linear_beta"},
    "stage1": {
        "batch_size": 4,
        "grad_accum": 2,
        "epochs": 30,
        "lr": 1e-3,
        "warmup_steps": 0,
        "grad_clip": 1.0,
        "max_steps": 200,
    },
    "stage2": {
        "batch_size": 4,
        "grad_accum": 2,
        "epochs": 20,
        "lr": 1e-3,
        "warmup_steps": 10,
        "grad_clip": 1.0,
        "max_steps": 100,
    },
    "inference": {"steps": 20, "edge_mode": "mirrored"},
    "metrics": {"extractor": "histogram", "detector": "threshold", "patch": 6, "percentile": 99.0, "margin": -0.2},
}

PAPER_PRESET: dict = {
    "preprocess": {
        "slice_lo": 80,
        "slice_hi": 130,
        "clip_percentile": 99.5,
        "pad_to": 256,
        "out_size": 512,
        "tumor_min": 1000,
        "tumor_max": 3000,
        "dilation_radius": 5,
        "area_scale": 1.0,
        "split_ratio": 0.9,
    },
    "edges": {"kernel": 5, "sigma": 1.0, "low": 30.0, "high": 80.0},
    "prompts": {"max_tokens": 77},
    # Размеры, совместимые с Stable Diffusion 1.5
    "model": {
        "image_channels": 3,
        "latent_channels": 4,
        "autoencoder": "pooling",
        "factor": 8,
        "base_width": 320,
        "channel_mult": [1, 2, 4, 4],
        "context_dim": 768,
        "attention_heads": 8,
        "tokenizer": "clip",
        "text_encoder": "clip",
        "pretrained_text": "openai/clip-vit-large-patch14",
        "adapter_width": 16,
    },
    "schedule": {"T": 1000, "kind": "linear_beta"},
    "stage1": {
        "batch_size": 8,
        "grad_accum": 4,
        "epochs": 30,
        "lr": 5e-5,
        "warmup_steps": 0,
        "grad_clip": 1.0,
    },
    "stage2": {
        "batch_size": 8,
        "grad_accum": 4,
        "epochs": 20,
        "lr": 5e-4,
        "warmup_steps": 500,
        "grad_clip": 1.0,
    },
    "inference": {"steps": 50, "edge_mode": "mirrored"},
    "metrics": {"extractor": "histogram", "detector": "threshold", "patch": 20, "percentile": 99.0, "margin": 0.0},
}

PRESETS: dict[Preset, dict] = {
    Preset.desk: DESK_PRESET,
    Preset.paper: PAPER_PRESET,
}
