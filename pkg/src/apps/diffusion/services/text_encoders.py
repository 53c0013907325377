"""Текстовые кодировщики: последовательность токенов -> эмбеддинги (B, 77, d)."""

import logging

import torch
from torch import nn

from ...prompts.domain.value_objects import MAX_TOKENS
from ..domain.value_objects import ModelSpec
from ..exceptions import ShapeMismatchError

logger = logging.getLogger(__name__)


class TemplateTextEncoder(nn.Module):
    """Таблица эмбеддингов по словарю шаблонов плюс позиционные эмбеддинги."""

    def __init__(self, vocab_size: int, dim: int = 64, max_len: int = MAX_TOKENS) -> None:
        super().__init__()
        self.dim = dim
        self.max_len = max_len
        self.token_embedding = nn.Embedding(vocab_size, dim)
        self.position_embedding = nn.Parameter(torch.randn(max_len, dim) * 0.02)
        self.norm = nn.LayerNorm(dim)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        if tokens.shape[-1] != self.max_len:
            raise ShapeMismatchError(
                f"Ожидалось {self.max_len} токенов, получено {tokens.shape[-1]}",
            )
        h = self.token_embedding(tokens.long()) + self.position_embedding
        return self.norm(h)


class ClipTextEncoderAdapter(nn.Module):
    """Обёртка над CLIPTextModel из transformers (extra 'clip')."""

    def __init__(self, pretrained: str) -> None:
        super().__init__()
        try:
            from transformers import CLIPTextModel
        except ImportError as exc:
            raise ShapeMismatchError(
                "Для CLIP-кодировщика нужен пакет transformers (extra 'clip')"
            ) from exc
        self.model = CLIPTextModel.from_pretrained(pretrained)
        self.dim = int(self.model.config.hidden_size)

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        return self.model(input_ids=tokens.long()).last_hidden_state


def build_text_encoder(spec: ModelSpec, vocab_size: int) -> nn.Module:
    if spec.text_encoder == "template":
        return TemplateTextEncoder(vocab_size, dim=spec.context_dim)
    if spec.text_encoder == "clip":
        encoder = ClipTextEncoderAdapter(spec.pretrained_text)
        if encoder.dim != spec.context_dim:
            raise ShapeMismatchError(
                "Размерность CLIP не совпадает с context_dim",
                details={"clip": encoder.dim, "context_dim": spec.context_dim},
            )
        return encoder
    raise ShapeMismatchError(f"Неизвестный текстовый кодировщик: {spec.text_encoder}")
