"""Токенизаторы подсказок: словарь шаблонов и адаптер CLIP."""

import logging
import re
from typing import Protocol

from ..domain.entities import TokenSequence
from ..domain.value_objects import (
    MAX_TOKENS,
    MODALITY_TEXT,
    TEMPLATES,
    UNKNOWN_AGE,
    SizeDesc,
)
from ..exceptions import TokenizationError

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z]+|\d+|[^\sa-z\d]")
_PLACEHOLDER_RE = re.compile(r"\{[a-z_]+\}")

PAD, BOS, EOS, UNK = "<pad>", "<bos>", "<eos>", "<unk>"
MAX_AGE_TOKEN = 120


class Tokenizer(Protocol):
    """Контракт токенизатора: текст -> идентификаторы с BOS/EOS."""

    pad_id: int
    eos_id: int
    vocab_size: int

    def encode(self, text: str) -> list[int]: ...


def split_words(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class TemplateVocabularyTokenizer:
    """
    Детерминированный токенизатор на словаре из шести шаблонов
    и значений подстановок (модальность, размеры, возраст 0..120).
    """

    def __init__(self) -> None:
        words: set[str] = set()
        for templates in TEMPLATES.values():
            for template in templates:
                words.update(split_words(_PLACEHOLDER_RE.sub(" ", template)))
        words.update(split_words(MODALITY_TEXT))
        words.update(split_words(UNKNOWN_AGE))
        words.update(split_words("-year-old -sized"))
        for size in SizeDesc:
            words.add(size.value)
        words.update(str(n) for n in range(MAX_AGE_TOKEN + 1))

        vocab = [PAD, BOS, EOS, UNK] + sorted(words)
        self._index = {token: i for i, token in enumerate(vocab)}
        self.pad_id = self._index[PAD]
        self.bos_id = self._index[BOS]
        self.eos_id = self._index[EOS]
        self.unk_id = self._index[UNK]
        self.vocab_size = len(vocab)

    def encode(self, text: str) -> list[int]:
        ids = [self._index.get(word, self.unk_id) for word in split_words(text)]
        return [self.bos_id, *ids, self.eos_id]


class ClipTokenizerAdapter:
    """Адаптер CLIP-токенизатора из transformers (опциональная зависимость)."""

    def __init__(self, pretrained: str) -> None:
        try:
            from transformers import CLIPTokenizer
        except ImportError as exc:
            raise TokenizationError(
                "Для CLIP-токенизатора нужен пакет transformers (extra 'clip')"
            ) from exc
        self._tokenizer = CLIPTokenizer.from_pretrained(pretrained)
        self.eos_id = int(self._tokenizer.eos_token_id)
        pad = self._tokenizer.pad_token_id
        self.pad_id = int(pad if pad is not None else self.eos_id)
        self.vocab_size = int(self._tokenizer.vocab_size)

    def encode(self, text: str) -> list[int]:
        return list(self._tokenizer(text, truncation=False)["input_ids"])


def build_tokenizer(kind: str = "template", pretrained: str = "") -> Tokenizer:
    """
    Создать токенизатор по имени.

    Args:
        kind: "template" или "clip"
        pretrained: Имя/путь весов CLIP

    Raises:
        TokenizationError: Неизвестный тип
    """
    if kind == "template":
        return TemplateVocabularyTokenizer()
    if kind == "clip":
        return ClipTokenizerAdapter(pretrained)
    raise TokenizationError(f"Неизвестный токенизатор: {kind}", details={"kind": kind})


def tokenize(text: str, tokenizer: Tokenizer) -> TokenSequence:
    """
    Токенизировать текст в последовательность длины 77.

    При обрезке последний токен заменяется на EOS.

    Raises:
        TokenizationError: Пустой текст
    """
    if not text or not text.strip():
        raise TokenizationError("Пустой текст подсказки")
    ids = tokenizer.encode(text)
    if len(ids) > MAX_TOKENS:
        ids = ids[:MAX_TOKENS]
        ids[-1] = tokenizer.eos_id
    ids = ids + [tokenizer.pad_id] * (MAX_TOKENS - len(ids))
    return TokenSequence(ids=tuple(ids), pad_id=tokenizer.pad_id)
