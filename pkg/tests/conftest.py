import dataclasses

import numpy as np
import pytest

from wordaff.config import PipelineConfig
from wordaff.model import BBox, DocumentModel, WordUnit


def make_word(wid: int, text: str, x: float, y: float, w: float, h: float) -> WordUnit:
    return WordUnit(id=wid, text=text, bbox=BBox(x, y, w, h))


def make_doc(words, aspect_ratio: float = 1.0, doc_id: str = "test") -> DocumentModel:
    return DocumentModel(doc_id=doc_id, aspect_ratio=aspect_ratio, words=list(words))


def row_doc(gaps, h: float = 0.05, word_w: float = 0.04, y: float = 0.1,
            aspect_ratio: float = 1.0, texts=None) -> DocumentModel:
    """Words in one horizontal band with the given inter-word gaps."""
    words = []
    x = 0.01
    for i in range(len(gaps) + 1):
        text = texts[i] if texts else f"w{i}"
        words.append(make_word(i, text, x, y, word_w, h))
        if i < len(gaps):
            x += word_w + gaps[i]
    return make_doc(words)


def fast_config(seed: int = 0, epochs: int = 3) -> PipelineConfig:
    cfg = PipelineConfig().with_seed(seed)
    return dataclasses.replace(cfg, train=dataclasses.replace(cfg.train, epochs=epochs))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
