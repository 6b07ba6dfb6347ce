"""CLIP / LPIPS sidecar scoring behind pluggable backends.

Backends require pretrained weights. When none can be loaded locally the
loaders raise ScorerUnavailable with an explicit status; primary pipelines
simply proceed without neural fields. A scorer object can also be injected
directly (used by the test suite's stub).

Backend protocols:
    clip-like:  .name, .image_features(imgs) -> (B, D), .text_features(txts) -> (B, D)
    lpips-like: .name, .distance(img_a, img_b) -> float
Images are uint8 grayscale (H, W) arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ScorerUnavailable
from .sidecar import ScoreRecord


@dataclass
class ClipItem:
    sample_id: str
    image: np.ndarray
    ref_image: np.ndarray | None = None  # scored as clip_i2i when present
    text: str | None = None              # scored as clip_i2t when present


@dataclass
class LpipsItem:
    sample_id: str
    image_a: np.ndarray
    image_b: np.ndarray


def load_clip_scorer():
    """Try known CLIP backends; raise ScorerUnavailable with what was attempted."""
    attempts = []
    try:
        import open_clip  # noqa: F401

        return _OpenClipScorer()
    except Exception as exc:
        attempts.append(f"open_clip: {type(exc).__name__}")
    try:
        import clip  # noqa: F401

        return _OpenAIClipScorer()
    except Exception as exc:
        attempts.append(f"clip: {type(exc).__name__}")
    raise ScorerUnavailable(
        "no CLIP backend with pretrained weights is available locally "
        f"(tried {', '.join(attempts)})"
    )


def load_lpips_scorer():
    attempts = []
    try:
        import lpips  # noqa: F401

        return _LpipsScorer()
    except Exception as exc:
        attempts.append(f"lpips: {type(exc).__name__}")
    raise ScorerUnavailable(
        "no LPIPS backend with pretrained weights is available locally "
        f"(tried {', '.join(attempts)})"
    )


class _OpenClipScorer:
    name = "open_clip/ViT-B-32"

    def __init__(self) -> None:
        import open_clip
        import torch

        self._torch = torch
        self.model, _, self.preprocess = open_clip.create_model_and_transforms(
            "ViT-B-32", pretrained="laion2b_s34b_b79k"
        )
        self.tokenizer = open_clip.get_tokenizer("ViT-B-32")
        self.model.eval()

    def image_features(self, imgs: list[np.ndarray]) -> np.ndarray:
        from PIL import Image

        with self._torch.no_grad():
            batch = self._torch.stack(
                [self.preprocess(Image.fromarray(im).convert("RGB")) for im in imgs]
            )
            feats = self.model.encode_image(batch)
            feats = feats / feats.norm(dim=-1, keepdim=True)
        return feats.numpy()

    def text_features(self, texts: list[str]) -> np.ndarray:
        with self._torch.no_grad():
            feats = self.model.encode_text(self.tokenizer(texts))
            feats = feats / feats.norm(dim=-1, keepdim=True)
        return feats.numpy()


class _OpenAIClipScorer:
    name = "openai-clip/ViT-B-32"

    def __init__(self) -> None:
        import clip
        import torch

        self._torch = torch
        self._clip = clip
        self.model, self.preprocess = clip.load("ViT-B/32", device="cpu")
        self.model.eval()

    def image_features(self, imgs: list[np.ndarray]) -> np.ndarray:
        from PIL import Image

        with self._torch.no_grad():
            batch = self._torch.stack(
                [self.preprocess(Image.fromarray(im).convert("RGB")) for im in imgs]
            )
            feats = self.model.encode_image(batch)
            feats = feats / feats.norm(dim=-1, keepdim=True)
        return feats.numpy()

    def text_features(self, texts: list[str]) -> np.ndarray:
        with self._torch.no_grad():
            feats = self.model.encode_text(self._clip.tokenize(texts))
            feats = feats / feats.norm(dim=-1, keepdim=True)
        return feats.numpy()


class _LpipsScorer:
    name = "lpips/alex"

    def __init__(self) -> None:
        import lpips
        import torch

        self._torch = torch
        self.net = lpips.LPIPS(net="alex")
        self.net.eval()

    def distance(self, a: np.ndarray, b: np.ndarray) -> float:
        def prep(img):
            x = self._torch.from_numpy(img.astype(np.float32) / 127.5 - 1.0)
            return x[None, None].repeat(1, 3, 1, 1)

        with self._torch.no_grad():
            return float(self.net(prep(a), prep(b)))


def score_clip(items: list[ClipItem], scorer=None, batch_size: int = 16) -> list[ScoreRecord]:
    """CLIP image-to-image and image-to-text cosine similarities per item."""
    if scorer is None:
        scorer = load_clip_scorer()
    records = []
    for start in range(0, len(items), batch_size):
        chunk = items[start : start + batch_size]
        img_feats = scorer.image_features([it.image for it in chunk])
        ref_idx = [i for i, it in enumerate(chunk) if it.ref_image is not None]
        ref_feats = (
            scorer.image_features([chunk[i].ref_image for i in ref_idx]) if ref_idx else None
        )
        txt_idx = [i for i, it in enumerate(chunk) if it.text is not None]
        txt_feats = scorer.text_features([chunk[i].text for i in txt_idx]) if txt_idx else None
        ref_pos = {i: k for k, i in enumerate(ref_idx)}
        txt_pos = {i: k for k, i in enumerate(txt_idx)}
        for i, it in enumerate(chunk):
            i2i = (
                float(img_feats[i] @ ref_feats[ref_pos[i]]) if i in ref_pos else None
            )
            i2t = float(img_feats[i] @ txt_feats[txt_pos[i]]) if i in txt_pos else None
            records.append(
                ScoreRecord(sample_id=it.sample_id, scorer=scorer.name, clip_i2i=i2i, clip_i2t=i2t)
            )
    return records


def score_lpips(items: list[LpipsItem], scorer=None) -> list[ScoreRecord]:
    """Perceptual distance per image pair."""
    if scorer is None:
        scorer = load_lpips_scorer()
    return [
        ScoreRecord(
            sample_id=it.sample_id, scorer=scorer.name, lpips=scorer.distance(it.image_a, it.image_b)
        )
        for it in items
    ]


def merge_records(*groups: list[ScoreRecord]) -> list[ScoreRecord]:
    """Merge per-sample records from multiple scorers into one record per sample."""
    by_id: dict[str, ScoreRecord] = {}
    for group in groups:
        for rec in group:
            if rec.sample_id not in by_id:
                by_id[rec.sample_id] = ScoreRecord(sample_id=rec.sample_id, scorer=rec.scorer)
            merged = by_id[rec.sample_id]
            for f in ("clip_i2i", "clip_i2t", "lpips"):
                v = getattr(rec, f)
                if v is not None:
                    setattr(merged, f, v)
            if rec.scorer not in merged.scorer:
                merged.scorer = f"{merged.scorer}+{rec.scorer}"
    return [by_id[k] for k in sorted(by_id)]
