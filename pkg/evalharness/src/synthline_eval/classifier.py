"""Transformer text classifier, sized by the protocol's classifier spec.

Tokens are feature-hashed into a fixed vocabulary (no pretrained weights or
downloads), embedded, passed through a small transformer encoder, mean
pooled, and classified by a linear head. Size is fully configurable so the
same code serves the full-scale profile and the desk profile used in CI.
"""

from __future__ import annotations

import re
import zlib
from dataclasses import dataclass

import torch
from torch import nn

from synthline_eval.data import LabeledDataset

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_PAD = 0  # bucket 0 is reserved for padding


class TrainingFailure(Exception):
    """One training run failed; recorded in the report, not fatal."""


@dataclass(frozen=True)
class ClassifierSpec:
    vocab_size: int = 8192
    d_model: int = 128
    n_heads: int = 4
    n_layers: int = 2
    max_len: int = 64
    dropout: float = 0.1


@dataclass(frozen=True)
class Hyperparameters:
    learning_rate: float
    batch_size: int
    weight_decay: float
    epochs: int

    def as_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "weight_decay": self.weight_decay,
            "epochs": self.epochs,
        }


def encode_text(text: str, spec: ClassifierSpec) -> list[int]:
    tokens = _TOKEN_RE.findall(text.lower())[: spec.max_len]
    ids = [1 + (zlib.crc32(tok.encode("utf-8")) % (spec.vocab_size - 1)) for tok in tokens]
    return ids + [_PAD] * (spec.max_len - len(ids))


def encode_dataset(
    dataset: LabeledDataset, spec: ClassifierSpec, label_space: tuple[str, ...]
) -> tuple[torch.Tensor, torch.Tensor]:
    label_index = {label: i for i, label in enumerate(label_space)}
    x = torch.tensor([encode_text(t, spec) for t in dataset.texts], dtype=torch.long)
    y = torch.tensor([label_index[label] for label in dataset.labels], dtype=torch.long)
    return x, y


class TextClassifier(nn.Module):
    def __init__(self, spec: ClassifierSpec, n_classes: int):
        super().__init__()
        self.spec = spec
        self.embedding = nn.Embedding(spec.vocab_size, spec.d_model, padding_idx=_PAD)
        encoder_layer = nn.TransformerEncoderLayer(
            d_model=spec.d_model,
            nhead=spec.n_heads,
            dim_feedforward=spec.d_model * 4,
            dropout=spec.dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(encoder_layer, num_layers=spec.n_layers)
        self.head = nn.Linear(spec.d_model, n_classes)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        mask = x == _PAD
        hidden = self.encoder(self.embedding(x), src_key_padding_mask=mask)
        lengths = (~mask).sum(dim=1, keepdim=True).clamp(min=1)
        pooled = (hidden * (~mask).unsqueeze(-1)).sum(dim=1) / lengths
        return self.head(pooled)


@dataclass
class TrainedModel:
    model: TextClassifier
    label_space: tuple[str, ...]
    seed: int
    hyperparameters: Hyperparameters

    def predict(self, dataset: LabeledDataset) -> list[str]:
        x, _ = encode_dataset(dataset, self.model.spec, self.label_space)
        self.model.eval()
        with torch.no_grad():
            logits = self.model(x)
        return [self.label_space[i] for i in logits.argmax(dim=1).tolist()]


def train_classifier(
    train: LabeledDataset,
    spec: ClassifierSpec,
    hp: Hyperparameters,
    label_space: tuple[str, ...],
    seed: int,
) -> TrainedModel:
    """One seeded training run; deterministic on CPU at one thread."""
    if len(train) == 0:
        raise TrainingFailure("empty training set")
    torch.manual_seed(seed)
    torch.set_num_threads(1)
    try:
        model = TextClassifier(spec, n_classes=len(label_space))
        x, y = encode_dataset(train, spec, label_space)
        optimizer = torch.optim.AdamW(
            model.parameters(), lr=hp.learning_rate, weight_decay=hp.weight_decay
        )
        loss_fn = nn.CrossEntropyLoss()
        generator = torch.Generator().manual_seed(seed)
        model.train()
        for _ in range(hp.epochs):
            order = torch.randperm(len(train), generator=generator)
            for start in range(0, len(train), hp.batch_size):
                batch = order[start : start + hp.batch_size]
                optimizer.zero_grad()
                loss = loss_fn(model(x[batch]), y[batch])
                loss.backward()
                optimizer.step()
        return TrainedModel(model=model, label_space=label_space, seed=seed, hyperparameters=hp)
    except TrainingFailure:
        raise
    except Exception as exc:
        raise TrainingFailure(f"training run failed: {exc}") from exc
