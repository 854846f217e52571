from __future__ import annotations

import os

import pytest

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

VOCAB = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
         "good", "bad", "movie", "great", "awful", "the", "a", "is", "was",
         "plot", "acting", "boring", "fun"]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory) -> str:
    """A small randomly initialized encoder classifier saved to disk."""
    import torch
    from transformers import BertConfig, BertForSequenceClassification, BertTokenizerFast

    torch.manual_seed(0)
    path = tmp_path_factory.mktemp("tinybert")
    cfg = BertConfig(
        vocab_size=len(VOCAB), hidden_size=16, num_hidden_layers=2,
        num_attention_heads=2, intermediate_size=32, max_position_embeddings=64,
        num_labels=2, id2label={0: "neg", 1: "pos"}, label2id={"neg": 0, "pos": 1},
    )
    model = BertForSequenceClassification(cfg)
    model.eval()
    with open(path / "vocab.txt", "w") as fh:
        fh.write("\n".join(VOCAB) + "\n")
    tokenizer = BertTokenizerFast(str(path / "vocab.txt"), do_lower_case=True,
                                  model_max_length=64)
    model.save_pretrained(path)
    tokenizer.save_pretrained(path)
    return str(path)


@pytest.fixture(scope="session")
def classifier(tiny_model_dir):
    from deepview_sidecar.model import SplitClassifier

    return SplitClassifier(tiny_model_dir, batch_size=4)
