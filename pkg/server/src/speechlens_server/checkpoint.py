"""Checkpoint-backed inference for audio-classification models."""

import numpy as np

from .app import InferenceBackend
from .config import ConfigError


class CheckpointBackend(InferenceBackend):
    """Logits from a transformers audio-classification checkpoint.

    torch and transformers are imported here rather than at package
    import so the stub-tested surface stays light. The model runs in
    eval mode; identical inputs give identical logits.
    """

    def __init__(self, checkpoint, sample_rate):
        import torch
        from transformers import AutoFeatureExtractor, AutoModelForAudioClassification

        self._torch = torch
        self._extractor = AutoFeatureExtractor.from_pretrained(checkpoint)
        declared = getattr(self._extractor, "sampling_rate", None)
        if declared is not None and declared != sample_rate:
            raise ConfigError(
                f"checkpoint expects {declared} Hz audio, config says {sample_rate}"
            )
        self._model = AutoModelForAudioClassification.from_pretrained(checkpoint)
        self._model.eval()
        self._rate = sample_rate
        id2label = {int(k): v for k, v in self._model.config.id2label.items()}
        self.labels = tuple(id2label[i] for i in range(len(id2label)))

    def logits(self, batch):
        arrays = [np.asarray(w, dtype=np.float32) for w in batch]
        inputs = self._extractor(
            arrays, sampling_rate=self._rate, return_tensors="pt", padding=True
        )
        with self._torch.inference_mode():
            out = self._model(**inputs).logits
        return out.cpu().numpy().astype(np.float64)
