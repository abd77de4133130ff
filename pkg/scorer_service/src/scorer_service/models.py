"""Model backends: a deterministic stub plus optional transformer wrappers.

Every backend exposes the same trio:

* ``confidence(document, claim) -> float`` in the open interval (0, 1),
  the softmax probability of the positive ("Yes") class over the filled
  instruction template;
* ``nli(document, claim) -> str`` in {Entailment, Contradiction, Neutral};
* ``token_count(text) -> int`` under the backend's own tokenizer.
"""

from __future__ import annotations

import hashlib
import math
from typing import Optional, Protocol

from .template import fill_instruction

NLI_LABELS = ("Entailment", "Contradiction", "Neutral")


def softmax_pair(yes_logit: float, no_logit: float) -> float:
    """Positive-class probability from two raw logits.

    Clamped into the open interval so extreme logit gaps cannot underflow
    to an exact 0 or 1.
    """
    top = max(yes_logit, no_logit)
    yes = math.exp(yes_logit - top)
    no = math.exp(no_logit - top)
    probability = yes / (yes + no)
    lower = math.nextafter(0.0, 1.0)
    upper = math.nextafter(1.0, 0.0)
    return min(max(probability, lower), upper)


class ModelBackend(Protocol):
    name: str

    def confidence(self, document: str, claim: str) -> float: ...

    def nli(self, document: str, claim: str) -> str: ...

    def token_count(self, text: str) -> int: ...


def _digest(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


class StubModel:
    """Checkpoint-free backend for offline runs and tests.

    With ``fixed_logits`` every pair gets the same (yes, no) logits; without
    it the logits derive from a hash of the filled template, so scores are
    deterministic, distinct across pairs, and always inside (0, 1).  The
    stub tokenizer is whitespace splitting.
    """

    def __init__(self, fixed_logits: Optional[tuple[float, float]] = None):
        self.fixed_logits = fixed_logits
        self.name = "stub" if fixed_logits is None else "stub-fixed"

    def _logits(self, document: str, claim: str) -> tuple[float, float]:
        if self.fixed_logits is not None:
            return self.fixed_logits
        seed = _digest(fill_instruction(document, claim))
        yes = ((seed % 4001) / 1000.0) - 2.0  # [-2.0, 2.0]
        return yes, -yes

    def confidence(self, document: str, claim: str) -> float:
        return softmax_pair(*self._logits(document, claim))

    def nli(self, document: str, claim: str) -> str:
        seed = _digest("nli\x1f" + fill_instruction(document, claim))
        return NLI_LABELS[seed % 3]

    def token_count(self, text: str) -> int:
        return len(text.split())


class HfSequenceClassifier:
    """Transformers sequence-classification checkpoint (binary or 3-way NLI).

    Binary heads score the instruction-filled template; 3-way heads run
    standard premise/hypothesis NLI.  Label names from the checkpoint config
    decide which output index means what.
    """

    def __init__(self, model_name_or_path: str, device: str = "cpu"):
        import torch
        from transformers import AutoModelForSequenceClassification, AutoTokenizer

        self._torch = torch
        self.name = model_name_or_path
        self.device = device
        self.tokenizer = AutoTokenizer.from_pretrained(model_name_or_path)
        self.model = AutoModelForSequenceClassification.from_pretrained(
            model_name_or_path
        )
        self.model.to(device)
        self.model.eval()
        labels = {
            i: str(label).casefold()
            for i, label in self.model.config.id2label.items()
        }
        self._nli_index = {}
        for i, label in labels.items():
            for canonical in NLI_LABELS:
                if canonical.casefold().startswith(label[:7]) or label.startswith(
                    canonical.casefold()[:7]
                ):
                    self._nli_index[canonical] = i
        self._positive_index = next(
            (i for i, label in labels.items() if label in ("yes", "entailment", "label_1", "positive")),
            1 if len(labels) > 1 else 0,
        )

    def _forward(self, first: str, second: Optional[str] = None):
        encoded = self.tokenizer(
            first,
            second,
            return_tensors="pt",
            truncation=True,
            max_length=self.tokenizer.model_max_length,
        ).to(self.device)
        with self._torch.no_grad():
            return self.model(**encoded).logits[0]

    def confidence(self, document: str, claim: str) -> float:
        logits = self._forward(fill_instruction(document, claim))
        if logits.shape[-1] == 2:
            probs = self._torch.softmax(logits, dim=-1)
            return float(probs[self._positive_index])
        entail = self._nli_index.get("Entailment", 0)
        probs = self._torch.softmax(logits, dim=-1)
        return float(probs[entail])

    def nli(self, document: str, claim: str) -> str:
        logits = self._forward(document, claim)
        index = int(logits.argmax())
        for canonical, i in self._nli_index.items():
            if i == index:
                return canonical
        return NLI_LABELS[index % 3]

    def token_count(self, text: str) -> int:
        return len(self.tokenizer.encode(text, add_special_tokens=False))


class HfSeq2SeqYesNo:
    """Seq2seq checkpoint scored by the Yes/No logits of the first step."""

    def __init__(self, model_name_or_path: str, device: str = "cpu"):
        import torch
        from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

        self._torch = torch
        self.name = model_name_or_path
        self.device = device
        self.tokenizer = AutoTokenizer.from_pretrained(model_name_or_path)
        self.model = AutoModelForSeq2SeqLM.from_pretrained(model_name_or_path)
        self.model.to(device)
        self.model.eval()
        self._yes_id = self.tokenizer.encode("Yes", add_special_tokens=False)[0]
        self._no_id = self.tokenizer.encode("No", add_special_tokens=False)[0]

    def _first_step_logits(self, text: str):
        encoded = self.tokenizer(
            text,
            return_tensors="pt",
            truncation=True,
            max_length=self.tokenizer.model_max_length,
        ).to(self.device)
        start = self._torch.tensor([[self.model.config.decoder_start_token_id]]).to(
            self.device
        )
        with self._torch.no_grad():
            output = self.model(**encoded, decoder_input_ids=start)
        return output.logits[0, 0]

    def confidence(self, document: str, claim: str) -> float:
        logits = self._first_step_logits(fill_instruction(document, claim))
        return softmax_pair(float(logits[self._yes_id]), float(logits[self._no_id]))

    def nli(self, document: str, claim: str) -> str:
        # Yes/No head has no neutral class; fold the soft score instead.
        score = self.confidence(document, claim)
        if score >= 0.5:
            return "Entailment"
        return "Contradiction" if score < 0.25 else "Neutral"

    def token_count(self, text: str) -> int:
        return len(self.tokenizer.encode(text, add_special_tokens=False))


def load_backend(
    model: str = "stub",
    kind: str = "auto",
    device: str = "cpu",
    stub_logits: Optional[tuple[float, float]] = None,
) -> ModelBackend:
    """Instantiate a backend; any load failure propagates to the caller
    so the service refuses to start on a broken checkpoint."""
    if model == "stub":
        return StubModel(fixed_logits=stub_logits)
    if kind == "seq2seq":
        return HfSeq2SeqYesNo(model, device=device)
    return HfSequenceClassifier(model, device=device)
