"""Desk-scale terminology-aware encoder-decoder."""

from .vocab import Vocab, build_vocab
from .network import ForwardOutput, LossBreakdown, ModelConfig, TermSeq2Seq, compute_loss, token_nlls
from .data import Batch, Example, collate, encode_record, model_tokens
from .training import TrainConfig, TrainResult, TrainingDiverged, classifier_accuracy, fit_probe, train
from .decoding import beam_search, classify_terms, generate, greedy
from .gradcheck import backward_and_check, gradients
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint

__all__ = [
    "Vocab", "build_vocab", "ForwardOutput", "LossBreakdown", "ModelConfig", "TermSeq2Seq",
    "compute_loss", "token_nlls", "Batch", "Example", "collate", "encode_record", "model_tokens",
    "TrainConfig", "TrainResult", "TrainingDiverged", "classifier_accuracy", "fit_probe", "train",
    "beam_search", "classify_terms", "generate", "greedy", "backward_and_check", "gradients",
    "CheckpointError", "load_checkpoint", "save_checkpoint",
]
