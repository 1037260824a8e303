"""
Versioned binary checkpoints.

Layout (all integers little-endian):
    magic            8 bytes  b"GRIDIE\\x00\\x01"
    format version   uint16
    header length    uint32
    header           UTF-8 JSON: {"config": EncoderConfig, "task": str, "vocabulary": [str]}
    tensors          for each state-dict entry in sorted name order:
                     uint16 name length, name bytes, uint8 ndim, uint32 dims...,
                     float32 little-endian data in row-major order
"""

import json
import struct
from pathlib import Path
from typing import Any, BinaryIO, Dict, Tuple, Union

import numpy as np
import torch

from gridie.core.errors import ModelMismatchError
from gridie.nnet.model import EncoderConfig, IGLModel
from gridie.nnet.vocab import Vocabulary
from gridie.utils.logger import get_logger

logger = get_logger(__name__)

MAGIC = b"GRIDIE\x00\x01"
FORMAT_VERSION = 1


def _read_exact(handle: BinaryIO, size: int) -> bytes:
    data = handle.read(size)
    if len(data) != size:
        raise ModelMismatchError("Checkpoint is truncated")
    return data


def save_checkpoint(path: Union[str, Path], model: IGLModel, vocab: Vocabulary, task: str) -> None:
    """
    Write model weights, config and vocabulary.

    Raises:
        ModelMismatchError: If the vocabulary does not match the embedding table
    """
    if len(vocab) != model.config.vocab_size:
        raise ModelMismatchError(f"Vocabulary has {len(vocab)} words, model expects {model.config.vocab_size}")
    header = json.dumps(
        {"config": model.config.model_dump(mode="json"), "task": task, "vocabulary": vocab.words},
        sort_keys=True,
    ).encode("utf-8")
    state = model.state_dict()
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<HI", FORMAT_VERSION, len(header)))
        handle.write(header)
        for name in sorted(state):
            array = state[name].detach().cpu().numpy().astype("<f4", copy=False)
            encoded = name.encode("utf-8")
            handle.write(struct.pack("<H", len(encoded)))
            handle.write(encoded)
            handle.write(struct.pack("<B", array.ndim))
            handle.write(struct.pack(f"<{array.ndim}I", *array.shape))
            handle.write(np.ascontiguousarray(array).tobytes())
    logger.info("checkpoint_saved", path=str(path), task=task, tensors=len(state))


def load_checkpoint(path: Union[str, Path]) -> Tuple[IGLModel, Vocabulary, Dict[str, Any]]:
    """
    Read a checkpoint written by `save_checkpoint`.

    Returns:
        (model, vocabulary, header)

    Raises:
        ModelMismatchError: On a bad magic, version, or tensor set
    """
    with open(path, "rb") as handle:
        if _read_exact(handle, len(MAGIC)) != MAGIC:
            raise ModelMismatchError(f"{path} is not a gridie checkpoint")
        version, header_length = struct.unpack("<HI", _read_exact(handle, 6))
        if version != FORMAT_VERSION:
            raise ModelMismatchError(f"Unsupported checkpoint version {version}")
        header = json.loads(_read_exact(handle, header_length).decode("utf-8"))

        config = EncoderConfig(**header["config"])
        vocab = Vocabulary(header["vocabulary"])
        if len(vocab) != config.vocab_size:
            raise ModelMismatchError(f"Checkpoint vocabulary has {len(vocab)} words, config says {config.vocab_size}")

        state: Dict[str, torch.Tensor] = {}
        while True:
            prefix = handle.read(2)
            if not prefix:
                break
            (name_length,) = struct.unpack("<H", prefix)
            name = _read_exact(handle, name_length).decode("utf-8")
            (ndim,) = struct.unpack("<B", _read_exact(handle, 1))
            shape = struct.unpack(f"<{ndim}I", _read_exact(handle, 4 * ndim))
            count = int(np.prod(shape)) if ndim else 1
            array = np.frombuffer(_read_exact(handle, 4 * count), dtype="<f4").reshape(shape)
            state[name] = torch.from_numpy(array.astype(np.float32))

    model = IGLModel(config)
    expected = set(model.state_dict())
    if set(state) != expected:
        raise ModelMismatchError(f"Checkpoint tensors differ from the architecture: {sorted(expected ^ set(state))[:5]}")
    model.load_state_dict(state)
    logger.info("checkpoint_loaded", path=str(path), task=header["task"], vocabulary=len(vocab))
    return model, vocab, header
